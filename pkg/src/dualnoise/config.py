"""Flat ``key = value`` run configuration.

Lines starting with ``#`` are comments. Every key is ``section.field`` except
the top-level ``variant`` and ``output_dir``; those two are required, all
other keys fall back to the defaults shown by ``format_config(default_config())``.
"""
from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .errors import ConfigError
from .filter import FilterConfig
from .nn import SgdConfig
from .noise import NoiseSpec
from .trainer import TrainConfig

VARIANTS = ("proposed_lm", "proposed_l", "proposed_m", "de_ce", "single_ce")
OUTPUT_ROOT_ENV = "DUALNOISE_OUTPUT_ROOT"
REQUIRED_KEYS = ("variant", "output_dir")


@dataclass
class DatasetSpec:
    kind: str = "grid_digits"
    classes: int = 10
    per_class: int = 200
    val_per_class: int = 100
    side: int = 8  # grid_digits only
    jitter: float = 0.5  # grid_digits only
    dim: int = 16  # blobs only
    spread: float = 1.0  # blobs only
    seed: int = 0

    def __post_init__(self):
        errs = []
        if self.kind not in ("grid_digits", "blobs"):
            errs.append(f"kind must be 'grid_digits' or 'blobs', got {self.kind!r}")
        if self.classes < 2:
            errs.append("classes must be >= 2")
        if self.per_class < 1 or self.val_per_class < 1:
            errs.append("per_class and val_per_class must be >= 1")
        if self.kind == "grid_digits" and self.side < 8:
            errs.append("side must be >= 8")
        if self.jitter < 0 or self.spread < 0:
            errs.append("jitter and spread must be non-negative")
        if errs:
            raise ConfigError(errs)


@dataclass
class RunConfig:
    variant: str
    output_dir: Path
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant: must be one of {list(VARIANTS)}, got {self.variant!r}")


def default_config(variant="proposed_lm", output_dir="runs/default") -> RunConfig:
    return RunConfig(variant, Path(output_dir))


# -- value codecs ----------------------------------------------------------------

def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_tuple(conv):
    def parse(s: str):
        s = s.strip()
        return tuple(conv(t.strip()) for t in s.split(",")) if s else ()
    return parse


def _parse_schedule(s: str):
    out = []
    for item in filter(None, (t.strip() for t in s.split(","))):
        epoch, mult = item.split(":")
        out.append((int(epoch), float(mult)))
    return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        if v and isinstance(v[0], tuple):
            return ",".join(f"{e}:{m!r}" for e, m in v)
        return ",".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# section -> (dataclass, {field: parser})
_SECTIONS = {
    "dataset": (DatasetSpec, {"kind": str, "classes": int, "per_class": int, "val_per_class": int, "side": int,
                              "jitter": float, "dim": int, "spread": float, "seed": int}),
    "noise": (NoiseSpec, {"y_rate": float, "x_rate": float, "x_kinds": _parse_tuple(str), "blur_sigma": float,
                          "contrast_factor": float, "rng_seed": int}),
    "train": (TrainConfig, {"warmup_epochs": int, "max_epochs": int, "batch_size": int,
                            "hidden": _parse_tuple(int), "M": int, "seed": int}),
    "sgd": (SgdConfig, {"learning_rate": float, "momentum": float, "weight_decay": float,
                        "lr_schedule": _parse_schedule}),
    "filter": (FilterConfig, {"eps1": float, "eps2_percent": float, "m_mode": str, "eps2_hard": float}),
}
# filter.enabled/use_l/use_m are derived from the variant, not user keys
KNOWN_KEYS = set(REQUIRED_KEYS) | {f"{sec}.{name}" for sec, (_, spec) in _SECTIONS.items() for name in spec}


def _read_pairs(text: str) -> tuple[dict[str, str], list[str]]:
    pairs, errs = {}, []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errs.append(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (t.strip() for t in line.split("=", 1))
        if key in pairs:
            errs.append(f"{key}: duplicate key")
        pairs[key] = value
    return pairs, errs


def parse_config(text: str) -> RunConfig:
    """Parse and validate; raises ``ConfigError`` listing every bad field."""
    pairs, errs = _read_pairs(text)
    for key in pairs:
        if key not in KNOWN_KEYS:
            errs.append(f"{key}: unknown key")
    missing = [k for k in REQUIRED_KEYS if k not in pairs]
    if missing:
        errs.append(f"missing required keys: {', '.join(missing)}")

    values: dict[str, dict] = {sec: {} for sec in _SECTIONS}
    for key, raw in pairs.items():
        if "." not in key or key not in KNOWN_KEYS:
            continue
        sec, name = key.split(".", 1)
        try:
            values[sec][name] = _SECTIONS[sec][1][name](raw)
        except (ValueError, TypeError) as exc:
            errs.append(f"{key}: cannot parse {raw!r} ({exc})")

    built = {}
    for sec, (cls, _) in _SECTIONS.items():
        if sec == "train":
            continue
        try:
            built[sec] = cls(**values[sec])
        except ConfigError as exc:
            errs.extend(f"{sec}: {e}" for e in exc.errors)
    variant = pairs.get("variant", "")
    if "variant" in pairs and variant not in VARIANTS:
        errs.append(f"variant: must be one of {list(VARIANTS)}, got {variant!r}")
    if errs:
        raise ConfigError(errs)

    train_vals = dict(values["train"])
    if variant == "single_ce" and train_vals.get("M", 1) != 1:
        warnings.warn(f"variant single_ce forces M = 1 (was {train_vals['M']})", stacklevel=2)
        train_vals["M"] = 1
    elif variant == "single_ce":
        train_vals["M"] = 1
    try:
        train = TrainConfig(sgd=built["sgd"], filter=apply_variant(variant, built["filter"]), **train_vals)
    except ConfigError as exc:
        raise ConfigError([f"train: {e}" for e in exc.errors]) from None
    return RunConfig(variant, Path(pairs["output_dir"]), built["dataset"], built["noise"], train)


def apply_variant(variant: str, fcfg: FilterConfig) -> FilterConfig:
    """Filter switches implied by the variant name."""
    switches = {
        "proposed_lm": dict(enabled=True, use_l=True, use_m=True),
        "proposed_l": dict(enabled=True, use_l=True, use_m=False),
        "proposed_m": dict(enabled=True, use_l=False, use_m=True),
        "de_ce": dict(enabled=False, use_l=True, use_m=True),
        "single_ce": dict(enabled=False, use_l=True, use_m=True),
    }
    return replace(fcfg, **switches[variant])


def with_variant(cfg: RunConfig, variant: str) -> RunConfig:
    """Same run with another variant (M forced to 1 for single_ce)."""
    train = replace(cfg.train, filter=apply_variant(variant, cfg.train.filter))
    if variant == "single_ce":
        train = replace(train, M=1)
    return replace(cfg, variant=variant, train=train)


def format_config(cfg: RunConfig) -> str:
    lines = [f"variant = {cfg.variant}", f"output_dir = {cfg.output_dir}"]
    objs = {"dataset": cfg.dataset, "noise": cfg.noise, "train": cfg.train, "sgd": cfg.train.sgd,
            "filter": cfg.train.filter}
    for sec, (cls, spec) in _SECTIONS.items():
        lines.append("")
        obj = objs[sec]
        for f in fields(cls):
            if f.name in spec:
                lines.append(f"{sec}.{f.name} = {_fmt(getattr(obj, f.name))}")
    return "\n".join(lines) + "\n"


def resolve_output_dir(path) -> Path:
    """Relative paths are placed under ``$DUALNOISE_OUTPUT_ROOT`` when it is set."""
    path = Path(path)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        return Path(root) / path
    return path


def set_key(cfg: RunConfig, key: str, raw: str) -> RunConfig:
    """Return ``cfg`` with one key overridden, re-validated through the text format."""
    lines = [ln for ln in format_config(cfg).splitlines() if not ln.startswith(f"{key} =")]
    lines.append(f"{key} = {raw}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return parse_config("\n".join(lines))

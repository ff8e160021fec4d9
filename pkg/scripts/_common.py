"""Shared helpers for the experiment scripts."""
from pathlib import Path

from dualnoise.config import parse_config, set_key, with_variant

ROOT = Path(__file__).resolve().parents[1]
FIXTURE = ROOT / "configs" / "fixture_dual.cfg"


def seeded(path, seed, variant=None, **keys):
    cfg = parse_config(Path(path).read_text())
    if variant:
        cfg = with_variant(cfg, variant)
    for k in ("dataset.seed", "noise.rng_seed", "train.seed"):
        cfg = set_key(cfg, k, str(seed))
    for k, v in keys.items():
        cfg = set_key(cfg, k.replace("__", "."), str(v))
    return cfg

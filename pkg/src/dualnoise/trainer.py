"""Warm-up plus filtered training of a deep ensemble.

Every mini-batch is shared by all members. Within an iteration the filter
weights and the peer outputs used by the model-uncertainty term come from the
parameters as they were before any member stepped.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import nn
from .ensemble import Ensemble, init_ensemble, mi_grad_on_probs, report_from_probs, vote
from .errors import ConfigError, NumericError, UndefinedMetricError
from .filter import FilterConfig, SampleWeights, sample_weights
from .metrics import accuracy, auroc
from .nn import CLAMP_EPS, SgdConfig, SgdState
from .noise import Dataset

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    warmup_epochs: int = 10
    max_epochs: int = 60
    batch_size: int = 64
    hidden: tuple[int, ...] = (64,)
    sgd: SgdConfig = field(default_factory=SgdConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    M: int = 5
    seed: int = 0

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        errs = []
        if self.warmup_epochs < 0:
            errs.append("warmup_epochs must be >= 0")
        if self.max_epochs < self.warmup_epochs:
            errs.append("max_epochs must be >= warmup_epochs")
        if self.batch_size < 2:
            errs.append("batch_size must be >= 2")
        if self.M < 1:
            errs.append("M must be >= 1")
        if any(h < 1 for h in self.hidden):
            errs.append("hidden sizes must be positive")
        if errs:
            raise ConfigError(errs)


@dataclass
class LossBreakdown:
    """Switched-loss components for one batch (averaged over members) or summed over an epoch."""

    ce_term: float = 0.0
    mi_term: float = 0.0
    n_clean: int = 0
    n_noisy: int = 0

    def __iadd__(self, other: "LossBreakdown"):
        self.ce_term += other.ce_term
        self.mi_term += other.mi_term
        self.n_clean += other.n_clean
        self.n_noisy += other.n_noisy
        return self


@dataclass
class EpochStats:
    epoch: int
    phase: str
    lr: float
    train_acc: float
    val_acc: float
    mean_lcon_clean: float
    mean_lcon_noisy: float
    mean_model_unc: float
    auroc_l: float
    auroc_m: float
    losses: LossBreakdown

    @property
    def n_filtered(self) -> int:
        return self.losses.n_noisy


@dataclass
class RunRecord:
    epochs: list[EpochStats] = field(default_factory=list)
    # switched loss of every member at every iteration, in update order
    loss_trace: list[float] = field(default_factory=list)
    final_state: "TrainState | None" = field(default=None, repr=False)

    @property
    def best_val_acc(self) -> float:
        return max(e.val_acc for e in self.epochs) if self.epochs else math.nan

    @property
    def last_val_acc(self) -> float:
        return self.epochs[-1].val_acc if self.epochs else math.nan

    def epoch(self, i: int) -> EpochStats:
        return self.epochs[i]


@dataclass
class TrainState:
    ensemble: Ensemble
    opt: list[SgdState]
    epoch: int = 0

    @classmethod
    def fresh(cls, ens: Ensemble) -> "TrainState":
        return cls(ens, [SgdState.zeros(m) for m in ens.members])


def layer_dims(cfg: TrainConfig, ds: Dataset) -> tuple[int, ...]:
    return (ds.feature_dim, *cfg.hidden, ds.n_classes)


def new_state(cfg: TrainConfig, ds: Dataset) -> TrainState:
    return TrainState.fresh(init_ensemble(layer_dims(cfg, ds), cfg.M, [cfg.seed, 0]))


def epoch_batches(n: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    """Shuffled index batches for one epoch; depends only on ``(seed, epoch)``."""
    perm = np.random.default_rng([seed, 1, epoch]).permutation(n)
    return [perm[i:i + batch_size] for i in range(0, n, batch_size)]


def switched_grads(probs: np.ndarray, labels: np.ndarray, weights: SampleWeights, m: int,
                   clamp_eps: float = CLAMP_EPS) -> tuple[np.ndarray, float, float]:
    """Gradient on member ``m``'s probs of CE on kept rows plus model uncertainty on dropped rows.

    Both sums are divided by the full batch size. Returns
    ``(grad_probs, ce_term, mi_term)``.
    """
    p = probs[m]
    n = p.shape[0]
    clean = weights.w_s.astype(bool)
    logp = np.log(np.maximum(p[np.arange(n), labels], clamp_eps))
    ce_term = -np.sum(np.where(clean, logp, 0.0)) / n
    grad = nn.cross_entropy_grad(p, labels, clamp_eps)
    if clean.all():
        return grad, float(ce_term), 0.0
    total = nn.entropy(probs.mean(axis=0), clamp_eps)
    data = nn.entropy(probs, clamp_eps).mean(axis=0)
    mi_term = np.sum(np.where(clean, 0.0, total - data)) / n
    mi_grad = mi_grad_on_probs(probs, m, clamp_eps) / n
    grad = np.where(clean[:, None], grad, mi_grad)
    return grad, float(ce_term), float(mi_term)


def _train_epoch(state: TrainState, ds: Dataset, cfg: TrainConfig, use_filter: bool,
                 trace: list[float] | None) -> tuple[TrainState, LossBreakdown]:
    ens = state.ensemble
    members, opt = list(ens.members), list(state.opt)
    epoch = state.epoch
    totals = LossBreakdown()
    fcfg = cfg.filter if use_filter else FilterConfig(enabled=False)
    for it, idx in enumerate(epoch_batches(len(ds), cfg.batch_size, cfg.seed, epoch)):
        x, y = ds.features[idx], ds.observed_labels[idx]
        caches = [nn.forward_cached(net, x) for net in members]
        probs = np.stack([c.probs for c in caches])
        if fcfg.enabled:
            report = report_from_probs(probs, y)
            weights = sample_weights(report.l_con, report.m_con, fcfg)
        else:
            ones = np.ones(len(idx), dtype=np.int8)
            weights = SampleWeights(ones, ones, ones)
        batch = LossBreakdown(n_clean=weights.n_clean, n_noisy=weights.n_noisy)
        new_members = []
        for m, net in enumerate(members):
            grad_probs, ce_term, mi_term = switched_grads(probs, y, weights, m)
            grads = nn.backward(net, x, grad_probs, cache=caches[m])
            try:
                net, opt[m] = nn.sgd_step(net, grads, opt[m], cfg.sgd, epoch)
            except NumericError as exc:
                raise NumericError(f"epoch {epoch}, iteration {it}, member {m}: {exc}") from exc
            new_members.append(net)
            batch.ce_term += ce_term / len(members)
            batch.mi_term += mi_term / len(members)
            if trace is not None:
                trace.append(ce_term + mi_term)
        members = new_members
        totals += batch
    return TrainState(Ensemble(members), opt, epoch + 1), totals


def warmup(state: TrainState, ds: Dataset, cfg: TrainConfig, trace: list[float] | None = None) -> TrainState:
    """Plain cross-entropy training for ``cfg.warmup_epochs`` epochs; the filter is never consulted."""
    for _ in range(cfg.warmup_epochs):
        state, _ = _train_epoch(state, ds, cfg, use_filter=False, trace=trace)
    return state


def train_epoch_filtered(state: TrainState, ds: Dataset, cfg: TrainConfig,
                         trace: list[float] | None = None) -> tuple[TrainState, LossBreakdown]:
    return _train_epoch(state, ds, cfg, use_filter=cfg.filter.enabled, trace=trace)


def _safe_auroc(scores, flags) -> float:
    try:
        return auroc(scores, flags)
    except UndefinedMetricError:
        return math.nan


def _masked_mean(x, mask) -> float:
    return float(x[mask].mean()) if mask.any() else math.nan


def evaluate(ens: Ensemble, train: Dataset, val: Dataset, epoch: int, phase: str, lr: float,
             losses: LossBreakdown) -> EpochStats:
    probs = np.stack([nn.forward(m, train.features) for m in ens.members])
    rep = report_from_probs(probs, train.observed_labels)
    return EpochStats(
        epoch=epoch,
        phase=phase,
        lr=lr,
        train_acc=accuracy(rep.mean_probs, train.observed_labels),
        val_acc=accuracy(vote(ens, val.features), val.true_labels),
        mean_lcon_clean=_masked_mean(rep.l_con, ~train.y_noisy),
        mean_lcon_noisy=_masked_mean(rep.l_con, train.y_noisy),
        mean_model_unc=float(rep.model_unc.mean()),
        auroc_l=_safe_auroc(rep.l_con, train.y_noisy),
        auroc_m=_safe_auroc(rep.m_con, train.x_noisy),
        losses=losses,
    )


def run(cfg: TrainConfig, train: Dataset, val: Dataset) -> RunRecord:
    """Warm-up then filtered epochs up to ``cfg.max_epochs``, evaluating after every epoch."""
    record = RunRecord()
    state = new_state(cfg, train)
    while state.epoch < cfg.max_epochs:
        e = state.epoch
        phase = "warmup" if e < cfg.warmup_epochs else "filtered"
        lr = cfg.sgd.lr_at(e)
        state, losses = _train_epoch(state, train, cfg, use_filter=phase == "filtered" and cfg.filter.enabled,
                                     trace=record.loss_trace)
        stats = evaluate(state.ensemble, train, val, e, phase, lr, losses)
        record.epochs.append(stats)
        log.debug("epoch %d %s val_acc=%.4f filtered=%d", e, phase, stats.val_acc, stats.n_filtered)
    record.final_state = state
    return record


def stats_row(s: EpochStats) -> dict:
    row = asdict(s)
    row.update(row.pop("losses"))
    return row

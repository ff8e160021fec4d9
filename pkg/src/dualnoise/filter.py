"""Confidence-based sample filter.

Samples whose label confidence is at or below ``eps1`` are treated as
label-noisy. For image noise the default is the per-batch soft rule (drop the
lowest ``eps2_percent`` of max-confidence); a fixed cutoff is kept for the
ablation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError
from .noise import noisy_count


@dataclass
class FilterConfig:
    eps1: float = 0.020
    eps2_percent: float = 5.0
    enabled: bool = True
    use_l: bool = True
    use_m: bool = True
    m_mode: str = "soft"  # "soft" (percentile per batch) or "hard" (fixed cutoff eps2_hard)
    eps2_hard: float = 0.0

    def __post_init__(self):
        errs = []
        if not 0.0 <= self.eps1 <= 1.0:
            errs.append(f"eps1 must be in [0, 1], got {self.eps1}")
        if not 0.0 <= self.eps2_percent < 100.0:
            errs.append(f"eps2_percent must be in [0, 100), got {self.eps2_percent}")
        if self.m_mode not in ("soft", "hard"):
            errs.append(f"m_mode must be 'soft' or 'hard', got {self.m_mode!r}")
        if not 0.0 <= self.eps2_hard <= 1.0:
            errs.append(f"eps2_hard must be in [0, 1], got {self.eps2_hard}")
        if errs:
            raise ConfigError(errs)


@dataclass(frozen=True)
class SampleWeights:
    w_l: np.ndarray
    w_k: np.ndarray
    w_s: np.ndarray

    @property
    def n_clean(self) -> int:
        return int(self.w_s.sum())

    @property
    def n_noisy(self) -> int:
        return int(self.w_s.size - self.w_s.sum())


def weights_l(l_con, eps1: float) -> np.ndarray:
    return (np.asarray(l_con) > eps1).astype(np.int8)


def n_soft_filtered(n: int, eps2_percent: float) -> int:
    """Number of samples the soft rule drops from a batch of ``n``."""
    return noisy_count(eps2_percent / 100.0, n)


def weights_k(m_con, eps2_percent: float) -> np.ndarray:
    """Zero out the lowest-M-Con ``eps2_percent`` of the batch; ties go to the lower index."""
    if not 0.0 <= eps2_percent < 100.0:
        raise ConfigError(f"eps2_percent must be in [0, 100), got {eps2_percent}")
    m_con = np.asarray(m_con)
    w = np.ones(m_con.size, dtype=np.int8)
    k = n_soft_filtered(m_con.size, eps2_percent)
    if k:
        w[np.argsort(m_con, kind="stable")[:k]] = 0
    return w


def weights_k_hard(m_con, eps2: float) -> np.ndarray:
    return (np.asarray(m_con) > eps2).astype(np.int8)


def combine(w_l, w_k) -> SampleWeights:
    w_l, w_k = np.asarray(w_l, dtype=np.int8), np.asarray(w_k, dtype=np.int8)
    if w_l.shape != w_k.shape:
        raise ShapeError(f"weight length mismatch: {w_l.shape} vs {w_k.shape}")
    return SampleWeights(w_l, w_k, w_l * w_k)


def sample_weights(l_con, m_con, cfg: FilterConfig) -> SampleWeights:
    n = len(m_con)
    ones = np.ones(n, dtype=np.int8)
    if not cfg.enabled:
        return combine(ones, ones)
    wl = weights_l(l_con, cfg.eps1) if cfg.use_l else ones
    if not cfg.use_m:
        wk = ones
    elif cfg.m_mode == "soft":
        wk = weights_k(m_con, cfg.eps2_percent)
    else:
        wk = weights_k_hard(m_con, cfg.eps2_hard)
    return combine(wl, wk)

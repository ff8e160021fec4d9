"""Deep ensemble: uniform vote, confidence scores and the entropy decomposition."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .errors import ConfigError, ShapeError
from .nn import CLAMP_EPS, DenseNet, Gradients


@dataclass
class Ensemble:
    members: list[DenseNet]

    def __post_init__(self):
        self.members = list(self.members)
        if not self.members:
            raise ConfigError("ensemble needs at least one member")
        dims = self.members[0].layer_dims
        if any(m.layer_dims != dims for m in self.members):
            raise ShapeError("all ensemble members must share layer_dims")

    @property
    def M(self) -> int:
        return len(self.members)

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return self.members[0].layer_dims

    def copy(self) -> "Ensemble":
        return Ensemble([m.copy() for m in self.members])


def init_ensemble(layer_dims, M: int, seed) -> Ensemble:
    """M members, each initialized from its own child of ``SeedSequence(seed)``."""
    if M < 1:
        raise ConfigError("M must be >= 1")
    seeds = np.random.SeedSequence(seed).spawn(M)
    return Ensemble([nn.init_net(layer_dims, np.random.default_rng(s)) for s in seeds])


def member_probs(ens: Ensemble, batch) -> np.ndarray:
    """Stacked member outputs, shape ``(M, B, C)``."""
    return np.stack([nn.forward(m, batch) for m in ens.members])


def vote(ens: Ensemble, batch) -> np.ndarray:
    return member_probs(ens, batch).mean(axis=0)


def label_confidence(mean_probs: np.ndarray, labels) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (mean_probs.shape[0],):
        raise ShapeError("one label per row required")
    if labels.size and (labels.min() < 0 or labels.max() >= mean_probs.shape[1]):
        raise IndexError(f"label out of range [0, {mean_probs.shape[1]})")
    return mean_probs[np.arange(mean_probs.shape[0]), labels]


def max_confidence(mean_probs: np.ndarray) -> np.ndarray:
    return mean_probs.max(axis=1)


def l_con(ens: Ensemble, batch, labels) -> np.ndarray:
    """Ensemble-mean probability of each sample's observed label."""
    return label_confidence(vote(ens, batch), labels)


def m_con(ens: Ensemble, batch) -> np.ndarray:
    """Largest entry of the ensemble-mean distribution."""
    return max_confidence(vote(ens, batch))


def decompose(probs: np.ndarray, clamp_eps: float = CLAMP_EPS):
    """``(total, data, model)`` uncertainty per row from stacked member probs ``(M, B, C)``.

    total = H(mean), data = mean of member entropies, model = total - data
    (the mutual information between prediction and member identity).
    """
    total = nn.entropy(probs.mean(axis=0), clamp_eps)
    data = nn.entropy(probs, clamp_eps).mean(axis=0)
    return total, data, total - data


def uncertainty_decomposition(ens: Ensemble, batch, clamp_eps: float = CLAMP_EPS):
    return decompose(member_probs(ens, batch), clamp_eps)


@dataclass(frozen=True)
class ConfidenceReport:
    mean_probs: np.ndarray
    l_con: np.ndarray | None
    m_con: np.ndarray
    total_unc: np.ndarray
    data_unc: np.ndarray
    model_unc: np.ndarray


def report_from_probs(probs: np.ndarray, labels=None, clamp_eps: float = CLAMP_EPS) -> ConfidenceReport:
    mean = probs.mean(axis=0)
    total, data, model = decompose(probs, clamp_eps)
    lc = None if labels is None else label_confidence(mean, labels)
    return ConfidenceReport(mean, lc, max_confidence(mean), total, data, model)


def confidence_report(ens: Ensemble, batch, labels=None, clamp_eps: float = CLAMP_EPS) -> ConfidenceReport:
    return report_from_probs(member_probs(ens, batch), labels, clamp_eps)


def mi_grad_on_probs(probs: np.ndarray, m: int, clamp_eps: float = CLAMP_EPS) -> np.ndarray:
    """d(model_unc)/d(member m's probs), row by row, with the other members held fixed.

    model_unc = H(mean_k p_k) - mean_k H(p_k); only the m-th term of each
    average depends on member m, each with weight 1/M.
    """
    M = probs.shape[0]
    mean = probs.mean(axis=0)
    return (nn.entropy_grad(mean, clamp_eps) - nn.entropy_grad(probs[m], clamp_eps)) / M


def mi_loss_and_grad(ens: Ensemble, m: int, batch, clamp_eps: float = CLAMP_EPS) -> tuple[float, Gradients]:
    """Mean model uncertainty over the batch and its gradient for member ``m`` only.

    Peers' outputs are constants here (stop-gradient), so the returned
    gradient is the partial derivative w.r.t. member ``m``'s parameters.
    """
    if not 0 <= m < ens.M:
        raise IndexError(f"member index {m} out of range for M={ens.M}")
    caches = [nn.forward_cached(net, batch) for net in ens.members]
    probs = np.stack([c.probs for c in caches])
    _, _, model = decompose(probs, clamp_eps)
    n = probs.shape[1]
    grad_probs = mi_grad_on_probs(probs, m, clamp_eps) / n
    grads = nn.backward(ens.members[m], batch, grad_probs, cache=caches[m])
    return float(model.mean()), grads

"""Decoherence semigroup and the decode/re-encode quantum memory.

The canonical model is the per-site uniform Weyl semigroup

    p_0(t) = (1 + (d^2 - 1) e^{-lam t}) / d^2,   p_xi(t) = (1 - e^{-lam t}) / d^2,

which acts on one site as ``X -> a X + (1 - a) tr(X) 1/d`` with
``a = e^{-lam t}``.  The truncated variant keeps only the weight <= 1 part
of the product distribution (renormalized), so it lies inside the class a
``t = 1`` scheme corrects exactly.

Distances use the computable proxy of :func:`graphqec.channel.channel_distance`;
for Weyl-diagonal channels this is the l1 distance of the error
probabilities, and ``distance(T_t, id) = 2 (1 - p_0(t)^n)`` on ``n`` sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel import QChannel, channel_distance, encoder, decoder, identity_channel, weyl_diagonal_noise
from .phase import PhaseVec, phase_ball
from .scheme import ErrorScheme

__all__ = [
    "MemoryModelError",
    "DecoherenceModel",
    "MemoryRun",
    "StoringReport",
    "site_probabilities",
    "semigroup_channel",
    "apply_semigroup",
    "free_decay_distance",
    "decoherence_time",
    "cycle_superoperator",
    "simulate_memory",
    "storing_time",
]


class MemoryModelError(ValueError):
    """Invalid memory-model parameters."""


@dataclass(frozen=True)
class DecoherenceModel:
    rate: float
    d: int
    truncated: bool = False

    def __post_init__(self) -> None:
        if self.rate < 0 or not math.isfinite(self.rate):
            raise MemoryModelError("rate must be a finite nonnegative number")


def _check_time(t: float) -> None:
    if t < 0 or not math.isfinite(t):
        raise MemoryModelError(f"time must be finite and nonnegative, got {t}")


def site_probabilities(model: DecoherenceModel, t: float) -> tuple[float, float]:
    """``(p_0, p_xi)`` for one site at time ``t``."""
    _check_time(t)
    d2 = model.d**2
    a = math.exp(-model.rate * t)
    return (1 + (d2 - 1) * a) / d2, (1 - a) / d2


def _product_probs(model: DecoherenceModel, labels: Sequence[str], t: float, max_weight: int) -> dict[PhaseVec, float]:
    p0, px = site_probabilities(model, t)
    n = len(labels)
    probs = {xi: p0 ** (n - xi.weight) * px**xi.weight for xi in phase_ball(tuple(labels), max_weight, model.d)}
    total = sum(probs.values())
    return {xi: p / total for xi, p in probs.items()}


def semigroup_channel(model: DecoherenceModel, labels: Sequence[str], t: float, scheme: ErrorScheme | None = None) -> QChannel:
    """``T_t`` on ``labels`` as an explicit Kraus family (full or truncated)."""
    _check_time(t)
    weight = 1 if model.truncated else len(labels)
    return weyl_diagonal_noise(_product_probs(model, labels, t, weight), scheme)


def apply_semigroup(model: DecoherenceModel, rho: np.ndarray, n: int, t: float) -> np.ndarray:
    """Untruncated ``T_t`` on an ``n``-site operator, site by site."""
    _check_time(t)
    d = model.d
    a = math.exp(-model.rate * t)
    out = np.asarray(rho, dtype=complex).reshape((d,) * (2 * n))
    for j in range(n):
        traced = np.trace(out, axis1=j, axis2=n + j)
        mixed = np.expand_dims(np.expand_dims(traced, j), n + j) * (np.eye(d) / d).reshape(
            [d if k in (j, n + j) else 1 for k in range(2 * n)]
        )
        out = a * out + (1 - a) * mixed
    return out.reshape(d**n, d**n)


def free_decay_distance(model: DecoherenceModel, n: int, t: float) -> float:
    """Closed-form ``distance(T_t, id)`` on ``n`` unprotected sites (untruncated model)."""
    p0, _ = site_probabilities(model, t)
    return 2.0 * (1.0 - p0**n)


def decoherence_time(model: DecoherenceModel, eps: float, n: int = 1, rtol: float = 1e-10) -> float:
    """Largest ``s`` with ``distance(T_s, id) <= eps`` (``inf`` if never exceeded)."""
    if not 0 < eps < 2:
        raise MemoryModelError("eps must lie in (0, 2)")
    ceiling = 2.0 * (1.0 - model.d ** (-2 * n))
    if model.rate == 0 or eps >= ceiling:
        return math.inf
    f = lambda s: free_decay_distance(model, n, s)  # noqa: E731
    lo, hi = 0.0, 1.0 / model.rate
    while f(hi) <= eps:
        lo, hi = hi, 2 * hi
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if f(mid) <= eps:
            lo = mid
        else:
            hi = mid
    return lo


def cycle_superoperator(scheme: ErrorScheme, model: DecoherenceModel, t_c: float) -> np.ndarray:
    """Superoperator of ``D o T_{t_c} o E`` on the input register."""
    g = scheme.graph
    v = encoder(scheme).kraus[0]
    dec = decoder(scheme)
    dim = v.shape[1]
    nJ = len(g.J)
    noise = semigroup_channel(model, g.J, t_c, scheme) if model.truncated else None
    sup = np.zeros((dim * dim, dim * dim), dtype=complex)
    for a in range(dim):
        for b in range(dim):
            rho = np.outer(v[:, a], v[:, b].conj())
            rho = noise.apply(rho) if noise is not None else apply_semigroup(model, rho, nJ, t_c)
            sup[:, a * dim + b] = dec.apply(rho).reshape(-1)
    return sup


def _proxy(sup: np.ndarray, labels: Sequence[str], d: int) -> float:
    chan = QChannel.from_superoperator(sup, labels, labels, d)
    return channel_distance(chan, identity_channel(labels, d)).proxy


@dataclass
class MemoryRun:
    rate: float
    t_c: float
    cycles: int
    truncated: bool
    epsilon: float | None
    residuals: list[float] = field(default_factory=list)
    free_decay: list[float] = field(default_factory=list)

    @property
    def within(self) -> bool | None:
        if self.epsilon is None:
            return None
        return all(r <= self.epsilon for r in self.residuals)

    def to_json(self) -> dict:
        return {
            "rate": self.rate,
            "t_c": self.t_c,
            "cycles": self.cycles,
            "truncated": self.truncated,
            "epsilon": self.epsilon,
            "residuals": self.residuals,
            "free_decay": self.free_decay,
            "within_epsilon": self.within,
        }


def simulate_memory(
    scheme: ErrorScheme, model: DecoherenceModel, t_c: float, k: int, epsilon: float | None = None
) -> MemoryRun:
    """Iterate decode/re-encode cycles and record the accumulated deviation per cycle.

    ``free_decay[j]`` is ``distance(T_{(j+1) t_c}, id)`` on the unprotected
    input register, the baseline the memory has to beat.
    """
    if k < 1:
        raise MemoryModelError("need at least one cycle")
    _check_time(t_c)
    g = scheme.graph
    cyc = cycle_superoperator(scheme, model, t_c)
    acc = np.eye(cyc.shape[0], dtype=complex)
    run = MemoryRun(model.rate, t_c, k, model.truncated, epsilon)
    for j in range(1, k + 1):
        acc = cyc @ acc
        run.residuals.append(_proxy(acc, g.I, g.d))
        run.free_decay.append(free_decay_distance(model, len(g.I), j * t_c))
    return run


@dataclass
class StoringReport:
    epsilon: float
    storing_time: float
    decoherence_time: float
    best_t_c: float | None
    best_cycles: int
    ceiling_reached: bool

    @property
    def ratio(self) -> float | None:
        if math.isinf(self.decoherence_time):
            return None
        if self.decoherence_time == 0:
            return math.inf
        return self.storing_time / self.decoherence_time

    def to_json(self) -> dict:
        unbounded = math.isinf(self.decoherence_time)
        return {
            "epsilon": self.epsilon,
            "storing_time": self.storing_time,
            "decoherence_time": None if unbounded else self.decoherence_time,
            "decoherence_unbounded": unbounded,
            "ratio": self.ratio,
            "best_t_c": self.best_t_c,
            "best_cycles": self.best_cycles,
            "ceiling_reached": self.ceiling_reached,
        }


def storing_time(
    scheme: ErrorScheme,
    model: DecoherenceModel,
    eps: float,
    t_grid: Sequence[float] | None = None,
    k_max: int = 64,
) -> StoringReport:
    """Largest ``k t_c`` over the scan whose accumulated residual stays within ``eps``.

    The default grid is geometric around the single-qudit decoherence time
    (or around ``1`` when the model never decoheres).  Storing times are
    compared against the decoherence time of the unprotected input register.
    """
    g = scheme.graph
    s = decoherence_time(model, eps, len(g.I))
    base = 1.0 if math.isinf(s) else s
    grid = list(t_grid) if t_grid is not None else [base * 2.0**e for e in range(-6, 3)]
    best, best_tc, best_k, ceiling = 0.0, None, 0, False
    for t_c in grid:
        cyc = cycle_superoperator(scheme, model, t_c)
        acc = np.eye(cyc.shape[0], dtype=complex)
        ok_k = 0
        for k in range(1, k_max + 1):
            acc = cyc @ acc
            if _proxy(acc, g.I, g.d) > eps:
                break
            ok_k = k
        if ok_k * t_c > best:
            best, best_tc, best_k = ok_k * t_c, t_c, ok_k
            ceiling = ok_k == k_max
    return StoringReport(eps, best, s, best_tc, best_k, ceiling)

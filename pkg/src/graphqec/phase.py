"""Discrete phase space, the additive character and the graph phases.

Phase-space points are pairs ``xi = (p, q)`` of momentum and position
registers over the same labeled sites.  The graph phase ``tau`` is the
strictly upper-triangular quadratic form

    tau(Lam, q) = eps( sum_{k<l} Lam[k, l] q_k q_l ),

which for symmetric, zero-diagonal ``Lam`` satisfies
``tau(q1 + q2) = tau(q1) tau(q2) chi(Lam q1, q2)`` at every prime ``d``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterator, Sequence

import numpy as np

from .ffield import FieldError, FMat, FScalar, FVec

__all__ = [
    "PHASE_ATOL",
    "PhaseVec",
    "PhaseBall",
    "epsilon",
    "chi",
    "tau",
    "tau_values",
    "weight",
    "phase_ball",
    "ball_size",
]

PHASE_ATOL = 1e-9


def epsilon(x: FScalar | int, d: int | None = None) -> complex:
    """The character ``eps(x) = exp(2 pi i x / d)`` of the additive group."""
    if isinstance(x, FScalar):
        value, d = x.value, x.modulus
    else:
        if d is None:
            raise FieldError("modulus required for integer argument")
        value = int(x) % d
    return complex(np.exp(2j * np.pi * value / d))


def chi(p: FVec, q: FVec) -> complex:
    """Symmetric bicharacter ``prod_i eps(p_i q_i)``."""
    if p.labels != q.labels or p.modulus != q.modulus:
        raise FieldError(f"index mismatch: {p.labels} vs {q.labels}")
    return epsilon(int(p.values @ q.values), p.modulus)


def _check_graph(lam: np.ndarray) -> None:
    if np.any(np.diag(lam)):
        raise FieldError("graph adjacency must have zero diagonal")


def tau(lam: FMat, q: FVec) -> complex:
    if lam.rows != lam.cols:
        raise FieldError("adjacency must be square")
    if q.labels != lam.cols and set(q.labels) == set(lam.cols):
        q = q.restrict(lam.cols)
    if q.labels != lam.cols or q.modulus != lam.modulus:
        raise FieldError(f"index mismatch: {lam.cols} vs {q.labels}")
    _check_graph(lam.values)
    upper = np.triu(lam.values, 1)
    return epsilon(int(q.values @ upper @ q.values), lam.modulus)


def tau_values(lam: np.ndarray, configs: np.ndarray, d: int) -> np.ndarray:
    """``tau`` evaluated on every row of ``configs`` (vectorized)."""
    lam = np.asarray(lam, dtype=np.int64)
    _check_graph(lam)
    upper = np.triu(lam, 1)
    form = np.einsum("ak,kl,al->a", configs, upper, configs) % d
    return np.exp(2j * np.pi * form / d)


@dataclass(frozen=True)
class PhaseVec:
    """A phase-space point ``(p, q)`` on labeled sites."""

    labels: tuple[str, ...]
    p: tuple[int, ...]
    q: tuple[int, ...]
    d: int

    def __post_init__(self) -> None:
        labels = tuple(self.labels)
        if len(self.p) != len(labels) or len(self.q) != len(labels):
            raise FieldError("p and q must match the index set")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "p", tuple(int(x) % self.d for x in self.p))
        object.__setattr__(self, "q", tuple(int(x) % self.d for x in self.q))

    @classmethod
    def zero(cls, labels: Sequence[str], d: int) -> PhaseVec:
        n = len(labels)
        return cls(tuple(labels), (0,) * n, (0,) * n, d)

    @classmethod
    def from_fvecs(cls, p: FVec, q: FVec) -> PhaseVec:
        if p.labels != q.labels or p.modulus != q.modulus:
            raise FieldError("p and q must share index set and modulus")
        return cls(p.labels, tuple(p.tolist()), tuple(q.tolist()), p.modulus)

    @property
    def pvec(self) -> FVec:
        return FVec(self.labels, self.p, self.d)

    @property
    def qvec(self) -> FVec:
        return FVec(self.labels, self.q, self.d)

    @property
    def weight(self) -> int:
        return sum(1 for a, b in zip(self.p, self.q) if a or b)

    def support(self) -> tuple[str, ...]:
        return tuple(x for x, a, b in zip(self.labels, self.p, self.q) if a or b)

    def restrict(self, labels: Sequence[str]) -> PhaseVec:
        idx = [self.labels.index(x) for x in labels]
        return PhaseVec(tuple(labels), tuple(self.p[i] for i in idx), tuple(self.q[i] for i in idx), self.d)

    def extend(self, labels: Sequence[str]) -> PhaseVec:
        """Zero-pad onto a superset of sites."""
        pos = {x: i for i, x in enumerate(self.labels)}
        if pos.keys() - set(labels):
            raise FieldError("extension must contain every site")
        p = tuple(self.p[pos[x]] if x in pos else 0 for x in labels)
        q = tuple(self.q[pos[x]] if x in pos else 0 for x in labels)
        return PhaseVec(tuple(labels), p, q, self.d)

    def _check(self, other: PhaseVec) -> None:
        if self.labels != other.labels or self.d != other.d:
            raise FieldError("index mismatch")

    def __add__(self, other: PhaseVec) -> PhaseVec:
        self._check(other)
        return PhaseVec(
            self.labels,
            tuple(a + b for a, b in zip(self.p, other.p)),
            tuple(a + b for a, b in zip(self.q, other.q)),
            self.d,
        )

    def __neg__(self) -> PhaseVec:
        return PhaseVec(self.labels, tuple(-a for a in self.p), tuple(-a for a in self.q), self.d)

    def __sub__(self, other: PhaseVec) -> PhaseVec:
        return self + (-other)

    def is_zero(self) -> bool:
        return not any(self.p) and not any(self.q)

    def to_json(self) -> dict:
        return {"p": list(self.p), "q": list(self.q)}

    @classmethod
    def from_json(cls, obj: dict, labels: Sequence[str], d: int) -> PhaseVec:
        return cls(tuple(labels), tuple(obj["p"]), tuple(obj["q"]), d)


def weight(xi: PhaseVec) -> int:
    return xi.weight


def ball_size(n: int, t: int, d: int) -> int:
    return sum(comb(n, k) * (d * d - 1) ** k for k in range(min(t, n) + 1))


@dataclass(frozen=True)
class PhaseBall:
    labels: tuple[str, ...]
    t: int
    d: int
    elements: tuple[PhaseVec, ...]

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[PhaseVec]:
        return iter(self.elements)

    def __contains__(self, xi: object) -> bool:
        return isinstance(xi, PhaseVec) and xi.labels == self.labels and xi.weight <= self.t


def phase_ball(labels: Sequence[str], t: int, d: int) -> PhaseBall:
    """All phase-space points of weight at most ``t``.

    Ordered by weight, then by support (lexicographic in site order), then by
    the nonzero single-site values ``(p_j, q_j)`` in lexicographic order.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    labels = tuple(labels)
    n = len(labels)
    local = [(a, b) for a in range(d) for b in range(d) if a or b]
    out: list[PhaseVec] = []
    for k in range(min(t, n) + 1):
        for support in itertools.combinations(range(n), k):
            for vals in itertools.product(local, repeat=k):
                p = [0] * n
                q = [0] * n
                for site, (a, b) in zip(support, vals):
                    p[site], q[site] = a, b
                out.append(PhaseVec(labels, tuple(p), tuple(q), d))
    return PhaseBall(labels, t, d, tuple(out))

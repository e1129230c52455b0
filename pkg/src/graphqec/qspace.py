"""Dense Hilbert-space layer for registers of qudits.

A register over labeled sites ``K`` is the space of complex functions on
``F^K``.  Basis states are ordered lexicographically in the declared site
order, first site most significant.  Operators are stored as plain complex
matrices together with their domain and codomain site labels.

Conventions (fixed here once for the whole package):

* shift:      (x(q) psi)(c) = psi(c - q)
* multiplier: (z(p) psi)(c) = chi(p, c) psi(c)
* Weyl:       w(p, q) = z(p) x(q),  so  w(xi1) w(xi2) = conj(chi(p2, q1)) w(xi1 + xi2)
* Fourier:    F[p, c] = d^{-n/2} chi(p, c)
* The normalized sums in the function-space formulas are absorbed into the
  matrix prefactors so that every operator built here is exactly unitary or
  isometric in the standard inner product.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ffield import FieldError, FMat, FVec
from .phase import PhaseVec, tau_values

__all__ = [
    "configs",
    "config_index",
    "StateVec",
    "DenseOp",
    "omega",
    "point_state",
    "shift_op",
    "mult_op",
    "weyl",
    "weyl_monomial",
    "fourier",
    "graph_unitary",
    "embed",
    "kron",
    "unitarity_defect",
    "isometry_defect",
]


@functools.lru_cache(maxsize=64)
def _configs(n: int, d: int) -> np.ndarray:
    if n == 0:
        out = np.zeros((1, 0), dtype=np.int64)
    else:
        grids = np.indices((d,) * n).reshape(n, -1).T
        out = np.ascontiguousarray(grids, dtype=np.int64)
    out.setflags(write=False)
    return out


def configs(n: int, d: int) -> np.ndarray:
    """All of ``F_d^n`` as rows, in basis order."""
    return _configs(int(n), int(d))


def config_index(cfg: np.ndarray, d: int) -> np.ndarray:
    """Basis index of each configuration row (inverse of :func:`configs`)."""
    cfg = np.atleast_2d(np.asarray(cfg, dtype=np.int64)) % d
    n = cfg.shape[1]
    powers = d ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return cfg @ powers


def _labels(labels: Sequence[str]) -> tuple[str, ...]:
    out = tuple(labels)
    if len(set(out)) != len(out):
        raise FieldError(f"duplicate labels in {out}")
    return out


@dataclass(frozen=True, eq=False)
class StateVec:
    labels: tuple[str, ...]
    d: int
    amps: np.ndarray

    def __post_init__(self) -> None:
        labels = _labels(self.labels)
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.shape[0] != self.d ** len(labels):
            raise FieldError("amplitude count does not match register")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "amps", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))


@dataclass(frozen=True, eq=False)
class DenseOp:
    """Linear map ``H_dom -> H_cod`` as a dense complex matrix."""

    dom: tuple[str, ...]
    cod: tuple[str, ...]
    d: int
    mat: np.ndarray

    def __post_init__(self) -> None:
        dom, cod = _labels(self.dom), _labels(self.cod)
        mat = np.asarray(self.mat, dtype=complex)
        if mat.shape != (self.d ** len(cod), self.d ** len(dom)):
            raise FieldError(f"matrix shape {mat.shape} does not match {cod} <- {dom}")
        object.__setattr__(self, "dom", dom)
        object.__setattr__(self, "cod", cod)
        object.__setattr__(self, "mat", mat)

    @classmethod
    def identity(cls, labels: Sequence[str], d: int) -> DenseOp:
        return cls(tuple(labels), tuple(labels), d, np.eye(d ** len(labels)))

    @property
    def dag(self) -> DenseOp:
        return DenseOp(self.cod, self.dom, self.d, self.mat.conj().T)

    def __matmul__(self, other: DenseOp) -> DenseOp:
        if self.dom != other.cod or self.d != other.d:
            raise FieldError(f"cannot compose {self.dom} with {other.cod}")
        return DenseOp(other.dom, self.cod, self.d, self.mat @ other.mat)

    def __mul__(self, c: complex) -> DenseOp:
        return DenseOp(self.dom, self.cod, self.d, c * self.mat)

    __rmul__ = __mul__

    def __add__(self, other: DenseOp) -> DenseOp:
        if (self.dom, self.cod) != (other.dom, other.cod):
            raise FieldError("register mismatch")
        return DenseOp(self.dom, self.cod, self.d, self.mat + other.mat)

    def __sub__(self, other: DenseOp) -> DenseOp:
        return self + (-1) * other

    def apply(self, psi: StateVec) -> StateVec:
        if psi.labels != self.dom:
            raise FieldError("state register does not match operator domain")
        return StateVec(self.cod, self.d, self.mat @ psi.amps)

    def dist(self, other: DenseOp) -> float:
        """Frobenius distance."""
        return float(np.linalg.norm(self.mat - other.mat))


def unitarity_defect(op: DenseOp) -> float:
    m = op.mat
    return max(
        float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[1]))),
        float(np.linalg.norm(m @ m.conj().T - np.eye(m.shape[0]))),
    )


def isometry_defect(op: DenseOp) -> float:
    m = op.mat
    return float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[1])))


def omega(labels: Sequence[str], d: int) -> StateVec:
    """The shift-invariant standard vector (constant function)."""
    n = len(labels)
    return StateVec(tuple(labels), d, np.full(d**n, d ** (-n / 2), dtype=complex))


def point_state(cfg: FVec) -> StateVec:
    """Normalized point mass at a configuration (a z-basis vector)."""
    d = cfg.modulus
    amps = np.zeros(d ** len(cfg), dtype=complex)
    amps[int(config_index(cfg.values, d)[0])] = 1.0
    return StateVec(cfg.labels, d, amps)


def weyl_monomial(xi: PhaseVec) -> tuple[np.ndarray, np.ndarray]:
    """``(src, phase)`` with ``(w(xi) psi)[c] = phase[c] * psi[src[c]]``."""
    d, n = xi.d, len(xi.labels)
    cfg = configs(n, d)
    p = np.asarray(xi.p, dtype=np.int64)
    q = np.asarray(xi.q, dtype=np.int64)
    src = config_index(cfg - q, d)
    phase = np.exp(2j * np.pi * ((cfg @ p) % d) / d)
    return src, phase


def _monomial_matrix(src: np.ndarray, phase: np.ndarray) -> np.ndarray:
    m = np.zeros((src.size, src.size), dtype=complex)
    m[np.arange(src.size), src] = phase
    return m


def shift_op(q: FVec) -> DenseOp:
    xi = PhaseVec(q.labels, (0,) * len(q), tuple(q.tolist()), q.modulus)
    return DenseOp(q.labels, q.labels, q.modulus, _monomial_matrix(*weyl_monomial(xi)))


def mult_op(p: FVec) -> DenseOp:
    d, n = p.modulus, len(p)
    phase = np.exp(2j * np.pi * ((configs(n, d) @ p.values) % d) / d)
    return DenseOp(p.labels, p.labels, d, np.diag(phase))


def weyl(xi: PhaseVec) -> DenseOp:
    return DenseOp(xi.labels, xi.labels, xi.d, _monomial_matrix(*weyl_monomial(xi)))


def fourier(labels: Sequence[str], d: int) -> DenseOp:
    n = len(labels)
    cfg = configs(n, d)
    m = np.exp(2j * np.pi * ((cfg @ cfg.T) % d) / d) * d ** (-n / 2)
    return DenseOp(tuple(labels), tuple(labels), d, m)


def graph_unitary(gamma: FMat, sign: int = 1) -> DenseOp:
    """Diagonal unitary ``(u(Gamma) psi)(c) = tau(Gamma, c)^sign psi(c)``."""
    if gamma.rows != gamma.cols:
        raise FieldError("adjacency must be square")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    d = gamma.modulus
    phases = tau_values(gamma.values, configs(len(gamma.rows), d), d)
    if sign == -1:
        phases = phases.conj()
    return DenseOp(gamma.rows, gamma.rows, d, np.diag(phases))


def kron(a: DenseOp, b: DenseOp) -> DenseOp:
    if a.d != b.d:
        raise FieldError("modulus mismatch")
    return DenseOp(a.dom + b.dom, a.cod + b.cod, a.d, np.kron(a.mat, b.mat))


def embed(op: DenseOp, ambient: Sequence[str]) -> DenseOp:
    """Extend a square operator on ``op.dom`` by the identity on the rest of ``ambient``."""
    ambient = _labels(ambient)
    if op.dom != op.cod:
        raise FieldError("only operators with equal domain and codomain can be embedded")
    missing = [x for x in op.dom if x not in ambient]
    if missing:
        raise FieldError(f"labels {missing} not in ambient register")
    d = op.d
    rest = tuple(x for x in ambient if x not in op.dom)
    full = np.kron(op.mat, np.eye(d ** len(rest)))
    order = op.dom + rest
    n = len(ambient)
    perm = [order.index(x) for x in ambient]
    t = full.reshape((d,) * (2 * n)).transpose(perm + [n + k for k in perm])
    return DenseOp(ambient, ambient, d, t.reshape(d**n, d**n))

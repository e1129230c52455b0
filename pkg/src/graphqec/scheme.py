"""Error-correcting scheme attached to a certified coding graph.

For a syndrome label ``q^L`` the code isometry ``v_{q^L}: H_I -> H_J`` has
matrix entries

    v[q^J, q^I] = d^{-|J|/2} tau(Lam, (q^I, q^J, q^L)),

which makes it exactly isometric; the family over ``F^L`` is complete and
mutually orthogonal.  Errors ``xi^J`` of weight at most ``t`` act by
``w_[xi^J] = tau(-Lam, q^J) w(xi^J)``, corrections by
``u_[xi^I] = x(q^I) z(p^I)``, and with the syndrome relation

    p^J = Lam^J_{IJL} q^{IJL},    p^I = -Lam^I_J q^J

one has exactly ``w_[xi^J] v_0 = v_{q^L} u_[xi^I]``.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .ffield import FieldError, FMat, FVec
from .graph import CodingGraph, check_admissible, check_t_error_correcting
from .phase import PhaseVec, phase_ball, tau, tau_values
from .qspace import DenseOp, configs, mult_op, shift_op, weyl

__all__ = [
    "SchemeError",
    "NotErrorCorrectingError",
    "GraphIsometry",
    "ErrorScheme",
    "code_isometry",
    "stabilizer_eigen_check",
    "error_basis_op",
    "correction_op",
    "gamma",
    "forced_syndrome",
    "build_syndrome_table",
    "verify_kl",
    "check_input_transfer",
    "check_error_transfer",
    "check_syndrome_shift",
    "check_error_to_syndrome",
    "build_scheme",
]


class SchemeError(ValueError):
    pass


class NotErrorCorrectingError(SchemeError):
    """Two distinct corrections forced onto one syndrome."""


# graphs are immutable, so per-graph results can be memoized for the graph's lifetime
_INVERSES: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()
_ISOMETRIES: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def _require_admissible(g: CodingGraph) -> FMat:
    if g not in _INVERSES:
        rep = check_admissible(g)
        if not rep.ok:
            raise SchemeError(f"graph is not admissible: {rep.reason}")
        _INVERSES[g] = rep.inverse
    return _INVERSES[g]


def _full(g: CodingGraph, parts: dict[str, FVec]) -> FVec:
    """Concatenate partial position vectors into one on all vertices (zeros elsewhere)."""
    vals = dict.fromkeys(g.vertices, 0)
    for v in parts.values():
        for lab, x in zip(v.labels, v.tolist()):
            vals[lab] = x
    return FVec(g.vertices, [vals[x] for x in g.vertices], g.d)


def _opnorm_dist(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b))


@dataclass(frozen=True, eq=False)
class GraphIsometry:
    graph: CodingGraph
    qL: FVec
    op: DenseOp

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat


def _isometry_matrix(g: CodingGraph, qL: tuple[int, ...]) -> np.ndarray:
    cache = _ISOMETRIES.setdefault(g, {})
    if qL not in cache:
        cache[qL] = _build_isometry(g, qL)
        cache[qL].flags.writeable = False
    return cache[qL]


def _build_isometry(g: CodingGraph, qL: tuple[int, ...]) -> np.ndarray:
    d, nI, nJ = g.d, len(g.I), len(g.J)
    cfg = np.hstack([
        configs(nI + nJ, d),
        np.broadcast_to(np.asarray(qL, dtype=np.int64), (d ** (nI + nJ), len(g.L))),
    ])
    vals = tau_values(g.lam.values, cfg, d).reshape(d**nI, d**nJ)
    return vals.T * d ** (-nJ / 2)


def code_isometry(g: CodingGraph, qL: FVec | None = None) -> GraphIsometry:
    _require_admissible(g)
    if qL is None:
        qL = FVec.zeros(g.L, g.d)
    if qL.labels != g.L:
        raise FieldError("syndrome label must be indexed by L")
    mat = _isometry_matrix(g, tuple(qL.tolist()))
    return GraphIsometry(g, qL, DenseOp(g.I, g.J, g.d, mat))


def stabilizer_eigen_check(g: CodingGraph, qJ: FVec, qL: FVec | None = None) -> float:
    """``|| w(Lam^J_J s, s) v - tau(Lam, s - q^L) v ||`` for ``s`` in ker ``Lam^I_J``."""
    if qL is None:
        qL = FVec.zeros(g.L, g.d)
    if not (g.block(g.I, g.J) @ qJ).is_zero():
        raise SchemeError("q^J is not in the kernel of Lam^I_J")
    v = code_isometry(g, qL).op
    p = g.block(g.J, g.J) @ qJ
    lhs = weyl(PhaseVec.from_fvecs(p, qJ)) @ v
    phase = tau(g.lam, _full(g, {"J": qJ, "L": -qL}))
    return _opnorm_dist(lhs.mat, phase * v.mat)


def error_basis_op(g: CodingGraph, xi: PhaseVec, t: int | None = None) -> DenseOp:
    if xi.labels != g.J:
        raise FieldError("error must be indexed by J")
    if t is not None and xi.weight > t:
        raise SchemeError(f"error weight {xi.weight} exceeds t={t}")
    phase = tau(g.block(g.J, g.J), xi.qvec).conjugate()
    return phase * weyl(xi)


def correction_op(xi: PhaseVec) -> DenseOp:
    """``x(q) z(p)`` on the input register."""
    return shift_op(xi.qvec) @ mult_op(xi.pvec)


def gamma(g: CodingGraph, xiJ: PhaseVec, qL: FVec, xiI: PhaseVec) -> int:
    """0 when the triple satisfies the syndrome relation, 1 otherwise."""
    q_all = _full(g, {"I": xiI.qvec, "J": xiJ.qvec, "L": qL})
    r1 = xiJ.pvec - g.lam.block(g.J, g.vertices) @ q_all
    r2 = xiI.pvec + g.block(g.I, g.J) @ xiJ.qvec
    return 0 if r1.is_zero() and r2.is_zero() else 1


def forced_syndrome(g: CodingGraph, xiJ: PhaseVec, inverse: FMat | None = None) -> tuple[FVec, PhaseVec]:
    """Closed-form solution ``(q^L, xi^I)`` of the syndrome relation for ``xi^J``."""
    if inverse is None:
        inverse = _require_admissible(g)
    qIL = inverse @ (xiJ.pvec - g.block(g.J, g.J) @ xiJ.qvec)
    pI = -(g.block(g.I, g.J) @ xiJ.qvec)
    return qIL.restrict(g.L), PhaseVec.from_fvecs(pI, qIL.restrict(g.I))


def build_syndrome_table(g: CodingGraph, t: int) -> dict[tuple[int, ...], PhaseVec | None]:
    """Map every ``q^L`` to its forced correction, or ``None`` for left-over syndromes."""
    inverse = _require_admissible(g)
    table: dict[tuple[int, ...], PhaseVec | None] = {
        tuple(int(x) for x in c): None for c in configs(len(g.L), g.d)
    }
    origin: dict[tuple[int, ...], PhaseVec] = {}
    for xiJ in phase_ball(g.J, t, g.d):
        qL, xiI = forced_syndrome(g, xiJ, inverse)
        key = tuple(qL.tolist())
        prev = table[key]
        if prev is not None and prev != xiI:
            raise NotErrorCorrectingError(
                f"syndrome {key} forced to both {prev.to_json()} (from {origin[key].to_json()}) "
                f"and {xiI.to_json()} (from {xiJ.to_json()})"
            )
        if prev is None:
            table[key] = xiI
            origin[key] = xiJ
    return table


def verify_kl(g: CodingGraph, t: int) -> float:
    """Largest off-identity part of ``v^* w1^* w2 v`` over pairs in the t-ball."""
    v = code_isometry(g).mat
    dim = v.shape[1]
    images = [weyl(xi).mat @ v for xi in phase_ball(g.J, t, g.d)]
    stack = np.stack(images)  # (n, DJ, DI)
    gram = np.einsum("aji,bjk->abik", stack.conj(), stack)
    c = np.trace(gram, axis1=2, axis2=3) / dim
    dev = gram - c[:, :, None, None] * np.eye(dim)
    return float(np.max(np.linalg.norm(dev, axis=(2, 3))))


def check_input_transfer(g: CodingGraph, xiI: PhaseVec, qL: FVec) -> float:
    v = code_isometry(g, qL).op
    lhs = v @ weyl(xiI)
    phase = tau(g.lam, _full(g, {"I": xiI.qvec, "L": qL})) * np.exp(
        2j * np.pi * int(xiI.pvec.values @ xiI.qvec.values) / g.d
    )
    rhs = mult_op(g.block(g.J, g.I) @ xiI.qvec) @ v @ mult_op(xiI.pvec)
    return _opnorm_dist(lhs.mat, phase * rhs.mat)


def check_error_transfer(g: CodingGraph, xiJ: PhaseVec, qL: FVec) -> float:
    v = code_isometry(g, qL).op
    lhs = weyl(xiJ) @ v
    phase = tau(g.lam, _full(g, {"J": xiJ.qvec, "L": -qL}))
    zJ = mult_op(xiJ.pvec - g.block(g.J, g.J) @ xiJ.qvec)
    zI = mult_op(-(g.block(g.I, g.J) @ xiJ.qvec))
    return _opnorm_dist(lhs.mat, phase * (zJ @ v @ zI).mat)


def check_syndrome_shift(g: CodingGraph, qL: FVec) -> float:
    v = code_isometry(g, qL).op
    v0 = code_isometry(g).op
    return _opnorm_dist(v.mat, (mult_op(g.block(g.J, g.L) @ qL) @ v0).mat)


def check_error_to_syndrome(g: CodingGraph, xiJ: PhaseVec) -> float:
    qL, xiI = forced_syndrome(g, xiJ)
    lhs = error_basis_op(g, xiJ) @ code_isometry(g).op
    rhs = code_isometry(g, qL).op @ correction_op(xiI)
    return _opnorm_dist(lhs.mat, rhs.mat)


@dataclass(eq=False)
class ErrorScheme:
    """The tuple (error basis, isometries, corrections, syndrome table) for one graph."""

    graph: CodingGraph
    t: int
    inverse: FMat
    syndrome_table: dict[tuple[int, ...], PhaseVec | None]
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def d(self) -> int:
        return self.graph.d

    @property
    def errors(self) -> tuple[PhaseVec, ...]:
        return phase_ball(self.graph.J, self.t, self.d).elements

    def syndromes(self) -> Iterator[FVec]:
        for key in self.syndrome_table:
            yield FVec(self.graph.L, key, self.d)

    def isometry(self, qL: FVec | tuple[int, ...]) -> DenseOp:
        key = tuple(qL.tolist()) if isinstance(qL, FVec) else tuple(int(x) % self.d for x in qL)
        cache = self._cache.setdefault("iso", {})
        if key not in cache:
            cache[key] = code_isometry(self.graph, FVec(self.graph.L, key, self.d)).op
        return cache[key]

    def correction_for(self, qL: FVec | tuple[int, ...]) -> PhaseVec:
        """Table lookup with left-over syndromes sent to the trivial correction."""
        key = tuple(qL.tolist()) if isinstance(qL, FVec) else tuple(int(x) % self.d for x in qL)
        xi = self.syndrome_table[key]
        return PhaseVec.zero(self.graph.I, self.d) if xi is None else xi

    def correction(self, xiI: PhaseVec) -> DenseOp:
        return correction_op(xiI)

    def error_op(self, xiJ: PhaseVec) -> DenseOp:
        return error_basis_op(self.graph, xiJ, self.t)

    @property
    def leftover(self) -> list[tuple[int, ...]]:
        return [k for k, v in self.syndrome_table.items() if v is None]

    def completeness_defect(self) -> float:
        DJ = self.d ** len(self.graph.J)
        acc = np.zeros((DJ, DJ), dtype=complex)
        for key in self.syndrome_table:
            v = self.isometry(key).mat
            acc += v @ v.conj().T
        return float(np.linalg.norm(acc - np.eye(DJ)))

    def verify(self) -> dict[str, float | bool]:
        """Check the three scheme conditions and return the worst deviations."""
        lem = max(check_error_to_syndrome(self.graph, xi) for xi in self.errors)
        total = all(
            self.syndrome_table[tuple(forced_syndrome(self.graph, xi, self.inverse)[0].tolist())] is not None
            for xi in self.errors
        )
        return {
            "error_to_syndrome_max": lem,
            "table_total": total,
            "collision_free": True,  # construction raises otherwise
            "completeness": self.completeness_defect(),
        }

    def to_json(self) -> dict:
        entries = [
            {"q_L": list(key), "xi_I": None if xi is None else xi.to_json()}
            for key, xi in self.syndrome_table.items()
        ]
        return {"graph_hash": self.graph.graph_hash(), "t": self.t, "d": self.d, "table": entries}

    @classmethod
    def from_json(cls, obj: dict, g: CodingGraph) -> ErrorScheme:
        if obj.get("graph_hash") != g.graph_hash():
            raise SchemeError("scheme was exported for a different graph")
        inverse = _require_admissible(g)
        table: dict[tuple[int, ...], PhaseVec | None] = {}
        for e in obj["table"]:
            key = tuple(int(x) % g.d for x in e["q_L"])
            table[key] = None if e["xi_I"] is None else PhaseVec.from_json(e["xi_I"], g.I, g.d)
        expected = {tuple(int(x) for x in c) for c in configs(len(g.L), g.d)}
        if set(table) != expected:
            raise SchemeError("table does not cover every syndrome exactly once")
        return cls(g, int(obj["t"]), inverse, table)


def build_scheme(g: CodingGraph, t: int, certify: bool = True) -> ErrorScheme:
    inverse = _require_admissible(g)
    if certify:
        rep = check_t_error_correcting(g, t)
        if not rep.ok:
            raise NotErrorCorrectingError(
                f"graph fails the {t}-error condition at E={rep.witness_E}: {rep.reason}"
            )
    return ErrorScheme(g, t, inverse, build_syndrome_table(g, t))


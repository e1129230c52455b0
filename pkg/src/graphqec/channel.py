"""Channels, instruments and the encode / noise / decode pipeline.

Channels are Kraus families in the Schrödinger picture; the Heisenberg
action is the adjoint ``a -> sum K^* a K``.  Matrices follow the register
ordering of :mod:`graphqec.qspace`; superoperators act on row-major
``vec(rho)`` so that ``vec(K rho K^*) = (K kron conj(K)) vec(rho)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .phase import PhaseVec, phase_ball
from .qspace import DenseOp, weyl
from .scheme import ErrorScheme, correction_op, error_basis_op

__all__ = [
    "ChannelError",
    "QChannel",
    "Instrument",
    "NoiseChannel",
    "ChannelDistance",
    "CorrectionMap",
    "identity_channel",
    "unitary_channel",
    "encoder",
    "syndrome_channel",
    "correction_channel",
    "decoder",
    "noise_from_matrix",
    "weyl_diagonal_noise",
    "random_psd_noise",
    "channel_distance",
    "verify_theorem1",
    "weyl_basis",
    "parse_noise",
    "noise_to_json",
]

ATOL = 1e-9


class ChannelError(ValueError):
    pass


def _mat(k) -> np.ndarray:
    return k.mat if isinstance(k, DenseOp) else np.asarray(k, dtype=complex)


@dataclass(frozen=True, eq=False)
class QChannel:
    """Completely positive map ``B(H_dom) -> B(H_cod)`` given by Kraus operators."""

    dom: tuple[str, ...]
    cod: tuple[str, ...]
    d: int
    kraus: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        ks = tuple(_mat(k) for k in self.kraus)
        shape = (self.d ** len(self.cod), self.d ** len(self.dom))
        if not ks:
            raise ChannelError("a channel needs at least one Kraus operator")
        for k in ks:
            if k.shape != shape:
                raise ChannelError(f"Kraus shape {k.shape} does not match {shape}")
        object.__setattr__(self, "dom", tuple(self.dom))
        object.__setattr__(self, "cod", tuple(self.cod))
        object.__setattr__(self, "kraus", ks)

    @property
    def dim_in(self) -> int:
        return self.d ** len(self.dom)

    @property
    def dim_out(self) -> int:
        return self.d ** len(self.cod)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        return sum(k @ rho @ k.conj().T for k in self.kraus)

    __call__ = apply

    def adjoint(self, a: np.ndarray) -> np.ndarray:
        """Heisenberg action on an observable of the output register."""
        a = np.asarray(a, dtype=complex)
        return sum(k.conj().T @ a @ k for k in self.kraus)

    def completeness_defect(self) -> float:
        acc = sum(k.conj().T @ k for k in self.kraus)
        return float(np.linalg.norm(acc - np.eye(self.dim_in)))

    def is_trace_preserving(self, atol: float = ATOL) -> bool:
        return self.completeness_defect() <= atol

    def compose(self, first: QChannel) -> QChannel:
        """``self o first``: apply ``first`` and then ``self``."""
        if first.cod != self.dom or first.d != self.d:
            raise ChannelError(f"cannot compose {self.dom} after {first.cod}")
        ks = [a @ b for a in self.kraus for b in first.kraus]
        return QChannel(first.dom, self.cod, self.d, tuple(ks))

    def superoperator(self) -> np.ndarray:
        return sum(np.kron(k, k.conj()) for k in self.kraus)

    def choi(self) -> np.ndarray:
        """``C[(i, j), (i', j')] = T(E_{j j'})[i, i']``."""
        do, di = self.dim_out, self.dim_in
        s = self.superoperator().reshape(do, do, di, di)
        return s.transpose(0, 2, 1, 3).reshape(do * di, do * di)

    @classmethod
    def from_superoperator(
        cls, sup: np.ndarray, dom: Sequence[str], cod: Sequence[str], d: int, atol: float = 1e-12
    ) -> QChannel:
        """Canonical Kraus family from the Choi eigendecomposition."""
        do, di = d ** len(cod), d ** len(dom)
        choi = np.asarray(sup).reshape(do, do, di, di).transpose(0, 2, 1, 3).reshape(do * di, do * di)
        choi = (choi + choi.conj().T) / 2
        w, u = np.linalg.eigh(choi)
        if w.min() < -1e-8 * max(1.0, w.max()):
            raise ChannelError(f"map is not completely positive (eigenvalue {w.min():.3g})")
        ks = [np.sqrt(lam) * u[:, k].reshape(do, di) for k, lam in enumerate(w) if lam > atol]
        if not ks:
            ks = [np.zeros((do, di))]
        return cls(tuple(dom), tuple(cod), d, tuple(ks))

    def chi_matrix(self) -> np.ndarray:
        """Coefficients ``T(rho) = sum chi[a, b] w_a rho w_b^*`` over :func:`weyl_basis` (square channels)."""
        if self.dom != self.cod:
            raise ChannelError("chi matrix needs equal input and output registers")
        basis = weyl_basis(self.dom, self.d)
        W = np.stack([weyl(xi).mat.reshape(-1) for xi in basis], axis=1)
        coeff = np.stack([W.conj().T @ k.reshape(-1) for k in self.kraus]) / self.dim_in
        return coeff.T @ coeff.conj()

    def weyl_probabilities(self, atol: float = ATOL) -> np.ndarray | None:
        """Diagonal of the chi matrix if the channel is Weyl-diagonal, else ``None``."""
        chi = self.chi_matrix()
        off = chi - np.diag(np.diag(chi))
        if np.abs(off).max(initial=0.0) > atol:
            return None
        return np.real(np.diag(chi))


def weyl_basis(labels: Sequence[str], d: int) -> tuple[PhaseVec, ...]:
    """All phase-space points on ``labels``; the identity comes first."""
    return phase_ball(tuple(labels), len(labels), d).elements


def identity_channel(labels: Sequence[str], d: int) -> QChannel:
    return QChannel(tuple(labels), tuple(labels), d, (np.eye(d ** len(labels)),))


def unitary_channel(u: DenseOp) -> QChannel:
    return QChannel(u.dom, u.cod, u.d, (u.mat,))


@dataclass(frozen=True, eq=False)
class Instrument:
    """Outcome-labeled CP maps summing to a channel."""

    dom: tuple[str, ...]
    cod: tuple[str, ...]
    d: int
    branches: Mapping[tuple[int, ...], tuple[np.ndarray, ...]]

    def outcomes(self) -> list[tuple[int, ...]]:
        return list(self.branches)

    def branch(self, outcome: tuple[int, ...]) -> QChannel:
        return QChannel(self.dom, self.cod, self.d, self.branches[outcome])

    def total(self) -> QChannel:
        ks = [k for b in self.branches.values() for k in b]
        return QChannel(self.dom, self.cod, self.d, tuple(ks))

    def probabilities(self, rho: np.ndarray) -> dict[tuple[int, ...], float]:
        return {
            o: float(np.real(sum(np.trace(k @ rho @ k.conj().T) for k in ks)))
            for o, ks in self.branches.items()
        }

    def apply(self, rho: np.ndarray) -> dict[tuple[int, ...], np.ndarray]:
        return {o: sum(k @ rho @ k.conj().T for k in ks) for o, ks in self.branches.items()}


def encoder(scheme: ErrorScheme) -> QChannel:
    g = scheme.graph
    return QChannel(g.I, g.J, g.d, (scheme.isometry((0,) * len(g.L)).mat,))


def syndrome_channel(scheme: ErrorScheme) -> Instrument:
    g = scheme.graph
    branches = {key: (scheme.isometry(key).mat.conj().T,) for key in scheme.syndrome_table}
    return Instrument(g.J, g.I, g.d, branches)


@dataclass(frozen=True, eq=False)
class CorrectionMap:
    """Per-syndrome unitary applied after the measurement."""

    scheme: ErrorScheme

    def unitary(self, outcome: tuple[int, ...]) -> np.ndarray:
        return correction_op(self.scheme.correction_for(outcome)).mat.conj().T

    def is_leftover(self, outcome: tuple[int, ...]) -> bool:
        return self.scheme.syndrome_table[tuple(outcome)] is None

    def apply(self, outcome: tuple[int, ...], rho: np.ndarray) -> np.ndarray:
        u = self.unitary(outcome)
        return u @ rho @ u.conj().T


def correction_channel(scheme: ErrorScheme) -> CorrectionMap:
    return CorrectionMap(scheme)


def decoder(scheme: ErrorScheme) -> QChannel:
    g = scheme.graph
    corr = CorrectionMap(scheme)
    ks = tuple(corr.unitary(key) @ scheme.isometry(key).mat.conj().T for key in scheme.syndrome_table)
    return QChannel(g.J, g.I, g.d, ks)


@dataclass(frozen=True, eq=False)
class NoiseChannel(QChannel):
    """Noise ``rho -> sum t[x, y] w_y rho w_x^*`` over a list of error labels."""

    errors: tuple[PhaseVec, ...] = ()
    tmat: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))


def _error_ops(errors: Sequence[PhaseVec], scheme: ErrorScheme | None) -> list[np.ndarray]:
    if scheme is None:
        return [weyl(xi).mat for xi in errors]
    return [error_basis_op(scheme.graph, xi).mat for xi in errors]


def noise_from_matrix(
    tmat: np.ndarray,
    errors: Sequence[PhaseVec],
    scheme: ErrorScheme | None = None,
    atol: float = ATOL,
) -> NoiseChannel:
    """Noise channel from a positive coefficient matrix.

    With a scheme the operators are the scheme's error basis, otherwise the
    bare Weyl operators.  The matrix is rescaled to unit trace, which makes
    the map trace-preserving on average; exact trace preservation holds
    when ``sum t[x, y] w_x^* w_y`` is the identity.
    """
    errors = tuple(errors)
    if not errors:
        raise ChannelError("empty error list")
    labels = errors[0].labels
    d = errors[0].d
    if any(xi.labels != labels or xi.d != d for xi in errors):
        raise ChannelError("errors must share one register")
    if len(set(errors)) != len(errors):
        raise ChannelError("duplicate error labels")
    t = np.asarray(tmat, dtype=complex)
    if t.shape != (len(errors), len(errors)):
        raise ChannelError("coefficient matrix does not match error list")
    if np.abs(t - t.conj().T).max() > atol:
        raise ChannelError("coefficient matrix is not Hermitian")
    t = (t + t.conj().T) / 2
    lam, u = np.linalg.eigh(t)
    if lam.min() < -atol:
        raise ChannelError(f"coefficient matrix is not positive (eigenvalue {lam.min():.3g})")
    tr = float(np.real(np.trace(t)))
    if tr <= atol:
        raise ChannelError("coefficient matrix has zero trace")
    t, lam = t / tr, lam / tr
    ops = np.stack(_error_ops(errors, scheme))
    ks = tuple(
        np.sqrt(l) * np.tensordot(u[:, k].conj(), ops, axes=1)
        for k, l in enumerate(lam)
        if l > 1e-15
    )
    return NoiseChannel(labels, labels, d, ks, errors, t)


def weyl_diagonal_noise(
    probs: Mapping[PhaseVec, float], scheme: ErrorScheme | None = None, atol: float = ATOL
) -> NoiseChannel:
    """Generalized Pauli channel with Kraus ``sqrt(p) w(xi)``."""
    items = [(xi, float(p)) for xi, p in probs.items()]
    if any(p < -atol for _, p in items):
        raise ChannelError("negative probability")
    total = sum(p for _, p in items)
    if abs(total - 1.0) > atol:
        raise ChannelError(f"probabilities sum to {total}, not 1")
    errors = tuple(xi for xi, _ in items)
    t = np.diag([max(p, 0.0) for _, p in items]).astype(complex)
    return noise_from_matrix(t, errors, scheme, atol)


def random_psd_noise(scheme: ErrorScheme, rng: np.random.Generator, rank: int | None = None) -> NoiseChannel:
    """Random member of the correctable noise class (Ginibre coefficient matrix)."""
    errors = scheme.errors
    n = len(errors)
    r = rank or n
    a = rng.normal(size=(n, r)) + 1j * rng.normal(size=(n, r))
    return noise_from_matrix(a @ a.conj().T, errors, scheme)


@dataclass(frozen=True)
class ChannelDistance:
    """Computable stand-in for the cb-norm distance."""

    basis_max: float
    weyl_l1: float | None = None

    @property
    def proxy(self) -> float:
        return self.weyl_l1 if self.weyl_l1 is not None else self.basis_max


def channel_distance(t1: QChannel, t2: QChannel, atol: float = ATOL) -> ChannelDistance:
    if (t1.dom, t1.cod, t1.d) != (t2.dom, t2.cod, t2.d):
        raise ChannelError("channels act on different registers")
    norm = np.sqrt(t1.dim_in)
    worst = 0.0
    for xi in weyl_basis(t1.dom, t1.d):
        w = weyl(xi).mat
        worst = max(worst, float(np.linalg.norm(t1.apply(w) - t2.apply(w))) / norm)
    l1 = None
    if t1.dom == t1.cod:
        p1, p2 = t1.weyl_probabilities(atol), t2.weyl_probabilities(atol)
        if p1 is not None and p2 is not None:
            l1 = float(np.abs(p1 - p2).sum())
    return ChannelDistance(worst, l1)


def _span_residual(k: np.ndarray, ops: np.ndarray) -> float:
    dim = k.shape[1]
    coeff = np.tensordot(ops.conj(), k, axes=([1, 2], [0, 1])) / dim
    return float(np.linalg.norm(k - np.tensordot(coeff, ops, axes=1)))


def verify_theorem1(scheme: ErrorScheme, noise: QChannel, atol: float = ATOL) -> float:
    """Largest Frobenius deviation of ``D(T(E(e_ij)))`` from ``e_ij`` over matrix units."""
    g = scheme.graph
    if noise.dom != g.J or noise.cod != g.J:
        raise ChannelError("noise must act on the output register")
    if isinstance(noise, NoiseChannel) and noise.errors:
        heavy = [xi for xi in noise.errors if xi.weight > scheme.t]
        if heavy:
            raise ChannelError(f"noise contains errors of weight > t: {heavy[0].to_json()}")
    else:
        ops = np.stack(_error_ops(scheme.errors, None))
        for k in noise.kraus:
            if _span_residual(k, ops) > 1e-8:
                raise ChannelError("noise Kraus operator leaves the span of correctable errors")
    v = encoder(scheme).kraus[0]
    dec = decoder(scheme)
    dim = v.shape[1]
    # Kraus family of D o T o E, each member a dim x dim matrix
    encoded = np.stack([k @ v for k in noise.kraus])
    sup = np.zeros((dim * dim, dim * dim), dtype=complex)
    for dk in dec.kraus:
        for m in np.einsum("ij,kjl->kil", dk, encoded):
            sup += np.kron(m, m.conj())
    # column (a, b) of sup - 1 is vec(D T E(e_ab) - e_ab)
    return float(np.max(np.linalg.norm(sup - np.eye(dim * dim), axis=0)))


def _xi_json(obj, labels, d) -> PhaseVec:
    if not isinstance(obj, dict) or set(obj) != {"p", "q"}:
        raise ChannelError(f"phase-space point must be {{'p', 'q'}}, got {obj!r}")
    if len(obj["p"]) != len(labels) or len(obj["q"]) != len(labels):
        raise ChannelError("phase-space point has the wrong length")
    return PhaseVec.from_json(obj, labels, d)


def parse_noise(obj: dict | str, scheme: ErrorScheme) -> NoiseChannel:
    """Noise channel on the scheme's output register from its JSON description."""
    if isinstance(obj, str):
        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise ChannelError(f"invalid JSON: {exc}") from exc
    g = scheme.graph
    kind = obj.get("kind") if isinstance(obj, dict) else None
    if kind == "weyl_diagonal":
        t = int(obj.get("t", scheme.t))
        probs: dict[PhaseVec, float] = {}
        for entry in obj["probs"]:
            xi = _xi_json(entry["xi"], g.J, g.d)
            if xi.weight > t:
                raise ChannelError(f"error {xi.to_json()} heavier than t={t}")
            probs[xi] = probs.get(xi, 0.0) + float(entry["p"])
        return weyl_diagonal_noise(probs, scheme)
    if kind == "psd":
        errors = [_xi_json(x, g.J, g.d) for x in obj["labels"]]
        rows = obj["matrix"]
        try:
            t = np.array([[complex(e[0], e[1]) for e in row] for row in rows])
        except (TypeError, IndexError) as exc:
            raise ChannelError("matrix entries must be [re, im] pairs") from exc
        return noise_from_matrix(t, errors, scheme)
    raise ChannelError(f"unknown noise kind {kind!r}")


def noise_to_json(noise: NoiseChannel) -> dict:
    t = noise.tmat
    if np.allclose(t, np.diag(np.diag(t))):
        return {
            "kind": "weyl_diagonal",
            "t": max((xi.weight for xi in noise.errors), default=0),
            "probs": [{"xi": xi.to_json(), "p": float(np.real(t[k, k]))} for k, xi in enumerate(noise.errors)],
        }
    return {
        "kind": "psd",
        "labels": [xi.to_json() for xi in noise.errors],
        "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in t],
    }

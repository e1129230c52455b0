"""Coding graphs: vertex partition, admissibility, t-error-correction, search.

A coding graph is a symmetric zero-diagonal adjacency ``Lam`` over the
disjoint union of input vertices ``I``, output vertices ``J`` and syndrome
vertices ``L``.  It is *admissible* when the square block ``Lam^J_{IL}`` is
invertible and there are no edges inside ``I u L``.  It corrects ``t``
errors when for every ``E`` in ``J`` with ``|E| <= 2t`` each kernel vector
``q^{IE}`` of ``Lam^{J\\E}_{IE}`` has ``q^I = 0`` and ``Lam^I_E q^E = 0``.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .ffield import FieldError, FMat, FVec, SingularMatrixError, invert_block, is_prime, kernel_basis

__all__ = [
    "GraphFormatError",
    "CodingGraph",
    "AdmissibilityReport",
    "TECReport",
    "check_admissible",
    "check_t_error_correcting",
    "search_graph",
    "default_labels",
]


class GraphFormatError(ValueError):
    """Malformed graph description."""


def default_labels(n_in: int, n_out: int, n_syn: int) -> tuple[tuple[str, ...], ...]:
    return (
        tuple(f"i{k}" for k in range(n_in)),
        tuple(f"j{k}" for k in range(n_out)),
        tuple(f"l{k}" for k in range(n_syn)),
    )


@dataclass(frozen=True, eq=False)
class CodingGraph:
    I: tuple[str, ...]
    J: tuple[str, ...]
    L: tuple[str, ...]
    lam: FMat
    d: int

    def __post_init__(self) -> None:
        I, J, L = tuple(self.I), tuple(self.J), tuple(self.L)
        object.__setattr__(self, "I", I)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "L", L)
        verts = I + J + L
        if len(set(verts)) != len(verts):
            raise GraphFormatError("vertex classes must be disjoint and free of duplicates")
        if not is_prime(self.d):
            raise GraphFormatError(f"modulus {self.d} is not prime")
        if self.lam.modulus != self.d:
            raise GraphFormatError("adjacency modulus mismatch")
        if self.lam.rows != self.lam.cols or set(self.lam.rows) != set(verts):
            raise GraphFormatError("adjacency must be indexed by I u J u L")
        lam = self.lam.block(verts, verts) if self.lam.rows != verts else self.lam
        if not np.array_equal(lam.values, lam.values.T):
            raise GraphFormatError("adjacency must be symmetric")
        if np.any(np.diag(lam.values)):
            raise GraphFormatError("adjacency must have zero diagonal")
        object.__setattr__(self, "lam", lam)

    @property
    def vertices(self) -> tuple[str, ...]:
        return self.I + self.J + self.L

    def block(self, rows: Sequence[str], cols: Sequence[str]) -> FMat:
        return self.lam.block(rows, cols)

    @classmethod
    def from_edges(
        cls,
        d: int,
        inputs: Sequence[str],
        outputs: Sequence[str],
        syndromes: Sequence[str],
        edges: Iterable[Sequence],
    ) -> CodingGraph:
        verts = tuple(inputs) + tuple(outputs) + tuple(syndromes)
        if len(set(verts)) != len(verts):
            raise GraphFormatError("vertex classes must be disjoint and free of duplicates")
        pos = {v: k for k, v in enumerate(verts)}
        mat = np.zeros((len(verts), len(verts)), dtype=np.int64)
        seen: set[frozenset] = set()
        for edge in edges:
            if len(edge) != 3:
                raise GraphFormatError(f"edge {edge!r} must be [u, v, weight]")
            u, v, w = edge
            if u not in pos or v not in pos:
                raise GraphFormatError(f"edge {edge!r} uses an unknown vertex")
            if u == v:
                raise GraphFormatError(f"self-loop at {u}")
            key = frozenset((u, v))
            if key in seen:
                raise GraphFormatError(f"duplicate edge {u}-{v}")
            seen.add(key)
            if isinstance(w, bool) or not isinstance(w, (int, np.integer)) or not 1 <= w < d:
                raise GraphFormatError(f"edge weight {w!r} must be an integer in [1, {d})")
            mat[pos[u], pos[v]] = mat[pos[v], pos[u]] = w
        return cls(tuple(inputs), tuple(outputs), tuple(syndromes), FMat(verts, verts, mat, d), d)

    def edges(self) -> list[list]:
        verts, m = self.vertices, self.lam.values
        return [
            [verts[a], verts[b], int(m[a, b])]
            for a in range(len(verts))
            for b in range(a + 1, len(verts))
            if m[a, b]
        ]

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "inputs": list(self.I),
            "outputs": list(self.J),
            "syndromes": list(self.L),
            "edges": self.edges(),
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> CodingGraph:
        if isinstance(obj, str):
            try:
                obj = json.loads(obj)
            except json.JSONDecodeError as exc:
                raise GraphFormatError(f"invalid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise GraphFormatError("graph spec must be a JSON object")
        missing = {"d", "inputs", "outputs", "syndromes", "edges"} - obj.keys()
        if missing:
            raise GraphFormatError(f"missing keys {sorted(missing)}")
        d = obj["d"]
        if not isinstance(d, int) or not is_prime(d):
            raise GraphFormatError(f"d={d!r} must be a prime integer")
        for key in ("inputs", "outputs", "syndromes"):
            if not isinstance(obj[key], list) or not all(isinstance(x, str) for x in obj[key]):
                raise GraphFormatError(f"{key} must be a list of strings")
        return cls.from_edges(d, obj["inputs"], obj["outputs"], obj["syndromes"], obj["edges"])

    def canonical_json(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))

    def graph_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def relabel(self, mapping: dict[str, str]) -> CodingGraph:
        m = lambda xs: tuple(mapping.get(x, x) for x in xs)  # noqa: E731
        verts = m(self.vertices)
        return CodingGraph(m(self.I), m(self.J), m(self.L), FMat(verts, verts, self.lam.values, self.d), self.d)

    def permuted(self, I: Sequence[str], J: Sequence[str], L: Sequence[str]) -> CodingGraph:
        """Same graph with the vertex order inside each class changed."""
        verts = tuple(I) + tuple(J) + tuple(L)
        return CodingGraph(tuple(I), tuple(J), tuple(L), self.lam.block(verts, verts), self.d)


@dataclass(frozen=True)
class AdmissibilityReport:
    ok: bool
    inverse: FMat | None = None
    reason: str | None = None


def check_admissible(g: CodingGraph) -> AdmissibilityReport:
    IL = g.I + g.L
    if len(g.J) != len(IL):
        return AdmissibilityReport(False, None, f"|J|={len(g.J)} differs from |I|+|L|={len(IL)}")
    inner = g.block(IL, IL)
    if not inner.is_zero():
        r, c = np.argwhere(inner.values)[0]
        return AdmissibilityReport(False, None, f"forbidden edge {IL[r]}-{IL[c]} inside I u L")
    try:
        inv = invert_block(g.block(g.J, IL))
    except SingularMatrixError:
        return AdmissibilityReport(False, None, "block Lam^J_{IL} is singular")
    return AdmissibilityReport(True, inv, None)


@dataclass(frozen=True)
class TECReport:
    ok: bool
    t: int
    subsets_checked: int
    witness_E: tuple[str, ...] | None = None
    witness_q: FVec | None = None
    reason: str | None = None


def _subset_violation(g: CodingGraph, E: tuple[str, ...]) -> tuple[FVec, str] | None:
    rest = tuple(j for j in g.J if j not in E)
    IE = g.I + E
    lam_IE = g.block(g.I, E)
    for v in kernel_basis(g.block(rest, IE)):
        qI, qE = v.restrict(g.I), v.restrict(E)
        if not qI.is_zero():
            return v, "kernel vector with nonzero input part"
        if E and not (lam_IE @ qE).is_zero():
            return v, "kernel vector with Lam^I_E q^E != 0"
    return None


def check_t_error_correcting(g: CodingGraph, t: int, threads: int = 1) -> TECReport:
    """Certify the subset condition for all ``E`` with ``|E| <= 2t``.

    The first violation in enumeration order (by size, then lexicographic)
    is reported, independent of ``threads``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    subsets = [E for k in range(min(2 * t, len(g.J)) + 1) for E in itertools.combinations(g.J, k)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda E: _subset_violation(g, E), subsets))
    else:
        results = [_subset_violation(g, E) for E in subsets]
    for E, res in zip(subsets, results):
        if res is not None:
            return TECReport(False, t, len(subsets), E, res[0], res[1])
    return TECReport(True, t, len(subsets))


def _candidate_pairs(I, J, L) -> list[tuple[str, str]]:
    pairs = [(i, j) for i in I for j in J]
    pairs += list(itertools.combinations(J, 2))
    pairs += [(j, l) for j in J for l in L]
    return pairs


def _graph_from_weights(d, I, J, L, pairs, weights) -> CodingGraph:
    verts = I + J + L
    pos = {v: k for k, v in enumerate(verts)}
    mat = np.zeros((len(verts), len(verts)), dtype=np.int64)
    for (u, v), w in zip(pairs, weights):
        mat[pos[u], pos[v]] = mat[pos[v], pos[u]] = w
    return CodingGraph(I, J, L, FMat(verts, verts, mat, d), d)


def search_graph(
    d: int,
    n_in: int,
    n_out: int,
    t: int,
    budget: int = 10_000,
    seed: int = 0,
    labels: tuple[Sequence[str], Sequence[str], Sequence[str]] | None = None,
) -> CodingGraph | None:
    """Find an admissible ``t``-error-correcting graph, or ``None``.

    Up to 12 candidate edges the weight space is enumerated in a fixed
    order; beyond that each attempt samples the ``I-J`` and ``J-J`` weights
    (which alone decide t-correction), and, if those pass, a few ``J-L``
    completions until the square block is invertible.  ``budget`` bounds the
    number of graphs examined.
    """
    if not is_prime(d):
        raise FieldError(f"modulus {d} is not prime")
    n_syn = n_out - n_in
    if n_syn < 0:
        return None
    I, J, L = (tuple(x) for x in (labels or default_labels(n_in, n_out, n_syn)))
    if (len(I), len(J), len(L)) != (n_in, n_out, n_syn):
        raise ValueError("labels do not match the requested sizes")
    pairs = _candidate_pairs(I, J, L)

    def accept(g: CodingGraph) -> bool:
        return check_admissible(g).ok and check_t_error_correcting(g, t).ok

    if len(pairs) <= 12:
        for k, weights in enumerate(itertools.product(range(d), repeat=len(pairs))):
            if k >= budget:
                return None
            g = _graph_from_weights(d, I, J, L, pairs, weights)
            if accept(g):
                return g
        return None

    rng = np.random.default_rng(seed)
    n_code = len(I) * len(J) + len(J) * (len(J) - 1) // 2
    n_syn_edges = len(pairs) - n_code
    examined = 0
    while examined < budget:
        code_w = rng.integers(0, d, size=n_code)
        examined += 1
        probe = _graph_from_weights(d, I, J, (), pairs[:n_code], code_w)
        if not check_t_error_correcting(probe, t).ok:
            continue
        for _ in range(8):
            syn_w = rng.integers(0, d, size=n_syn_edges)
            g = _graph_from_weights(d, I, J, L, pairs, np.concatenate([code_w, syn_w]))
            examined += 1
            if check_admissible(g).ok:
                return g
            if examined >= budget:
                break
    return None

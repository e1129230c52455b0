"""Exact arithmetic and linear algebra over a prime field F_d.

Vectors and matrices carry vertex labels so that sub-blocks can be
addressed by label sets (``M.block(rows, cols)``).  All linear algebra is
plain Gaussian elimination with first-nonzero pivoting, which keeps kernel
bases deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "FieldError",
    "SingularMatrixError",
    "FScalar",
    "FVec",
    "FMat",
    "is_prime",
    "field_arith",
    "rref",
    "rank",
    "solve_linear",
    "kernel_basis",
    "invert_block",
    "solve_mod",
    "nullspace_mod",
    "inv_mod",
]


class FieldError(ValueError):
    """Invalid field operation (modulus mismatch, inverse of zero, bad labels)."""


class SingularMatrixError(FieldError):
    """Raised when a square block has no inverse over F_d."""


def is_prime(d: int) -> bool:
    if d < 2:
        return False
    f = 2
    while f * f <= d:
        if d % f == 0:
            return False
        f += 1
    return True


def _check_modulus(d: int) -> int:
    d = int(d)
    if not is_prime(d):
        raise FieldError(f"modulus {d} is not prime")
    return d


@dataclass(frozen=True)
class FScalar:
    value: int
    modulus: int

    def __post_init__(self) -> None:
        d = _check_modulus(self.modulus)
        object.__setattr__(self, "modulus", d)
        object.__setattr__(self, "value", int(self.value) % d)

    def _other(self, other: FScalar | int) -> int:
        if isinstance(other, FScalar):
            if other.modulus != self.modulus:
                raise FieldError(f"modulus mismatch: {self.modulus} vs {other.modulus}")
            return other.value
        return int(other)

    def __add__(self, other: FScalar | int) -> FScalar:
        return FScalar(self.value + self._other(other), self.modulus)

    __radd__ = __add__

    def __sub__(self, other: FScalar | int) -> FScalar:
        return FScalar(self.value - self._other(other), self.modulus)

    def __mul__(self, other: FScalar | int) -> FScalar:
        return FScalar(self.value * self._other(other), self.modulus)

    __rmul__ = __mul__

    def __neg__(self) -> FScalar:
        return FScalar(-self.value, self.modulus)

    def inverse(self) -> FScalar:
        if self.value == 0:
            raise FieldError("inverse of zero")
        return FScalar(pow(self.value, -1, self.modulus), self.modulus)

    def __int__(self) -> int:
        return self.value


def field_arith(a: FScalar, b: FScalar | None, op: str) -> FScalar:
    """Apply ``op`` in {"add", "mul", "neg", "inv"}; unary ops ignore ``b``."""
    if op == "neg":
        return -a
    if op == "inv":
        return a.inverse()
    if b is None:
        raise FieldError(f"operation {op!r} needs two operands")
    if a.modulus != b.modulus:
        raise FieldError(f"modulus mismatch: {a.modulus} vs {b.modulus}")
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise FieldError(f"unknown operation {op!r}")


# ---------------------------------------------------------------------------
# raw array routines (integer numpy arrays, entries reduced mod d)


def rref(a: np.ndarray, d: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form mod ``d`` and the list of pivot columns."""
    m = np.array(a, dtype=np.int64) % d
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            m[[r, k]] = m[[k, r]]
        m[r] = (m[r] * pow(int(m[r, c]), -1, d)) % d
        for i in range(rows):
            if i != r and m[i, c]:
                m[i] = (m[i] - m[i, c] * m[r]) % d
        pivots.append(c)
        r += 1
    return m, pivots


def solve_mod(a: np.ndarray, b: np.ndarray, d: int) -> np.ndarray | None:
    """A particular solution of ``a x = b`` mod ``d`` (free variables set to 0)."""
    a = np.atleast_2d(np.asarray(a, dtype=np.int64))
    rows, cols = a.shape
    aug = np.concatenate([a, np.asarray(b, dtype=np.int64).reshape(rows, 1)], axis=1)
    r, pivots = rref(aug, d)
    if cols in pivots:
        return None
    x = np.zeros(cols, dtype=np.int64)
    for i, c in enumerate(pivots):
        x[c] = r[i, cols]
    return x


def nullspace_mod(a: np.ndarray, d: int) -> list[np.ndarray]:
    """Basis of the kernel of ``a`` mod ``d``, one vector per free column."""
    a = np.atleast_2d(np.asarray(a, dtype=np.int64))
    rows, cols = a.shape
    if rows == 0:
        return [np.eye(cols, dtype=np.int64)[k] for k in range(cols)]
    r, pivots = rref(a, d)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        x = np.zeros(cols, dtype=np.int64)
        x[f] = 1
        for i, c in enumerate(pivots):
            x[c] = (-r[i, f]) % d
        basis.append(x)
    return basis


def inv_mod(a: np.ndarray, d: int) -> np.ndarray:
    a = np.asarray(a, dtype=np.int64)
    n, m = a.shape
    if n != m:
        raise FieldError(f"cannot invert a {n}x{m} block")
    r, pivots = rref(np.concatenate([a, np.eye(n, dtype=np.int64)], axis=1), d)
    if pivots[:n] != list(range(n)):
        raise SingularMatrixError("block is singular over F_%d" % d)
    return r[:, n:].copy()


# ---------------------------------------------------------------------------
# labeled containers


def _labels(labels: Iterable[str]) -> tuple[str, ...]:
    out = tuple(str(x) for x in labels)
    if len(set(out)) != len(out):
        raise FieldError(f"duplicate labels in {out}")
    return out


@dataclass(frozen=True, eq=False)
class FVec:
    """A register configuration over labeled sites."""

    labels: tuple[str, ...]
    values: np.ndarray
    modulus: int

    def __post_init__(self) -> None:
        d = _check_modulus(self.modulus)
        labels = _labels(self.labels)
        vals = np.asarray(self.values, dtype=np.int64).reshape(-1) % d
        if vals.shape[0] != len(labels):
            raise FieldError(f"{len(labels)} labels but {vals.shape[0]} entries")
        vals.setflags(write=False)
        object.__setattr__(self, "modulus", d)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, labels: Sequence[str], d: int) -> FVec:
        return cls(tuple(labels), np.zeros(len(labels), dtype=np.int64), d)

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, label: str) -> FScalar:
        return FScalar(int(self.values[self.labels.index(label)]), self.modulus)

    def restrict(self, labels: Sequence[str]) -> FVec:
        idx = [self.labels.index(x) for x in labels]
        return FVec(tuple(labels), self.values[idx], self.modulus)

    def _compatible(self, other: FVec) -> None:
        if self.modulus != other.modulus:
            raise FieldError("modulus mismatch")
        if self.labels != other.labels:
            raise FieldError(f"index mismatch: {self.labels} vs {other.labels}")

    def __add__(self, other: FVec) -> FVec:
        self._compatible(other)
        return FVec(self.labels, self.values + other.values, self.modulus)

    def __sub__(self, other: FVec) -> FVec:
        self._compatible(other)
        return FVec(self.labels, self.values - other.values, self.modulus)

    def __neg__(self) -> FVec:
        return FVec(self.labels, -self.values, self.modulus)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FVec)
            and self.modulus == other.modulus
            and self.labels == other.labels
            and bool(np.array_equal(self.values, other.values))
        )

    def __hash__(self) -> int:
        return hash((self.labels, tuple(self.values.tolist()), self.modulus))

    def is_zero(self) -> bool:
        return not self.values.any()

    def tolist(self) -> list[int]:
        return [int(x) for x in self.values]

    def __repr__(self) -> str:
        return f"FVec({dict(zip(self.labels, self.tolist()))}, d={self.modulus})"


@dataclass(frozen=True, eq=False)
class FMat:
    """A matrix over F_d with labeled rows and columns."""

    rows: tuple[str, ...]
    cols: tuple[str, ...]
    values: np.ndarray
    modulus: int

    def __post_init__(self) -> None:
        d = _check_modulus(self.modulus)
        rows, cols = _labels(self.rows), _labels(self.cols)
        vals = np.asarray(self.values, dtype=np.int64).reshape(len(rows), len(cols)) % d
        vals.setflags(write=False)
        object.__setattr__(self, "modulus", d)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "values", vals)

    @classmethod
    def identity(cls, labels: Sequence[str], d: int) -> FMat:
        return cls(tuple(labels), tuple(labels), np.eye(len(labels), dtype=np.int64), d)

    @classmethod
    def zeros(cls, rows: Sequence[str], cols: Sequence[str], d: int) -> FMat:
        return cls(tuple(rows), tuple(cols), np.zeros((len(rows), len(cols)), dtype=np.int64), d)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    def block(self, rows: Sequence[str], cols: Sequence[str]) -> FMat:
        try:
            ri = [self.rows.index(x) for x in rows]
            ci = [self.cols.index(x) for x in cols]
        except ValueError as exc:
            raise FieldError(str(exc)) from None
        return FMat(tuple(rows), tuple(cols), self.values[np.ix_(ri, ci)], self.modulus)

    @property
    def T(self) -> FMat:
        return FMat(self.cols, self.rows, self.values.T, self.modulus)

    def __matmul__(self, other: FMat | FVec) -> FMat | FVec:
        if other.modulus != self.modulus:
            raise FieldError("modulus mismatch")
        if isinstance(other, FVec):
            if other.labels != self.cols:
                raise FieldError(f"index mismatch: {self.cols} vs {other.labels}")
            return FVec(self.rows, self.values @ other.values, self.modulus)
        if other.rows != self.cols:
            raise FieldError(f"index mismatch: {self.cols} vs {other.rows}")
        return FMat(self.rows, other.cols, self.values @ other.values, self.modulus)

    def __add__(self, other: FMat) -> FMat:
        if (other.rows, other.cols, other.modulus) != (self.rows, self.cols, self.modulus):
            raise FieldError("index mismatch")
        return FMat(self.rows, self.cols, self.values + other.values, self.modulus)

    def __neg__(self) -> FMat:
        return FMat(self.rows, self.cols, -self.values, self.modulus)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, FMat)
            and (self.rows, self.cols, self.modulus) == (other.rows, other.cols, other.modulus)
            and bool(np.array_equal(self.values, other.values))
        )

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.values.tobytes(), self.modulus))

    def is_zero(self) -> bool:
        return not self.values.any()

    def tolist(self) -> list[list[int]]:
        return self.values.tolist()

    def __repr__(self) -> str:
        return f"FMat(rows={self.rows}, cols={self.cols}, d={self.modulus},\n{self.values})"


def rank(m: FMat) -> int:
    return len(rref(m.values, m.modulus)[1])


def solve_linear(m: FMat, b: FVec) -> FVec | None:
    """Some ``x`` with ``m @ x == b``, or ``None`` if the system is inconsistent."""
    if b.labels != m.rows or b.modulus != m.modulus:
        raise FieldError(f"index mismatch: {m.rows} vs {b.labels}")
    x = solve_mod(m.values, b.values, m.modulus)
    return None if x is None else FVec(m.cols, x, m.modulus)


def kernel_basis(m: FMat) -> list[FVec]:
    return [FVec(m.cols, v, m.modulus) for v in nullspace_mod(m.values, m.modulus)]


def invert_block(m: FMat) -> FMat:
    """Inverse of a square block; rows of the result are labeled by ``m.cols``."""
    return FMat(m.cols, m.rows, inv_mod(m.values, m.modulus), m.modulus)

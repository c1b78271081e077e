"""Exact linear algebra over the rationals.

Everything downstream (constraint chains, bracket matrices, symplectic
integration) needs rank, nullspace, and solve decisions that are *decisions*,
not float heuristics.  This module provides a small immutable dense matrix
type over ``fractions.Fraction`` with a fraction-free (Bareiss) elimination
core and deterministic pivoting, so repeated runs produce bit-identical
bases.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

Rat = Fraction

__all__ = [
    "Rat",
    "Mat",
    "InfeasibleError",
    "SingularError",
    "hstack",
    "vstack",
    "kron",
    "rref",
    "rank",
    "null_space",
    "solve",
    "inverse",
]


class InfeasibleError(ValueError):
    """Raised when a linear system has no solution."""


class SingularError(ValueError):
    """Raised when a matrix required to be invertible is not."""


def _as_rat(x) -> Rat:
    if isinstance(x, Rat):
        return x
    if isinstance(x, int):
        return Rat(x)
    if isinstance(x, str):
        return Rat(x)
    if isinstance(x, float):
        raise TypeError("floats are not allowed; use Fraction or int")
    return Rat(x)


class Mat:
    """Immutable dense matrix of Fractions, row-major."""

    __slots__ = ("_rows", "rows", "cols")

    def __init__(self, rows: Iterable[Iterable]):
        data = tuple(tuple(_as_rat(x) for x in row) for row in rows)
        if data:
            width = len(data[0])
            if any(len(r) != width for r in data):
                raise ValueError("ragged rows")
        else:
            width = 0
        object.__setattr__(self, "_rows", data)
        object.__setattr__(self, "rows", len(data))
        object.__setattr__(self, "cols", width)

    def __setattr__(self, name, value):
        raise AttributeError("Mat is immutable")

    def __reduce__(self):
        # default slot pickling would go through the blocked __setattr__
        return (Mat, (self.tolist(),))

    # -- constructors ------------------------------------------------------

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Mat":
        z = Rat(0)
        return cls([[z] * cols for _ in range(rows)])

    @classmethod
    def eye(cls, n: int) -> "Mat":
        return cls([[Rat(1) if i == j else Rat(0) for j in range(n)] for i in range(n)])

    @classmethod
    def diag(cls, values: Sequence) -> "Mat":
        vals = [_as_rat(v) for v in values]
        n = len(vals)
        return cls([[vals[i] if i == j else Rat(0) for j in range(n)] for i in range(n)])

    @classmethod
    def column(cls, values: Sequence) -> "Mat":
        return cls([[v] for v in values])

    @classmethod
    def row_vector(cls, values: Sequence) -> "Mat":
        return cls([list(values)])

    # -- access ------------------------------------------------------------

    def __getitem__(self, key):
        i, j = key
        return self._rows[i][j]

    def row(self, i: int) -> tuple:
        return self._rows[i]

    def col(self, j: int) -> tuple:
        return tuple(r[j] for r in self._rows)

    def tolist(self) -> list:
        return [list(r) for r in self._rows]

    def take_rows(self, indices: Sequence[int]) -> "Mat":
        return Mat([self._rows[i] for i in indices])

    def take_cols(self, indices: Sequence[int]) -> "Mat":
        return Mat([[r[j] for j in indices] for r in self._rows])

    # -- algebra -----------------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, Mat) and self._rows == other._rows

    def __hash__(self):
        return hash(self._rows)

    def __neg__(self) -> "Mat":
        return Mat([[-x for x in r] for r in self._rows])

    def __add__(self, other: "Mat") -> "Mat":
        self._check_same_shape(other)
        return Mat([[a + b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)])

    def __sub__(self, other: "Mat") -> "Mat":
        self._check_same_shape(other)
        return Mat([[a - b for a, b in zip(r, s)] for r, s in zip(self._rows, other._rows)])

    def __mul__(self, other):
        if isinstance(other, Mat):
            if self.cols != other.rows:
                raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
            bt = list(zip(*other._rows))
            return Mat(
                [[sum(a * b for a, b in zip(row, col)) for col in bt] for row in self._rows]
            )
        c = _as_rat(other)
        return Mat([[c * x for x in r] for r in self._rows])

    def __rmul__(self, other):
        c = _as_rat(other)
        return Mat([[c * x for x in r] for r in self._rows])

    @property
    def T(self) -> "Mat":
        return Mat(list(zip(*self._rows))) if self.rows else Mat([[] for _ in range(self.cols)])

    @property
    def shape(self) -> tuple:
        return (self.rows, self.cols)

    def is_zero(self) -> bool:
        return all(x == 0 for r in self._rows for x in r)

    def is_symmetric(self) -> bool:
        return self.rows == self.cols and all(
            self._rows[i][j] == self._rows[j][i] for i in range(self.rows) for j in range(i)
        )

    def is_antisymmetric(self) -> bool:
        return self.rows == self.cols and all(
            self._rows[i][j] == -self._rows[j][i]
            for i in range(self.rows)
            for j in range(i + 1)
        )

    def _check_same_shape(self, other: "Mat"):
        if not isinstance(other, Mat) or self.shape != other.shape:
            raise ValueError("shape mismatch")

    def __repr__(self):
        body = "; ".join(" ".join(str(x) for x in r) for r in self._rows)
        return f"Mat[{self.rows}x{self.cols}]({body})"


def hstack(*mats: Mat) -> Mat:
    rows = mats[0].rows
    if any(m.rows != rows for m in mats):
        raise ValueError("row count mismatch")
    return Mat([sum((list(m.row(i)) for m in mats), []) for i in range(rows)])


def vstack(*mats: Mat) -> Mat:
    cols = mats[0].cols
    if any(m.cols != cols for m in mats):
        raise ValueError("column count mismatch")
    out = []
    for m in mats:
        out.extend(m.tolist())
    return Mat(out)


def kron(a: Mat, b: Mat) -> Mat:
    out = []
    for i in range(a.rows):
        for k in range(b.rows):
            out.append([a[i, j] * b[k, l] for j in range(a.cols) for l in range(b.cols)])
    return Mat(out)


def _bareiss_echelon(m: Mat):
    """Fraction-free row echelon form.

    Rows are scaled to integers, then eliminated with Bareiss' exact-division
    rule (the previous pivot divides every 2x2 cross term), which keeps the
    intermediate integers from exploding the way naive cross-multiplication
    does.  Pivot choice is the first row with a nonzero entry in the leading
    undecided column, so the result is deterministic.

    Returns (int rows as list of lists, pivot list of (row, col)).
    """
    a = []
    for r in m.tolist():
        scale = 1
        for x in r:
            scale = scale * x.denominator // _gcd(scale, x.denominator)
        a.append([int(x * scale) for x in r])
    nr, nc = m.rows, m.cols
    pivots = []
    prev = 1
    row = 0
    for col in range(nc):
        if row == nr:
            break
        sel = None
        for i in range(row, nr):
            if a[i][col] != 0:
                sel = i
                break
        if sel is None:
            continue
        if sel != row:
            a[row], a[sel] = a[sel], a[row]
        piv = a[row][col]
        for i in range(row + 1, nr):
            factor = a[i][col]
            for j in range(col + 1, nc):
                a[i][j] = (piv * a[i][j] - factor * a[row][j]) // prev
            a[i][col] = 0
        prev = piv
        pivots.append((row, col))
        row += 1
    return a, pivots


def _gcd(x: int, y: int) -> int:
    while y:
        x, y = y, x % y
    return x if x >= 0 else -x


def rref(m: Mat):
    """Reduced row echelon form.

    Returns ``(R, pivot_cols)`` where R is the (unique) RREF of ``m`` and
    ``pivot_cols`` is the tuple of pivot column indices in order.
    """
    a, pivots = _bareiss_echelon(m)
    rows = [[Rat(x) for x in r] for r in a]
    for row, col in reversed(pivots):
        piv = rows[row][col]
        rows[row] = [x / piv for x in rows[row]]
        for i in range(row):
            f = rows[i][col]
            if f:
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[row])]
    return Mat(rows), tuple(col for _, col in pivots)


def rank(m: Mat) -> int:
    return len(_bareiss_echelon(m)[1])


def null_space(m: Mat) -> list:
    """Right nullspace basis as a list of column Mats.

    The basis comes from the RREF free columns, so it is canonical: each
    vector has a 1 in its free coordinate and zeros in the other free
    coordinates, ordered by free column index.
    """
    r, piv = rref(m)
    pivset = set(piv)
    basis = []
    for free in range(m.cols):
        if free in pivset:
            continue
        v = [Rat(0)] * m.cols
        v[free] = Rat(1)
        for row, col in enumerate(piv):
            v[col] = -r[row, free]
        basis.append(Mat.column(v))
    return basis


def solve(m: Mat, b: Mat):
    """Solve ``m x = b`` exactly.

    Returns ``(particular, nullbasis)``; raises :class:`InfeasibleError` when
    the system is inconsistent.  ``b`` must be a column.
    """
    if b.cols != 1 or b.rows != m.rows:
        raise ValueError("b must be a column matching m's row count")
    aug = hstack(m, b)
    r, piv = rref(aug)
    if m.cols in piv:
        raise InfeasibleError("inconsistent linear system")
    x = [Rat(0)] * m.cols
    for row, col in enumerate(piv):
        x[col] = r[row, m.cols]
    return Mat.column(x), null_space(m)


def inverse(m: Mat) -> Mat:
    if m.rows != m.cols:
        raise SingularError("not square")
    r, piv = rref(hstack(m, Mat.eye(m.rows)))
    if len(piv) != m.rows or any(p >= m.rows for p in piv):
        raise SingularError("singular matrix")
    return r.take_cols(range(m.rows, 2 * m.rows))

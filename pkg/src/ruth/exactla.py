"""
Exact rational linear algebra over sparse matrices.

Entries are Python ints or ``fractions.Fraction``; nothing is ever a float.
Elimination is fraction-free on integer rows (each input row is scaled by
the lcm of its denominators first, which does not change the row space) and
only the final reduced echelon form is brought back to rationals.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Iterable, Iterator, Mapping, Sequence

__all__ = [
    "RationalMatrix",
    "SubspaceBasis",
    "NotContained",
    "Singular",
    "DimensionMismatch",
    "to_rational",
    "rational_str",
    "rank",
    "kernel_basis",
    "image_basis",
    "span",
    "quotient_dim",
    "solve",
    "invert",
    "invert_spd",
]


class DimensionMismatch(ValueError):
    pass


class NotContained(ValueError):
    """A subspace was expected to lie inside another one but does not."""

    def __init__(self, witness):
        self.witness = witness
        super().__init__("vector %s is not contained in the ambient subspace" % (witness,))


class Singular(ValueError):
    pass


def to_rational(x):
    """Parse ints, Fractions and strings like ``"3"``, ``"-2/7"``."""
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, str):
        f = Fraction(x.strip())
        return f.numerator if f.denominator == 1 else f
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a string or Fraction")
    # numpy integer scalars and the like
    f = Fraction(x)
    return f.numerator if f.denominator == 1 else f


def rational_str(x) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return "%d/%d" % (x.numerator, x.denominator)


def _clean(v):
    if isinstance(v, Fraction) and v.denominator == 1:
        return v.numerator
    return v


class RationalMatrix:
    """Sparse matrix with exact entries, stored as ``{row: {col: value}}``.

    Only nonzero entries are stored. Instances are treated as immutable once
    built; the ``_set``/``_add`` helpers are for constructors only.
    """

    __slots__ = ("rows", "cols", "_data")

    def __init__(self, rows: int, cols: int, data: Mapping[int, Mapping[int, object]] | None = None):
        if rows < 0 or cols < 0:
            raise DimensionMismatch("negative shape (%d, %d)" % (rows, cols))
        self.rows = rows
        self.cols = cols
        self._data: dict[int, dict[int, object]] = {}
        if data:
            for i, row in data.items():
                for j, v in row.items():
                    self._add(i, j, v)

    # construction helpers -------------------------------------------------

    def _add(self, i: int, j: int, v) -> None:
        if not v:
            return
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError("entry (%d, %d) outside shape (%d, %d)" % (i, j, self.rows, self.cols))
        row = self._data.get(i)
        if row is None:
            self._data[i] = {j: _clean(v)}
            return
        w = row.get(j, 0) + v
        if w:
            row[j] = _clean(w)
        else:
            del row[j]
            if not row:
                del self._data[i]

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int, scale=1) -> "RationalMatrix":
        M = cls(n, n)
        for i in range(n):
            M._add(i, i, scale)
        return M

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[object]], ncols: int | None = None) -> "RationalMatrix":
        rows = list(rows)
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        M = cls(len(rows), ncols)
        for i, row in enumerate(rows):
            if len(row) != ncols:
                raise DimensionMismatch("ragged row %d" % i)
            for j, v in enumerate(row):
                M._add(i, j, to_rational(v))
        return M

    @classmethod
    def from_columns(cls, nrows: int, columns: Sequence[Mapping[int, object]]) -> "RationalMatrix":
        M = cls(nrows, len(columns))
        for j, col in enumerate(columns):
            for i, v in col.items():
                M._add(i, j, v)
        return M

    @classmethod
    def from_rows(cls, ncols: int, rows: Sequence[Mapping[int, object]]) -> "RationalMatrix":
        M = cls(len(rows), ncols)
        for i, row in enumerate(rows):
            for j, v in row.items():
                M._add(i, j, v)
        return M

    # access ---------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    def __getitem__(self, ij):
        i, j = ij
        return self._data.get(i, {}).get(j, 0)

    def row(self, i: int) -> dict[int, object]:
        return dict(self._data.get(i, {}))

    def row_items(self) -> Iterator[tuple[int, dict[int, object]]]:
        for i in sorted(self._data):
            yield i, self._data[i]

    def entries(self) -> Iterator[tuple[int, int, object]]:
        for i in sorted(self._data):
            row = self._data[i]
            for j in sorted(row):
                yield i, j, row[j]

    def nnz(self) -> int:
        return sum(len(r) for r in self._data.values())

    def column(self, j: int) -> dict[int, object]:
        return {i: row[j] for i, row in self._data.items() if j in row}

    def columns(self) -> list[dict[int, object]]:
        cols: list[dict[int, object]] = [{} for _ in range(self.cols)]
        for i, row in self._data.items():
            for j, v in row.items():
                cols[j][i] = v
        return cols

    def to_dense(self) -> list[list[object]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for i, row in self._data.items():
            for j, v in row.items():
                out[i][j] = v
        return out

    def is_zero(self) -> bool:
        return not self._data

    # arithmetic -----------------------------------------------------------

    def transpose(self) -> "RationalMatrix":
        T = RationalMatrix(self.cols, self.rows)
        for i, row in self._data.items():
            for j, v in row.items():
                T._data.setdefault(j, {})[i] = v
        return T

    T = property(transpose)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and self._data == other._data

    def __hash__(self):
        return hash((self.rows, self.cols, tuple(self.entries())))

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.shape != other.shape:
            raise DimensionMismatch("%s + %s" % (self.shape, other.shape))
        M = self.copy()
        for i, row in other._data.items():
            for j, v in row.items():
                M._add(i, j, v)
        return M

    def __neg__(self) -> "RationalMatrix":
        return self.scale(-1)

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        return self + (-other)

    def scale(self, c) -> "RationalMatrix":
        M = RationalMatrix(self.rows, self.cols)
        if c:
            M._data = {i: {j: _clean(v * c) for j, v in row.items()} for i, row in self._data.items()}
        return M

    def copy(self) -> "RationalMatrix":
        M = RationalMatrix(self.rows, self.cols)
        M._data = {i: dict(row) for i, row in self._data.items()}
        return M

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise DimensionMismatch("%s @ %s" % (self.shape, other.shape))
        M = RationalMatrix(self.rows, other.cols)
        odata = other._data
        for i, row in self._data.items():
            acc: dict[int, object] = {}
            for k, a in row.items():
                orow = odata.get(k)
                if not orow:
                    continue
                for j, b in orow.items():
                    acc[j] = acc.get(j, 0) + a * b
            acc = {j: _clean(v) for j, v in acc.items() if v}
            if acc:
                M._data[i] = acc
        return M

    def apply(self, vec: Mapping[int, object]) -> dict[int, object]:
        """Sparse matrix-vector product; vectors are ``{index: value}`` dicts."""
        out: dict[int, object] = {}
        if not vec:
            return out
        for i, row in self._data.items():
            s = 0
            for j, a in row.items():
                x = vec.get(j)
                if x:
                    s += a * x
            if s:
                out[i] = _clean(s)
        return out

    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "RationalMatrix":
        rpos = {r: a for a, r in enumerate(rows)}
        cpos = {c: b for b, c in enumerate(cols)}
        M = RationalMatrix(len(rows), len(cols))
        for i, row in self._data.items():
            a = rpos.get(i)
            if a is None:
                continue
            for j, v in row.items():
                b = cpos.get(j)
                if b is not None:
                    M._data.setdefault(a, {})[b] = v
        return M

    @staticmethod
    def block(blocks: Sequence[Sequence["RationalMatrix | None"]],
              row_sizes: Sequence[int], col_sizes: Sequence[int]) -> "RationalMatrix":
        """Assemble a block matrix; ``None`` blocks are zero."""
        roff = [0]
        for r in row_sizes:
            roff.append(roff[-1] + r)
        coff = [0]
        for c in col_sizes:
            coff.append(coff[-1] + c)
        M = RationalMatrix(roff[-1], coff[-1])
        for bi, brow in enumerate(blocks):
            for bj, B in enumerate(brow):
                if B is None:
                    continue
                if B.shape != (row_sizes[bi], col_sizes[bj]):
                    raise DimensionMismatch("block (%d, %d) has shape %s" % (bi, bj, B.shape))
                for i, j, v in B.entries():
                    M._add(roff[bi] + i, coff[bj] + j, v)
        return M

    def __repr__(self):
        return "RationalMatrix(%d, %d, nnz=%d)" % (self.rows, self.cols, self.nnz())

    def __str__(self):
        dense = self.to_dense()
        cells = [[rational_str(v) if v else "." for v in row] for row in dense]
        w = max([len(c) for row in cells for c in row] + [1])
        return "\n".join("[" + " ".join(c.rjust(w) for c in row) + "]" for row in cells)


# ---------------------------------------------------------------------------
# fraction-free echelon kernel


def _integer_row(row: Mapping[int, object]) -> dict[int, int]:
    """Scale a rational row to a primitive integer row with the same span."""
    den = 1
    for v in row.values():
        if isinstance(v, Fraction):
            d = v.denominator
            den = den * d // gcd(den, d)
    out: dict[int, int] = {}
    for j, v in row.items():
        if v:
            out[j] = int(v * den)
    return _primitive(out)


def _primitive(row: dict[int, int]) -> dict[int, int]:
    g = 0
    for v in row.values():
        g = gcd(g, v)
        if g == 1:
            return row
    if g > 1:
        return {j: v // g for j, v in row.items()}
    return row


class _Echelon:
    """Incremental row echelon form keyed by leading column.

    Each stored row is a primitive integer row whose smallest column is its
    pivot. Reducing a new row only ever touches columns at or right of the
    current leading entry, so the loop terminates.
    """

    __slots__ = ("pivots",)

    def __init__(self):
        self.pivots: dict[int, dict[int, int]] = {}

    def reduce(self, v: dict[int, int]) -> dict[int, int]:
        pivots = self.pivots
        while v:
            c = min(v)
            p = pivots.get(c)
            if p is None:
                return v
            a = v[c]
            b = p[c]
            g = gcd(a, b)
            ma, mb = b // g, a // g
            w: dict[int, int] = {}
            for j, x in v.items():
                w[j] = x * ma
            for j, y in p.items():
                s = w.get(j, 0) - y * mb
                if s:
                    w[j] = s
                else:
                    w.pop(j, None)
            v = _primitive(w)
        return v

    def add(self, row: Mapping[int, object]) -> bool:
        v = self.reduce(_integer_row(row))
        if not v:
            return False
        if v[min(v)] < 0:
            v = {j: -x for j, x in v.items()}
        self.pivots[min(v)] = v
        return True

    def rank(self) -> int:
        return len(self.pivots)

    def rref(self) -> list[dict[int, object]]:
        """Fully reduced echelon rows with leading entry 1, sorted by pivot."""
        order = sorted(self.pivots)
        reduced: dict[int, dict[int, object]] = {}
        for c in reversed(order):
            row: dict[int, object] = {j: Fraction(x, 1) for j, x in self.pivots[c].items()}
            lead = row[c]
            row = {j: x / lead for j, x in row.items()}
            for c2 in [j for j in row if j != c and j in reduced]:
                f = row.get(c2)
                if not f:
                    continue
                for j, y in reduced[c2].items():
                    s = row.get(j, 0) - f * y
                    if s:
                        row[j] = s
                    else:
                        row.pop(j, None)
            reduced[c] = {j: _clean(x) for j, x in row.items()}
        return [reduced[c] for c in order]


def _rows_for_rank(A: RationalMatrix) -> list[dict[int, object]]:
    rows = [r for _, r in A.row_items()]
    rows.sort(key=len)
    return rows


def rank(A: RationalMatrix) -> int:
    if A.is_zero():
        return 0
    # eliminate along whichever orientation has fewer vectors to feed in
    M = A if A.rows <= A.cols else A.transpose()
    E = _Echelon()
    r = 0
    bound = min(A.rows, A.cols)
    for row in _rows_for_rank(M):
        if E.add(row):
            r += 1
            if r == bound:
                break
    return r


# ---------------------------------------------------------------------------
# subspaces


class SubspaceBasis:
    """A subspace of Q^ambient in canonical reduced row echelon form.

    Two SubspaceBasis objects compare equal exactly when they describe the
    same subspace.
    """

    __slots__ = ("ambient", "vectors", "_pivots")

    def __init__(self, ambient: int, vectors: Iterable[Mapping[int, object]] = ()):
        E = _Echelon()
        for v in vectors:
            for j in v:
                if not 0 <= j < ambient:
                    raise DimensionMismatch("index %d outside ambient dimension %d" % (j, ambient))
            E.add(v)
        self.ambient = ambient
        self.vectors: tuple[dict[int, object], ...] = tuple(E.rref())
        self._pivots = tuple(min(v) for v in self.vectors)

    @classmethod
    def full(cls, n: int) -> "SubspaceBasis":
        return cls(n, ({i: 1} for i in range(n)))

    @classmethod
    def zero(cls, n: int) -> "SubspaceBasis":
        return cls(n)

    @property
    def dim(self) -> int:
        return len(self.vectors)

    def __len__(self):
        return len(self.vectors)

    def __eq__(self, other):
        if not isinstance(other, SubspaceBasis):
            return NotImplemented
        return self.ambient == other.ambient and self.vectors == other.vectors

    def __hash__(self):
        return hash((self.ambient, tuple(tuple(sorted(v.items())) for v in self.vectors)))

    def __repr__(self):
        return "SubspaceBasis(ambient=%d, dim=%d)" % (self.ambient, self.dim)

    def reduce(self, v: Mapping[int, object]) -> dict[int, object]:
        """Remainder of ``v`` after clearing the pivot columns of this basis."""
        w = {j: x for j, x in v.items() if x}
        for p, b in zip(self._pivots, self.vectors):
            f = w.get(p)
            if not f:
                continue
            for j, y in b.items():
                s = w.get(j, 0) - f * y
                if s:
                    w[j] = _clean(s)
                else:
                    w.pop(j, None)
        return w

    def contains(self, v: Mapping[int, object]) -> bool:
        return not self.reduce(v)

    def contains_space(self, other: "SubspaceBasis") -> bool:
        return all(self.contains(v) for v in other.vectors)

    def coordinates(self, v: Mapping[int, object]) -> list[object]:
        """Coefficients of ``v`` in this basis; raises NotContained otherwise."""
        if self.reduce(v):
            raise NotContained(dict(v))
        # in RREF the coefficient of basis vector i is the entry of v at pivot i
        return [_clean(Fraction(v.get(p, 0))) for p in self._pivots]

    def matrix(self) -> RationalMatrix:
        """Basis vectors as the columns of an ambient x dim matrix."""
        return RationalMatrix.from_columns(self.ambient, list(self.vectors))

    def __add__(self, other: "SubspaceBasis") -> "SubspaceBasis":
        if self.ambient != other.ambient:
            raise DimensionMismatch("ambient %d vs %d" % (self.ambient, other.ambient))
        return SubspaceBasis(self.ambient, list(self.vectors) + list(other.vectors))

    def intersect(self, other: "SubspaceBasis") -> "SubspaceBasis":
        """Intersection via the kernel of [A | -B]."""
        if self.ambient != other.ambient:
            raise DimensionMismatch("ambient %d vs %d" % (self.ambient, other.ambient))
        if not self.dim or not other.dim:
            return SubspaceBasis.zero(self.ambient)
        A = self.matrix()
        B = other.matrix()
        M = RationalMatrix.block([[A, -B]], [self.ambient], [self.dim, other.dim])
        K = kernel_basis(M)
        out = []
        for v in K.vectors:
            coeffs = {i: x for i, x in v.items() if i < self.dim}
            out.append(A.apply(coeffs))
        return SubspaceBasis(self.ambient, out)

    def complement_in(self, big: "SubspaceBasis") -> list[dict[int, object]]:
        """Vectors of ``big``'s basis completing this basis to a basis of ``big``."""
        if not big.contains_space(self):
            bad = next(v for v in self.vectors if not big.contains(v))
            raise NotContained(bad)
        E = _Echelon()
        for v in self.vectors:
            E.add(v)
        extra = []
        for v in big.vectors:
            if E.add(v):
                extra.append(v)
        return extra


def span(ambient: int, vectors: Iterable[Mapping[int, object]]) -> SubspaceBasis:
    return SubspaceBasis(ambient, vectors)


def image_basis(A: RationalMatrix) -> SubspaceBasis:
    """Column space of A."""
    return SubspaceBasis(A.rows, A.columns())


def kernel_basis(A: RationalMatrix) -> SubspaceBasis:
    """Null space {x : A x = 0} of A, as a canonical subspace of Q^cols."""
    E = _Echelon()
    for _, row in A.row_items():
        E.add(row)
    R = E.rref()
    pivots = [min(r) for r in R]
    pivset = set(pivots)
    vecs = []
    for f in range(A.cols):
        if f in pivset:
            continue
        v: dict[int, object] = {f: 1}
        for p, r in zip(pivots, R):
            x = r.get(f)
            if x:
                v[p] = _clean(-x)
        vecs.append(v)
    return SubspaceBasis(A.cols, vecs)


def quotient_dim(Z: SubspaceBasis, B: SubspaceBasis) -> int:
    """dim Z/B; B must lie inside Z."""
    if Z.ambient != B.ambient:
        raise DimensionMismatch("ambient %d vs %d" % (Z.ambient, B.ambient))
    for v in B.vectors:
        if not Z.contains(v):
            raise NotContained(v)
    return Z.dim - B.dim


def solve(A: RationalMatrix, b: Mapping[int, object]) -> dict[int, object] | None:
    """One exact solution x of A x = b (free variables set to zero), or None."""
    n = A.cols
    E = _Echelon()
    for i, row in A.row_items():
        aug = dict(row)
        if b.get(i):
            aug[n] = b[i]
        E.add(aug)
    for i in range(A.rows):
        if i not in A._data and b.get(i):
            E.add({n: b[i]})
    R = E.rref()
    x: dict[int, object] = {}
    for r in R:
        p = min(r)
        if p == n:
            return None
        rhs = r.get(n)
        if rhs:
            x[p] = rhs
    return x


def invert(A: RationalMatrix) -> RationalMatrix:
    """Exact inverse by Gauss-Jordan elimination; raises Singular."""
    n = A.rows
    if A.cols != n:
        raise DimensionMismatch("not square: %s" % (A.shape,))
    rows = [dict(A._data.get(i, {})) for i in range(n)]
    inv = [{i: Fraction(1)} for i in range(n)]
    for c in range(n):
        piv = None
        for r in range(c, n):
            if rows[r].get(c):
                piv = r
                break
        if piv is None:
            raise Singular("zero pivot in column %d" % c)
        rows[c], rows[piv] = rows[piv], rows[c]
        inv[c], inv[piv] = inv[piv], inv[c]
        p = Fraction(rows[c][c])
        rows[c] = {j: x / p for j, x in rows[c].items()}
        inv[c] = {j: x / p for j, x in inv[c].items()}
        for r in range(n):
            if r == c:
                continue
            f = rows[r].get(c)
            if not f:
                continue
            for src, dst in ((rows[c], rows[r]), (inv[c], inv[r])):
                for j, y in src.items():
                    s = dst.get(j, 0) - f * y
                    if s:
                        dst[j] = s
                    else:
                        dst.pop(j, None)
    return RationalMatrix.from_rows(n, inv)


def invert_spd(A: RationalMatrix) -> RationalMatrix:
    """Exact inverse of a symmetric matrix (the Laplacians here are positive
    definite); symmetry is checked, invertibility is found during elimination."""
    if A.rows != A.cols:
        raise DimensionMismatch("not square: %s" % (A.shape,))
    if A != A.transpose():
        raise ValueError("matrix is not symmetric")
    return invert(A)

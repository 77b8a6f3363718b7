"""
Graded bundles, tensors over the nerve, and the cochain complexes they act on.

A *tensor* of total degree delta from a bundle E to a bundle F assigns to each
k-string sigma a fiber map T_k(sigma): E_{s(sigma)} -> F_{t(sigma)} raising the
internal degree by delta - k. Structure families R (delta = 1), morphisms
(delta = 0) and homotopies (delta = -1) are tensors; so are E-valued cochains,
which are tensors out of the trivial line bundle (one column per string).

Fiber maps are dense numpy object arrays of exact scalars on the *total* fiber
(all degrees stacked, lowest degree first).

Signs:
    (T * U)(g_1..g_K) = sum_k (-1)^{k deg U} T_k(g_1..g_k) U_{K-k}(g_{k+1}..g_K)
    Dhat0(T)(g_1..g_{k+1}) = (-1)^{deg T} sum_{i=1}^{k} (-1)^i T(.., g_i g_{i+1}, ..)
and for cochains Dhat0 also carries the last-face term (-1)^{n}(-1)^{k+1} eta(g_1..g_k).
"""

from __future__ import annotations

import bisect
from fractions import Fraction
from typing import Mapping

import numpy as np

from .exactla import RationalMatrix, to_rational, _clean
from .groupoid import FiniteGroupoid
from .errors import DegreeViolation, TruncationViolation

__all__ = [
    "GradedBundle",
    "Tensor",
    "CochainBasis",
    "zeros",
    "eye",
    "as_matrix",
    "star",
    "dhat0",
    "scalar_cochain",
    "cochain_from_values",
    "left_mult_matrix",
    "dhat0_matrix",
    "to_rmatrix",
    "from_rmatrix",
    "dense_inverse",
]


def zeros(r: int, c: int) -> np.ndarray:
    return np.zeros((r, c), dtype=object)


def eye(n: int) -> np.ndarray:
    M = zeros(n, n)
    for i in range(n):
        M[i, i] = 1
    return M


def as_matrix(rows, shape=None) -> np.ndarray:
    """Exact object matrix from nested lists of ints/Fractions/strings."""
    rows = [[to_rational(v) for v in row] for row in rows]
    if shape is not None and not rows:
        return zeros(*shape)
    M = np.array(rows, dtype=object)
    if M.ndim != 2:
        M = M.reshape(shape if shape else (len(rows), 0))
    return M


def _simplify(M: np.ndarray) -> np.ndarray:
    """Turn integral Fractions into ints so equality and printing stay tidy."""
    for idx, v in np.ndenumerate(M):
        if isinstance(v, Fraction) and v.denominator == 1:
            M[idx] = v.numerator
    return M


def _nonzero(M: np.ndarray) -> bool:
    return M.size > 0 and bool(M.any())


class GradedBundle:
    """Dimension function (object, degree) -> n_l(x) with amplitude [a, b]."""

    def __init__(self, G: FiniteGroupoid, dims: Mapping[tuple, int], amplitude=None):
        self.G = G
        clean = {}
        for (x, l), n in dims.items():
            if n < 0:
                raise ValueError("negative fiber dimension at (%r, %r)" % (x, l))
            if not 0 <= x < G.n_objects:
                raise ValueError("object position %r out of range" % (x,))
            if n:
                clean[x, l] = int(n)
        degs = sorted({l for (_, l) in clean})
        if amplitude is None:
            amplitude = (degs[0], degs[-1]) if degs else (0, 0)
        a, b = amplitude
        if a > b:
            raise ValueError("amplitude [%d, %d] is empty" % (a, b))
        for (x, l) in clean:
            if not a <= l <= b:
                raise DegreeViolation("degree %d outside amplitude [%d, %d]" % (l, a, b))
        self.a, self.b = int(a), int(b)
        self._dims = clean
        self._offsets = {}
        self._degs = {}
        for x in range(G.n_objects):
            off = 0
            degs_x = []
            for l in range(self.a, self.b + 1):
                self._offsets[x, l] = off
                n = clean.get((x, l), 0)
                off += n
                degs_x += [l] * n
            self._degs[x] = tuple(degs_x)

    @classmethod
    def line(cls, G: FiniteGroupoid, degree: int = 0) -> "GradedBundle":
        return cls(G, {(x, degree): 1 for x in range(G.n_objects)}, (degree, degree))

    @classmethod
    def constant(cls, G: FiniteGroupoid, dims_by_degree: Mapping[int, int]) -> "GradedBundle":
        dims = {(x, l): n for x in range(G.n_objects) for l, n in dims_by_degree.items()}
        degs = sorted(dims_by_degree)
        return cls(G, dims, (degs[0], degs[-1]) if degs else (0, 0))

    @property
    def amplitude(self) -> tuple[int, int]:
        return (self.a, self.b)

    def dim(self, x: int, l: int) -> int:
        return self._dims.get((x, l), 0)

    def total(self, x: int) -> int:
        return len(self._degs[x])

    def degrees(self, x: int) -> tuple:
        return self._degs[x]

    def offset(self, x: int, l: int) -> int:
        if l < self.a:
            return 0
        if l > self.b:
            return self.total(x)
        return self._offsets[x, l]

    def block(self, x: int, l: int) -> slice:
        o = self.offset(x, l)
        return slice(o, o + self.dim(x, l))

    def dims(self) -> dict:
        return dict(self._dims)

    def __eq__(self, other):
        if not isinstance(other, GradedBundle):
            return NotImplemented
        return self.G == other.G and self.amplitude == other.amplitude and self._dims == other._dims

    def __hash__(self):
        return hash((self.amplitude, tuple(sorted(self._dims.items()))))

    def __repr__(self):
        return "GradedBundle(amplitude=[%d, %d], dims=%s)" % (self.a, self.b, self._dims)

    def is_zero(self) -> bool:
        return not self._dims

    def shift(self, s: int) -> "GradedBundle":
        """Move every fiber up by s degrees."""
        return GradedBundle(self.G, {(x, l + s): n for (x, l), n in self._dims.items()}, (self.a + s, self.b + s))

    def dual(self) -> "GradedBundle":
        return GradedBundle(self.G, {(x, -l): n for (x, l), n in self._dims.items()}, (-self.b, -self.a))

    def dual_permutation(self, x: int) -> list[int]:
        """perm[i] = index in E_x of the vector dual to basis vector i of E*_x."""
        out = []
        for l in range(self.b, self.a - 1, -1):
            o = self.offset(x, l)
            out += list(range(o, o + self.dim(x, l)))
        return out

    def direct_sum(self, other: "GradedBundle"):
        """E ⊕ F with, per object and degree, E's vectors first.

        Returns (bundle, inc_E, inc_F) where inc_* map total-fiber indices of
        a summand to total-fiber indices of the sum, per object.
        """
        dims = {}
        for (x, l), n in self._dims.items():
            dims[x, l] = dims.get((x, l), 0) + n
        for (x, l), n in other._dims.items():
            dims[x, l] = dims.get((x, l), 0) + n
        S = GradedBundle(self.G, dims, (min(self.a, other.a), max(self.b, other.b)))
        inc_e, inc_f = {}, {}
        for x in range(self.G.n_objects):
            ie, jf = [], []
            for l in range(S.a, S.b + 1):
                o = S.offset(x, l)
                ne, nf = self.dim(x, l), other.dim(x, l)
                ie += list(range(o, o + ne))
                jf += list(range(o + ne, o + ne + nf))
            inc_e[x], inc_f[x] = ie, jf
        return S, inc_e, inc_f

    def pullback(self, phi) -> "GradedBundle":
        H = phi.source
        dims = {(y, l): self.dim(phi.obj_map[y], l) for y in range(H.n_objects) for l in range(self.a, self.b + 1)}
        return GradedBundle(H, dims, self.amplitude)


# ---------------------------------------------------------------------------
# tensors


class Tensor:
    """A homogeneous family {T_k} of fiber maps indexed by strings.

    ``comps[k][sigma]`` is a matrix of shape (tgt.total(t sigma), src.total(s sigma));
    absent entries are zero. ``cochain=True`` marks E-valued cochains (the
    source is the trivial line), which changes Dhat0 by the last-face term.
    """

    def __init__(self, src: GradedBundle, tgt: GradedBundle, degree: int,
                 comps: Mapping[int, Mapping[tuple, np.ndarray]] | None = None,
                 cochain: bool = False, check: bool = True):
        if src.G is not tgt.G and src.G != tgt.G:
            raise ValueError("bundles over different groupoids")
        self.G = src.G
        self.src = src
        self.tgt = tgt
        self.degree = degree
        self.cochain = cochain
        self.comps: dict[int, dict[tuple, np.ndarray]] = {}
        if comps:
            for k, d in comps.items():
                for sigma, M in d.items():
                    self._put(k, sigma, M)
        if check:
            self.check()

    @property
    def max_k(self) -> int:
        """Largest k with a nonzero graded Hom in the target of T_k."""
        return self.degree + self.src.b - self.tgt.a

    def _put(self, k, sigma, M):
        M = np.asarray(M, dtype=object)
        if _nonzero(M):
            self.comps.setdefault(k, {})[tuple(sigma)] = M

    def get(self, k: int, sigma: tuple):
        return self.comps.get(k, {}).get(sigma)

    def value(self, k: int, sigma: tuple) -> np.ndarray:
        M = self.get(k, sigma)
        if M is None:
            G = self.G
            M = zeros(self.tgt.total(G.target(k, sigma)), self.src.total(G.source(k, sigma)))
        return M

    def check(self) -> None:
        """Shapes, string validity, and the degree/truncation constraints."""
        G = self.G
        for k, d in self.comps.items():
            for sigma, M in d.items():
                if not G.is_string(k, sigma):
                    raise DegreeViolation("not a composable %d-string: %r" % (k, sigma))
                x, y = G.source(k, sigma), G.target(k, sigma)
                if M.shape != (self.tgt.total(y), self.src.total(x)):
                    raise DegreeViolation("component %d at %r has shape %s, expected %s"
                                          % (k, G.string_ids(k, sigma), M.shape, (self.tgt.total(y), self.src.total(x))))
                if k > self.max_k or k < 0:
                    raise TruncationViolation(
                        "nonzero component at k=%d but the target Hom bundle vanishes above k=%d" % (k, self.max_k))
                shift = self.degree - k
                dt, ds = self.tgt.degrees(y), self.src.degrees(x)
                for (i, j), v in np.ndenumerate(M):
                    if v and dt[i] - ds[j] != shift:
                        raise DegreeViolation("component %d at %r has an entry of degree %d, expected %d"
                                              % (k, G.string_ids(k, sigma), dt[i] - ds[j], shift))

    # arithmetic -----------------------------------------------------------

    def _like(self, comps=None, degree=None):
        return Tensor(self.src, self.tgt, self.degree if degree is None else degree, comps,
                      cochain=self.cochain, check=False)

    def __add__(self, other: "Tensor") -> "Tensor":
        self._compatible(other)
        out = self._like()
        keys = {(k, s) for k, d in self.comps.items() for s in d} | {(k, s) for k, d in other.comps.items() for s in d}
        for k, s in keys:
            a, b = self.get(k, s), other.get(k, s)
            out._put(k, s, a if b is None else b if a is None else a + b)
        return out

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "Tensor":
        out = self._like()
        if c:
            for k, d in self.comps.items():
                for s, M in d.items():
                    out._put(k, s, M * c)
        return out

    def _compatible(self, other):
        if self.src != other.src or self.tgt != other.tgt or self.degree != other.degree:
            raise ValueError("tensors live in different spaces")

    def component(self, k: int) -> "Tensor":
        return self._like({k: self.comps.get(k, {})})

    def truncate_above(self, k: int) -> "Tensor":
        return self._like({j: d for j, d in self.comps.items() if j <= k})

    def is_zero(self) -> bool:
        return not any(self.comps.values())

    def __eq__(self, other):
        if not isinstance(other, Tensor):
            return NotImplemented
        if self.src != other.src or self.tgt != other.tgt or self.degree != other.degree:
            return False
        return (self - other).is_zero()

    def __hash__(self):
        return id(self)

    def nonzero_items(self):
        for k in sorted(self.comps):
            for sigma in sorted(self.comps[k]):
                yield k, sigma, self.comps[k][sigma]

    def __repr__(self):
        n = sum(len(d) for d in self.comps.values())
        return "Tensor(degree=%d, nonzero strings=%d%s)" % (self.degree, n, ", cochain" if self.cochain else "")

    # cochain helpers ------------------------------------------------------

    def to_vector(self, basis: "CochainBasis") -> dict:
        if not self.cochain or self.degree != basis.n or self.tgt != basis.bundle:
            raise ValueError("not a cochain in this space")
        vec = {}
        for k, sigma, M in self.nonzero_items():
            off, l = basis.offset(k, sigma), basis.n - k
            sl = self.tgt.block(self.G.target(k, sigma), l)
            for j, v in enumerate(M[sl, 0]):
                if v:
                    vec[off + j] = _clean(v)
        return vec


def scalar_cochain(G: FiniteGroupoid, k: int, values: Mapping[tuple, object]) -> Tensor:
    """A cochain in C^k(G) with the given value per k-string."""
    L = GradedBundle.line(G)
    return Tensor(L, L, k, {k: {s: as_matrix([[v]]) for s, v in values.items() if v}}, cochain=True)


def cochain_from_values(E: GradedBundle, n: int, values: Mapping[tuple, Mapping]) -> Tensor:
    """E-valued cochain of total degree n from ``{(k, sigma): vector}``."""
    L = GradedBundle.line(E.G)
    comps = {}
    for (k, sigma), v in values.items():
        col = zeros(E.total(E.G.target(k, sigma)), 1)
        for i, x in enumerate(v):
            col[i, 0] = to_rational(x)
        comps.setdefault(k, {})[sigma] = col
    return Tensor(L, E, n, comps, cochain=True)


def star(T: Tensor, U: Tensor) -> Tensor:
    """Signed convolution T ⋆ U (T after U on the fibers)."""
    if T.src != U.tgt:
        raise ValueError("cannot compose: source of the left factor differs from target of the right")
    G = T.G
    dU = U.degree
    out: dict[int, dict[tuple, np.ndarray]] = {}
    by_target: dict[int, list] = {}
    for k2, d in U.comps.items():
        for s2, M2 in d.items():
            by_target.setdefault(G.target(k2, s2), []).append((k2, s2, M2))
    for k1, d in T.comps.items():
        sign = -1 if (k1 * dU) % 2 else 1
        for s1, M1 in d.items():
            for k2, s2, M2 in by_target.get(G.source(k1, s1), ()):
                if k1 == 0:
                    sigma = s2
                elif k2 == 0:
                    sigma = s1
                else:
                    sigma = s1 + s2
                P = M1 @ M2
                if sign < 0:
                    P = -P
                bucket = out.setdefault(k1 + k2, {})
                if sigma in bucket:
                    bucket[sigma] = bucket[sigma] + P
                else:
                    bucket[sigma] = P
    res = Tensor(U.src, T.tgt, T.degree + U.degree, check=False, cochain=T.cochain or U.cochain)
    for k, d in out.items():
        for s, M in d.items():
            res._put(k, s, _simplify(M))
    return res


def _factorizations(G: FiniteGroupoid) -> dict:
    got = getattr(G, "_factorizations", None)
    if got is None:
        got = {}
        for (a, b), ab in G.comp.items():
            got.setdefault(ab, []).append((a, b))
        G._factorizations = got
    return got


def dhat0(T: Tensor) -> Tensor:
    """The insertion-of-composites operator; raises the cocycle degree by one."""
    G = T.G
    fac = _factorizations(G)
    base = -1 if T.degree % 2 else 1
    out: dict[int, dict[tuple, np.ndarray]] = {}

    def add(k, tau, M, sign):
        bucket = out.setdefault(k, {})
        P = M if sign > 0 else -M
        bucket[tau] = bucket[tau] + P if tau in bucket else P

    for k, d in T.comps.items():
        for sigma, M in d.items():
            # inner faces: tau of length k+1 with d_j tau = sigma, 1 <= j <= k
            for j in range(1, k + 1):
                sign = base * (-1 if j % 2 else 1)
                g = sigma[j - 1]
                for a, b in fac[g]:
                    add(k + 1, sigma[:j - 1] + (a, b) + sigma[j:], M, sign)
            if T.cochain:
                # last face: tau = sigma + (h,), d_{k+1} tau = sigma
                sign = base * (-1 if (k + 1) % 2 else 1)
                x = G.source(k, sigma)
                for h in G.arrows_into(x):
                    tau = (h,) if k == 0 else sigma + (h,)
                    add(k + 1, tau, M, sign)
    res = T._like(degree=T.degree + 1)
    for k, d in out.items():
        for s, M in d.items():
            res._put(k, s, _simplify(M))
    return res


# ---------------------------------------------------------------------------
# cochain spaces and operator matrices


class CochainBasis:
    """Canonical basis of C(G;E)^n = ⊕_k C^k(G;E^{n-k}).

    Blocks are ordered by k, then string, then fiber index inside E^{n-k}.
    """

    def __init__(self, E: GradedBundle, n: int):
        self.bundle = E
        self.G = E.G
        self.n = n
        self.blocks = []          # (k, sigma, size, offset)
        self._offset = {}
        self.k_offsets = {}       # k -> first index of the k-part
        off = 0
        G = self.G
        for k in range(max(0, n - E.b), n - E.a + 1):
            self.k_offsets[k] = off
            l = n - k
            for sigma in G.strings(k):
                size = E.dim(G.target(k, sigma), l)
                if size:
                    self.blocks.append((k, sigma, size, off))
                    self._offset[k, sigma] = off
                    off += size
        self.k_offsets[n - E.a + 1] = off
        self.dim = off
        self._starts = [blk[3] for blk in self.blocks]

    def offset(self, k: int, sigma: tuple):
        return self._offset.get((k, sigma))

    def k_range(self):
        return range(max(0, self.n - self.bundle.b), self.n - self.bundle.a + 1)

    def filtration_start(self, p: int) -> int:
        """First index of L^p (cocycle degree >= p)."""
        ks = [k for k in self.k_offsets if k >= p]
        if not ks:
            return self.dim
        return self.k_offsets[min(ks)]

    def label(self, i: int):
        """(k, sigma, fiber index in E^{n-k}) of basis vector i."""
        if not 0 <= i < self.dim:
            raise IndexError(i)
        b = bisect.bisect_right(self._starts, i) - 1
        k, sigma, size, off = self.blocks[b]
        return k, sigma, i - off

    def to_cochain(self, vec: Mapping[int, object]) -> Tensor:
        E, G = self.bundle, self.G
        L = GradedBundle.line(G)
        comps = {}
        for k, sigma, size, off in self.blocks:
            vals = [vec.get(off + j, 0) for j in range(size)]
            if any(vals):
                y = G.target(k, sigma)
                col = zeros(E.total(y), 1)
                o = E.offset(y, self.n - k)
                for j, v in enumerate(vals):
                    col[o + j, 0] = v
                comps.setdefault(k, {})[sigma] = col
        return Tensor(L, E, self.n, comps, cochain=True, check=False)


def _graded_entries(E_t: GradedBundle, E_s: GradedBundle, M: np.ndarray, y: int, x: int, l_out: int, l_in: int):
    """Nonzero entries of the (l_out <- l_in) block of M, in block-local coordinates."""
    ro, rn = E_t.offset(y, l_out), E_t.dim(y, l_out)
    co, cn = E_s.offset(x, l_in), E_s.dim(x, l_in)
    out = []
    if not rn or not cn:
        return out
    B = M[ro:ro + rn, co:co + cn]
    for (i, j), v in np.ndenumerate(B):
        if v:
            out.append((i, j, v))
    return out


def left_mult_matrix(T: Tensor, n: int, src_basis: CochainBasis | None = None,
                     tgt_basis: CochainBasis | None = None) -> RationalMatrix:
    """Matrix of eta |-> T ⋆ eta from C(G;E)^n to C(G;F)^{n + deg T}.

    Assembled row-block by row-block:
        (T ⋆ eta)(tau) = sum_i (-1)^{i n} T_i(g_1..g_i) eta(g_{i+1}..g_m).
    """
    E, F, G = T.src, T.tgt, T.G
    delta = T.degree
    S = src_basis or CochainBasis(E, n)
    R = tgt_basis or CochainBasis(F, n + delta)
    M = RationalMatrix(R.dim, S.dim)
    data = M._data
    for m, tau, size, roff in R.blocks:
        y = G.target(m, tau)
        l_out = n + delta - m
        for i, d in T.comps.items():
            if i > m:
                continue
            head = G.head(m, tau, i)
            A = d.get(head)
            if A is None:
                continue
            k = m - i
            tail = G.tail(m, tau, i)
            coff = S.offset(k, tail)
            if coff is None:
                continue
            x = G.target(k, tail)
            sign = -1 if (i * n) % 2 else 1
            for a, b, v in _graded_entries(F, E, A, y, x, l_out, n - k):
                row = data.setdefault(roff + a, {})
                w = row.get(coff + b, 0) + sign * v
                if w:
                    row[coff + b] = _clean(w)
                else:
                    del row[coff + b]
    for i in [i for i, r in data.items() if not r]:
        del data[i]
    return M


def dhat0_matrix(E: GradedBundle, n: int, src_basis: CochainBasis | None = None,
                 tgt_basis: CochainBasis | None = None) -> RationalMatrix:
    """Matrix of the module Dhat0 from C(G;E)^n to C(G;E)^{n+1}: inner faces and the last face."""
    G = E.G
    S = src_basis or CochainBasis(E, n)
    R = tgt_basis or CochainBasis(E, n + 1)
    M = RationalMatrix(R.dim, S.dim)
    data = M._data
    par = -1 if n % 2 else 1
    for m, tau, size, roff in R.blocks:
        if m == 0:
            continue
        for j in range(1, m + 1):
            coff = S.offset(m - 1, G.face(m, j, tau))
            if coff is None:
                continue
            sign = par * (-1 if j % 2 else 1)
            for a in range(size):
                row = data.setdefault(roff + a, {})
                w = row.get(coff + a, 0) + sign
                if w:
                    row[coff + a] = w
                else:
                    del row[coff + a]
    for i in [i for i, r in data.items() if not r]:
        del data[i]
    return M


def to_rmatrix(M: np.ndarray) -> RationalMatrix:
    R = RationalMatrix(*M.shape)
    for (i, j), v in np.ndenumerate(M):
        if v:
            R._add(i, j, v)
    return R


def from_rmatrix(R: RationalMatrix) -> np.ndarray:
    M = zeros(R.rows, R.cols)
    for i, j, v in R.entries():
        M[i, j] = v
    return M


def dense_inverse(M: np.ndarray) -> np.ndarray:
    from .exactla import invert
    return from_rmatrix(invert(to_rmatrix(M)))

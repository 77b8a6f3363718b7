"""
Operations on representations up to homotopy: dual, mapping cone, pullback,
direct sum, shift, gauge transformation, strict symmetric powers and the
Hom complex between two representations.
"""

from __future__ import annotations

from itertools import product
from typing import Mapping

import numpy as np

from .cochains import GradedBundle, Tensor, dense_inverse, dhat0, eye, star, zeros, _simplify
from .errors import InvalidMorphism, NotAFunctor, NotStrict
from .exactla import RationalMatrix, rank
from .groupoid import GroupoidMorphism
from .rep import RepUpToHomotopy, RuthMorphism, verify_morphism

__all__ = [
    "dualize",
    "mapping_cone",
    "pullback",
    "pullback_morphism",
    "direct_sum",
    "shift",
    "gauge_transform",
    "tensor_inverse",
    "strict_symmetric_power",
    "symmetric_power_morphism",
    "monomial_basis",
    "HomComplex",
    "hom_complex",
    "homotopy_class_dims",
]


def _embed(M: np.ndarray, shape, rows, cols, out=None) -> np.ndarray:
    if out is None:
        out = zeros(*shape)
    for (i, j), v in np.ndenumerate(M):
        if v:
            out[rows[i], cols[j]] += v
    return out


# ---------------------------------------------------------------------------
# dual


def dualize(E: RepUpToHomotopy) -> RepUpToHomotopy:
    """R*_k(g_1..g_k) = (-1)^{k+1} R_k(g_k^{-1}..g_1^{-1})^T on (E^l)^* in degree -l."""
    B, G = E.bundle, E.G
    D = B.dual()
    comps = {}
    for k, sigma, M in E.R.nonzero_items():
        tau = G.reverse_inverse(k, sigma)        # the string whose transpose lands at tau
        y, x = G.target(k, tau), G.source(k, tau)
        pt, ps = B.dual_permutation(y), B.dual_permutation(x)
        # M: E_{s(sigma)} -> E_{t(sigma)} with s(sigma) = t(tau), t(sigma) = s(tau)
        N = zeros(D.total(y), D.total(x))
        sign = 1 if (k + 1) % 2 == 0 else -1
        for i in range(D.total(y)):
            for j in range(D.total(x)):
                v = M[ps[j], pt[i]]
                if v:
                    N[i, j] = sign * v
        comps.setdefault(k, {})[tau] = N
    return RepUpToHomotopy(D, comps, name=(E.name + "*") if E.name else None)


# ---------------------------------------------------------------------------
# direct sums, shifts, cones


def direct_sum(E: RepUpToHomotopy, F: RepUpToHomotopy):
    """E ⊕ F with the inclusion and projection morphisms (all strict)."""
    S, ie, jf = E.bundle.direct_sum(F.bundle)
    G = E.G
    comps = {}
    for rep, inc in ((E, ie), (F, jf)):
        for k, sigma, M in rep.R.nonzero_items():
            y, x = G.target(k, sigma), G.source(k, sigma)
            bucket = comps.setdefault(k, {})
            if sigma not in bucket:
                bucket[sigma] = zeros(S.total(y), S.total(x))
            _embed(M, None, inc[y], inc[x], out=bucket[sigma])
    Sum = RepUpToHomotopy(S, comps)
    maps = []
    for rep, inc in ((E, ie), (F, jf)):
        i_comps, p_comps = {}, {}
        for x in range(G.n_objects):
            n = rep.bundle.total(x)
            i_comps[(x,)] = _embed(eye(n), (S.total(x), n), inc[x], list(range(n)))
            p_comps[(x,)] = _embed(eye(n), (n, S.total(x)), list(range(n)), inc[x])
        maps.append((RuthMorphism(rep, Sum, {0: i_comps}), RuthMorphism(Sum, rep, {0: p_comps})))
    return Sum, maps[0], maps[1]


def shift(E: RepUpToHomotopy, s: int) -> RepUpToHomotopy:
    """Move E up by s degrees; the structure equations do not see degrees, so R is kept."""
    B = E.bundle.shift(s)
    return RepUpToHomotopy(B, {k: dict(d) for k, d in E.R.comps.items()}, name=E.name)


def mapping_cone(Phi: RuthMorphism, check: bool = True) -> RepUpToHomotopy:
    """C(Phi)^n = E^n ⊕ F^{n-1}, R_k(e, f) = (R_k e, Phi_k e - (-1)^k R'_k f)."""
    if check:
        rep = verify_morphism(Phi)
        if not rep.ok:
            raise InvalidMorphism("cone of a map that is not a morphism", rep)
    E, F = Phi.source, Phi.target
    G = E.G
    C, ie, jf = E.bundle.direct_sum(F.bundle.shift(1))
    comps: dict = {}

    def put(k, sigma, M, rows, cols, sign=1):
        y, x = G.target(k, sigma), G.source(k, sigma)
        bucket = comps.setdefault(k, {})
        if sigma not in bucket:
            bucket[sigma] = zeros(C.total(y), C.total(x))
        _embed(M if sign > 0 else -M, None, rows[y], cols[x], out=bucket[sigma])

    for k, sigma, M in E.R.nonzero_items():
        put(k, sigma, M, ie, ie)
    for k, sigma, M in Phi.Phi.nonzero_items():
        put(k, sigma, M, jf, ie)
    for k, sigma, M in F.R.nonzero_items():
        put(k, sigma, M, jf, jf, sign=1 if k % 2 else -1)
    return RepUpToHomotopy(C, comps, name="cone")


def cone_inclusions(Phi: RuthMorphism, C: RepUpToHomotopy):
    """Total-fiber positions of the E and F[1] parts inside the cone, per object."""
    _, ie, jf = Phi.source.bundle.direct_sum(Phi.target.bundle.shift(1))
    return ie, jf


# ---------------------------------------------------------------------------
# pullback


def pullback(phi: GroupoidMorphism, E: RepUpToHomotopy) -> RepUpToHomotopy:
    """phi^*R_k(h_1..h_k) = R_k(phi h_1, .., phi h_k) over the pulled-back bundle."""
    errs = phi.check()
    if errs:
        raise errs[0]
    if phi.target != E.G:
        raise NotAFunctor("functor does not land in the representation's groupoid")
    H = phi.source
    B = E.bundle.pullback(phi)
    comps = {}
    kmax = max(E.R.comps, default=-1)
    for k in range(kmax + 1):
        d = E.R.comps.get(k)
        if not d:
            continue
        for sigma in H.strings(k):
            M = d.get(phi.on_string(k, sigma))
            if M is not None:
                comps.setdefault(k, {})[sigma] = M
    return RepUpToHomotopy(B, comps, name=E.name)


def pullback_morphism(phi: GroupoidMorphism, Phi: RuthMorphism) -> RuthMorphism:
    E, F = pullback(phi, Phi.source), pullback(phi, Phi.target)
    comps = {}
    for k, d in Phi.Phi.comps.items():
        for sigma in phi.source.strings(k):
            M = d.get(phi.on_string(k, sigma))
            if M is not None:
                comps.setdefault(k, {})[sigma] = M
    return RuthMorphism(E, F, comps)


# ---------------------------------------------------------------------------
# gauge transformations


def tensor_inverse(Phi: Tensor) -> Tensor:
    """Inverse of a degree-zero endomorphism tensor under ⋆ (Phi_0 invertible).

    With N = Phi_0^{-1} ⋆ Phi_{>=1}: Phi^{-1} = sum_j (-N)^j ⋆ Phi_0^{-1}; N raises
    the string length, so the series stops.
    """
    G = Phi.G
    inv0 = {}
    for x in range(G.n_objects):
        inv0[(x,)] = dense_inverse(Phi.value(0, (x,)))
    P0inv = Tensor(Phi.tgt, Phi.src, 0, {0: inv0}, check=False)
    higher = Tensor(Phi.src, Phi.tgt, 0, {k: d for k, d in Phi.comps.items() if k >= 1}, check=False)
    N = star(P0inv, higher)
    term = P0inv
    total = P0inv
    for _ in range(max(Phi.max_k, 0) + 1):
        term = star(N, term).scale(-1)
        if term.is_zero():
            break
        total = total + term
    return total


def gauge_transform(E: RepUpToHomotopy, Phi: Tensor | Mapping):
    """Transport E along an invertible degree-zero tensor Phi.

    R' = Phi ⋆ R ⋆ Phi^{-1} + Phi ⋆ Dhat0(Phi^{-1}), so that D' = L_Phi D L_Phi^{-1}.
    Returns (E', Phi: E -> E', Phi^{-1}: E' -> E).
    """
    if not isinstance(Phi, Tensor):
        Phi = Tensor(E.bundle, E.bundle, 0, Phi)
    Pinv = tensor_inverse(Phi)
    R = star(star(Phi, E.R), Pinv) + star(Phi, dhat0(Pinv))
    E2 = RepUpToHomotopy(E.bundle, R)
    return E2, RuthMorphism(E, E2, Phi), RuthMorphism(E2, E, Pinv)


# ---------------------------------------------------------------------------
# strict symmetric powers (Koszul sign rule)


def _koszul_sort(idx, degs):
    """Sign and sorted order of a product of basis vectors, or (0, None) if an
    odd vector repeats."""
    arr = list(idx)
    sign = 1
    for i in range(1, len(arr)):
        j = i
        while j > 0 and arr[j - 1] > arr[j]:
            if degs[arr[j - 1]] % 2 and degs[arr[j]] % 2:
                sign = -sign
            arr[j - 1], arr[j] = arr[j], arr[j - 1]
            j -= 1
    for i in range(1, len(arr)):
        if arr[i] == arr[i - 1] and degs[arr[i]] % 2:
            return 0, None
    return sign, tuple(arr)


def monomial_basis(degs, q: int) -> list[tuple]:
    """Basis of S^q of a graded space with basis degrees ``degs``, ordered by
    total degree and then lexicographically."""
    n = len(degs)
    out = []

    def rec(start, prefix):
        if len(prefix) == q:
            out.append(tuple(prefix))
            return
        for i in range(start, n):
            if prefix and prefix[-1] == i and degs[i] % 2:
                continue
            rec(i, prefix + [i])

    rec(0, [])
    out.sort(key=lambda m: (sum(degs[i] for i in m), m))
    return out


def _sym_map(A: np.ndarray, src_degs, tgt_degs, src_basis, tgt_basis) -> np.ndarray:
    """S^q of an even map A (A(v_1)...A(v_q), expanded and normalized)."""
    pos = {m: i for i, m in enumerate(tgt_basis)}
    out = zeros(len(tgt_basis), len(src_basis))
    cols = [[(r, A[r, c]) for r in range(A.shape[0]) if A[r, c]] for c in range(A.shape[1])]
    for j, m in enumerate(src_basis):
        for choice in product(*[cols[c] for c in m]):
            coeff = 1
            for _, v in choice:
                coeff *= v
            sign, key = _koszul_sort([r for r, _ in choice], tgt_degs)
            if sign:
                out[pos[key], j] += sign * coeff
    return _simplify(out)


def _sym_derivation(d: np.ndarray, degs, basis) -> np.ndarray:
    """The derivation extension of a degree-one map to S^q."""
    pos = {m: i for i, m in enumerate(basis)}
    out = zeros(len(basis), len(basis))
    for j, m in enumerate(basis):
        before = 0
        for p, c in enumerate(m):
            sgn = -1 if before % 2 else 1
            for r in range(d.shape[0]):
                v = d[r, c]
                if v:
                    sign, key = _koszul_sort(m[:p] + (r,) + m[p + 1:], degs)
                    if sign:
                        out[pos[key], j] += sgn * sign * v
            before += degs[c]
    return _simplify(out)


def _sym_bundle(B: GradedBundle, q: int):
    G = B.G
    bases, dims = {}, {}
    for x in range(G.n_objects):
        degs = B.degrees(x)
        bases[x] = monomial_basis(degs, q)
        for m in bases[x]:
            l = sum(degs[i] for i in m)
            dims[x, l] = dims.get((x, l), 0) + 1
    amp = (q * B.a, q * B.b) if q else (0, 0)
    return GradedBundle(G, dims, amp), bases


def strict_symmetric_power(q: int, E: RepUpToHomotopy) -> RepUpToHomotopy:
    """S^q of a strict representation: S^q of the complex (E, d) with the Koszul
    rule, and the diagonal action; all higher R_k vanish."""
    if q < 0:
        raise ValueError("q must be non-negative")
    if not E.is_strict():
        raise NotStrict("symmetric powers are only built for representations with R_k = 0 for k >= 2")
    G, B = E.G, E.bundle
    S, bases = _sym_bundle(B, q)
    comps = {0: {}, 1: {}}
    for x in range(G.n_objects):
        d = E.r(0, (x,))
        if d.any():
            comps[0][(x,)] = _sym_derivation(d, B.degrees(x), bases[x])
    for g in range(G.n_arrows):
        x, y = G.src[g], G.tgt[g]
        comps[1][(g,)] = _sym_map(E.r(1, (g,)), B.degrees(x), B.degrees(y), bases[x], bases[y])
    return RepUpToHomotopy(S, comps, name="S^%d" % q)


def symmetric_power_morphism(q: int, Phi: RuthMorphism) -> RuthMorphism:
    """S^q of a strict morphism (only Phi_0)."""
    if any(k > 0 for k in Phi.Phi.comps):
        raise NotStrict("symmetric powers of morphisms need Phi_k = 0 for k >= 1")
    E, F = Phi.source, Phi.target
    SE, SF = strict_symmetric_power(q, E), strict_symmetric_power(q, F)
    _, be = _sym_bundle(E.bundle, q)
    _, bf = _sym_bundle(F.bundle, q)
    G = E.G
    comps = {}
    for x in range(G.n_objects):
        comps[(x,)] = _sym_map(Phi.phi(0, (x,)), E.bundle.degrees(x), F.bundle.degrees(x), be[x], bf[x])
    return RuthMorphism(SE, SF, {0: comps})


# ---------------------------------------------------------------------------
# Hom complexes


class HomComplex:
    """Hom^l(E, F) = ⊕_k C^k_G(Hom^{l-k}(E, F)) with
    D(T) = R^F ⋆ T + Dhat0(T) - (-1)^l T ⋆ R^E.

    Closed degree-zero elements are exactly the morphisms E -> F.
    """

    def __init__(self, E: RepUpToHomotopy, F: RepUpToHomotopy):
        if E.G != F.G:
            raise ValueError("representations over different groupoids")
        self.E, self.F, self.G = E, F, E.G
        self._bases: dict = {}
        self._mats: dict = {}

    def basis(self, l: int) -> list:
        got = self._bases.get(l)
        if got is not None:
            return got
        E, F, G = self.E.bundle, self.F.bundle, self.G
        out = []
        for k in range(max(0, l - (F.b - E.a)), l - (F.a - E.b) + 1):
            for sigma in G.strings(k):
                y, x = G.target(k, sigma), G.source(k, sigma)
                dy, dx = F.degrees(y), E.degrees(x)
                for r in range(len(dy)):
                    for c in range(len(dx)):
                        if dy[r] - dx[c] == l - k:
                            out.append((k, sigma, r, c))
        self._bases[l] = out
        return out

    def index(self, l: int) -> dict:
        return {b: i for i, b in enumerate(self.basis(l))}

    def tensor(self, l: int, vec: Mapping[int, object]) -> Tensor:
        E, F, G = self.E.bundle, self.F.bundle, self.G
        comps: dict = {}
        B = self.basis(l)
        for i, v in vec.items():
            if not v:
                continue
            k, sigma, r, c = B[i]
            bucket = comps.setdefault(k, {})
            if sigma not in bucket:
                bucket[sigma] = zeros(F.total(G.target(k, sigma)), E.total(G.source(k, sigma)))
            bucket[sigma][r, c] += v
        return Tensor(E, F, l, comps)

    def vector(self, T: Tensor) -> dict:
        idx = self.index(T.degree)
        out = {}
        for k, sigma, M in T.nonzero_items():
            for (r, c), v in np.ndenumerate(M):
                if v:
                    out[idx[k, sigma, r, c]] = v
        return out

    def differential(self, T: Tensor) -> Tensor:
        l = T.degree
        out = star(self.F.R, T) + dhat0(T)
        right = star(T, self.E.R)
        return out - right if l % 2 == 0 else out + right

    def matrix(self, l: int) -> RationalMatrix:
        got = self._mats.get(l)
        if got is not None:
            return got
        rows = self.index(l + 1)
        src = self.basis(l)
        M = RationalMatrix(len(rows), len(src))
        for j in range(len(src)):
            DT = self.differential(self.tensor(l, {j: 1}))
            for k, sigma, A in DT.nonzero_items():
                for (r, c), v in np.ndenumerate(A):
                    if v:
                        M._add(rows[k, sigma, r, c], j, v)
        self._mats[l] = M
        return M

    def cohomology(self, degrees) -> dict:
        out = {}
        for l in degrees:
            out[l] = len(self.basis(l)) - rank(self.matrix(l)) - rank(self.matrix(l - 1))
        return out

    def morphism(self, vec: Mapping[int, object]) -> RuthMorphism:
        return RuthMorphism(self.E, self.F, self.tensor(0, vec))


def hom_complex(E: RepUpToHomotopy, F: RepUpToHomotopy) -> HomComplex:
    return HomComplex(E, F)


def homotopy_class_dims(E: RepUpToHomotopy, F: RepUpToHomotopy) -> int:
    """dim [E, F] = dim H^0 of the Hom complex."""
    return HomComplex(E, F).cohomology([0])[0]

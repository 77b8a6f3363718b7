"""
Representations up to homotopy, their morphisms, structure operators and cohomology.

A representation is a graded bundle E together with a degree-one tensor
R = {R_k} (R_0 the differential, R_1 the quasi-action, R_k higher homotopies).
Its structure operator on C(G;E) is D = L_R + Dhat0, and D^2 = 0 is
equivalent to the structure equations

    sum_{j=0}^{k} (-1)^j R_j R_{k-j}  =  sum_{j=1}^{k-1} (-1)^j R_{k-1}(g_1, .., g_j g_{j+1}, .., g_k).
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

import numpy as np

from .cochains import (
    CochainBasis,
    GradedBundle,
    Tensor,
    as_matrix,
    dhat0_matrix,
    eye,
    left_mult_matrix,
    scalar_cochain,
    star,
    zeros,
)
from .errors import InvalidMorphism, NotLeibniz, StructureEquationsViolated
from .exactla import RationalMatrix, rank, rational_str
from .groupoid import FiniteGroupoid

__all__ = [
    "RepUpToHomotopy",
    "RuthMorphism",
    "StructureOperator",
    "StructureReport",
    "MorphismReport",
    "structure_operator",
    "verify_structure",
    "verify_morphism",
    "cohomology",
    "operator_cohomology",
    "normalized_blocks",
    "normalized_subspace",
    "preserves_normalized",
    "is_unital",
    "quasi_action_to_operator",
    "operator_to_quasi_action",
    "tensor_from_operator",
    "trivial_rep",
    "ordinary_rep",
    "zero_rep",
]


class RepUpToHomotopy:
    """A graded bundle with its structure tensor R (degree one, E -> E)."""

    def __init__(self, bundle: GradedBundle, R: Tensor | Mapping | None = None, name: str | None = None):
        self.bundle = bundle
        self.G = bundle.G
        if R is None:
            R = {}
        if not isinstance(R, Tensor):
            R = Tensor(bundle, bundle, 1, R)
        if R.src != bundle or R.tgt != bundle or R.degree != 1:
            raise ValueError("structure tensor must be a degree-one endomorphism of the bundle")
        self.R = R
        self.name = name
        self._op = None

    @property
    def amplitude(self):
        return self.bundle.amplitude

    @property
    def width(self) -> int:
        return self.bundle.b - self.bundle.a

    def r(self, k: int, sigma: tuple) -> np.ndarray:
        return self.R.value(k, sigma)

    def is_strict(self) -> bool:
        return all(k <= 1 for k in self.R.comps)

    def unitality_class(self) -> str:
        """'unital', 'weakly-unital' or 'none'."""
        G, E = self.G, self.bundle
        for x in range(G.n_objects):
            if not np.array_equal(self.r(1, (G.unit[x],)), eye(E.total(x))):
                return "none"
        for k, sigma, M in self.R.nonzero_items():
            if k >= 2 and G.is_degenerate(k, sigma):
                return "weakly-unital"
        return "unital"

    def operator(self) -> "StructureOperator":
        if self._op is None:
            self._op = StructureOperator(self)
        return self._op

    def __eq__(self, other):
        if not isinstance(other, RepUpToHomotopy):
            return NotImplemented
        return self.bundle == other.bundle and self.R == other.R

    def __hash__(self):
        return id(self)

    def __repr__(self):
        return "RepUpToHomotopy(%s, amplitude=[%d, %d])" % (self.name or "E", self.bundle.a, self.bundle.b)


def zero_rep(G: FiniteGroupoid, amplitude=(0, 0)) -> RepUpToHomotopy:
    return RepUpToHomotopy(GradedBundle(G, {}, amplitude))


def trivial_rep(G: FiniteGroupoid, degree: int = 0) -> RepUpToHomotopy:
    """The trivial line in one degree; R_1(g) = 1 for every arrow."""
    E = GradedBundle.line(G, degree)
    return RepUpToHomotopy(E, {1: {(g,): as_matrix([[1]]) for g in range(G.n_arrows)}}, name="trivial")


def ordinary_rep(bundle: GradedBundle, action: Mapping[int, np.ndarray], differential: Mapping[int, np.ndarray] | None = None,
                 name=None) -> RepUpToHomotopy:
    """R_0 = differential (per object), R_1 = action (per arrow), nothing higher."""
    comps = {1: {(g,): M for g, M in action.items()}}
    if differential:
        comps[0] = {(x,): M for x, M in differential.items()}
    return RepUpToHomotopy(bundle, comps, name=name)


# ---------------------------------------------------------------------------
# operators on cochains


class CochainOperator:
    """A family of matrices C(G;E)^n -> C(G;F)^{n+degree}, built lazily per n."""

    def __init__(self, src: GradedBundle, tgt: GradedBundle, degree: int, build: Callable[[int], RationalMatrix]):
        self.src = src
        self.tgt = tgt
        self.degree = degree
        self._build = build
        self._cache: dict[int, RationalMatrix] = {}

    def matrix(self, n: int) -> RationalMatrix:
        M = self._cache.get(n)
        if M is None:
            M = self._build(n)
            self._cache[n] = M
        return M

    def src_basis(self, n: int) -> CochainBasis:
        return _basis(self.src, n)

    def tgt_basis(self, n: int) -> CochainBasis:
        return _basis(self.tgt, n + self.degree)

    def apply(self, eta: Tensor) -> Tensor:
        n = eta.degree
        v = eta.to_vector(self.src_basis(n))
        return self.tgt_basis(n).to_cochain(self.matrix(n).apply(v))


_BASES: dict = {}


def _basis(E: GradedBundle, n: int) -> CochainBasis:
    key = (id(E), n)
    got = _BASES.get(key)
    if got is None or got[0] is not E:
        got = (E, CochainBasis(E, n))
        _BASES[key] = got
    return got[1]


def left_mult_operator(T: Tensor) -> CochainOperator:
    return CochainOperator(T.src, T.tgt, T.degree,
                           lambda n: left_mult_matrix(T, n, _basis(T.src, n), _basis(T.tgt, n + T.degree)))


class StructureOperator(CochainOperator):
    """D = L_R + Dhat0 on C(G;E), with its bidegree components D_i."""

    def __init__(self, E: RepUpToHomotopy):
        self.rep = E
        B = E.bundle

        def build(n):
            S, T = _basis(B, n), _basis(B, n + 1)
            return left_mult_matrix(E.R, n, S, T) + dhat0_matrix(B, n, S, T)

        super().__init__(B, B, 1, build)

    def component(self, n: int, i: int) -> RationalMatrix:
        """D_i: the part of D raising the cocycle degree by i (bidegree (i, 1-i))."""
        S, T = self.src_basis(n), self.tgt_basis(n)
        M = self.matrix(n)
        kin = _k_of_index(S)
        kout = _k_of_index(T)
        out = RationalMatrix(M.rows, M.cols)
        for r, c, v in M.entries():
            if kout[r] - kin[c] == i:
                out._add(r, c, v)
        return out

    def perturbation(self, n: int) -> RationalMatrix:
        """delta_D = D - L_{R_0}."""
        R0 = self.rep.R.component(0)
        return self.matrix(n) - left_mult_matrix(R0, n, self.src_basis(n), self.tgt_basis(n))


def _k_of_index(basis: CochainBasis) -> list[int]:
    out = [0] * basis.dim
    for k, sigma, size, off in basis.blocks:
        for j in range(size):
            out[off + j] = k
    return out


def structure_operator(E: RepUpToHomotopy) -> StructureOperator:
    return E.operator()


# ---------------------------------------------------------------------------
# reports


def _entries(M: np.ndarray):
    return [[int(i), int(j), rational_str(v)] for (i, j), v in np.ndenumerate(M) if v]


@dataclass
class StructureReport:
    residuals: list = field(default_factory=list)      # (k, string ids, entries)
    d_squared: dict = field(default_factory=dict)      # n -> nnz of D_{n+1} D_n
    checked_k: int = 0
    checked_degrees: tuple = ()

    @property
    def equations_hold(self) -> bool:
        return not self.residuals

    @property
    def d_squared_zero(self) -> bool:
        return not any(self.d_squared.values())

    @property
    def agree(self) -> bool:
        return self.equations_hold == self.d_squared_zero

    @property
    def ok(self) -> bool:
        return self.equations_hold and self.d_squared_zero

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "structure_equations_hold": self.equations_hold,
            "d_squared_zero": self.d_squared_zero,
            "checks_agree": self.agree,
            "checked_k": self.checked_k,
            "checked_degrees": list(self.checked_degrees),
            "residuals": [{"k": k, "string": s, "entries": e} for k, s, e in self.residuals],
        }


@dataclass
class MorphismReport:
    residuals: list = field(default_factory=list)
    commutator: dict = field(default_factory=dict)
    checked_k: int = 0
    checked_degrees: tuple = ()

    @property
    def equations_hold(self) -> bool:
        return not self.residuals

    @property
    def commutes(self) -> bool:
        return not any(self.commutator.values())

    @property
    def agree(self) -> bool:
        return self.equations_hold == self.commutes

    @property
    def ok(self) -> bool:
        return self.equations_hold and self.commutes

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "morphism_equations_hold": self.equations_hold,
            "commutes_with_D": self.commutes,
            "checks_agree": self.agree,
            "checked_k": self.checked_k,
            "residuals": [{"k": k, "string": s, "entries": e} for k, s, e in self.residuals],
        }


def structure_residual(E: RepUpToHomotopy, k: int, sigma: tuple) -> np.ndarray:
    """Left minus right side of the k-th structure equation at sigma."""
    G = E.G
    y, x = G.target(k, sigma), G.source(k, sigma)
    out = zeros(E.bundle.total(y), E.bundle.total(x))
    for j in range(k + 1):
        A = E.R.get(j, G.head(k, sigma, j))
        B = E.R.get(k - j, G.tail(k, sigma, j))
        if A is not None and B is not None:
            out = out + (A @ B if j % 2 == 0 else -(A @ B))
    for j in range(1, k):
        C = E.R.get(k - 1, G.face(k, j, sigma))
        if C is not None:
            out = out - C if j % 2 == 0 else out + C
    return out


def verify_structure(E: RepUpToHomotopy) -> StructureReport:
    """Structure equations for k <= b-a+2 string by string, and D^2 = 0 on
    total degrees a..b (which detects every component, since L_T is read off
    on 0-cochains)."""
    G = E.G
    a, b = E.amplitude
    kmax = b - a + 2
    rep = StructureReport(checked_k=kmax, checked_degrees=(a, b))
    for k in range(kmax + 1):
        for sigma in G.strings(k):
            res = structure_residual(E, k, sigma)
            if res.size and res.any():
                rep.residuals.append((k, G.string_ids(k, sigma), _entries(res)))
    D = E.operator()
    for n in range(a, b + 1):
        rep.d_squared[n] = (D.matrix(n + 1) @ D.matrix(n)).nnz()
    return rep


class RuthMorphism:
    """Phi = {Phi_k}, Phi_k in C^k(G; Hom^{-k}(E, E'))."""

    def __init__(self, source: RepUpToHomotopy, target: RepUpToHomotopy, Phi: Tensor | Mapping, name=None):
        if not isinstance(Phi, Tensor):
            Phi = Tensor(source.bundle, target.bundle, 0, Phi)
        if Phi.src != source.bundle or Phi.tgt != target.bundle or Phi.degree != 0:
            raise ValueError("morphism tensor must have degree zero between the two bundles")
        self.source = source
        self.target = target
        self.Phi = Phi
        self.name = name

    @classmethod
    def identity(cls, E: RepUpToHomotopy) -> "RuthMorphism":
        G = E.G
        return cls(E, E, {0: {(x,): eye(E.bundle.total(x)) for x in range(G.n_objects)}})

    @classmethod
    def zero(cls, E: RepUpToHomotopy, F: RepUpToHomotopy) -> "RuthMorphism":
        return cls(E, F, {})

    def phi(self, k, sigma) -> np.ndarray:
        return self.Phi.value(k, sigma)

    def operator(self) -> CochainOperator:
        return left_mult_operator(self.Phi)

    def __matmul__(self, other: "RuthMorphism") -> "RuthMorphism":
        """self after other."""
        return RuthMorphism(other.source, self.target, star(self.Phi, other.Phi))

    def __repr__(self):
        return "RuthMorphism(%s -> %s)" % (self.source.name or "E", self.target.name or "F")


def morphism_residual(Phi: RuthMorphism, k: int, sigma: tuple) -> np.ndarray:
    E, F = Phi.source, Phi.target
    G = E.G
    out = zeros(F.bundle.total(G.target(k, sigma)), E.bundle.total(G.source(k, sigma)))
    for j in range(k + 1):
        h, t = G.head(k, sigma, j), G.tail(k, sigma, j)
        A, B = Phi.Phi.get(j, h), E.R.get(k - j, t)
        if A is not None and B is not None:
            out = out + (A @ B if j % 2 == 0 else -(A @ B))
        A, B = F.R.get(j, h), Phi.Phi.get(k - j, t)
        if A is not None and B is not None:
            out = out - A @ B
    for j in range(1, k):
        C = Phi.Phi.get(k - 1, G.face(k, j, sigma))
        if C is not None:
            out = out - C if j % 2 == 0 else out + C
    return out


def verify_morphism(Phi: RuthMorphism) -> MorphismReport:
    """Morphism equations per string, cross-checked against D' L_Phi = L_Phi D."""
    E, F = Phi.source, Phi.target
    if E.G != F.G:
        raise InvalidMorphism("representations over different groupoids")
    G = E.G
    a, b = E.amplitude
    kmax = 1 + b - F.bundle.a
    rep = MorphismReport(checked_k=kmax, checked_degrees=(a, b))
    for k in range(kmax + 1):
        for sigma in G.strings(k):
            res = morphism_residual(Phi, k, sigma)
            if res.size and res.any():
                rep.residuals.append((k, G.string_ids(k, sigma), _entries(res)))
    L = Phi.operator()
    DE, DF = E.operator(), F.operator()
    for n in range(a, b + 1):
        rep.commutator[n] = (DF.matrix(n) @ L.matrix(n) - L.matrix(n + 1) @ DE.matrix(n)).nnz()
    return rep


# ---------------------------------------------------------------------------
# cohomology


def operator_cohomology(D: CochainOperator, degrees: Iterable[int], threads: int = 1) -> dict:
    """dim ker D_n - rank D_{n-1} for each n."""
    degrees = list(degrees)
    need = sorted(set(degrees) | {n - 1 for n in degrees})
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            ranks = dict(zip(need, ex.map(lambda n: rank(D.matrix(n)), need)))
    else:
        ranks = {n: rank(D.matrix(n)) for n in need}
    return {n: D.src_basis(n).dim - ranks[n] - ranks[n - 1] for n in degrees}


def cohomology(E: RepUpToHomotopy, degrees: Iterable[int], threads: int = 1, check: bool = True) -> dict:
    if check:
        report = verify_structure(E)
        if not report.ok:
            raise StructureEquationsViolated("structure equations fail", report)
    return operator_cohomology(E.operator(), degrees, threads)


# ---------------------------------------------------------------------------
# normalized cochains and unitality


def normalized_blocks(basis: CochainBasis) -> list[int]:
    """Indices of basis vectors living on non-degenerate strings."""
    G = basis.G
    out = []
    for k, sigma, size, off in basis.blocks:
        if not G.is_degenerate(k, sigma):
            out.extend(range(off, off + size))
    return out


def normalized_subspace(E: GradedBundle, k: int, l: int):
    """Basis of the normalized cochains in C^k(G;E^l), as (string, fiber index) pairs."""
    G = E.G
    return [(sigma, j) for sigma in G.strings(k) if not G.is_degenerate(k, sigma)
            for j in range(E.dim(G.target(k, sigma), l))]


def preserves_normalized(D: CochainOperator, degrees: Iterable[int]) -> bool:
    """Does D map normalized cochains to normalized cochains in these degrees?"""
    for n in degrees:
        S, T = D.src_basis(n), D.tgt_basis(n)
        good_in = set(normalized_blocks(S))
        good_out = set(normalized_blocks(T))
        for r, c, v in D.matrix(n).entries():
            if c in good_in and r not in good_out:
                return False
    return True


def is_unital(E: RepUpToHomotopy) -> bool:
    return E.unitality_class() == "unital"


# ---------------------------------------------------------------------------
# quasi-actions


def quasi_action_to_operator(bundle: GradedBundle, lam: Mapping[int, np.ndarray] | Tensor) -> CochainOperator:
    """D_lambda = L_lambda + Dhat0 for a degree-preserving quasi-action lambda."""
    if not isinstance(lam, Tensor):
        lam = Tensor(bundle, bundle, 1, {1: {(g,): M for g, M in lam.items()}})
    if set(lam.comps) - {1}:
        raise ValueError("a quasi-action only has arrow components")

    def build(n):
        S, T = _basis(bundle, n), _basis(bundle, n + 1)
        return left_mult_matrix(lam, n, S, T) + dhat0_matrix(bundle, n, S, T)

    return CochainOperator(bundle, bundle, 1, build)


def _scalar_basis(G: FiniteGroupoid, p: int):
    for sigma in G.strings(p):
        yield scalar_cochain(G, p, {sigma: 1})


def _right_mult(eta: Tensor, f: Tensor) -> Tensor:
    return star(eta, f)


def operator_to_quasi_action(D: CochainOperator, max_p: int = 2) -> dict:
    """Recover lambda from a degree-one operator satisfying Leibniz.

    Leibniz D(e ⋆ f) = D(e) ⋆ f + (-1)^{|e|} e ⋆ d(f) is checked for e running
    over the 0-cochain basis and f over scalar basis cochains of degree <= max_p
    (these products span C(G;E) in the degrees reached). Then
    lambda_g(v) = (-1)^l D(e_v)(g) + e_v(t(g)) for the section e_v = v at s(g).
    """
    E = D.src
    G = E.G
    d = quasi_action_to_operator(GradedBundle.line(G), {g: as_matrix([[1]]) for g in range(G.n_arrows)})
    for l in range(E.a, E.b + 1):
        S = _basis(E, l)
        for k, sigma, size, off in S.blocks:
            if k:
                continue
            for j in range(size):
                e = S.to_cochain({off + j: 1})
                De = D.apply(e)
                for p in range(max_p + 1):
                    for f in _scalar_basis(G, p):
                        lhs = D.apply(star(e, f))
                        df = d.apply(f)
                        rhs = star(De, f) + star(e, df).scale(-1 if l % 2 else 1)
                        if lhs != rhs:
                            raise NotLeibniz("Leibniz identity fails for the section %r and a degree-%d scalar cochain"
                                             % ((G.objects[sigma[0]], l, j), p))
    lam = {}
    for g in range(G.n_arrows):
        x, y = G.src[g], G.tgt[g]
        M = zeros(E.total(y), E.total(x))
        for l in range(E.a, E.b + 1):
            S = _basis(E, l)
            off0 = S.offset(0, (x,))
            if off0 is None:
                continue
            for j in range(E.dim(x, l)):
                e = S.to_cochain({off0 + j: 1})
                val = D.apply(e).value(1, (g,))[:, 0]
                col = val if l % 2 == 0 else -val
                col = col.copy()
                if y == x:
                    col[E.offset(x, l) + j] += 1
                M[:, E.offset(x, l) + j] = col
        lam[g] = M
    return lam


# ---------------------------------------------------------------------------
# reading tensors off C(G)-linear operators


def tensor_from_operator(op: CochainOperator, degree: int | None = None) -> Tensor:
    """The tensor T with L_T = op, read off on 0-cochains:
    T_k(tau) e = (-1)^{k l} (op e)(tau) for e of degree l at s(tau).

    Only correct when op is C(G)-linear; callers compare L_T with op afterwards.
    """
    E, F = op.src, op.tgt
    delta = op.degree if degree is None else degree
    G = E.G
    comps: dict[int, dict[tuple, np.ndarray]] = {}
    for l in range(E.a, E.b + 1):
        S = op.src_basis(l)
        T = op.tgt_basis(l)
        MT = op.matrix(l).transpose()
        for k, sigma, size, off in S.blocks:
            if k:
                continue
            x = sigma[0]
            for j in range(size):
                col = MT.row(off + j)
                if not col:
                    continue
                cidx = E.offset(x, l) + j
                for r, v in col.items():
                    m, tau, i = T.label(r)
                    if G.source(m, tau) != x:
                        raise ValueError("operator is not C(G)-linear")
                    y = G.target(m, tau)
                    bucket = comps.setdefault(m, {})
                    if tau not in bucket:
                        bucket[tau] = zeros(F.total(y), E.total(x))
                    bucket[tau][F.offset(y, l + delta - m) + i, cidx] = v if (m * l) % 2 == 0 else -v
    return Tensor(E, F, delta, comps)

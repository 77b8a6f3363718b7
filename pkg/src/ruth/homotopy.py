"""
Contractions, the perturbation series, inversion of quasi-isomorphisms and
transfer of a representation to its fiber cohomology.

Fiberwise data come from the harmonic splitting of each fiber complex (E_x, d):
with Laplacian L = d d^T + d^T d, P the orthogonal projection on ker L and the
Green operator Gr = (L + P)^{-1} - P,

    h = -Gr d^T,   i = basis of ker L,   p = (K^T K)^{-1} K^T,

so that i p - 1 = d h + h d, p i = 1, h i = 0, p h = 0, h h = 0. On acyclic
fibers this reads h d + d h + 1 = 0.

With delta = D - L_{R_0} the perturbed data are (ip - 1 = Dh + hD form)

    H   = h (1 - delta h)^{-1}
    Phi = p (1 - delta h)^{-1}
    D'  = p delta (1 - h delta)^{-1} i
    i'  = i + h delta (1 - h delta)^{-1} i

and delta h is nilpotent in each total degree, because it raises the cocycle
degree while h keeps it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .cochains import (
    GradedBundle,
    Tensor,
    dense_inverse,
    dhat0_matrix,
    eye,
    from_rmatrix,
    left_mult_matrix,
    to_rmatrix,
    zeros,
)
from .errors import NotAcyclic, NotQuasiIso, NotUnital, OrbitDimMismatch, StructureEquationsViolated
from .exactla import RationalMatrix, invert_spd, kernel_basis
from .operations import mapping_cone
from .rep import (
    CochainOperator,
    RepUpToHomotopy,
    RuthMorphism,
    _basis,
    operator_cohomology,
    tensor_from_operator,
    verify_morphism,
    verify_structure,
)

__all__ = [
    "ContractionData",
    "RuthContraction",
    "QuasiInverse",
    "Transfer",
    "contract_complex",
    "contract_fibers",
    "contract_ruth",
    "invert_quasi_iso",
    "transfer_to_cohomology",
    "fiber_cohomology_dims",
]


@dataclass
class ContractionData:
    """Fiberwise (i, p, h) for one complex (total-fiber matrices)."""

    d: np.ndarray
    h: np.ndarray
    i: np.ndarray
    p: np.ndarray
    degrees: tuple
    cohomology_degrees: tuple

    def check(self) -> dict:
        """Exact truth values of the side conditions."""
        d, h, i, p = self.d, self.h, self.i, self.p
        n = d.shape[0]
        ip = i @ p if i.size else zeros(n, n)
        return {
            "homotopy": np.array_equal(ip - eye(n), d @ h + h @ d),
            "h_squared": not (h @ h).any(),
            "pi": np.array_equal(p @ i, eye(i.shape[1])),
            "hi": not (h @ i).any() if i.size else True,
            "ph": not (p @ h).any() if p.size else True,
        }

    @property
    def acyclic(self) -> bool:
        return self.i.shape[1] == 0


def contract_complex(d: np.ndarray, degrees: Iterable[int], acyclic: bool = False, where=None) -> ContractionData:
    """Harmonic contraction of one finite complex (d of degree +1 on a graded space).

    With ``acyclic=True`` a nonzero cohomology raises NotAcyclic naming the
    degree (and ``where``, the object).
    """
    degrees = tuple(degrees)
    n = len(degrees)
    if n == 0:
        return ContractionData(d, zeros(0, 0), zeros(0, 0), zeros(0, 0), degrees, ())
    dT = d.T.copy()
    lap = d @ dT + dT @ d
    # kernel of the Laplacian, one degree at a time so basis vectors are homogeneous
    K_cols, kdegs = [], []
    for l in sorted(set(degrees)):
        idx = [j for j in range(n) if degrees[j] == l]
        sub = to_rmatrix(lap[np.ix_(idx, idx)])
        for v in kernel_basis(sub).vectors:
            col = [0] * n
            for a, x in v.items():
                col[idx[a]] = x
            K_cols.append(col)
            kdegs.append(l)
    if acyclic and K_cols:
        raise NotAcyclic(where, kdegs[0], kdegs.count(kdegs[0]))
    if K_cols:
        K = np.array(K_cols, dtype=object).T
        gram_inv = dense_inverse(K.T @ K)
        p = gram_inv @ K.T
        P = K @ p
        i = K
    else:
        i = zeros(n, 0)
        p = zeros(0, n)
        P = zeros(n, n)
    green = from_rmatrix(invert_spd(to_rmatrix(lap + P))) - P
    h = -(green @ dT)
    return ContractionData(d, _tidy(h), i, _tidy(p), degrees, tuple(kdegs))


def _tidy(M):
    from .cochains import _simplify
    return _simplify(np.array(M, dtype=object))


def contract_fibers(E: RepUpToHomotopy, acyclic: bool = False) -> dict:
    """Harmonic contraction of (E_x, R_0(x)) for every object x."""
    G, B = E.G, E.bundle
    return {x: contract_complex(E.r(0, (x,)), B.degrees(x), acyclic=acyclic, where=G.objects[x])
            for x in range(G.n_objects)}


def fiber_cohomology_dims(E: RepUpToHomotopy) -> dict:
    """{(object, degree): dim H^l(E_x, R_0)}."""
    out = {}
    for x, c in contract_fibers(E).items():
        for l in c.cohomology_degrees:
            out[x, l] = out.get((x, l), 0) + 1
    return out


def _fiber_tensor(src: GradedBundle, tgt: GradedBundle, degree: int, mats: dict) -> Tensor:
    return Tensor(src, tgt, degree, {0: {(x,): M for x, M in mats.items()}})


def _series(delta: dict, h: dict, n: int, limit: int):
    """sum_j (delta_{n-1} h_n)^j on C^n, with the nilpotency index."""
    step = delta[n - 1] @ h[n]
    ident = RationalMatrix.identity(step.rows)
    total, term = ident, ident
    for j in range(1, limit + 2):
        term = step @ term
        if term.is_zero():
            return total, j
        total = total + term
    raise AssertionError("delta h is not nilpotent within %d steps in degree %d" % (limit + 1, n))


@dataclass
class RuthContraction:
    rep: RepUpToHomotopy
    H: dict                         # n -> matrix C^n -> C^{n-1}
    tensor: Tensor                  # H = L_tensor
    nilpotency: dict                # n -> index N with (delta h)^N = 0
    degrees: tuple
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _perturbation_matrices(E: RepUpToHomotopy, degrees):
    D = E.operator()
    R0 = E.R.component(0)
    delta = {}
    for n in degrees:
        S, T = _basis(E.bundle, n), _basis(E.bundle, n + 1)
        delta[n] = D.matrix(n) - left_mult_matrix(R0, n, S, T)
    return delta


def _left(T: Tensor, n: int) -> RationalMatrix:
    return left_mult_matrix(T, n, _basis(T.src, n), _basis(T.tgt, n + T.degree))


def contract_ruth(E: RepUpToHomotopy, degrees: Iterable[int] | None = None, check_structure: bool = True) -> RuthContraction:
    """H with HD + DH + 1 = 0 on C(G;E), for E with acyclic fibers."""
    if check_structure:
        rep = verify_structure(E)
        if not rep.ok:
            raise StructureEquationsViolated("structure equations fail", rep)
    a, b = E.amplitude
    degrees = tuple(range(a - 1, b + 3)) if degrees is None else tuple(degrees)
    need = sorted(set(degrees) | set(range(a, b + 1)))
    fib = contract_fibers(E, acyclic=True)
    htens = _fiber_tensor(E.bundle, E.bundle, -1, {x: c.h for x, c in fib.items()})
    hm = {n: _left(htens, n) for n in set(need) | {n + 1 for n in need}}
    delta = _perturbation_matrices(E, {n - 1 for n in need} | set(need))
    H, nil = {}, {}
    for n in set(need) | {n + 1 for n in need}:
        if n - 1 not in delta:
            delta[n - 1] = _perturbation_matrices(E, [n - 1])[n - 1]
        S, N = _series(delta, hm, n, b - a + 1)
        H[n] = hm[n] @ S
        nil[n] = N
    op = CochainOperator(E.bundle, E.bundle, -1, lambda n: H[n])
    T = tensor_from_operator(op)
    D = E.operator()
    checks = {}
    checks["nilpotency_bound"] = all(v <= b - a + 1 for v in nil.values())
    checks["contracting"] = all(
        (H[n + 1] @ D.matrix(n) + D.matrix(n - 1) @ H[n] + RationalMatrix.identity(D.matrix(n).cols)).is_zero()
        for n in degrees)
    checks["C(G)-linear"] = all(_left(T, n) == H[n] for n in H)
    return RuthContraction(E, H, T, nil, degrees, checks)


# ---------------------------------------------------------------------------
# inverting quasi-isomorphisms


@dataclass
class QuasiInverse:
    Phi: RuthMorphism
    Psi: RuthMorphism
    h1: Tensor          # on E: Psi Phi - 1 = D h1 + h1 D
    h2: Tensor          # on F: Phi Psi - 1 = D h2 + h2 D
    degrees: tuple
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def _cone_split(Phi: RuthMorphism, C: RepUpToHomotopy, n: int):
    """Map basis indices of C(G;Cone)^n to ('E', index in C(E)^n) or ('F', index in C(F)^{n-1})."""
    E, F = Phi.source.bundle, Phi.target.bundle
    G = E.G
    SC, SE, SF = _basis(C.bundle, n), _basis(E, n), _basis(F, n - 1)
    out = {}
    for k, sigma, size, off in SC.blocks:
        y = G.target(k, sigma)
        l = n - k
        ne = E.dim(y, l)
        oe, of = SE.offset(k, sigma), SF.offset(k, sigma)
        for j in range(size):
            out[off + j] = ("E", oe + j) if j < ne else ("F", of + j - ne)
    return out


def _block(M: RationalMatrix, rows_map, cols_map, rpart, cpart, shape, sign=1) -> RationalMatrix:
    out = RationalMatrix(*shape)
    for r, c, v in M.entries():
        pr, ir = rows_map[r]
        pc, ic = cols_map[c]
        if pr == rpart and pc == cpart:
            out._add(ir, ic, sign * v)
    return out


def _check_quasi_iso(Phi: RuthMorphism, C: RepUpToHomotopy):
    G = C.G
    for x in range(G.n_objects):
        try:
            contract_complex(C.r(0, (x,)), C.bundle.degrees(x), acyclic=True, where=G.objects[x])
        except NotAcyclic as e:
            raise NotQuasiIso(G.objects[x], e.degree - 1) from None


def invert_quasi_iso(Phi: RuthMorphism, degrees: Iterable[int] | None = None) -> QuasiInverse:
    """Homotopy inverse of a quasi-isomorphism, read off a contraction of its cone.

    With the cone operator [[D_E, 0], [Phi, -D_F]] and H = [[A, B], [C, K]]:
    Psi = -B, h1 = A, h2 = -K.
    """
    E, F = Phi.source, Phi.target
    Cn = mapping_cone(Phi)
    _check_quasi_iso(Phi, Cn)
    lo = min(E.bundle.a, F.bundle.a)
    hi = max(E.bundle.b, F.bundle.b)
    degrees = tuple(range(lo - 1, hi + 3)) if degrees is None else tuple(degrees)
    need = set()
    for n in set(degrees) | set(range(lo, hi + 1)):
        need |= {n, n + 1, n + 2}
    con = contract_ruth(Cn, degrees=sorted(need), check_structure=False)
    H = con.H
    h1, psi, h2 = {}, {}, {}
    for n in sorted(need):
        if n not in H:
            continue
        cols = _cone_split(Phi, Cn, n)
        rows = _cone_split(Phi, Cn, n - 1)
        dE_n, dE_m = _basis(E.bundle, n).dim, _basis(E.bundle, n - 1).dim
        dF_n1, dF_n2 = _basis(F.bundle, n - 1).dim, _basis(F.bundle, n - 2).dim
        h1[n] = _block(H[n], rows, cols, "E", "E", (dE_m, dE_n))
        psi[n - 1] = _block(H[n], rows, cols, "E", "F", (dE_m, dF_n1), sign=-1)
        h2[n - 1] = _block(H[n], rows, cols, "F", "F", (dF_n2, dF_n1), sign=-1)
    Psi_t = tensor_from_operator(CochainOperator(F.bundle, E.bundle, 0, lambda n: psi[n]))
    h1_t = tensor_from_operator(CochainOperator(E.bundle, E.bundle, -1, lambda n: h1[n]))
    h2_t = tensor_from_operator(CochainOperator(F.bundle, F.bundle, -1, lambda n: h2[n]))
    Psi = RuthMorphism(F, E, Psi_t)
    checks = {}
    checks["C(G)-linear"] = (all(_left(Psi_t, n) == psi[n] for n in psi)
                             and all(_left(h1_t, n) == h1[n] for n in h1)
                             and all(_left(h2_t, n) == h2[n] for n in h2))
    checks["Psi is a morphism"] = verify_morphism(Psi).ok
    DE, DF = E.operator(), F.operator()
    L = Phi.operator()
    ok1 = ok2 = True
    for n in degrees:
        if n in psi and n in h1 and n + 1 in h1:
            lhs = psi[n] @ L.matrix(n) - RationalMatrix.identity(_basis(E.bundle, n).dim)
            rhs = DE.matrix(n - 1) @ h1[n] + h1[n + 1] @ DE.matrix(n)
            ok1 &= lhs == rhs
        if n in psi and n in h2 and n + 1 in h2:
            lhs = L.matrix(n) @ psi[n] - RationalMatrix.identity(_basis(F.bundle, n).dim)
            rhs = DF.matrix(n - 1) @ h2[n] + h2[n + 1] @ DF.matrix(n)
            ok2 &= lhs == rhs
    checks["Psi Phi - 1 = D h1 + h1 D"] = ok1
    checks["Phi Psi - 1 = D h2 + h2 D"] = ok2
    return QuasiInverse(Phi, Psi, h1_t, h2_t, degrees, checks)


# ---------------------------------------------------------------------------
# transfer to cohomology


@dataclass
class Transfer:
    source: RepUpToHomotopy
    target: RepUpToHomotopy         # on the bundle of fiber cohomologies, R_0 = 0
    Phi: RuthMorphism               # E -> H(E), Phi_0 = p
    inclusion: RuthMorphism         # H(E) -> E, i' = i + h delta (1 - h delta)^{-1} i
    degrees: tuple
    checks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def transfer_to_cohomology(E: RepUpToHomotopy, degrees: Iterable[int] | None = None, verify: bool = True) -> Transfer:
    """Push a unital representation to its fiber cohomology by homological perturbation."""
    if E.unitality_class() != "unital":
        raise NotUnital("transfer needs a unital representation")
    rep = verify_structure(E)
    if not rep.ok:
        raise StructureEquationsViolated("structure equations fail", rep)
    G, B = E.G, E.bundle
    a, b = B.amplitude
    fib = contract_fibers(E)
    dims = {}
    for x, c in fib.items():
        for l in c.cohomology_degrees:
            dims[x, l] = dims.get((x, l), 0) + 1
    HB = GradedBundle(G, dims, (a, b))
    i_t = _fiber_tensor(HB, B, 0, {x: c.i for x, c in fib.items()})
    p_t = _fiber_tensor(B, HB, 0, {x: c.p for x, c in fib.items()})
    h_t = _fiber_tensor(B, B, -1, {x: c.h for x, c in fib.items()})
    # orbit constancy of the fiber cohomology, via lambda_g lambda_{g^-1} = 1 on it
    for g in range(G.n_arrows):
        x, y = G.src[g], G.tgt[g]
        back = fib[x].p @ E.r(1, (G.inv[g],)) @ fib[y].i @ fib[y].p @ E.r(1, (g,)) @ fib[x].i
        if not np.array_equal(back, eye(fib[x].i.shape[1])) or fib[x].i.shape[1] != fib[y].i.shape[1]:
            raise OrbitDimMismatch("fiber cohomology is not transported isomorphically along %r" % (G.arrows[g],))
    degrees = tuple(range(a - 1, b + 3)) if degrees is None else tuple(degrees)
    need = sorted(set(degrees) | set(range(a, b + 1)))
    allN = set(need) | {n + 1 for n in need} | {n - 1 for n in need}
    delta = _perturbation_matrices(E, allN | {n - 1 for n in allN})
    hm = {n: _left(h_t, n) for n in allN | {n + 1 for n in allN}}
    im = {n: _left(i_t, n) for n in allN | {n + 1 for n in allN}}
    pm = {n: _left(p_t, n) for n in allN | {n + 1 for n in allN}}
    width = b - a + 1
    small, phi, incl = {}, {}, {}
    for n in sorted(allN):
        S, _ = _series(delta, hm, n, width)              # (1 - delta h)^{-1} on C^n
        phi[n] = pm[n] @ S
        # (1 - h delta)^{-1} on C^n:  1 + h (1 - delta h)^{-1} delta
        S1, _ = _series(delta, hm, n + 1, width)
        inv_hd = RationalMatrix.identity(delta[n].cols) + hm[n + 1] @ S1 @ delta[n]
        incl[n] = im[n] + hm[n + 1] @ S1 @ delta[n] @ im[n]
        small[n] = pm[n + 1] @ delta[n] @ inv_hd @ im[n]
    dh0 = {n: dhat0_matrix(HB, n, _basis(HB, n), _basis(HB, n + 1)) for n in allN}
    R_op = CochainOperator(HB, HB, 1, lambda n: small[n] - dh0[n])
    RH = tensor_from_operator(R_op)
    HE = RepUpToHomotopy(HB, RH, name="H(%s)" % (E.name or "E"))
    Phi_t = tensor_from_operator(CochainOperator(B, HB, 0, lambda n: phi[n]))
    Inc_t = tensor_from_operator(CochainOperator(HB, B, 0, lambda n: incl[n]))
    Phi = RuthMorphism(E, HE, Phi_t)
    Inc = RuthMorphism(HE, E, Inc_t)
    checks = {}
    if verify:
        checks["R_0 = 0"] = 0 not in RH.comps
        checks["C(G)-linear"] = (all(_left(RH, n) + dh0[n] == small[n] for n in small)
                                 and all(_left(Phi_t, n) == phi[n] for n in phi)
                                 and all(_left(Inc_t, n) == incl[n] for n in incl))
        checks["H(E) structure"] = verify_structure(HE).ok
        checks["Phi morphism"] = verify_morphism(Phi).ok
        checks["inclusion morphism"] = verify_morphism(Inc).ok
        checks["Phi_0 = p"] = all(np.array_equal(Phi.phi(0, (x,)), fib[x].p) for x in range(G.n_objects))
        checks["H(E) unital"] = HE.unitality_class() == "unital"
        hE = operator_cohomology(E.operator(), degrees)
        hH = operator_cohomology(HE.operator(), degrees)
        checks["cohomology dims agree"] = hE == hH
    return Transfer(E, HE, Phi, Inc, degrees, checks)

"""
Standard representations and random generators of valid ones.

Random representations are produced by transporting simple valid ones along
random invertible degree-zero tensors (gauge transformations); that keeps
the structure equations and, with normalized higher components, unitality.
"""

from __future__ import annotations

import random
from fractions import Fraction
from typing import Mapping

import numpy as np

from .cochains import GradedBundle, Tensor, as_matrix, eye, scalar_cochain, zeros
from .groupoid import FiniteGroupoid, GSpace
from .operations import direct_sum, gauge_transform, mapping_cone, shift
from .rep import RepUpToHomotopy, RuthMorphism, trivial_rep

__all__ = [
    "permutation_rep",
    "character_rep",
    "sign_rep",
    "conjugated_trivial",
    "cocycle_rep",
    "scalar_differential",
    "random_normalized_cochain",
    "exact_cocycle",
    "random_invertible",
    "random_gauge",
    "random_unital_rep",
    "random_quasi_iso",
    "acyclic_rep",
    "perturb",
]


def permutation_rep(P: GSpace, degree: int = 0) -> RepUpToHomotopy:
    """Fiber at x is Q^{nu^{-1}(x)}; g acts by permuting points."""
    G = P.G
    fib = {x: [p for p in range(len(P.points)) if P.moment[p] == x] for x in range(G.n_objects)}
    pos = {p: i for x in fib for i, p in enumerate(fib[x])}
    B = GradedBundle(G, {(x, degree): len(fib[x]) for x in fib}, (degree, degree))
    lam = {}
    for g in range(G.n_arrows):
        x, y = G.src[g], G.tgt[g]
        M = zeros(len(fib[y]), len(fib[x]))
        for p in fib[x]:
            M[pos[P.act[g, p]], pos[p]] = 1
        lam[(g,)] = M
    return RepUpToHomotopy(B, {1: lam}, name="perm")


def character_rep(G: FiniteGroupoid, chi: Mapping[int, object], degree: int = 0) -> RepUpToHomotopy:
    """A line with g acting by the scalar chi(g) (chi must be multiplicative)."""
    B = GradedBundle.line(G, degree)
    return RepUpToHomotopy(B, {1: {(g,): as_matrix([[chi[g]]]) for g in range(G.n_arrows)}}, name="chi")


def sign_rep(G: FiniteGroupoid) -> RepUpToHomotopy:
    """For Z/n with n even: the generator acts by -1."""
    chi = {}
    for g, a in enumerate(G.arrows):
        chi[g] = -1 if int(a[1:]) % 2 else 1
    return character_rep(G, chi)


def conjugated_trivial(G: FiniteGroupoid, mats: Mapping[int, np.ndarray], degree: int = 0) -> RepUpToHomotopy:
    """Trivial Q^m with lambda_g = A_{t(g)} A_{s(g)}^{-1}."""
    from .cochains import dense_inverse
    m = mats[0].shape[0]
    B = GradedBundle.constant(G, {degree: m})
    inv = {x: dense_inverse(A) for x, A in mats.items()}
    lam = {(g,): mats[G.tgt[g]] @ inv[G.src[g]] for g in range(G.n_arrows)}
    return RepUpToHomotopy(B, {1: lam}, name="conj-trivial")


def scalar_differential(G: FiniteGroupoid):
    """The differential d on C(G) (structure operator of the trivial line)."""
    return trivial_rep(G).operator()


def random_normalized_cochain(rng: random.Random, G: FiniteGroupoid, k: int, lo=-2, hi=2) -> Tensor:
    vals = {s: rng.randint(lo, hi) for s in G.strings(k) if not G.is_degenerate(k, s)}
    return scalar_cochain(G, k, vals)


def cocycle_rep(G: FiniteGroupoid, eta: Tensor | Mapping, k: int) -> RepUpToHomotopy:
    """Lines in degrees 0 and k-1, trivial action, R_k = eta: E^{k-1} -> E^0.

    eta must be a closed k-cochain for this to be a representation.
    """
    if isinstance(eta, Tensor):
        vals = {s: M[0, 0] for s, M in eta.comps.get(k, {}).items()}
    else:
        vals = dict(eta)
    B = GradedBundle.constant(G, {0: 1, k - 1: 1})
    comps = {1: {(g,): eye(2) for g in range(G.n_arrows)}, k: {}}
    for s, v in vals.items():
        if v:
            M = zeros(2, 2)
            M[0, 1] = v
            comps[k][s] = M
    return RepUpToHomotopy(B, comps, name="cocycle")


def exact_cocycle(rng: random.Random, G: FiniteGroupoid, k: int) -> Tensor:
    """eta = d f for a random normalized f in C^{k-1}(G); normalized and closed."""
    f = random_normalized_cochain(rng, G, k - 1)
    return scalar_differential(G).apply(f)


def random_invertible(rng: random.Random, n: int, lo=-2, hi=2) -> np.ndarray:
    """Random exact invertible matrix: (unit lower) x (nonzero diagonal) x (unit upper)."""
    L, U, Dg = eye(n), eye(n), zeros(n, n)
    for i in range(n):
        Dg[i, i] = rng.choice([1, -1, 2, Fraction(1, 2)])
        for j in range(i):
            L[i, j] = rng.randint(lo, hi)
            U[j, i] = rng.randint(lo, hi)
    return L @ Dg @ U


def random_gauge(rng: random.Random, E: RepUpToHomotopy, higher: bool = True, density: float = 0.6) -> Tensor:
    """Random invertible degree-zero tensor with Phi_0 block diagonal by degree
    and normalized Phi_k (zero on degenerate strings) of degree -k."""
    B, G = E.bundle, E.G
    comps = {0: {}}
    for x in range(G.n_objects):
        M = zeros(B.total(x), B.total(x))
        for l in range(B.a, B.b + 1):
            n = B.dim(x, l)
            if n:
                sl = B.block(x, l)
                M[sl, sl] = random_invertible(rng, n)
        comps[0][(x,)] = M
    if higher:
        for k in range(1, B.b - B.a + 1):
            comps[k] = {}
            for sigma in G.strings(k):
                if G.is_degenerate(k, sigma) or rng.random() > density:
                    continue
                y, x = G.target(k, sigma), G.source(k, sigma)
                M = zeros(B.total(y), B.total(x))
                for l in range(B.a, B.b + 1):
                    rs, cs = B.block(y, l - k), B.block(x, l)
                    if l - k < B.a or rs.stop == rs.start or cs.stop == cs.start:
                        continue
                    for i in range(rs.start, rs.stop):
                        for j in range(cs.start, cs.stop):
                            M[i, j] = rng.randint(-2, 2)
                comps[k][sigma] = M
    return Tensor(B, B, 0, comps)


def acyclic_rep(E: RepUpToHomotopy) -> RepUpToHomotopy:
    """The cone of the identity of E: acyclic fibers, same groupoid."""
    return mapping_cone(RuthMorphism.identity(E))


def _base_rep(rng: random.Random, G: FiniteGroupoid, P: GSpace | None, width: int) -> RepUpToHomotopy:
    choices = ["trivial", "conj"]
    if P is not None:
        choices.append("perm")
    if width >= 1:
        choices += ["cocycle", "cone"]
    kind = rng.choice(choices)
    if kind == "trivial":
        E = trivial_rep(G)
    elif kind == "conj":
        m = rng.randint(1, 2)
        E = conjugated_trivial(G, {x: random_invertible(rng, m) for x in range(G.n_objects)})
    elif kind == "perm":
        E = permutation_rep(P)
    elif kind == "cocycle":
        k = rng.randint(2, width + 1)
        E = cocycle_rep(G, exact_cocycle(rng, G, k), k)
    else:
        E = acyclic_rep(trivial_rep(G))
    return E


def random_unital_rep(rng: random.Random, G: FiniteGroupoid, P: GSpace | None = None, max_width: int = 2,
                      summands: int | None = None, gauge: bool = True, base_degree: int = 0) -> RepUpToHomotopy:
    """A random unital representation with amplitude inside [base, base + max_width]."""
    n = summands if summands is not None else rng.randint(1, 2)
    E = None
    for _ in range(n):
        F = _base_rep(rng, G, P, max_width)
        room = max_width - (F.bundle.b - F.bundle.a)
        a = base_degree if E is None else E.bundle.a
        F = shift(F, a + rng.randint(0, room) - F.bundle.a)
        E = F if E is None else direct_sum(E, F)[0]
    if gauge:
        E = gauge_transform(E, random_gauge(rng, E))[0]
    return E


def random_quasi_iso(rng: random.Random, G: FiniteGroupoid, P: GSpace | None = None, max_width: int = 2):
    """A quasi-isomorphism that is not an isomorphism: the inclusion of E into
    E ⊕ (acyclic), between random gauge isomorphisms on both ends."""
    E = random_unital_rep(rng, G, P, max_width=max(0, max_width - 1), gauge=False)
    A = acyclic_rep(shift(trivial_rep(G), E.bundle.a))
    S, (inc, _), _ = direct_sum(E, A)
    _, _, from_e1 = gauge_transform(E, random_gauge(rng, E))
    _, to_s1, _ = gauge_transform(S, random_gauge(rng, S))
    return to_s1 @ (inc @ from_e1)


def perturb(rng: random.Random, E: RepUpToHomotopy) -> RepUpToHomotopy:
    """Add a random nonzero entry to one allowed block of some R_k."""
    B, G = E.bundle, E.G
    R = {k: {s: M.copy() for s, M in d.items()} for k, d in E.R.comps.items()}
    spots = []
    for k in range(0, B.b - B.a + 2):
        for sigma in G.strings(k):
            y, x = G.target(k, sigma), G.source(k, sigma)
            for l in range(B.a, B.b + 1):
                if B.dim(x, l) and B.dim(y, l + 1 - k):
                    spots.append((k, sigma, l))
    k, sigma, l = rng.choice(spots)
    y, x = G.target(k, sigma), G.source(k, sigma)
    rs, cs = B.block(y, l + 1 - k), B.block(x, l)
    M = R.setdefault(k, {}).get(sigma)
    if M is None:
        M = zeros(B.total(y), B.total(x))
        R[k][sigma] = M
    i = rng.randrange(rs.start, rs.stop)
    j = rng.randrange(cs.start, cs.stop)
    M[i, j] += rng.choice([1, -1, 2])
    return RepUpToHomotopy(B, R)

import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ruth.cochains import CochainBasis, GradedBundle, Tensor, as_matrix, dhat0, eye, scalar_cochain, star, zeros
from ruth.constructions import (acyclic_rep, cocycle_rep, conjugated_trivial, exact_cocycle, random_gauge,
                                random_invertible, random_unital_rep, scalar_differential, sign_rep)
from ruth.exactla import RationalMatrix, solve
from ruth.groupoid import cyclic_group, pair_groupoid, unit_groupoid
from ruth.operations import gauge_transform, shift, tensor_inverse
from ruth.rep import (RepUpToHomotopy, RuthMorphism, cohomology, is_unital, morphism_residual, normalized_subspace,
                      operator_to_quasi_action, ordinary_rep, preserves_normalized, quasi_action_to_operator,
                      trivial_rep, verify_morphism, verify_structure)


def copy_R(E):
    return {k: {s: M.copy() for s, M in d.items()} for k, d in E.R.comps.items()}


def line_tensor(G, k, values, degree=None):
    L = GradedBundle.line(G)
    return Tensor(L, L, k if degree is None else degree, {k: {s: as_matrix([[v]]) for s, v in values.items()}})


# the convolution product ----------------------------------------------------

def test_star_in_degree_zero_is_pointwise():
    G = cyclic_group(3)
    f = scalar_cochain(G, 0, {(0,): 5})
    h = scalar_cochain(G, 2, {s: i + 1 for i, s in enumerate(G.strings(2))})
    assert star(f, h) == h.scale(5)
    assert star(h, f) == h.scale(5)


def test_star_sign_on_one_cochains():
    G = cyclic_group(2)
    g = G.arr("g1")
    f = scalar_cochain(G, 1, {(g,): 1})
    assert star(f, f).value(2, (g, g))[0, 0] == -1


def test_star_sign_for_tensors_of_bidegree_one_zero():
    G = cyclic_group(3)
    T = line_tensor(G, 1, {(1,): 2, (2,): 3})
    U = line_tensor(G, 1, {(1,): 5, (2,): 7})
    P = star(T, U)
    assert P.value(2, (1, 2))[0, 0] == -2 * 7
    assert P.value(2, (2, 1))[0, 0] == -3 * 5


def test_identity_tensor_acts_trivially():
    G = pair_groupoid(2)
    E = random_unital_rep(random.Random(4), G, max_width=1)
    B = E.bundle
    one = Tensor(B, B, 0, {0: {(x,): eye(B.total(x)) for x in range(G.n_objects)}})
    S = CochainBasis(B, B.a)
    for i in range(S.dim):
        eta = S.to_cochain({i: 1})
        assert star(one, eta) == eta


@pytest.mark.parametrize("seed", range(3))
def test_star_is_associative(seed):
    rng = random.Random(seed)
    G = cyclic_group(2)
    E = random_unital_rep(rng, G, max_width=2)
    T = [random_gauge(rng, E) for _ in range(3)]
    assert star(star(T[0], T[1]), T[2]) == star(T[0], star(T[1], T[2]))
    assert star(star(T[0], E.R), T[1]) == star(T[0], star(E.R, T[1]))


def test_scalar_leibniz_on_z2():
    G = cyclic_group(2)
    d = scalar_differential(G)
    for k, p in itertools.product(range(3), repeat=2):
        if k + p > 3:
            continue
        for s, t in itertools.product(G.strings(k), G.strings(p)):
            f, h = scalar_cochain(G, k, {s: 1}), scalar_cochain(G, p, {t: 1})
            lhs = d.apply(star(f, h))
            rhs = star(d.apply(f), h) + star(f, d.apply(h)).scale((-1) ** k)
            assert lhs == rhs


def test_dhat0_vanishes_on_degree_zero_endomorphisms():
    G = pair_groupoid(2)
    B = GradedBundle.constant(G, {0: 2})
    T = Tensor(B, B, 0, {0: {(x,): as_matrix([[1, 2], [3, 4]]) for x in range(2)}})
    assert dhat0(T).is_zero()


def test_dhat0_squares_to_zero_on_z2():
    G = cyclic_group(2)
    for k in range(3):
        for s in G.strings(k):
            T = line_tensor(G, k, {s: 1})
            assert dhat0(dhat0(T)).is_zero()
            c = scalar_cochain(G, k, {s: 1})
            assert dhat0(dhat0(c)).is_zero()


@pytest.mark.parametrize("seed", range(3))
def test_dhat0_is_a_derivation(seed):
    rng = random.Random(seed)
    G = cyclic_group(2) if seed % 2 else pair_groupoid(2)
    E = random_unital_rep(rng, G, max_width=2)
    S = CochainBasis(E.bundle, E.bundle.a + 1)
    for T in (random_gauge(rng, E), E.R):
        for i in range(S.dim):
            eta = S.to_cochain({i: 1})
            lhs = dhat0(star(T, eta))
            rhs = star(dhat0(T), eta) + star(T, dhat0(eta)).scale((-1) ** T.degree)
            assert lhs == rhs


# structure operator and verification ----------------------------------------

def test_structure_operator_of_trivial_rep_on_a_point():
    D = trivial_rep(unit_groupoid(1)).operator()
    assert D.matrix(0).is_zero()


def test_structure_operator_is_the_signed_group_differential():
    G = cyclic_group(2)
    D = trivial_rep(G).operator()
    assert D.matrix(0).to_dense() == [[0], [0]]
    # rows (e,e), (e,g), (g,e), (g,g); columns f(e), f(g); D = -delta on C^1
    assert D.matrix(1).to_dense() == [[-1, 0], [-1, 0], [-1, 0], [1, -2]]
    assert cohomology(trivial_rep(G), [0]) == {0: 1}


def test_only_a_differential():
    U = unit_groupoid(2)
    B = GradedBundle(U, {(x, l): 1 for x in range(2) for l in range(3)}, (0, 2))
    good = as_matrix([[0, 0, 0], [1, 0, 0], [0, 0, 0]])
    bad = as_matrix([[0, 0, 0], [1, 0, 0], [0, 1, 0]])
    for d, ok in ((good, True), (bad, False)):
        E = RepUpToHomotopy(B, {0: {(x,): d for x in range(2)}, 1: {(g,): eye(3) for g in range(2)}})
        r = verify_structure(E)
        assert r.ok is ok and r.agree


def test_sign_rep_is_valid():
    r = verify_structure(sign_rep(cyclic_group(2)))
    assert r.ok and r.residuals == []


def test_cocycle_rep_and_its_corruption():
    G = cyclic_group(2)
    eta = exact_cocycle(random.Random(3), G, 2)
    E = cocycle_rep(G, eta, 2)
    assert verify_structure(E).ok
    R = copy_R(E)
    s = (G.arr("g0"), G.arr("g1"))
    R[2][s] = zeros(2, 2)
    R[2][s][0, 1] = 1
    r = verify_structure(RepUpToHomotopy(E.bundle, R))
    assert not r.equations_hold and not r.d_squared_zero and r.agree
    # the broken equation is the next one up: R_2 enters through Dhat0(R_2)
    assert {res[0] for res in r.residuals} == {3}


def test_identity_morphism_is_valid():
    E = random_unital_rep(random.Random(1), cyclic_group(3), max_width=1)
    assert verify_morphism(RuthMorphism.identity(E)).ok


@pytest.mark.parametrize("seed", range(6))
def test_pure_homotopy_morphisms_between_zero_differential_reps(seed):
    rng = random.Random(seed)
    G = cyclic_group(2)
    B = GradedBundle.constant(G, {0: 1, 1: 1})
    E = RepUpToHomotopy(B, {})                    # D = Dhat0 only
    vals = {(g,): rng.randint(-1, 1) for g in range(G.n_arrows)}
    comps = {}
    for s, v in vals.items():
        M = zeros(2, 2)
        M[0, 1] = v
        comps[s] = M
    Phi = RuthMorphism(E, E, {1: comps})
    assert verify_morphism(Phi).ok == dhat0(Phi.Phi).is_zero()


def _solve_for_target(E, Phi0, Phi1, unknown_slots):
    """Fill the target's (k, string, i, j) slots so that Phi0 + Phi1 is a morphism."""
    B = E.bundle
    n0 = {x: B.total(x) for x in range(E.G.n_objects)}
    rho = {(x,): E.r(0, (x,)) for x in range(E.G.n_objects)}

    def build(u):
        comps = {0: dict(rho), 1: {}, 2: {}}
        for (k, s, i, j), v in zip(unknown_slots, u):
            if v:
                y, x = E.G.target(k, s), E.G.source(k, s)
                M = comps[k].setdefault(s, zeros(n0[y], n0[x]))
                M[i, j] = v
        return RuthMorphism(E, RepUpToHomotopy(B, comps), {0: Phi0, 1: Phi1})

    def resid(u):
        P = build(u)
        return [v for k in range(4) for s in E.G.strings(k) for v in morphism_residual(P, k, s).flatten().tolist()]

    zero = [0] * len(unknown_slots)
    r0 = resid(zero)
    cols = []
    for c in range(len(unknown_slots)):
        u = list(zero)
        u[c] = 1
        cols.append({i: a - b for i, (a, b) in enumerate(zip(resid(u), r0)) if a - b})
    A = RationalMatrix.from_columns(len(r0), cols)
    sol = solve(A, {i: -v for i, v in enumerate(r0) if v})
    assert sol is not None
    return build([sol.get(c, 0) for c in range(len(unknown_slots))])


@pytest.mark.parametrize("seed", [5, 6])
def test_two_component_isomorphism_between_two_term_reps(seed):
    rng = random.Random(seed)
    G = cyclic_group(3)
    E0 = shift(acyclic_rep(trivial_rep(G)), 1)
    E = gauge_transform(E0, random_gauge(rng, E0))[0]
    B, x = E.bundle, 0
    n = B.total(x)
    lo, hi = B.block(x, B.a).start, B.block(x, B.b).start
    Psi1 = {}
    for g in range(G.n_arrows):
        if not G.is_unit(g):
            M = zeros(n, n)
            M[lo, hi] = rng.randint(1, 3)
            Psi1[(g,)] = M
    slots = [(1, (g,), i, i) for g in range(G.n_arrows) for i in range(n)]
    slots += [(2, s, lo, hi) for s in G.strings(2)]
    Psi = _solve_for_target(E, {(x,): eye(n)}, Psi1, slots)
    assert verify_morphism(Psi).ok
    assert verify_structure(Psi.target).ok and is_unital(Psi.target)
    assert Psi.target != E
    minus = Tensor(B, B, 0, {0: {(x,): eye(n)}, 1: {s: -M for s, M in Psi1.items()}})
    assert tensor_inverse(Psi.Phi) == minus


# cohomology ----------------------------------------------------------------

def test_unit_groupoid_cohomology_is_pointwise():
    U = unit_groupoid(2)
    B = GradedBundle(U, {(0, 0): 1, (0, 1): 1, (1, 0): 2, (1, 1): 1}, (0, 1))
    d0 = as_matrix([[0, 0], [1, 0]])
    d1 = as_matrix([[0, 0, 0], [0, 0, 0], [1, 1, 0]])
    E = RepUpToHomotopy(B, {0: {(0,): d0, (1,): d1}, 1: {(g,): eye(B.total(g)) for g in range(2)}})
    assert cohomology(E, range(-1, 3)) == {-1: 0, 0: 1, 1: 0, 2: 0}


@pytest.mark.parametrize("G", [cyclic_group(2), pair_groupoid(3)], ids=["Z2", "pair3"])
def test_trivial_rep_cohomology(G):
    assert cohomology(trivial_rep(G), range(0, 5)) == {0: 1, 1: 0, 2: 0, 3: 0, 4: 0}


# quasi-actions ---------------------------------------------------------------

def test_trivial_quasi_action_gives_the_scalar_differential():
    G = cyclic_group(3)
    L = GradedBundle.line(G)
    D = quasi_action_to_operator(L, {g: as_matrix([[1]]) for g in range(G.n_arrows)})
    d = scalar_differential(G)
    for n in range(3):
        assert D.matrix(n) == d.matrix(n)


@pytest.mark.parametrize("seed", range(3))
def test_quasi_action_round_trip(seed):
    rng = random.Random(seed)
    G = cyclic_group(2)
    B = GradedBundle.constant(G, {0: 2})
    lam = {g: as_matrix([[rng.randint(-2, 2) for _ in range(2)] for _ in range(2)]) for g in range(G.n_arrows)}
    back = operator_to_quasi_action(quasi_action_to_operator(B, lam), max_p=1)
    assert all(np.array_equal(back[g], lam[g]) for g in lam)


def test_ordinary_rep_operator_squares_to_zero():
    G = pair_groupoid(2)
    E = conjugated_trivial(G, {x: random_invertible(random.Random(x), 2) for x in range(2)})
    D = quasi_action_to_operator(E.bundle, {g: E.r(1, (g,)) for g in range(G.n_arrows)})
    for n in range(3):
        assert (D.matrix(n + 1) @ D.matrix(n)).is_zero()


# normalized cochains -------------------------------------------------------

def test_normalized_subspaces():
    U = unit_groupoid(3)
    assert all(normalized_subspace(GradedBundle.line(U), k, 0) == [] for k in (1, 2))
    G = cyclic_group(2)
    assert normalized_subspace(GradedBundle.line(G), 1, 0) == [((G.arr("g1"),), 0)]


@pytest.mark.parametrize("seed", range(4))
def test_unital_reps_preserve_normalized_cochains(seed):
    E = random_unital_rep(random.Random(seed), pair_groupoid(2), max_width=1)
    assert is_unital(E)
    a, b = E.bundle.amplitude
    assert preserves_normalized(E.operator(), range(a, b + 2))


def test_non_unital_reps_do_not():
    G = cyclic_group(2)
    f = scalar_cochain(G, 1, {(0,): 1, (1,): 2})          # not normalized
    E = cocycle_rep(G, scalar_differential(G).apply(f), 2)
    assert verify_structure(E).ok and E.unitality_class() == "weakly-unital"
    assert not preserves_normalized(E.operator(), range(0, 3))
    Z = ordinary_rep(GradedBundle.line(G), {g: as_matrix([[0]]) for g in range(2)})
    assert verify_structure(Z).ok and Z.unitality_class() == "none"
    assert not preserves_normalized(Z.operator(), range(0, 2))


# properties ----------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["Z2", "Z3", "pair2"]), st.booleans())
def test_equations_hold_iff_d_squared_vanishes(seed, gname, corrupt):
    from ruth.constructions import perturb
    G = {"Z2": cyclic_group(2), "Z3": cyclic_group(3), "pair2": pair_groupoid(2)}[gname]
    rng = random.Random(seed)
    E = random_unital_rep(rng, G, max_width=2)
    if corrupt:
        E = perturb(rng, E)
    r = verify_structure(E)
    assert r.equations_hold == r.d_squared_zero
    if not corrupt:
        assert r.ok


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_gauge_transport_keeps_reps_valid(seed):
    rng = random.Random(seed)
    E = random_unital_rep(rng, cyclic_group(2), max_width=2, gauge=False)
    E2, to, back = gauge_transform(E, random_gauge(rng, E))
    assert verify_structure(E2).ok and is_unital(E2)
    assert verify_morphism(to).ok and verify_morphism(back).ok
    assert (back @ to).Phi == RuthMorphism.identity(E).Phi

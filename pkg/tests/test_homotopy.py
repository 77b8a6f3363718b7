import random
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ruth.cochains import GradedBundle, as_matrix, eye, zeros
from ruth.constructions import (acyclic_rep, cocycle_rep, conjugated_trivial, exact_cocycle, random_gauge,
                                random_invertible, random_quasi_iso, random_unital_rep, sign_rep)
from ruth.errors import NotAcyclic, NotQuasiIso, NotUnital
from ruth.groupoid import cyclic_group, pair_groupoid
from ruth.homotopy import contract_complex, contract_ruth, invert_quasi_iso, transfer_to_cohomology
from ruth.operations import direct_sum, gauge_transform
from ruth.rep import RuthMorphism, cohomology, ordinary_rep, trivial_rep, verify_morphism


def test_unit_differential_contracts_by_minus_its_transpose():
    d = as_matrix([[0, 0], [1, 0]])
    c = contract_complex(d, [0, 1], acyclic=True)
    assert c.h.tolist() == [[0, -1], [0, 0]]
    assert np.array_equal(d @ c.h + c.h @ d + eye(2), zeros(2, 2))
    assert all(c.check().values())


def test_doubling_differential():
    d = as_matrix([[0, 0], [2, 0]])
    lap = d @ d.T + d.T @ d
    assert lap.tolist() == [[4, 0], [0, 4]]
    c = contract_complex(d, [0, 1], acyclic=True)
    assert c.h[0, 1] == Fraction(-1, 2)
    assert np.array_equal(d @ c.h + c.h @ d + eye(2), zeros(2, 2))
    # the opposite sign does not contract
    wrong = -c.h
    assert not np.array_equal(d @ wrong + wrong @ d + eye(2), zeros(2, 2))


def test_zero_complex():
    c = contract_complex(zeros(0, 0), [])
    assert c.h.shape == (0, 0) and all(c.check().values())


def test_non_acyclic_fiber_is_rejected():
    with pytest.raises(NotAcyclic):
        contract_complex(as_matrix([[0, 0], [0, 0]]), [0, 1], acyclic=True)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_harmonic_contraction_side_conditions(seed):
    rng = random.Random(seed)
    # a random three-term complex: d2 d1 = 0 built as d1 = A, d2 = B with B A = 0
    n0, n1 = rng.randint(0, 2), rng.randint(1, 3)
    A = as_matrix([[rng.randint(-2, 2) for _ in range(n0)] for _ in range(n1)]) if n0 else zeros(n1, 0)
    N = n0 + n1
    d = zeros(N, N)
    d[n0:, :n0] = A
    c = contract_complex(d, [0] * n0 + [1] * n1)
    assert all(c.check().values())
    assert c.i.shape[1] == N - 2 * np.linalg.matrix_rank(A.astype(float)) if n0 else c.i.shape[1] == n1


@pytest.mark.parametrize("seed", range(3))
def test_cone_of_identity_is_contractible(seed):
    rng = random.Random(seed)
    E = conjugated_trivial(pair_groupoid(2), {x: random_invertible(rng, 2) for x in range(2)})
    C = contract_ruth(acyclic_rep(E))
    assert all(C.checks.values())


@pytest.mark.parametrize("seed", range(3))
def test_nilpotency_index_within_width(seed):
    rng = random.Random(seed)
    E = random_unital_rep(rng, cyclic_group(2), max_width=2)
    A = acyclic_rep(E)
    C = contract_ruth(A)
    a, b = A.amplitude
    assert max(C.nilpotency.values()) <= b - a + 1
    assert C.checks["contracting"]


def test_contracting_an_acyclified_cocycle_rep():
    G = cyclic_group(2)
    E = cocycle_rep(G, exact_cocycle(random.Random(3), G, 2), 2)
    A = acyclic_rep(E)
    assert any(k >= 2 for k in A.R.comps)
    assert all(contract_ruth(A).checks.values())


def test_non_acyclic_rep_cannot_be_contracted():
    with pytest.raises(NotAcyclic):
        contract_ruth(trivial_rep(cyclic_group(2)))


# quasi-isomorphisms ----------------------------------------------------------

def test_inverting_the_identity():
    E = random_unital_rep(random.Random(0), cyclic_group(3), max_width=1)
    Q = invert_quasi_iso(RuthMorphism.identity(E))
    assert Q.ok


@pytest.mark.parametrize("seed", range(3))
def test_inverting_an_isomorphism_of_ordinary_reps(seed):
    rng = random.Random(seed)
    G = pair_groupoid(2)
    E = conjugated_trivial(G, {x: random_invertible(rng, 2) for x in range(2)})
    F, Phi, Phi_inv = gauge_transform(E, random_gauge(rng, E, higher=False))
    Q = invert_quasi_iso(Phi)
    assert Q.ok
    # on cohomology Psi_0 agrees with Phi_0^{-1}; for ordinary reps in one degree it is equal on the nose
    for x in range(G.n_objects):
        assert np.array_equal(Q.Psi.phi(0, (x,)), Phi_inv.phi(0, (x,)))


@pytest.mark.parametrize("seed", range(3))
def test_inverting_random_quasi_isomorphisms(seed):
    Phi = random_quasi_iso(random.Random(seed), [cyclic_group(2), pair_groupoid(2), cyclic_group(3)][seed])
    assert verify_morphism(Phi).ok
    Q = invert_quasi_iso(Phi)
    assert all(Q.checks.values()), Q.checks


def test_zero_map_is_not_a_quasi_isomorphism():
    E = trivial_rep(cyclic_group(2))
    with pytest.raises(NotQuasiIso):
        invert_quasi_iso(RuthMorphism.zero(E, E))


# transfer --------------------------------------------------------------------

def test_transfer_of_an_ordinary_rep_is_itself():
    E = sign_rep(cyclic_group(2))
    T = transfer_to_cohomology(E)
    assert all(T.checks.values())
    assert T.target.R == E.R and T.target.bundle == E.bundle
    assert T.Phi.Phi == RuthMorphism.identity(E).Phi


def test_transfer_of_an_acyclic_rep_is_zero():
    A = acyclic_rep(trivial_rep(pair_groupoid(2)))
    T = transfer_to_cohomology(A)
    assert all(T.checks.values())
    assert T.target.bundle.is_zero()
    assert set(cohomology(A, range(-2, 3)).values()) == {0}


@pytest.mark.parametrize("seed", range(3))
def test_transfer_of_a_disguised_cocycle_rep(seed):
    rng = random.Random(seed)
    G = cyclic_group(2)
    C = cocycle_rep(G, exact_cocycle(rng, G, 2), 2)
    S, _, _ = direct_sum(C, acyclic_rep(trivial_rep(G)))
    E = gauge_transform(S, random_gauge(rng, S))[0]
    assert 0 in E.R.comps
    T = transfer_to_cohomology(E)
    assert all(T.checks.values())
    HE = T.target
    assert HE.bundle.dims() == {(0, 0): 1, (0, 1): 1}
    # the transferred R_2 is a closed scalar 2-cochain for the (trivial) action on the lines
    assert all(abs(HE.r(1, (g,))[0, 0]) == 1 for g in range(G.n_arrows))
    assert invert_quasi_iso(T.Phi).ok


def test_transfer_needs_unitality():
    G = cyclic_group(2)
    Z = ordinary_rep(GradedBundle.line(G), {g: as_matrix([[0]]) for g in range(2)})
    with pytest.raises(NotUnital):
        transfer_to_cohomology(Z)


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(["Z2", "pair2", "Z3"]))
def test_transfer_outputs_always_verify(seed, gname):
    G = {"Z2": cyclic_group(2), "pair2": pair_groupoid(2), "Z3": cyclic_group(3)}[gname]
    E = random_unital_rep(random.Random(seed), G, max_width=2)
    T = transfer_to_cohomology(E)
    assert all(T.checks.values()), T.checks

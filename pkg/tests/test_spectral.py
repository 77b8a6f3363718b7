import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

import ruth.spectral as spectral
from ruth.cochains import scalar_cochain
from ruth.constructions import (acyclic_rep, cocycle_rep, conjugated_trivial, exact_cocycle, random_invertible,
                                random_quasi_iso, random_unital_rep, sign_rep)
from ruth.errors import NotUnital, StructureEquationsViolated
from ruth.groupoid import cyclic_group, haar_cutoff, pair_groupoid, unit_groupoid
from ruth.operations import shift
from ruth.rep import trivial_rep
from ruth.constructions import perturb
from ruth.spectral import e1_oracle, e2_compare, kappa, kappa_sign, pages, vanishing_check


def test_ordinary_rep_lives_in_one_row():
    G = cyclic_group(2)
    E = sign_rep(G)
    R = pages(E, r_max=2, degrees=range(0, 4))
    assert R.ok
    for P in R.pages:
        assert all(q == 0 for (p, q) in P.dims)
    # E_1^{p,0} = C^p(G; E): one column per p-string
    assert [R.pages[0].dim(p, 0) for p in range(4)] == [len(G.strings(p)) for p in range(4)]
    # the sign character has no rational cohomology at all
    assert set(R.cohomology.values()) == {0}


def test_first_page_is_cochains_in_fiber_cohomology():
    G = pair_groupoid(2)
    E = cocycle_rep(G, exact_cocycle(random.Random(0), G, 2), 2)
    degrees = range(0, 3)
    R = pages(E, r_max=1, degrees=degrees)
    oracle = e1_oracle(E, degrees)
    assert {k: v for k, v in R.pages[0].dims.items() if k[0] + k[1] in degrees} == oracle


@pytest.mark.parametrize("G,k", [(cyclic_group(2), 2), (pair_groupoid(2), 2), (cyclic_group(2), 3)])
def test_cocycle_rep_converges(G, k):
    E = cocycle_rep(G, exact_cocycle(random.Random(k), G, k), k)
    R = pages(E, r_max=2, degrees=range(-1, k + 1))
    assert R.ok, R.checks


@pytest.mark.parametrize("seed", range(2))
def test_random_reps_converge(seed):
    E = random_unital_rep(random.Random(seed), cyclic_group(2), max_width=1)
    a, b = E.amplitude
    assert pages(E, r_max=2, degrees=range(a, b + 2)).ok


def test_pages_reject_invalid_reps():
    E = perturb(random.Random(1), cocycle_rep(cyclic_group(2), exact_cocycle(random.Random(3), cyclic_group(2), 2), 2))
    with pytest.raises(StructureEquationsViolated):
        pages(E)


@pytest.mark.parametrize("make", [
    lambda: trivial_rep(cyclic_group(3)),
    lambda: acyclic_rep(trivial_rep(cyclic_group(2))),
    lambda: cocycle_rep(pair_groupoid(2), exact_cocycle(random.Random(5), pair_groupoid(2), 2), 2),
    lambda: conjugated_trivial(pair_groupoid(2), {x: random_invertible(random.Random(x), 2) for x in range(2)}),
])
def test_second_page_is_cohomology_with_cohomology_coefficients(make):
    E = make()
    a, b = E.amplitude
    R = e2_compare(E, degrees=range(a, b + 3))
    assert R.ok, R.checks


def test_acyclic_rep_has_empty_second_page():
    R = e2_compare(acyclic_rep(trivial_rep(pair_groupoid(2))), degrees=range(-1, 3))
    assert R.pages == {} and R.cohomology_of_cohomology == {}


@pytest.mark.parametrize("seed", range(2))
def test_second_page_is_invariant_under_quasi_isomorphism(seed):
    Phi = random_quasi_iso(random.Random(seed), cyclic_group(2), max_width=2)
    lo = min(Phi.source.amplitude[0], Phi.target.amplitude[0])
    hi = max(Phi.source.amplitude[1], Phi.target.amplitude[1])
    degrees = range(lo, hi + 2)
    assert e2_compare(Phi.source, degrees).pages == e2_compare(Phi.target, degrees).pages


# averaging -------------------------------------------------------------------

def test_averaging_in_degree_zero():
    G = cyclic_group(3)
    f = scalar_cochain(G, 1, {(g,): g for g in range(3)})
    k = kappa(trivial_rep(G), f)
    # (0 + 2 + 1) / 3 at the single object
    assert k.comps[0][(0,)][0, 0] == 1


def test_haar_system_uses_counting_measure():
    hc = haar_cutoff(pair_groupoid(3))
    assert set(hc.weights) == {1}
    assert hc.cutoff == (Fraction(1, 3),) * 3
    assert not hc.normalization_defects() and hc.is_left_invariant()


@pytest.mark.parametrize("G", [cyclic_group(3), pair_groupoid(2), cyclic_group(2)])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_averaging_contracts_trivial_coefficients(G, p):
    E = trivial_rep(G)
    eta = exact_cocycle(random.Random(p), G, p)
    back = E.operator().apply(kappa(E, eta))
    assert back == eta.scale(kappa_sign(p, 0))


def test_kappa_sign_alternates():
    assert [kappa_sign(p, 0) for p in range(1, 5)] == [1, -1, 1, -1]
    assert kappa_sign(1, 1) == -1


def test_unit_groupoid_has_nothing_to_average():
    G = unit_groupoid(2)
    eta = exact_cocycle(random.Random(0), G, 2)
    assert eta.is_zero() and kappa(trivial_rep(G), eta).is_zero()


@pytest.mark.parametrize("make,amp", [
    (lambda: trivial_rep(cyclic_group(2)), (0, 0)),
    (lambda: cocycle_rep(pair_groupoid(2), exact_cocycle(random.Random(2), pair_groupoid(2), 2), 2), (0, 1)),
    (lambda: shift(cocycle_rep(cyclic_group(2), exact_cocycle(random.Random(4), cyclic_group(2), 2), 2), 2), (2, 3)),
])
def test_vanishing_outside_amplitude(make, amp):
    E = make()
    assert E.amplitude == amp
    V = vanishing_check(E, degrees=range(amp[0] - 2, amp[1] + 3), p_max=2)
    assert V.ok, V.checks
    assert V.kappa_cases > 0


def test_wrong_kappa_sign_is_detected(monkeypatch):
    E = cocycle_rep(cyclic_group(2), exact_cocycle(random.Random(4), cyclic_group(2), 2), 2)
    assert vanishing_check(E, p_max=2).ok
    monkeypatch.setattr(spectral, "kappa_sign", lambda p, q: -kappa_sign(p, q))
    V = vanishing_check(E, p_max=2)
    assert not V.checks["d_1 kappa = ±Id on E_1"]


def test_vanishing_needs_unitality():
    G = cyclic_group(2)
    from ruth.cochains import GradedBundle, as_matrix
    from ruth.rep import ordinary_rep
    Z = ordinary_rep(GradedBundle.line(G), {g: as_matrix([[0]]) for g in range(2)})
    with pytest.raises(NotUnital):
        vanishing_check(Z)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 10**6))
def test_random_unital_reps_vanish_outside_amplitude(seed):
    E = random_unital_rep(random.Random(seed), cyclic_group(2), max_width=1)
    a, b = E.amplitude
    V = vanishing_check(E, degrees=range(a - 1, b + 2), p_max=2, perturbations=1, seed=seed)
    assert V.ok, V.checks

import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from ruth.errors import AxiomViolation, DanglingReference, InvalidAction, MissingComposite, SchemaError
from ruth.groupoid import (GroupoidMorphism, GSpace, action_groupoid, action_projection, composable_strings,
                          cyclic_group, degeneracy, disjoint_union, face, haar_cutoff, inclusion_of_units,
                          orbits_and_quotient, pair_groupoid, symmetric_group, unit_groupoid, validate_groupoid)

GROUPOIDS = {
    "unit3": lambda: unit_groupoid(3),
    "Z2": lambda: cyclic_group(2),
    "Z3": lambda: cyclic_group(3),
    "pair3": lambda: pair_groupoid(3),
    "S3": lambda: symmetric_group(3),
    "Z2+pt": lambda: disjoint_union(cyclic_group(2), unit_groupoid(1)),
}
MAX_K = {"S3": 3}


def swap_space(G):
    return GSpace.from_ids(G, ["p", "q"], {"p": "*", "q": "*"},
                           [("g0", "p", "p"), ("g0", "q", "q"), ("g1", "p", "q"), ("g1", "q", "p")])


# validation ---------------------------------------------------------------

@pytest.mark.parametrize("name", sorted(GROUPOIDS))
def test_builtin_groupoids_round_trip_through_validation(name):
    G = GROUPOIDS[name]()
    assert G.check() == []
    assert validate_groupoid(G.to_raw()) == G


def test_missing_composite_is_named():
    raw = pair_groupoid(2).to_raw()
    dropped = raw["comp"].pop(3)
    with pytest.raises(MissingComposite) as e:
        validate_groupoid(raw)
    assert tuple(dropped[:2]) in [tuple(v.witnesses) for v in e.value.violations]


def test_every_violation_is_reported():
    raw = pair_groupoid(2).to_raw()
    raw["comp"] = raw["comp"][2:]
    with pytest.raises(MissingComposite) as e:
        validate_groupoid(raw)
    assert len(e.value.violations) == 2


def test_non_associative_table_rejected():
    # Z/3 with one product changed: g1*g1 = g0 breaks associativity (and inverses)
    raw = cyclic_group(3).to_raw()
    for entry in raw["comp"]:
        if entry[:2] == ["g1", "g1"]:
            entry[2] = "g0"
    with pytest.raises(AxiomViolation):
        validate_groupoid(raw)


def test_dangling_and_schema_errors():
    raw = cyclic_group(2).to_raw()
    raw["arrows"][1]["tgt"] = "nowhere"
    with pytest.raises(DanglingReference) as e:
        validate_groupoid(raw)
    assert "arrows[1].tgt" in e.value.path
    with pytest.raises(SchemaError):
        validate_groupoid({"objects": []})


# nerve --------------------------------------------------------------------

def test_string_counts():
    assert composable_strings(unit_groupoid(3), 2) == [(0, 0), (1, 1), (2, 2)]
    assert len(composable_strings(cyclic_group(2), 2)) == 4
    assert len(composable_strings(pair_groupoid(3), 2)) == 27
    assert composable_strings(cyclic_group(2), 0) == [(0,)]


@pytest.mark.parametrize("name", sorted(GROUPOIDS))
def test_string_count_recursion(name):
    G = GROUPOIDS[name]()
    for k in range(1, MAX_K.get(name, 4) + 1):
        # extend every (k-1)-string by an arrow landing on its source
        expected = sum(len(G.arrows_into(G.source(k - 1, s))) for s in G.strings(k - 1))
        assert len(G.strings(k)) == expected
        brute = [s for s in itertools.product(range(G.n_arrows), repeat=k)
                 if all(G.src[s[i]] == G.tgt[s[i + 1]] for i in range(k - 1))]
        assert sorted(brute) == sorted(G.strings(k))


def test_faces_of_a_pair():
    G = cyclic_group(3)
    g1, g2 = G.arr("g1"), G.arr("g2")
    assert face(G, 2, 0, (g1, g2)) == (g2,)
    assert face(G, 2, 1, (g1, g2)) == (G.mul(g1, g2),)
    assert face(G, 2, 2, (g1, g2)) == (g1,)
    P = pair_groupoid(2)
    g = P.arr("0<1")
    assert face(P, 1, 0, (g,)) == (P.obj("1"),)      # d_0 = source
    assert face(P, 1, 1, (g,)) == (P.obj("0"),)      # d_1 = target


def _simplicial_violations(G, kmax):
    bad = []
    for k in range(2, kmax + 1):
        for s in G.strings(k):
            for j in range(k + 1):
                for i in range(j):
                    if face(G, k - 1, i, face(G, k, j, s)) != face(G, k - 1, j - 1, face(G, k, i, s)):
                        bad.append(("dd", k, i, j, s))
    for k in range(0, kmax):
        for s in G.strings(k):
            for j in range(k + 1):
                t = degeneracy(G, k, j, s)
                if face(G, k + 1, j, t) != s or face(G, k + 1, j + 1, t) != s:
                    bad.append(("ds=id", k, j, s))
                for i in range(k + 2):
                    if k == 0 or i in (j, j + 1):
                        continue
                    if i < j:
                        want = degeneracy(G, k - 1, j - 1, face(G, k, i, s))
                    else:
                        want = degeneracy(G, k - 1, j, face(G, k, i - 1, s))
                    if face(G, k + 1, i, t) != want:
                        bad.append(("ds", k, i, j, s))
                for i in range(j + 1):
                    if degeneracy(G, k + 1, i, t) != degeneracy(G, k + 1, j + 1, degeneracy(G, k, i, s)):
                        bad.append(("ss", k, i, j, s))
    return bad


@pytest.mark.parametrize("name", sorted(GROUPOIDS))
def test_simplicial_identities_exhaustive(name):
    G = GROUPOIDS[name]()
    assert _simplicial_violations(G, MAX_K.get(name, 4)) == []


def test_degeneracy_inserts_units():
    G = cyclic_group(2)
    g = G.arr("g1")
    assert degeneracy(G, 0, 0, (0,)) == (G.unit[0],)
    assert degeneracy(G, 1, 0, (g,)) == (G.unit[0], g)
    assert degeneracy(G, 1, 1, (g,)) == (g, G.unit[0])


# actions ------------------------------------------------------------------

def test_action_by_units_recovers_the_groupoid():
    G = pair_groupoid(2)
    P = GSpace(G, list(G.objects), list(range(G.n_objects)),
               {(g, G.src[g]): G.tgt[g] for g in range(G.n_arrows)})
    H = action_groupoid(G, P)
    assert (H.n_objects, H.n_arrows) == (G.n_objects, G.n_arrows)
    F = action_projection(G, P, H)
    assert F.check() == []
    assert sorted(F.arrow_map) == list(range(G.n_arrows))


def test_swap_action_groupoid_is_the_pair_groupoid():
    G = cyclic_group(2)
    H = action_groupoid(G, swap_space(G))
    P2 = pair_groupoid(2)
    obj = {"p": "0", "q": "1"}
    arrows = {}
    for a, (g, p) in enumerate(H.action_pairs):
        s, t = H.objects[H.src[a]], H.objects[H.tgt[a]]
        arrows[H.arrows[a]] = "%s<%s" % (obj[t], obj[s])
    F = GroupoidMorphism.from_ids(H, P2, obj, arrows)
    assert F.check() == []
    assert sorted(F.arrow_map) == list(range(P2.n_arrows))


def test_invalid_action_detected():
    G = cyclic_group(2)
    with pytest.raises(InvalidAction):
        GSpace.from_ids(G, ["p", "q"], {"p": "*", "q": "*"},
                        [("g0", "p", "q"), ("g0", "q", "p"), ("g1", "p", "q"), ("g1", "q", "p")])


def test_orbits_and_freeness():
    G = cyclic_group(2)
    orbits, proj, free = orbits_and_quotient(swap_space(G))
    assert (orbits, free) == ([[0, 1]], True)
    triv = GSpace.from_ids(G, ["p"], {"p": "*"}, [("g0", "p", "p"), ("g1", "p", "p")])
    orbits, proj, free = orbits_and_quotient(triv)
    assert (len(orbits), free) == (1, False)
    U = unit_groupoid(3)
    P = GSpace(U, ["a", "b", "c"], [0, 1, 2], {(g, g): g for g in range(3)})
    orbits, proj, free = orbits_and_quotient(P)
    assert len(orbits) == 3 and free


# Haar systems -------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_cutoff_of_a_group(n):
    hc = haar_cutoff(cyclic_group(n))
    assert hc.cutoff == (Fraction(1, n),)
    assert hc.normalization_defects() == {} and hc.is_left_invariant()


def test_cutoff_of_pair_groupoid_and_disjoint_union():
    assert set(haar_cutoff(pair_groupoid(3)).cutoff) == {Fraction(1, 3)}
    hc = haar_cutoff(disjoint_union(cyclic_group(2), unit_groupoid(1)))
    assert hc.cutoff == (Fraction(1, 2), Fraction(1))


@pytest.mark.parametrize("name", sorted(GROUPOIDS))
def test_haar_normalization_everywhere(name):
    hc = haar_cutoff(GROUPOIDS[name]())
    assert hc.normalization_defects() == {}
    assert hc.is_left_invariant()


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.integers(1, 3))
def test_disjoint_union_of_cyclic_and_pair(n, m):
    G = disjoint_union(cyclic_group(n), pair_groupoid(m))
    assert G.n_arrows == n + m * m
    assert len(G.strings(2)) == n * n + m ** 3
    assert haar_cutoff(G).normalization_defects() == {}


def test_inclusion_of_units_is_a_functor():
    G = symmetric_group(3)
    F = inclusion_of_units(G)
    assert F.check() == []
    assert F.source.n_arrows == G.n_objects

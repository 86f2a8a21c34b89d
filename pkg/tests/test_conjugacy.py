import pytest
from hypothesis import given, strategies as st

from hyptrace.cayley import enumerate_ball
from hyptrace.conjugacy import (NoClassElement, centralizer_elements, class_element_of_length,
                                class_is_infinite, conjugacy_orbit, conjugator_count, conjugator_count_aggregate,
                                exact_class, exact_class_enumerator, is_finite_class, linear_envelope,
                                max_conjugator_counts, orbit_bfs, phi_fiber_stats, quadratic_ratio_ok)
from hyptrace.groups import preset
from oracles import conj_by_ball_counts, free_class_counts

CASES = [
    ("free2", "x", 8), ("free2", "x y", 8), ("free2", "x y x^-1 y^-1", 8), ("free2", "x^2 y^-1", 7),
    ("z3*z3", "a b", 8), ("z3*z3", "a", 8), ("z3*z3", "a b^-1 a b", 8),
    ("z3xfree2", "(a, x)", 6), ("z3xfree2", "(e, x y)", 6), ("s3", "t", 3),
]


@pytest.mark.parametrize("name,elem,R", CASES)
def test_exact_enumerator_matches_orbit_search(name, elem, R):
    G = preset(name)
    a = G.parse(elem)
    exact = exact_class(G, a, R)
    orbit, _, _ = orbit_bfs(G, a.word, max_length=R + 2 * G.length(a.word) + 4)
    assert exact == {u: l for u, l in orbit.items() if l <= R}


def test_free_class_matches_cyclic_conjugate_oracle(free2):
    prof = conjugacy_orbit(free2, free2.parse("x"), 21)
    assert list(prof.counts.counts) == free_class_counts(21)
    assert prof.exactness == "exact" and not prof.finite_class
    assert [prof.counts.counts[2 * j + 1] for j in range(1, 11)] == [2 * 3 ** (j - 1) for j in range(1, 11)]


def test_free_product_class_matches_brute_force():
    G = preset("z3*z3")
    prof = conjugacy_orbit(G, G.parse("a b"), 12)
    ball = enumerate_ball(G, 8).words
    assert list(prof.counts.counts) == conj_by_ball_counts(G, G.parse("a b").word, 12, 8, ball)


def test_lower_bound_without_enumerator(free2):
    prof = conjugacy_orbit(free2, free2.parse("x"), 7, use_exact=False)
    assert prof.exactness == "lower_bound"
    assert list(prof.counts.counts) == free_class_counts(7)


def test_class_representative_is_shortest_least(free2):
    prof = conjugacy_orbit(free2, free2.parse("y x y^-1"), 5)
    assert prof.representative == free2.parse("x")


def test_small_classes(free2, example3):
    assert set(exact_class(free2, free2.parse("x").word, 3)) == {
        free2.parse(t).word for t in ("x", "y x y^-1", "y^-1 x y")}
    assert set(exact_class(free2, free2.parse("x y").word, 2)) == {free2.parse("x y").word, free2.parse("y x").word}
    st_ = is_finite_class(example3, example3.parse("a"))
    assert st_.finite and st_.size == 2
    assert st_.elements == {example3.parse("a").word, example3.parse("a^2").word}
    assert exact_class_enumerator(free2, free2.e(), 4) == {free2.e()}


def test_finite_status_by_backend():
    Z = preset("z3xfree2")
    assert is_finite_class(Z, Z.parse("(a, e)")).finite
    s = is_finite_class(Z, Z.parse("(a, x)"))
    assert s.status == "infinite_witnessed" and s.witness
    F = preset("free2")
    assert is_finite_class(F, F.parse("x"), budget=64).status == "infinite_witnessed"
    assert class_is_infinite(preset("z3*z3"), preset("z3*z3").parse("a").word)
    assert class_is_infinite(F, ()) is False


def test_unsupported_semidirect_uses_orbit(example3):
    prof = conjugacy_orbit(example3, example3.parse("x"), 5)
    assert prof.exactness == "lower_bound"
    assert class_is_infinite(example3, example3.parse("x").word)


def test_profile_csv(free2):
    csv = conjugacy_orbit(free2, free2.parse("x"), 3).to_csv().splitlines()
    assert csv[0] == "l,n_l,exactness"
    assert csv[1:] == ["0,0,exact", "1,1,exact", "2,0,exact", "3,2,exact"]


def test_horizon_below_length(free2):
    with pytest.raises(ValueError):
        conjugacy_orbit(free2, free2.parse("x y x"), 2)


def test_conjugator_counts(free2):
    x = free2.parse("x")
    assert conjugator_count(free2, x, x, 3).count == 2
    assert conjugator_count(free2, x, free2.parse("y x y^-1"), 1).count == 1
    # centralizer of x is <x>; the conjugators of length k are x^±k and, for y = x, nothing else
    assert conjugator_count_aggregate(free2, x, x, 28) == 7
    assert max_conjugator_counts(free2, x, 3) == [1, 2, 2, 2]


def test_linear_envelope():
    assert linear_envelope([1, 2, 2, 2]) == (1.0, 1.0)
    assert linear_envelope([1]) == (0.0, 1.0)
    assert linear_envelope([2, 4, 8]) == (3.0, 2.0)


def test_fiber_stats_free2(free2):
    fs = phi_fiber_stats(free2, free2.parse("x"), 21)
    assert fs.radius == 3 and fs.domain_size == 53
    assert fs.max_fiber == 1
    assert fs.all_in_closed_annulus
    assert fs.in_open_annulus == 25
    assert fs.to_csv().splitlines()[0] == "image_length,fiber_size,count"


def test_class_element_of_length(free2):
    assert free2.length(class_element_of_length(free2, free2.parse("x"), 7)) == 7
    with pytest.raises(NoClassElement) as ei:
        class_element_of_length(free2, free2.parse("x"), 14)
    assert ei.value.nearest == 13


def test_centralizer(example3):
    found = {example3.format(g.word) for g in centralizer_elements(example3, example3.parse("a"), 1)}
    assert found == {"e", "a", "a^2", "y", "y^-1"}


def test_quadratic_ratio():
    assert quadratic_ratio_ok([7, 14, 21], [1, 4, 9])
    assert not quadratic_ratio_ok([7, 14], [1, 20])


@given(st.lists(st.sampled_from(["x", "y", "x^-1", "y^-1"]), max_size=6),
       st.lists(st.sampled_from(["x", "y", "x^-1", "y^-1"]), min_size=1, max_size=4))
def test_class_is_conjugation_invariant(h, a):
    F = preset("free2")
    hu, au = F.parse(" ".join(h)).word, F.parse(" ".join(a)).word
    y = F.conj(hu, au)
    R = max(F.length(y), F.length(au))
    assert y in exact_class(F, au, R)
    assert set(exact_class(F, y, R)) == set(exact_class(F, au, R))

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hyptrace.algebra import (GramStructure, GroupAlgebraElement, convolve, dense_operator_norm, hs_norm,
                              rd_ratio_estimate, rd_ratio_estimates, reduced_norm_lower_bound)
from hyptrace.cayley import enumerate_ball
from hyptrace.groups import BackendMismatch, FreeGroup, preset
from oracles import dense_left_regular


def random_element(G, R, rng, density=1.0):
    words = enumerate_ball(G, R).words
    coeffs = {u: complex(rng.normal(), rng.normal()) for u in words if rng.random() < density}
    return GroupAlgebraElement(G, coeffs)


coef = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


def elems(G, R):
    words = enumerate_ball(G, R).words
    return st.dictionaries(st.sampled_from(words), coef, max_size=8).map(lambda d: GroupAlgebraElement(G, d))


F2 = FreeGroup(2)


@given(elems(F2, 2), elems(F2, 2), coef, st.sampled_from([0, 1, 2]))
def test_hs_norm_axioms(f, g, c, s):
    assert hs_norm(f + g, s) <= hs_norm(f, s) + hs_norm(g, s) + 1e-9
    assert hs_norm(c * f, s) == pytest.approx(abs(c) * hs_norm(f, s), rel=1e-9, abs=1e-12)
    assert (hs_norm(f, s) == 0) == (len(f) == 0)
    assert hs_norm(f, 0) <= hs_norm(f, 1) + 1e-12 <= hs_norm(f, 2) + 2e-12


def test_hs_norm_delta(free2):
    g = free2.parse("x y x")
    assert hs_norm(GroupAlgebraElement.delta(g), 2) == 16.0
    with pytest.raises(ValueError):
        hs_norm(GroupAlgebraElement.delta(g), -1)


@given(elems(F2, 2), elems(F2, 2), elems(F2, 1))
def test_convolution_algebra(f, g, h):
    assert convolve(convolve(f, g), h).isclose(convolve(f, convolve(g, h)), 1e-9)
    assert convolve(f, g).star().isclose(convolve(g.star(), f.star()), 1e-9)
    assert f.star().star().isclose(f, 0.0)


def test_mismatch():
    f = GroupAlgebraElement.delta(preset("free2").parse("x"))
    g = GroupAlgebraElement.delta(FreeGroup(3).parse("x"))
    with pytest.raises(BackendMismatch):
        f + g


def test_pruning(free2):
    f = GroupAlgebraElement(free2, {(): 1e-16, (1,): 1.0})
    assert len(f) == 1


@pytest.mark.parametrize("R", [0, 1, 3])
def test_delta_has_norm_one(free2, R):
    f = GroupAlgebraElement.delta(free2.parse("x y^-1 x"))
    assert reduced_norm_lower_bound(f, R).value == pytest.approx(1.0, abs=1e-9)


def test_integers_generator_sum_approaches_two():
    Z = preset("z")
    f = GroupAlgebraElement(Z, {(1,): 1, (-1,): 1})
    est = reduced_norm_lower_bound(f, 20)
    assert 1.99 < est.value <= 2.0 + 1e-9 and est.converged


@pytest.mark.parametrize("name", ["z3", "s3"])
def test_finite_exactness_against_dense_oracle(name):
    G = preset(name)
    rng = np.random.default_rng(3)
    for _ in range(5):
        f = GroupAlgebraElement(G, {u: complex(*rng.normal(size=2)) for u in range(G.order)})
        exact = np.linalg.svd(dense_left_regular(G.table, f.coeffs), compute_uv=False)[0]
        assert reduced_norm_lower_bound(f, G.diameter).value == pytest.approx(exact, abs=1e-9)
        assert dense_operator_norm(f, list(range(G.order))) == pytest.approx(exact, abs=1e-9)


def test_monotone_l1_and_involution(free2):
    rng = np.random.default_rng(5)
    for _ in range(4):
        f = random_element(free2, 2, rng, density=0.5)
        vals = [reduced_norm_lower_bound(f, R).value for R in range(0, 5)]
        assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
        assert vals[-1] <= f.l1() + 1e-9
        assert reduced_norm_lower_bound(f.star(), 4).value == pytest.approx(vals[-1], abs=1e-9)


def test_kesten_from_below(free2):
    f = GroupAlgebraElement(free2, {g.word: 1 for g in free2.generators})
    vals = [reduced_norm_lower_bound(f, R).value for R in (1, 3, 5, 7)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 2 * math.sqrt(3)


def test_gram_route_matches_direct(free2):
    rng = np.random.default_rng(11)
    for n, R in [(1, 2), (2, 3), (3, 2)]:
        st_ = GramStructure(free2, n, R)
        c = rng.normal(size=len(st_.support)) + 1j * rng.normal(size=len(st_.support))
        f = GroupAlgebraElement(free2, dict(zip(st_.support, c)))
        assert st_.norm_lower_bound(c) == pytest.approx(reduced_norm_lower_bound(f, R).value, rel=1e-8)
        assert st_.hs_norm(c, 2) == pytest.approx(hs_norm(f, 2), rel=1e-12)


def test_gram_route_on_other_backends():
    rng = np.random.default_rng(2)
    for name in ("z3*z3", "paper-example-3"):
        G = preset(name)
        st_ = GramStructure(G, 2, 2)
        c = rng.normal(size=len(st_.support)) + 0j
        f = GroupAlgebraElement(G, dict(zip(st_.support, c)))
        assert st_.norm_lower_bound(c) == pytest.approx(reduced_norm_lower_bound(f, 2).value, rel=1e-8)


def test_rd_finite_backend_bound():
    G = preset("s3")
    est = rd_ratio_estimate(G, 0, 2, 20, seed=1)
    assert est.sup_ratio <= math.sqrt(6) + 1e-9
    assert est.to_csv().splitlines()[0] == "n,ratio"


def test_rd_shared_samples_and_determinism(free2):
    both = rd_ratio_estimates(free2, [0, 2], 3, 5, seed=4)
    again = rd_ratio_estimate(free2, 2, 3, 5, seed=4)
    assert [r for *_, r in both[2.0].samples] == [r for *_, r in again.samples]
    assert both[0.0].sup_ratio >= both[2.0].sup_ratio
    assert all(R == n + 4 or R < n + 4 for n, R, _ in again.samples)

import random

import pytest
from hypothesis import given, strategies as st

from hyptrace.groups import (BackendMismatch, DirectProduct, FiniteGroup, FreeGroup, FreeProduct, InvalidBackend,
                             LengthFunction, OutOfTable, PRESETS, Semidirect, conjugate, cyclic, invert,
                             load_table, make_backend, multiply, preset, save_table, symmetric3, word_length)
from oracles import free_reduce

letters = st.lists(st.integers(0, 50), max_size=14)


def word_of(G, idx):
    return G.evaluate(i % len(G.generators) for i in idx)


def test_free_normal_form_random_words():
    rng = random.Random(7)
    F = FreeGroup(2)
    for _ in range(10_000):
        n = rng.randint(0, 24)
        raw = [rng.choice((1, -1, 2, -2)) for _ in range(n)]
        idx = [{1: 0, -1: 1, 2: 2, -2: 3}[c] for c in raw]
        assert F.evaluate(idx) == free_reduce(raw)


@pytest.mark.parametrize("name", sorted(PRESETS))
@given(a=letters, b=letters, c=letters)
def test_group_axioms(name, a, b, c):
    G = preset(name)
    u, v, w = word_of(G, a), word_of(G, b), word_of(G, c)
    assert G.mul(G.mul(u, v), w) == G.mul(u, G.mul(v, w))
    assert G.mul(u, G.inv(u)) == G.identity == G.mul(G.inv(u), u)
    assert G.mul(u, G.identity) == u == G.mul(G.identity, u)


@pytest.mark.parametrize("name", sorted(PRESETS))
@given(a=letters, b=letters)
def test_length_is_a_word_metric(name, a, b):
    G = preset(name)
    u, v = word_of(G, a), word_of(G, b)
    assert G.length(G.inv(u)) == G.length(u)
    assert G.length(G.mul(u, v)) <= G.length(u) + G.length(v)
    assert G.length(u) <= len(a)


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_exact_rule_agrees_with_bfs_on_b6(name):
    G = preset(name)
    exact = LengthFunction(G, "exact_rule")
    table = LengthFunction(G, "bfs_table", radius=6)
    from hyptrace.cayley import enumerate_ball

    for u in enumerate_ball(G, 6).words:
        assert exact(u) == table(u)


def test_bfs_table_out_of_range(free2):
    lf = LengthFunction(free2, "bfs_table", radius=2)
    with pytest.raises(OutOfTable):
        lf(free2.parse("x x x").word)


def test_parse_format_roundtrip(any_preset):
    G = any_preset
    from hyptrace.cayley import enumerate_ball

    for u in enumerate_ball(G, 3).words:
        assert G.parse(G.format(u)).word == u


def test_parse_errors(free2):
    with pytest.raises(ValueError):
        free2.parse("x q")
    with pytest.raises(ValueError):
        free2.parse("x^z")
    assert free2.parse("x^3 x^-3").word == ()
    assert free2.parse("e").word == ()


def test_semidirect_relations(example3):
    G = example3
    p = lambda t: G.parse(t).word  # noqa: E731
    assert p("a a a") == G.identity
    assert p("x a x^-1") == p("a a")
    assert p("a y") == p("y a")
    assert G.length(p("a")) == 1 and G.length(p("x a")) == 2


def test_element_api(free2):
    x, y = free2.parse("x"), free2.parse("y")
    assert (x * y).word == (1, 2)
    assert invert(x * y) == y.inverse() * x.inverse()
    assert conjugate(y, x) == free2.parse("y x y^-1")
    assert word_length(x * y * x) == 3 == len(x * y * x)
    assert multiply(x, y) == x * y


def test_backend_mismatch():
    a = preset("free2").parse("x")
    b = FreeGroup(3).parse("x")
    with pytest.raises(BackendMismatch):
        a * b


def test_distinct_fingerprints():
    fps = {preset(n).fingerprint for n in PRESETS if n not in ("z3xz3",)}
    assert len(fps) == len(PRESETS) - 1
    assert preset("z3xz3").fingerprint == preset("z3*z3").fingerprint


def test_finite_table_validation(tmp_path):
    with pytest.raises(InvalidBackend):
        FiniteGroup([[0, 1], [1, 1]])
    with pytest.raises(InvalidBackend):
        FiniteGroup([[0, 1, 2], [1, 2, 0], [2, 1, 0]])
    S = symmetric3()
    path = tmp_path / "s3.txt"
    save_table(S.table, path)
    assert FiniteGroup(load_table(path)).order == 6


def test_semidirect_rejects_non_automorphism():
    with pytest.raises(InvalidBackend):
        Semidirect(cyclic(3), FreeGroup(2), {"x": [0, 2, 2], "y": [0, 1, 2]})


def test_make_backend_kinds():
    assert make_backend("free", rank=3).rank == 3
    assert make_backend("finite", cyclic=5).order == 5
    z3 = cyclic(3)
    assert isinstance(make_backend("free_product", left=z3, right=cyclic(3, "b")), FreeProduct)
    assert isinstance(make_backend("direct_product", left=z3, right=FreeGroup(1)), DirectProduct)
    with pytest.raises(InvalidBackend):
        make_backend("torus")
    with pytest.raises(InvalidBackend):
        preset("nope")


def test_free_product_normal_form():
    P = preset("z3*z3")
    ab = P.parse("a b")
    assert P.length(ab.word) == 2
    assert P.parse("a a a b").word == P.parse("b").word
    assert P.parse("a b b^-1 a").word == P.parse("a^2").word

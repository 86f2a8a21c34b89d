"""Conjugacy classes intersected with balls, conjugator counts, fiber statistics.

Exact enumeration uses cyclic reduction: every element of a free group or a
free product is uniquely ``w m w^-1`` with ``w`` maximal, where ``m`` ranges
over a finite list of "weakly cyclically reduced" class members.  Generic
backends fall back to breadth-first search in the conjugation graph, which is
only a lower bound unless the orbit closes.
"""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field

from .cayley import BallEnumeration, BudgetExceeded, GrowthSeries, enumerate_ball
from .groups import (DirectProduct, Element, FiniteGroup, FreeGroup, FreeProduct, Group, Semidirect,
                     Word)


class UnsupportedBackend(TypeError):
    pass


class NoClassElement(ValueError):
    def __init__(self, msg: str, nearest: int | None = None):
        super().__init__(msg)
        self.nearest = nearest


def _word(a) -> Word:
    return a.word if isinstance(a, Element) else a


# ---------------------------------------------------------------------------
# exact class enumeration


def has_exact_enumerator(group: Group) -> bool:
    if isinstance(group, (FreeGroup, FiniteGroup)):
        return True
    if isinstance(group, (FreeProduct, DirectProduct)):
        return all(has_exact_enumerator(f) for f in group.factors)
    return False


def _reduced_words(F: FreeGroup, J: int) -> list[list[tuple]]:
    levels = [[()]]
    letters = [g.word[0] for g in F.generators]
    for _ in range(J):
        nxt = []
        for w in levels[-1]:
            last = w[-1] if w else 0
            for c in letters:
                if c != -last:
                    nxt.append(w + (c,))
        levels.append(nxt)
    return levels


def _rotations(seq: tuple) -> list[tuple]:
    out = []
    for i in range(len(seq)):
        r = seq[i:] + seq[:i]
        if r not in out:
            out.append(r)
    return out


def free_core(u: tuple) -> tuple[tuple, tuple]:
    """Split a reduced free-group word as ``w c w^-1`` with ``c`` cyclically reduced."""
    i = 0
    while len(u) - 2 * i >= 2 and u[i] == -u[len(u) - 1 - i]:
        i += 1
    return u[:i], u[i: len(u) - i]


def _free_class(F: FreeGroup, a: tuple, R: int) -> dict:
    _, core = free_core(a)
    if not core:
        return {(): 0}
    J = (R - len(core)) // 2
    if J < 0:
        return {}
    levels = _reduced_words(F, J)
    out = {}
    for c in _rotations(core):
        out[c] = len(c)
        bad = (-c[0], c[-1])
        for j in range(1, J + 1):
            for w in levels[j]:
                if w[-1] not in bad:
                    g = w + c + F.inv(w)
                    out[g] = len(g)
    return out


def _finite_class(G: FiniteGroup, a: int, R: int) -> dict:
    cls = {G.mul(G.mul(g, a), G.inv(g)) for g in range(G.order)}
    return {u: G.length(u) for u in cls if G.length(u) <= R}


def _fp_strip(P: FreeProduct, u: tuple) -> tuple:
    i = 0
    while len(u) - 2 * i >= 2:
        s, w = u[i]
        t, v = u[len(u) - 1 - i]
        if s == t and P.factors[s].inv(w) == v:
            i += 1
        else:
            break
    return u[i: len(u) - i]


def fp_core(P: FreeProduct, u: tuple) -> tuple:
    """Cyclically reduced syllable core of a free-product normal form."""
    m = _fp_strip(P, u)
    if len(m) >= 2 and m[0][0] == m[-1][0]:
        s = m[0][0]
        merged = P.factors[s].mul(m[-1][1], m[0][1])
        m = m[1:-1] + ((s, merged),)
    return m


def _fp_middles(P: FreeProduct, core: tuple, R: int) -> list[tuple]:
    """Weakly cyclically reduced class members of length <= R."""
    if len(core) == 1:
        (i, c), = core
        return [((i, v),) for v in exact_class(P.factors[i], c, R)]
    out = []
    for rot in _rotations(core):
        base = P.length(rot)
        if base <= R:
            out.append(rot)
        j, z = rot[-1]
        f = P.factors[j]
        head = rot[:-1]
        head_len = P.length(head)
        budget = R - head_len
        if budget < 2:
            continue
        for t in enumerate_ball(f, budget).words:
            if t == f.identity or t == z:
                continue
            tp = f.mul(z, f.inv(t))
            m = ((j, t),) + head + ((j, tp),)
            if P.length(m) <= R:
                out.append(m)
    return out


def _fp_prefixes(P: FreeProduct, J: int):
    """Yield ``(w, length)`` for nonempty reduced syllable words with length <= J."""
    alph = []
    for s, f in enumerate(P.factors):
        ball = enumerate_ball(f, J)
        alph.append([((s, t), ball.lengths[t]) for t in ball.words if t != f.identity])

    def rec(w, last_side, total):
        for s in (0, 1):
            if s == last_side:
                continue
            for syl, l in alph[s]:
                if total + l <= J:
                    nw = w + (syl,)
                    yield nw, total + l
                    yield from rec(nw, s, total + l)

    yield from rec((), -1, 0)


def _fp_class(P: FreeProduct, a: tuple, R: int) -> dict:
    core = fp_core(P, a)
    if not core:
        return {(): 0}
    out = {}
    middles = _fp_middles(P, core, R)
    if not middles:
        return out
    J = (R - min(P.length(m) for m in middles)) // 2
    prefixes = list(_fp_prefixes(P, J)) if J > 0 else []
    for m in middles:
        lm = P.length(m)
        out[m] = lm
        first, last = m[0][0], m[-1][0]
        for w, lw in prefixes:
            s = w[-1][0]
            if s == first or s == last or 2 * lw + lm > R:
                continue
            g = w + m + P.inv(w)
            out[g] = 2 * lw + lm
    return out


def _dp_class(D: DirectProduct, a: tuple, R: int) -> dict:
    left = exact_class(D.factors[0], a[0], R)
    right = exact_class(D.factors[1], a[1], R)
    return {(u, v): lu + lv for u, lu in left.items() for v, lv in right.items() if lu + lv <= R}


def exact_class(group: Group, a, R: int) -> dict:
    """``C(a) ∩ B_R`` as a map normal form -> length."""
    u = _word(a)
    if isinstance(group, FreeGroup):
        return _free_class(group, u, R)
    if isinstance(group, FiniteGroup):
        return _finite_class(group, u, R)
    if isinstance(group, FreeProduct) and has_exact_enumerator(group):
        return _fp_class(group, u, R)
    if isinstance(group, DirectProduct) and has_exact_enumerator(group):
        return _dp_class(group, u, R)
    raise UnsupportedBackend(f"no exact class enumerator for {group.kind}")


def exact_class_enumerator(group: Group, a: Element, R: int) -> set[Element]:
    return {Element(group, u) for u in exact_class(group, a, R)}


def class_is_infinite(group: Group, a) -> bool | None:
    """Structural decision where the backend allows one; ``None`` if unknown."""
    u = _word(a)
    hook = getattr(group, "class_is_infinite", None)
    if hook is not None:
        return hook(u)
    if isinstance(group, FreeGroup):
        return bool(u) and group.rank >= 2
    if isinstance(group, FiniteGroup):
        return False
    if isinstance(group, FreeProduct):
        core = fp_core(group, u)
        if not core:
            return False
        if len(core) == 1:
            # conjugating by the other factor never cancels
            return True
        # splits need a third element in some factor; Z/2 * Z/2 has none
        return any(not isinstance(f, FiniteGroup) or f.order > 2 for f in group.factors)
    if isinstance(group, DirectProduct):
        parts = [class_is_infinite(f, w) for f, w in zip(group.factors, u)]
        if any(p is True for p in parts):
            return True
        if all(p is False for p in parts):
            return False
        return None
    if isinstance(group, Semidirect):
        n, b = u
        if not b:
            return False  # conjugates stay inside the finite normal part
        return True if class_is_infinite(group.base, b) else None
    return None


# ---------------------------------------------------------------------------
# conjugation-graph search


def orbit_bfs(group: Group, a, max_length: int | None = None, max_size: int | None = None):
    """Orbit of ``a`` under conjugation by generators.

    Returns ``(lengths, closed, exhausted)``: elements found with their
    lengths, whether no move was pruned by ``max_length``, and whether the
    search stopped because ``max_size`` was reached.
    """
    u = _word(a)
    gens = [g.word for g in group.generators]
    lengths = {u: group.length(u)}
    frontier = [u]
    closed = True
    while frontier:
        nxt = []
        for v in frontier:
            for s in gens:
                w = group.conj(s, v)
                if w in lengths:
                    continue
                lw = group.length(w)
                if max_length is not None and lw > max_length:
                    closed = False
                    continue
                lengths[w] = lw
                nxt.append(w)
                if max_size is not None and len(lengths) > max_size:
                    return lengths, False, True
        frontier = nxt
    return lengths, closed, False


def class_representative(group: Group, words) -> Word:
    """Lexicographically least normal form among the shortest elements."""
    words = list(words)
    m = min(group.length(u) for u in words)
    return min((u for u in words if group.length(u) == m), key=group.sort_key)


@dataclass
class ConjugacyProfile:
    representative: Element
    counts: GrowthSeries
    horizon: int
    exactness: str  # "exact" | "lower_bound"
    finite_class: bool
    elements: dict = field(repr=False, default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "n_l", "exactness"])
        for l, n in enumerate(self.counts.counts):
            w.writerow([l, n, self.exactness])
        return buf.getvalue()

    def sphere(self, l: int) -> list:
        G = self.representative.group
        return sorted((u for u, lu in self.elements.items() if lu == l), key=G.sort_key)


def conjugacy_orbit(group: Group, a, R: int, margin: int | None = None, use_exact: bool = True,
                    max_elements: int = 5_000_000) -> ConjugacyProfile:
    u = _word(a)
    la = group.length(u)
    if R < la:
        raise ValueError(f"horizon {R} is below the length {la} of the element")
    if use_exact and has_exact_enumerator(group):
        found = exact_class(group, u, R)
        finite = not class_is_infinite(group, u)
        exactness = "exact"
    else:
        if margin is None:
            margin = 2 * la + 4
        if margin < 0:
            raise ValueError("margin must be non-negative")
        full, closed, exhausted = orbit_bfs(group, u, max_length=R + margin, max_size=max_elements)
        if exhausted:
            raise BudgetExceeded(f"conjugation orbit exceeded {max_elements} elements")
        found = {v: l for v, l in full.items() if l <= R}
        finite = closed
        exactness = "exact" if closed else "lower_bound"
    counts = [0] * (R + 1)
    for l in found.values():
        counts[l] += 1
    rep = class_representative(group, found)
    return ConjugacyProfile(Element(group, rep), GrowthSeries(tuple(counts), label=f"class:{group.format(rep)}"),
                            R, exactness, finite, found)


@dataclass(frozen=True)
class ClassStatus:
    status: str  # "finite" | "infinite_witnessed" | "unknown"
    size: int | None = None
    elements: frozenset = field(default=frozenset(), repr=False)
    witness: str = ""

    @property
    def finite(self) -> bool:
        return self.status == "finite"


def is_finite_class(group: Group, a, budget: int = 512) -> ClassStatus:
    u = _word(a)
    orbit, closed, _ = orbit_bfs(group, u, max_size=budget)
    if closed:
        return ClassStatus("finite", len(orbit), frozenset(orbit))
    if class_is_infinite(group, u):
        witness = "structural"
        if has_exact_enumerator(group):
            top = max(orbit.values())
            r = top + 1
            while True:
                longer = [l for l in exact_class(group, u, r).values() if l > top]
                if longer:
                    witness = f"class element of length {max(longer)} beyond explored length {top}"
                    break
                r += 1
        return ClassStatus("infinite_witnessed", None, frozenset(orbit), witness)
    return ClassStatus("unknown", None, frozenset(orbit))


# ---------------------------------------------------------------------------
# counting conjugators


@dataclass(frozen=True)
class ConjugatorCount:
    x: Element
    y: Element
    k: int
    count: int


def _ball(group: Group, r: int, ball: BallEnumeration | None) -> BallEnumeration:
    if ball is not None and ball.radius >= r:
        return ball
    return enumerate_ball(group, r)


def conjugator_count(group: Group, x, y, k: int, ball: BallEnumeration | None = None) -> ConjugatorCount:
    """Number of h with l(h) = k and h x h^-1 = y, by scanning the sphere."""
    xu, yu = _word(x), _word(y)
    B = _ball(group, k, ball)
    count = sum(1 for h in B.sphere(k) if group.conj(h, xu) == yu)
    return ConjugatorCount(Element(group, xu), Element(group, yu), k, count)


def conjugator_count_aggregate(group: Group, x, y, n: int, ball: BallEnumeration | None = None) -> int:
    """Sum of conjugator counts over 7k < n."""
    kmax = (n - 1) // 7 if n > 0 else -1
    if kmax < 0:
        return 0
    B = _ball(group, kmax, ball)
    return sum(conjugator_count(group, x, y, k, B).count for k in range(kmax + 1))


def max_conjugator_counts(group: Group, x, kmax: int, ball: BallEnumeration | None = None,
                          annulus: int | None = None) -> list[int]:
    """``m_k`` = max over y of #{h : l(h) = k, h x h^-1 = y}, for k <= kmax.

    With ``annulus=n`` only targets y with 5n <= 7 l(y) <= 9n are counted.
    """
    xu = _word(x)
    B = _ball(group, kmax, ball)
    out = []
    for k in range(kmax + 1):
        hist = Counter(group.conj(h, xu) for h in B.sphere(k))
        if annulus is not None:
            hist = {y: c for y, c in hist.items() if 5 * annulus <= 7 * group.length(y) <= 9 * annulus}
        out.append(max(hist.values()) if hist else 0)
    return out


def linear_envelope(ms: list[int]) -> tuple[float, float]:
    """Smallest ``C`` with ``m_k <= C k + C1`` given ``C1 = m_0``."""
    c1 = float(ms[0]) if ms else 0.0
    c = max([(m - c1) / k for k, m in enumerate(ms) if k > 0] + [0.0])
    return c, c1


@dataclass
class FiberStats:
    n: int
    x: Element
    radius: int
    domain_size: int
    fibers: dict = field(repr=False)
    max_fiber: int
    image_lengths: dict
    in_open_annulus: int
    in_closed_annulus: int

    @property
    def all_in_closed_annulus(self) -> bool:
        return self.in_closed_annulus == self.domain_size

    def to_csv(self) -> str:
        G = self.x.group
        rows = Counter((G.length(y), c) for y, c in self.fibers.items())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["image_length", "fiber_size", "count"])
        for (l, c), k in sorted(rows.items()):
            w.writerow([l, c, k])
        return buf.getvalue()


def class_element_of_length(group: Group, a, n: int) -> Word:
    u = _word(a)
    if has_exact_enumerator(group):
        found = exact_class(group, u, n)
    else:
        found, _, _ = orbit_bfs(group, u, max_length=n + 2 * group.length(u) + 4, max_size=1_000_000)
    at_n = [v for v, l in found.items() if l == n]
    if not at_n:
        avail = sorted(set(found.values()))
        nearest = min(avail, key=lambda l: (abs(l - n), l)) if avail else None
        raise NoClassElement(f"no element of length {n} in the class of {group.format(u)}", nearest)
    return min(at_n, key=group.sort_key)


def phi_fiber_stats(group: Group, a, n: int, ball: BallEnumeration | None = None) -> FiberStats:
    """Fibers of g -> g x g^-1 on B_{floor(n/7)} for a class element x of length n."""
    if n <= 0:
        raise NoClassElement("fiber statistics need n > 0", nearest=None)
    x = class_element_of_length(group, a, n)
    r = n // 7
    B = _ball(group, r, ball)
    domain = B.ball(r)
    fibers = Counter(group.conj(g, x) for g in domain)
    lengths = Counter()
    open_, closed = 0, 0
    for y, c in fibers.items():
        l = group.length(y)
        lengths[l] += c
        if 5 * n < 7 * l < 9 * n:
            open_ += c
        if 5 * n <= 7 * l <= 9 * n:
            closed += c
    return FiberStats(n, Element(group, x), r, len(domain), dict(fibers), max(fibers.values()),
                      dict(sorted(lengths.items())), open_, closed)


def centralizer_elements(group: Group, g, R: int, ball: BallEnumeration | None = None) -> set[Element]:
    u = _word(g)
    B = _ball(group, R, ball)
    return {Element(group, h) for h in B.ball(R) if group.mul(h, u) == group.mul(u, h)}


def quadratic_ratio_ok(ns: list[int], fibers: list[int], slack: float = 2.0) -> bool:
    """``max_fiber(n) / n^2`` never grows by more than ``slack`` between consecutive n."""
    r = [f / n**2 for n, f in zip(ns, fibers)]
    return all(b <= slack * a for a, b in zip(r, r[1:]))


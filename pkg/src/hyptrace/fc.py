"""Elements with finite conjugacy class, and the quotient by them."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .cayley import enumerate_ball
from .conjugacy import class_is_infinite, is_finite_class
from .groups import (DirectProduct, Element, FiniteGroup, FreeGroup, FreeProduct, Generator, Group, Semidirect,
                     Word)


class QuotientError(ValueError):
    pass


def _word(a):
    return a.word if isinstance(a, Element) else a


@dataclass
class FcCenter:
    group: Group = field(repr=False)
    elements: frozenset
    horizon: int
    certified: bool
    scope: str  # "absolute" or "within horizon"

    def __contains__(self, u):
        return _word(u) in self.elements

    def __len__(self):
        return len(self.elements)

    def sorted_elements(self) -> list:
        return sorted(self.elements, key=self.group.sort_key)


def structural_fc_candidates(group: Group) -> list | None:
    """A finite set known to contain every FC element, when the backend type gives one."""
    if isinstance(group, FreeGroup):
        return [()] if group.rank >= 2 else None
    if isinstance(group, FiniteGroup):
        return list(range(group.order))
    if isinstance(group, FreeProduct):
        if all(isinstance(f, FiniteGroup) and f.order == 2 for f in group.factors):
            return None
        return [()]
    if isinstance(group, DirectProduct):
        parts = [structural_fc_candidates(f) for f in group.factors]
        if any(p is None for p in parts):
            return None
        return list(itertools.product(*parts))
    if isinstance(group, Semidirect):
        if group.base.rank >= 2:
            return [(n, ()) for n in range(group.normal.order)]
        return None
    return None


def fc_center(group: Group, horizon: int, budget: int = 512) -> FcCenter:
    ball = enumerate_ball(group, horizon)
    inside = set(ball.ball(horizon))
    members, visited = set(), set()
    complete, undecided = True, False
    for u in ball.ball(horizon):
        if u in visited:
            continue
        st = is_finite_class(group, u, budget)
        visited |= st.elements
        visited.add(u)
        if st.finite:
            members |= st.elements & inside
            complete &= st.elements <= inside
        elif st.status == "unknown":
            undecided = True
    N = frozenset(members)
    closed = verify_subgroup(group, N).passed and verify_normal(group, N).passed
    certified = complete and not undecided and closed
    cands = structural_fc_candidates(group)
    absolute = certified and cands is not None and all(c in inside for c in cands)
    return FcCenter(group, N, horizon, certified, "absolute" if absolute else "within horizon")


@dataclass
class ClosureReport:
    passed: bool
    violations: list  # (operation, u, v)

    def describe(self, group: Group) -> list:
        return [(op, group.format(u), group.format(v) if v is not None else None) for op, u, v in self.violations]


def _elements(N) -> frozenset:
    return N.elements if isinstance(N, FcCenter) else frozenset(_word(u) for u in N)


def verify_subgroup(group: Group, N) -> ClosureReport:
    S = _elements(N)
    bad = []
    if group.identity not in S:
        bad.append(("identity", group.identity, None))
    for u in sorted(S, key=group.sort_key):
        if group.inv(u) not in S:
            bad.append(("inverse", u, None))
    for u, v in itertools.product(sorted(S, key=group.sort_key), repeat=2):
        if group.mul(u, v) not in S:
            bad.append(("product", u, v))
    return ClosureReport(not bad, bad)


def verify_normal(group: Group, N, horizon: int = 0) -> ClosureReport:
    """Closure under conjugation by generators, plus spot checks by B_horizon."""
    S = _elements(N)
    conj_by = [g.word for g in group.generators]
    if horizon > 0:
        conj_by += enumerate_ball(group, horizon).ball(horizon)
    bad = []
    for h in conj_by:
        for u in sorted(S, key=group.sort_key):
            if group.conj(h, u) not in S:
                bad.append(("conjugate", h, u))
    return ClosureReport(not bad, bad)


class QuotientGroup(Group):
    """G/N for a finite normal subgroup N; cosets are stored by their least member."""

    kind = "quotient"

    def __init__(self, base: Group, N):
        super().__init__()
        self.base = base
        self.has_exact_length = base.has_exact_length
        self.N = tuple(sorted(_elements(N), key=base.sort_key))
        self.identity = self.canon(base.identity)
        words: list[Word] = []
        names: list[str] = []
        for g in base.generators:
            c = self.canon(g.word)
            if c != self.identity and c not in words:
                words.append(c)
                names.append(g.name)
        gens = []
        for i, (nm, w) in enumerate(zip(names, words)):
            j = words.index(self.canon(base.inv(w)))
            gens.append(Generator(nm, i, nm.endswith("^-1"), j, w, ""))
        self.generators = gens

    def canon(self, u: Word) -> Word:
        B = self.base
        return min((B.mul(u, n) for n in self.N), key=B.sort_key)

    def mul(self, u, v):
        return self.canon(self.base.mul(u, v))

    def length(self, u) -> int:
        # generators of G/N are the images of those of G, so a geodesic for
        # the coset lifts to a geodesic for one of its members
        B = self.base
        return min(B.length(B.mul(u, n)) for n in self.N)

    def inv(self, u):
        return self.canon(self.base.inv(u))

    def describe(self) -> str:
        return f"quotient[{self.base.describe()}/{{{','.join(self.base.format(n) for n in self.N)}}}]"

    def format(self, u) -> str:
        return self.base.format(u)

    def sort_key(self, u):
        return self.base.sort_key(u)

    def names(self):
        return {name: self.canon(w) for name, w in self.base.names().items()}

    def class_is_infinite(self, u) -> bool | None:
        # the projection is at most |N|-to-1 on classes
        return class_is_infinite(self.base, u)


def quotient_backend(group: Group, N) -> QuotientGroup:
    sub = verify_subgroup(group, N)
    if not sub.passed:
        raise QuotientError(f"not a subgroup: {sub.describe(group)[:3]}")
    nor = verify_normal(group, N)
    if not nor.passed:
        raise QuotientError(f"not normal: {nor.describe(group)[:3]}")
    return QuotientGroup(group, N)


@dataclass
class QuotientTraceReport:
    dimension: int
    horizon: int

    @property
    def passed(self) -> bool:
        return self.dimension == 1


def quotient_trace_check(group: Group, N, horizon: int = 4) -> QuotientTraceReport:
    from .traces import trace_space_basis

    Q = quotient_backend(group, N)
    return QuotientTraceReport(trace_space_basis(Q, horizon).dimension, horizon)


def quotient_distortion(group: Group, Q: QuotientGroup, R: int) -> dict:
    """Compare word lengths in G and G/N on B_R: the projection never increases length."""
    ball = enumerate_ball(group, R)
    lipschitz = True
    excess = 0
    for u in ball.ball(R):
        lg = ball.lengths[u]
        lq = Q.length(Q.canon(u))
        lipschitz &= lq <= lg
        rep = Q.canon(u)
        excess = max(excess, group.length(rep) - lq)
    return {"radius": R, "lipschitz": lipschitz, "max_additive_excess": excess,
            "allowed_excess": max(group.length(n) for n in Q.N) + 1}


def fc_report(group: Group, horizon: int = 4, trace_horizon: int = 4) -> dict:
    N = fc_center(group, horizon)
    sub = verify_subgroup(group, N)
    nor = verify_normal(group, N, horizon=min(horizon, 2))
    out = {"N": [group.format(u) for u in N.sorted_elements()], "certified": N.certified, "scope": N.scope,
           "horizon": horizon, "subgroup": "pass" if sub.passed else "fail",
           "normal": "pass" if nor.passed else "fail"}
    if sub.passed and nor.passed:
        out["quotient_trace_dimension"] = quotient_trace_check(group, N, trace_horizon).dimension
    else:
        out["quotient_trace_dimension"] = None
    return out


def fc_report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"

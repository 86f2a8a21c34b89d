"""Class-indicator traces, the trace space of a group, and vanishing certificates."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

from .algebra import GroupAlgebraElement, convolve
from .cayley import BudgetExceeded, enumerate_ball
from .conjugacy import conjugacy_orbit, is_finite_class
from .groups import BackendMismatch, Element, Group


class FiniteClassError(ValueError):
    """The class is finite, so its indicator is itself a trace."""


class InsufficientData(ValueError):
    pass


def _word(a):
    return a.word if isinstance(a, Element) else a


@dataclass(frozen=True)
class ClassFunctional:
    group: Group = field(repr=False)
    representative: object
    class_elements: frozenset

    def __post_init__(self):
        G = self.group
        for u in self.class_elements:
            for s in G.generators:
                if G.conj(s.word, u) not in self.class_elements:
                    raise ValueError(f"{G.format(u)} conjugated by {s.name} leaves the set")

    def __call__(self, f: GroupAlgebraElement) -> complex:
        return chi_eval(self, f)

    def __len__(self):
        return len(self.class_elements)

    def sorted_elements(self) -> list:
        return sorted(self.class_elements, key=self.group.sort_key)


@dataclass(frozen=True)
class TraceFunctional:
    terms: tuple  # ((ClassFunctional, complex), ...)

    def __post_init__(self):
        reps = [c.class_elements for c, _ in self.terms]
        if len(set(reps)) != len(reps):
            raise ValueError("repeated class in trace functional")

    def __call__(self, f: GroupAlgebraElement) -> complex:
        return sum((c * chi_eval(chi, f) for chi, c in self.terms), 0j)


def chi_eval(chi: ClassFunctional, f: GroupAlgebraElement) -> complex:
    if chi.group.fingerprint != f.group.fingerprint:
        raise BackendMismatch("class functional and element live on different groups")
    return sum((f.coeffs.get(u, 0j) for u in chi.class_elements), 0j)


@dataclass
class TraceCheck:
    deviation: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.deviation < self.tol


def trace_property_check(tau, f: GroupAlgebraElement, g: GroupAlgebraElement, tol: float = 1e-12) -> TraceCheck:
    """|τ(f*g) − τ(g*f)| for any callable τ on group algebra elements."""
    f._check(g)
    return TraceCheck(abs(tau(convolve(f, g)) - tau(convolve(g, f))), tol)


def evaluation_functional(g: Element):
    """f -> f(g); a trace only when the class of g is {g}."""
    def tau(f):
        return f[g.word]
    return tau


# ---------------------------------------------------------------------------
# trace space


@dataclass
class TraceSpace:
    basis: list
    horizon: int
    scanned: int
    unknown: list
    certified: bool

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def to_dict(self) -> dict:
        G = self.basis[0].group if self.basis else None
        return {
            "horizon": self.horizon,
            "dimension": self.dimension,
            "classes": [[G.format(u) for u in chi.sorted_elements()] for chi in self.basis],
            "scanned": self.scanned,
            "unknown": [G.format(u) for u in self.unknown] if G else [],
            "certified": self.certified,
            "completeness": f"finite classes lying inside B_{self.horizon} are all found",
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def trace_space_basis(group: Group, horizon: int, budget: int = 512) -> TraceSpace:
    ball = enumerate_ball(group, horizon)
    visited: set = set()
    basis, unknown = [], []
    for u in ball.ball(horizon):
        if u in visited:
            continue
        st = is_finite_class(group, u, budget)
        visited |= st.elements
        visited.add(u)
        if st.finite:
            rep = min(st.elements, key=group.sort_key)
            basis.append(ClassFunctional(group, rep, frozenset(st.elements)))
        elif st.status == "unknown":
            unknown.append(u)
    basis.sort(key=lambda c: (len(c), group.sort_key(c.representative)))
    return TraceSpace(basis, horizon, len(ball.ball(horizon)), unknown, not unknown)


# ---------------------------------------------------------------------------
# vanishing certificates


def witness_element(group: Group, a, l: int, profile=None) -> GroupAlgebraElement:
    """Average of δ_g over the elements of length l in the class of a."""
    if profile is None:
        profile = conjugacy_orbit(group, a, max(l, group.length(_word(a))))
    sphere = profile.sphere(l)
    if not sphere:
        raise ValueError(f"no class element of length {l}")
    w = 1.0 / len(sphere)
    return GroupAlgebraElement(group, {u: w for u in sphere})


@dataclass
class VanishingCertificate:
    representative: str
    s: float
    rows: list  # (l, n_l, bound)
    exact: bool
    decreasing_tail: bool
    final_bound: float
    warning: str = ""

    @property
    def verdict(self) -> dict:
        return {"decreasing_tail": self.decreasing_tail, "final_bound": self.final_bound}

    def recheck(self, tol: float = 1e-12) -> bool:
        return all(abs((1 + l) ** self.s / math.sqrt(n) - b) <= tol for l, n, b in self.rows)

    def to_dict(self) -> dict:
        d = {"representative": self.representative, "s": self.s,
             "rows": [{"l": l, "n_l": n, "bound": b} for l, n, b in self.rows],
             "exact": self.exact, "verdict": self.verdict}
        if self.warning:
            d["warning"] = self.warning
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "n_l", "bound"])
        for l, n, b in self.rows:
            w.writerow([l, n, repr(b)])
        return buf.getvalue()


def _tail_decreasing(bounds: list) -> bool:
    k = len(bounds)
    tail = bounds[k - max(2, math.ceil(k / 3)):]
    return all(b <= a for a, b in zip(tail, tail[1:]))


def vanishing_certificate(group: Group, a, s: float, L: int, min_rows: int = 3, profile=None) -> VanishingCertificate:
    u = _word(a)
    if profile is None:
        profile = conjugacy_orbit(group, u, L)
    if profile.finite_class:
        raise FiniteClassError(f"class of {group.format(u)} is finite; its indicator is a trace")
    rows = [(l, n, (1 + l) ** s / math.sqrt(n)) for l, n in enumerate(profile.counts.counts) if n > 0]
    if len(rows) < min_rows:
        raise InsufficientData(f"only {len(rows)} nonempty lengths up to L = {L}; need {min_rows}")
    exact = profile.exactness == "exact"
    warning = "" if exact else "class counts are lower bounds; certificate is heuristic"
    bounds = [b for _, _, b in rows]
    return VanishingCertificate(group.format(profile.representative.word), float(s), rows, exact,
                                _tail_decreasing(bounds), bounds[-1], warning)


__all__ = ["ClassFunctional", "TraceFunctional", "TraceSpace", "VanishingCertificate", "FiniteClassError",
           "InsufficientData", "BudgetExceeded", "chi_eval", "trace_property_check", "trace_space_basis",
           "vanishing_certificate", "witness_element", "evaluation_functional"]

"""Group algebra arithmetic, Sobolev norms and reduced-norm lower bounds.

The reduced norm of ``f`` is approximated from below by truncating the left
regular representation to a ball: for ``A = λ(f) P_R`` (input restricted to
``ℓ²(B_R)``, output unrestricted) we have ``‖A‖ ≤ ‖λ(f)‖``, and the same for
``λ(f)* P_R``.  The estimate is the larger of the two, found by power
iteration on ``A^H A``; it is nondecreasing in R and exact on finite groups
once ``B_R`` is the whole group.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import eigh

from .cayley import BallEnumeration, BudgetExceeded, enumerate_ball
from .groups import BackendMismatch, Element, Group

PRUNE_TOL = 1e-15


class GroupAlgebraElement:
    """Finitely supported function G -> C."""

    __slots__ = ("group", "coeffs")

    def __init__(self, group: Group, coeffs: dict | None = None):
        self.group = group
        self.coeffs = {u: complex(c) for u, c in (coeffs or {}).items() if abs(c) > PRUNE_TOL}

    @classmethod
    def delta(cls, g: Element, c: complex = 1.0) -> "GroupAlgebraElement":
        return cls(g.group, {g.word: c})

    def _check(self, other: "GroupAlgebraElement"):
        if self.group.fingerprint != other.group.fingerprint:
            raise BackendMismatch(f"{self.group!r} vs {other.group!r}")

    def __getitem__(self, g) -> complex:
        u = g.word if isinstance(g, Element) else g
        return self.coeffs.get(u, 0j)

    def __add__(self, other):
        self._check(other)
        out = dict(self.coeffs)
        for u, c in other.coeffs.items():
            out[u] = out.get(u, 0j) + c
        return GroupAlgebraElement(self.group, out)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, c):
        return GroupAlgebraElement(self.group, {u: c * v for u, v in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, GroupAlgebraElement):
            return convolve(self, other)
        return GroupAlgebraElement(self.group, {u: v * other for u, v in self.coeffs.items()})

    def __len__(self):
        return len(self.coeffs)

    def __repr__(self):
        terms = " + ".join(f"({c:.4g}){self.group.format(u)}" for u, c in sorted(self.coeffs.items()))
        return f"GroupAlgebraElement({terms or '0'})"

    def star(self) -> "GroupAlgebraElement":
        """Involution f*(g) = conj(f(g^-1))."""
        G = self.group
        return GroupAlgebraElement(G, {G.inv(u): c.conjugate() for u, c in self.coeffs.items()})

    def support_radius(self) -> int:
        return max((self.group.length(u) for u in self.coeffs), default=0)

    def l1(self) -> float:
        return float(sum(abs(c) for c in self.coeffs.values()))

    def isclose(self, other, tol: float = 1e-12) -> bool:
        self._check(other)
        keys = set(self.coeffs) | set(other.coeffs)
        return all(abs(self[u] - other[u]) <= tol for u in keys)


def convolve(f: GroupAlgebraElement, g: GroupAlgebraElement) -> GroupAlgebraElement:
    """(f*g)(k) = sum_h f(h) g(h^-1 k)."""
    f._check(g)
    G = f.group
    out: dict = {}
    for h, a in f.coeffs.items():
        for u, b in g.coeffs.items():
            k = G.mul(h, u)
            out[k] = out.get(k, 0j) + a * b
    return GroupAlgebraElement(G, out)


def hs_norm(f: GroupAlgebraElement, s: float, length=None) -> float:
    """sqrt( sum |c_g|^2 (1 + l(g))^(2s) )."""
    if s < 0:
        raise ValueError("s must be non-negative")
    ell = length or f.group.length
    return math.sqrt(sum(abs(c) ** 2 * (1 + ell(u)) ** (2 * s) for u, c in f.coeffs.items()))


# ---------------------------------------------------------------------------
# power iteration


@dataclass
class NormEstimate:
    value: float
    radius: int
    iterations: int
    converged: bool

    def __float__(self):
        return self.value


def power_iteration(apply, dim: int, iterations: int = 10_000, tol: float = 1e-10, seed: int = 0):
    """Top eigenvalue of a positive semidefinite operator given as ``x -> T x``.

    Rayleigh quotients of power iterates of a PSD operator are nondecreasing,
    so the returned value is a lower bound at every stage.
    """
    if dim == 0:
        return 0.0, 0, True
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    x /= np.linalg.norm(x)
    lam = 0.0
    for it in range(1, iterations + 1):
        y = apply(x)
        new = float(np.vdot(x, y).real)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0, it, True
        x = y / ny
        if new > 0 and abs(new - lam) <= tol * new:
            return max(new, lam), it, True
        lam = max(lam, new)
    return lam, iterations, False


def truncated_operator(f: GroupAlgebraElement, ball: BallEnumeration, R: int) -> sparse.csr_matrix:
    """Matrix of λ(f) restricted to ℓ²(B_R); rows indexed by the image set."""
    G = f.group
    domain = ball.ball(R)
    out_index: dict = {}
    rows, cols, data = [], [], []
    for j, g in enumerate(domain):
        for h, c in f.coeffs.items():
            k = G.mul(h, g)
            i = out_index.setdefault(k, len(out_index))
            rows.append(i)
            cols.append(j)
            data.append(c)
    return sparse.csr_matrix((np.array(data, dtype=complex), (rows, cols)),
                             shape=(max(len(out_index), 1), len(domain)))


DENSE_LIMIT = 256  # domains this small get an exact dense singular value solve


def _top_singular(A, iterations, tol, seed):
    if A.shape[1] <= DENSE_LIMIT:
        return float(np.linalg.svd(A.toarray(), compute_uv=False)[0]), 0, True
    AH = A.conj().T.tocsr()
    lam, it, ok = power_iteration(lambda x: AH @ (A @ x), A.shape[1], iterations, tol, seed)
    return math.sqrt(max(lam, 0.0)), it, ok


def reduced_norm_lower_bound(f: GroupAlgebraElement, R: int, iterations: int = 10_000, tol: float = 1e-10,
                             seed: int = 0, ball: BallEnumeration | None = None) -> NormEstimate:
    if R < 0:
        raise ValueError("R must be non-negative")
    if not f.coeffs:
        return NormEstimate(0.0, R, 0, True)
    if ball is None or ball.radius < R:
        ball = enumerate_ball(f.group, R)
    A = truncated_operator(f, ball, R)
    v1, it1, ok1 = _top_singular(A, iterations, tol, seed)
    fs = f.star()
    if fs.isclose(f, 0.0):
        return NormEstimate(v1, R, it1, ok1)
    v2, it2, ok2 = _top_singular(truncated_operator(fs, ball, R), iterations, tol, seed)
    return NormEstimate(max(v1, v2), R, it1 + it2, ok1 and ok2)


def dense_operator_norm(f: GroupAlgebraElement, elements: list) -> float:
    """Exact norm of λ(f) on a finite group via a dense singular value solve."""
    G = f.group
    idx = {u: i for i, u in enumerate(elements)}
    n = len(elements)
    M = np.zeros((n, n), dtype=complex)
    for j, g in enumerate(elements):
        for h, c in f.coeffs.items():
            M[idx[G.mul(h, g)], j] += c
    return float(np.linalg.svd(M, compute_uv=False)[0])


# ---------------------------------------------------------------------------
# Gram-matrix route for many samples on a fixed support ball


class GramStructure:
    """Precomputed index data so that ``P_R λ(f)^H λ(f) P_R`` costs one bincount.

    Entry (g, g') of that Gram matrix is ``F(g g'^-1)`` with
    ``F(z) = sum_h conj(f(h)) f(h z)``; ``F`` is needed on ``B_2R`` only.
    The pairs ``(h, h z)`` inside ``B_n`` are found by composing right
    multiplication maps along geodesics for z.  Intermediate products have
    length at most ``n + R``, so a ball of radius ``max(n + R, 2R)`` suffices.
    """

    def __init__(self, group: Group, n: int, R: int, ball: BallEnumeration | None = None,
                 max_elements: int = 1_200_000):
        M = max(n + R, 2 * R)
        if ball is None or ball.radius < M:
            ball = enumerate_ball(group, M, memory_budget=max_elements * 300)
        if ball.offsets[M + 1] > max_elements:
            raise BudgetExceeded(f"B_{M} has {ball.offsets[M + 1]} elements", radius_reached=M)
        self.group, self.n, self.R = group, n, R
        nbr = _neighbors_with_sentinel(ball)
        nB = ball.offsets[n + 1]
        zcount = ball.offsets[2 * R + 1]
        parent = _bfs_parents(ball, nbr, zcount)
        children: dict[int, list] = {}
        for z in range(1, zcount):
            children.setdefault(parent[z][0], []).append(z)
        hs, hzs, zs = [], [], []
        # depth-first walk over the BFS tree of B_2R keeps one array per level
        stack = [(0, np.arange(nB))]
        while stack:
            z, cur = stack.pop()
            sel = np.nonzero(cur < nB)[0]
            if sel.size:
                hs.append(sel)
                hzs.append(cur[sel])
                zs.append(np.full(sel.size, z))
            for c in children.get(z, ()):
                stack.append((c, nbr[parent[c][1]][cur]))
        self.h = np.concatenate(hs)
        self.hz = np.concatenate(hzs)
        self.z = np.concatenate(zs)
        self.zcount = zcount
        self.support = ball.words[:nB]
        self.lengths = np.repeat(np.arange(n + 1), np.diff(ball.offsets[: n + 2]))
        dom = ball.words[: ball.offsets[R + 1]]
        idx = ball.index
        G = group
        invs = [G.inv(g) for g in dom]
        self.diff = np.array([[idx[G.mul(g, gi)] for gi in invs] for g in dom], dtype=np.int64)
        self.inv = np.array([idx[G.inv(u)] for u in self.support], dtype=np.int64)

    def gram(self, coeffs: np.ndarray) -> np.ndarray:
        w = np.conj(coeffs[self.h]) * coeffs[self.hz]
        F = np.bincount(self.z, weights=w.real, minlength=self.zcount) \
            + 1j * np.bincount(self.z, weights=w.imag, minlength=self.zcount)
        return F[self.diff]

    def norm_lower_bound(self, coeffs: np.ndarray) -> float:
        # the Gram matrix is small and dense, so a direct Hermitian solve is exact and cheaper
        best = 0.0
        for c in (coeffs, np.conj(coeffs[self.inv])):
            T = self.gram(c)
            lam = float(eigh(T, eigvals_only=True, subset_by_index=[T.shape[0] - 1] * 2)[0])
            best = max(best, math.sqrt(max(lam, 0.0)))
        return best

    def hs_norm(self, coeffs: np.ndarray, s: float) -> float:
        return float(np.sqrt(np.sum(np.abs(coeffs) ** 2 * (1.0 + self.lengths) ** (2 * s))))


def _neighbors_with_sentinel(ball: BallEnumeration) -> np.ndarray:
    nbr = ball.right_neighbors()
    N = len(ball)
    nbr[nbr < 0] = N
    return np.concatenate([nbr, np.full((nbr.shape[0], 1), N, dtype=nbr.dtype)], axis=1)


def _bfs_parents(ball: BallEnumeration, nbr: np.ndarray, count: int) -> list:
    parent = [None] * count
    parent[0] = (0, -1)
    # spheres are contiguous, so k is one step further out iff it lies past j's sphere
    level = np.repeat(np.arange(len(ball.offsets) - 1), np.diff(ball.offsets))
    for j in range(count):
        for i in range(nbr.shape[0]):
            k = int(nbr[i, j])
            if k < count and parent[k] is None and level[k] == level[j] + 1:
                parent[k] = (j, i)
    return parent


@dataclass
class RdEstimate:
    s: float
    sample_count: int
    samples: list  # (n, R, ratio)
    sup_ratio: float
    trend_slope: float
    scheme: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "ratio"])
        for n, _, r in self.samples:
            w.writerow([n, repr(float(r))])
        return buf.getvalue()


def rd_ratio_estimates(group: Group, s_values, max_n: int, samples_per_n: int, margin: int = 4, seed: int = 0,
                       max_domain: int = 600, max_elements: int = 1_200_000, min_n: int = 1) -> dict:
    """Ratios ``reduced_norm_lower_bound(f) / hs_norm(f, s)`` for Gaussian f on B_n.

    One set of samples serves every s in ``s_values``.  The truncation radius
    is ``n + margin`` unless the domain ball exceeds ``max_domain`` elements or
    the working ball ``B_max(n+R, 2R)`` exceeds ``max_elements``; the radius
    used is recorded with every sample.
    """
    s_values = [float(x) for x in s_values]
    rng = np.random.default_rng(seed)
    rows = []  # (n, R, norm, {s: hs})
    try:
        full = enumerate_ball(group, 2 * max_n + margin, memory_budget=max_elements * 300)
    except BudgetExceeded as exc:
        full = exc.partial
    size = lambda r: full.offsets[min(r, full.radius) + 1]  # noqa: E731
    for n in range(min_n, max_n + 1):
        R = n + margin
        while R > 0 and (size(R) > max_domain or max(n + R, 2 * R) > full.radius):
            R -= 1
        if max(n + R, 2 * R) > full.radius:
            raise BudgetExceeded(f"no truncation radius fits for n = {n}", radius_reached=full.radius)
        st = GramStructure(group, n, R, full, max_elements)
        m = len(st.support)
        for _ in range(samples_per_n):
            c = rng.standard_normal(m) + 1j * rng.standard_normal(m)
            rows.append((n, R, st.norm_lower_bound(c), {s: st.hs_norm(c, s) for s in s_values}))
    scheme = {"coefficients": "standard complex Gaussian on all of B_n", "seed": seed, "margin": margin,
              "max_domain": max_domain, "min_n": min_n}
    out = {}
    for s in s_values:
        samples = [(n, R, v / h[s]) for n, R, v, h in rows]
        ns = np.array([x[0] for x in samples], dtype=float)
        rs = np.array([x[2] for x in samples])
        slope = float(np.polyfit(ns, rs, 1)[0]) if len(set(ns)) > 1 else 0.0
        out[s] = RdEstimate(s, len(samples), samples, float(rs.max()), slope, dict(scheme))
    return out


def rd_ratio_estimate(group: Group, s: float, max_n: int, samples_per_n: int, **kw) -> RdEstimate:
    return rd_ratio_estimates(group, [s], max_n, samples_per_n, **kw)[float(s)]

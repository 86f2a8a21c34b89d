"""Group backends with canonical normal forms.

Every backend exposes the same word-problem interface on raw normal forms
(hashable, orderable Python values) and a symmetric generating set.  The
`Element` wrapper ties a normal form to its backend so that mixing groups is
caught early; hot loops elsewhere in the package work on the raw words.

Normal forms per backend:

* free group      -- reduced tuple of nonzero ints, ``+i`` / ``-i`` for the
                     i-th generator and its inverse (1-based)
* finite group    -- element index into the multiplication table
* free product    -- tuple of ``(side, word)`` syllables, sides alternating,
                     every syllable nontrivial in its factor
* direct product  -- pair ``(left_word, right_word)``
* semidirect      -- pair ``(n, base_word)`` standing for ``n * b``
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field
from typing import Any, Hashable, Iterable, Sequence

Word = Hashable


class BackendMismatch(ValueError):
    pass


class InvalidBackend(ValueError):
    pass


class OutOfTable(LookupError):
    """Length lookup outside a precomputed BFS table."""


@dataclass(frozen=True)
class Generator:
    name: str
    index: int
    is_inverse: bool
    inverse: int
    word: Any = field(repr=False, compare=False)
    backend_id: str = field(default="", repr=False)


class Element:
    """A group element: canonical normal form plus its backend."""

    __slots__ = ("group", "word")

    def __init__(self, group: "Group", word: Word):
        self.group = group
        self.word = word

    def _check(self, other: "Element") -> None:
        if self.group.fingerprint != other.group.fingerprint:
            raise BackendMismatch(f"{self.group!r} vs {other.group!r}")

    def __eq__(self, other):
        if not isinstance(other, Element):
            return NotImplemented
        return self.word == other.word and self.group.fingerprint == other.group.fingerprint

    def __hash__(self):
        return hash(self.word)

    def __lt__(self, other: "Element") -> bool:
        self._check(other)
        return self.group.sort_key(self.word) < self.group.sort_key(other.word)

    def __mul__(self, other: "Element") -> "Element":
        return multiply(self, other)

    def inverse(self) -> "Element":
        return invert(self)

    def __len__(self) -> int:
        return self.group.length(self.word)

    def __repr__(self):
        return f"<{self.group.format(self.word)}>"

    def __str__(self):
        return self.group.format(self.word)


class Group:
    """Base class for backends.  Subclasses fill in the word problem."""

    kind = "abstract"
    identity: Word
    generators: list[Generator]
    has_exact_length = True

    def __init__(self):
        self._bfs_lock = threading.Lock()
        self._bfs_lengths: dict | None = None
        self._bfs_frontier: list = []
        self._bfs_radius = -1
        self._fingerprint: bytes | None = None

    # --- to be provided -------------------------------------------------
    def mul(self, u: Word, v: Word) -> Word:
        raise NotImplementedError

    def inv(self, u: Word) -> Word:
        raise NotImplementedError

    def describe(self) -> str:
        """Canonical description of kind and parameters (fingerprinted)."""
        raise NotImplementedError

    def format(self, u: Word) -> str:
        raise NotImplementedError

    def length(self, u: Word) -> int:
        return self.bfs_length(u)

    # --- generic ----------------------------------------------------------
    def mul_gen(self, u: Word, i: int) -> Word:
        return self.mul(u, self.generators[i].word)

    def conj(self, h: Word, x: Word) -> Word:
        return self.mul(self.mul(h, x), self.inv(h))

    def sort_key(self, u: Word):
        return u

    def names(self) -> dict[str, Word]:
        return {g.name: g.word for g in self.generators}

    @property
    def fingerprint(self) -> bytes:
        if self._fingerprint is None:
            self._fingerprint = hashlib.sha256(self.describe().encode()).digest()
        return self._fingerprint

    @property
    def id(self) -> str:
        return self.fingerprint.hex()[:12]

    def element(self, word: Word) -> Element:
        return Element(self, word)

    def e(self) -> Element:
        return Element(self, self.identity)

    def evaluate(self, letters: Iterable[int]) -> Word:
        """Letter-by-letter evaluation of a word over generator indices."""
        u = self.identity
        for i in letters:
            u = self.mul_gen(u, i)
        return u

    def parse(self, text: str) -> Element:
        """Parse whitespace separated generator tokens, e.g. ``"x y^-1 a"``."""
        table = self.names()
        u = self.identity
        for tok in text.split():
            if tok in ("e", "1"):
                continue
            if tok in table:
                u = self.mul(u, table[tok])
                continue
            base, _, exp = tok.rpartition("^")
            if not base or base not in table:
                raise ValueError(f"unknown generator token {tok!r} for {self!r}")
            try:
                k = int(exp)
            except ValueError:
                raise ValueError(f"bad exponent in token {tok!r}") from None
            g = table[base] if k >= 0 else self.inv(table[base])
            for _ in range(abs(k)):
                u = self.mul(u, g)
        return Element(self, u)

    def bfs_length(self, u: Word, max_radius: int = 64) -> int:
        """Cayley-graph distance via a lazily grown BFS table."""
        with self._bfs_lock:
            if self._bfs_lengths is None:
                self._bfs_lengths = {self.identity: 0}
                self._bfs_frontier = [self.identity]
                self._bfs_radius = 0
            table = self._bfs_lengths
            while u not in table:
                if self._bfs_radius >= max_radius or not self._bfs_frontier:
                    raise OutOfTable(f"{self.format(u)} not within radius {self._bfs_radius}")
                nxt = []
                r = self._bfs_radius + 1
                for w in self._bfs_frontier:
                    for i in range(len(self.generators)):
                        v = self.mul_gen(w, i)
                        if v not in table:
                            table[v] = r
                            nxt.append(v)
                self._bfs_frontier = nxt
                self._bfs_radius = r
            return table[u]

    def __repr__(self):
        return f"{type(self).__name__}({self.describe()})"


def _make_generators(specs: Sequence[tuple[str, Any, int | None]], backend_id: str = "") -> list[Generator]:
    """Build a symmetric generating set.

    ``specs`` holds ``(name, word, inverse_word_or_None)``; ``None`` marks an
    involution.  Each non-involution gets a paired ``name^-1`` generator.
    """
    gens: list[Generator] = []
    for name, word, inv_word in specs:
        i = len(gens)
        if inv_word is None:
            gens.append(Generator(name, i, False, i, word, backend_id))
        else:
            gens.append(Generator(name, i, False, i + 1, word, backend_id))
            gens.append(Generator(f"{name}^-1", i + 1, True, i, inv_word, backend_id))
    return gens


# ---------------------------------------------------------------------------
# free groups


class FreeGroup(Group):
    kind = "free"

    def __init__(self, rank: int, names: Sequence[str] | None = None):
        super().__init__()
        if rank < 0:
            raise InvalidBackend("rank must be non-negative")
        self.rank = rank
        if names is None:
            names = ("x", "y", "z")[:rank] if rank <= 3 else [f"x{i + 1}" for i in range(rank)]
        if len(names) != rank:
            raise InvalidBackend("need one name per generator")
        self.letter_names = list(names)
        self.identity = ()
        self.generators = _make_generators([(n, (i + 1,), (-(i + 1),)) for i, n in enumerate(names)])

    def describe(self):
        return f"free(rank={self.rank},names={','.join(self.letter_names)})"

    def mul(self, u, v):
        if not u:
            return v
        if not v:
            return u
        i = 0
        n = min(len(u), len(v))
        while i < n and u[-1 - i] == -v[i]:
            i += 1
        return u[: len(u) - i] + v[i:]

    def mul_gen(self, u, i):
        s = self.generators[i].word[0]
        if u and u[-1] == -s:
            return u[:-1]
        return u + (s,)

    def inv(self, u):
        return tuple(-c for c in reversed(u))

    def length(self, u):
        return len(u)

    def letter(self, c: int) -> str:
        name = self.letter_names[abs(c) - 1]
        return name if c > 0 else f"{name}^-1"

    def format(self, u):
        if not u:
            return "e"
        return " ".join(self.letter(c) for c in u)

    def reduce(self, letters: Iterable[int]) -> tuple:
        out: list[int] = []
        for c in letters:
            if out and out[-1] == -c:
                out.pop()
            else:
                out.append(c)
        return tuple(out)


# ---------------------------------------------------------------------------
# finite groups from multiplication tables


def check_table(table: Sequence[Sequence[int]]) -> None:
    n = len(table)
    if n == 0:
        raise InvalidBackend("empty table")
    for row in table:
        if len(row) != n or any(not (0 <= v < n) for v in row):
            raise InvalidBackend("table must be n x n with entries in range")
    for g in range(n):
        if table[0][g] != g or table[g][0] != g:
            raise InvalidBackend("index 0 must be the identity")
        if 0 not in table[g]:
            raise InvalidBackend(f"element {g} has no inverse")
    for a in range(n):
        ra = table[a]
        for b in range(n):
            rab = table[ra[b]]
            rb = table[b]
            for c in range(n):
                if rab[c] != ra[rb[c]]:
                    raise InvalidBackend(f"not associative at ({a}, {b}, {c})")


class FiniteGroup(Group):
    kind = "finite"

    def __init__(
        self,
        table: Sequence[Sequence[int]],
        generators: Sequence[int] | None = None,
        gen_names: Sequence[str] | None = None,
        elem_names: Sequence[str] | None = None,
    ):
        super().__init__()
        check_table(table)
        self.table = tuple(tuple(int(v) for v in row) for row in table)
        n = self.order = len(self.table)
        self._inv = [self.table[g].index(0) for g in range(n)]
        if generators is None:
            generators = list(range(1, n))
        if gen_names is None:
            gen_names = [f"g{g}" for g in generators]
        if len(gen_names) != len(generators):
            raise InvalidBackend("need one name per generator")
        specs = []
        seen: set[int] = set()
        for g, name in zip(generators, gen_names):
            if g == 0 or not (0 <= g < n):
                raise InvalidBackend(f"bad generator index {g}")
            if g in seen:
                continue
            gi = self._inv[g]
            specs.append((name, g, None if gi == g else gi))
            seen.update((g, gi))
        self.gen_spec = tuple(generators)
        self.gen_names = tuple(gen_names)
        self.identity = 0
        self.generators = _make_generators(specs)
        self.elem_names = tuple(elem_names) if elem_names is not None else None
        self._lengths = self._bfs_all()

    def _bfs_all(self) -> list[int]:
        dist = [-1] * self.order
        dist[0] = 0
        self._geodesic = {0: ()}
        frontier = [0]
        while frontier:
            nxt = []
            for u in frontier:
                for gen in self.generators:
                    v = self.table[u][gen.word]
                    if dist[v] < 0:
                        dist[v] = dist[u] + 1
                        self._geodesic[v] = self._geodesic[u] + (gen.name,)
                        nxt.append(v)
            frontier = nxt
        if min(dist) < 0:
            raise InvalidBackend("generators do not generate the group")
        return dist

    def describe(self):
        h = hashlib.sha256(repr(self.table).encode()).hexdigest()[:16]
        return f"finite(order={self.order},table={h},gens={self.gen_spec},names={','.join(self.gen_names)})"

    def mul(self, u, v):
        return self.table[u][v]

    def mul_gen(self, u, i):
        return self.table[u][self.generators[i].word]

    def inv(self, u):
        return self._inv[u]

    def length(self, u):
        return self._lengths[u]

    @property
    def diameter(self) -> int:
        return max(self._lengths)

    def format(self, u):
        if self.elem_names is not None:
            return self.elem_names[u]
        if u == 0:
            return "e"
        return " ".join(self._geodesic[u])


def cyclic(n: int, name: str = "a") -> FiniteGroup:
    table = [[(i + j) % n for j in range(n)] for i in range(n)]
    names = ["e", name] + [f"{name}^{k}" for k in range(2, n)]
    return FiniteGroup(table, generators=[1], gen_names=[name], elem_names=names)


def symmetric3() -> FiniteGroup:
    """Order-6 table of S3 generated by a transposition and a 3-cycle."""
    from itertools import permutations

    perms = list(permutations(range(3)))
    # identity first
    perms.sort()
    idx = {p: i for i, p in enumerate(perms)}
    table = [[idx[tuple(p[q[k]] for k in range(3))] for q in perms] for p in perms]
    t = idx[(1, 0, 2)]
    r = idx[(1, 2, 0)]
    return FiniteGroup(table, generators=[t, r], gen_names=["t", "r"])


def load_table(path) -> list[list[int]]:
    """Read a multiplication table: first line n, then n rows of n indices."""
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    if not lines:
        raise InvalidBackend("empty table file")
    n = int(lines[0][0])
    rows = [[int(v) for v in ln] for ln in lines[1:]]
    if len(rows) != n:
        raise InvalidBackend(f"expected {n} rows, got {len(rows)}")
    return rows


def save_table(table: Sequence[Sequence[int]], path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{len(table)}\n")
        for row in table:
            fh.write(" ".join(str(v) for v in row) + "\n")


# ---------------------------------------------------------------------------
# free and direct products


def _rename(factor: Group, taken: set[str], tag: str) -> list[str]:
    out = []
    for g in factor.generators:
        name = g.name
        if name in taken:
            name = f"{name}{tag}"
        out.append(name)
    return out


class FreeProduct(Group):
    kind = "free_product"

    def __init__(self, left: Group, right: Group):
        super().__init__()
        if left.generators == [] or right.generators == []:
            raise InvalidBackend("free product factors must be nontrivial")
        self.factors = (left, right)
        self.identity = ()
        lnames = [g.name for g in left.generators]
        rnames = _rename(right, set(lnames), "'")
        gens: list[Generator] = []
        for side, (f, names) in enumerate(((left, lnames), (right, rnames))):
            off = len(gens)
            for g, nm in zip(f.generators, names):
                gens.append(Generator(nm, off + g.index, g.is_inverse, off + g.inverse, ((side, g.word),)))
        self.generators = gens

    def describe(self):
        l, r = self.factors
        return f"free_product({l.describe()};{r.describe()})"

    def mul(self, u, v):
        if not u:
            return v
        if not v:
            return u
        out = list(u)
        for k, (side, w) in enumerate(v):
            if out and out[-1][0] == side:
                f = self.factors[side]
                merged = f.mul(out[-1][1], w)
                if merged == f.identity:
                    out.pop()
                else:
                    out[-1] = (side, merged)
            else:
                out.extend(v[k:])
                break
        return tuple(out)

    def inv(self, u):
        return tuple((s, self.factors[s].inv(w)) for s, w in reversed(u))

    def length(self, u):
        return sum(self.factors[s].length(w) for s, w in u)

    def format(self, u):
        if not u:
            return "e"
        return " ".join(self.factors[s].format(w) for s, w in u)


class DirectProduct(Group):
    kind = "direct_product"

    def __init__(self, left: Group, right: Group):
        super().__init__()
        self.factors = (left, right)
        self.identity = (left.identity, right.identity)
        lnames = [g.name for g in left.generators]
        rnames = _rename(right, set(lnames), "'")
        gens = []
        for g, nm in zip(left.generators, lnames):
            gens.append(Generator(nm, g.index, g.is_inverse, g.inverse, (g.word, right.identity)))
        off = len(gens)
        for g, nm in zip(right.generators, rnames):
            gens.append(Generator(nm, g.index + off, g.is_inverse, g.inverse + off, (left.identity, g.word)))
        self.generators = gens

    def describe(self):
        l, r = self.factors
        return f"direct_product({l.describe()};{r.describe()})"

    def mul(self, u, v):
        l, r = self.factors
        return (l.mul(u[0], v[0]), r.mul(u[1], v[1]))

    def inv(self, u):
        l, r = self.factors
        return (l.inv(u[0]), r.inv(u[1]))

    def length(self, u):
        l, r = self.factors
        return l.length(u[0]) + r.length(u[1])

    def format(self, u):
        l, r = self.factors
        return f"({l.format(u[0])}, {r.format(u[1])})"

    def parse(self, text: str) -> Element:
        """Generator tokens, or the pair form ``(left, right)`` printed by `format`."""
        s = text.strip()
        if not (s.startswith("(") and s.endswith(")")):
            return super().parse(text)
        depth = 0
        for i, ch in enumerate(s[1:-1], 1):
            depth += (ch == "(") - (ch == ")")
            if ch == "," and depth == 0:
                l, r = self.factors
                return Element(self, (l.parse(s[1:i]).word, r.parse(s[i + 1:-1]).word))
        raise ValueError(f"cannot parse {text!r} as a pair")


# ---------------------------------------------------------------------------
# semidirect products  N x| F  with N finite, F free


def _is_automorphism(table, perm) -> bool:
    n = len(table)
    if sorted(perm) != list(range(n)):
        return False
    return all(perm[table[i][j]] == table[perm[i]][perm[j]] for i in range(n) for j in range(n))


class Semidirect(Group):
    """``N x| F`` where the base F is free and acts on the finite group N.

    ``action`` maps each base generator name to a permutation of N's element
    indices (the automorphism ``n -> b n b^-1``).
    """

    kind = "semidirect"

    def __init__(self, normal: FiniteGroup, base: FreeGroup, action: dict[str, Sequence[int]]):
        super().__init__()
        if not isinstance(normal, FiniteGroup) or not isinstance(base, FreeGroup):
            raise InvalidBackend("semidirect needs a finite normal part and a free base")
        self.normal, self.base = normal, base
        n = normal.order
        perms: dict[int, tuple[int, ...]] = {}
        for i, name in enumerate(base.letter_names):
            p = tuple(action.get(name, range(n)))
            if not _is_automorphism(normal.table, p):
                raise InvalidBackend(f"action of {name} is not an automorphism of the normal part")
            pinv = [0] * n
            for k, v in enumerate(p):
                pinv[v] = k
            perms[i + 1] = p
            perms[-(i + 1)] = tuple(pinv)
        self.action = {name: perms[i + 1] for i, name in enumerate(base.letter_names)}
        self._perms = perms
        self.identity = (0, ())
        gens: list[Generator] = []
        for f, wrap in ((normal, lambda w: (w, ())), (base, lambda w: (0, w))):
            off = len(gens)
            for g in f.generators:
                gens.append(Generator(g.name, off + g.index, g.is_inverse, off + g.inverse, wrap(g.word)))
        self.generators = gens
        gen_set = {g.word for g in normal.generators}
        self._exact = all({p[w] for w in gen_set} == gen_set for p in perms.values())
        self.has_exact_length = self._exact

    def describe(self):
        act = ";".join(f"{k}:{list(v)}" for k, v in sorted(self.action.items()))
        return f"semidirect({self.normal.describe()};{self.base.describe()};{act})"

    def twist(self, b, n: int) -> int:
        """Apply the automorphism of base word ``b`` to ``n``."""
        perms = self._perms
        for c in reversed(b):
            n = perms[c][n]
        return n

    def mul(self, u, v):
        n1, b1 = u
        n2, b2 = v
        if n2:
            n2 = self.twist(b1, n2)
        return (self.normal.table[n1][n2], self.base.mul(b1, b2))

    def mul_gen(self, u, i):
        n, b = u
        m, c = self.generators[i].word
        if m:
            return (self.normal.table[n][self.twist(b, m)], b)
        return (n, self.base.mul_gen(b, self._base_index(c)))

    def _base_index(self, c):
        s = c[0]
        return 2 * (abs(s) - 1) + (1 if s < 0 else 0)

    def inv(self, u):
        n, b = u
        bi = self.base.inv(b)
        return (self.twist(bi, self.normal.inv(n)), bi)

    def length(self, u):
        if self._exact:
            return self.base.length(u[1]) + self.normal.length(u[0])
        return self.bfs_length(u)

    def format(self, u):
        n, b = u
        parts = []
        if n:
            parts.append(self.normal.format(n))
        if b:
            parts.append(self.base.format(b))
        return " ".join(parts) if parts else "e"


# ---------------------------------------------------------------------------
# element-level operations


def _same(g: Element, h: Element) -> Group:
    if g.group.fingerprint != h.group.fingerprint:
        raise BackendMismatch(f"{g.group!r} vs {h.group!r}")
    return g.group


def multiply(g: Element, h: Element) -> Element:
    G = _same(g, h)
    return Element(G, G.mul(g.word, h.word))


def invert(g: Element) -> Element:
    return Element(g.group, g.group.inv(g.word))


def conjugate(h: Element, x: Element) -> Element:
    """``h x h^-1``."""
    G = _same(h, x)
    return Element(G, G.conj(h.word, x.word))


def word_length(g: Element) -> int:
    return g.group.length(g.word)


class LengthFunction:
    """Word length, either by the backend's exact rule or a BFS table."""

    def __init__(self, group: Group, mode: str = "exact_rule", radius: int | None = None):
        if mode not in ("exact_rule", "bfs_table"):
            raise ValueError(f"unknown length mode {mode!r}")
        self.group = group
        self.mode = mode
        self.radius = radius
        self._table: dict | None = None
        if mode == "bfs_table":
            if radius is None or radius < 0:
                raise ValueError("bfs_table needs a radius")
            from .cayley import enumerate_ball

            self._table = enumerate_ball(group, radius).lengths

    def __call__(self, g) -> int:
        u = g.word if isinstance(g, Element) else g
        if self._table is not None:
            try:
                return self._table[u]
            except KeyError:
                raise OutOfTable(f"{self.group.format(u)} outside radius {self.radius}") from None
        return self.group.length(u)


# ---------------------------------------------------------------------------
# construction


def make_backend(kind: str, **params) -> Group:
    """Build a backend by kind name.

    free(rank), finite(table, generators), free_product(left, right),
    direct_product(left, right), semidirect(normal, base, action).
    """
    if kind == "free":
        return FreeGroup(params["rank"], params.get("names"))
    if kind == "finite":
        if "table" in params:
            return FiniteGroup(params["table"], params.get("generators"), params.get("gen_names"),
                               params.get("elem_names"))
        if "path" in params:
            return FiniteGroup(load_table(params["path"]), params.get("generators"), params.get("gen_names"))
        if "cyclic" in params:
            return cyclic(params["cyclic"], params.get("name", "a"))
        raise InvalidBackend("finite backend needs table, path or cyclic")
    if kind == "free_product":
        return FreeProduct(params["left"], params["right"])
    if kind == "direct_product":
        return DirectProduct(params["left"], params["right"])
    if kind == "semidirect":
        return Semidirect(params["normal"], params["base"], params["action"])
    raise InvalidBackend(f"unknown backend kind {kind!r}")


def paper_example_3() -> Semidirect:
    """<x, y, a | a^3, a y a^-1 y^-1, x a x^-1 a^-2> as Z/3 x| F(x, y)."""
    return Semidirect(cyclic(3, "a"), FreeGroup(2), {"x": [0, 2, 1], "y": [0, 1, 2]})


PRESETS = {
    "free2": lambda: FreeGroup(2),
    "z": lambda: FreeGroup(1),
    "z3": lambda: cyclic(3, "a"),
    "s3": symmetric3,
    "z3xz3": lambda: FreeProduct(cyclic(3, "a"), cyclic(3, "b")),
    "z3*z3": lambda: FreeProduct(cyclic(3, "a"), cyclic(3, "b")),
    "z3xfree2": lambda: DirectProduct(cyclic(3, "a"), FreeGroup(2)),
    "paper-example-3": paper_example_3,
}


def preset(name: str) -> Group:
    try:
        return PRESETS[name]()
    except KeyError:
        raise InvalidBackend(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None

"""Balls and spheres in Cayley graphs, growth series and their classification."""

from __future__ import annotations

import csv
import hashlib
import io
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .groups import Group, Word

DEFAULT_MEMORY_BUDGET = 2 * 1024**3
# rough cost of one stored element: dict slot, list slot, tuple payload
_BYTES_PER_ELEMENT = 240


class BudgetExceeded(MemoryError):
    def __init__(self, msg: str, radius_reached: int = -1, partial=None):
        super().__init__(msg)
        self.radius_reached = radius_reached
        self.partial = partial


class SeriesTooShort(ValueError):
    pass


class CacheError(ValueError):
    pass


class FingerprintMismatch(CacheError):
    pass


class ChecksumError(CacheError):
    pass


@dataclass
class BallEnumeration:
    """Elements of B_R sorted by (length, normal form)."""

    group: Group
    radius: int
    words: list
    offsets: list[int]
    lengths: dict = field(repr=False)
    _index: dict | None = field(default=None, repr=False)
    _neighbors: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.words)

    def __contains__(self, u):
        return u in self.lengths

    def sphere(self, l: int) -> list:
        if l < 0 or l > self.radius:
            return []
        return self.words[self.offsets[l]: self.offsets[l + 1]]

    def sphere_counts(self) -> list[int]:
        return [self.offsets[l + 1] - self.offsets[l] for l in range(self.radius + 1)]

    def ball(self, r: int) -> list:
        return self.words[: self.offsets[min(r, self.radius) + 1]]

    @property
    def index(self) -> dict:
        if self._index is None:
            self._index = {u: i for i, u in enumerate(self.words)}
        return self._index

    def restrict(self, r: int) -> "BallEnumeration":
        r = min(r, self.radius)
        words = self.ball(r)
        return BallEnumeration(self.group, r, words, self.offsets[: r + 2],
                               {u: self.lengths[u] for u in words})

    def right_neighbors(self) -> np.ndarray:
        """``out[i, j]`` = index of ``words[j] * s_i`` or -1 outside the ball."""
        if self._neighbors is not None:
            return self._neighbors.copy()
        G, idx = self.group, self.index
        out = np.full((len(G.generators), len(self.words)), -1, dtype=np.int64)
        for j, u in enumerate(self.words):
            for i in range(len(G.generators)):
                k = idx.get(G.mul_gen(u, i))
                if k is not None:
                    out[i, j] = k
        self._neighbors = out
        return out.copy()

    def inverse_index(self) -> np.ndarray:
        G, idx = self.group, self.index
        return np.array([idx[G.inv(u)] for u in self.words], dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, BallEnumeration):
            return NotImplemented
        return (self.group.fingerprint == other.group.fingerprint and self.radius == other.radius
                and self.words == other.words and self.offsets == other.offsets)


def enumerate_ball(group: Group, R: int, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> BallEnumeration:
    """Breadth-first enumeration of B_R; spheres are stored sorted."""
    if R < 0:
        raise ValueError("radius must be non-negative")
    ngen = len(group.generators)
    lengths = {group.identity: 0}
    words = [group.identity]
    offsets = [0, 1]
    frontier = [group.identity]
    for l in range(1, R + 1):
        projected = (len(words) + len(frontier) * max(ngen - 1, 1)) * _BYTES_PER_ELEMENT
        if projected > memory_budget:
            raise BudgetExceeded(
                f"ball of radius {l} would exceed memory budget ({projected} > {memory_budget} bytes)",
                radius_reached=l - 1, partial=BallEnumeration(group, l - 1, words, offsets, lengths))
        nxt = []
        mul_gen = group.mul_gen
        for u in frontier:
            for i in range(ngen):
                v = mul_gen(u, i)
                if v not in lengths:
                    lengths[v] = l
                    nxt.append(v)
        nxt.sort(key=group.sort_key)
        words.extend(nxt)
        offsets.append(len(words))
        frontier = nxt
    return BallEnumeration(group, R, words, offsets, lengths)


@dataclass(frozen=True)
class GrowthSeries:
    counts: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        if any(int(c) != c or c < 0 for c in self.counts):
            raise ValueError("counts must be non-negative integers")

    @property
    def L(self) -> int:
        return len(self.counts) - 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["l", "n_l"])
        for l, n in enumerate(self.counts):
            w.writerow([l, n])
        return buf.getvalue()


def sphere_sizes(group: Group, R: int, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> GrowthSeries:
    ball = enumerate_ball(group, R, memory_budget)
    return GrowthSeries(tuple(ball.sphere_counts()), label=f"ball:{group.describe()}")


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class GrowthVerdict:
    kind: str  # "polynomial" | "at_least_exponential"
    fit_window: tuple[int, int]
    fit_quality: float
    rate: float | None = None  # b in n_l ~ a e^{bl}
    scale: float | None = None  # a
    degree: float | None = None
    finite: bool = False
    exp_quality: float | None = None
    poly_quality: float | None = None
    thresholds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "fit_window": list(self.fit_window),
            "fit_quality": self.fit_quality,
            "rate": self.rate,
            "scale": self.scale,
            "degree": self.degree,
            "finite": self.finite,
            "exp_quality": self.exp_quality,
            "poly_quality": self.poly_quality,
            "thresholds": self.thresholds,
        }


def _fit(x, y):
    res = stats.linregress(x, y)
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    # constant data is fitted exactly by any line with zero slope
    r2 = 1.0 if ss_tot == 0.0 else float(res.rvalue**2)
    return float(res.slope), float(res.intercept), r2


def growth_classify(series: GrowthSeries, min_rate: float = 0.1, min_quality: float = 0.98,
                    min_nonzero: int = 8) -> GrowthVerdict:
    """Compare log-linear and log-log fits of the series tail.

    The fit window is ``[ceil(L/2), L]``; zero entries are skipped.
    """
    counts = series.counts
    L = series.L
    lo = math.ceil(L / 2)
    window = (lo, L)
    thresholds = {"min_rate": min_rate, "min_quality": min_quality, "min_nonzero": min_nonzero}
    pts = [(l, counts[l]) for l in range(max(lo, 1), L + 1) if counts[l] > 0]
    if L >= 1 and not pts:
        return GrowthVerdict("polynomial", window, 1.0, degree=0.0, finite=True, thresholds=thresholds)
    nonzero = sum(1 for l in range(2, L + 1) if counts[l] > 0)
    if nonzero < min_nonzero or len(pts) < 2:
        raise SeriesTooShort(f"need >= {min_nonzero} nonzero entries for l >= 2 and 2 in the window, "
                             f"got {nonzero} and {len(pts)}")
    l = np.array([p[0] for p in pts], dtype=float)
    logn = np.log(np.array([p[1] for p in pts], dtype=float))
    b, loga, q_exp = _fit(l, logn)
    d, _, q_poly = _fit(np.log(l), logn)
    if q_exp > q_poly and b >= min_rate and q_exp >= min_quality:
        return GrowthVerdict("at_least_exponential", window, q_exp, rate=b, scale=math.exp(loga),
                             exp_quality=q_exp, poly_quality=q_poly, thresholds=thresholds)
    return GrowthVerdict("polynomial", window, q_poly, degree=d, rate=b,
                         exp_quality=q_exp, poly_quality=q_poly, thresholds=thresholds)


# ---------------------------------------------------------------------------
# binary cache
#
# "HTRC" | u16 version | 32-byte fingerprint | u32 radius | (R+1) x u64 counts
# | per element: u32 length + encoded normal form | u64 checksum

MAGIC = b"HTRC"
CACHE_VERSION = 1


def _varint(n: int) -> bytes:
    n = 2 * n if n >= 0 else -2 * n - 1  # zigzag
    out = bytearray()
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            out.append(b | 0x80)
        else:
            out.append(b)
            return bytes(out)


def _read_varint(buf: bytes, pos: int) -> tuple[int, int]:
    shift = n = 0
    while True:
        b = buf[pos]
        pos += 1
        n |= (b & 0x7F) << shift
        shift += 7
        if not b & 0x80:
            break
    return (n >> 1) ^ -(n & 1), pos


def encode_word(u: Word) -> bytes:
    if isinstance(u, int):
        return b"i" + _varint(u)
    if isinstance(u, tuple):
        return b"(" + _varint(len(u)) + b"".join(encode_word(v) for v in u)
    raise TypeError(f"cannot encode normal form {u!r}")


def decode_word(buf: bytes, pos: int = 0):
    tag = buf[pos:pos + 1]
    if tag == b"i":
        return _read_varint(buf, pos + 1)
    if tag == b"(":
        n, pos = _read_varint(buf, pos + 1)
        items = []
        for _ in range(n):
            v, pos = decode_word(buf, pos)
            items.append(v)
        return tuple(items), pos
    raise CacheError(f"bad tag {tag!r} at {pos}")


def _checksum(data: bytes) -> bytes:
    return hashlib.blake2b(data, digest_size=8).digest()


def cache_dumps(enum: BallEnumeration) -> bytes:
    parts = [MAGIC, struct.pack("<H", CACHE_VERSION), enum.group.fingerprint,
             struct.pack("<I", enum.radius)]
    parts.extend(struct.pack("<Q", c) for c in enum.sphere_counts())
    for u in enum.words:
        b = encode_word(u)
        parts.append(struct.pack("<I", len(b)))
        parts.append(b)
    body = b"".join(parts)
    return body + _checksum(body)


def cache_loads(group: Group, data: bytes) -> BallEnumeration:
    if len(data) < 4 + 2 + 32 + 4 + 8 or data[:4] != MAGIC:
        raise ChecksumError("not a cache file or truncated header")
    body, tail = data[:-8], data[-8:]
    if _checksum(body) != tail:
        raise ChecksumError("checksum mismatch (corrupt or truncated cache)")
    (version,) = struct.unpack_from("<H", body, 4)
    if version != CACHE_VERSION:
        raise CacheError(f"unsupported cache version {version}")
    fp = body[6:38]
    if fp != group.fingerprint:
        raise FingerprintMismatch("cache was written for a different backend")
    (R,) = struct.unpack_from("<I", body, 38)
    pos = 42
    counts = list(struct.unpack_from(f"<{R + 1}Q", body, pos))
    pos += 8 * (R + 1)
    words = []
    lengths = {}
    offsets = [0]
    for l, c in enumerate(counts):
        for _ in range(c):
            (n,) = struct.unpack_from("<I", body, pos)
            pos += 4
            u, end = decode_word(body, pos)
            if end != pos + n:
                raise CacheError("length prefix does not match encoded element")
            pos = end
            words.append(u)
            lengths[u] = l
        offsets.append(len(words))
    if pos != len(body):
        raise CacheError("trailing bytes in cache body")
    return BallEnumeration(group, R, words, offsets, lengths)


def cache_store(enum: BallEnumeration, path) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(cache_dumps(enum))
    os.replace(tmp, path)


def cache_load(group: Group, path) -> BallEnumeration:
    with open(path, "rb") as fh:
        return cache_loads(group, fh.read())


def cached_ball(group: Group, R: int, cache_dir=None, memory_budget: int = DEFAULT_MEMORY_BUDGET) -> BallEnumeration:
    """Enumerate B_R, reusing a cached ball of radius >= R when present."""
    if cache_dir is None:
        return enumerate_ball(group, R, memory_budget)
    import fcntl

    os.makedirs(cache_dir, exist_ok=True)
    path = os.path.join(cache_dir, f"{group.fingerprint.hex()[:24]}.htrc")
    lock = open(path + ".lock", "a+")
    try:
        fcntl.flock(lock, fcntl.LOCK_EX)
        if os.path.exists(path):
            try:
                enum = cache_load(group, path)
                if enum.radius >= R:
                    return enum.restrict(R)
            except CacheError:
                pass
        enum = enumerate_ball(group, R, memory_budget)
        cache_store(enum, path)
        return enum
    finally:
        fcntl.flock(lock, fcntl.LOCK_UN)
        lock.close()

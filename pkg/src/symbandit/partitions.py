"""Set partitions of {1..d}, the structured classes used as symmetry models,
and the coarsening lattice walked by the greedy model search.

Partitions are stored in canonical form: blocks sorted internally and ordered
by their smallest element.  Equivalently a partition is identified with its
restricted growth string (``rgs``), the 0-based block label of every
coordinate; lexicographic order on that string is the canonical total order
used for enumeration and tie-breaking.

Non-nesting is tested on the arc diagram (arcs join consecutive elements of a
block), which is the convention under which non-nesting partitions are
equinumerous with non-crossing ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ArgumentError,
    CoverageError,
    DimensionMismatch,
    NoCoarseningError,
    NotIntervalError,
    OverlapError,
    PartitionError,
    TooLargeError,
)

DEFAULT_ENUMERATION_CAP = 10**7


class PartitionClass(str, Enum):
    ALL = "all"
    NONCROSSING = "noncrossing"
    NONNESTING = "nonnesting"
    INTERVAL = "interval"

    @classmethod
    def parse(cls, text: "str | PartitionClass") -> "PartitionClass":
        if isinstance(text, PartitionClass):
            return text
        key = str(text).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "all": cls.ALL,
            "nc": cls.NONCROSSING,
            "noncrossing": cls.NONCROSSING,
            "nn": cls.NONNESTING,
            "nonnesting": cls.NONNESTING,
            "interval": cls.INTERVAL,
            "int": cls.INTERVAL,
            "sparse": cls.INTERVAL,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ArgumentError(f"unknown partition class {text!r}") from None

    @property
    def short(self) -> str:
        return {"all": "All", "noncrossing": "NC", "nonnesting": "NN", "interval": "Interval"}[self.value]


@dataclass(frozen=True, eq=False)
class Partition:
    """Canonical set partition of {1..d}.  Construct through :func:`canonicalize`,
    :meth:`parse` or :meth:`from_labels`; the constructor only accepts blocks
    already in canonical form."""

    d: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.d < 1:
            raise ArgumentError("d must be positive")
        labels = [-1] * self.d
        prev_min = 0
        for b, block in enumerate(self.blocks):
            if not block:
                raise PartitionError("empty block")
            if block[0] <= prev_min or any(x >= y for x, y in zip(block, block[1:])):
                raise PartitionError(f"blocks not in canonical form: {self.blocks}")
            prev_min = block[0]
            for e in block:
                if not 1 <= e <= self.d:
                    raise CoverageError(f"element {e} outside 1..{self.d}")
                if labels[e - 1] != -1:
                    raise OverlapError(f"element {e} appears twice")
                labels[e - 1] = b
        if -1 in labels:
            raise CoverageError(f"element {labels.index(-1) + 1} not covered")
        arr = np.asarray(labels, dtype=np.intp)
        arr.flags.writeable = False
        object.__setattr__(self, "_labels", arr)
        object.__setattr__(self, "_rgs", tuple(labels))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        """Build from any block labelling of coordinates 0..d-1 (labels need not
        be canonical)."""
        first: dict[int, list[int]] = {}
        for i, lab in enumerate(labels):
            first.setdefault(int(lab), []).append(i + 1)
        return cls(len(labels), tuple(tuple(b) for b in first.values()))

    @classmethod
    def finest(cls, d: int) -> "Partition":
        return cls(d, tuple((i,) for i in range(1, d + 1)))

    @classmethod
    def coarsest(cls, d: int) -> "Partition":
        return cls(d, (tuple(range(1, d + 1)),))

    @classmethod
    def parse(cls, text: str, d: int | None = None) -> "Partition":
        """Parse the ``1,3|2|4`` encoding; whitespace is ignored."""
        compact = "".join(str(text).split())
        if not compact:
            raise PartitionError("empty partition string")
        try:
            raw = [[int(tok) for tok in part.split(",")] for part in compact.split("|")]
        except ValueError:
            raise PartitionError(f"malformed partition string {text!r}") from None
        if d is None:
            d = max(max(b) for b in raw)
        return canonicalize(raw, d)

    @property
    def k(self) -> int:
        return len(self.blocks)

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def rgs(self) -> tuple[int, ...]:
        return self._rgs

    def block_sizes(self) -> np.ndarray:
        return np.bincount(self._labels, minlength=self.k)

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.d == other.d and self.blocks == other.blocks

    def __hash__(self):
        return hash((self.d, self.blocks))

    def __lt__(self, other: "Partition") -> bool:
        return (self.d, self._rgs) < (other.d, other._rgs)

    def __str__(self) -> str:
        return "|".join(",".join(map(str, b)) for b in self.blocks)

    def __repr__(self) -> str:
        return f"Partition('{self}')"


@dataclass(frozen=True)
class Permutation:
    """Coordinate permutation g; ``image[i]`` is g(i) with 0-based indices.
    Acting on a vector gives (g.x)_i = x_{g(i)}."""

    d: int
    image: tuple[int, ...]

    def __post_init__(self):
        if len(self.image) != self.d or sorted(self.image) != list(range(self.d)):
            raise ArgumentError("image is not a permutation of 0..d-1")

    @classmethod
    def identity(cls, d: int) -> "Permutation":
        return cls(d, tuple(range(d)))

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape[-1] != self.d:
            raise DimensionMismatch(f"expected last axis {self.d}, got {x.shape[-1]}")
        return x[..., list(self.image)]

    def matrix(self) -> np.ndarray:
        a = np.zeros((self.d, self.d))
        a[np.arange(self.d), self.image] = 1.0
        return a

    def __str__(self) -> str:
        return " ".join(str(i + 1) for i in self.image)


def canonicalize(raw_blocks: Iterable[Iterable[int]], d: int) -> Partition:
    seen: set[int] = set()
    blocks = []
    for raw in raw_blocks:
        block = list(raw)
        if not block:
            raise PartitionError("empty block")
        for e in block:
            if e in seen:
                raise OverlapError(f"element {e} appears in more than one block")
            seen.add(e)
        blocks.append(tuple(sorted(block)))
    outside = sorted(e for e in seen if not 1 <= e <= d)
    if outside:
        raise CoverageError(f"elements {outside} outside 1..{d}")
    if len(seen) != d:
        missing = sorted(set(range(1, d + 1)) - seen)
        raise CoverageError(f"elements {missing} not covered")
    blocks.sort(key=lambda b: b[0])
    return Partition(d, tuple(blocks))


# ---------------------------------------------------------------------------
# class predicates on label sequences


def _noncrossing(labels: Sequence[int]) -> bool:
    last = {}
    for i, b in enumerate(labels):
        last[b] = i
    stack: list[int] = []
    opened: set[int] = set()
    for i, b in enumerate(labels):
        if b not in opened:
            opened.add(b)
            if last[b] > i:
                stack.append(b)
        else:
            if stack[-1] != b:
                return False
            if last[b] == i:
                stack.pop()
    return True


def _nonnesting(labels: Sequence[int]) -> bool:
    # arcs arrive ordered by right end; no nesting iff their left ends increase
    prev: dict[int, int] = {}
    max_left = -1
    for i, b in enumerate(labels):
        left = prev.get(b)
        if left is not None:
            if left < max_left:
                return False
            max_left = left
        prev[b] = i
    return True


def _interval(labels: Sequence[int]) -> bool:
    seen = set()
    prev = None
    for b in labels:
        if b != prev:
            if b in seen:
                return False
            seen.add(b)
            prev = b
    return True


_PREDICATES = {
    PartitionClass.NONCROSSING: _noncrossing,
    PartitionClass.NONNESTING: _nonnesting,
    PartitionClass.INTERVAL: _interval,
}


def is_in_class(p: Partition, c: PartitionClass) -> bool:
    c = PartitionClass.parse(c)
    if c is PartitionClass.ALL:
        return True
    return _PREDICATES[c](p.rgs)


# ---------------------------------------------------------------------------
# counting and enumeration


@lru_cache(maxsize=None)
def stirling2(d: int, k: int) -> int:
    if d == k:
        return 1
    if k == 0 or k > d:
        return 0
    return k * stirling2(d - 1, k) + stirling2(d - 1, k - 1)


def narayana(d: int, k: int) -> int:
    return math.comb(d, k) * math.comb(d, k - 1) // d


def count_partitions(d: int, k: int, c: PartitionClass) -> int:
    """Number of class-``c`` partitions of {1..d} with exactly ``k`` blocks."""
    c = PartitionClass.parse(c)
    if d < 1 or not 1 <= k <= d:
        raise ArgumentError(f"need 1 <= k <= d, got d={d}, k={k}")
    if c is PartitionClass.ALL:
        return stirling2(d, k)
    if c is PartitionClass.INTERVAL:
        return math.comb(d - 1, k - 1)
    return narayana(d, k)


def count_at_most(d: int, max_blocks: int, c: PartitionClass) -> int:
    return sum(count_partitions(d, k, c) for k in range(1, max_blocks + 1))


def enumerate_partitions(
    d: int,
    c: PartitionClass = PartitionClass.ALL,
    max_blocks: int | None = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> list[Partition]:
    """All class-``c`` partitions of {1..d} with at most ``max_blocks`` blocks,
    in lexicographic order of their restricted growth strings."""
    c = PartitionClass.parse(c)
    if max_blocks is None:
        max_blocks = d
    if d < 1 or not 1 <= max_blocks <= d:
        raise ArgumentError(f"need 1 <= max_blocks <= d, got d={d}, max_blocks={max_blocks}")
    total = count_at_most(d, max_blocks, c)
    if total > cap:
        raise TooLargeError(f"{total} partitions of class {c.short} with <= {max_blocks} blocks exceed cap {cap}")

    out: list[Partition] = []
    labels = [0] * d
    last = [-1] * d  # last position used by each block
    arcs: list[tuple[int, int]] = []

    def extend(i: int, nblocks: int, max_left: int):
        if i == d:
            out.append(Partition.from_labels(labels))
            return
        choices = range(nblocks + 1) if nblocks < max_blocks else range(nblocks)
        for b in choices:
            if b == nblocks:
                labels[i] = b
                last[b] = i
                extend(i + 1, nblocks + 1, max_left)
                last[b] = -1
                continue
            a = last[b]
            if c is PartitionClass.INTERVAL and b != nblocks - 1:
                continue
            if c is PartitionClass.NONNESTING and a < max_left:
                continue
            if c is PartitionClass.NONCROSSING and any(l < a < r for l, r in arcs):
                continue
            labels[i] = b
            last[b] = i
            arcs.append((a, i))
            extend(i + 1, nblocks, max(max_left, a))
            arcs.pop()
            last[b] = a

    labels[0] = 0
    last[0] = 0
    extend(1, 1, -1)
    return out


# ---------------------------------------------------------------------------
# lattice operations


def refines(p: Partition, q: Partition) -> bool:
    """True iff every block of ``p`` lies inside a block of ``q``."""
    if p.d != q.d:
        raise DimensionMismatch(f"partitions of {p.d} and {q.d} elements")
    target = [-1] * p.k
    for a, b in zip(p.rgs, q.rgs):
        if target[a] == -1:
            target[a] = b
        elif target[a] != b:
            return False
    return True


def merged_labels(labels: np.ndarray, a: int, b: int) -> np.ndarray:
    """Canonical labels after merging blocks ``a < b``."""
    out = np.where(labels == b, a, labels)
    out[out > b] -= 1
    return out


def merge_blocks(p: Partition, a: int, b: int) -> Partition:
    if a == b:
        raise ArgumentError("cannot merge a block with itself")
    a, b = min(a, b), max(a, b)
    return Partition.from_labels(merged_labels(p.labels, a, b))


def _noncrossing_merges(labels: np.ndarray, k: int) -> np.ndarray:
    # In a non-crossing partition each block sits inside a single region of every
    # other block (a gap between consecutive elements, or outside its span).
    # Merging A and B stays non-crossing iff A and B share that region for all C.
    d = labels.shape[0]
    onehot = np.zeros((k, d + 1), dtype=np.int64)
    onehot[labels, np.arange(1, d + 1)] = 1
    before = np.cumsum(onehot, axis=1)  # before[c, j] = #elements of c at positions < j
    first = np.zeros(k, dtype=np.intp)
    first[labels[::-1]] = np.arange(d - 1, -1, -1)
    sizes = np.bincount(labels, minlength=k)
    region = before[:, first].T % sizes[None, :]  # region[A, C]
    differ = region[:, None, :] != region[None, :, :]
    idx = np.arange(k)
    differ[idx, :, idx] = False
    differ[:, idx, idx] = False
    ok = ~differ.any(axis=2)
    return ok


def _nonnesting_merges(labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    # The arc scan of _merge_keeps_nonnesting run for all pairs (a, b) at once:
    # a left end smaller than an earlier left end means an arc nests inside one.
    ia, ib = np.triu_indices(k, 1)
    npairs = len(ia)
    rows = np.arange(npairs)
    prev = np.full((npairs, k), -1, dtype=np.intp)
    max_left = np.full(npairs, -1, dtype=np.intp)
    ok = np.ones(npairs, dtype=bool)
    for i, lab in enumerate(labels.tolist()):
        merged = np.where(ib == lab, ia, lab)
        left = prev[rows, merged]
        has = left >= 0
        ok &= ~has | (left >= max_left)
        max_left = np.where(has, np.maximum(max_left, left), max_left)
        prev[rows, merged] = i
    return ia[ok], ib[ok]


def _merge_keeps_nonnesting(labels: list[int], a: int, b: int) -> bool:
    prev: dict[int, int] = {}
    max_left = -1
    for i, lab in enumerate(labels):
        if lab == b:
            lab = a
        left = prev.get(lab)
        if left is not None:
            if left < max_left:
                return False
            max_left = left
        prev[lab] = i
    return True


def arcs(labels: Sequence[int]) -> list[tuple[int, int]]:
    """Arcs (i, j) joining consecutive elements of each block, sorted by left end."""
    last: dict[int, int] = {}
    out = []
    for i, lab in enumerate(labels):
        if lab in last:
            out.append((last[lab], i))
        last[lab] = i
    out.sort()
    return out


def has_three_crossing(labels: Sequence[int]) -> bool:
    """True iff three arcs cross pairwise.  For non-nesting partitions arcs are
    ordered the same way by both ends, so it suffices to compare arcs two
    apart in that order.  A non-nesting partition without such a triple can be
    merged down to a single block through non-nesting partitions; one with it
    cannot (checked exhaustively for d <= 10)."""
    a = arcs(labels)
    return any(a[i + 2][0] < a[i][1] for i in range(len(a) - 2))


def valid_merges(p: Partition, c: PartitionClass) -> list[tuple[int, int]]:
    """Block pairs ``(a, b)``, ``a < b``, whose merge keeps ``p`` in class ``c``,
    in lexicographic order."""
    c = PartitionClass.parse(c)
    k = p.k
    if k < 2:
        return []
    if c is PartitionClass.ALL:
        return list(combinations(range(k), 2))
    if c is PartitionClass.INTERVAL:
        return [(a, a + 1) for a in range(k - 1)]
    if c is PartitionClass.NONCROSSING:
        ok = _noncrossing_merges(p.labels, k)
        ia, ib = np.nonzero(np.triu(ok, 1))
        return list(zip(ia.tolist(), ib.tolist()))
    ia, ib = _nonnesting_merges(p.labels, k)
    return list(zip(ia.tolist(), ib.tolist()))


def merge_keeps_class(p: Partition, a: int, b: int, c: PartitionClass) -> bool:
    c = PartitionClass.parse(c)
    a, b = min(a, b), max(a, b)
    if c is PartitionClass.ALL:
        return True
    if c is PartitionClass.INTERVAL:
        return b == a + 1
    if c is PartitionClass.NONNESTING:
        return _merge_keeps_nonnesting(list(p.rgs), a, b)
    return _noncrossing(merged_labels(p.labels, a, b).tolist())


def coarsen(p: Partition, c: PartitionClass) -> list[Partition]:
    """All partitions obtained by merging exactly two blocks of ``p`` that stay in
    class ``c``."""
    c = PartitionClass.parse(c)
    if not is_in_class(p, c):
        raise ArgumentError(f"{p} is not in class {c.short}")
    if p.k == 1:
        raise NoCoarseningError("the coarsest partition has no coarsening")
    pairs = valid_merges(p, c)
    if not pairs:
        raise NoCoarseningError(f"no two-block merge of {p} stays in class {c.short}")
    return [merge_blocks(p, a, b) for a, b in pairs]


# ---------------------------------------------------------------------------
# interval partitions <-> sparsity patterns


def interval_support_map(p: Partition) -> frozenset[int]:
    """Positions i in 1..d-1 where coordinates i and i+1 fall in different blocks,
    i.e. the support of the difference vector theta_i - theta_{i+1}."""
    if not _interval(p.rgs):
        raise NotIntervalError(f"{p} is not an interval partition")
    r = p.rgs
    return frozenset(i + 1 for i in range(p.d - 1) if r[i] != r[i + 1])


def support_to_interval(support: Iterable[int], d: int) -> Partition:
    support = sorted(set(support))
    if any(not 1 <= s <= d - 1 for s in support):
        raise ArgumentError(f"support must lie in 1..{d - 1}")
    labels = np.searchsorted(np.asarray(support, dtype=np.intp), np.arange(1, d + 1), side="left")
    return Partition.from_labels(labels.tolist())


# ---------------------------------------------------------------------------
# group action


def sample_stabilizer_permutation(p: Partition, rng: np.random.Generator) -> Permutation:
    """Uniform random permutation mapping every block of ``p`` onto itself."""
    image = np.arange(p.d)
    for block in p.blocks:
        pos = np.asarray(block) - 1
        image[pos] = rng.permutation(pos)
    return Permutation(p.d, tuple(image.tolist()))

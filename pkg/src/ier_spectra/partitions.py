"""Set partitions of {1..k}: enumeration, the special symmetric class,
walk graphs, and Kreweras complements of pair partitions.

Partitions are stored in canonical form: each block ascending, blocks
ordered by least element.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

from .errors import ConfigError

MAX_K = 12


@dataclass(frozen=True)
class Partition:
    """A set partition of {1, ..., k} in canonical block order."""

    k: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen = [False] * (self.k + 1)
        prev_min = 0
        for block in self.blocks:
            if not block:
                raise ConfigError("empty block in partition")
            if block[0] <= prev_min:
                raise ConfigError("blocks must be ordered by least element")
            prev_min = block[0]
            last = 0
            for e in block:
                if not 1 <= e <= self.k:
                    raise ConfigError(f"element {e} outside 1..{self.k}")
                if e <= last:
                    raise ConfigError("block elements must be strictly increasing")
                if seen[e]:
                    raise ConfigError(f"element {e} appears in two blocks")
                seen[e] = True
                last = e
        if not all(seen[1:]):
            raise ConfigError("blocks do not cover the ground set")

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]], k: int | None = None) -> "Partition":
        """Return the canonical Partition with the given blocks."""
        listed = [sorted(b) for b in blocks]
        if any(not b for b in listed):
            raise ConfigError("empty block in partition")
        normal = tuple(sorted((tuple(b) for b in listed), key=lambda b: b[0]))
        if k is None:
            k = max(b[-1] for b in normal) if normal else 0
        return cls(k, normal)

    def block_sizes(self) -> tuple[int, ...]:
        """Return the multiset of block sizes, descending."""
        return tuple(sorted((len(b) for b in self.blocks), reverse=True))

    def __len__(self) -> int:
        return len(self.blocks)


def to_block_notation(p: Partition) -> str:
    """Render a partition as {1,4,5,8|2,3,6,7}."""
    return "{" + "|".join(",".join(str(e) for e in b) for b in p.blocks) + "}"


def from_block_notation(text: str, k: int | None = None) -> Partition:
    """Parse block notation like {1,4,5,8|2,3,6,7} into a Partition."""
    s = text.strip()
    if not (s.startswith("{") and s.endswith("}")):
        raise ConfigError(f"bad block notation: {text!r}")
    inner = s[1:-1]
    if not inner:
        raise ConfigError(f"bad block notation: {text!r}")
    try:
        blocks = [[int(tok) for tok in part.split(",")] for part in inner.split("|")]
    except ValueError as exc:
        raise ConfigError(f"bad block notation: {text!r}") from exc
    return Partition.from_blocks(blocks, k=k)


def _check_k(k: int) -> None:
    if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= MAX_K:
        raise ConfigError(f"k must be an integer in 1..{MAX_K}, got {k!r}")


def _iter_rgs(k: int) -> Iterator[list[int]]:
    # Restricted growth strings: a[0]=0, a[i] <= 1 + max(a[:i]).
    a = [0] * k

    def rec(i: int, mx: int) -> Iterator[list[int]]:
        if i == k:
            yield a
            return
        for v in range(mx + 2):
            a[i] = v
            yield from rec(i + 1, mx if v <= mx else v)

    yield from rec(1, 0)


def _partition_from_rgs(k: int, rgs: list[int]) -> Partition:
    nblocks = max(rgs) + 1
    blocks: list[list[int]] = [[] for _ in range(nblocks)]
    for i, v in enumerate(rgs):
        blocks[v].append(i + 1)
    return Partition(k, tuple(tuple(b) for b in blocks))


def enumerate_set_partitions(k: int) -> list[Partition]:
    """Return all set partitions of {1..k} in restricted-growth-string order."""
    _check_k(k)
    return [_partition_from_rgs(k, rgs) for rgs in _iter_rgs(k)]


def is_special_symmetric(p: Partition) -> bool:
    """Return True if p is special symmetric.

    Every block must have even size, and the gap between any two successive
    elements of a block must split into even-length runs, a run being
    elements that are consecutive within a single block of p.
    """
    if any(len(b) % 2 for b in p.blocks):
        return False
    block_of = {}
    index_in_block = {}
    for bi, block in enumerate(p.blocks):
        for j, e in enumerate(block):
            block_of[e] = bi
            index_in_block[e] = j
    for block in p.blocks:
        for a, b in zip(block, block[1:]):
            if b == a + 1:
                continue
            per_block: dict[int, list[int]] = {}
            for e in range(a + 1, b):
                per_block.setdefault(block_of[e], []).append(index_in_block[e])
            for indices in per_block.values():
                run_len = 1
                for x, y in zip(indices, indices[1:]):
                    if y == x + 1:
                        run_len += 1
                    else:
                        if run_len % 2:
                            return False
                        run_len = 1
                if run_len % 2:
                    return False
    return True


def enumerate_ss(k: int) -> list[Partition]:
    """Return the special symmetric partitions of {1..k}; empty for odd k."""
    _check_k(k)
    if k % 2:
        return []
    out = []
    for rgs in _iter_rgs(k):
        sizes: dict[int, int] = {}
        for v in rgs:
            sizes[v] = sizes.get(v, 0) + 1
        if any(c % 2 for c in sizes.values()):
            continue
        p = _partition_from_rgs(k, rgs)
        if is_special_symmetric(p):
            out.append(p)
    return out


def _block_permutation(p: Partition) -> list[int]:
    # sigma[i] = successor of i in its block, blocks read as ascending cycles.
    sigma = [0] * (p.k + 1)
    for block in p.blocks:
        m = len(block)
        for j, e in enumerate(block):
            sigma[e] = block[(j + 1) % m]
    return sigma


def _walk_permutation(p: Partition) -> list[int]:
    # t = gamma o sigma with gamma = (1 2 ... k), so t[i] = sigma[i] + 1 mod k.
    sigma = _block_permutation(p)
    k = p.k
    return [0] + [sigma[i] % k + 1 for i in range(1, k + 1)]


def _cycle_partition(perm: list[int], k: int) -> Partition:
    seen = [False] * (k + 1)
    blocks = []
    for start in range(1, k + 1):
        if seen[start]:
            continue
        cycle = []
        e = start
        while not seen[e]:
            seen[e] = True
            cycle.append(e)
            e = perm[e]
        blocks.append(tuple(sorted(cycle)))
    return Partition(k, tuple(blocks))


def compose_gamma(p: Partition) -> Partition:
    """Return the cycle partition of gamma o p, blocks read as ascending cycles."""
    return _cycle_partition(_walk_permutation(p), p.k)


def has_ascending_walk_cycles(p: Partition) -> bool:
    """Return True if every cycle of gamma o p visits its elements in
    increasing order from its least element."""
    t = _walk_permutation(p)
    seen = [False] * (p.k + 1)
    for start in range(1, p.k + 1):
        if seen[start]:
            continue
        seen[start] = True
        prev = start
        e = t[start]
        while e != start:
            if e < prev:
                return False
            seen[e] = True
            prev = e
            e = t[e]
    return True


@dataclass(frozen=True)
class PartitionGraph:
    """The multigraph traced by the closed walk 1 -> 2 -> ... -> k -> 1 after
    collapsing vertices by the blocks of compose_gamma."""

    vertices: tuple[tuple[int, ...], ...]
    root: int
    edges: frozenset[tuple[int, int]]
    walk_multiplicity: dict[tuple[int, int], int]
    self_loops: frozenset[int]


def build_partition_graph(p: Partition) -> PartitionGraph:
    """Return the collapsed walk graph of a partition."""
    gp = compose_gamma(p)
    vertex_of = {}
    for vi, block in enumerate(gp.blocks):
        for e in block:
            vertex_of[e] = vi
    mult: dict[tuple[int, int], int] = {}
    k = p.k
    for i in range(1, k + 1):
        u = vertex_of[i]
        v = vertex_of[i % k + 1]
        key = (u, v) if u <= v else (v, u)
        mult[key] = mult.get(key, 0) + 1
    edges = frozenset(key for key in mult if key[0] != key[1])
    loops = frozenset(key[0] for key in mult if key[0] == key[1])
    return PartitionGraph(
        vertices=gp.blocks,
        root=vertex_of[1],
        edges=edges,
        walk_multiplicity=mult,
        self_loops=loops,
    )


def is_tree(g: PartitionGraph) -> bool:
    """Return True if g is connected with no self-loops and |edges| = |V| - 1."""
    n = len(g.vertices)
    if g.self_loops:
        return False
    if len(g.edges) != n - 1:
        return False
    adj: list[list[int]] = [[] for _ in range(n)]
    for u, v in g.edges:
        adj[u].append(v)
        adj[v].append(u)
    seen = [False] * n
    stack = [g.root]
    seen[g.root] = True
    count = 1
    while stack:
        u = stack.pop()
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                stack.append(v)
    return count == n


def is_pair_partition(p: Partition) -> bool:
    """Return True if every block has exactly two elements."""
    return all(len(b) == 2 for b in p.blocks)


def is_noncrossing_pairing(p: Partition) -> bool:
    """Return True if p is a pair partition with no two crossing pairs."""
    if not is_pair_partition(p):
        return False
    for a, b in (blk for blk in p.blocks):
        for c, d in (blk for blk in p.blocks):
            if a < c < b < d:
                return False
    return True


def enumerate_nc2(k: int) -> list[Partition]:
    """Return the non-crossing pair partitions of {1..k}; empty for odd k."""
    _check_k(k)
    if k % 2:
        return []

    def rec(elems: tuple[int, ...]) -> list[tuple[tuple[int, int], ...]]:
        if not elems:
            return [()]
        a = elems[0]
        out = []
        for idx in range(1, len(elems), 2):
            b = elems[idx]
            for left in rec(elems[1:idx]):
                for right in rec(elems[idx + 1 :]):
                    out.append(((a, b),) + left + right)
        return out

    return [Partition.from_blocks(pairs, k=k) for pairs in rec(tuple(range(1, k + 1)))]


def kreweras_complement(p: Partition) -> Partition:
    """Return the Kreweras complement of a pair partition.

    Interlace a barred copy of {1..k} before the plain points on a circle;
    two barred points share a block exactly when no pair of p separates
    them. For a non-crossing pairing the result equals compose_gamma(p).
    """
    if not is_pair_partition(p):
        raise ConfigError("kreweras_complement requires a pair partition")
    k = p.k
    # signature[i] = frozenset of pairs (a,b) with a < i <= b; equal
    # signatures mean no chord separates the barred points.
    signatures: list[frozenset[int]] = []
    for i in range(1, k + 1):
        inside = frozenset(
            bi for bi, (a, b) in enumerate(p.blocks) if a < i <= b
        )
        signatures.append(inside)
    groups: dict[frozenset[int], list[int]] = {}
    for i, sig in enumerate(signatures, start=1):
        groups.setdefault(sig, []).append(i)
    return Partition.from_blocks(groups.values(), k=k)

"""Ordered partitions of labeled subsystems and the coarser-than calculus.

A partition splits a subset of the subsystem universe into ordered blocks.
Within a block the subsystem indices strictly increase, and every index of
an earlier block is smaller than every index of a later block, so permuted
arrangements like AC|B are not representable. Coarsening moves:

  C1  discard a whole block
  C2  merge two adjacent blocks
  C3  drop one subsystem from the last block (which must have >= 2)

Compound coarsenings are compositions of these atomic moves. All values
here are immutable and hashable.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum


class MoveKind(str, Enum):
    C1_DISCARD_BLOCK = "C1"
    C2_MERGE_BLOCKS = "C2"
    C3_TRIM_LAST_BLOCK = "C3"


ALL_MOVES = frozenset(MoveKind)


@dataclass(frozen=True, order=True)
class Partition:
    """Ordered blocks of subsystem indices over a named universe."""

    universe: tuple
    blocks: tuple

    def __post_init__(self):
        universe = tuple(self.universe)
        blocks = tuple(tuple(b) for b in self.blocks)
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "blocks", blocks)
        if len(set(universe)) != len(universe):
            raise ValueError("duplicate names in universe")
        if not blocks:
            raise ValueError("partition needs at least one block")
        seen = set()
        prev_max = -1
        for b in blocks:
            if not b:
                raise ValueError("empty block")
            if list(b) != sorted(b):
                raise ValueError(f"block indices must increase: {b}")
            if b[0] <= prev_max:
                raise ValueError(
                    "blocks must be ordered: every index of an earlier block "
                    "precedes every index of a later block"
                )
            for i in b:
                if not 0 <= i < len(universe):
                    raise ValueError(f"index {i} outside universe of size {len(universe)}")
                if i in seen:
                    raise ValueError(f"repeated index {i}")
                seen.add(i)
            prev_max = b[-1]

    @classmethod
    def parse(cls, text, universe):
        """Parse "A|BC" style text over a universe of single-character names."""
        universe = tuple(universe)
        pos = {name: i for i, name in enumerate(universe)}
        blocks = []
        for chunk in text.split("|"):
            chunk = chunk.strip()
            if not chunk:
                raise ValueError(f"empty block in {text!r}")
            try:
                blocks.append(tuple(pos[c] for c in chunk))
            except KeyError as e:
                raise ValueError(f"unknown subsystem {e.args[0]!r} in {text!r}") from None
        return cls(universe, tuple(blocks))

    @classmethod
    def singletons(cls, universe):
        universe = tuple(universe)
        return cls(universe, tuple((i,) for i in range(len(universe))))

    def __str__(self):
        return "|".join("".join(self.universe[i] for i in b) for b in self.blocks)

    @property
    def indices(self):
        """All covered indices as a frozenset."""
        return frozenset(i for b in self.blocks for i in b)

    @property
    def names(self):
        """Covered subsystem names in index order."""
        return tuple(self.universe[i] for i in sorted(self.indices))

    def block_names(self, k):
        return tuple(self.universe[i] for i in self.blocks[k])

    def n_blocks(self):
        return len(self.blocks)


@dataclass(frozen=True)
class CoarseningMove:
    """One atomic coarsening step.

    payload: block position for C1, left block position for C2 (merging it
    with its right neighbour), subsystem index to drop for C3.
    """

    kind: MoveKind
    payload: int


@dataclass(frozen=True)
class CoarseningChain:
    source: Partition
    target: Partition
    moves: tuple

    def __post_init__(self):
        p = self.source
        for m in self.moves:
            p = apply_move(p, m)
        if p != self.target:
            raise ValueError("moves do not transform source into target")


def apply_move(p, move):
    """Apply one atomic coarsening move, validating it against `p`."""
    blocks = list(p.blocks)
    if move.kind is MoveKind.C1_DISCARD_BLOCK:
        if not 0 <= move.payload < len(blocks):
            raise ValueError(f"no block at position {move.payload}")
        if len(blocks) == 1:
            raise ValueError("cannot discard the only block")
        del blocks[move.payload]
    elif move.kind is MoveKind.C2_MERGE_BLOCKS:
        if not 0 <= move.payload < len(blocks) - 1:
            raise ValueError(f"no adjacent pair at position {move.payload}")
        i = move.payload
        blocks[i : i + 2] = [blocks[i] + blocks[i + 1]]
    elif move.kind is MoveKind.C3_TRIM_LAST_BLOCK:
        last = blocks[-1]
        if len(last) < 2:
            raise ValueError("last block must have at least 2 subsystems to trim")
        if move.payload not in last:
            raise ValueError(f"index {move.payload} not in the last block")
        blocks[-1] = tuple(i for i in last if i != move.payload)
    else:
        raise ValueError(f"unknown move kind {move.kind}")
    return Partition(p.universe, tuple(blocks))


def _atomic_moves(p, allowed):
    if MoveKind.C1_DISCARD_BLOCK in allowed and len(p.blocks) > 1:
        for i in range(len(p.blocks)):
            yield CoarseningMove(MoveKind.C1_DISCARD_BLOCK, i)
    if MoveKind.C2_MERGE_BLOCKS in allowed:
        for i in range(len(p.blocks) - 1):
            yield CoarseningMove(MoveKind.C2_MERGE_BLOCKS, i)
    if MoveKind.C3_TRIM_LAST_BLOCK in allowed and len(p.blocks[-1]) >= 2:
        for idx in p.blocks[-1]:
            yield CoarseningMove(MoveKind.C3_TRIM_LAST_BLOCK, idx)


def _closure(p, allowed):
    """All partitions strictly reachable from p, with parent pointers."""
    parents = {}
    queue = deque([p])
    while queue:
        cur = queue.popleft()
        for m in _atomic_moves(cur, allowed):
            nxt = apply_move(cur, m)
            if nxt != p and nxt not in parents:
                parents[nxt] = (cur, m)
                queue.append(nxt)
    return parents


def is_coarser(p, q, allowed=ALL_MOVES):
    """Witnessing move chain for p > q under the allowed kinds, else None.

    The relation is strict: a partition is not coarser than itself.
    """
    if p.universe != q.universe:
        raise ValueError("partitions must share a universe")
    allowed = frozenset(allowed)
    if q == p:
        return None
    parents = _closure(p, allowed)
    if q not in parents:
        return None
    moves = []
    cur = q
    while cur != p:
        cur, m = parents[cur]
        moves.append(m)
    moves.reverse()
    return CoarseningChain(p, q, tuple(moves))


def coarser_set(p, allowed=ALL_MOVES):
    """All partitions strictly coarser than p with at least two blocks.

    Computed by breadth-first closure over the atomic moves. Single-block
    partitions are traversed but not reported; no discord is defined on
    them.
    """
    return frozenset(g for g in _closure(p, frozenset(allowed)) if len(g.blocks) >= 2)


def xi_set(p, q):
    """The arena of partitions whose correlation a p-to-q saturation forbids.

    Members are strictly coarser than p and carry a label set that neither
    contains all of q's labels nor sits inside them. When q's blocks form a
    leading run of p's blocks, block merges are left out of the closure and
    members are built from whole blocks of p (optionally trimming the last);
    otherwise the full move set applies.
    """
    if is_coarser(p, q, ALL_MOVES) is None:
        raise ValueError(f"{q} is not strictly coarser than {p}")
    moves = ALL_MOVES
    if q.blocks == p.blocks[: len(q.blocks)]:
        moves = frozenset({MoveKind.C1_DISCARD_BLOCK, MoveKind.C3_TRIM_LAST_BLOCK})
    ql = q.indices
    out = set()
    for g in coarser_set(p, moves):
        gl = g.indices
        if not (ql <= gl) and not (gl <= ql):
            out.add(g)
    return frozenset(out)


def sort_key(p):
    """Stable ordering for printing partition collections."""
    return (len(p.indices), len(p.blocks), p.blocks)

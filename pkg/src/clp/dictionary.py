"""Codelet dictionaries.

Two constructions share this module.  The practical dictionary is a
complete binary trie whose leaves are the current codelets; parsing a
phrase replaces the chosen leaf with its two one-symbol extensions.
The idealized dictionary grows in levels: codelets live at depths that
are multiples of a step ell, each level holds at most a computed
number of codelets, and search walks a frontier of partial matches one
level at a time.

Codelet bit strings are kept as plain integers (symbol i = bit i), so
the hot paths never touch BitSequence objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .bits import BitSequence
from .errors import LevelFull, NotALeaf
from .matching import (
    MatchRelation,
    canonical_type_sequence,
    match_probability_exact,
)
from .rd_math import DistortionBudget, SourceModel

__all__ = [
    "PracticalNode",
    "LevelNode",
    "LevelConfig",
    "SearchFrontier",
    "CodebookTree",
    "init_practical",
    "find_matches",
    "extend_codelet",
    "level_size",
    "target_reproduction_type",
    "idealized_build_init",
    "promote_to_next_level",
    "partial_match_search",
    "lex_key",
    "default_step",
]


def lex_key(bits: int, length: int) -> int:
    """Order key matching string comparison of the spelled codelet."""
    out = 0
    for i in range(length):
        out = (out << 1) | ((bits >> i) & 1)
    return out


def default_step(n: int) -> int:
    """Default level step: max(2, ceil(log2 log2 n))."""
    if n < 4:
        return 2
    return max(2, math.ceil(math.log2(math.log2(n))))


def target_reproduction_type(src, dist) -> Fraction:
    """Exact reproduction type used for canonical codelets.

    (p - D)/(1 - 2D) clamped to [0, 1]; at D >= 1/2 the limit is taken,
    which collapses to 0, 1/2 or 1 depending on which side p sits.
    """
    p = src.p if isinstance(src, SourceModel) else SourceModel.of(src).p
    d = dist.d if isinstance(dist, DistortionBudget) else DistortionBudget.of(dist).d
    if d >= Fraction(1, 2):
        if p > Fraction(1, 2):
            return Fraction(1)
        if p < Fraction(1, 2):
            return Fraction(0)
        return Fraction(1, 2)
    q = (p - d) / (1 - 2 * d)
    return min(max(q, Fraction(0)), Fraction(1))


def level_size(L: int, src, dist) -> int:
    """Target codelet count at depth L: ceil(L^2 / p_L), exactly.

    p_L is the prefix-wise match probability of the canonical codelet of
    the rounded optimal reproduction type at length L.  Callers cap the
    result by the number of candidates the construction can actually
    offer at that depth.
    """
    if L <= 0:
        raise ValueError("depth must be positive")
    q = target_reproduction_type(src, dist)
    y = canonical_type_sequence(L, q)
    p_L = match_probability_exact(y, dist, src)
    if p_L == 0:
        raise ValueError("canonical codelet has zero match probability")
    target = Fraction(L * L) / p_L
    return -(-target.numerator // target.denominator)


# -- practical trie --------------------------------------------------


class PracticalNode:
    __slots__ = ("bits", "depth", "children", "max_leaf_depth", "ones")

    def __init__(self, bits: int, depth: int):
        self.bits = bits
        self.depth = depth
        self.children: Optional[List["PracticalNode"]] = None
        self.max_leaf_depth = depth
        self.ones = bits.bit_count()

    @property
    def is_leaf(self) -> bool:
        return self.children is None

    def sequence(self) -> BitSequence:
        return BitSequence(self.bits, self.depth)

    def __repr__(self) -> str:
        kind = "leaf" if self.is_leaf else "node"
        return f"<{kind} {BitSequence(self.bits, self.depth).to01()}>"


# -- idealized level structure ---------------------------------------


class LevelNode:
    __slots__ = ("bits", "level", "live", "ordinal", "live_index", "children")

    def __init__(self, bits: int, level: int):
        self.bits = bits
        self.level = level
        self.live = False
        self.ordinal = -1
        self.live_index = -1
        self.children: Dict[int, "LevelNode"] = {}

    def sequence(self, ell: int) -> BitSequence:
        return BitSequence(self.bits, self.level * ell)

    def __repr__(self) -> str:
        return f"<level {self.level} codelet bits={self.bits:b} live={self.live}>"


@dataclass(frozen=True)
class LevelConfig:
    """Shape of the idealized dictionary.

    horizon_n pins the input length the config was built for (the
    idealized coder knows its horizon up front).  level_sizes, when
    given, overrides the computed per-level target (keyed by level
    number, 1 for depth ell); handy in tests.
    """

    ell: int
    horizon_n: Optional[int] = None
    delta: float = 0.01
    level_sizes: Optional[Dict[int, int]] = None

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("step must be at least 1")
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")
        if self.horizon_n is not None and self.horizon_n < 0:
            raise ValueError("horizon must be nonnegative")
        if self.level_sizes and any(v < 1 for v in self.level_sizes.values()):
            raise ValueError("level sizes must be positive")


@dataclass
class SearchFrontier:
    """Per-level partial matches seen by one search."""

    members: Dict[int, List[LevelNode]] = field(default_factory=dict)
    work: Dict[int, int] = field(default_factory=dict)
    give_up: bool = False

    def size(self, level: int) -> int:
        return len(self.members.get(level, ()))


class CodebookTree:
    """Either dictionary variant behind one handle."""

    def __init__(self, variant: str, dist, cfg: Optional[LevelConfig] = None):
        self.variant = variant
        self.dist = dist if isinstance(dist, DistortionBudget) else DistortionBudget.of(dist)
        self._dn = self.dist.num
        self._dd = self.dist.den
        self._allowed: List[int] = [0]  # allowed[l] = floor(D * l)
        if variant == "practical":
            self.root = PracticalNode(0, 0)
            self.root.children = [PracticalNode(0, 1), PracticalNode(1, 1)]
            self.root.max_leaf_depth = 1
            self.leaf_count = 2
        elif variant == "idealized":
            if cfg is None:
                raise ValueError("idealized dictionary needs a LevelConfig")
            self.cfg = cfg
            self.ell = cfg.ell
            self.levels: List[List[LevelNode]] = [[], []]  # index by level, 0 unused
            self.level1: List[Optional[LevelNode]] = [None] * (1 << cfg.ell)
            self.admitted: List[LevelNode] = []  # every live codelet, admission order
            self.next_ordinal = 0
            self.caps: Dict[int, int] = {}
            self._pop = [d.bit_count() for d in range(1 << cfg.ell)]
            self._cont_tables: Dict[Tuple[int, int], bytes] = {}
            for pattern in range(1 << cfg.ell):
                self.level1[pattern] = LevelNode(pattern, 1)
        else:
            raise ValueError(f"unknown variant {variant!r}")

    # -- shared helpers ------------------------------------------------

    def allowed(self, l: int) -> int:
        table = self._allowed
        while len(table) <= l:
            table.append((self._dn * len(table)) // self._dd)
        return table[l]

    # -- practical side --------------------------------------------------

    def leaves(self) -> List[PracticalNode]:
        out: List[PracticalNode] = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.extend(node.children)
        return out

    def leaf_strings(self) -> set:
        return {n.sequence().to01() for n in self.leaves()}

    def find_matches(self, window: BitSequence, relation: MatchRelation) -> List[PracticalNode]:
        """Leaves matching a prefix of the window, depth at most its length.

        Full-codelet search prunes a subtree once the running mismatch
        count exceeds the budget of its deepest eligible leaf; the
        prefix-wise search prunes on the first violated prefix.
        """
        wlen = window.length
        if wlen == 0:
            return []
        wval = window.value
        out: List[PracticalNode] = []
        prefix_wise = relation == MatchRelation.PREFIX_WISE
        stack = [(self.root, 0)]
        while stack:
            node, m = stack.pop()
            if node.is_leaf:
                if m * self._dd <= self._dn * node.depth:
                    out.append(node)
                continue
            if node.depth >= wlen:
                continue  # leaves below are longer than the window
            bit = (wval >> node.depth) & 1
            for child in node.children:
                m2 = m + (bit ^ ((child.bits >> node.depth) & 1))
                if prefix_wise:
                    if m2 * self._dd > self._dn * child.depth:
                        continue
                elif m2 * self._dd > self._dn * min(child.max_leaf_depth, wlen):
                    continue
                stack.append((child, m2))
        return out

    def extend_codelet(self, leaf: PracticalNode) -> Tuple[PracticalNode, PracticalNode]:
        if not leaf.is_leaf:
            raise NotALeaf(f"{leaf!r} already has children")
        d = leaf.depth
        c0 = PracticalNode(leaf.bits, d + 1)
        c1 = PracticalNode(leaf.bits | (1 << d), d + 1)
        leaf.children = [c0, c1]
        self.leaf_count += 1
        # refresh subtree depth bounds up the path
        node = self.root
        node.max_leaf_depth = max(node.max_leaf_depth, d + 1)
        for i in range(d):
            node = node.children[(leaf.bits >> i) & 1]
            node.max_leaf_depth = max(node.max_leaf_depth, d + 1)
        leaf.max_leaf_depth = d + 1
        return c0, c1

    # -- idealized side ----------------------------------------------

    def cap(self, level: int, src) -> int:
        """Live-set bound for a level; frozen the first time it is needed."""
        got = self.caps.get(level)
        if got is not None:
            return got
        override = self.cfg.level_sizes.get(level) if self.cfg.level_sizes else None
        target = override if override is not None else level_size(level * self.ell, src, self.dist)
        avail = (1 << self.ell) if level == 1 else self.cap(level - 1, src) << self.ell
        value = min(target, avail)
        self.caps[level] = value
        return value

    def max_level(self) -> int:
        return len(self.levels) - 1

    def live_count(self, level: int) -> int:
        if level >= len(self.levels):
            return 0
        return len(self.levels[level])

    def level_full(self, level: int, src) -> bool:
        return self.live_count(level) >= self.cap(level, src)

    def _make_live(self, node: LevelNode) -> LevelNode:
        while len(self.levels) <= node.level:
            self.levels.append([])
        node.live = True
        node.ordinal = self.next_ordinal
        self.next_ordinal += 1
        node.live_index = len(self.levels[node.level])
        self.levels[node.level].append(node)
        self.admitted.append(node)
        return node

    def level1_matches(self, window_bits: int) -> List[int]:
        """Candidate ell-length patterns prefix-wise matching the window."""
        table = self._cont_table(0, 0)
        return [c for c in range(1 << self.ell) if table[c ^ window_bits]]

    def fill_level1(self, window_bits: int, src) -> List[LevelNode]:
        """Admit matching level-1 candidates to the live set, up to cap."""
        cap = self.cap(1, src)
        added = []
        if self.live_count(1) >= cap:
            return added
        matched = self.level1_matches(window_bits)
        matched.sort(key=lambda c: lex_key(c, self.ell))
        for c in matched:
            if self.live_count(1) >= cap:
                break
            node = self.level1[c]
            if not node.live:
                self._make_live(node)
                added.append(node)
        return added

    def promote(self, leaf: LevelNode, extension: int, src) -> Optional[LevelNode]:
        """Admit one extension of a live codelet to the next level.

        Raises LevelFull when the next level is at capacity; returns the
        existing node unchanged when the extension is already live.
        """
        if not leaf.live:
            raise ValueError("only live codelets are promoted")
        nxt = leaf.level + 1
        existing = leaf.children.get(extension)
        if existing is not None:
            return existing
        if self.live_count(nxt) >= self.cap(nxt, src):
            raise LevelFull(f"level {nxt} already holds {self.live_count(nxt)} codelets")
        bits = leaf.bits | (extension << (leaf.level * self.ell))
        node = LevelNode(bits, nxt)
        leaf.children[extension] = node
        return self._make_live(node)

    def _cont_table(self, offset_levels: int, entering_mism: int) -> bytes:
        """Validity of each ell-bit mismatch pattern continuing a match.

        Entry d answers: starting at depth offset_levels * ell with
        entering_mism mismatches, does appending a segment whose XOR
        against the window is d keep every prefix within budget?
        """
        key = (offset_levels, entering_mism)
        table = self._cont_tables.get(key)
        if table is None:
            ell = self.ell
            base = offset_levels * ell
            out = bytearray(1 << ell)
            for d in range(1 << ell):
                m = entering_mism
                ok = True
                for j in range(1, ell + 1):
                    m += (d >> (j - 1)) & 1
                    if m * self._dd > self._dn * (base + j):
                        ok = False
                        break
                out[d] = ok
            table = bytes(out)
            self._cont_tables[key] = table
        return table

    def search(self, window_bits: int, window_len: int) -> Tuple[Optional[LevelNode], SearchFrontier]:
        """Deepest live codelet prefix-wise matching the window.

        Builds the frontier level by level: all level-1 candidates are
        scanned, and deeper levels only examine live extensions of the
        previous frontier.  Sets give_up and stops descending when a
        frontier outgrows (k * ell)^4 / delta.
        """
        ell = self.ell
        frontier = SearchFrontier()
        best: Optional[LevelNode] = None
        if window_len < ell:
            return None, frontier
        pop = self._pop
        seg = window_bits & ((1 << ell) - 1)
        table = self._cont_table(0, 0)
        current: List[Tuple[LevelNode, int]] = []
        z1: List[LevelNode] = []
        for node in self.levels[1] if len(self.levels) > 1 else ():
            d = node.bits ^ seg
            if table[d]:
                current.append((node, pop[d]))
                z1.append(node)
        frontier.members[1] = z1
        frontier.work[1] = 1 << ell
        if z1:
            best = min(z1, key=lambda nd: nd.ordinal)
        level = 1
        while current:
            if len(current) > ((level * ell) ** 4) / self.cfg.delta:
                frontier.give_up = True
                break
            if (level + 1) * ell > window_len:
                break
            base = level * ell
            seg = (window_bits >> base) & ((1 << ell) - 1)
            nxt: List[Tuple[LevelNode, int]] = []
            znext: List[LevelNode] = []
            touched = 0
            for node, m in current:
                if not node.children:
                    continue
                table = self._cont_table(level, m)
                for ext, child in node.children.items():
                    touched += 1
                    d = ext ^ seg
                    if table[d]:
                        nxt.append((child, m + pop[d]))
                        znext.append(child)
            level += 1
            if znext:
                frontier.members[level] = znext
                frontier.work[level] = touched
                best = min(znext, key=lambda nd: nd.ordinal)
            current = nxt
        return best, frontier


# -- module-level operation wrappers ----------------------------------


def init_practical(dist) -> CodebookTree:
    """Practical dictionary at birth: the two single-symbol codelets."""
    return CodebookTree("practical", dist)


def find_matches(tree: CodebookTree, x: BitSequence, dist=None,
                 relation: MatchRelation = MatchRelation.FULL_CODELET) -> List[PracticalNode]:
    return tree.find_matches(x, relation)


def extend_codelet(tree: CodebookTree, leaf: PracticalNode):
    return tree.extend_codelet(leaf)


def idealized_build_init(cfg: LevelConfig, dist) -> CodebookTree:
    """Leveled dictionary at birth: every ell-length pattern is a candidate."""
    return CodebookTree("idealized", dist, cfg)


def promote_to_next_level(tree: CodebookTree, leaf: LevelNode, extension: int, src):
    if tree.level_full(leaf.level + 1, src):
        raise LevelFull(f"level {leaf.level + 1} is at capacity")
    return tree.promote(leaf, extension, src)


def partial_match_search(tree: CodebookTree, x: BitSequence, dist=None):
    """(deepest live match or None, frontier, give_up) for a window."""
    best, frontier = tree.search(x.value, x.length)
    if frontier.give_up:
        return None, frontier, True
    return best, frontier, False

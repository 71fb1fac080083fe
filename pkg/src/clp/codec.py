"""Container format, LZ78 back end, and the two coders.

Layout of a serialized stream (all integers big-endian):

    offset  size  field
    0       4     magic "CLP1"
    4       1     format version (1)
    5       8     n, number of source symbols
    13      4     distortion numerator
    17      4     distortion denominator
    21      4     source-bias numerator
    25      4     source-bias denominator (0xFFFFFFFF means "unknown")
    29      2     level step ell (0 for the practical coder)
    31      1     coder id: 0 practical, 1 idealized
    32      1     match relation: 0 full-codelet, 1 prefix-wise

The payload follows immediately.  For the practical coder it is the
LZ78 encoding of the reconstruction.  For the idealized coder it is a
sequence of per-phrase records drawing on one shared slot space: each
record is a single slot number in [0, m), truncated-binary coded,
where m is one plus the count of codelets admitted so far (so the
very first record occupies zero bits).  Slot 0 is an escape and is
followed by the raw source bits of the phrase (ell of them, or fewer
than ell only for the final short tail); slot i >= 1 names the i-th
codelet ever admitted to the dictionary, from which the decoder
recovers both the phrase bits and its level.  Truncated binary for a
range of m values spends w = floor(log2 m) bits on the first
2^(w+1) - m slot numbers and w + 1 bits on the rest, keeping the code
prefix-free and complete.  Escapes and phrase extensions grow the
dictionary identically on both sides, which keeps the slot ranges in
lockstep.  Bit order inside the payload is most-significant-first per
byte; raw source bits appear in source order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, NamedTuple, Optional, Tuple

from .bits import BitSequence, concat_bits
from .dictionary import (
    CodebookTree,
    LevelConfig,
    LevelNode,
    PracticalNode,
    default_step,
    idealized_build_init,
    init_practical,
    lex_key,
)
from .errors import BadMagic, CorruptStream, EmptyMatchSet, UnsupportedVersion
from .matching import MatchRelation
from .rd_math import DistortionBudget, SourceModel, lower_mutual_info_float

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "VARIANT_PRACTICAL",
    "VARIANT_IDEALIZED",
    "Header",
    "BitWriter",
    "BitReader",
    "ParseEvent",
    "EncodeStats",
    "EncodedStream",
    "lz78_encode",
    "lz78_decode",
    "select_codelet",
    "encode_practical",
    "encode_idealized",
    "decode",
    "coding_rate",
    "PracticalResult",
    "IdealizedResult",
]

MAGIC = b"CLP1"
FORMAT_VERSION = 1
VARIANT_PRACTICAL = 0
VARIANT_IDEALIZED = 1
_P_UNKNOWN = 0xFFFFFFFF
_HEADER = struct.Struct(">4sBQIIIIHBB")
_TIE_TOL = 1e-12


def _u32_pair(fr: Fraction, what: str) -> Tuple[int, int]:
    if fr.denominator > 0xFFFFFFFE or fr.numerator > 0xFFFFFFFF:
        raise ValueError(f"{what} {fr} does not fit the header; use a smaller denominator")
    return fr.numerator, fr.denominator


@dataclass(frozen=True)
class Header:
    """Stream parameters; 33 bytes on the wire."""

    n: int
    d_num: int
    d_den: int
    p_num: int
    p_den: int
    ell: int
    variant: int
    relation: int

    SIZE = _HEADER.size

    @classmethod
    def build(cls, n: int, dist, src=None, ell: int = 0,
              variant: int = VARIANT_PRACTICAL,
              relation: MatchRelation = MatchRelation.FULL_CODELET) -> "Header":
        db = dist if isinstance(dist, DistortionBudget) else DistortionBudget.of(dist)
        dn, dd = _u32_pair(db.d, "distortion")
        if src is None:
            pn, pd = 0, _P_UNKNOWN
        else:
            sm = src if isinstance(src, SourceModel) else SourceModel.of(src)
            pn, pd = _u32_pair(sm.p, "source bias")
        return cls(n=n, d_num=dn, d_den=dd, p_num=pn, p_den=pd,
                   ell=ell, variant=variant, relation=int(relation))

    def __post_init__(self):
        if self.n < 0 or self.n >= 1 << 64:
            raise ValueError("symbol count out of range")
        if self.d_den < 1 or self.d_num > self.d_den:
            raise ValueError("distortion must be a fraction in [0, 1]")
        if self.p_den != _P_UNKNOWN and not (1 <= self.p_den and 0 <= self.p_num <= self.p_den):
            raise ValueError("source bias must be a fraction in [0, 1] or unknown")
        if not 0 <= self.ell <= 0xFFFF:
            raise ValueError("level step out of range")
        if self.variant not in (VARIANT_PRACTICAL, VARIANT_IDEALIZED):
            raise ValueError("unknown coder id")
        if self.relation not in (0, 1):
            raise ValueError("unknown match relation")

    @property
    def dist(self) -> DistortionBudget:
        return DistortionBudget(Fraction(self.d_num, self.d_den))

    @property
    def src(self) -> Optional[SourceModel]:
        if self.p_den == _P_UNKNOWN:
            return None
        return SourceModel(Fraction(self.p_num, self.p_den))

    @property
    def relation_enum(self) -> MatchRelation:
        return MatchRelation(self.relation)

    def pack(self) -> bytes:
        return _HEADER.pack(MAGIC, FORMAT_VERSION, self.n, self.d_num, self.d_den,
                            self.p_num, self.p_den, self.ell, self.variant, self.relation)

    @classmethod
    def unpack(cls, data: bytes) -> "Header":
        if len(data) < _HEADER.size:
            raise CorruptStream("stream shorter than its header")
        magic, version, n, dn, dd, pn, pd, ell, variant, relation = _HEADER.unpack_from(data)
        if magic != MAGIC:
            raise BadMagic(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise UnsupportedVersion(f"format version {version} not supported")
        try:
            return cls(n=n, d_num=dn, d_den=dd, p_num=pn, p_den=pd,
                       ell=ell, variant=variant, relation=relation)
        except ValueError as exc:
            raise CorruptStream(str(exc)) from exc


class BitWriter:
    """Most-significant-bit-first bit sink."""

    def __init__(self):
        self._out = bytearray()
        self._cur = 0
        self._fill = 0
        self.bit_length = 0

    def write(self, value: int, nbits: int) -> None:
        if nbits < 0 or value < 0 or (nbits < value.bit_length()):
            raise ValueError("value does not fit the field")
        self.bit_length += nbits
        cur, fill = self._cur, self._fill
        while nbits > 0:
            take = min(8 - fill, nbits)
            cur = (cur << take) | ((value >> (nbits - take)) & ((1 << take) - 1))
            fill += take
            nbits -= take
            if fill == 8:
                self._out.append(cur)
                cur, fill = 0, 0
        self._cur, self._fill = cur, fill

    def write_bit(self, bit: int) -> None:
        self.write(bit & 1, 1)

    def write_gamma(self, k: int) -> None:
        """Elias-gamma: k >= 1 in 2*bitlen(k) - 1 bits."""
        if k < 1:
            raise ValueError("gamma codes cover positive integers only")
        self.write(k, 2 * k.bit_length() - 1)

    def write_trunc(self, value: int, bound: int) -> None:
        """Truncated binary for value in [0, bound); 0 bits when bound is 1."""
        if not 0 <= value < bound:
            raise ValueError(f"{value} outside [0, {bound})")
        if bound <= 1:
            return
        short = bound.bit_length() - 1
        spare = (1 << (short + 1)) - bound
        if value < spare:
            self.write(value, short)
        else:
            self.write(value + spare, short + 1)

    def getvalue(self) -> bytes:
        out = bytes(self._out)
        if self._fill:
            out += bytes([self._cur << (8 - self._fill)])
        return out


class BitReader:
    """Most-significant-bit-first bit source over a bytes object."""

    def __init__(self, data: bytes):
        self._data = data
        self._nbits = len(data) * 8
        self.pos = 0

    def read(self, nbits: int) -> int:
        end = self.pos + nbits
        if end > self._nbits:
            raise CorruptStream("payload ended mid-record")
        if nbits == 0:
            return 0
        first = self.pos >> 3
        last = (end + 7) >> 3
        chunk = int.from_bytes(self._data[first:last], "big")
        shift = (last << 3) - end
        self.pos = end
        return (chunk >> shift) & ((1 << nbits) - 1)

    def read_bit(self) -> int:
        return self.read(1)

    def read_gamma(self) -> int:
        zeros = 0
        while self.read(1) == 0:
            zeros += 1
            if zeros > 63:
                raise CorruptStream("runaway level code")
        return (1 << zeros) | self.read(zeros)

    def read_trunc(self, bound: int) -> int:
        """Inverse of BitWriter.write_trunc for the same bound."""
        if bound <= 1:
            return 0
        short = bound.bit_length() - 1
        spare = (1 << (short + 1)) - bound
        head = self.read(short) if short else 0
        if head < spare:
            return head
        return ((head << 1) | self.read(1)) - spare


# -- LZ78 ---------------------------------------------------------------


def lz78_encode(y: BitSequence) -> Tuple[bytes, int]:
    """Incremental-parse code for a bit string.

    The t-th record (t counted from 1) holds the index of the longest
    previously seen phrase that prefixes the rest of the input, written
    in ceil(log2 t) bits, followed by the one new bit.  Index 0 is the
    empty phrase.  A leading flag bit says whether the final record is
    partial: a bare index whose phrase exactly finishes the input.
    Returns the payload bytes and its exact bit length.
    """
    n = y.length
    if n == 0:
        return b"", 0
    children: Dict[Tuple[int, int], int] = {}
    records: List[Tuple[int, Optional[int]]] = []
    cur = 0
    next_idx = 1
    val = y.value
    for i in range(n):
        bit = (val >> i) & 1
        got = children.get((cur, bit))
        if got is not None:
            cur = got
            continue
        records.append((cur, bit))
        children[(cur, bit)] = next_idx
        next_idx += 1
        cur = 0
    partial = cur != 0
    if partial:
        records.append((cur, None))
    w = BitWriter()
    w.write_bit(1 if partial else 0)
    for t, (idx, bit) in enumerate(records, start=1):
        width = (t - 1).bit_length()
        if width:
            w.write(idx, width)
        if bit is not None:
            w.write_bit(bit)
    return w.getvalue(), w.bit_length


def lz78_decode(payload: bytes, n: int) -> BitSequence:
    """Inverse of lz78_encode for a known output length."""
    if n == 0:
        return BitSequence(0, 0)
    r = BitReader(payload)
    partial = r.read_bit() == 1
    values = [0]
    lengths = [0]
    parts: List[Tuple[int, int]] = []
    done = 0
    t = 1
    while done < n:
        width = (t - 1).bit_length()
        idx = r.read(width)
        if idx >= t:
            raise CorruptStream(f"record {t} points at unseen phrase {idx}")
        plen = lengths[idx]
        if partial and plen == n - done:
            parts.append((values[idx], plen))
            done = n
            break
        if plen + 1 > n - done:
            raise CorruptStream("phrase overruns the declared length")
        bit = r.read_bit()
        value = values[idx] | (bit << plen)
        values.append(value)
        lengths.append(plen + 1)
        parts.append((value, plen + 1))
        done += plen + 1
        t += 1
    return concat_bits(parts)


# -- shared containers ---------------------------------------------------


@dataclass(frozen=True)
class ParseEvent:
    """One parsed phrase: what was read and what was written out."""

    kind: str                      # "codelet" or "escape"
    pos: int
    length: int
    x_bits: BitSequence
    y_bits: BitSequence
    distortion: int
    level: Optional[int] = None
    index: Optional[int] = None


@dataclass
class EncodeStats:
    phrases: int = 0
    escapes: int = 0
    give_ups: int = 0
    promotions: int = 0
    distortion: int = 0
    max_frontier: Dict[int, int] = field(default_factory=dict)
    tree: Optional[CodebookTree] = None


@dataclass(frozen=True)
class EncodedStream:
    """Header plus payload; payload_bits is the exact pre-padding length."""

    header: Header
    payload: bytes
    payload_bits: int

    def to_bytes(self) -> bytes:
        return self.header.pack() + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncodedStream":
        header = Header.unpack(data)
        payload = bytes(data[Header.SIZE:])
        # exact bit count is not stored; the byte length bounds it
        return cls(header=header, payload=payload, payload_bits=len(payload) * 8)


def coding_rate(stream: EncodedStream) -> float:
    """Payload bits per source symbol; 0 for an empty input."""
    if stream.header.n == 0:
        return 0.0
    return stream.payload_bits / stream.header.n


class PracticalResult(NamedTuple):
    y: BitSequence
    stream: EncodedStream
    events: List[ParseEvent]


class IdealizedResult(NamedTuple):
    y: BitSequence
    stream: EncodedStream
    events: List[ParseEvent]
    stats: EncodeStats


# -- practical coder ------------------------------------------------------


def select_codelet(matches: List[PracticalNode], window: BitSequence,
                   parsed_ones: int, parsed_len: int, dist) -> PracticalNode:
    """Pick the matching codelet whose type best fits what was parsed.

    The score of a candidate is the least mutual information between a
    source of the empirical type of (parsed prefix + this phrase) and a
    reproduction of the candidate's own type, at the distortion budget;
    an infeasible pairing scores infinity.  Scores within 1e-12 tie,
    and ties go to the longer codelet, then the lexicographically
    smaller one.  Feasibility and exact zeros are decided in integer
    arithmetic so formatting noise cannot flip them.
    """
    if not matches:
        raise EmptyMatchSet("no candidates to select from")
    db = dist if isinstance(dist, DistortionBudget) else DistortionBudget.of(dist)
    dn, dd = db.num, db.den
    wval = window.value
    best = None
    best_score = None
    best_key = None
    for m in matches:
        L = m.depth
        ones_q, len_q = m.ones, L
        ones_p = parsed_ones + (wval & ((1 << L) - 1)).bit_count()
        len_p = parsed_len + L
        cross = ones_p * len_q - ones_q * len_p
        if abs(cross) * dd > dn * len_p * len_q:
            score = float("inf")
        elif (ones_p * len_q + ones_q * len_p - 2 * ones_p * ones_q) * dd <= dn * len_p * len_q:
            score = 0.0
        else:
            score = lower_mutual_info_float(ones_q / len_q, ones_p / len_p, dn / dd)
        key = (-L, lex_key(m.bits, L))
        if best is None:
            best, best_score, best_key = m, score, key
            continue
        tie = (score == best_score) or abs(score - best_score) <= _TIE_TOL
        if tie:
            if key < best_key:
                best, best_score, best_key = m, min(score, best_score), key
        elif score < best_score:
            best, best_score, best_key = m, score, key
    return best


def encode_practical(x: BitSequence, dist, relation: MatchRelation = MatchRelation.FULL_CODELET,
                     src=None) -> "PracticalResult":
    """Greedy trie coder: parse, pick by type fit, split the used leaf.

    Escapes happen only when no codelet fits in the remaining suffix,
    which confines them to the tail.  The payload is the lossless LZ78
    code of the reconstruction, so the decoder never needs the trie.
    """
    db = dist if isinstance(dist, DistortionBudget) else DistortionBudget.of(dist)
    n = x.length
    tree = init_practical(db)
    events: List[ParseEvent] = []
    parts: List[Tuple[int, int]] = []
    pos = 0
    parsed_ones = 0
    while pos < n:
        rem = n - pos
        width = min(rem, tree.root.max_leaf_depth)
        window = BitSequence(x.window(pos, width), width)
        matches = tree.find_matches(window, relation)
        if not matches:
            tail = BitSequence(x.window(pos, rem), rem)
            parts.append((tail.value, rem))
            events.append(ParseEvent(kind="escape", pos=pos, length=rem,
                                     x_bits=tail, y_bits=tail, distortion=0))
            pos = n
            break
        chosen = select_codelet(matches, window, parsed_ones, pos, db)
        L = chosen.depth
        xseg = x.window(pos, L)
        d_inc = (xseg ^ chosen.bits).bit_count()
        parts.append((chosen.bits, L))
        events.append(ParseEvent(kind="codelet", pos=pos, length=L,
                                 x_bits=BitSequence(xseg, L),
                                 y_bits=BitSequence(chosen.bits, L),
                                 distortion=d_inc))
        tree.extend_codelet(chosen)
        parsed_ones += xseg.bit_count()
        pos += L
    y = concat_bits(parts)
    payload, nbits = lz78_encode(y)
    header = Header.build(n=n, dist=db, src=src, ell=0,
                          variant=VARIANT_PRACTICAL, relation=relation)
    return PracticalResult(y, EncodedStream(header, payload, nbits), events)


# -- idealized coder ------------------------------------------------------


def _estimate_src(src: Optional[SourceModel], y_ones: int, y_len: int) -> SourceModel:
    if src is not None:
        return src
    if y_len == 0:
        return SourceModel(Fraction(1, 2))
    return SourceModel(Fraction(y_ones, y_len))


def encode_idealized(x: BitSequence, dist, src=None, cfg: Optional[LevelConfig] = None,
                     ) -> "IdealizedResult":
    """Leveled coder with explicit escape records.

    Each phrase is either the deepest live codelet that prefix-wise
    matches the upcoming window (written as its admission slot) or an
    escape (slot 0) carrying ell raw source bits.  The dictionary then
    grows in two decoder-visible ways: an escape admits every level-1
    candidate matching its raw bits, and a phrase's first ell
    reconstruction bits extend the codelet used one phrase earlier to
    the next level.  A final sub-ell tail is escaped verbatim.
    """
    db = dist if isinstance(dist, DistortionBudget) else DistortionBudget.of(dist)
    sm = None if src is None else (src if isinstance(src, SourceModel) else SourceModel.of(src))
    n = x.length
    if cfg is None:
        cfg = LevelConfig(ell=default_step(n), horizon_n=n)
    elif cfg.horizon_n is not None and cfg.horizon_n != n:
        raise ValueError(f"config horizon {cfg.horizon_n} but input has {n} symbols")
    ell = cfg.ell
    tree = idealized_build_init(cfg, db)
    writer = BitWriter()
    events: List[ParseEvent] = []
    stats = EncodeStats(tree=tree)
    parts: List[Tuple[int, int]] = []
    pos = 0
    y_ones = 0
    prev_node: Optional[LevelNode] = None
    while pos < n:
        rem = n - pos
        node_used: Optional[LevelNode] = None
        fill_after = False
        slot_bound = len(tree.admitted) + 1
        if rem < ell:
            seg, seglen = x.window(pos, rem), rem
            writer.write_trunc(0, slot_bound)
            for i in range(seglen):
                writer.write_bit((seg >> i) & 1)
            events.append(ParseEvent(kind="escape", pos=pos, length=seglen,
                                     x_bits=BitSequence(seg, seglen),
                                     y_bits=BitSequence(seg, seglen), distortion=0))
            stats.escapes += 1
        else:
            width = min(rem, max(tree.max_level(), 1) * ell)
            wbits = x.window(pos, width)
            best, frontier = tree.search(wbits, width)
            for lvl, members in frontier.members.items():
                prev_max = stats.max_frontier.get(lvl, 0)
                if len(members) > prev_max:
                    stats.max_frontier[lvl] = len(members)
            if frontier.give_up:
                stats.give_ups += 1
                best = None
            if best is None:
                seg, seglen = x.window(pos, ell), ell
                writer.write_trunc(0, slot_bound)
                for i in range(ell):
                    writer.write_bit((seg >> i) & 1)
                events.append(ParseEvent(kind="escape", pos=pos, length=ell,
                                         x_bits=BitSequence(seg, ell),
                                         y_bits=BitSequence(seg, ell), distortion=0))
                stats.escapes += 1
                fill_after = True
            else:
                k = best.level
                seglen = k * ell
                seg = best.bits
                writer.write_trunc(best.ordinal + 1, slot_bound)
                xseg = x.window(pos, seglen)
                d_inc = (xseg ^ seg).bit_count()
                stats.distortion += d_inc
                events.append(ParseEvent(kind="codelet", pos=pos, length=seglen,
                                         x_bits=BitSequence(xseg, seglen),
                                         y_bits=BitSequence(seg, seglen),
                                         distortion=d_inc, level=k, index=best.ordinal))
                node_used = best
        parts.append((seg, seglen))
        y_ones += seg.bit_count()
        y_len = pos + seglen
        if prev_node is not None and seglen >= ell:
            ext = seg & ((1 << ell) - 1)
            now = _estimate_src(sm, y_ones, y_len)
            if prev_node.children.get(ext) is None and not tree.level_full(prev_node.level + 1, now):
                tree.promote(prev_node, ext, now)
                stats.promotions += 1
        if fill_after:
            tree.fill_level1(seg, _estimate_src(sm, y_ones, y_len))
        prev_node = node_used
        pos += seglen
        stats.phrases += 1
    y = concat_bits(parts)
    header = Header.build(n=n, dist=db, src=sm, ell=ell,
                          variant=VARIANT_IDEALIZED, relation=MatchRelation.PREFIX_WISE)
    stream = EncodedStream(header, writer.getvalue(), writer.bit_length)
    return IdealizedResult(y, stream, events, stats)


def _decode_idealized(header: Header, payload: bytes,
                      cfg: Optional[LevelConfig]) -> BitSequence:
    if cfg is None:
        cfg = LevelConfig(ell=header.ell)
    elif cfg.ell != header.ell:
        raise CorruptStream("level step disagrees with the header")
    ell = cfg.ell
    if ell < 1:
        raise CorruptStream("idealized stream with zero level step")
    db = header.dist
    sm = header.src
    n = header.n
    tree = idealized_build_init(cfg, db)
    reader = BitReader(payload)
    parts: List[Tuple[int, int]] = []
    pos = 0
    y_ones = 0
    prev_node: Optional[LevelNode] = None
    while pos < n:
        rem = n - pos
        node_used: Optional[LevelNode] = None
        fill_after = False
        slot = reader.read_trunc(len(tree.admitted) + 1)
        if slot == 0:
            seglen = rem if rem < ell else ell
            seg = 0
            for i in range(seglen):
                seg |= reader.read_bit() << i
            fill_after = seglen == ell
        else:
            if slot > len(tree.admitted):
                raise CorruptStream(f"slot {slot} has not been admitted yet")
            node_used = tree.admitted[slot - 1]
            seg = node_used.bits
            seglen = node_used.level * ell
            if seglen > rem:
                raise CorruptStream("codelet overruns the declared length")
        parts.append((seg, seglen))
        y_ones += seg.bit_count()
        y_len = pos + seglen
        if prev_node is not None and seglen >= ell:
            ext = seg & ((1 << ell) - 1)
            now = _estimate_src(sm, y_ones, y_len)
            if prev_node.children.get(ext) is None and not tree.level_full(prev_node.level + 1, now):
                tree.promote(prev_node, ext, now)
        if fill_after:
            tree.fill_level1(seg, _estimate_src(sm, y_ones, y_len))
        prev_node = node_used
        pos += seglen
    return concat_bits(parts)


def decode(stream, cfg: Optional[LevelConfig] = None) -> BitSequence:
    """Reconstruction from a stream object or raw bytes.

    Yields exactly the y the encoder produced.  cfg is only needed when
    the encoder ran with a non-default LevelConfig (its caps are not in
    the header).
    """
    if isinstance(stream, (bytes, bytearray, memoryview)):
        stream = EncodedStream.from_bytes(bytes(stream))
    header = stream.header
    if header.variant == VARIANT_PRACTICAL:
        return lz78_decode(stream.payload, header.n)
    return _decode_idealized(header, stream.payload, cfg)

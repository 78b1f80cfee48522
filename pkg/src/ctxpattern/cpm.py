"""Contextual pattern mining: the six-phase sort/scan pipeline, in memory.

Phase 1 builds SA/LCP of T and of its reverse.  Phases 2-3 cut the SA of T
into intervals sharing a length-m prefix and subintervals sharing a
length-(m+r) prefix.  Phase 4 cuts the SA of the reverse into intervals
sharing a length-l prefix (the left flank, read backwards).  Phase 5 joins
both sides on the text position, and phase 6 counts, per interval, the
distinct (subinterval, reverse interval) pairs.

Positions and ranks in the tuple arrays are 1-based.  The reverse text is
the reversed payload with its own terminator, so the left flank of the
window at position p is read from the reverse suffix starting at
q = n + 1 - p.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .suffix import SuffixIndex
from .text import DOLLAR, HASH, LETTER_OFFSET, Text, reverse_text


class ParameterError(ValueError):
    pass


class AlignmentError(RuntimeError):
    pass


@dataclass(frozen=True)
class MinedPattern:
    pattern: tuple  # letter codes, length m
    contexts: tuple  # sorted distinct (L, R) pairs of code tuples

    @property
    def context_size(self) -> int:
        return len(self.contexts)


def validate_params(n: int, tau: int, m: int, l: int, r: int):
    if tau < 1 or m < 1:
        raise ParameterError("tau and m must be positive")
    if l < 0 or r < 0:
        raise ParameterError("l and r must be non-negative")
    if m + r > n:
        raise ParameterError(f"m + r = {m + r} exceeds n = {n}")
    if l >= n:
        raise ParameterError(f"l = {l} must be smaller than n = {n}")


def partition_intervals(lcp, depth: int) -> np.ndarray:
    """Dense 1-based ids over SA ranks; a new id starts wherever lcp < depth."""
    lcp = np.asarray(lcp)
    if len(lcp) == 0:
        return np.zeros(0, dtype=np.int64)
    cut = lcp < depth
    cut[0] = True
    return np.cumsum(cut).astype(np.int64)


@dataclass
class Phase1:
    forward: SuffixIndex
    reverse: SuffixIndex

    @classmethod
    def build(cls, t: Text) -> "Phase1":
        return cls(SuffixIndex(t.codes), SuffixIndex(reverse_text(t).codes))


def phase2_to_4(t: Text, m: int, l: int, r: int, phase1: Phase1 | None = None):
    """Return (tuple4, tuple2) as int64 arrays.

    tuple4 rows are (SA[i], i, int_id(i), sint_id(i)) in rank order; tuple2
    rows are (n + 1 - SA^R[j], rint_id(j)) in reverse-rank order.
    """
    n = t.n
    if m + r > n:
        raise ParameterError(f"m + r = {m + r} exceeds n = {n}")
    if l >= n:
        raise ParameterError(f"l = {l} must be smaller than n = {n}")
    phase1 = phase1 or Phase1.build(t)
    fwd, rev = phase1.forward, phase1.reverse
    ranks = np.arange(1, n + 1, dtype=np.int64)
    t4 = np.column_stack([fwd.sa + 1, ranks,
                          partition_intervals(fwd.lcp, m),
                          partition_intervals(fwd.lcp, m + r)])
    t2 = np.column_stack([n - rev.sa, partition_intervals(rev.lcp, l)])
    return t4, t2


def phase5_merge(t4: np.ndarray, t2: np.ndarray, n: int, m: int) -> np.ndarray:
    """Join sorted tuple4 and tuple2 streams on text position.

    Rows are (SA[i], i, int_id, sint_id, rint_id) for every position whose
    length-m window lies inside the payload.
    """
    if len(t4) != len(t2) or not np.array_equal(t4[:, 0], t2[:, 0]):
        raise AlignmentError("forward and reverse tuple streams do not cover the same positions")
    keep = t4[:, 0] <= n - m
    return np.column_stack([t4[keep], t2[keep, 1]])


def _flanks(codes, p: int, m: int, l: int, r: int):
    """(L, R) code tuples for the 0-based window start p."""
    n = len(codes)
    return tuple(codes[max(0, p - l):p]), tuple(codes[p + m:min(n, p + m + r)])


def phase6_count_emit(t5: np.ndarray, tau: int, t: Text, m: int, l: int, r: int) -> list:
    if len(t5) == 0:
        return []
    t5 = t5[np.argsort(t5[:, 1], kind="stable")]  # SA order
    order = np.lexsort((t5[:, 4], t5[:, 3], t5[:, 2]))  # stable within (int, sint) clusters
    s = t5[order]
    first = np.ones(len(s), dtype=bool)
    first[1:] = (s[1:, 2] != s[:-1, 2]) | (s[1:, 3] != s[:-1, 3]) | (s[1:, 4] != s[:-1, 4])
    distinct = s[first]
    ids = distinct[:, 2]
    starts = np.flatnonzero(np.concatenate(([True], ids[1:] != ids[:-1])))
    stops = np.append(starts[1:], len(ids))
    codes = t.codes.tolist()
    out = []
    for a, b in zip(starts.tolist(), stops.tolist()):
        c = b - a
        if c < tau:
            continue
        positions = (distinct[a:b, 0] - 1).tolist()
        p0 = positions[0]
        ctx = sorted(_flanks(codes, p, m, l, r) for p in positions)
        out.append(MinedPattern(tuple(codes[p0:p0 + m]), tuple(ctx)))
    return out


def mine_im(t: Text, tau: int, m: int, l: int, r: int) -> list:
    """All length-m patterns with at least tau distinct contexts, in SA order."""
    validate_params(t.n, tau, m, l, r)
    phase1 = Phase1.build(t)
    t4, t2 = phase2_to_4(t, m, l, r, phase1)
    t4 = t4[np.argsort(t4[:, 0], kind="stable")]
    t2 = t2[np.argsort(t2[:, 0], kind="stable")]
    t5 = phase5_merge(t4, t2, t.n, m)
    return phase6_count_emit(t5, tau, t, m, l, r)


# -- output ---------------------------------------------------------------

EMPTY = "-"
_ESCAPES = {ord("\\"): "\\\\", ord("\t"): "\\t", ord("\n"): "\\n", ord("\r"): "\\r"}


def render_field(codes) -> str:
    if not codes:
        return EMPTY
    out = bytearray()
    for c in codes:
        if c == DOLLAR:
            out += b"$"
        elif c == HASH:
            out += b"#"
        else:
            out.append(c - LETTER_OFFSET)
    return out.decode("utf-8", errors="backslashreplace").translate(_ESCAPES)


def format_record(pattern, contexts) -> str:
    lines = [f"{render_field(pattern)}\t{len(contexts)}\n"]
    lines.extend(f"\t{render_field(L)}\t{render_field(R)}\n" for L, R in contexts)
    return "".join(lines)


def write_patterns(patterns, fh):
    for mp in patterns:
        fh.write(format_record(mp.pattern, mp.contexts))


def format_patterns(patterns) -> str:
    return "".join(format_record(mp.pattern, mp.contexts) for mp in patterns)

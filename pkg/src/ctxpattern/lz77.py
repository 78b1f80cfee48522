"""Greedy LZ77 factorisation and the bounded-window modified string T'."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .suffix import SuffixIndex
from .text import DOLLAR, HASH, Text


@dataclass(frozen=True)
class Lz77Factorization:
    starts: tuple  # 1-based phrase starts, strictly increasing
    sources: tuple  # 1-based start of an earlier occurrence, 0 for a literal
    n: int

    @property
    def z(self) -> int:
        return len(self.starts)

    def phrases(self):
        """(start, end) pairs, 1-based inclusive."""
        ends = list(self.starts[1:]) + [self.n + 1]
        return [(s, e - 1) for s, e in zip(self.starts, ends)]


def factorize(t, terminator: bool = True) -> Lz77Factorization:
    """Leftmost-greedy LZ77 phrases (self-referential copies allowed).

    The longest earlier occurrence of each suffix is found from the nearest
    smaller SA positions on either side of its rank (PSV/NSV).  With
    ``terminator=False`` only the payload of a Text is factorised.
    """
    if isinstance(t, Text):
        codes = t.codes if terminator else t.payload
    else:
        codes = np.asarray(t)
    n = len(codes)
    if n == 0:
        return Lz77Factorization((), (), 0)
    idx = SuffixIndex(codes)
    sa = idx.sa.tolist()
    psv = [-1] * n
    nsv = [-1] * n
    stack = []
    for r in range(n):
        while stack and sa[stack[-1]] > sa[r]:
            nsv[stack.pop()] = r
        psv[r] = stack[-1] if stack else -1
        stack.append(r)
    rank = idx.rank
    starts, sources = [], []
    p = 0
    while p < n:
        r = int(rank[p])
        best, src = 0, -1
        for q in (psv[r], nsv[r]):
            if q < 0:
                continue
            a, b = (q, r) if q < r else (r, q)
            h = idx.rmq.query(a + 1, b)
            if h > best:
                best, src = h, sa[q]
        starts.append(p + 1)
        if best == 0:
            sources.append(0)
            p += 1
        else:
            sources.append(src + 1)
            p += best
    return Lz77Factorization(tuple(starts), tuple(sources), n)


@dataclass(frozen=True, eq=False)
class ModifiedString:
    """T' for a bound B: letters of T within distance < B of a phrase start,
    with one ``#`` for every maximal run of dropped positions."""

    codes: np.ndarray
    source_map: np.ndarray  # 1-based T position per T' position, 0 for '#'
    bound: int

    def __len__(self):
        return len(self.codes)

    def as_text(self, like: Text | None = None) -> Text:
        """T' as a terminated Text (a fresh ``$`` is added after a final ``#``)."""
        codes = self.codes
        if len(codes) == 0 or codes[-1] != DOLLAR:
            codes = np.append(codes, DOLLAR)
        if like is None:
            return Text(codes)
        return Text(codes, like.dollar_byte, like.hash_byte, like.alphabet)


def distance_to_starts(n: int, starts) -> np.ndarray:
    """min_j |s_j - i| for i = 1..n."""
    s = np.asarray(sorted(starts), dtype=np.int64)
    pos = np.arange(1, n + 1, dtype=np.int64)
    k = np.searchsorted(s, pos, side="right")
    left = np.where(k > 0, pos - s[np.maximum(k - 1, 0)], np.iinfo(np.int64).max)
    right = np.where(k < len(s), s[np.minimum(k, len(s) - 1)] - pos, np.iinfo(np.int64).max)
    return np.minimum(left, right)


def build_modified_string(t, starts, bound: int) -> ModifiedString:
    if bound < 1:
        raise ValueError("bound B must be >= 1")
    if isinstance(starts, Lz77Factorization):
        starts = starts.starts
    codes = t.codes if isinstance(t, Text) else np.asarray(t)
    n = len(codes)
    keep = distance_to_starts(n, starts) < bound
    out, src = [], []
    prev_kept = True
    for i in range(n):
        if keep[i]:
            out.append(int(codes[i]))
            src.append(i + 1)
            prev_kept = True
        elif prev_kept:
            out.append(HASH)
            src.append(0)
            prev_kept = False
    return ModifiedString(np.array(out, dtype=np.int32), np.array(src, dtype=np.int64), bound)

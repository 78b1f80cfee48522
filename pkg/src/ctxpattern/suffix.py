"""Suffix array, inverse suffix array, LCP array, LCE queries and compact
tries built from sorted strings (suffix trees and prefix trees).

``build_sa``/``build_isa``/``lce`` use 1-based positions and ranks.  The
lower-level helpers (``suffix_array``, ``SuffixIndex``, ``Trie``) are
0-based and are what the rest of the package uses internally.
"""

from __future__ import annotations

import math

import numpy as np

from .text import Text

INF = math.inf


def suffix_array(codes) -> np.ndarray:
    """0-based suffix array of a terminated code sequence, by prefix doubling.

    Ranks are refined with ``(rank[i], rank[i + k])`` keys until all are
    distinct; every round is a stable numpy sort.
    """
    codes = np.asarray(codes, dtype=np.int64)
    n = len(codes)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    _, rank = np.unique(codes, return_inverse=True)
    rank = rank.astype(np.int64).ravel()
    sa = np.argsort(rank, kind="stable")
    k = 1
    while True:
        sorted_rank = rank[sa]
        if n == 1 or sorted_rank[-1] == n - 1:
            break
        second = np.full(n, -1, dtype=np.int64)
        if k < n:
            second[: n - k] = rank[k:]
        key = rank * (n + 1) + (second + 1)
        sa = np.argsort(key, kind="stable")
        sk = key[sa]
        new = np.empty(n, dtype=np.int64)
        new[sa] = np.concatenate(([0], np.cumsum(sk[1:] != sk[:-1])))
        rank = new
        k *= 2
    return sa.astype(np.int64)


def inverse(sa0: np.ndarray) -> np.ndarray:
    rank = np.empty_like(sa0)
    rank[sa0] = np.arange(len(sa0), dtype=sa0.dtype)
    return rank


def kasai(codes, sa0, rank0=None) -> np.ndarray:
    """LCP array in rank order; ``lcp[0] = 0``."""
    n = len(sa0)
    if rank0 is None:
        rank0 = inverse(sa0)
    s = [int(c) for c in codes]
    sa = sa0.tolist()
    rk = rank0.tolist()
    lcp = [0] * n
    h = 0
    for i in range(n):
        r = rk[i]
        if r == 0:
            h = 0
            continue
        j = sa[r - 1]
        while i + h < n and j + h < n and s[i + h] == s[j + h]:
            h += 1
        lcp[r] = h
        if h:
            h -= 1
    return np.array(lcp, dtype=np.int64)


def build_sa(t: Text) -> np.ndarray:
    """SA[1..n] with 1-based positions."""
    return suffix_array(t.codes) + 1


def build_isa(sa: np.ndarray) -> np.ndarray:
    """ISA[1..n] with 1-based ranks, from a 1-based SA."""
    sa = np.asarray(sa, dtype=np.int64)
    return inverse(sa - 1) + 1


def build_lcp(t: Text, sa: np.ndarray) -> np.ndarray:
    return kasai(t.codes, np.asarray(sa, dtype=np.int64) - 1)


class SparseMin:
    """Range-minimum over a static integer array (sparse table)."""

    def __init__(self, values):
        a = np.asarray(values, dtype=np.int64)
        self.table = [a]
        j = 1
        while 2 * j <= len(a):
            prev = self.table[-1]
            self.table.append(np.minimum(prev[:-j], prev[j:]))
            j *= 2

    def query(self, lo: int, hi: int) -> int:
        """min(values[lo..hi]) inclusive, lo <= hi."""
        k = (hi - lo + 1).bit_length() - 1
        t = self.table[k]
        a = t[lo]
        b = t[hi - (1 << k) + 1]
        return int(a if a < b else b)

    def query_many(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        lo = np.asarray(lo, dtype=np.int64)
        hi = np.asarray(hi, dtype=np.int64)
        out = np.empty(len(lo), dtype=np.int64)
        if len(lo) == 0:
            return out
        k = np.floor(np.log2(hi - lo + 1)).astype(np.int64)
        for level in np.unique(k):
            sel = k == level
            t = self.table[level]
            out[sel] = np.minimum(t[lo[sel]], t[hi[sel] - (1 << int(level)) + 1])
        return out


class SuffixIndex:
    """SA, rank, LCP and constant-time LCE for one code sequence (0-based)."""

    def __init__(self, codes):
        self.codes = np.asarray(codes, dtype=np.int64)
        self.n = len(self.codes)
        self.sa = suffix_array(self.codes)
        self.rank = inverse(self.sa)
        self.lcp = kasai(self.codes, self.sa, self.rank)
        self._rmq = None

    @property
    def rmq(self) -> SparseMin:
        if self._rmq is None:
            self._rmq = SparseMin(self.lcp)
        return self._rmq

    def lce(self, i: int, j: int) -> int:
        """Longest common prefix of the suffixes at 0-based positions i, j."""
        if i == j:
            return self.n - i
        a, b = int(self.rank[i]), int(self.rank[j])
        if a > b:
            a, b = b, a
        return self.rmq.query(a + 1, b)

    def lcp_of_ranks(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Vectorised LCP between suffixes of ranks a < b."""
        return self.rmq.query_many(np.asarray(a) + 1, np.asarray(b))


def lce(t: Text, i: int, j: int, index: SuffixIndex | None = None) -> int:
    """LCE(i, j) with 1-based positions."""
    index = index or SuffixIndex(t.codes)
    return index.lce(i - 1, j - 1)


class Trie:
    """Compact trie over strings given in sorted order.

    Each string is described by its length and whether it is *terminal*
    (ends with a unique terminator, hence always a leaf of infinite string
    depth).  Non-terminal strings may be prefixes of, or equal to, other
    strings; they end at a node of finite depth, which is created on demand.
    This one builder serves full suffix trees, suffix trees truncated before
    the first ``#`` and (truncated) prefix trees.

    Node 0 is the root.  ``lo[v]..hi[v]`` is the range of string indices in
    the subtree of v, ``end[k]`` the node where string k ends.
    """

    def __init__(self, lengths, lcps, terminal):
        lengths = list(lengths)
        lcps = list(lcps)
        terminal = list(terminal)
        parent = [-1]
        depth = [0]
        term = [False]
        children = [[]]
        end = [0] * len(lengths)
        stack = [0]
        for k, length in enumerate(lengths):
            h = lcps[k] if k else 0
            last = -1
            while depth[stack[-1]] > h:
                last = stack.pop()
            top = stack[-1]
            if depth[top] < h:
                w = len(depth)
                parent.append(top)
                depth.append(h)
                term.append(False)
                children.append([last])
                children[top][-1] = w
                parent[last] = w
                stack.append(w)
                top = w
            if depth[top] == length and not terminal[k]:
                end[k] = top
            else:
                v = len(depth)
                parent.append(top)
                depth.append(length)
                term.append(bool(terminal[k]))
                children.append([])
                children[top].append(v)
                stack.append(v)
                end[k] = v
        self.parent = parent
        self.depth = depth
        self.terminal = term
        self.children = children
        self.end = end
        self._finish()

    def _finish(self):
        size = len(self.depth)
        order = []
        stack = [0]
        children = self.children
        while stack:
            v = stack.pop()
            order.append(v)
            stack.extend(reversed(children[v]))
        self.order = order  # preorder sequence of node ids
        pre = [0] * size
        for r, v in enumerate(order):
            pre[v] = r + 1
        self.pre = pre  # 1-based preorder rank
        lo = [len(self.end)] * size
        hi = [-1] * size
        for k, e in enumerate(self.end):
            if k < lo[e]:
                lo[e] = k
            if k > hi[e]:
                hi[e] = k
        last_pre = pre[:]
        parent = self.parent
        for v in reversed(order):
            p = parent[v]
            if p >= 0:
                if lo[v] < lo[p]:
                    lo[p] = lo[v]
                if hi[v] > hi[p]:
                    hi[p] = hi[v]
                if last_pre[v] > last_pre[p]:
                    last_pre[p] = last_pre[v]
        self.lo = lo
        self.hi = hi
        self.last_pre = last_pre

    def __len__(self):
        return len(self.depth)

    def sd(self, v: int):
        return INF if self.terminal[v] else self.depth[v]

    def parent_sd(self, v: int) -> int:
        """String depth of the parent; -1 for the root."""
        p = self.parent[v]
        return -1 if p < 0 else self.depth[p]

    def is_leaf(self, v: int) -> bool:
        return not self.children[v]

    def width(self, v: int) -> int:
        return self.hi[v] - self.lo[v] + 1

    def rleaf(self, v: int) -> int:
        while self.children[v]:
            v = self.children[v][-1]
        return v


class SuffixTree(Trie):
    """Suffix tree of a code sequence, optionally truncated.

    ``caps[p]`` (0-based suffix start p) limits the suffix to its first
    ``caps[p]`` letters; the truncated suffix is then a non-terminal string.
    A cap of -1 means no truncation.  With no caps this is the ordinary
    suffix tree whose i-th leaf (left to right) is the suffix of rank i.
    """

    def __init__(self, index: SuffixIndex, caps=None):
        self.index = index
        n = index.n
        sa = index.sa.tolist()
        lcp = index.lcp.tolist()
        lengths = [n - p for p in sa]
        terminal = [True] * n
        if caps is not None:
            caps = list(caps)
            lcps = lcp[:]
            for k, p in enumerate(sa):
                c = caps[p]
                if c >= 0:
                    lengths[k] = c
                    terminal[k] = False
            for k in range(1, n):
                h = lcps[k]
                a, b = lengths[k - 1], lengths[k]
                lcps[k] = min(h, a, b)
            lcp = lcps
        super().__init__(lengths, lcp, terminal)
        self.codes = index.codes.tolist()
        self.sa = sa
        self._child_maps = None

    @property
    def child_maps(self):
        if self._child_maps is None:
            maps = []
            codes, sa, depth, lo = self.codes, self.sa, self.depth, self.lo
            for v, kids in enumerate(self.children):
                d = depth[v]
                maps.append({codes[sa[lo[c]] + d]: c for c in kids})
            self._child_maps = maps
        return self._child_maps

    def label_start(self, v: int) -> int:
        """0-based text position where str(v) occurs."""
        return self.sa[self.lo[v]]

    def locus(self, pattern) -> int | None:
        """Shallowest node whose string has ``pattern`` as a prefix, or None."""
        p = list(pattern)
        m = len(p)
        v = 0
        d = 0
        codes, depth, maps = self.codes, self.depth, self.child_maps
        while d < m:
            c = maps[v].get(p[d])
            if c is None:
                return None
            pos = self.sa[self.lo[c]]
            stop = min(depth[c], m)
            if codes[pos + d: pos + stop] != p[d:stop]:
                return None
            v = c
            d = depth[c]
        return v


def build_suffix_tree(t: Text, index: SuffixIndex | None = None) -> SuffixTree:
    return SuffixTree(index or SuffixIndex(t.codes))


def rleaf(st: Trie, v: int) -> int:
    return st.rleaf(v)


def locus(st: SuffixTree, pattern) -> int | None:
    from .text import to_codes

    return st.locus(to_codes(pattern))

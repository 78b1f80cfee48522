"""Contextual pattern counting indexes.

``build_index`` is the heavy-path index: prefix trees are only built for
light suffix-tree nodes, and the occurrences that stay on a heavy path are
recovered through phi values.  ``build_optimized_index`` builds the same
structure over the LZ77-bounded string T', with suffix and prefix trees
truncated just before the first ``#``.  ``build_simple_index`` is the
quadratic-space reference that creates a point for every (node, prefix tree
node) pair.

Prefix trees are built from the reverse of the indexed string: the
reversed prefix ending just before suffix position p is the reverse suffix
starting at n - 1 - p (0-based), which ends with the terminator exactly
when the prefix reaches the start of the text.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .lz77 import build_modified_string, factorize
from .rangecount import RangeCounter
from .suffix import SuffixIndex, SuffixTree, Trie
from .text import DOLLAR, HASH, Text, to_codes

SIMPLE_MAX_N = 4096


class BoundExceededError(ValueError):
    pass


class IndexSizeError(ValueError):
    pass


class IndexFormatError(ValueError):
    pass


def hash_caps(codes: np.ndarray) -> np.ndarray:
    """Distance from each position to the next ``#`` (0 on a ``#``), -1 if none."""
    n = len(codes)
    caps = np.full(n, -1, dtype=np.int64)
    nxt = -1
    for i in range(n - 1, -1, -1):
        if codes[i] == HASH:
            nxt = i
        if nxt >= 0:
            caps[i] = nxt - i
    return caps


def reversed_prefixes(codes: np.ndarray) -> np.ndarray:
    """The reverse of codes[:-1] followed by the terminator."""
    out = np.empty(len(codes), dtype=np.int64)
    out[:-1] = codes[-2::-1]
    out[-1] = DOLLAR
    return out


@dataclass
class HeavyPathDecomposition:
    heavy: list  # heavy child per node, -1 for leaves
    light: list  # light flag per node
    head: list  # light node at the top of each node's heavy path
    path_leaf: dict  # light node -> leaf ending its heavy path

    def light_nodes(self):
        return [v for v, f in enumerate(self.light) if f]

    def max_light_on_path(self, tree: Trie) -> int:
        best = 0
        count = [0] * len(tree)
        for v in tree.order:
            p = tree.parent[v]
            count[v] = (count[p] if p >= 0 else 0) + (1 if self.light[v] else 0)
            if not tree.children[v] and count[v] > best:
                best = count[v]
        return best


def decompose(tree: Trie, prefer_last: bool = True) -> HeavyPathDecomposition:
    """Heavy-path decomposition by subtree width (number of strings below).

    Ties go to the lexicographically largest child when ``prefer_last``,
    otherwise to the smallest.
    """
    size = len(tree)
    heavy = [-1] * size
    light = [False] * size
    head = [0] * size
    light[0] = True
    lo, hi = tree.lo, tree.hi
    for v in range(size):
        kids = tree.children[v]
        if not kids:
            continue
        best, bw = -1, -1
        for c in kids:
            w = hi[c] - lo[c]
            if w > bw or (prefer_last and w == bw):
                best, bw = c, w
        heavy[v] = best
        for c in kids:
            if c != best:
                light[c] = True
    path_leaf = {}
    for v in tree.order:
        head[v] = v if light[v] else head[tree.parent[v]]
        if light[v]:
            x = v
            while heavy[x] >= 0:
                x = heavy[x]
            path_leaf[v] = x
    return HeavyPathDecomposition(heavy, light, head, path_leaf)


@dataclass
class PrefixTree:
    trie: Trie
    positions: list  # suffix start (0-based) behind each string, in trie order
    phi: list | None = None

    def __len__(self):
        return len(self.trie)


class _Structures:
    """Suffix structures of the indexed string and of its reversed prefixes."""

    def __init__(self, codes):
        self.codes = np.asarray(codes, dtype=np.int64)
        self.n = len(self.codes)
        self.fwd = SuffixIndex(self.codes)
        self.has_hash = bool((self.codes == HASH).any())
        self.caps = hash_caps(self.codes) if self.has_hash else None
        self.tree = SuffixTree(self.fwd, caps=self.caps)
        self._rev = None
        self._rcaps = None

    @property
    def rev(self) -> SuffixIndex:
        if self._rev is None:
            self._rev = SuffixIndex(reversed_prefixes(self.codes))
            if self.has_hash:
                self._rcaps = hash_caps(self._rev.codes)
        return self._rev

    @property
    def rcaps(self):
        self.rev
        return self._rcaps

    def prefix_tree(self, lo: int, hi: int) -> PrefixTree:
        """Compact trie of the reversed prefixes of the suffixes of ranks lo..hi,
        each cut before its first ``#``."""
        n = self.n
        pos = self.fwd.sa[lo:hi + 1]
        q = n - 1 - pos
        rr = self.rev.rank[q]
        order = np.argsort(rr, kind="stable")
        q = q[order]
        rr = rr[order]
        lengths = n - q
        terminal = np.ones(len(q), dtype=bool)
        lcps = np.zeros(len(q), dtype=np.int64)
        if len(q) > 1:
            lcps[1:] = self.rev.lcp_of_ranks(rr[:-1], rr[1:])
        if self.rcaps is not None:
            c = self.rcaps[q]
            cut = c >= 0
            lengths = np.where(cut, c, lengths)
            terminal = ~cut
            if len(q) > 1:
                lcps[1:] = np.minimum(lcps[1:], np.minimum(lengths[:-1], lengths[1:]))
        trie = Trie(lengths.tolist(), lcps.tolist(), terminal.tolist())
        return PrefixTree(trie, pos[order].tolist())

    def leaf_phi(self, u_leaf: int, positions) -> list:
        """phi for each suffix position below a light node whose heavy path
        ends at the suffix-tree leaf ``u_leaf``: how deep the suffix follows
        that path, capped before its first ``#``."""
        tree = self.tree
        kh = tree.lo[u_leaf]
        ph = tree.sa[kh]
        h_terminal = tree.terminal[u_leaf]
        cap_h = math.inf if h_terminal else tree.depth[u_leaf]
        pos = np.asarray(positions, dtype=np.int64)
        ranks = self.fwd.rank[pos]
        a = np.minimum(ranks, kh)
        b = np.maximum(ranks, kh)
        same = a == b
        vals = np.zeros(len(pos), dtype=np.float64)
        if (~same).any():
            vals[~same] = self.fwd.lcp_of_ranks(a[~same], b[~same])
        vals[same] = math.inf if h_terminal else cap_h
        if self.caps is not None:
            c = self.caps[pos].astype(np.float64)
            c[c < 0] = math.inf
            vals = np.minimum(vals, c)
            vals = np.minimum(vals, cap_h)
        return vals.tolist()


def compute_phi(structs: _Structures, path_leaf: int, pt: PrefixTree) -> list:
    """phi per prefix-tree node: the maximum leaf phi in its subtree."""
    trie = pt.trie
    leaf = structs.leaf_phi(path_leaf, pt.positions)
    phi = [-math.inf] * len(trie)
    for k, e in enumerate(trie.end):
        if leaf[k] > phi[e]:
            phi[e] = leaf[k]
    parent = trie.parent
    for v in reversed(trie.order):
        p = parent[v]
        if p >= 0 and phi[v] > phi[p]:
            phi[p] = phi[v]
    pt.phi = phi
    return phi


def _inf_code(structs) -> int:
    """Stand-in for +infinity: above every preorder number, depth and phi."""
    return len(structs.tree) + structs.n + 2


def _pt_columns(trie: Trie, inf_code: int):
    """(sd(parent(v)) + 1, sd(v)) per prefix-tree node; the root gets 0."""
    parent, depth, term = trie.parent, trie.depth, trie.terminal
    psd1 = [0 if parent[v] < 0 else depth[parent[v]] + 1 for v in range(len(trie))]
    sd = [inf_code if term[v] else depth[v] for v in range(len(trie))]
    return psd1, sd


class CpcIndex:
    """Counting index answering |C_T(P, l, r)|.

    ``bound`` is None for the full index; for the optimized index every
    query must satisfy l + |P| + r <= bound.
    """

    def __init__(self, structs: _Structures, hpd: HeavyPathDecomposition,
                 d1: RangeCounter, d2: RangeCounter, d3: dict,
                 points: tuple, type3_offsets: np.ndarray, type3_nodes: list,
                 raw_points: int, n: int, z: int | None = None, bound: int | None = None,
                 dollar_byte: int = 0, hash_byte: int = 1):
        self.structs = structs
        self.tree = structs.tree
        self.hpd = hpd
        self.d1, self.d2, self.d3 = d1, d2, d3
        self.d1_points, self.d2_points, self.type3_points = points
        self.type3_offsets = type3_offsets
        self.type3_nodes = type3_nodes
        self.raw_points = raw_points
        self.n = n
        self.z = z
        self.bound = bound
        self.dollar_byte = dollar_byte
        self.hash_byte = hash_byte
        self.inf_code = _inf_code(structs)

    @property
    def indexed_length(self) -> int:
        """Letters in the indexed string (|T'| plus terminator for the optimized index)."""
        return self.structs.n

    @property
    def stored_points(self) -> int:
        return len(self.d1) + len(self.d2) + sum(len(c) for c in self.d3.values())

    def _rectangles(self, u: int, m: int, l: int, r: int):
        mr = m + r
        tree = self.tree
        lo = (tree.pre[u], -math.inf, mr, -math.inf, l)
        hi = (tree.last_pre[u], mr, math.inf, l, math.inf)
        return lo, hi

    def breakdown(self, pattern, l: int, r: int):
        """(Q1, Q2, Q3): counts from D1, D2 and D(u_l) (0 when unused)."""
        p = to_codes(pattern)
        m = len(p)
        if m < 1:
            raise ValueError("pattern must be non-empty")
        if l < 0 or r < 0:
            raise ValueError("l and r must be non-negative")
        if self.bound is not None and l + m + r > self.bound:
            raise BoundExceededError(f"l + m + r = {l + m + r} exceeds the index bound {self.bound}")
        u = self.tree.locus(p)
        if u is None:
            return 0, 0, 0
        lo, hi = self._rectangles(u, m, l, r)
        q1 = self.d1.count(lo, hi)
        q2 = self.d2.count(lo, hi)
        q3 = 0
        if not self.hpd.light[u]:
            ul = self.hpd.head[u]
            q3 = self.d3[ul].count((-math.inf, l, m + r), (l, math.inf, math.inf))
        return q1, q2, q3

    def query(self, pattern, l: int, r: int) -> int:
        return sum(self.breakdown(pattern, l, r))

    def save(self, path):
        save_index(self, path)


def _build(codes, n: int, z=None, bound=None, prefer_last=True, dollar_byte=0, hash_byte=1) -> CpcIndex:
    structs = _Structures(codes)
    tree = structs.tree
    hpd = decompose(tree, prefer_last)
    inf_code = _inf_code(structs)
    t1, t2, t3 = [], [], []
    t3_nodes, t3_offsets = [], [0]
    raw = 0
    light_nodes = sorted(hpd.light_nodes(), key=lambda v: tree.pre[v])
    for ul in light_nodes:
        pt = structs.prefix_tree(tree.lo[ul], tree.hi[ul])
        psd1, sd = _pt_columns(pt.trie, inf_code)
        pre = tree.pre[ul]
        u_psd1 = tree.parent_sd(ul) + 1
        u_sd = inf_code if tree.terminal[ul] else tree.depth[ul]
        u_sd1 = inf_code if tree.terminal[ul] else tree.depth[ul] + 1
        if not tree.children[ul]:
            # A light leaf heads a one-node path: it is never the head of a
            # heavy locus, and sd(u_l) + 1 > phi rules out every type-2 match.
            t1.extend((pre, u_psd1, u_sd, a, b) for a, b in zip(psd1, sd))
            raw += len(pt)
            continue
        phi = compute_phi(structs, hpd.path_leaf[ul], pt)
        phi_c = [inf_code if f == math.inf else int(f) for f in phi]
        for a, b, f in zip(psd1, sd, phi_c):
            t1.append((pre, u_psd1, u_sd, a, b))
            t2.append((pre, u_sd1, f, a, b))
            t3.append((a, b, f))
        raw += 3 * len(pt)
        t3_nodes.append(ul)
        t3_offsets.append(len(t3))
    t1 = np.array(t1, dtype=np.int64).reshape(-1, 5)
    t2 = np.array(t2, dtype=np.int64).reshape(-1, 5)
    t3 = np.array(t3, dtype=np.int64).reshape(-1, 3)
    offsets = np.array(t3_offsets, dtype=np.int64)
    return _assemble(structs, hpd, t1, t2, t3, offsets, t3_nodes, raw, n, z, bound,
                     dollar_byte, hash_byte)


def _assemble(structs, hpd, t1, t2, t3, offsets, t3_nodes, raw, n, z, bound, dollar_byte, hash_byte):
    inf_code = _inf_code(structs)
    d1 = RangeCounter(t1, inf=inf_code, dim=5)
    d2 = RangeCounter(t2, inf=inf_code, dim=5)
    d3 = {}
    for k, ul in enumerate(t3_nodes):
        d3[ul] = RangeCounter(t3[offsets[k]:offsets[k + 1]], inf=inf_code, dim=3)
    return CpcIndex(structs, hpd, d1, d2, d3, (t1, t2, t3), offsets, list(t3_nodes), raw, n, z,
                    bound, dollar_byte, hash_byte)


def build_index(t: Text, prefer_last: bool = True) -> CpcIndex:
    return _build(t.codes, t.n, prefer_last=prefer_last,
                  dollar_byte=t.dollar_byte, hash_byte=t.hash_byte)


def build_optimized_index(t: Text, bound: int, prefer_last: bool = True) -> CpcIndex:
    if bound < 1:
        raise ValueError("bound B must be >= 1")
    f = factorize(t)
    tp = build_modified_string(t, f, bound).as_text(t)
    return _build(tp.codes, t.n, z=f.z, bound=bound, prefer_last=prefer_last,
                  dollar_byte=t.dollar_byte, hash_byte=t.hash_byte)


class SimpleIndex:
    """Reference index: one 5-d point per (suffix-tree node, prefix-tree node)."""

    def __init__(self, t: Text, max_n: int = SIMPLE_MAX_N):
        if t.n > max_n:
            raise IndexSizeError(f"simple index limited to n <= {max_n} (got {t.n})")
        self.structs = _Structures(t.codes)
        tree = self.tree = self.structs.tree
        inf_code = _inf_code(self.structs)
        pts = []
        for u in range(len(tree)):
            pt = self.structs.prefix_tree(tree.lo[u], tree.hi[u])
            psd1, sd = _pt_columns(pt.trie, inf_code)
            pre = tree.pre[u]
            u_psd1 = tree.parent_sd(u) + 1
            u_sd = inf_code if tree.terminal[u] else tree.depth[u]
            pts.extend((pre, u_psd1, u_sd, a, b) for a, b in zip(psd1, sd))
        self.counter = RangeCounter(np.array(pts, dtype=np.int64).reshape(-1, 5), inf=inf_code, dim=5)
        self.raw_points = len(pts)

    def query(self, pattern, l: int, r: int) -> int:
        p = to_codes(pattern)
        m = len(p)
        u = self.tree.locus(p)
        if u is None:
            return 0
        mr = m + r
        return self.counter.count((self.tree.pre[u], -math.inf, mr, -math.inf, l),
                                  (self.tree.last_pre[u], mr, math.inf, l, math.inf))


def build_simple_index(t: Text, max_n: int = SIMPLE_MAX_N) -> SimpleIndex:
    return SimpleIndex(t, max_n)


def build_prefix_tree(idx_or_structs, u_l: int) -> PrefixTree:
    structs = idx_or_structs.structs if hasattr(idx_or_structs, "structs") else idx_or_structs
    tree = structs.tree
    return structs.prefix_tree(tree.lo[u_l], tree.hi[u_l])


def query(idx, pattern, l: int, r: int) -> int:
    return idx.query(pattern, l, r)


# -- serialization ----------------------------------------------------------
#
# Layout: fixed header, then a payload of named little-endian int64 arrays.
# The header carries a SHA-256 of the payload.  Suffix structures are
# recomputed from the stored string on load (deterministic); the
# decomposition and all points are stored, and counters are rebuilt.

INDEX_MAGIC = b"CTXIDX\x00\x01"
INDEX_VERSION = 1
_IDX_HEADER = struct.Struct("<8sIIQqqBB6xQ32s")
_ARRAY_HEADER = struct.Struct("<16sIQQ")  # name, ndim, dim0, dim1
_ARRAYS = ("codes", "heavy", "light", "head", "path_leaf", "t1", "t2", "t3",
           "t3_offsets", "t3_nodes", "meta")


def _pack_arrays(arrays: dict) -> bytes:
    out = []
    for name in _ARRAYS:
        a = np.ascontiguousarray(arrays[name], dtype="<i8")
        a2 = a.reshape(len(a), -1) if a.ndim > 1 else a
        d1 = a2.shape[1] if a2.ndim == 2 else 0
        out.append(_ARRAY_HEADER.pack(name.encode(), a.ndim, a.shape[0], d1))
        out.append(a.tobytes())
    return b"".join(out)


def _unpack_arrays(payload: bytes) -> dict:
    arrays = {}
    off = 0
    for name in _ARRAYS:
        if off + _ARRAY_HEADER.size > len(payload):
            raise IndexFormatError("index payload is truncated")
        raw, ndim, d0, d1 = _ARRAY_HEADER.unpack_from(payload, off)
        off += _ARRAY_HEADER.size
        if raw.rstrip(b"\x00").decode() != name or ndim not in (1, 2):
            raise IndexFormatError(f"unexpected array record (wanted {name})")
        size = d0 * (d1 if ndim == 2 else 1)
        if off + 8 * size > len(payload):
            raise IndexFormatError("index payload is truncated")
        a = np.frombuffer(payload, dtype="<i8", count=size, offset=off).astype(np.int64)
        arrays[name] = a.reshape(d0, d1) if ndim == 2 else a
        off += 8 * size
    if off != len(payload):
        raise IndexFormatError("trailing bytes after index payload")
    return arrays


def dumps_index(idx: CpcIndex) -> bytes:
    hpd = idx.hpd
    leaf_of = np.full(len(idx.tree), -1, dtype=np.int64)
    for u, leaf in hpd.path_leaf.items():
        leaf_of[u] = leaf
    arrays = {
        "codes": idx.structs.codes,
        "heavy": np.asarray(hpd.heavy),
        "light": np.asarray(hpd.light, dtype=np.int64),
        "head": np.asarray(hpd.head),
        "path_leaf": leaf_of,
        "t1": idx.d1_points, "t2": idx.d2_points, "t3": idx.type3_points,
        "t3_offsets": idx.type3_offsets,
        "t3_nodes": np.asarray(idx.type3_nodes, dtype=np.int64),
        "meta": np.array([idx.raw_points, len(idx.tree)], dtype=np.int64),
    }
    payload = _pack_arrays(arrays)
    header = _IDX_HEADER.pack(INDEX_MAGIC, INDEX_VERSION, 0, idx.n,
                              -1 if idx.z is None else idx.z,
                              -1 if idx.bound is None else idx.bound,
                              idx.dollar_byte, idx.hash_byte, len(payload),
                              hashlib.sha256(payload).digest())
    return header + payload


def loads_index(data: bytes) -> CpcIndex:
    if len(data) < _IDX_HEADER.size:
        raise IndexFormatError("index file is truncated (no header)")
    magic, version, _, n, z, bound, db, hb, plen, digest = _IDX_HEADER.unpack_from(data)
    if magic != INDEX_MAGIC:
        raise IndexFormatError("not an index file")
    if version != INDEX_VERSION:
        raise IndexFormatError(f"index format version {version} is not supported (expected {INDEX_VERSION})")
    payload = data[_IDX_HEADER.size:]
    if len(payload) != plen:
        raise IndexFormatError(f"index payload has {len(payload)} bytes, header says {plen}")
    if hashlib.sha256(payload).digest() != digest:
        raise IndexFormatError("index checksum mismatch (corrupted file)")
    a = _unpack_arrays(payload)
    structs = _Structures(a["codes"])
    raw, tree_size = a["meta"].tolist()
    if len(structs.tree) != tree_size or len(a["heavy"]) != tree_size:
        raise IndexFormatError("stored decomposition does not match the indexed string")
    path_leaf = {u: int(v) for u, v in enumerate(a["path_leaf"].tolist()) if v >= 0}
    hpd = HeavyPathDecomposition(a["heavy"].tolist(), [bool(x) for x in a["light"].tolist()],
                                 a["head"].tolist(), path_leaf)
    return _assemble(structs, hpd, a["t1"], a["t2"], a["t3"], a["t3_offsets"],
                     a["t3_nodes"].tolist(), raw, n, None if z < 0 else z,
                     None if bound < 0 else bound, db, hb)


def save_index(idx: CpcIndex, path):
    data = dumps_index(idx)
    with open(path, "wb") as fh:
        fh.write(data)


def load_index(path) -> CpcIndex:
    with open(path, "rb") as fh:
        return loads_index(fh.read())

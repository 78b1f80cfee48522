"""Exact orthogonal range counting over weighted integer point multisets.

A static k-d tree: every node keeps its bounding box and the total
multiplicity below it, so boxes fully inside the query are counted without
descending.  Duplicate points are collapsed to (point, multiplicity) at build.

Coordinates are non-negative integers, or +infinity.  Infinity is stored as
one more than the largest finite coordinate; query endpoints are clamped so
that a finite bound larger than every finite coordinate still behaves like
the real number it is (``x <= inf`` holds, ``inf <= x`` does not).
"""

from __future__ import annotations

import math

import numpy as np

_LOW = -(1 << 62)
_HIGH = 1 << 62
LEAF_SIZE = 16


class ArityError(ValueError):
    pass


def _encode(points, inf):
    if isinstance(points, np.ndarray) and points.dtype.kind in "iu":
        return points.astype(np.int64, copy=False), inf
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        return arr.astype(np.int64), inf
    finite = np.isfinite(arr)
    if (arr[~finite] < 0).any():
        raise ValueError("coordinates may be +inf but not -inf")
    if inf is None and not finite.all():
        inf = int(arr[finite].max()) + 1 if finite.any() else 0
    out = np.where(finite, arr, inf if inf is not None else 0).astype(np.int64)
    return out, inf


class RangeCounter:
    """Counts points (with multiplicity) inside axis-aligned boxes.

    ``points`` is an (N, d) array-like.  When ``inf`` is given, coordinates
    equal to it denote +infinity; float input may instead use ``math.inf``.
    """

    def __init__(self, points, weights=None, inf: int | None = None, dim: int | None = None):
        if not isinstance(points, np.ndarray):
            points = list(points)
            arities = {len(p) for p in points}
            if len(arities) > 1:
                raise ArityError(f"mixed point arities {sorted(arities)}")
            if dim is None and arities:
                dim = arities.pop()
        pts, inf = _encode(points, inf)
        if pts.size == 0:
            pts = pts.reshape(0, dim or 0)
        if pts.ndim != 2:
            raise ArityError("points must form an (N, d) array")
        if dim is not None and pts.shape[0] and pts.shape[1] != dim:
            raise ArityError(f"expected arity {dim}, got {pts.shape[1]}")
        self.dim = pts.shape[1] if pts.shape[0] else (dim or pts.shape[1])
        self.inf = inf
        if weights is None:
            weights = np.ones(len(pts), dtype=np.int64)
        weights = np.asarray(weights, dtype=np.int64)
        if len(pts):
            pts, inv = np.unique(pts, axis=0, return_inverse=True)
            weights = np.bincount(inv.ravel(), weights=weights, minlength=len(pts)).astype(np.int64)
        self.points = pts
        self.weights = weights
        self.total = int(weights.sum())
        self._build()

    def __len__(self):
        """Number of distinct stored points."""
        return len(self.points)

    def _build(self):
        pts, w = self.points, self.weights
        self.blo, self.bhi, self.wsum = [], [], []
        self.kids = []
        self.leaf_pts, self.leaf_w = [], []
        if len(pts) == 0:
            return
        perm = np.arange(len(pts))
        work = [(0, len(pts), -1, 0)]  # (start, stop, parent, side)
        while work:
            start, stop, par, side = work.pop()
            idx = perm[start:stop]
            sub = pts[idx]
            lo = sub.min(axis=0)
            hi = sub.max(axis=0)
            v = len(self.blo)
            self.blo.append(tuple(lo.tolist()))
            self.bhi.append(tuple(hi.tolist()))
            self.wsum.append(int(w[idx].sum()))
            self.kids.append(None)
            self.leaf_pts.append(None)
            self.leaf_w.append(None)
            if par >= 0:
                self.kids[par][side] = v
            size = stop - start
            spread = hi - lo
            if size <= LEAF_SIZE or not spread.any():
                self.leaf_pts[v] = [tuple(p) for p in sub.tolist()]
                self.leaf_w[v] = w[idx].tolist()
                continue
            axis = int(np.argmax(spread))
            mid = size // 2
            order = np.argpartition(sub[:, axis], mid)
            perm[start:stop] = idx[order]
            self.kids[v] = [None, None]
            work.append((start + mid, stop, v, 1))
            work.append((start, start + mid, v, 0))

    def _clamp(self, lo, hi):
        inf = self.inf
        qlo, qhi = [], []
        for a, b in zip(lo, hi):
            if a is None or a == -math.inf:
                a = _LOW
            elif a == math.inf:
                a = inf if inf is not None else _HIGH
            else:
                a = math.ceil(a)
                if inf is not None and a > inf:
                    a = inf
            if b is None or b == math.inf:
                b = inf if inf is not None else _HIGH
            elif b == -math.inf:
                b = _LOW - 1
            else:
                b = math.floor(b)
                if inf is not None and b >= inf:
                    b = inf - 1
            qlo.append(a)
            qhi.append(b)
        return qlo, qhi

    def count(self, lo, hi) -> int:
        """Multiplicity of points p with lo[k] <= p[k] <= hi[k] for every k.

        Bounds may be ints, ``None`` or +-``math.inf`` (open ends).
        """
        if len(lo) != self.dim or len(hi) != self.dim:
            raise ArityError(f"query arity {len(lo)}/{len(hi)} does not match {self.dim}")
        if not self.blo:
            return 0
        qlo, qhi = self._clamp(lo, hi)
        dims = range(self.dim)
        blo, bhi, wsum, kids = self.blo, self.bhi, self.wsum, self.kids
        total = 0
        stack = [0]
        while stack:
            v = stack.pop()
            a, b = blo[v], bhi[v]
            inside = True
            for k in dims:
                if b[k] < qlo[k] or a[k] > qhi[k]:
                    break
                if inside and (a[k] < qlo[k] or b[k] > qhi[k]):
                    inside = False
            else:
                if inside:
                    total += wsum[v]
                elif kids[v] is not None:
                    stack.extend(kids[v])
                else:
                    for p, wt in zip(self.leaf_pts[v], self.leaf_w[v]):
                        for k in dims:
                            if p[k] < qlo[k] or p[k] > qhi[k]:
                                break
                        else:
                            total += wt
        return total


def build_counter(points, weights=None, inf=None, dim=None) -> RangeCounter:
    return RangeCounter(points, weights, inf=inf, dim=dim)


def count(rc: RangeCounter, lo, hi) -> int:
    return rc.count(lo, hi)

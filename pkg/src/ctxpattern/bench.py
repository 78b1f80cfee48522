"""Timing and size measurements for scaling reports."""

from __future__ import annotations

import time

import numpy as np

from .cpc import build_index, build_optimized_index
from .lz77 import factorize
from .text import Text


def random_text(n: int, sigma: int = 4, seed: int = 0) -> Text:
    """A uniform random text with n - 1 letters from the first sigma of 'ACGT...'."""
    rng = np.random.default_rng(seed)
    letters = np.frombuffer(b"ACGTUVWXYZ"[:sigma] if sigma <= 10 else bytes(range(65, 65 + sigma)),
                            dtype=np.uint8)
    return Text.from_bytes(letters[rng.integers(0, sigma, n - 1)].tobytes())


def repetitive_text(n: int, base: int = 500, mutation_rate: float = 0.002, seed: int = 0) -> Text:
    """Copies of one random block with sparse point mutations (small LZ77 phrase count)."""
    rng = np.random.default_rng(seed)
    alphabet = np.frombuffer(b"ACGT", dtype=np.uint8)
    block = alphabet[rng.integers(0, 4, base)]
    reps = -(-(n - 1) // base)
    s = np.tile(block, reps)[:n - 1].copy()
    hits = rng.random(len(s)) < mutation_rate
    s[hits] = alphabet[rng.integers(0, 4, int(hits.sum()))]
    return Text.from_bytes(s.tobytes())


def build_scaling(sizes, sigma: int = 4, seed: int = 0):
    """(n, seconds) for full-index builds on prefixes of one random text."""
    sizes = sorted(sizes)
    big = random_text(max(sizes), sigma, seed).payload_bytes()
    rows = []
    for n in sizes:
        t = Text.from_bytes(big[:n - 1])
        t0 = time.perf_counter()
        build_index(t)
        rows.append((n, time.perf_counter() - t0))
    return rows


def optimized_size_by_bound(n: int, bounds, seed: int = 0):
    """(B, z, |T'|, stored points) for the bounded index on a repetitive text."""
    t = repetitive_text(n, seed=seed)
    z = factorize(t).z
    out = []
    for b in sorted(bounds):
        idx = build_optimized_index(t, b)
        out.append((b, z, idx.indexed_length, idx.stored_points))
    return out

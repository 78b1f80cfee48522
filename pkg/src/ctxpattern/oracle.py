"""Brute-force contexts, counts and mining results.

Deliberately naive; everything else is checked against these.  Flanks are
cut at the text boundaries: L = T[max(1, i-l) .. i-1] and
R = T[i+m .. min(n, i+m+r-1)], so R may end with the terminator and a
boundary-truncated flank differs from every full-length one by length.
"""

from __future__ import annotations

from .text import DOLLAR, HASH, Text, to_codes

MAX_N = 5000


class OracleSizeError(ValueError):
    pass


def _guard(t: Text):
    if t.n > MAX_N:
        raise OracleSizeError(f"oracle limited to n <= {MAX_N} (got {t.n})")


def context_oracle(t: Text, pattern, l: int, r: int) -> set:
    """Set of distinct (L, R) code-tuple pairs over all occurrences of pattern."""
    _guard(t)
    p = list(to_codes(pattern))
    if not p:
        raise ValueError("pattern must be non-empty")
    s = t.codes.tolist()
    n, m = len(s), len(p)
    out = set()
    for i in range(n - m + 1):
        if s[i:i + m] == p:
            out.add((tuple(s[max(0, i - l):i]), tuple(s[i + m:min(n, i + m + r)])))
    return out


def count_oracle(t: Text, pattern, l: int, r: int) -> int:
    return len(context_oracle(t, pattern, l, r))


def window_contexts(t: Text, m: int, l: int, r: int) -> dict:
    """Every length-m window over the alphabet mapped to its context set."""
    _guard(t)
    s = t.codes.tolist()
    n = len(s)
    table = {}
    for i in range(n - m + 1):
        w = tuple(s[i:i + m])
        if DOLLAR in w or HASH in w:
            continue
        table.setdefault(w, set()).add(
            (tuple(s[max(0, i - l):i]), tuple(s[i + m:min(n, i + m + r)])))
    return table


def cpm_oracle(t: Text, tau: int, m: int, l: int, r: int) -> list:
    """Mining by enumeration, ordered like the pipeline output."""
    from .cpm import MinedPattern

    out = []
    for w, ctx in sorted(window_contexts(t, m, l, r).items()):
        if len(ctx) >= tau:
            out.append(MinedPattern(w, tuple(sorted(ctx))))
    return out

"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 oracle mismatch.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import cpc, cpm, em, lz77, oracle
from .text import APPEND_IF_MISSING, DOLLAR, HASH, REQUIRE_PRESENT, Text, TextError, render, to_codes

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MISMATCH = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_at_least(lo):
    def parse(s):
        try:
            v = int(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {s!r}")
        if v < lo:
            raise argparse.ArgumentTypeError(f"must be >= {lo}, got {v}")
        return v
    return parse


def _positive_float(s):
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {s!r}")
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return v


positive = _int_at_least(1)
nonneg = _int_at_least(0)


def _byte(s):
    v = int(s, 0)
    if not 0 <= v <= 255:
        raise argparse.ArgumentTypeError("byte value must be in 0..255")
    return v


def read_text(args) -> Text:
    raw = Path(args.text).read_bytes()
    if not args.raw and raw.endswith(b"\n"):
        raw = raw[:-1]
        if raw.endswith(b"\r"):
            raw = raw[:-1]
    if not raw:
        raise TextError(f"{args.text}: empty input")
    if args.sentinel_policy == REQUIRE_PRESENT:
        last = raw[-1]
        if args.dollar_byte is not None and last != args.dollar_byte:
            raise TextError(f"{args.text}: last byte 0x{last:02x} is not the terminator")
        if last in raw[:-1]:
            raise TextError(f"{args.text}: terminator byte occurs before the end")
        if len(raw) < 2:
            raise TextError(f"{args.text}: no letters before the terminator")
        return Text.from_bytes(raw[:-1], last, args.hash_byte)
    return Text.from_bytes(raw, args.dollar_byte, args.hash_byte)


def _text_args(p):
    p.add_argument("--text", required=True, help="input text file (raw bytes)")
    p.add_argument("--raw", action="store_true", help="keep a trailing newline as part of the text")
    p.add_argument("--sentinel-policy", choices=(APPEND_IF_MISSING, REQUIRE_PRESENT),
                   default=APPEND_IF_MISSING)
    p.add_argument("--dollar-byte", type=_byte, default=None,
                   help="byte value reserved for the terminator (default: smallest unused)")
    p.add_argument("--hash-byte", type=_byte, default=None,
                   help="byte value reserved for the gap marker (default: smallest unused)")


def _em_config(args) -> em.EmConfig:
    return em.EmConfig.from_sizes(args.budget_mb, args.block_kb, args.tmp_dir)


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def cmd_mine(args):
    t = read_text(args)
    cpm.validate_params(t.n, args.tau, args.m, args.l, args.r)
    fh, close = _open_out(args.output)
    try:
        if args.engine == "im":
            cpm.write_patterns(cpm.mine_im(t, args.tau, args.m, args.l, args.r), fh)
        else:
            stats = em.IoStats()
            em.mine_em(t, args.tau, args.m, args.l, args.r, _em_config(args), out=fh, stats=stats)
            if args.io_stats:
                print(f"blocks_read={stats.blocks_read} blocks_written={stats.blocks_written} "
                      f"peak_buffer_bytes={stats.peak_buffer_bytes} merge_passes={stats.merge_passes}",
                      file=sys.stderr)
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_index_build(args):
    t = read_text(args)
    if args.bound is None:
        idx = cpc.build_index(t)
    else:
        idx = cpc.build_optimized_index(t, args.bound)
    cpc.save_index(idx, args.index_out)
    kind = "full" if args.bound is None else f"optimized B={args.bound} z={idx.z}"
    print(f"{kind} index: n={t.n} indexed={idx.indexed_length} points={idx.raw_points} "
          f"stored={idx.stored_points} -> {args.index_out}", file=sys.stderr)
    return EXIT_OK


def _check_bound(idx, m, l, r):
    if idx.bound is not None and l + m + r > idx.bound:
        raise cpc.BoundExceededError(f"l + m + r = {l + m + r} exceeds the index bound {idx.bound}")


def cmd_query(args):
    idx = cpc.load_index(args.index_in)
    p = args.pattern.encode("utf-8")
    if not p:
        raise UsageError("--pattern must be non-empty")
    _check_bound(idx, len(p), args.l, args.r)
    if args.breakdown:
        q = idx.breakdown(p, args.l, args.r)
        print("\t".join(str(x) for x in (*q, sum(q))))
    else:
        print(idx.query(p, args.l, args.r))
    return EXIT_OK


def distinct_windows(codes, m: int) -> list:
    """Distinct length-m windows free of sentinels, in order of first occurrence."""
    seen = {}
    s = [int(c) for c in codes]
    for i in range(len(s) - m + 1):
        w = tuple(s[i:i + m])
        if w not in seen and DOLLAR not in w and HASH not in w:
            seen[w] = None
    return list(seen)


def cmd_workload(args):
    idx = cpc.load_index(args.index_in)
    if args.pattern_file:
        lines = Path(args.pattern_file).read_text(encoding="utf-8").splitlines()
        patterns = [to_codes(s) for s in lines if s]
    else:
        if args.m is None:
            raise UsageError("--m is required without --pattern-file")
        patterns = distinct_windows(idx.structs.codes, args.m)
    for p in patterns:
        _check_bound(idx, len(p), args.l, args.r)
    fh, close = _open_out(args.output)
    total = 0.0
    try:
        for p in patterns:
            t0 = time.perf_counter()
            c = idx.query(p, args.l, args.r)
            total += time.perf_counter() - t0
            fh.write(f"{cpm.render_field(p)}\t{c}\n")
        mean = total / len(patterns) * 1e6 if patterns else 0.0
        fh.write(f"# queries={len(patterns)} mean_latency_us={mean:.2f}\n")
    finally:
        if close:
            fh.close()
    return EXIT_OK


def cmd_oracle_check(args):
    t = read_text(args)
    if t.n > oracle.MAX_N:
        raise oracle.OracleSizeError(f"oracle limited to n <= {oracle.MAX_N} (got {t.n})")
    report = run_oracle_check(t, args.m_max, args.l_max, args.r_max, args.tau_max,
                              _em_config(args) if args.with_em else None)
    for line in report.lines:
        print(line)
    print(f"checked={report.checked} mismatches={report.mismatches}")
    return EXIT_MISMATCH if report.mismatches else EXIT_OK


class OracleReport:
    def __init__(self):
        self.checked = 0
        self.mismatches = 0
        self.lines = []

    def compare(self, label, got, want):
        self.checked += 1
        if got != want:
            self.mismatches += 1
            self.lines.append(f"MISMATCH {label}: got {got!r}, expected {want!r}")


def run_oracle_check(t: Text, m_max=3, l_max=2, r_max=2, tau_max=3, em_cfg=None) -> OracleReport:
    """Every engine against the brute-force oracle on one text."""
    rep = OracleReport()
    full = cpc.build_index(t)
    simple = cpc.build_simple_index(t) if t.n <= 200 else None
    optimized = {}
    for m in range(1, m_max + 1):
        for w in distinct_windows(t.codes, m):
            label = render(w)
            for l in range(l_max + 1):
                for r in range(r_max + 1):
                    want = oracle.count_oracle(t, w, l, r)
                    rep.compare(f"full {label} l={l} r={r}", full.query(w, l, r), want)
                    b = l + m + r
                    if b not in optimized:
                        optimized[b] = cpc.build_optimized_index(t, b)
                    rep.compare(f"optimized(B={b}) {label} l={l} r={r}",
                                optimized[b].query(w, l, r), want)
                    if simple is not None:
                        rep.compare(f"simple {label} l={l} r={r}", simple.query(w, l, r), want)
    for tau in range(1, tau_max + 1):
        for m in range(1, m_max + 1):
            for l in range(l_max + 1):
                for r in range(r_max + 1):
                    if m + r > t.n or l >= t.n:
                        continue
                    want = cpm.format_patterns(oracle.cpm_oracle(t, tau, m, l, r))
                    rep.compare(f"mine_im tau={tau} m={m} l={l} r={r}",
                                cpm.format_patterns(cpm.mine_im(t, tau, m, l, r)), want)
                    if em_cfg is not None:
                        rep.compare(f"mine_em tau={tau} m={m} l={l} r={r}",
                                    cpm.format_patterns(em.mine_em(t, tau, m, l, r, em_cfg)), want)
    return rep


def cmd_lz77(args):
    t = read_text(args)
    f = lz77.factorize(t)
    print(",".join(str(s) for s in f.starts))
    if args.bound is not None:
        ms = lz77.build_modified_string(t, f, args.bound)
        print(render(ms.codes))
    return EXIT_OK


def cmd_scaling(args):
    from .bench import build_scaling, optimized_size_by_bound

    rows = build_scaling(args.sizes, sigma=args.sigma, seed=args.seed)
    print("n\tbuild_s\tus_per_letter")
    for n, secs in rows:
        print(f"{n}\t{secs:.3f}\t{secs / n * 1e6:.2f}")
    if args.bounds:
        print("B\tz\tindexed_length\tstored_points")
        for b, z, length, pts in optimized_size_by_bound(args.bound_n, args.bounds, seed=args.seed):
            print(f"{b}\t{z}\t{length}\t{pts}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ctxpattern", description="Contextual pattern mining and counting.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("mine", help="report every length-m pattern with >= tau distinct contexts")
    _text_args(s)
    s.add_argument("--tau", type=positive, required=True)
    s.add_argument("--m", type=positive, required=True)
    s.add_argument("--l", type=nonneg, required=True)
    s.add_argument("--r", type=nonneg, required=True)
    s.add_argument("--engine", choices=("im", "em"), default="im")
    s.add_argument("--budget-mb", type=_positive_float, default=64.0, help="EM RAM budget (MiB)")
    s.add_argument("--block-kb", type=_positive_float, default=4.0, help="EM block size (KiB)")
    s.add_argument("--tmp-dir", default=None, help="EM scratch directory")
    s.add_argument("--io-stats", action="store_true", help="print EM I/O counters to stderr")
    s.add_argument("--output", "-o", default="-")
    s.set_defaults(func=cmd_mine)

    s = sub.add_parser("index-build", help="build and save a counting index")
    _text_args(s)
    s.add_argument("--bound", type=positive, default=None,
                   help="build the LZ77-bounded index; queries then need l + m + r <= B")
    s.add_argument("--index-out", required=True)
    s.set_defaults(func=cmd_index_build)

    s = sub.add_parser("query", help="count the distinct contexts of one pattern")
    s.add_argument("--index-in", required=True)
    s.add_argument("--pattern", required=True)
    s.add_argument("--l", type=nonneg, required=True)
    s.add_argument("--r", type=nonneg, required=True)
    s.add_argument("--breakdown", action="store_true", help="print Q1 Q2 Q3 total")
    s.set_defaults(func=cmd_query)

    s = sub.add_parser("workload", help="query every distinct length-m substring")
    s.add_argument("--index-in", required=True)
    s.add_argument("--m", type=positive, default=None)
    s.add_argument("--l", type=nonneg, required=True)
    s.add_argument("--r", type=nonneg, required=True)
    s.add_argument("--pattern-file", default=None, help="one pattern per line instead of all substrings")
    s.add_argument("--output", "-o", default="-")
    s.set_defaults(func=cmd_workload)

    s = sub.add_parser("oracle-check", help="compare all engines with the brute-force oracle")
    _text_args(s)
    s.add_argument("--m-max", type=positive, default=3)
    s.add_argument("--l-max", type=nonneg, default=2)
    s.add_argument("--r-max", type=nonneg, default=2)
    s.add_argument("--tau-max", type=positive, default=3)
    s.add_argument("--with-em", action="store_true", help="also run the external-memory miner")
    s.add_argument("--budget-mb", type=_positive_float, default=1.0)
    s.add_argument("--block-kb", type=_positive_float, default=4.0)
    s.add_argument("--tmp-dir", default=None)
    s.set_defaults(func=cmd_oracle_check)

    s = sub.add_parser("lz77", help="print LZ77 phrase starts (and T' for --bound)")
    _text_args(s)
    s.add_argument("--bound", type=positive, default=None)
    s.set_defaults(func=cmd_lz77)

    s = sub.add_parser("scaling", help="index build time across text sizes")
    s.add_argument("--sizes", type=positive, nargs="+", default=[10_000, 100_000])
    s.add_argument("--sigma", type=positive, default=4)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--bounds", type=positive, nargs="*", default=[])
    s.add_argument("--bound-n", type=positive, default=20_000)
    s.set_defaults(func=cmd_scaling)
    return p


DATA_ERRORS = (OSError, TextError, cpm.ParameterError, cpc.BoundExceededError, cpc.IndexFormatError,
               cpc.IndexSizeError, oracle.OracleSizeError, em.EmError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, em.EmConfigError) as e:
        print(f"ctxpattern: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as e:
        print(f"ctxpattern: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())

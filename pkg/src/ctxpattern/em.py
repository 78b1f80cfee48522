"""External-memory primitives and the budgeted mining pipeline.

Tuples live in run files of fixed-width little-endian unsigned integers.
Every in-memory tuple buffer is registered with an ``IoStats`` tracker, so the
peak number of buffered record bytes can be compared against the budget.
Suffix arrays are built in memory and streamed out (semi-external); from
there on all grouping is done by scans and all reordering by
``external_sort``.
"""

from __future__ import annotations

import heapq
import os
import shutil
import struct
import tempfile
from contextlib import closing
from dataclasses import dataclass, field
from operator import itemgetter

import numpy as np

from .cpm import MinedPattern, format_record, validate_params
from .suffix import SuffixIndex
from .text import Text, reverse_text

MAGIC = b"CTXRUN\x00\x01"
_HEADER = struct.Struct("<8sIIQ")  # magic, arity, width, count


class EmError(RuntimeError):
    pass


class EmConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EmConfig:
    budget_bytes: int = 1 << 20
    block_bytes: int = 4096
    tmp_dir: str | None = None

    def __post_init__(self):
        if self.block_bytes < 8:
            raise EmConfigError("block size must hold at least one 8-byte integer")
        if self.budget_bytes < 2 * self.block_bytes:
            raise EmConfigError(
                f"budget {self.budget_bytes} B is below two blocks ({2 * self.block_bytes} B)")

    @classmethod
    def from_sizes(cls, budget_mb: float, block_kb: float, tmp_dir=None) -> "EmConfig":
        return cls(int(budget_mb * (1 << 20)), int(block_kb * 1024), tmp_dir)

    def fan_in(self) -> int:
        return max(2, self.budget_bytes // self.block_bytes - 1)


@dataclass
class IoStats:
    blocks_read: int = 0
    blocks_written: int = 0
    peak_buffer_bytes: int = 0
    buffer_bytes: int = 0
    merge_passes: int = 0
    block_bytes: int = field(default=4096, repr=False)

    def _blocks(self, nbytes: int) -> int:
        return -(-nbytes // self.block_bytes)

    def read(self, nbytes: int):
        self.blocks_read += self._blocks(nbytes)

    def wrote(self, nbytes: int):
        self.blocks_written += self._blocks(nbytes)

    def acquire(self, nbytes: int):
        self.buffer_bytes += nbytes
        if self.buffer_bytes > self.peak_buffer_bytes:
            self.peak_buffer_bytes = self.buffer_bytes

    def release(self, nbytes: int):
        self.buffer_bytes -= nbytes


def width_for(max_value: int) -> int:
    return 4 if max_value < (1 << 32) else 8


@dataclass
class RunFile:
    path: str
    arity: int
    width: int
    count: int

    @property
    def record_bytes(self) -> int:
        return self.arity * self.width

    @property
    def dtype(self):
        return np.dtype("<u4" if self.width == 4 else "<u8")

    @classmethod
    def open(cls, path) -> "RunFile":
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise EmError(f"{path}: truncated run header")
        magic, arity, width, count = _HEADER.unpack(head)
        if magic != MAGIC or width not in (4, 8) or arity < 1:
            raise EmError(f"{path}: not a run file")
        run = cls(str(path), arity, width, count)
        if os.path.getsize(path) != _HEADER.size + count * run.record_bytes:
            raise EmError(f"{path}: length does not match header")
        return run

    def delete(self):
        try:
            os.remove(self.path)
        except FileNotFoundError:
            pass


class RunWriter:
    """Buffered writer; the buffer holds ``buf_records`` records."""

    def __init__(self, path, arity: int, width: int, buf_records: int, stats: IoStats):
        self.run = RunFile(str(path), arity, width, 0)
        self.stats = stats
        self.cap = max(1, buf_records)
        self.nbytes = self.cap * self.run.record_bytes
        self.buf = []
        self.fh = open(path, "wb")
        self.fh.write(_HEADER.pack(MAGIC, arity, width, 0))
        stats.acquire(self.nbytes)

    def write(self, rec):
        self.buf.append(rec)
        if len(self.buf) >= self.cap:
            self.flush()

    def write_array(self, arr: np.ndarray):
        """Write an (N, arity) array in buffer-sized slices."""
        for s in range(0, len(arr), self.cap):
            self._emit(arr[s:s + self.cap])

    def _emit(self, arr):
        data = np.ascontiguousarray(arr, dtype=self.run.dtype).tobytes()
        self.fh.write(data)
        self.stats.wrote(len(data))
        self.run.count += len(arr)

    def flush(self):
        if self.buf:
            self._emit(np.array(self.buf, dtype=np.int64).reshape(-1, self.run.arity))
            self.buf = []

    def close(self) -> RunFile:
        self.flush()
        self.fh.seek(0)
        self.fh.write(_HEADER.pack(MAGIC, self.run.arity, self.run.width, self.run.count))
        self.fh.close()
        self.stats.release(self.nbytes)
        return self.run


def read_chunks(run: RunFile, buf_records: int, stats: IoStats):
    """Yield (k, arity) int64 arrays of at most ``buf_records`` records."""
    buf_records = max(1, buf_records)
    nbytes = buf_records * run.record_bytes
    stats.acquire(nbytes)
    try:
        with open(run.path, "rb") as fh:
            fh.seek(_HEADER.size)
            left = run.count
            while left:
                k = min(left, buf_records)
                data = fh.read(k * run.record_bytes)
                if len(data) != k * run.record_bytes:
                    raise EmError(f"{run.path}: unexpected end of run file")
                stats.read(len(data))
                left -= k
                yield np.frombuffer(data, dtype=run.dtype).reshape(k, run.arity).astype(np.int64)
    finally:
        stats.release(nbytes)


def read_records(run: RunFile, buf_records: int, stats: IoStats):
    for chunk in read_chunks(run, buf_records, stats):
        yield from map(tuple, chunk.tolist())


def write_run(path, arr: np.ndarray, width: int, buf_records: int, stats: IoStats) -> RunFile:
    arr = np.asarray(arr, dtype=np.int64).reshape(len(arr), -1)
    w = RunWriter(path, arr.shape[1], width, buf_records, stats)
    w.write_array(arr)
    return w.close()


def load_run(run: RunFile) -> np.ndarray:
    """Whole run as an int64 array (test helper; not budgeted)."""
    with open(run.path, "rb") as fh:
        fh.seek(_HEADER.size)
        data = fh.read()
    return np.frombuffer(data, dtype=run.dtype).reshape(run.count, run.arity).astype(np.int64)


class Scratch:
    """Scratch directory handing out unique run-file names."""

    def __init__(self, cfg: EmConfig):
        try:
            self.dir = tempfile.mkdtemp(prefix="ctxpattern-", dir=cfg.tmp_dir)
        except OSError as e:
            raise EmError(f"cannot create scratch directory: {e}") from e
        self.k = 0

    def path(self, tag: str) -> str:
        self.k += 1
        return os.path.join(self.dir, f"{self.k:05d}-{tag}.run")

    def cleanup(self):
        shutil.rmtree(self.dir, ignore_errors=True)


def block_records(cfg: EmConfig, rec_bytes: int) -> int:
    if rec_bytes > cfg.block_bytes:
        raise EmConfigError(f"record of {rec_bytes} B does not fit a {cfg.block_bytes} B block")
    return cfg.block_bytes // rec_bytes


def scan_records(cfg: EmConfig, rec_bytes: int) -> int:
    """Buffer size for a scan stream; at most three streams are open at once."""
    block_records(cfg, rec_bytes)
    k = cfg.budget_bytes // 3 // rec_bytes
    if k < 1:
        raise EmConfigError(f"budget {cfg.budget_bytes} B cannot hold three {rec_bytes} B records")
    return k


def _dump(path, arr: np.ndarray, width: int, stats: IoStats) -> RunFile:
    """Write an already-buffered array as a run file."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, arr.shape[1], width, len(arr)))
        data = np.ascontiguousarray(arr, dtype="<u4" if width == 4 else "<u8").tobytes()
        fh.write(data)
    stats.wrote(len(data))
    return RunFile(str(path), arr.shape[1], width, len(arr))


def external_sort(run: RunFile, key, cfg: EmConfig, stats: IoStats | None = None,
                  scratch: Scratch | None = None, delete_input: bool = False) -> RunFile:
    """Stable sort of a run file by the record fields listed in ``key``.

    Runs of up to budget/2 bytes are sorted in memory (input chunk plus its
    sorted copy), then merged ``fan_in`` at a time; each merge input and
    the output get an equal share of the budget.
    """
    stats = stats or IoStats(block_bytes=cfg.block_bytes)
    scratch = scratch or Scratch(cfg)
    key = tuple(key)
    rec = run.record_bytes
    block_records(cfg, rec)
    try:
        per_run = max(1, cfg.budget_bytes // (2 * rec))
        runs = []
        for chunk in read_chunks(run, per_run, stats):
            stats.acquire(chunk.shape[0] * rec)
            order = np.lexsort(tuple(chunk[:, k] for k in reversed(key)))
            runs.append(_dump(scratch.path("run"), chunk[order], run.width, stats))
            stats.release(chunk.shape[0] * rec)
        if delete_input:
            run.delete()
        if not runs:
            return _dump(scratch.path("sorted"), np.zeros((0, run.arity), dtype=np.int64), run.width, stats)
        fan = cfg.fan_in()
        getter = itemgetter(*key)
        while len(runs) > 1:
            stats.merge_passes += 1
            nxt = []
            for s in range(0, len(runs), fan):
                group = runs[s:s + fan]
                if len(group) == 1:
                    nxt.append(group[0])
                    continue
                buf = max(1, cfg.budget_bytes // (len(group) + 1) // rec)
                w = RunWriter(scratch.path("merge"), run.arity, run.width, buf, stats)
                for r in heapq.merge(*(read_records(g, buf, stats) for g in group), key=getter):
                    w.write(r)
                nxt.append(w.close())
                for g in group:
                    g.delete()
            runs = nxt
        return runs[0]
    except OSError as e:
        raise EmError(f"external sort failed: {e}") from e


# -- mining pipeline --------------------------------------------------------

def _stream_index(idx: SuffixIndex, path, width, buf, stats) -> RunFile:
    """(SA[i] 0-based, LCP[i]) in rank order."""
    return write_run(path, np.column_stack([idx.sa, idx.lcp]), width, buf, stats)


def _partition_scan(src: RunFile, out_path, width, buf, stats, emit):
    w = None
    for chunk in read_chunks(src, buf, stats):
        rows = emit(chunk)
        if w is None:
            w = RunWriter(out_path, rows.shape[1], width, buf, stats)
        w.write_array(rows)
    return w.close()


class _Counter:
    """Running interval ids over a chunked LCP stream."""

    def __init__(self, depth: int):
        self.depth = depth
        self.last = None

    def step(self, lcp: np.ndarray) -> np.ndarray:
        cut = lcp < self.depth
        base = self.last
        if base is None:
            cut[0] = True
            base = 0
        out = base + np.cumsum(cut)
        if len(out):
            self.last = int(out[-1])
        return out


def mine_em(t: Text, tau: int, m: int, l: int, r: int, cfg: EmConfig | None = None,
            out=None, stats: IoStats | None = None) -> list:
    """Same records, in the same order, as ``mine_im``; optionally written to ``out``."""
    validate_params(t.n, tau, m, l, r)
    cfg = cfg or EmConfig()
    stats = stats if stats is not None else IoStats(block_bytes=cfg.block_bytes)
    stats.block_bytes = cfg.block_bytes
    n = t.n
    width = width_for(n + 2 + 256)
    scratch = Scratch(cfg)
    try:
        return _mine(t, tau, m, l, r, cfg, out, stats, n, width, scratch)
    except OSError as e:
        raise EmError(f"external mining failed: {e}") from e
    finally:
        scratch.cleanup()


def _mine(t, tau, m, l, r, cfg, out, stats, n, width, scratch):
    def blk(arity):
        return scan_records(cfg, arity * width)

    # Phase 1 (semi-external): SA/LCP of T and of its reverse, streamed out.
    fwd = _stream_index(SuffixIndex(t.codes), scratch.path("sa"), width, blk(2), stats)
    rev = _stream_index(SuffixIndex(reverse_text(t).codes), scratch.path("rsa"), width, blk(2), stats)

    # Phases 2-3: interval and subinterval ids over the SA of T.
    ids, sids, pos = _Counter(m), _Counter(m + r), [0]

    def four(chunk):
        k = len(chunk)
        rank = np.arange(pos[0] + 1, pos[0] + k + 1)
        pos[0] += k
        return np.column_stack([chunk[:, 0] + 1, rank,
                                ids.step(chunk[:, 1]), sids.step(chunk[:, 1])])

    t4 = _partition_scan(fwd, scratch.path("t4"), width, blk(4), stats, four)
    fwd.delete()

    # Phase 4: reverse intervals; the window at p (1-based) reads its left
    # flank from the reverse suffix at n + 1 - p.
    rids = _Counter(l)
    t2 = _partition_scan(rev, scratch.path("t2"), width, blk(2), stats,
                         lambda c: np.column_stack([n - c[:, 0], rids.step(c[:, 1])]))
    rev.delete()

    t4 = external_sort(t4, (0,), cfg, stats, scratch, delete_input=True)
    t2 = external_sort(t2, (0,), cfg, stats, scratch, delete_input=True)

    # Phase 5: merge-scan on text position.
    if t4.count != t2.count:
        raise EmError("forward and reverse tuple streams differ in length")
    w5 = RunWriter(scratch.path("t5"), 5, width, blk(5), stats)
    with closing(read_records(t4, blk(4), stats)) as s4, closing(read_records(t2, blk(2), stats)) as s2:
        for a, b in zip(s4, s2):
            if a[0] != b[0]:
                raise EmError("forward and reverse tuple streams do not cover the same positions")
            if a[0] <= n - m:
                w5.write((a[0], a[1], a[2], a[3], b[1]))
    t5 = w5.close()
    t4.delete()
    t2.delete()

    # Phase 6: group by (int, sint, rint), keeping the smallest rank per group.
    t5 = external_sort(t5, (2, 3, 4, 1), cfg, stats, scratch, delete_input=True)
    wd = RunWriter(scratch.path("distinct"), 2, width, blk(2), stats)
    prev = None
    for rec in read_records(t5, blk(5), stats):
        g = rec[2:5]
        if g != prev:
            wd.write((rec[2], rec[0]))
            prev = g
    distinct = wd.close()
    t5.delete()

    wc = RunWriter(scratch.path("counts"), 2, width, blk(2), stats)
    cur, c = None, 0
    for iid, _ in read_records(distinct, blk(2), stats):
        if iid != cur:
            if cur is not None:
                wc.write((cur, c))
            cur, c = iid, 0
        c += 1
    if cur is not None:
        wc.write((cur, c))
    counts = wc.close()

    # Keep the windows of frequent intervals, then attach flanks in text order.
    wk = RunWriter(scratch.path("kept"), 2, width, blk(2), stats)
    cid, cc = None, 0
    with closing(read_records(counts, blk(2), stats)) as cit:
        for iid, p in read_records(distinct, blk(2), stats):
            while cid is None or cid < iid:
                cid, cc = next(cit)
            if cc >= tau:
                wk.write((p, iid))
    kept = wk.close()
    distinct.delete()
    counts.delete()
    kept = external_sort(kept, (0,), cfg, stats, scratch, delete_input=True)

    arity = 2 + m + l + r
    wf = RunWriter(scratch.path("flanks"), arity, width, blk(arity), stats)
    codes = t.codes
    for p, iid in read_records(kept, blk(2), stats):
        i = p - 1
        left = codes[max(0, i - l):i] + 1
        right = codes[i + m:min(n, i + m + r)] + 1
        rec = [iid, 0] + codes[i:i + m].tolist()
        rec += left.tolist() + [0] * (l - len(left))
        rec += right.tolist() + [0] * (r - len(right))
        wf.write(rec)
    flanks = wf.close()
    kept.delete()
    key = (0,) + tuple(range(2 + m, arity))
    flanks = external_sort(flanks, key, cfg, stats, scratch, delete_input=True)

    result = []
    group_id, pat, ctx = None, None, []

    def emit():
        mp = MinedPattern(pat, tuple(ctx))
        result.append(mp)
        if out is not None:
            out.write(format_record(mp.pattern, mp.contexts))

    for rec in read_records(flanks, blk(arity), stats):
        if rec[0] != group_id:
            if group_id is not None:
                emit()
            group_id, pat, ctx = rec[0], tuple(rec[2:2 + m]), []
        L = tuple(c - 1 for c in rec[2 + m:2 + m + l] if c)
        R = tuple(c - 1 for c in rec[2 + m + l:] if c)
        ctx.append((L, R))
    if group_id is not None:
        emit()
    flanks.delete()
    return result

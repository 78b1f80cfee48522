import pytest

from ctxpattern.cli import EXIT_DATA, EXIT_MISMATCH, EXIT_USAGE, main, run_oracle_check
from ctxpattern.oracle import count_oracle
from ctxpattern.text import Text

EXAMPLE = "CTAAGAAGAATGAAC"
EXAMPLE_OUT = "AA\t4\n\tAG\tG\n\tAG\tT\n\tCT\tG\n\tTG\tC\n"


@pytest.fixture
def files(tmp_path):
    (tmp_path / "banana.txt").write_text("banana\n")
    (tmp_path / "ex1.txt").write_bytes(EXAMPLE.encode())
    return tmp_path


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_query_banana(files, capsys):
    idx = files / "b.idx"
    assert run(capsys, "index-build", "--text", files / "banana.txt", "--index-out", idx)[0] == 0
    assert run(capsys, "query", "--index-in", idx, "--pattern", "a", "--l", 1, "--r", 2)[1] == "3\n"
    assert run(capsys, "query", "--index-in", idx, "--pattern", "a", "--l", 1, "--r", 2,
               "--breakdown")[1] == "1\t0\t2\t3\n"
    assert run(capsys, "query", "--index-in", idx, "--pattern", "q", "--l", 0, "--r", 0)[1] == "0\n"


def test_mine_engines_agree(files, capsys):
    args = ["mine", "--text", files / "ex1.txt", "--tau", 3, "--m", 2, "--l", 2, "--r", 1]
    code, im, _ = run(capsys, *args, "--engine", "im")
    assert code == 0 and im == EXAMPLE_OUT
    code, em_out, _ = run(capsys, *args, "--engine", "em", "--budget-mb", 0.0625, "--block-kb", 1,
                          "--tmp-dir", files)
    assert code == 0 and em_out == im
    out_file = files / "out.tsv"
    assert run(capsys, *args, "--output", out_file)[0] == 0
    assert out_file.read_text() == EXAMPLE_OUT


def test_mine_huge_tau(files, capsys):
    code, out, _ = run(capsys, "mine", "--text", files / "ex1.txt", "--tau", 1000, "--m", 2, "--l", 1, "--r", 1)
    assert code == 0 and out == ""


def test_workload_matches_oracle(files, capsys):
    idx = files / "e.idx"
    run(capsys, "index-build", "--text", files / "ex1.txt", "--index-out", idx)
    code, out, _ = run(capsys, "workload", "--index-in", idx, "--m", 2, "--l", 1, "--r", 1)
    assert code == 0
    lines = out.splitlines()
    assert lines[-1].startswith("# queries=")
    t = Text.from_string(EXAMPLE)
    rows = [line.split("\t") for line in lines[:-1]]
    assert {p for p, _ in rows} == {EXAMPLE[i:i + 2] for i in range(len(EXAMPLE) - 1)}
    for p, c in rows:
        assert int(c) == count_oracle(t, p, 1, 1)
    pats = files / "pats.txt"
    pats.write_text("AA\nGA\nZZ\n")
    code, out, _ = run(capsys, "workload", "--index-in", idx, "--l", 2, "--r", 1, "--pattern-file", pats)
    assert out.splitlines()[:3] == ["AA\t4", "GA\t2", "ZZ\t0"]


def test_bound_exceeded(files, capsys):
    idx = files / "o.idx"
    run(capsys, "index-build", "--text", files / "ex1.txt", "--bound", 4, "--index-out", idx)
    assert run(capsys, "query", "--index-in", idx, "--pattern", "AA", "--l", 1, "--r", 1)[1] == "4\n"
    code, _, err = run(capsys, "query", "--index-in", idx, "--pattern", "AA", "--l", 2, "--r", 1)
    assert code == EXIT_DATA and "bound" in err


def test_lz77_command(files, capsys):
    (files / "phrases.txt").write_text("ATATAAATAAATAAA")
    code, out, _ = run(capsys, "lz77", "--text", files / "phrases.txt", "--bound", 3)
    assert code == 0
    starts, tprime = out.splitlines()
    assert starts == "1,2,3,6,8,16"
    assert "#" in tprime


def test_oracle_check(files, capsys):
    code, out, _ = run(capsys, "oracle-check", "--text", files / "ex1.txt", "--with-em", "--tmp-dir", files)
    assert code == 0 and "mismatches=0" in out


def test_oracle_report_flags_mismatch():
    rep = run_oracle_check(Text.from_string("abab"), 1, 1, 1, 1)
    assert rep.mismatches == 0
    rep.compare("forced", 1, 2)
    assert rep.mismatches == 1 and rep.lines


def test_oracle_check_exit_code(monkeypatch, files, capsys):
    from ctxpattern import cli

    def broken(*a, **k):
        rep = cli.OracleReport()
        rep.compare("x", 0, 1)
        return rep

    monkeypatch.setattr(cli, "run_oracle_check", broken)
    assert run(capsys, "oracle-check", "--text", files / "ex1.txt")[0] == EXIT_MISMATCH


@pytest.mark.parametrize("argv", [
    ["mine", "--text", "x", "--tau", "0", "--m", "2", "--l", "1", "--r", "1"],
    ["query", "--index-in", "x", "--pattern", "a", "--l", "-1", "--r", "0"],
    ["mine", "--text", "x"],
    ["nonsense"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as e:
        main(argv)
    assert e.value.code == EXIT_USAGE


def test_data_errors(files, capsys):
    assert run(capsys, "query", "--index-in", files / "missing.idx", "--pattern", "a", "--l", 0, "--r", 0)[0] == EXIT_DATA
    (files / "junk.idx").write_bytes(b"not an index")
    assert run(capsys, "query", "--index-in", files / "junk.idx", "--pattern", "a", "--l", 0, "--r", 0)[0] == EXIT_DATA
    assert run(capsys, "mine", "--text", files / "ex1.txt", "--tau", 1, "--m", 20, "--l", 0, "--r", 0)[0] == EXIT_DATA
    (files / "empty.txt").write_bytes(b"")
    assert run(capsys, "lz77", "--text", files / "empty.txt")[0] == EXIT_DATA


def test_bad_em_config_is_usage_error(files, capsys):
    code = run(capsys, "mine", "--text", files / "ex1.txt", "--tau", 1, "--m", 1, "--l", 0, "--r", 0,
               "--engine", "em", "--budget-mb", 0.001, "--block-kb", 4)[0]
    assert code == EXIT_USAGE


def test_scaling_command(capsys):
    code, out, _ = run(capsys, "scaling", "--sizes", 500, 1000, "--bounds", 4, 8, "--bound-n", 2000)
    assert code == 0
    assert out.splitlines()[0] == "n\tbuild_s\tus_per_letter"
    assert len(out.splitlines()) == 1 + 2 + 1 + 2

import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

import naive
from ctxpattern.cpm import (ParameterError, format_patterns, mine_im, partition_intervals, phase2_to_4,
                            phase5_merge, render_field, write_patterns)
from ctxpattern.oracle import cpm_oracle
from ctxpattern.text import Text, to_codes

EXAMPLE = "CTAAGAAGAATGAAC"
EXAMPLE_OUT = "AA\t4\n\tAG\tG\n\tAG\tT\n\tCT\tG\n\tTG\tC\n"


def test_example_output():
    out = mine_im(Text.from_string(EXAMPLE), 3, 2, 2, 1)
    assert format_patterns(out) == EXAMPLE_OUT
    buf = io.StringIO()
    write_patterns(out, buf)
    assert buf.getvalue() == EXAMPLE_OUT


def test_huge_tau_gives_nothing():
    assert mine_im(Text.from_string(EXAMPLE), 100, 2, 1, 1) == []


@pytest.mark.parametrize("args", [(0, 1, 0, 0), (1, 0, 0, 0), (1, 1, -1, 0), (1, 10, 0, 7), (1, 1, 16, 0)])
def test_parameter_errors(args):
    with pytest.raises(ParameterError):
        mine_im(Text.from_string(EXAMPLE), *args)


def test_partition_intervals():
    assert partition_intervals(np.array([0, 0, 1, 3, 0, 0, 2]), 2).tolist() == [1, 2, 3, 3, 4, 5, 5]
    assert partition_intervals(np.array([0, 5, 5]), 0).tolist() == [1, 1, 1]


def test_phases_on_banana():
    t = Text.from_string("banana")
    t4, t2 = phase2_to_4(t, 1, 1, 1)
    assert t4[:, 0].tolist() == [7, 6, 4, 2, 1, 5, 3]
    assert sorted(t2[:, 0].tolist()) == list(range(1, 8))
    t4 = t4[np.argsort(t4[:, 0])]
    t2 = t2[np.argsort(t2[:, 0])]
    t5 = phase5_merge(t4, t2, t.n, 1)
    assert t5[:, 0].tolist() == [1, 2, 3, 4, 5, 6]


def test_render_field_escapes():
    assert render_field(()) == "-"
    assert render_field(to_codes("a\tb\\")) == "a\\tb\\\\"
    assert render_field((0,)) == "$"


grid = st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(0, 3), st.integers(0, 3))


@given(st.text(alphabet="ACGT", min_size=1, max_size=80), grid)
def test_matches_oracle(s, params):
    t = Text.from_string(s)
    tau, m, l, r = params
    if m + r > t.n or l >= t.n:
        with pytest.raises(ParameterError):
            mine_im(t, tau, m, l, r)
        return
    assert mine_im(t, tau, m, l, r) == cpm_oracle(t, tau, m, l, r)
    assert format_patterns(mine_im(t, tau, m, l, r)) == naive.mine(s + "$", tau, m, l, r)

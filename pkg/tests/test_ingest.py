import datetime as dt
import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tradenet.ingest import (
    DirectedWeights,
    FlowRecord,
    IngestError,
    aggregate_directed,
    build_panel,
    parse_flows,
    read_node_list,
    spearman_in_out,
    symmetrize_max,
    weekly_bounds,
)

import oracles

HEADER = "reporter,partner,direction,period,value_usd\n"


def test_parse_row():
    out = parse_flows((HEADER + "USA,CAN,import,2019-03,1000.0\n").encode())
    assert out.records == [FlowRecord("USA", "CAN", "import", "2019-03", 1000.0)]


def test_self_loop_dropped_and_counted():
    out = parse_flows((HEADER + "USA,USA,export,2019-01,5\nUSA,CAN,export,2019-01,5\n").encode())
    assert out.self_loops == 1
    assert len(out.records) == 1


def test_negative_value_reports_row():
    text = HEADER + "USA,CAN,import,2019-03,1\nUSA,CAN,import,2019-03,-3\n"
    with pytest.raises(IngestError) as exc:
        parse_flows(text.encode())
    assert exc.value.row == 3


@pytest.mark.parametrize("row", [
    "USA,CAN,sideways,2019-03,1",
    "USA,CAN,import,2019-13,1",
    "USA,CA,import,2019-03,1",
    "USA,CAN,import,2019-03,abc",
    "USA,CAN,import,2019-03",
])
def test_malformed_rows(row):
    with pytest.raises(IngestError):
        parse_flows((HEADER + row + "\n").encode())


def test_header_mismatch_and_unreadable(tmp_path):
    with pytest.raises(IngestError, match="header"):
        parse_flows(b"a,b,c\n")
    with pytest.raises(IngestError, match="cannot read"):
        parse_flows(tmp_path / "missing.csv")


def test_window_and_node_filter():
    text = HEADER + "USA,CAN,import,2018-12,1\nUSA,CAN,import,2019-01,2\nUSA,MEX,import,2019-01,3\n"
    out = parse_flows(text.encode(), window=("2019-01", "2019-06"), nodes=["USA", "CAN"])
    assert [r.value for r in out.records] == [2.0]
    assert out.outside == 2


def test_node_list(tmp_path):
    p = tmp_path / "nodes.txt"
    p.write_text("USA\n# comment\n\nCAN\n")
    assert read_node_list(p) == ["USA", "CAN"]
    p.write_text("USA\nusa\n")
    with pytest.raises(IngestError):
        read_node_list(p)


def _rec(i, j, d, v, period="2019-01"):
    return FlowRecord(i, j, d, period, v)


def test_aggregate_average_when_both_positive():
    d = aggregate_directed([_rec("AAA", "BBB", "import", 4.0), _rec("AAA", "BBB", "export", 6.0)])
    assert d.weights[0, 1] == 5.0
    assert d.weights[1, 0] == 0.0


def test_aggregate_zero_when_one_side_missing():
    d = aggregate_directed([_rec("AAA", "BBB", "import", 4.0), _rec("AAA", "BBB", "export", 0.0)])
    assert d.weights[0, 1] == 0.0


def test_aggregate_sums_over_periods_and_empty():
    recs = [_rec("AAA", "BBB", "import", 1.0, "2019-01"), _rec("AAA", "BBB", "import", 3.0, "2019-02"),
            _rec("AAA", "BBB", "export", 2.0, "2019-01")]
    assert aggregate_directed(recs).weights[0, 1] == 3.0
    empty = aggregate_directed([], labels=["AAA", "BBB"])
    assert not empty.weights.any()


def test_aggregate_overflow_detected():
    recs = [_rec("AAA", "BBB", "import", 1.7e308), _rec("AAA", "BBB", "import", 1.7e308)]
    with pytest.raises(OverflowError):
        aggregate_directed(recs)


@settings(max_examples=30, deadline=None)
@given(st.permutations(list(range(12))))
def test_aggregate_permutation_invariant(perm):
    rng = np.random.default_rng(3)
    codes = ["AAA", "BBB", "CCC"]
    recs = [_rec(a, b, d, float(rng.integers(0, 50)))
            for a, b in itertools.permutations(codes, 2) for d in ("import", "export")]
    base = aggregate_directed(recs, codes).weights
    np.testing.assert_array_equal(aggregate_directed([recs[k] for k in perm], codes).weights, base)


def test_symmetrize_max_examples():
    w = np.array([[0, 3.0, 7.0], [5.0, 0, 0], [0, 0, 0]])
    net = symmetrize_max(DirectedWeights(("A", "B", "C"), w))
    assert net.weights[0, 1] == net.weights[1, 0] == 5.0
    assert net.weights[0, 2] == 7.0
    assert net.weights[1, 2] == 0.0


def test_symmetrize_keeps_isolated():
    w = np.zeros((3, 3))
    w[0, 1] = 1.0
    net = symmetrize_max(DirectedWeights(("A", "B", "C"), w))
    assert net.n == 3 and net.weights[2].sum() == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_symmetrize_properties(n, seed):
    rng = np.random.default_rng(seed)
    w = rng.exponential(size=(n, n)) * (rng.random((n, n)) < 0.6)
    np.fill_diagonal(w, 0.0)
    net = symmetrize_max(DirectedWeights(tuple(f"C{k}" for k in range(n)), w))
    W = net.weights
    np.testing.assert_array_equal(W, W.T)
    assert not np.diag(W).any()
    assert np.all(W >= w) and np.all(W >= w.T)
    assert np.all((W == w) | (W == w.T))


def _dw(s_in, s_out):
    # a directed weight matrix with prescribed in and out strengths is not
    # needed; spearman_in_out only reads the strength vectors
    class D:
        labels = tuple(range(len(s_in)))
        in_strength = np.asarray(s_in, dtype=float)
        out_strength = np.asarray(s_out, dtype=float)
    return D()


def test_spearman_examples():
    assert spearman_in_out(_dw([1, 2, 3], [2, 4, 6])) == pytest.approx(1.0)
    assert spearman_in_out(_dw([1, 2, 3], [3, 2, 1])) == pytest.approx(-1.0)
    with pytest.warns(RuntimeWarning):
        assert np.isnan(spearman_in_out(_dw([1, 1, 1], [1, 2, 3])))


@pytest.mark.parametrize("seed", range(5))
def test_spearman_matches_rank_oracle(seed):
    rng = np.random.default_rng(seed)
    w = rng.integers(0, 4, (10, 10)).astype(float)  # small integers force ties
    np.fill_diagonal(w, 0)
    d = DirectedWeights(tuple(f"C{k}" for k in range(10)), w)
    expected = oracles.spearman(w.sum(axis=0), w.sum(axis=1))
    assert spearman_in_out(d) == pytest.approx(expected, abs=1e-12)


EPI = "country,date,cases,deaths\n"
COV = "country,gdppc,pop,pop65,hbeds,temp\n"


def _panel_files(tmp_path, days=35, countries=("AAA", "BBB"), cov_rows=None):
    start = dt.date(2020, 3, 11)
    lines = [EPI]
    for c in countries:
        for d in range(days):
            lines.append(f"{c},{start + dt.timedelta(days=d)},{d + 1},{d % 3}\n")
    (tmp_path / "epi.csv").write_text("".join(lines))
    if cov_rows is None:
        cov_rows = [f"{c},1000,1e6,0.1,3,10\n" for c in countries]
    (tmp_path / "cov.csv").write_text(COV + "".join(cov_rows))
    return tmp_path / "epi.csv", tmp_path / "cov.csv"


def test_panel_week_sums(tmp_path):
    epi, cov = _panel_files(tmp_path)
    panel = build_panel(epi, cov, weekly_bounds("2020-03-11", 5))
    week1 = [o for o in panel.observations if o.country == "AAA" and o.week == 1][0]
    assert week1.infections == 28  # 1 + 2 + ... + 7
    assert len([o for o in panel.observations if o.country == "AAA"]) == 5


def test_panel_totals_preserved(tmp_path):
    epi, cov = _panel_files(tmp_path)
    panel = build_panel(epi, cov, weekly_bounds("2020-03-11", 5))
    for c in ("AAA", "BBB"):
        assert sum(o.infections for o in panel.observations if o.country == c) == sum(range(1, 36))
        assert sum(o.deaths for o in panel.observations if o.country == c) == sum(d % 3 for d in range(35))


def test_panel_excludes_missing_covariates(tmp_path):
    epi, cov = _panel_files(tmp_path, countries=("AAA", "BBB", "CCC"),
                            cov_rows=["AAA,1,1,0.1,1,1\n", "BBB,1,1,0.1,,1\n"])
    with pytest.warns(RuntimeWarning, match="BBB, CCC"):
        panel = build_panel(epi, cov, weekly_bounds("2020-03-11", 5))
    assert panel.excluded == ["BBB", "CCC"]
    assert panel.countries == ["AAA"]


def test_panel_rejects_overlap_and_bad_codes(tmp_path):
    epi, cov = _panel_files(tmp_path)
    with pytest.raises(IngestError, match="overlapping"):
        build_panel(epi, cov, [("2020-03-11", "2020-03-17"), ("2020-03-17", "2020-03-23")])
    (tmp_path / "bad.csv").write_text(EPI + "Aa1,2020-03-11,1,0\n")
    with pytest.raises(IngestError, match="country code"):
        build_panel(tmp_path / "bad.csv", cov, weekly_bounds("2020-03-11", 2))


def test_panel_universe_filter(tmp_path):
    epi, cov = _panel_files(tmp_path)
    panel = build_panel(epi, cov, weekly_bounds("2020-03-11", 5), countries=["AAA"])
    assert panel.countries == ["AAA"] and panel.dropped_outside == ["BBB"]

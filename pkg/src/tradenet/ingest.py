"""Parsing of trade, epidemic and covariate files into a network and a country-week panel."""

from __future__ import annotations

import csv
import datetime as dt
import io
import math
import re
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .graph import WeightedNetwork

__all__ = [
    "IngestError",
    "FlowRecord",
    "DirectedWeights",
    "PanelObservation",
    "ParsedFlows",
    "Panel",
    "parse_flows",
    "read_node_list",
    "aggregate_directed",
    "symmetrize_max",
    "spearman_in_out",
    "weekly_bounds",
    "build_panel",
    "write_panel_csv",
    "TRADE_HEADER",
    "EPIDEMIC_HEADER",
    "COVARIATE_HEADER",
]

TRADE_HEADER = ("reporter", "partner", "direction", "period", "value_usd")
EPIDEMIC_HEADER = ("country", "date", "cases", "deaths")
COVARIATE_HEADER = ("country", "gdppc", "pop", "pop65", "hbeds", "temp")
COVARIATES = COVARIATE_HEADER[1:]

_ISO3 = re.compile(r"^[A-Z]{3}$")
_PERIOD = re.compile(r"^(\d{4})-(\d{2})$")


class IngestError(ValueError):
    """Malformed input; ``row`` is the 1-based CSV line number when known."""

    def __init__(self, message, source=None, row=None):
        where = ""
        if source is not None:
            where += f"{source}"
        if row is not None:
            where += f":{row}" if where else f"row {row}"
        super().__init__(f"{where}: {message}" if where else message)
        self.source = source
        self.row = row


@dataclass(frozen=True)
class FlowRecord:
    reporter: str
    partner: str
    direction: str  # "import" or "export"
    period: str  # YYYY-MM
    value: float


@dataclass
class ParsedFlows:
    records: list[FlowRecord]
    self_loops: int = 0
    outside: int = 0  # rows dropped because the window or node list excludes them


@dataclass(frozen=True)
class DirectedWeights:
    """Dense directed weights ``w[i, j]`` (average of import and export when both exist)."""

    labels: tuple[str, ...]
    weights: np.ndarray = field(repr=False)

    @property
    def out_strength(self) -> np.ndarray:
        return self.weights.sum(axis=1)

    @property
    def in_strength(self) -> np.ndarray:
        return self.weights.sum(axis=0)


@dataclass(frozen=True)
class PanelObservation:
    country: str
    week: int
    infections: float
    deaths: float
    gdppc: float
    pop: float
    pop65: float
    hbeds: float
    temp: float


@dataclass
class Panel:
    observations: list[PanelObservation]
    excluded: list[str]  # countries dropped for missing covariates
    dropped_outside: list[str] = field(default_factory=list)

    @property
    def countries(self) -> list[str]:
        return sorted({o.country for o in self.observations})


def _open_text(file):
    if isinstance(file, (bytes, bytearray)):
        return io.StringIO(file.decode("utf-8")), "<bytes>"
    if hasattr(file, "read"):
        data = file.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return io.StringIO(data), getattr(file, "name", "<stream>")
    try:
        with open(file, encoding="utf-8", newline="") as fh:
            return io.StringIO(fh.read()), str(file)
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot read file: {exc}", source=str(file)) from exc


def _reader(file, header):
    fh, name = _open_text(file)
    rd = csv.reader(fh)
    try:
        got = next(rd)
    except StopIteration:
        raise IngestError("empty file", source=name) from None
    got = tuple(h.strip().lstrip("﻿") for h in got)
    if got != tuple(header):
        raise IngestError(f"header {','.join(got)!r} != {','.join(header)!r}", source=name, row=1)
    return rd, name


def _parse_period(text):
    m = _PERIOD.match(text)
    if not m or not 1 <= int(m.group(2)) <= 12:
        raise ValueError(f"bad period {text!r}, expected YYYY-MM")
    return int(m.group(1)), int(m.group(2))


def _code(text):
    text = text.strip()
    if not _ISO3.match(text):
        raise ValueError(f"bad country code {text!r}")
    return text


def parse_flows(file, window: tuple[str, str] | None = None, nodes: Iterable[str] | None = None) -> ParsedFlows:
    """Parse a trade CSV (``reporter,partner,direction,period,value_usd``).

    Parameters
    ----------
    file : path, bytes or file object
    window : (first, last) periods ``YYYY-MM``, inclusive; ``None`` keeps every row.
    nodes : closed set of country codes; rows touching other countries are dropped.

    Self-loop rows are dropped and counted. Any malformed row, including a
    negative value, raises :class:`IngestError` with its line number.
    """
    rd, name = _reader(file, TRADE_HEADER)
    lo = hi = None
    if window is not None:
        lo, hi = (_parse_period(p) for p in window)
        if lo > hi:
            raise IngestError(f"empty window {window}")
    keep = set(nodes) if nodes is not None else None
    out = ParsedFlows([])
    for lineno, row in enumerate(rd, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(TRADE_HEADER):
            raise IngestError(f"expected {len(TRADE_HEADER)} fields, got {len(row)}", name, lineno)
        try:
            rep, par = _code(row[0]), _code(row[1])
            direction = row[2].strip()
            if direction not in ("import", "export"):
                raise ValueError(f"bad direction {direction!r}")
            period = row[3].strip()
            ym = _parse_period(period)
            value = float(row[4])
        except ValueError as exc:
            raise IngestError(str(exc), name, lineno) from None
        if not math.isfinite(value):
            raise IngestError(f"non-finite value {row[4]!r}", name, lineno)
        if value < 0:
            raise IngestError(f"negative trade value {value}", name, lineno)
        if rep == par:
            out.self_loops += 1
            continue
        if (lo is not None and not lo <= ym <= hi) or (keep is not None and (rep not in keep or par not in keep)):
            out.outside += 1
            continue
        out.records.append(FlowRecord(rep, par, direction, period, value))
    return out


def read_node_list(file) -> list[str]:
    """One ISO3 code per line; blank lines and ``#`` comments ignored."""
    fh, name = _open_text(file)
    codes = []
    for lineno, line in enumerate(fh, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            codes.append(_code(line))
        except ValueError as exc:
            raise IngestError(str(exc), name, lineno) from None
    if len(set(codes)) != len(codes):
        raise IngestError("duplicate codes in node list", name)
    return codes


def aggregate_directed(records: Sequence[FlowRecord], labels: Sequence[str] | None = None) -> DirectedWeights:
    """Directed weights ``(imp + exp) / 2`` where both aggregates are positive, else 0.

    Import and export values are summed per ordered (reporter, partner)
    pair over all records. ``labels`` fixes the node set and order; by
    default every code seen as reporter or partner, sorted.
    """
    if labels is None:
        labels = sorted({r.reporter for r in records} | {r.partner for r in records})
    labels = tuple(labels)
    pos = {c: k for k, c in enumerate(labels)}
    n = len(labels)
    imp = np.zeros((n, n))
    exp = np.zeros((n, n))
    with np.errstate(over="ignore"):
        for r in records:
            i, j = pos[r.reporter], pos[r.partner]
            if r.direction == "import":
                imp[i, j] += r.value
            else:
                exp[i, j] += r.value
    if not (np.all(np.isfinite(imp)) and np.all(np.isfinite(exp))):
        raise OverflowError("trade value aggregation overflowed")
    both = (imp > 0) & (exp > 0)
    w = np.where(both, imp / 2.0 + exp / 2.0, 0.0)
    return DirectedWeights(labels, w)


def symmetrize_max(d: DirectedWeights) -> WeightedNetwork:
    """Undirected network with ``w_ij = max(w_ij, w_ji)``; isolated nodes are kept."""
    w = np.maximum(d.weights, d.weights.T)
    np.fill_diagonal(w, 0.0)
    return WeightedNetwork(d.labels, w)


def spearman_in_out(d: DirectedWeights) -> float:
    """Spearman correlation of in- and out-strengths (average ranks for ties).

    Returns ``nan`` with a warning when either vector is constant.
    """
    if len(d.labels) < 2:
        raise ValueError("need at least two nodes")
    s_in, s_out = d.in_strength, d.out_strength
    if np.ptp(s_in) == 0 or np.ptp(s_out) == 0:
        warnings.warn("constant strength vector; Spearman correlation undefined", RuntimeWarning, stacklevel=2)
        return float("nan")
    return float(stats.spearmanr(s_in, s_out).statistic)


def weekly_bounds(start: str | dt.date, n_weeks: int, days: int = 7) -> list[tuple[dt.date, dt.date]]:
    """Consecutive, inclusive ``(first_day, last_day)`` windows of ``days`` days."""
    if isinstance(start, str):
        start = dt.date.fromisoformat(start)
    return [
        (start + dt.timedelta(days=days * k), start + dt.timedelta(days=days * (k + 1) - 1))
        for k in range(n_weeks)
    ]


def _check_weeks(weeks):
    weeks = [(dt.date.fromisoformat(a) if isinstance(a, str) else a,
              dt.date.fromisoformat(b) if isinstance(b, str) else b) for a, b in weeks]
    if not weeks:
        raise IngestError("no week boundaries given")
    for a, b in weeks:
        if a > b:
            raise IngestError(f"week {a}..{b} ends before it starts")
    for (a0, b0), (a1, b1) in zip(weeks, weeks[1:]):
        if a1 <= b0:
            raise IngestError(f"overlapping weeks {a0}..{b0} and {a1}..{b1}")
    return weeks


def _read_covariates(file) -> dict[str, dict[str, float]]:
    rd, name = _reader(file, COVARIATE_HEADER)
    out: dict[str, dict[str, float]] = {}
    for lineno, row in enumerate(rd, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(COVARIATE_HEADER):
            raise IngestError(f"expected {len(COVARIATE_HEADER)} fields, got {len(row)}", name, lineno)
        try:
            code = _code(row[0])
        except ValueError as exc:
            raise IngestError(str(exc), name, lineno) from None
        vals = {}
        for key, cell in zip(COVARIATES, row[1:]):
            cell = cell.strip()
            if cell == "" or cell.upper() in ("NA", "NAN"):
                continue  # missing; the country is excluded later
            try:
                vals[key] = float(cell)
            except ValueError:
                raise IngestError(f"bad {key} value {cell!r}", name, lineno) from None
        if "pop" in vals and not vals["pop"] > 0:
            raise IngestError("pop must be positive", name, lineno)
        if "pop65" in vals and not 0 <= vals["pop65"] <= 1:
            raise IngestError("pop65 must be a share in [0, 1]", name, lineno)
        if code in out:
            raise IngestError(f"duplicate covariates for {code}", name, lineno)
        out[code] = vals
    return out


def build_panel(epidemic_file, covariate_file, weeks, countries: Iterable[str] | None = None) -> Panel:
    """Country-week panel of summed daily counts joined with covariates.

    Parameters
    ----------
    epidemic_file : CSV ``country,date,cases,deaths`` with daily counts.
    covariate_file : CSV ``country,gdppc,pop,pop65,hbeds,temp``.
    weeks : sequence of inclusive ``(first_day, last_day)`` pairs, non-overlapping.
    countries : optional universe; epidemic rows for other countries are dropped.

    Days outside every week are ignored. Countries without a complete
    covariate row are excluded and listed in ``Panel.excluded``.
    """
    weeks = _check_weeks(weeks)
    cov = _read_covariates(covariate_file)
    rd, name = _reader(epidemic_file, EPIDEMIC_HEADER)
    universe = set(countries) if countries is not None else None
    starts = [a for a, _ in weeks]
    counts: dict[str, np.ndarray] = {}
    dropped = set()
    for lineno, row in enumerate(rd, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(EPIDEMIC_HEADER):
            raise IngestError(f"expected {len(EPIDEMIC_HEADER)} fields, got {len(row)}", name, lineno)
        try:
            code = _code(row[0])
            day = dt.date.fromisoformat(row[1].strip())
            cases, deaths = float(row[2]), float(row[3])
        except ValueError as exc:
            raise IngestError(str(exc), name, lineno) from None
        if cases < 0 or deaths < 0 or not (math.isfinite(cases) and math.isfinite(deaths)):
            raise IngestError("counts must be finite and non-negative", name, lineno)
        if universe is not None and code not in universe:
            dropped.add(code)
            continue
        acc = counts.setdefault(code, np.zeros((len(weeks), 2)))
        k = int(np.searchsorted(starts, day, side="right")) - 1
        if k >= 0 and day <= weeks[k][1]:
            acc[k, 0] += cases
            acc[k, 1] += deaths
    obs = []
    excluded = []
    for code in sorted(counts):
        vals = cov.get(code)
        if vals is None or any(key not in vals for key in COVARIATES):
            excluded.append(code)
            continue
        for k in range(len(weeks)):
            obs.append(PanelObservation(code, k + 1, counts[code][k, 0], counts[code][k, 1], **vals))
    if excluded:
        warnings.warn(f"excluded for missing covariates: {', '.join(excluded)}", RuntimeWarning, stacklevel=2)
    return Panel(obs, excluded, sorted(dropped))


def write_panel_csv(panel: Panel, path) -> None:
    cols = ("country", "week", "infections", "deaths") + COVARIATES
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(cols)
        for o in panel.observations:
            wr.writerow([o.country, o.week] + [repr(float(getattr(o, c))) for c in cols[2:]])

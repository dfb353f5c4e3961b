"""Synthetic 55-country dataset for end-to-end runs.

Trade follows a gravity-style model with regional blocs so that the
communicability communities have something to find; roughly 6% of
country pairs never trade, giving a density in the low 0.9s. Epidemic
counts are drawn from an NB2 model with a planted positive effect of
the weighted clustering coefficient.
"""

from __future__ import annotations

import datetime as dt
from pathlib import Path

import numpy as np

from .centrality import onnela_clustering
from .ingest import aggregate_directed, parse_flows, symmetrize_max

COUNTRIES = (
    "ARM AUS AZE BEL BLZ BIH CAN HRV CYP CZE DNK ECU EGY SLV EST FIN GMB GEO DEU "
    "GRC GTM GUY HUN ISL IND IRL ISR ITA JPN KGZ LVA LTU LUX MNE NLD NZL NOR PAK "
    "PRY PHL PRT MDA ROU SRB SVK SVN ZAF ESP SWE CHE MKD UKR GBR USA UZB"
).split()

BLOCS = {
    "pacific": "AUS CAN JPN NZL PHL USA",
    "core": "BEL CHE CZE DEU ESP GBR HUN IRL ITA NLD PRT SVK LUX",
    "balkan": "BIH HRV MNE SRB SVN MKD",
    "nordic": "DNK EST FIN LTU LVA NOR SWE ISL",
    "caucasus": "ARM AZE GEO",
}

LARGE = {"USA": 9.0, "DEU": 6.0, "JPN": 5.0, "GBR": 4.0, "ITA": 3.5, "CAN": 3.5, "IND": 3.0, "ESP": 2.5, "NLD": 2.5}

TRADE_PERIODS = [f"2019-{m:02d}" for m in range(1, 7)]
WEEK_START = "2020-03-11"
N_WEEKS = 5

# planted effects on the z-scored regressors (log scale)
EFFECTS = {"clustering": 0.45, "gdppc": 0.15, "pop": 0.0, "pop65": 0.25, "hbeds": -0.2, "temp": 0.0}
ALPHA = {"infections": 1.0, "deaths": 1.4}
BASE = {"infections": 6.5, "deaths": 3.5}


def _bloc_of():
    out = {}
    for name, members in BLOCS.items():
        for c in members.split():
            out[c] = name
    return out


def trade_weights(rng) -> np.ndarray:
    """Symmetric 'true' bilateral trade volumes in US dollars."""
    n = len(COUNTRIES)
    bloc = _bloc_of()
    mass = rng.lognormal(0.0, 0.8, n)
    for k, c in enumerate(COUNTRIES):
        mass[k] *= LARGE.get(c, 1.0)
    w = np.outer(mass, mass) * rng.lognormal(0.0, 0.4, (n, n))
    w = np.sqrt(w * w.T)
    for i, a in enumerate(COUNTRIES):
        for j, b in enumerate(COUNTRIES):
            if a in bloc and bloc.get(b) == bloc[a]:
                w[i, j] *= 25.0
    w *= 1e8
    absent = np.triu(rng.random((n, n)) < 0.06, 1)
    w[absent | absent.T] = 0.0
    np.fill_diagonal(w, 0.0)
    return w


def write_trade_csv(path, rng) -> None:
    w = trade_weights(rng)
    n = len(COUNTRIES)
    share = rng.dirichlet(np.full(len(TRADE_PERIODS), 20.0))
    lines = ["reporter,partner,direction,period,value_usd"]
    for i in range(n):
        for j in range(n):
            if i == j or w[i, j] == 0:
                continue
            # a few reporters skip one direction for a partner
            gap = rng.random()
            for direction in ("import", "export"):
                if gap < 0.03 and direction == "export":
                    continue
                noise = rng.lognormal(0.0, 0.15)
                for p, s in zip(TRADE_PERIODS, share):
                    lines.append(f"{COUNTRIES[i]},{COUNTRIES[j]},{direction},{p},{w[i, j] * s * noise:.2f}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _covariates(rng) -> dict[str, np.ndarray]:
    n = len(COUNTRIES)
    return {
        "gdppc": rng.lognormal(9.8, 0.8, n),
        "pop": rng.lognormal(16.0, 1.4, n),
        "pop65": rng.uniform(0.03, 0.28, n),
        "hbeds": rng.uniform(0.6, 13.4, n),
        "temp": rng.uniform(-20.0, 26.8, n),
    }


def _z(x):
    return (x - x.mean()) / x.std(ddof=1)


def write_epidemic_files(epi_path, cov_path, clustering: np.ndarray, rng) -> None:
    cov = _covariates(rng)
    lines = ["country,gdppc,pop,pop65,hbeds,temp"]
    for k, c in enumerate(COUNTRIES):
        lines.append(f"{c},{cov['gdppc'][k]:.2f},{cov['pop'][k]:.0f},{cov['pop65'][k]:.4f},"
                     f"{cov['hbeds'][k]:.3f},{cov['temp'][k]:.2f}")
    Path(cov_path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    lin = EFFECTS["clustering"] * _z(clustering)
    for name in ("gdppc", "pop", "pop65", "hbeds", "temp"):
        lin = lin + EFFECTS[name] * _z(cov[name])
    trend = np.linspace(0.0, 1.2, N_WEEKS)
    start = dt.date.fromisoformat(WEEK_START)
    daily = {}
    for resp in ("infections", "deaths"):
        a = ALPHA[resp]
        mu = np.exp(BASE[resp] + lin[:, None] + trend[None, :])
        weekly = rng.negative_binomial(1.0 / a, 1.0 / (1.0 + a * mu))
        daily[resp] = np.stack([rng.multinomial(weekly[i, t], np.full(7, 1 / 7))
                                for i in range(len(COUNTRIES)) for t in range(N_WEEKS)])
    lines = ["country,date,cases,deaths"]
    for i, c in enumerate(COUNTRIES):
        for t in range(N_WEEKS):
            row = i * N_WEEKS + t
            for d in range(7):
                day = start + dt.timedelta(days=7 * t + d)
                lines.append(f"{c},{day.isoformat()},{daily['infections'][row, d]},{daily['deaths'][row, d]}")
    Path(epi_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_fixture(directory, seed: int = 0) -> dict[str, Path]:
    """Write nodes, trade, epidemic and covariate files; return their paths."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    paths = {
        "node_list": directory / "nodes.txt",
        "trade_file": directory / "trade.csv",
        "epidemic_file": directory / "epidemic.csv",
        "covariate_file": directory / "covariates.csv",
    }
    paths["node_list"].write_text("\n".join(COUNTRIES) + "\n", encoding="utf-8")
    write_trade_csv(paths["trade_file"], rng)
    parsed = parse_flows(paths["trade_file"], nodes=COUNTRIES)
    net = symmetrize_max(aggregate_directed(parsed.records, COUNTRIES))
    write_epidemic_files(paths["epidemic_file"], paths["covariate_file"], onnela_clustering(net), rng)
    return paths

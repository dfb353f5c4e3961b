"""File-to-file pipeline steps behind the ``tradenet`` command line.

Each step reads the artifacts its predecessor wrote into ``out_dir`` and
writes its own; outputs are deterministic for a fixed config and seed.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from . import centrality as cen
from . import community as com
from .communicability import communicability, distance_extremes, write_matrix_csv
from .config import PipelineConfig
from .econometrics import (
    ConvergenceError,
    build_design,
    fit_negbin,
    fit_poisson,
    fit_report,
    overdispersion_test,
    vif,
)
from .graph import (
    global_indicators,
    isolated_nodes,
    read_adjacency_json,
    write_adjacency_json,
    write_edge_list,
)
from .ingest import (
    aggregate_directed,
    build_panel,
    parse_flows,
    read_node_list,
    spearman_in_out,
    symmetrize_max,
    weekly_bounds,
    write_panel_csv,
)

__all__ = [
    "cmd_build_network",
    "cmd_stats",
    "cmd_communities",
    "cmd_centrality",
    "cmd_regress",
    "cmd_report",
    "detect_communities",
]

ADJACENCY = "adjacency.json"
MEMBERSHIP = "membership.csv"


def _clean(obj):
    """Replace non-finite floats by None and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(obj), fh, indent=2, allow_nan=False)
        fh.write("\n")


def _read_json(path: Path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _out(cfg: PipelineConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _need(path: Path, producer: str) -> Path:
    if not path.is_file():
        from .config import ConfigError

        raise ConfigError(f"{path} not found; run `tradenet {producer}` first")
    return path


def cmd_build_network(cfg: PipelineConfig) -> dict:
    """Trade CSV -> edge list, adjacency JSON and global indicators."""
    cfg.require("trade_file", "node_list")
    nodes = read_node_list(cfg.node_list)
    parsed = parse_flows(cfg.trade_file, window=cfg.window, nodes=nodes)
    directed = aggregate_directed(parsed.records, nodes)
    net = symmetrize_max(directed)
    out = _out(cfg)
    write_edge_list(net, out / "network_edges.csv")
    write_adjacency_json(net, out / ADJACENCY)
    report = {
        "year": cfg.year,
        **global_indicators(net).as_dict(),
        "spearman_in_out": spearman_in_out(directed),
        "records": len(parsed.records),
        "self_loops_dropped": parsed.self_loops,
        "rows_outside": parsed.outside,
        "isolated": [net.labels[i] for i in isolated_nodes(net)],
    }
    _write_json(out / "indicators.json", report)
    return report


def cmd_stats(cfg: PipelineConfig) -> dict:
    """Global indicators of an already built network."""
    out = _out(cfg)
    net = read_adjacency_json(_need(out / ADJACENCY, "build-network"))
    report = global_indicators(net).as_dict()
    s = net.weights.sum(axis=1)
    report["strength"] = {"mean": float(s.mean()), "max": float(s.max()), "min": float(s.min())}
    _write_json(out / "stats.json", report)
    return report


def detect_communities(net, mode: str = "weighted", tie_tol: float = 1e-12):
    """Threshold-optimal communities on the non-isolated nodes.

    Isolated nodes are excluded from the communicability computation and
    come back as singleton communities. Returns ``(partition, res, keep)``
    with ``partition.membership`` over all nodes of ``net``.
    """
    iso = set(isolated_nodes(net).tolist())
    keep = np.array([i for i in range(net.n) if i not in iso], dtype=int)
    sub = net.subgraph(keep)
    res = communicability(sub, mode)
    part = com.optimize_threshold(res.Xi, tie_tol=tie_tol)
    full = np.empty(net.n, dtype=int)
    full[keep] = part.membership
    nxt = part.membership.max() + 1 if keep.size else 0
    for k, i in enumerate(sorted(iso)):
        full[i] = nxt + k
    membership = com.relabel_first_appearance(full)
    return com.CommunityPartition(part.threshold, membership, part.q_value, part.community_graph), res, keep


def _write_membership(path: Path, labels, membership) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["country", "community_id"])
        for lab, c in zip(labels, membership):
            wr.writerow([lab, int(c)])


def _read_membership(path: Path, labels) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = {r["country"]: int(r["community_id"]) for r in csv.DictReader(fh)}
    missing = [lab for lab in labels if lab not in rows]
    if missing:
        raise ValueError(f"membership file lacks: {', '.join(missing)}")
    return np.array([rows[lab] for lab in labels])


def cmd_communities(cfg: PipelineConfig) -> dict:
    """Communicability distance, optimal threshold communities and the Louvain baseline."""
    out = _out(cfg)
    net = read_adjacency_json(_need(out / ADJACENCY, "build-network"))
    part, res, keep = detect_communities(net, cfg.mode, cfg.tie_tol)
    ext = distance_extremes(res)
    louv = com.louvain(net, seed=cfg.seed)
    comparison = com.compare_partitions(part.membership, louv, net.labels)
    comparison["methods"] = {"a": "communicability", "b": "louvain"}
    report = {
        "year": cfg.year,
        "mode": cfg.mode,
        "xi_min_pair": list(ext["min_pair"]),
        "xi_min": ext["min_value"],
        "xi_max_pair": list(ext["max_pair"]),
        "xi_max": ext["max_value"],
        "xi0_star": part.threshold,
        "q_star": part.q_value,
        "n_communities": int(part.membership.max()) + 1,
        "n_nonsingleton": comparison["a"]["n_nonsingleton"],
        "n_isolated": comparison["a"]["n_isolated"],
        "louvain_modularity": com.modularity(net, louv),
        "communicability_modularity": com.modularity(net, part.membership),
    }
    _write_membership(out / MEMBERSHIP, net.labels, part.membership)
    _write_membership(out / "louvain_membership.csv", net.labels, louv)
    _write_json(out / "communities.json", report)
    _write_json(out / "comparison.json", comparison)
    if cfg.dump_matrices:
        labels = [net.labels[i] for i in keep]
        write_matrix_csv(res.G, labels, out / "communicability_G.csv")
        write_matrix_csv(res.Xi, labels, out / "communicability_Xi.csv")
    return report


def cmd_centrality(cfg: PipelineConfig) -> dict:
    """Centrality table and per-measure summary statistics for the built network."""
    out = _out(cfg)
    net = read_adjacency_json(_need(out / ADJACENCY, "build-network"))
    mem_path = out / MEMBERSHIP
    membership = _read_membership(mem_path, net.labels) if mem_path.is_file() else None
    table = cen.centrality_table(net, membership)
    cen.write_centrality_csv(table, out / "centrality.csv")
    summary = cen.summary_statistics(table)
    summary["strength_1e9"] = {k: v / 1e9 for k, v in summary["strength"].items()}
    _write_json(out / "centrality_summary.json", summary)
    return summary


def _fit_one(panel, tnc_values: dict, tnc: str, response: str) -> dict:
    design = build_design(panel, tnc_values, tnc, response)
    try:
        nb = fit_negbin(design)
        lr = overdispersion_test(design, fit_poisson(design), nb)
    except (ConvergenceError, np.linalg.LinAlgError) as exc:
        return {"response": response, "tnc": tnc, "converged": False, "error": str(exc)}
    rep = fit_report(nb, vif(design), lr)
    return {"response": response, "tnc": tnc, **rep}


def cmd_regress(cfg: PipelineConfig) -> dict:
    """Negative binomial fits per centrality measure and response."""
    cfg.require("epidemic_file", "covariate_file")
    out = _out(cfg)
    table = cen.read_centrality_csv(_need(out / "centrality.csv", "centrality"))
    nodes = read_node_list(cfg.node_list) if cfg.node_list is not None else list(table.labels)
    weeks = weekly_bounds(cfg.week_start, cfg.n_weeks)
    panel = build_panel(cfg.epidemic_file, cfg.covariate_file, weeks, countries=nodes)
    write_panel_csv(panel, out / "panel.csv")
    values = {name: dict(zip(table.labels, table.column(name).tolist()))
              for name in set(cfg.models) | {"clustering", "community_clustering"}}
    fits_dir = out / "fits"
    fits_dir.mkdir(exist_ok=True)
    reports = []
    for response in cfg.responses:
        for tnc in cfg.models:
            rep = _fit_one(panel, values[tnc], tnc, response)
            _write_json(fits_dir / f"{response}__{tnc}.json", rep)
            reports.append(rep)
    ranking = {}
    for response in cfg.responses:
        ok = [r for r in reports if r["response"] == response and r.get("converged")]
        ranking[response] = [
            {"tnc": r["tnc"], "aic": r["aic"], "bic": r["bic"], "pseudo_r2": r["pseudo_r2"]}
            for r in sorted(ok, key=lambda r: (r["aic"], r["tnc"]))
        ]
    _write_json(out / "ranking.json", ranking)
    cc_fits = {}
    for response in cfg.responses:
        cc_fits[response] = {
            tnc: _fit_one(panel, values[tnc], tnc, response) for tnc in ("clustering", "community_clustering")
        }
    _write_json(out / "community_clustering_fits.json", cc_fits)
    failed = [f"{r['response']}/{r['tnc']}" for r in reports if not r.get("converged")]
    summary = {
        "n_panel_rows": len(panel.observations),
        "n_fits": len(reports),
        "excluded_countries": panel.excluded,
        "failed": failed,
        "ranking": ranking,
    }
    _write_json(out / "regress.json", summary)
    return summary


def cmd_report(cfg: PipelineConfig) -> dict:
    """Run every step and collect the headline numbers in ``report.json``."""
    net = cmd_build_network(cfg)
    comm = cmd_communities(cfg)
    cmd_centrality(cfg)
    reg = cmd_regress(cfg)
    summary = {"network": net, "communities": comm, "regress": reg}
    _write_json(_out(cfg) / "report.json", summary)
    return summary

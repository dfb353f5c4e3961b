"""Pipeline configuration read from an INI-style ``[tradenet]`` section.

Example::

    [tradenet]
    trade_file = data/trade.csv
    node_list = data/nodes.txt
    epidemic_file = data/epidemic.csv
    covariate_file = data/covariates.csv
    window = 2019-01 2019-06
    year = 2019
    week_start = 2020-03-11
    n_weeks = 5
    models = degree betweenness clustering eigenvector strength
    responses = infections deaths
    out_dir = out
    seed = 0

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

__all__ = ["PipelineConfig", "ConfigError", "load_config", "TNC_COLUMNS"]

TNC_COLUMNS = ("degree", "betweenness", "clustering", "eigenvector", "strength")
RESPONSES = ("infections", "deaths")
SECTION = "tradenet"
_FILES = ("trade_file", "node_list", "epidemic_file", "covariate_file")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    trade_file: Path | None = None
    node_list: Path | None = None
    epidemic_file: Path | None = None
    covariate_file: Path | None = None
    window: tuple[str, str] | None = None
    year: str = ""
    week_start: str = "2020-03-11"
    n_weeks: int = 5
    mode: str = "weighted"
    tie_tol: float = 1e-12
    dump_matrices: bool = False
    models: tuple[str, ...] = TNC_COLUMNS
    responses: tuple[str, ...] = RESPONSES
    out_dir: Path = Path("out")
    seed: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def with_overrides(self, **kw) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def require(self, *names: str) -> None:
        """Raise ConfigError unless every named file is set and exists."""
        for name in names:
            path = getattr(self, name)
            if path is None:
                raise ConfigError(f"{name} is not configured")
            if not Path(path).is_file():
                raise ConfigError(f"{name} not found: {path}")


def _words(text: str) -> tuple[str, ...]:
    return tuple(text.replace(",", " ").split())


def load_config(path) -> PipelineConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if SECTION not in cp:
        raise ConfigError(f"{path}: missing [{SECTION}] section")
    sec = cp[SECTION]
    base = path.parent
    kw: dict = {}
    for name in _FILES:
        if name in sec:
            kw[name] = base / sec[name]
    if "out_dir" in sec:
        kw["out_dir"] = base / sec["out_dir"]
    if "window" in sec:
        w = _words(sec["window"])
        if len(w) != 2:
            raise ConfigError("window needs two periods: first last")
        kw["window"] = (w[0], w[1])
    for key in ("year", "week_start", "mode"):
        if key in sec:
            kw[key] = sec[key]
    for key, get in (("n_weeks", sec.getint), ("seed", sec.getint),
                     ("tie_tol", sec.getfloat), ("dump_matrices", sec.getboolean)):
        if key in sec:
            try:
                kw[key] = get(key)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {key}: {exc}") from exc
    if "models" in sec:
        kw["models"] = _words(sec["models"])
    if "responses" in sec:
        kw["responses"] = _words(sec["responses"])
    known = set(PipelineConfig.__dataclass_fields__)
    kw["extra"] = {k: v for k, v in sec.items() if k not in known}
    cfg = PipelineConfig(**kw)
    _validate(cfg)
    return cfg


def _validate(cfg: PipelineConfig) -> None:
    bad = [m for m in cfg.models if m not in TNC_COLUMNS]
    if bad:
        raise ConfigError(f"unknown models: {', '.join(bad)}")
    if not cfg.models:
        raise ConfigError("at least one model is required")
    bad = [r for r in cfg.responses if r not in RESPONSES]
    if bad:
        raise ConfigError(f"unknown responses: {', '.join(bad)}")
    if cfg.mode not in ("weighted", "binary"):
        raise ConfigError(f"unknown communicability mode {cfg.mode!r}")
    if cfg.n_weeks < 2:
        raise ConfigError("n_weeks must be at least 2")

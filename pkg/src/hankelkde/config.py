"""Flat `key = value` run configuration.

Complex numbers are written `re,im`; lists separate items with `;`. Example::

    sigma = 1.0
    R = 10
    nodes = 0.5,0.2; -0.3,0.9
    coeffs = 1,0; 2,0
    regions = -0.8,0.4,-1.4,-0.4; -0.1,0.6,0.5,1.3
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from hankelkde.pencil import Region
from hankelkde.signal import ExponentialModel, paper_model

PAPER_REGIONS = (
    Region(-0.8, 0.4, -1.4, -0.4),
    Region(-0.1, 0.6, 0.5, 1.3),
)


# alternative key spellings accepted on input
ALIASES = {"literal_eq51": "literal_operator"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    sigma: float = 1.0
    n: int = 74
    coeffs: list | None = None  # None selects the five-component test model
    nodes: list | None = None
    R: int = 10
    regions: list = field(default_factory=lambda: list(PAPER_REGIONS))
    mx: int = 64
    my: int = 64
    gamma: float = 1.6
    phi: float = 0.02
    rel_tol: float = 1e-3
    abs_tol: float = 1e-6
    seed: int = 1
    out: str = "out"
    literal_operator: bool = False
    per_point_delta: bool = False
    baseline: bool = True
    mc_trials: int = 0
    threads: int = 1
    maxima_threshold: float = 0.1
    mixing_fraction: float = 0.05
    eg_support: float = 10.0
    iterations: int = 1

    def model(self) -> ExponentialModel:
        if self.nodes is None and self.coeffs is None:
            return paper_model(self.sigma, self.n)
        if self.nodes is None or self.coeffs is None:
            raise ConfigError("nodes and coeffs must be given together")
        return ExponentialModel(np.array(self.coeffs), np.array(self.nodes), self.n, self.sigma)

    def validate(self) -> "RunConfig":
        try:
            self.model()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.R < 1:
            raise ConfigError("R must be >= 1")
        if self.mx < 8 or self.my < 8:
            raise ConfigError("grid needs at least 8 nodes per axis")
        if not self.regions:
            raise ConfigError("at least one region is required")
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ConfigError("solver tolerances must be positive")
        return self


def _complex_list(text: str) -> list:
    out = []
    for item in text.split(";"):
        item = item.strip()
        if not item:
            continue
        parts = [float(v) for v in item.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"complex value must be `re,im`: {item!r}")
        out.append(complex(parts[0], parts[1]))
    return out


def _regions(text: str) -> list:
    out = []
    for item in text.split(";"):
        if item.strip():
            vals = [float(v) for v in item.split(",")]
            if len(vals) != 4:
                raise ConfigError(f"region must be `xmin,xmax,ymin,ymax`: {item!r}")
            out.append(Region(*vals))
    return out


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def parse_config(text: str) -> RunConfig:
    types = {f.name: f.type for f in fields(RunConfig)}
    kw = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected `key = value`")
        key, value = (s.strip() for s in line.split("=", 1))
        key = ALIASES.get(key, key)
        if key not in types:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in ("coeffs", "nodes"):
                kw[key] = _complex_list(value)
            elif key == "regions":
                kw[key] = _regions(value)
            elif types[key] in ("bool", bool):
                kw[key] = _bool(value)
            elif types[key] in ("int", int):
                kw[key] = int(value)
            elif types[key] in ("float", float):
                kw[key] = float(value)
            else:
                kw[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from exc
    return RunConfig(**kw).validate()


def load_config(path) -> RunConfig:
    text = Path(path).read_text()
    if not text.strip():
        raise ConfigError(f"{path} is empty")
    return parse_config(text)


def dump_config(cfg: RunConfig) -> str:
    lines = []
    for f in fields(RunConfig):
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if f.name in ("coeffs", "nodes"):
            v = "; ".join(f"{float(complex(c).real)!r},{float(complex(c).imag)!r}" for c in v)
        elif f.name == "regions":
            v = "; ".join(f"{r.x_min},{r.x_max},{r.y_min},{r.y_max}" for r in v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"

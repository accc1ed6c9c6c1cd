"""Run configuration: defaults, ``key = value`` files, and flag overrides.

Resolution order is dataclass defaults, then a config file, then command
line flags.  Every output file echoes the resolved configuration as
``# key = value`` comment lines, which :func:`parse_config_lines` reads
back.
"""
from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path

ALGORITHMS = ("sisr", "lw1", "lw2", "swarm", "pmmh")
THETA_SOURCES = ("posterior", "uniform", "mean", "fixed")

# particles per filter (per bundle for the swarm)
DEFAULT_PARTICLES = {"sisr": 100, "lw1": 500, "lw2": 500, "swarm": 100, "pmmh": 100}
DEFAULT_THRESHOLD = {"sisr": 0.5, "lw1": 0.5, "lw2": 0.5, "swarm": 1.0, "pmmh": 0.5}
DEFAULT_THETA_SOURCE = {"sisr": "mean", "lw1": "uniform", "lw2": "uniform", "swarm": "posterior"}


@dataclass
class RunConfig:
    algorithm: str = "sisr"
    n_particles: int | None = None
    n_theta: int = 100
    delta: float = 0.99
    resample_threshold: float | None = None
    weighting: str = "uniform"
    seed: int = 0
    n_replicates: int = 7
    n_iterations: int = 2000
    proposal_scale: float = 2.38**2 / 4.0
    chains: int = 4
    burn_in: float = 0.1
    thin: int = 1
    max_lag: int = 50
    theta_source: str | None = None
    theta_samples: str | None = None
    theta_fixed: str | None = None
    cutoff_year: int = 2010
    lw_replicates: int = 20
    workers: int = 1
    input: str | None = None
    output: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.theta_source is not None and self.theta_source not in THETA_SOURCES:
            raise ValueError(f"theta_source must be one of {THETA_SOURCES}")
        for name in ("n_theta", "n_replicates", "chains", "thin", "lw_replicates", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_particles is not None and self.n_particles < 1:
            raise ValueError("n_particles must be positive")
        if self.n_iterations < 0:
            raise ValueError("n_iterations must be >= 0")
        if not 0.0 <= self.burn_in < 1.0:
            raise ValueError("burn_in is a fraction in [0, 1)")

    @property
    def particles(self) -> int:
        return self.n_particles or DEFAULT_PARTICLES[self.algorithm]

    @property
    def threshold(self) -> float:
        if self.resample_threshold is not None:
            return self.resample_threshold
        return DEFAULT_THRESHOLD[self.algorithm]

    @property
    def source(self) -> str:
        return self.theta_source or DEFAULT_THETA_SOURCE.get(self.algorithm, "posterior")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    def items(self):
        for f in dataclasses.fields(self):
            yield f.name, getattr(self, f.name)


def _field_types():
    out = {}
    for f in dataclasses.fields(RunConfig):
        t = str(f.type)
        out[f.name] = int if t.startswith("int") else float if t.startswith("float") else str
    return out


_TYPES = _field_types()


def _convert(key, text):
    if key not in _TYPES:
        raise ValueError(f"unknown config key {key!r}")
    text = text.strip()
    if text in ("", "None"):
        return None
    conv = _TYPES[key]
    if conv is int:
        return int(text)
    return conv(text)


def parse_config_lines(lines) -> dict:
    """Parse ``key = value`` lines (``#`` prefixes from echo headers are stripped)."""
    body = []
    for ln in lines:
        s = ln.strip()
        if s.startswith("#"):
            # comment lines count only when they look like an echoed setting
            s = s.lstrip("#").strip()
            if s.partition("=")[0].strip() not in _TYPES:
                continue
        if "=" in s:
            body.append(s)
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=(";",))
    cp.optionxform = str
    cp.read_string("[run]\n" + "\n".join(body))
    return {k: _convert(k, v) for k, v in cp["run"].items() if k != "command"}


def load_config(path) -> dict:
    return parse_config_lines(Path(path).read_text().splitlines())


def format_value(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def echo_lines(config: RunConfig, command: str | None = None) -> list[str]:
    lines = [f"# command = {command}"] if command else []
    return lines + [f"# {k} = {format_value(v)}" for k, v in config.items()]


def resolve(file_values: dict | None = None, **flags) -> RunConfig:
    """Defaults < config file < flags (``None`` flags are ignored)."""
    merged = {}
    for src in (file_values or {}), flags:
        merged.update({k: v for k, v in src.items() if v is not None and k in _TYPES})
    return RunConfig(**merged)

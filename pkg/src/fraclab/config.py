"""Experiment configuration: parsing, validation, canonical form and hash."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field, fields

import yaml

from .errors import ConfigError
from .geometry import Interval, domain_from_config, field_from_config
from .genericity import MODES, SimplificationPlan
from .problem import Problem
from .scalar_fields import scalar_from_config

COMMANDS = ("spectrum", "pohozaev", "hadamard-check", "simplify")
METHODS = ("auto", "spectral", "grid")
# paths do not change results, so they stay out of the hash
UNHASHED = ("output", "report")


@dataclass
class ExperimentConfig:
    command: str = "spectrum"
    domain: dict = field(default_factory=lambda: {"kind": "interval", "endpoints": [-1.0, 1.0]})
    method: str = "auto"
    N: int = 64
    h: float = 0.0625
    max_nodes: int = 4000
    s: list = field(default_factory=lambda: [0.5])
    k: int = 10
    indices: list | None = None
    rel_tol: float | None = None
    fields: list | None = None
    steps: list | None = None
    mode: str = "domain"
    q: int = 5
    eps: float = 0.1
    max_iterations: int = 10
    potential: dict | float | None = None
    weight: dict | float | None = None
    output: str | None = None
    report: str | None = None
    seed: int | None = None          # reserved, every run is deterministic

    def __post_init__(self):
        self.validate()

    # ------------------------------------------------------------------
    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"command: must be one of {COMMANDS}, got {self.command!r}")
        if not isinstance(self.domain, dict):
            raise ConfigError("domain: expected a mapping with a kind")
        dom = self.build_domain()
        if self.method not in METHODS:
            raise ConfigError(f"method: must be one of {METHODS}, got {self.method!r}")
        if self.method == "spectral" and not isinstance(dom, Interval):
            raise ConfigError("method: the spectral method needs an interval domain")
        if isinstance(self.s, (int, float)):
            self.s = [self.s]
        if not isinstance(self.s, list) or not self.s:
            raise ConfigError("s: expected a number or a nonempty list")
        self.s = [_number("s", v) for v in self.s]
        for v in self.s:
            if not 0 < v < 1:
                raise ConfigError(f"s: every value must satisfy 0 < s < 1, got {v}")
        self.N = _integer("N", self.N, 2)
        self.h = _number("h", self.h)
        if not 0 < self.h < 1:
            raise ConfigError(f"h: must lie in (0, 1), got {self.h}")
        self.max_nodes = _integer("max_nodes", self.max_nodes, 1)
        self.k = _integer("k", self.k, 1)
        if self.indices is not None:
            if not isinstance(self.indices, list) or not self.indices:
                raise ConfigError("indices: expected a nonempty list of 1-based indices")
            self.indices = [_integer("indices", i, 1) for i in self.indices]
        if self.rel_tol is not None:
            self.rel_tol = _number("rel_tol", self.rel_tol)
            if not self.rel_tol > 0:
                raise ConfigError(f"rel_tol: must be positive, got {self.rel_tol}")
        if self.fields is not None:
            if not isinstance(self.fields, list) or not self.fields:
                raise ConfigError("fields: expected a nonempty list of field specs")
            for f in self.fields:
                if not isinstance(f, dict):
                    raise ConfigError("fields: every entry must be a mapping")
                _guarded("fields", field_from_config, _strip_label(f), dom)
        if self.steps is not None:
            if not isinstance(self.steps, list) or not self.steps:
                raise ConfigError("steps: expected a nonempty list")
            self.steps = [_number("steps", v) for v in self.steps]
            if any(v <= 0 for v in self.steps):
                raise ConfigError("steps: finite-difference steps must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode: must be one of {MODES}, got {self.mode!r}")
        self.q = _integer("q", self.q, 1)
        self.eps = _number("eps", self.eps)
        if not 0 < self.eps < 1:
            raise ConfigError(f"eps: budget scale must lie in (0, 1), got {self.eps}")
        self.max_iterations = _integer("max_iterations", self.max_iterations, 0)
        for name in ("potential", "weight"):
            v = getattr(self, name)
            if v is not None:
                _guarded(name, scalar_from_config, v, dom.dim)
        if self.seed is not None:
            self.seed = _integer("seed", self.seed, 0)

    # ------------------------------------------------------------------
    def build_domain(self):
        return _guarded("domain", domain_from_config, self.domain)

    @property
    def resolved_method(self) -> str:
        if self.method != "auto":
            return self.method
        return "spectral" if isinstance(self.build_domain(), Interval) else "grid"

    def problem(self, s: float) -> Problem:
        dom = self.build_domain()
        pot = None if self.potential is None else scalar_from_config(self.potential, dom.dim)
        wt = None if self.weight is None else scalar_from_config(self.weight, dom.dim)
        return Problem(dom, s, self.resolved_method, N=self.N, h=self.h, potential=pot,
                       weight=wt, max_nodes=self.max_nodes)

    def plan(self) -> SimplificationPlan:
        return SimplificationPlan(mode=self.mode, q=self.q, eps=self.eps, rel_tol=self.rel_tol,
                                  max_iterations=self.max_iterations)

    def field_specs(self) -> list[tuple[str, dict]]:
        """(label, field config) pairs; defaults depend on the domain."""
        specs = self.fields
        if specs is None:
            if isinstance(self.build_domain(), Interval):
                specs = [{"label": "dilation", "family": "dilation"},
                         {"label": "translation", "family": "translation"}]
            else:
                specs = [{"label": "cos2", "family": "normal_fourier", "g_cos": [0.0, 0.0, 1.0]}]
        return [(f.get("label", f.get("family", "field")), _strip_label(f)) for f in specs]

    # ------------------------------------------------------------------
    def to_dict(self) -> dict:
        return asdict(self)

    def canonical_json(self) -> str:
        d = {k: v for k, v in self.to_dict().items() if k not in UNHASHED}
        return json.dumps(d, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def dumps(self, fmt: str = "yaml") -> str:
        if fmt == "json":
            return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown config key")
        return cls(**d)

    @classmethod
    def loads(cls, text: str, fmt: str = "yaml") -> "ExperimentConfig":
        try:
            d = json.loads(text) if fmt == "json" else yaml.safe_load(text)
        except (json.JSONDecodeError, yaml.YAMLError) as exc:
            raise ConfigError(f"config: cannot parse ({exc})") from exc
        return cls.from_dict(d or {})

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path} ({exc.strerror})") from exc
        fmt = "json" if os.path.splitext(path)[1].lower() == ".json" else "yaml"
        return cls.loads(text, fmt)


def _guarded(name: str, build, *args):
    """Run a config builder, reporting any malformed entry under ``name``."""
    try:
        return build(*args)
    except (TypeError, ValueError, KeyError) as exc:
        # str(KeyError) is the repr of its key
        msg = str(exc.args[0]) if isinstance(exc, KeyError) and exc.args else str(exc)
        raise ConfigError(msg if msg.startswith(name) else f"{name}: {msg}") from exc


def _strip_label(f: dict) -> dict:
    return {k: v for k, v in f.items() if k != "label"}


def _number(name: str, v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {v!r}")
    return float(v)


def _integer(name: str, v, lo: int) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        if isinstance(v, float) and v.is_integer():
            v = int(v)
        else:
            raise ConfigError(f"{name}: expected an integer, got {v!r}")
    if v < lo:
        raise ConfigError(f"{name}: must be >= {lo}, got {v}")
    return v

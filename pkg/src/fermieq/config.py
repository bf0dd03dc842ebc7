"""Run specifications read from TOML files and command-line overrides."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from fermieq.lattice import ConfigError, LatticeConfig
from fermieq.states import INITIAL_STATES

MODES = ("simulate", "spectral", "verify", "sweep")
ENGINES = ("slater", "fock")
SWEEP_KINDS = ("lemma6", "fraction", "chain")


@dataclass
class SweepGrid:
    """Parameter ranges for ``sweep``; each list is one axis of the grid."""

    kind: str = "lemma6"
    L: list = field(default_factory=lambda: [10001])
    tau_ratio: list = field(default_factory=lambda: [2.5, 5.0, 10.0])
    m: list = field(default_factory=lambda: [1, 2, 5, 100, 3333])
    n: list = field(default_factory=lambda: [3])

    def validate(self):
        if self.kind not in SWEEP_KINDS:
            raise ConfigError(f"sweep kind must be one of {SWEEP_KINDS}, got {self.kind!r}")
        for name in ("L", "tau_ratio", "m", "n"):
            if not isinstance(getattr(self, name), list):
                raise ConfigError(f"sweep.{name} must be a list")


@dataclass
class RunSpec:
    mode: str = "simulate"
    d: int = 1
    L: int = 9
    l: int = 3
    rho_bar: float = 1.0 / 3.0
    epsilon: float = 0.5
    tau: float | None = None
    engine: str = "slater"
    initial_state: str = "concentrated"
    dt: float | None = None
    t_max: float = 10.0
    m_cut: int | None = None
    seed: int = 0
    out: str = "out"
    threads: int = 1
    capacity: int = 1_000_000
    sweep: SweepGrid = field(default_factory=SweepGrid)

    def lattice(self) -> LatticeConfig:
        return LatticeConfig(self.d, self.L, self.l, self.rho_bar, self.epsilon)

    def validate(self) -> "RunSpec":
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.engine not in ENGINES:
            raise ConfigError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        name = self.initial_state.split("(", 1)[0].strip()
        if name not in INITIAL_STATES:
            raise ConfigError(f"unknown initial_state {self.initial_state!r}")
        if name == "random_fock" and self.engine != "fock":
            raise ConfigError("random_fock requires engine = 'fock'")
        if self.tau is not None and not self.tau > 0:
            raise ConfigError("tau must be positive")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.m_cut is not None and self.m_cut <= 0:
            raise ConfigError("m_cut must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be at least 1")
        if self.mode in ("simulate", "spectral"):
            self.lattice()  # lattice errors surface before any computation
        if self.mode == "spectral" and self.tau is None:
            raise ConfigError("spectral mode requires tau")
        if self.mode == "sweep":
            self.sweep.validate()
        return self

    def to_dict(self) -> dict:
        return asdict(self)


_SCALARS = {f.name: f for f in fields(RunSpec) if f.name != "sweep"}
_SWEEP_KEYS = {f.name for f in fields(SweepGrid)}


def _coerce(name, value):
    kind = {"d": int, "L": int, "l": int, "seed": int, "threads": int, "capacity": int,
            "m_cut": int, "rho_bar": float, "epsilon": float, "tau": float, "dt": float,
            "t_max": float}.get(name)
    if kind is None or value is None:
        if name in ("mode", "engine", "initial_state", "out") and not isinstance(value, str):
            raise ConfigError(f"{name} must be a string")
        return value
    if isinstance(value, bool):
        raise ConfigError(f"{name} must be numeric")
    if kind is int:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{name} must be an integer, got {value}")
        try:
            return int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{name} must be an integer, got {value!r}") from None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None


def from_mapping(data: dict) -> RunSpec:
    """Build a RunSpec from a parsed mapping; unknown keys are errors."""
    spec = RunSpec()
    for key, value in data.items():
        if key == "sweep":
            if not isinstance(value, dict):
                raise ConfigError("[sweep] must be a table")
            unknown = set(value) - _SWEEP_KEYS
            if unknown:
                raise ConfigError(f"unknown sweep keys: {sorted(unknown)}")
            spec.sweep = SweepGrid(**{**asdict(SweepGrid()), **value})
        elif key in _SCALARS:
            setattr(spec, key, _coerce(key, value))
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return spec


def load(path) -> RunSpec:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from None
    return from_mapping(data)


def apply_overrides(spec: RunSpec, **overrides) -> RunSpec:
    for key, value in overrides.items():
        if value is not None:
            setattr(spec, key, _coerce(key, value))
    return spec

"""Scenario configuration: a single JSON document, validated and fully resolved."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .spin_model import DEFAULT_HYPERFINE, XY_COEFF, XY_COEFF_FRAME, HyperfineSet, PhysicalConstants

KINDS = ("constants", "gate_x", "gate_z", "hadamard", "ghz", "dephasing", "sweep")
VERB_TO_KIND = {k.replace("_", "-"): k for k in KINDS}
SWEEP_GATES = ("gate_x", "hadamard")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass
class ScenarioConfig:
    kind: str
    # physics
    d_gs: float = 3471.0
    gamma_e: float = 28.025
    gamma_n: float = 3.077e-3
    quadrupole_mhz: float = 0.383
    quadrupole: bool = False
    hyperfine: list | None = None  # three 3x3 matrices in 2*pi*MHz
    xy_coefficient: str = "default"  # or "frame"
    # control
    n_values: list = field(default_factory=lambda: [50])
    p: int = 5
    p_values: list = field(default_factory=lambda: [1, 3, 5, 7])
    phi: float | None = None
    field_mT: list | None = None  # explicit fields; excludes b_op
    b_op_exact: bool = False
    m_i: int = 1
    # noise
    gamma_inv_us: list = field(default_factory=lambda: [2.0, 4.0])
    # integrator
    step: float | None = None
    tolerance: float | None = None
    coarse_step: float = 0.2
    # metrics
    normalization: str = "haar"
    intervals: int = 600
    span: float = 1.2
    # sweep
    sweep_gate: str = "gate_x"
    # output
    seed: int = 0
    jobs: int = 1

    # ------------------------------------------------------------------
    def validate(self) -> "ScenarioConfig":
        if self.kind not in KINDS:
            raise ConfigError("kind", f"must be one of {KINDS}, got {self.kind!r}")
        for name in ("d_gs", "gamma_e", "gamma_n"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not np.isfinite(v):
                raise ConfigError(name, "must be a finite number")
        try:
            self.constants()
        except ValueError as exc:
            raise ConfigError("constants", str(exc)) from None
        if self.hyperfine is not None:
            try:
                self.hyperfine_set()
            except (ValueError, TypeError) as exc:
                raise ConfigError("hyperfine", str(exc)) from None
        if self.xy_coefficient not in ("default", "frame"):
            raise ConfigError("xy_coefficient", "must be 'default' or 'frame'")
        if not self.n_values or any(not isinstance(n, int) or n < 1 for n in self.n_values):
            raise ConfigError("n_values", "must be a non-empty list of positive integers")
        for name, vals in (("p", [self.p]), ("p_values", self.p_values)):
            if not vals or any(not isinstance(v, int) or v < 1 or v % 2 == 0 for v in vals):
                raise ConfigError(name, "CPMG harmonic must be an odd positive integer")
        if self.field_mT is not None:
            if self.b_op_exact:
                raise ConfigError("field_mT", "explicit field and b_op_exact are mutually exclusive")
            if not isinstance(self.field_mT, list) or not self.field_mT or any(
                not isinstance(b, (int, float)) or b < 0 for b in self.field_mT
            ):
                raise ConfigError("field_mT", "must be a non-empty list of non-negative numbers")
            if self.kind in ("gate_x", "hadamard", "ghz") and len(self.field_mT) != len(self.n_values):
                raise ConfigError("field_mT", "needs one field per entry of n_values")
            if self.kind == "sweep":
                raise ConfigError("field_mT", "sweeps always use the operating field")
        if self.phi is not None and (not isinstance(self.phi, (int, float)) or self.phi == 0):
            raise ConfigError("phi", "must be a non-zero number")
        if self.m_i not in (-1, 1):
            raise ConfigError("m_i", "must be +1 or -1")
        if any(not isinstance(g, (int, float)) or g <= 0 for g in self.gamma_inv_us):
            raise ConfigError("gamma_inv_us", "dephasing times must be positive")
        if self.step is not None and self.step <= 0:
            raise ConfigError("step", "must be positive")
        if self.tolerance is not None and self.tolerance <= 0:
            raise ConfigError("tolerance", "must be positive")
        if self.coarse_step <= 0:
            raise ConfigError("coarse_step", "must be positive")
        if self.normalization not in ("haar", "unit"):
            raise ConfigError("normalization", "must be 'haar' or 'unit'")
        if not isinstance(self.intervals, int) or self.intervals < 1:
            raise ConfigError("intervals", "must be a positive integer")
        if self.span <= 0:
            raise ConfigError("span", "must be positive")
        if self.sweep_gate not in SWEEP_GATES:
            raise ConfigError("sweep_gate", f"must be one of {SWEEP_GATES}")
        if not isinstance(self.jobs, int) or self.jobs < 1:
            raise ConfigError("jobs", "must be a positive integer")
        return self

    def constants(self) -> PhysicalConstants:
        return PhysicalConstants(self.d_gs, self.gamma_e, self.gamma_n, (self.quadrupole_mhz,) * 3)

    def hyperfine_set(self) -> HyperfineSet:
        if self.hyperfine is None:
            return HyperfineSet()
        return HyperfineSet(tuple(np.asarray(m, dtype=float) for m in self.hyperfine))

    @property
    def xy(self) -> float:
        return XY_COEFF if self.xy_coefficient == "default" else XY_COEFF_FRAME

    def resolved(self) -> dict:
        d = asdict(self)
        if d["hyperfine"] is None:
            d["hyperfine"] = [np.asarray(m).tolist() for m in DEFAULT_HYPERFINE]
        return d

    def digest(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def from_dict(d: dict, kind: str | None = None) -> ScenarioConfig:
    d = dict(d)
    names = {f.name for f in fields(ScenarioConfig)}
    unknown = sorted(set(d) - names)
    if unknown:
        raise ConfigError(unknown[0], "unknown field")
    if kind is not None:
        if "kind" in d and d["kind"] != kind:
            raise ConfigError("kind", f"config says {d['kind']!r} but the command asks for {kind!r}")
        d["kind"] = kind
    if "kind" not in d:
        raise ConfigError("kind", "missing")
    return ScenarioConfig(**d).validate()


def load_config(path: str | None, kind: str | None = None, **overrides) -> ScenarioConfig:
    d = {}
    if path is not None:
        try:
            with open(path) as fh:
                d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON ({exc})") from None
        if not isinstance(d, dict):
            raise ConfigError("config", "top level must be a JSON object")
    d.update({k: v for k, v in overrides.items() if v is not None})
    return from_dict(d, kind)

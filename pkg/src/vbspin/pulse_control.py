"""Instantaneous pi-pulse schedules and the filter functions they induce.

A schedule is a list of ideal pi rotations about x, y or z of the electron
qubit.  In the toggling frame each pulse conjugates the Pauli operators,
so ``sigma_a(t) = F_a(t) sigma_a`` with ``F_a`` a piecewise-constant +-1
function.  Sign changes use half-open intervals ``[t_i, t_{i+1})``: at a
pulse time the filter already has its post-pulse value.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spin_model import SIGMA

AXES = ("x", "y", "z")


@dataclass(frozen=True)
class PulseSchedule:
    times: tuple[float, ...]
    axes: tuple[str, ...]
    duration: float
    period: float | None = None
    harmonic: int | None = None
    revolutions: int | None = None

    def __post_init__(self):
        if len(self.times) != len(self.axes):
            raise ValueError("need one axis per pulse")
        t = np.asarray(self.times, dtype=float)
        if t.size and (np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] > self.duration):
            raise ValueError("pulse times must be strictly increasing within [0, duration]")
        bad = [a for a in self.axes if a not in AXES + ("none",)]
        if bad:
            raise ValueError(f"unknown pulse axes {bad}")

    @property
    def gate_time(self) -> float:
        """Completion time of the requested revolutions (``N T``), else the duration."""
        if self.period is not None and self.revolutions is not None:
            return self.revolutions * self.period
        return self.duration

    def to_dict(self) -> dict:
        return {
            "times": list(self.times),
            "axes": list(self.axes),
            "duration": self.duration,
            "period": self.period,
            "harmonic": self.harmonic,
            "revolutions": self.revolutions,
        }


def free_schedule(duration: float) -> PulseSchedule:
    return PulseSchedule((), (), float(duration))


def explicit_schedule(times, axes, duration: float) -> PulseSchedule:
    return PulseSchedule(tuple(float(t) for t in times), tuple(axes), float(duration))


def cpmg_schedule(p: int, n_rev: int, delta: float, *, periods: int | None = None) -> PulseSchedule:
    """CPMG train with period ``T = 2 pi p / |delta|``; y pulses at ``T/4`` and ``3T/4``.

    ``periods`` (default ``n_rev``) sets how many periods of pulses are
    emitted, so a trace can be followed past the gate time ``n_rev * T``.
    """
    if p < 1 or p % 2 == 0:
        raise ValueError(f"harmonic p must be odd and >= 1 (got {p}); even p cancels the rotation")
    if n_rev < 1:
        raise ValueError("need at least one revolution")
    if delta == 0:
        raise ValueError("delta must be non-zero")
    periods = n_rev if periods is None else int(periods)
    period = 2 * np.pi * p / abs(delta)
    m = np.arange(periods)
    times = np.column_stack([(m + 0.25) * period, (m + 0.75) * period]).ravel()
    return PulseSchedule(
        tuple(times.tolist()),
        ("y",) * times.size,
        periods * period,
        period=period,
        harmonic=p,
        revolutions=n_rev,
    )


@dataclass(frozen=True)
class FilterSet:
    """Piecewise-constant ``F_x, F_y, F_z``; ``values[i]`` holds on ``[breaks[i], breaks[i+1])``."""

    breaks: np.ndarray
    values: np.ndarray = field(repr=False)  # shape (len(breaks), 3)

    @property
    def breakpoints(self) -> np.ndarray:
        """Times at which at least one filter changes sign."""
        if len(self.breaks) < 2:
            return np.empty(0)
        change = np.any(self.values[1:] != self.values[:-1], axis=1)
        return self.breaks[1:][change]

    def _index(self, t):
        return np.searchsorted(self.breaks, t, side="right") - 1

    def __call__(self, t: float) -> tuple[float, float, float]:
        i = max(int(self._index(t)), 0)
        fx, fy, fz = self.values[i]
        return float(fx), float(fy), float(fz)

    def evaluate(self, axis: str, t) -> np.ndarray:
        i = np.clip(self._index(np.asarray(t, dtype=float)), 0, None)
        return self.values[i, AXES.index(axis)]

    def sign_changes(self, axis: str) -> int:
        col = self.values[:, AXES.index(axis)]
        return int(np.count_nonzero(col[1:] != col[:-1]))

    def integral(self, axis: str, t0: float, t1: float) -> float:
        """Exact integral of ``F_axis`` over ``[t0, t1]``."""
        edges = np.concatenate([[t0], self.breaks[(self.breaks > t0) & (self.breaks < t1)], [t1]])
        mids = (edges[:-1] + edges[1:]) / 2
        return float(np.sum(self.evaluate(axis, mids) * np.diff(edges)))


def filters_from_schedule(s: PulseSchedule) -> FilterSet:
    """Apply the parity rule: ``F_a`` flips at every pulse about an axis other than ``a``."""
    breaks = [0.0]
    vals = [np.ones(3)]
    cur = np.ones(3)
    for t, ax in zip(s.times, s.axes):
        if ax == "none":
            continue
        flip = np.array([-1.0 if a != ax else 1.0 for a in AXES])
        cur = cur * flip
        if t == breaks[-1]:
            vals[-1] = cur.copy()
        else:
            breaks.append(float(t))
            vals.append(cur.copy())
    return FilterSet(np.asarray(breaks), np.asarray(vals))


def filter_fourier(k_max: int, omega: float, t) -> np.ndarray:
    """Partial Fourier sum of the CPMG square wave ``F_x``; a test oracle only."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    k = np.arange(1, k_max + 1)
    t = np.asarray(t, dtype=float)
    coef = 4 * np.sin(k * np.pi / 2) / (k * np.pi)
    return np.cos(np.multiply.outer(t, k) * omega) @ coef


def toggle_map(theta: float, sigma_l: np.ndarray, sigma_a: np.ndarray) -> np.ndarray:
    """Conjugation of ``sigma_a`` by a square pulse of area ``theta`` about ``sigma_l``."""
    return (
        sigma_a * np.cos(theta) ** 2
        + sigma_l @ sigma_a @ sigma_l * np.sin(theta) ** 2
        + 1j * (sigma_l @ sigma_a - sigma_a @ sigma_l) * np.sin(2 * theta) / 2
    )


def toggling_operator(s: PulseSchedule, alpha: str, t: float, theta: float = np.pi / 2) -> np.ndarray:
    """Toggling-frame image of ``sigma_alpha`` after all pulses at times ``<= t``."""
    op = SIGMA[alpha].copy()
    for tp, ax in zip(s.times, s.axes):
        if tp > t:
            break
        if ax != "none":
            op = toggle_map(theta, SIGMA[ax], op)
    return op

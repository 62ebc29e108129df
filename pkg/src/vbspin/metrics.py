"""Gate and state fidelities, traces over time and relative deviations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .quantum_core import dagger, haar_states, hermitize, partial_trace_electron, sqrt_psd

NORMALIZATIONS = ("haar", "unit")


def _fidelity_from_parts(tr: complex, frob: float, d: int, normalization: str) -> float:
    if normalization == "haar":
        return (abs(tr) ** 2 + frob) / (d * (d + 1))
    if normalization == "unit":
        return (d + abs(tr) ** 2) / (d * (d + 1))
    raise ValueError(f"normalization must be one of {NORMALIZATIONS}")


def avg_gate_fidelity(e: np.ndarray, normalization: str = "haar") -> float:
    """Haar average of ``|<psi|E|psi>|^2``: ``(|Tr E|^2 + Tr E^+E) / (d(d+1))``.

    ``normalization="unit"`` replaces ``Tr E^+E`` by ``d``, the value it takes
    for unitary ``E``; this is the convention of fidelity routines that
    assume a trace-preserving map.
    """
    e = np.asarray(e)
    d = e.shape[0]
    return _fidelity_from_parts(np.trace(e), float(np.vdot(e, e).real), d, normalization)


def avg_gate_fidelity_mc(e: np.ndarray, samples: int, seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo estimate over Haar states; returns ``(mean, standard error)``."""
    d = e.shape[0]
    vals = []
    rng = np.random.default_rng(seed)
    left = samples
    while left > 0:
        n = min(left, 20000)
        psi = haar_states(d, n, rng)
        amp = np.einsum("ni,ij,nj->n", psi.conj(), e, psi)
        vals.append(np.abs(amp) ** 2)
        left -= n
    v = np.concatenate(vals)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


def _target(v):
    return v.target if hasattr(v, "target") else np.asarray(v)


def relative_avg_gate_fidelity(e: np.ndarray, v, normalization: str = "haar") -> float:
    """``F(V^+ E) / F(V^+ V)``; ``v`` is a matrix or a :class:`GateSpec`."""
    v = _target(v)
    den = avg_gate_fidelity(dagger(v) @ v, normalization)
    if den == 0:
        raise ValueError("F(V^+ V) = 0; relative fidelity undefined")
    return avg_gate_fidelity(dagger(v) @ e, normalization) / den


def relative_channel_fidelity(images: np.ndarray, support: np.ndarray, v, domain: np.ndarray,
                              normalization: str = "haar") -> float:
    """Relative fidelity of the channel ``rho -> Lambda(P rho P)`` against ``V``.

    ``support`` holds orthonormal rows ``u_i`` spanning the range of the
    domain projector ``P`` and ``images[i, j] = Lambda(|u_i><u_j|)``.  With
    Kraus operators ``K`` the numerator uses ``sum |Tr V^+ K P|^2`` and
    ``Tr V V^+ Lambda(P)``, both linear in the images.
    """
    v = _target(v)
    d = v.shape[0]
    u = np.asarray(support)
    # orthonormal basis of range(P) in support coordinates
    m = u.conj() @ domain @ u.T
    w, c = np.linalg.eigh(hermitize(m))
    c = c[:, w > 0.5].T  # rows: e_a = sum_i c[a, i] u_i
    # vu[i, a] = <u_i| V^+ ... ; we need <e_a|V^+ Lambda(|u_i><u_j|) V|e_c>
    ve = (v @ (c @ u).T)  # columns V|e_a>
    g = np.einsum("xa,ijxy,yc->ijac", ve.conj(), images, ve, optimize=True)
    term1 = np.einsum("ai,cj,ijac->", c, c.conj(), g).real
    vvd = v @ dagger(v)
    lam_p = np.einsum("ai,aj,ijxy->xy", c, c.conj(), images)
    term2 = float(np.trace(vvd @ lam_p).real)
    if normalization == "haar":
        num = (term1 + term2) / (d * (d + 1))
    elif normalization == "unit":
        num = (term1 + d) / (d * (d + 1))
    else:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}")
    den = avg_gate_fidelity(dagger(v) @ v, normalization)
    return float(num / den)


def state_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann fidelity ``Tr sqrt(sqrt(sigma) rho sqrt(sigma))`` of trace-normalized inputs."""
    rho = _normalize(rho)
    sigma = _normalize(sigma)
    s = sqrt_psd(sigma)
    w = np.linalg.eigvalsh(hermitize(s @ rho @ s))
    return float(min(np.sqrt(np.clip(w, 0, None)).sum(), 1.0 + 1e-12))


def state_fidelity_pure(rho: np.ndarray, psi: np.ndarray) -> float:
    """Same fidelity for a pure target: ``sqrt(<psi|rho|psi> / Tr rho)``."""
    rho = _normalize(rho)
    psi = psi / np.linalg.norm(psi)
    return float(np.sqrt(max(np.vdot(psi, rho @ psi).real, 0.0)))


def _normalize(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    tr = np.trace(rho).real
    if tr <= 0:
        raise ValueError("state has zero trace")
    return rho / tr


def heralded_states(evo, psi0: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Sub-normalized nuclear states after heralding the electron on ``|0>`` and ``|-1>``.

    Unitary snapshots act on ``psi0``; density snapshots are used directly.
    Returns two arrays of shape ``(len(times), 27, 27)``.
    """
    snaps = evo.snapshots
    if evo.kind == "unitary":
        if psi0 is None:
            from .gates import initial_state

            psi0 = initial_state(1)
        psi = snaps @ psi0
        m = psi.reshape(len(snaps), 2, 27)
        plus = np.einsum("ti,tj->tij", m[:, 0], m[:, 0].conj())
        minus = np.einsum("ti,tj->tij", m[:, 1], m[:, 1].conj())
        return plus, minus
    r = snaps.reshape(len(snaps), 2, 27, 2, 27)
    return r[:, 0, :, 0, :].copy(), r[:, 1, :, 1, :].copy()


def relative_deviation(f_ref: float, f_noise: float) -> float:
    """``(F_ref - F_noise) / F_ref``."""
    if f_ref == 0:
        raise ValueError("reference fidelity is zero")
    return (f_ref - f_noise) / f_ref


@dataclass
class FidelityTrace:
    times: np.ndarray
    values: np.ndarray
    t_ref: float
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values differ in length")
        if np.any(self.values > 1 + 1e-9) or np.any(self.values < -1e-12):
            raise ValueError("fidelity values outside [0, 1]")

    @property
    def argmax(self) -> float:
        return float(self.times[int(np.argmax(self.values))])

    @property
    def max(self) -> float:
        return float(self.values.max())

    @property
    def value_at_ref(self) -> float:
        return float(self.values[int(np.argmin(np.abs(self.times - self.t_ref)))])


class Maximum(NamedTuple):
    time: float
    value: float
    deviation: float  # |t* - t_ref| in units of 1/a_z
    signed: float


def trace_maximum(trace: FidelityTrace, window: tuple[float, float] | None = None, a_z: float | None = None) -> Maximum:
    """First global maximum on the sampled grid inside ``window``.

    ``a_z`` (rad/ns) converts the offset from ``t_ref`` into units of ``1/a_z``;
    without it the offset is in ns.
    """
    t, v = trace.times, trace.values
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, v = t[sel], v[sel]
    if t.size == 0:
        raise ValueError("no samples in window")
    i = int(np.argmax(v))
    off = (t[i] - trace.t_ref) * (1.0 if a_z is None else a_z)
    return Maximum(float(t[i]), float(v[i]), float(abs(off)), float(off))


def optimal_time_grid(t_ref: float, intervals: int = 600, span: float = 1.2) -> np.ndarray:
    """Uniform grid of ``intervals`` steps over ``[0, span * t_ref]``."""
    return np.linspace(0.0, span * t_ref, intervals + 1)


def gate_trace(evo, spec, normalization: str = "haar", t_ref: float | None = None, label: str = "") -> FidelityTrace:
    vals = np.array([relative_avg_gate_fidelity(u @ spec.domain, spec, normalization) for u in evo.snapshots])
    vals = np.clip(vals, 0.0, None)
    return FidelityTrace(evo.times, vals, evo.times[-1] if t_ref is None else t_ref, label or spec.label)


def ghz_traces(evo, m_i: int = 1, t_ref: float | None = None) -> tuple[FidelityTrace, FidelityTrace]:
    """Fidelity of the heralded states to ``GHZ_0`` (herald 0) and ``GHZ_pi`` (herald -1)."""
    from .gates import ghz_state, initial_state

    plus, minus = heralded_states(evo, initial_state(m_i))
    out = []
    for rhos, nu, lab in ((plus, 0.0, "ghz_nu0"), (minus, np.pi, "ghz_nupi")):
        target = ghz_state(nu, m_i)
        vals = []
        for r in rhos:
            tr = np.trace(r).real
            vals.append(state_fidelity_pure(r, target) if tr > 1e-14 else 0.0)
        out.append(FidelityTrace(evo.times, np.array(vals), evo.times[-1] if t_ref is None else t_ref, lab))
    return out[0], out[1]

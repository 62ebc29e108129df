"""Time-ordered propagation: midpoint-exponential unitaries and RK4 Lindblad."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .quantum_core import NonHermitianError, anti_hermitian_norm, expm_hermitian_unchecked, HERMITIAN_TOL
from .spin_model import DIM, SIGMA, DerivedParams, embed

TRACE_DRIFT_TOL = 1e-6


class ResolutionError(ValueError):
    """Rotation angle not reachable with the requested number of periods."""


@dataclass
class EvolutionResult:
    times: np.ndarray
    snapshots: np.ndarray  # (len(times), d, d)
    step: float
    kind: str = "unitary"  # or "density"
    convergence: float | None = None
    tolerance: float | None = None
    trace_drift: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        ok = True
        if self.convergence is not None and self.tolerance is not None:
            ok = self.convergence <= self.tolerance
        if self.trace_drift is not None:
            ok = ok and self.trace_drift <= TRACE_DRIFT_TOL
        return ok

    @property
    def final(self) -> np.ndarray:
        return self.snapshots[-1]

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        if not np.isclose(self.times[i], t, rtol=0, atol=1e-9):
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshots[i]


def default_step(params: DerivedParams, points_per_period: int = 50) -> float:
    """``2 pi / (50 * max frequency)`` in ns."""
    return 2 * np.pi / (points_per_period * params.max_frequency)


def _nodes(t0, t1, breakpoints, samples):
    pts = [t0, t1]
    if breakpoints is not None:
        pts += [b for b in np.asarray(breakpoints, dtype=float) if t0 < b < t1]
    pts += list(samples)
    return np.unique(np.asarray(pts, dtype=float))


def _resolve(h_of_t, step, breakpoints):
    if breakpoints is None and hasattr(h_of_t, "breakpoints"):
        breakpoints = h_of_t.breakpoints()
    if step is None:
        if not hasattr(h_of_t, "params"):
            raise ValueError("step is required when the Hamiltonian carries no params")
        step = default_step(h_of_t.params)
    if step <= 0:
        raise ValueError("step must be positive")
    return step, breakpoints


def _substeps(a, b, step):
    n = max(1, math.ceil((b - a) / step - 1e-9))
    return n, (b - a) / n


def _check_blocks(h, blocks):
    mask = np.ones(h.shape, dtype=bool)
    for b in blocks:
        mask[np.ix_(b, b)] = False
    off = np.abs(h[mask]).max() if mask.any() else 0.0
    if off > 1e-12:
        raise ValueError(f"Hamiltonian is not block diagonal for the given blocks (off-block {off:.2e})")


def _sample_index(nodes, samples):
    idx = np.searchsorted(nodes, samples)
    idx = np.clip(idx, 0, len(nodes) - 1)
    if not np.allclose(nodes[idx], samples, rtol=0, atol=1e-12):
        raise RuntimeError("sample times missing from the node grid")
    return idx


def _run_unitary(h_of_t, t0, nodes, step, samples, blocks):
    dim = h_of_t(t0).shape[0] if blocks is None else sum(len(b) for b in blocks)
    blocks = [np.arange(dim)] if blocks is None else [np.asarray(b) for b in blocks]
    us = [np.eye(len(b), dtype=complex) for b in blocks]
    sidx = _sample_index(nodes, samples)
    out = {}
    checked = False

    def snap(i):
        u = np.zeros((dim, dim), dtype=complex)
        for b, ub in zip(blocks, us):
            u[np.ix_(b, b)] = ub
        out[i] = u

    want = set(sidx.tolist())
    if 0 in want:
        snap(0)
    for i in range(1, len(nodes)):
        a, b = nodes[i - 1], nodes[i]
        n, dt = _substeps(a, b, step)
        for j in range(n):
            h = h_of_t(a + (j + 0.5) * dt)
            if not checked:
                norm = anti_hermitian_norm(h)
                if norm > HERMITIAN_TOL:
                    raise NonHermitianError(f"generator not Hermitian (anti-Hermitian norm {norm:.3e})")
                if len(blocks) > 1:
                    _check_blocks(h, blocks)
                checked = True
            for k, bl in enumerate(blocks):
                hb = h if len(blocks) == 1 else h[np.ix_(bl, bl)]
                us[k] = expm_hermitian_unchecked(hb, dt) @ us[k]
        if i in want:
            snap(i)
    return np.array([out[i] for i in sidx])


def propagate_unitary(
    h_of_t,
    t0: float,
    t1: float,
    step: float | None = None,
    *,
    breakpoints=None,
    samples=None,
    blocks=None,
    tolerance: float | None = None,
) -> EvolutionResult:
    """Compose midpoint steps ``U <- exp(-i h(t + dt/2) dt) U`` from ``t0`` to ``t1``.

    Steps are split so that none straddles a breakpoint or a sample time.
    ``blocks`` lists index sets on which ``h`` is block diagonal for every t;
    each block is exponentiated separately.  With ``tolerance`` the run is
    repeated at half step and the Frobenius distance of the final
    propagators is stored as the convergence estimate.
    """
    if t1 < t0:
        raise ValueError("t1 must be >= t0")
    step, breakpoints = _resolve(h_of_t, step, breakpoints)
    samples = np.array([t0, t1] if samples is None else sorted(samples), dtype=float)
    if samples.size and (samples[0] < t0 - 1e-12 or samples[-1] > t1 + 1e-12):
        raise ValueError("sample times must lie in [t0, t1]")
    nodes = _nodes(t0, t1, breakpoints, samples)
    snaps = _run_unitary(h_of_t, t0, nodes, step, samples, blocks)
    est = None
    if tolerance is not None:
        half = _run_unitary(h_of_t, t0, nodes, step / 2, samples[-1:], blocks)
        est = float(np.linalg.norm(half[-1] - snaps[-1]))
    return EvolutionResult(samples, snaps, step, "unitary", est, tolerance)


def dephasing_operator() -> np.ndarray:
    return embed(SIGMA["z"])


def _lindblad_rhs(h, rho, gamma, lop, ldl):
    out = -1j * (h @ rho - rho @ h)
    if gamma:
        out += gamma * (lop @ rho @ lop.conj().T - 0.5 * (ldl @ rho + rho @ ldl))
    return out


def propagate_lindblad(
    h_of_t,
    gamma: float,
    rho0: np.ndarray,
    t0: float,
    t1: float,
    step: float | None = None,
    *,
    breakpoints=None,
    samples=None,
    lindblad_op: np.ndarray | None = None,
) -> EvolutionResult:
    """RK4 on ``d rho/dt = -i[H, rho] + G (L rho L^+ - {L^+ L, rho}/2)``.

    ``gamma`` is the dephasing rate in 1/us; ``L`` defaults to the electron
    ``sigma_z``.  Steps never straddle breakpoints.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    step, breakpoints = _resolve(h_of_t, step, breakpoints)
    g = gamma * 1e-3  # 1/us -> 1/ns
    lop = dephasing_operator() if lindblad_op is None else lindblad_op
    ldl = lop.conj().T @ lop
    samples = np.array([t0, t1] if samples is None else sorted(samples), dtype=float)
    nodes = _nodes(t0, t1, breakpoints, samples)
    sidx = _sample_index(nodes, samples)
    want = set(sidx.tolist())
    rho = np.array(rho0, dtype=complex)
    tr0 = np.trace(rho).real
    out = {}
    drift = 0.0
    if 0 in want:
        out[0] = rho.copy()
    for i in range(1, len(nodes)):
        a, b = nodes[i - 1], nodes[i]
        n, dt = _substeps(a, b, step)
        for j in range(n):
            t = a + j * dt
            # left limit at the node: filters switch sign exactly there
            t_end = np.nextafter(b, a) if j == n - 1 else t + dt
            h0, hm, h1 = h_of_t(t), h_of_t(t + dt / 2), h_of_t(t_end)
            k1 = _lindblad_rhs(h0, rho, g, lop, ldl)
            k2 = _lindblad_rhs(hm, rho + dt / 2 * k1, g, lop, ldl)
            k3 = _lindblad_rhs(hm, rho + dt / 2 * k2, g, lop, ldl)
            k4 = _lindblad_rhs(h1, rho + dt * k3, g, lop, ldl)
            rho = rho + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        drift = max(drift, abs(np.trace(rho).real - tr0))
        if i in want:
            out[i] = rho.copy()
    snaps = np.array([out[i] for i in sidx])
    return EvolutionResult(samples, snaps, step, "density", trace_drift=drift)


def propagate_dephased_batch(
    h_of_t,
    gamma,
    inputs: np.ndarray,
    t1: float,
    step: float | None = None,
    *,
    coarse_step: float = 0.2,
    blocks=None,
    breakpoints=None,
):
    """Evolve a batch of operators ``X_j`` under the dephasing master equation to ``t1``.

    Works in the interaction picture of the coherent part: the unitary ``U(t)``
    comes from :func:`propagate_unitary` on the fine grid, and
    ``X_I = U^+ X U`` obeys ``dX_I/dt = G (L_t X_I L_t - X_I)`` with
    ``L_t = U^+ sigma_z U``, which is smooth and is integrated with RK4 on a
    grid of spacing ``<= coarse_step``.  ``L`` must square to the identity.
    When ``blocks`` is given every input must live in a single
    ``(block_a, block_c)`` sector; those sectors are integrated separately.
    ``gamma`` (1/us) may be a sequence, in which case one array per rate is
    returned and the coherent propagation is shared.
    """
    many = np.ndim(gamma) > 0
    gammas = [float(g) for g in np.atleast_1d(gamma)]
    if any(g < 0 for g in gammas):
        raise ValueError("gamma must be >= 0")
    inputs = np.asarray(inputs, dtype=complex)
    n = max(1, math.ceil(t1 / coarse_step - 1e-9))
    h = t1 / n
    grid = np.linspace(0.0, t1, 2 * n + 1)
    evo = propagate_unitary(h_of_t, 0.0, t1, step, breakpoints=breakpoints, samples=grid, blocks=blocks)
    us = evo.snapshots
    lz = dephasing_operator()
    ls = np.einsum("tji,jk,tkl->til", us.conj(), lz, us, optimize=True)
    if blocks is None:
        full = np.arange(inputs.shape[-1])
        sectors = [(full, full, np.arange(len(inputs)))]
    else:
        sectors = _sectors(inputs, blocks)
    results = []
    for gam in gammas:
        g = gam * 1e-3
        out = np.zeros_like(inputs)
        for ra, rc, idx in sectors:
            x = inputs[idx][:, ra][:, :, rc]
            if g:
                la = ls[:, ra][:, :, ra]
                lc = ls[:, rc][:, :, rc]
                x = _rk4_dephasing(x, la, lc, g, h, n)
            ua = us[-1][np.ix_(ra, ra)]
            uc = us[-1][np.ix_(rc, rc)]
            res = ua @ x @ uc.conj().T
            tmp = out[idx]
            tmp[:, ra[:, None], rc[None, :]] = res
            out[idx] = tmp
        results.append(out)
    return results if many else results[0]


def _rk4_dephasing(x, la, lc, g, h, n):
    m, da, dc = x.shape

    def rhs(j, x):
        # L_a X L_c - X as two flat gemms over the batch
        y = (la[j] @ x.transpose(1, 0, 2).reshape(da, -1)).reshape(da, m, dc).transpose(1, 0, 2)
        y = (y.reshape(-1, dc) @ lc[j]).reshape(m, da, dc)
        return g * (y - x)

    for s in range(n):
        j0, jm, j1 = 2 * s, 2 * s + 1, 2 * s + 2
        k1 = rhs(j0, x)
        k2 = rhs(jm, x + h / 2 * k1)
        k3 = rhs(jm, x + h / 2 * k2)
        k4 = rhs(j1, x + h * k3)
        x = x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


def channel_images(h_of_t, gamma, support: np.ndarray, t1: float, step: float | None = None, *,
                   coarse_step: float = 0.2, blocks=None):
    """``images[i, j]`` = dephased evolution of ``|u_i><u_j|`` to ``t1`` for rows ``u`` of ``support``.

    A sequence of rates gives a list of image arrays.
    """
    r, d = support.shape
    inputs = np.einsum("ix,jy->ijxy", support, support.conj()).reshape(r * r, d, d)
    out = propagate_dephased_batch(h_of_t, gamma, inputs, t1, step, coarse_step=coarse_step, blocks=blocks)
    if isinstance(out, list):
        return [o.reshape(r, r, d, d) for o in out]
    return out.reshape(r, r, d, d)


def _sectors(inputs, blocks):
    blocks = [np.asarray(b) for b in blocks]
    groups = {}
    for j, x in enumerate(inputs):
        hit = None
        for ia, ba in enumerate(blocks):
            for ic, bc in enumerate(blocks):
                if np.abs(x[np.ix_(ba, bc)]).sum() > 0:
                    if hit is not None and hit != (ia, ic):
                        raise ValueError(f"input {j} spans several block sectors")
                    hit = (ia, ic)
        if hit is None:
            hit = (0, 0)
        groups.setdefault(hit, []).append(j)
    return [(blocks[a], blocks[c], np.array(idx)) for (a, c), idx in sorted(groups.items())]


def gate_duration(kind: str, phi: float, params: DerivedParams | None = None, *, n_rev: int | None = None,
                  p: int | None = None, tol: float = 1e-3) -> float:
    """Gate time in ns: ``phi / a_z`` for ``UZ``; ``N T = 2 pi p N / |Delta|`` for ``UX``.

    ``UX`` is rejected when ``|phi|`` differs from ``N * resolution`` by more than ``tol``.
    """
    kind = kind.upper()
    if kind == "UZ":
        if params is None:
            raise ValueError("UZ needs params for a_z")
        return abs(phi) / params.a_z
    if kind == "UX":
        if params is None or n_rev is None or p is None:
            raise ValueError("UX needs params, n_rev and p")
        if p < 1 or p % 2 == 0:
            raise ValueError("p must be odd and >= 1")
        reach = n_rev * params.resolution
        if abs(abs(phi) - reach) > tol:
            raise ResolutionError(
                f"|phi| = {abs(phi):.6f} is not N * resolution = {reach:.6f} (tolerance {tol})"
            )
        return 2 * np.pi * p * n_rev / abs(params.delta)
    raise ValueError(f"unknown gate kind {kind!r}")

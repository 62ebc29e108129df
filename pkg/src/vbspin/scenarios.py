"""Scenario runners: each turns a validated config into traces and summary tables."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ScenarioConfig, from_dict
from .evolution import channel_images, propagate_dephased_batch, propagate_unitary
from .gates import ghz_state, initial_state, support_basis, synchronous_gate
from .metrics import (
    FidelityTrace,
    gate_trace,
    ghz_traces,
    optimal_time_grid,
    relative_avg_gate_fidelity,
    relative_channel_fidelity,
    relative_deviation,
    state_fidelity_pure,
    trace_maximum,
)
from .pulse_control import cpmg_schedule, filters_from_schedule
from .spin_model import MHZ, RotatingFrameModel, b_op, derive_params, design_time, parity_blocks

Z_FIELDS = [0.0, 100.0, 500.0, 700.0]
Z_DEPHASING_FIELD = 500.0
MISSING = float("nan")


@dataclass
class ScenarioResult:
    kind: str
    traces: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # summary table (list of dicts)
    converged: bool = True


@dataclass
class Setup:
    model: RotatingFrameModel
    field_mT: float
    t_ref: float
    a_z: float


def ux_setup(cfg: ScenarioConfig, phi: float, n_rev: int, p: int, field_mT: float | None = None,
             quadrupole: bool | None = None) -> Setup:
    """CPMG-driven model for ``U_x(phi)`` in ``n_rev`` periods of harmonic ``p``."""
    c, hf = cfg.constants(), cfg.hyperfine_set()
    b = b_op(phi, n_rev, c, hf, exact=cfg.b_op_exact) if field_mT is None else float(field_mT)
    params = derive_params(c, hf, b)
    t_ref = design_time(phi, p, hf)
    period = 2 * np.pi * p / abs(params.delta)
    periods = max(n_rev, math.ceil(cfg.span * t_ref / period) + 1)
    sched = cpmg_schedule(p, n_rev, params.delta, periods=periods)
    q = cfg.quadrupole if quadrupole is None else quadrupole
    model = RotatingFrameModel(params, filters_from_schedule(sched), quadrupole=q, xy_coefficient=cfg.xy)
    return Setup(model, b, t_ref, params.a_z)


def uz_setup(cfg: ScenarioConfig, field_mT: float, quadrupole: bool | None = None) -> Setup:
    """Free evolution (no pulses); the target time is ``pi / a_z``."""
    params = derive_params(cfg.constants(), cfg.hyperfine_set(), field_mT)
    q = cfg.quadrupole if quadrupole is None else quadrupole
    model = RotatingFrameModel(params, None, quadrupole=q, xy_coefficient=cfg.xy)
    return Setup(model, float(field_mT), np.pi / params.a_z, params.a_z)


def _evolve(cfg: ScenarioConfig, s: Setup):
    grid = optimal_time_grid(s.t_ref, cfg.intervals, cfg.span)
    return propagate_unitary(s.model, 0.0, grid[-1], cfg.step, samples=grid, blocks=parity_blocks(),
                             tolerance=cfg.tolerance)


def _row(trace: FidelityTrace, s: Setup, evo, **extra) -> dict:
    mx = trace_maximum(trace, a_z=s.a_z)
    row = dict(extra)
    row.update(
        label=trace.label,
        field_mT=s.field_mT,
        t_ref_ns=s.t_ref,
        max_value=mx.value,
        argmax_ns=mx.time,
        deviation_az=mx.signed,
        value_at_ref=trace.value_at_ref,
        convergence=MISSING if evo.convergence is None else evo.convergence,
        converged=int(evo.converged),
    )
    return row


def _phi(cfg, default):
    return default if cfg.phi is None else cfg.phi


def run_gate_x(cfg: ScenarioConfig) -> ScenarioResult:
    return _run_ux_gate(cfg, "X", _phi(cfg, np.pi / 2))


def run_hadamard(cfg: ScenarioConfig) -> ScenarioResult:
    return _run_ux_gate(cfg, "H", _phi(cfg, np.pi / 4))


def _run_ux_gate(cfg, kind, phi):
    spec = synchronous_gate(kind) if kind == "X" or np.isclose(phi, np.pi / 4) else synchronous_gate("R", phi=phi)
    res = ScenarioResult(cfg.kind)
    for i, n in enumerate(cfg.n_values):
        s = ux_setup(cfg, phi, n, cfg.p, None if cfg.field_mT is None else cfg.field_mT[i])
        evo = _evolve(cfg, s)
        tr = gate_trace(evo, spec, cfg.normalization, s.t_ref, f"{spec.label}_N{n}")
        res.traces.append(tr)
        res.rows.append(_row(tr, s, evo, N=n, p=cfg.p))
        res.converged &= evo.converged
    return res


def run_gate_z(cfg: ScenarioConfig) -> ScenarioResult:
    spec = synchronous_gate("Z")
    res = ScenarioResult(cfg.kind)
    for b in cfg.field_mT or Z_FIELDS:
        s = uz_setup(cfg, b)
        evo = _evolve(cfg, s)
        tr = gate_trace(evo, spec, cfg.normalization, s.t_ref, f"Z_yz_B{b:g}")
        res.traces.append(tr)
        res.rows.append(_row(tr, s, evo))
        res.converged &= evo.converged
    return res


def run_ghz(cfg: ScenarioConfig) -> ScenarioResult:
    phi = _phi(cfg, np.pi / 2)
    res = ScenarioResult(cfg.kind)
    for i, n in enumerate(cfg.n_values):
        s = ux_setup(cfg, phi, n, cfg.p, None if cfg.field_mT is None else cfg.field_mT[i])
        evo = _evolve(cfg, s)
        for tr in ghz_traces(evo, cfg.m_i, s.t_ref):
            tr.label = f"{tr.label}_N{n}"
            res.traces.append(tr)
            res.rows.append(_row(tr, s, evo, N=n, p=cfg.p))
        res.converged &= evo.converged
    return res


def run_constants(cfg: ScenarioConfig) -> ScenarioResult:
    c, hf = cfg.constants(), cfg.hyperfine_set()
    res = ScenarioResult(cfg.kind)
    n_list = [10, 20, 50, 100, 150, 200]
    for n in n_list:
        b = b_op(np.pi / 2, n, c, hf, exact=cfg.b_op_exact)
        p = derive_params(c, hf, b)
        res.rows.append(_constants_row(p, f"b_op(pi/2,{n})", n))
    for b in cfg.field_mT or Z_FIELDS:
        res.rows.append(_constants_row(derive_params(c, hf, b), f"B={b:g}", None))
    return res


def _constants_row(p, label, n):
    return dict(
        label=label,
        N=MISSING if n is None else n,
        field_mT=p.field_mT,
        a_z_mhz=p.a_z / MHZ,
        a_perp_mhz=p.a_perp / MHZ,
        delta_mhz=p.delta / MHZ,
        sigma_1_mhz=p.sigma_k[0] / MHZ,
        sigma_2_mhz=p.sigma_k[1] / MHZ,
        sigma_3_mhz=p.sigma_k[2] / MHZ,
        resolution_rad=p.resolution,
        n_times_resolution=MISSING if n is None else n * p.resolution,
    )


# --------------------------------------------------------------------------
# noise


def dephasing_rows(cfg: ScenarioConfig, targets=("X", "Z", "H", "GHZ")) -> list[dict]:
    """Relative deviations at the target times for dephasing and for the quadrupole term."""
    gammas = [1.0 / g for g in cfg.gamma_inv_us]
    rows = []
    n = cfg.n_values[0]
    blocks = parity_blocks()
    for target in targets:
        if target == "Z":
            b = cfg.field_mT[0] if cfg.field_mT else Z_DEPHASING_FIELD
            setups = [uz_setup(cfg, b, q) for q in (False, True)]
        else:
            phi = np.pi / 4 if target == "H" else np.pi / 2
            setups = [ux_setup(cfg, phi, n, cfg.p, None, q) for q in (False, True)]
        base = setups[1] if cfg.quadrupole else setups[0]
        if target == "GHZ":
            f_ref, f_noise = _ghz_dephasing(cfg, base, gammas, blocks)
            fq = _ghz_unitary(cfg, setups)
            for lab, i in (("GHZ_nu0", 0), ("GHZ_nupi", 1)):
                for g_inv, fn in zip(cfg.gamma_inv_us, f_noise):
                    rows.append(_dev_row(lab, base, "dephasing", g_inv, f_ref[i], fn[i]))
                rows.append(_dev_row(lab, base, "quadrupole", MISSING, fq[0][i], fq[1][i]))
            continue
        spec = synchronous_gate(target)
        sup = support_basis(spec)
        ims = channel_images(base.model, [0.0] + gammas, sup, base.t_ref, cfg.step,
                             coarse_step=cfg.coarse_step, blocks=blocks)
        fs = [relative_channel_fidelity(im, sup, spec, spec.domain, cfg.normalization) for im in ims]
        for g_inv, fn in zip(cfg.gamma_inv_us, fs[1:]):
            rows.append(_dev_row(f"{target}_yz", base, "dephasing", g_inv, fs[0], fn))
        fq = []
        for s in setups:
            u = propagate_unitary(s.model, 0.0, s.t_ref, cfg.step, blocks=blocks).final
            fq.append(relative_avg_gate_fidelity(u @ spec.domain, spec, cfg.normalization))
        rows.append(_dev_row(f"{target}_yz", base, "quadrupole", MISSING, fq[0], fq[1]))
    return rows


def _dev_row(label, s, noise, g_inv, f_ref, f_noise):
    return dict(label=label, noise=noise, gamma_inv_us=g_inv, field_mT=s.field_mT, t_ref_ns=s.t_ref,
                f_ref=f_ref, f_noise=f_noise, deviation=relative_deviation(f_ref, f_noise))


def _ghz_fids(rho, m_i):
    r = rho.reshape(2, 27, 2, 27)
    return [state_fidelity_pure(r[0, :, 0, :], ghz_state(0.0, m_i)),
            state_fidelity_pure(r[1, :, 1, :], ghz_state(np.pi, m_i))]


def _ghz_dephasing(cfg, s, gammas, blocks):
    psi = initial_state(cfg.m_i)
    rho0 = np.outer(psi, psi.conj())[None]
    outs = propagate_dephased_batch(s.model, [0.0] + gammas, rho0, s.t_ref, cfg.step,
                                    coarse_step=cfg.coarse_step, blocks=blocks)
    f = [_ghz_fids(o[0], cfg.m_i) for o in outs]
    return f[0], f[1:]


def _ghz_unitary(cfg, setups):
    psi = initial_state(cfg.m_i)
    out = []
    for s in setups:
        u = propagate_unitary(s.model, 0.0, s.t_ref, cfg.step, blocks=parity_blocks()).final
        v = u @ psi
        out.append(_ghz_fids(np.outer(v, v.conj()), cfg.m_i))
    return out


def run_dephasing(cfg: ScenarioConfig) -> ScenarioResult:
    return ScenarioResult(cfg.kind, rows=dephasing_rows(cfg))


# --------------------------------------------------------------------------
# sweeps


def sweep_cell(cfg_dict: dict, n: int, p: int) -> dict:
    """Maximum relative fidelity for one ``(N, p)`` cell at the operating field."""
    cfg = from_dict(cfg_dict)
    gate = "X" if cfg.sweep_gate == "gate_x" else "H"
    phi = _phi(cfg, np.pi / 2 if gate == "X" else np.pi / 4)
    try:
        s = ux_setup(cfg, phi, n, p)
        evo = _evolve(cfg, s)
        tr = gate_trace(evo, synchronous_gate(gate), cfg.normalization, s.t_ref)
        mx = trace_maximum(tr, a_z=s.a_z)
        return dict(N=n, p=p, field_mT=s.field_mT, t_ref_ns=s.t_ref, max_value=mx.value, argmax_ns=mx.time,
                    converged=int(evo.converged), error="")
    except Exception as exc:  # recorded as a missing cell, the sweep continues
        return dict(N=n, p=p, field_mT=MISSING, t_ref_ns=MISSING, max_value=MISSING, argmax_ns=MISSING,
                    converged=0, error=f"{type(exc).__name__}: {exc}")


def _cell(args):
    return sweep_cell(*args)


def run_sweep(cfg: ScenarioConfig) -> ScenarioResult:
    """Row-major over ``p_values`` x ``n_values``; parallel when ``jobs > 1``."""
    d = asdict(cfg)
    d["kind"] = "sweep"
    cells = [(d, n, p) for p in cfg.p_values for n in cfg.n_values]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
            rows = list(ex.map(_cell, cells))
    else:
        rows = [_cell(c) for c in cells]
    res = ScenarioResult(cfg.kind, rows=rows)
    res.converged = all(r["converged"] for r in rows)
    return res


RUNNERS = {
    "constants": run_constants,
    "gate_x": run_gate_x,
    "gate_z": run_gate_z,
    "hadamard": run_hadamard,
    "ghz": run_ghz,
    "dephasing": run_dephasing,
    "sweep": run_sweep,
}


def run(cfg: ScenarioConfig) -> ScenarioResult:
    return RUNNERS[cfg.kind](cfg)

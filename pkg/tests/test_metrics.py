import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import unitary_group

from vbspin.evolution import EvolutionResult
from vbspin.gates import initial_state, support_basis, synchronous_gate
from vbspin.metrics import (
    FidelityTrace,
    avg_gate_fidelity,
    avg_gate_fidelity_mc,
    ghz_traces,
    heralded_states,
    optimal_time_grid,
    relative_avg_gate_fidelity,
    relative_channel_fidelity,
    relative_deviation,
    state_fidelity,
    state_fidelity_pure,
    trace_maximum,
)

from conftest import random_density


@pytest.mark.parametrize("d", [2, 6, 54])
def test_closed_form_matches_monte_carlo(d):
    rng = np.random.default_rng(d)
    u = unitary_group.rvs(d, random_state=rng)
    proj = np.diag((rng.random(d) < 0.6).astype(float))
    e = u @ proj + 0.1 * np.eye(d)
    mean, se = avg_gate_fidelity_mc(e, 40000, seed=d)
    assert abs(mean - avg_gate_fidelity(e)) < 3 * se


def test_identity_and_zero():
    assert avg_gate_fidelity(np.eye(7)) == pytest.approx(1.0)
    assert avg_gate_fidelity(np.zeros((7, 7))) == 0.0
    assert avg_gate_fidelity(np.eye(7), "unit") == pytest.approx(1.0)


def test_unknown_normalization():
    with pytest.raises(ValueError):
        avg_gate_fidelity(np.eye(2), "other")


def test_normalizations_agree_for_unitaries():
    u = unitary_group.rvs(5, random_state=1)
    assert avg_gate_fidelity(u, "haar") == pytest.approx(avg_gate_fidelity(u, "unit"), abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 2 * np.pi))
def test_global_phase_invariance(theta):
    spec = synchronous_gate("H")
    u = unitary_group.rvs(54, random_state=3)
    f = relative_avg_gate_fidelity(u @ spec.domain, spec)
    g = relative_avg_gate_fidelity(np.exp(1j * theta) * u @ spec.domain, spec)
    assert f == pytest.approx(g, abs=1e-12)


@pytest.mark.parametrize("kind", ["X", "Z", "H"])
def test_ideal_gates_have_unit_relative_fidelity(kind):
    spec = synchronous_gate(kind)
    assert relative_avg_gate_fidelity(spec.ideal_realization(), spec) == pytest.approx(1.0, abs=1e-12)


def test_relative_fidelity_rejects_zero_target():
    with pytest.raises(ValueError):
        relative_avg_gate_fidelity(np.eye(3), np.zeros((3, 3)))


@pytest.mark.parametrize("norm", ["haar", "unit"])
@pytest.mark.parametrize("kind", ["X", "H"])
def test_channel_fidelity_without_noise_matches_operator_form(kind, norm):
    spec = synchronous_gate(kind)
    u = unitary_group.rvs(54, random_state=7)
    sup = support_basis(spec)
    v = u @ sup.T
    images = np.einsum("xi,yj->ijxy", v, v.conj())
    f_ch = relative_channel_fidelity(images, sup, spec, spec.domain, norm)
    f_op = relative_avg_gate_fidelity(u @ spec.domain, spec, norm)
    assert f_ch == pytest.approx(f_op, abs=1e-12)


def test_state_fidelity_properties():
    rng = np.random.default_rng(0)
    r, s = random_density(rng, 6), random_density(rng, 6)
    assert state_fidelity(r, s) == pytest.approx(state_fidelity(s, r), abs=1e-8)
    assert state_fidelity(r, r) == pytest.approx(1.0, abs=1e-8)
    a, b = np.eye(6)[0], np.eye(6)[1]
    assert state_fidelity(np.outer(a, a), np.outer(b, b)) == pytest.approx(0.0, abs=1e-7)
    psi = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    psi /= np.linalg.norm(psi)
    assert state_fidelity_pure(r, psi) == pytest.approx(state_fidelity(r, np.outer(psi, psi.conj())), abs=1e-7)
    # inputs are trace normalized first
    assert state_fidelity(3 * r, s) == pytest.approx(state_fidelity(r, s), abs=1e-12)
    with pytest.raises(ValueError):
        state_fidelity(np.zeros((6, 6)), s)


def test_heralds_sum_to_one():
    u = unitary_group.rvs(54, random_state=2)
    evo = EvolutionResult(np.array([0.0, 1.0]), np.array([np.eye(54), u]), 0.1)
    p0, p1 = heralded_states(evo, initial_state(1))
    tot = np.trace(p0, axis1=1, axis2=2).real + np.trace(p1, axis1=1, axis2=2).real
    assert np.allclose(tot, 1.0, atol=1e-12)
    psi = u @ initial_state(1)
    rho = np.outer(psi, psi.conj())
    dens = EvolutionResult(np.array([1.0]), rho[None], 0.1, "density")
    q0, _ = heralded_states(dens)
    assert np.allclose(q0[0], p0[1], atol=1e-12)


def test_ghz_traces_start_from_product_state():
    evo = EvolutionResult(np.array([0.0]), np.eye(54)[None], 0.1)
    f0, fpi = ghz_traces(evo)
    assert f0.label == "ghz_nu0" and fpi.label == "ghz_nupi"
    assert fpi.values[0] == 0.0
    assert 0.0 < f0.values[0] < 1.0


def test_relative_deviation():
    assert relative_deviation(0.5, 0.4) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        relative_deviation(0.0, 0.1)


def test_trace_maximum_on_monotone_trace():
    t = optimal_time_grid(10.0, 600, 1.2)
    assert t.size == 601 and t[-1] == pytest.approx(12.0)
    tr = FidelityTrace(t, t / 12.0, 10.0)
    m = trace_maximum(tr, a_z=0.5)
    assert m.time == pytest.approx(12.0) and m.value == pytest.approx(1.0)
    assert m.signed == pytest.approx(1.0) and m.deviation == pytest.approx(1.0)
    m = trace_maximum(tr, window=(0.0, 6.0))
    assert m.time == pytest.approx(6.0) and m.signed == pytest.approx(-4.0)
    with pytest.raises(ValueError):
        trace_maximum(tr, window=(20.0, 30.0))


def test_trace_validation():
    with pytest.raises(ValueError):
        FidelityTrace([0.0, 1.0], [0.5, 1.5], 1.0)
    with pytest.raises(ValueError):
        FidelityTrace([0.0, 1.0], [0.5], 1.0)
    tr = FidelityTrace([0.0, 1.0, 2.0], [0.2, 0.9, 0.9], 2.0)
    assert tr.argmax == 1.0 and tr.value_at_ref == 0.9

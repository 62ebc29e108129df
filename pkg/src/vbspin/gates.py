"""Ideal gates on the spin-1 qubit subspaces and the GHZ / collective-qubit protocols."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .quantum_core import expm_generator, kron, partial_trace_electron
from .spin_model import N_NUCLEI, SIGMA, SPIN1

S2 = np.sqrt(2.0)

# electron kets in the (|0>, |-1>) basis
E0 = np.array([1, 0], dtype=complex)
E1 = np.array([0, 1], dtype=complex)
PLUS = (E0 + E1) / S2
MINUS = (E0 - E1) / S2

SUBSPACES = ("yz", "zx", "xy")
# axis whose rotation acts as a flip inside each subspace, and the axis whose pi rotation gives Z
FLIP_AXIS = {"yz": "x", "zx": "y", "xy": "z"}
PHASE_AXIS = {"yz": "z", "zx": "x", "xy": "y"}


class NuclearBasis:
    """Cartesian kets of one spin-1 nucleus in the ``m = (+1, 0, -1)`` basis."""

    m = {1: np.array([1, 0, 0], dtype=complex), 0: np.array([0, 1, 0], dtype=complex),
         -1: np.array([0, 0, 1], dtype=complex)}
    kets = {
        "x": np.array([1, 0, -1], dtype=complex) / S2,
        "y": np.array([1, 0, 1], dtype=complex) / S2,
        "z": np.array([0, 1, 0], dtype=complex),
    }

    @classmethod
    def P(cls, labels: str) -> np.ndarray:
        """Projector ``P^a`` or ``P^{ab}``."""
        return sum(np.outer(cls.kets[a], cls.kets[a].conj()) for a in labels)

    @classmethod
    def X(cls, ab: str) -> np.ndarray:
        a, b = cls.kets[ab[0]], cls.kets[ab[1]]
        return np.outer(a, b.conj()) + np.outer(b, a.conj())

    @classmethod
    def Y(cls, ab: str) -> np.ndarray:
        a, b = cls.kets[ab[0]], cls.kets[ab[1]]
        return -1j * np.outer(a, b.conj()) + 1j * np.outer(b, a.conj())

    @classmethod
    def Z(cls, ab: str) -> np.ndarray:
        return cls.P(ab[0]) - cls.P(ab[1])


NB = NuclearBasis


def collective_nuclear(op3: np.ndarray) -> np.ndarray:
    """``op (x) op (x) op`` on the 27-dim nuclear space."""
    return reduce(np.kron, [op3] * N_NUCLEI)


def entangling_gate(axis: str, phi: float) -> np.ndarray:
    """``exp(-i phi sigma_axis sum_k I_k^axis)``."""
    return expm_generator(kron(SIGMA[axis], _isum(axis)), phi)


def _isum(axis: str) -> np.ndarray:
    eye = np.eye(3)
    return sum(reduce(np.kron, [SPIN1[axis] if j == k else eye for j in range(N_NUCLEI)]) for k in range(N_NUCLEI))


def electron_eigvecs(axis: str) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvectors of ``sigma_axis`` for eigenvalues +1 and -1."""
    w, v = np.linalg.eigh(SIGMA[axis])
    return v[:, 1], v[:, 0]


def euler_form(axis: str, phi: float, k: int | None = None) -> np.ndarray:
    """``exp(-i phi I^axis)`` of one nucleus through its projector decomposition (3 x 3)."""
    c, s = np.cos(phi), np.sin(phi)
    if axis == "x":
        return NB.P("x") + c * NB.P("yz") - 1j * s * NB.X("yz")
    if axis == "y":
        return NB.P("y") + c * NB.P("zx") + 1j * s * NB.Y("zx")
    if axis == "z":
        return NB.P("z") + c * NB.P("xy") - 1j * s * NB.X("xy")
    raise ValueError(f"unknown axis {axis!r}")


def conditional_form(axis: str, phi: float) -> np.ndarray:
    """``|+a><+a| (x) prod_k e^{-i phi I^a} + |-a><-a| (x) prod_k e^{+i phi I^a}``."""
    vp, vm = electron_eigvecs(axis)
    return kron(np.outer(vp, vp.conj()), collective_nuclear(euler_form(axis, phi))) + kron(
        np.outer(vm, vm.conj()), collective_nuclear(euler_form(axis, -phi))
    )


# --------------------------------------------------------------------------
# synchronous gates


def flip(subspace: str = "yz") -> np.ndarray:
    return collective_nuclear(NB.X(subspace))


def phase(subspace: str = "yz") -> np.ndarray:
    return collective_nuclear(NB.Z(subspace))


def sub_projector(subspace: str = "yz") -> np.ndarray:
    return collective_nuclear(NB.P(subspace))


def rotation(phi: float, subspace: str = "yz") -> np.ndarray:
    """``prod_k (cos phi P_k + i sin phi X_k)`` on the subspace (zero elsewhere)."""
    return collective_nuclear(np.cos(phi) * NB.P(subspace) + 1j * np.sin(phi) * NB.X(subspace))


def hadamard(subspace: str = "yz") -> np.ndarray:
    """``prod_k (P_k + i X_k) / sqrt(2)``; squares to ``-i X`` on the subspace."""
    return rotation(np.pi / 4, subspace)


@dataclass
class GateSpec:
    label: str
    target: np.ndarray
    domain: np.ndarray
    axis: str
    phi: float
    correction: np.ndarray | None = None  # electron gate applied after the entangling step
    subspace: str = "yz"
    source: str = "IDEAL"
    evolution: object = field(default=None, repr=False)

    @property
    def logical(self) -> np.ndarray:
        if self.correction is None:
            return self.target
        return kron(self.correction, np.eye(27)) @ self.target

    def realized(self, u: np.ndarray) -> np.ndarray:
        """Operator ``E = U * domain`` compared against ``target``."""
        return u @ self.domain

    def ideal_realization(self) -> np.ndarray:
        return self.realized(entangling_gate(self.axis, self.phi))


def synchronous_gate(kind: str, subspace: str = "yz", phi: float | None = None) -> GateSpec:
    """Target operator and recipe for X, Z, H or R(phi) on a collective qubit subspace.

    X: ``U_a(pi/2)`` on ``1 (x) P`` with target ``i sigma_a (x) X``, corrected by ``-i sigma_a``.
    Z: ``U_b(pi)`` on ``1 (x) P`` with target ``-1 (x) Z``.
    H / R: ``U_a(phi)`` on ``|-a><-a| (x) P`` with target ``|-a><-a| (x) R(phi)``.
    Here ``a`` is the flip axis of the subspace and ``b`` its phase axis.  On
    ``zx`` the flip realized by ``U_y`` is the ``Y`` flip (``I_y = -Y^zx``).
    """
    if subspace not in SUBSPACES:
        raise ValueError(f"subspace must be one of {SUBSPACES}")
    kind = kind.upper()
    a, b = FLIP_AXIS[subspace], PHASE_AXIS[subspace]
    p = sub_projector(subspace)
    eye2 = np.eye(2)
    flip_op = collective_nuclear(-NB.Y(subspace)) if a == "y" else flip(subspace)
    if kind == "X":
        dom = kron(eye2, p)
        return GateSpec(f"X_{subspace}", 1j * kron(SIGMA[a], flip_op), dom, a, np.pi / 2, -1j * SIGMA[a], subspace)
    if kind == "Z":
        dom = kron(eye2, p)
        z = phase(subspace)
        return GateSpec(f"Z_{subspace}", -kron(eye2, z), dom, b, np.pi, -eye2, subspace)
    if kind in ("H", "R"):
        ang = np.pi / 4 if kind == "H" else phi
        if ang is None:
            raise ValueError("R needs phi")
        _, vm = electron_eigvecs(a)
        em = np.outer(vm, vm.conj())
        dom = kron(em, p)
        half = collective_nuclear(euler_form(a, -ang) @ NB.P(subspace))
        label = f"H_{subspace}" if kind == "H" else f"R_{subspace}({ang:.6g})"
        return GateSpec(label, kron(em, half), dom, a, ang, subspace=subspace)
    raise ValueError(f"unknown gate kind {kind!r}")


def support_basis(spec: GateSpec) -> np.ndarray:
    """Rows ``|s> (x) |a b c>`` (electron ``s``, subspace kets ``a, b, c``) spanning the domain.

    Each row is an eigenvector of the parity that block-diagonalizes the
    Hamiltonian, so channel images can be propagated block by block.
    """
    kets = [NB.kets[ch] for ch in spec.subspace]
    rows = []
    for e in (E0, E1):
        for k1 in kets:
            for k2 in kets:
                for k3 in kets:
                    rows.append(reduce(np.kron, [e, k1, k2, k3]))
    return np.array(rows)


# --------------------------------------------------------------------------
# GHZ preparation


def bar_kets(m_i: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """``|0bar> = (m|x> - i|z>)/sqrt2`` and ``|1bar> = (m|x> + i|z>)/sqrt2``."""
    if m_i not in (-1, 1):
        raise ValueError("m_I must be +1 or -1")
    x, z = NB.kets["x"], NB.kets["z"]
    return (m_i * x - 1j * z) / S2, (m_i * x + 1j * z) / S2


def ghz_state(nu: float, m_i: int = 1) -> np.ndarray:
    b0, b1 = bar_kets(m_i)
    return (reduce(np.kron, [b0] * 3) + np.exp(1j * nu) * reduce(np.kron, [b1] * 3)) / S2


def initial_state(m_i: int = 1, electron: np.ndarray = E0) -> np.ndarray:
    return np.kron(electron, reduce(np.kron, [NB.m[m_i]] * 3))


@dataclass
class GHZOutcome:
    herald: int  # 0 or -1
    rho: np.ndarray  # sub-normalized 27 x 27
    probability: float
    nu: float
    fidelity: float

    @property
    def normalized(self) -> np.ndarray:
        return self.rho / self.probability


def herald_branch(psi: np.ndarray, herald: int) -> np.ndarray:
    """Nuclear ket left after projecting the electron on ``|0>`` or ``|-1>`` (unnormalized)."""
    return psi.reshape(2, 27)[0 if herald == 0 else 1]


def ghz_protocol(m_i: int = 1, u: np.ndarray | None = None) -> tuple[GHZOutcome, GHZOutcome]:
    """Apply ``u`` (default the ideal ``U_x(pi/2)``) to ``|0>|m>^3`` and herald on the electron."""
    from .metrics import state_fidelity_pure

    u = entangling_gate("x", np.pi / 2) if u is None else u
    psi = u @ initial_state(m_i)
    rho = np.outer(psi, psi.conj())
    out = []
    for herald, nu in ((0, 0.0), (-1, np.pi)):
        proj = np.diag([1.0, 0.0]) if herald == 0 else np.diag([0.0, 1.0])
        pr = kron(proj, np.eye(27))
        sub = partial_trace_electron(pr @ rho @ pr)
        prob = float(np.trace(sub).real)
        fid = state_fidelity_pure(sub, ghz_state(nu, m_i)) if prob > 1e-14 else 0.0
        out.append(GHZOutcome(herald, sub, prob, nu, fid))
    return out[0], out[1]


def phase_correction(nuclear: np.ndarray) -> np.ndarray:
    """Map a ``GHZ_pi`` branch onto ``GHZ_0``: electron set to ``|->``, then ``U_y(pi/2)``.

    Returns the nuclear ket that accompanies ``-i sigma_y |->``.
    """
    full = entangling_gate("y", np.pi / 2) @ np.kron(MINUS, nuclear)
    e = -1j * SIGMA["y"] @ MINUS
    return e.conj() @ full.reshape(2, 27)


def ghz_transfer_to_yz(state: np.ndarray) -> np.ndarray:
    """Apply the ideal ``U_z(pi/2)``; with the electron in ``|0>`` this sends ``|x>_k -> -i|y>_k``."""
    state = np.asarray(state, dtype=complex)
    if np.linalg.norm(state.reshape(2, 27)[1]) > 1e-12:
        raise ValueError("electron must be in |0>")
    return entangling_gate("z", np.pi / 2) @ state


def collective_write(alpha: complex, beta: complex, m_i: int = 1, u: np.ndarray | None = None):
    """Write ``(alpha, beta)`` from the electron ``alpha|+> + beta|->`` onto the nuclei.

    Returns ``[(herald, probability, normalized nuclear ket)]`` for heralds 0 and -1.
    """
    if not np.isclose(abs(alpha) ** 2 + abs(beta) ** 2, 1.0, atol=1e-10):
        raise ValueError("|alpha|^2 + |beta|^2 must be 1")
    u = entangling_gate("x", np.pi / 2) if u is None else u
    psi = u @ initial_state(m_i, alpha * PLUS + beta * MINUS)
    out = []
    for herald in (0, -1):
        v = herald_branch(psi, herald)
        p = float(np.vdot(v, v).real)
        out.append((herald, p, v / np.sqrt(p) if p > 0 else v))
    return out


def logical_state(alpha: complex, beta: complex, m_i: int = 1) -> np.ndarray:
    b0, b1 = bar_kets(m_i)
    return alpha * reduce(np.kron, [b0] * 3) + beta * reduce(np.kron, [b1] * 3)


@dataclass
class ReadOutcome:
    electron: np.ndarray  # reduced 2 x 2 density matrix
    purity: float
    factorization_error: float  # 1 - purity of the electron marginal
    claimed: np.ndarray  # normalized (alpha~, -i m beta~)
    overlap: float  # <claimed| rho_e |claimed>


def collective_read(alpha: complex, beta: complex, sign: int = 1, m_i: int = 1, z_angle: float = np.pi / 12) -> ReadOutcome:
    """Apply ``U_z(z_angle) U_x(pi/2)`` to ``|0> (alpha|0bar^3> + sign beta|1bar^3>)``.

    Reports how far the result is from the product ``(alpha~|0> - i m beta~|-1>) |xi>``.
    """
    nuc = logical_state(alpha, sign * beta, m_i)
    nuc = nuc / np.linalg.norm(nuc)
    psi = entangling_gate("z", z_angle) @ entangling_gate("x", np.pi / 2) @ np.kron(E0, nuc)
    m = psi.reshape(2, 27)
    rho_e = m @ m.conj().T
    purity = float(np.trace(rho_e @ rho_e).real)
    at = (alpha + beta) / S2
    bt = (alpha - beta) / S2
    claimed = np.array([at, -1j * m_i * bt])
    claimed = claimed / np.linalg.norm(claimed)
    overlap = float(np.vdot(claimed, rho_e @ claimed).real)
    return ReadOutcome(rho_e, purity, 1.0 - purity, claimed, overlap)

"""Physical constants, hyperfine data and every Hamiltonian of the model.

Units: the public parameter containers (:class:`PhysicalConstants`,
:class:`HyperfineSet`) hold values the way experimentalists quote them,
angular frequencies in units of 2*pi*MHz and fields in mT.  Everything
downstream (``DerivedParams`` and all Hamiltonians) is in rad/ns, so that
times come out in ns.

Basis conventions: the electron qubit is ``(|0>, |-1>)`` with
``sigma_z = |0><0| - |-1><-1|``; each 14N nucleus is a spin-1 in the
``(|+1>, |0>, |-1>)`` eigenbasis of ``I_z``.  The 54-dim space is
``electron (x) nucleus_1 (x) nucleus_2 (x) nucleus_3``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .quantum_core import kron

MHZ = 2 * np.pi * 1e-3  # 1 (2*pi*MHz) in rad/ns
SQRT2 = np.sqrt(2.0)
N_NUCLEI = 3
DIM = 2 * 3**N_NUCLEI

# coefficient of A^xy in the Sigma_k terms of the rotating-frame Hamiltonian.
# XY_COEFF_FRAME is what the exact frame transformation of the lab Hamiltonian
# gives; the default halves it (see README, "Conventions").
XY_COEFF_FRAME = 1 / SQRT2
XY_COEFF = 1 / (2 * SQRT2)

PARTS = ("EFF", "RW_ODD", "CRW", "ALL")


# --------------------------------------------------------------------------
# spin operators

SIGMA = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    "i": np.eye(2, dtype=complex),
}

SPIN1 = {
    "x": np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / SQRT2,
    "y": np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex) / SQRT2,
    "z": np.diag([1.0, 0.0, -1.0]).astype(complex),
    "i": np.eye(3, dtype=complex),
}


def embed(electron_op: np.ndarray, nuclear_op: np.ndarray | None = None, k: int = 0) -> np.ndarray:
    """``electron_op (x) nuclear_op`` with the nuclear factor on nucleus ``k``."""
    nuc = [SPIN1["i"]] * N_NUCLEI
    if nuclear_op is not None:
        nuc[k] = nuclear_op
    return kron(electron_op, *nuc)


def embed_nuclear(ops: list[np.ndarray]) -> np.ndarray:
    """Product operator on the three nuclei (27 x 27)."""
    return kron(*ops)


@lru_cache(maxsize=None)
def _coupling_ops() -> np.ndarray:
    # per nucleus: sz Iz, sx Ix, sy Iy, sx Iy, sy Ix
    ops = []
    for k in range(N_NUCLEI):
        for a, b in (("z", "z"), ("x", "x"), ("y", "y"), ("x", "y"), ("y", "x")):
            ops.append(embed(SIGMA[a], SPIN1[b], k))
    arr = np.array(ops)
    arr.setflags(write=False)
    return arr


def collective(electron_axis: str, nuclear_axis: str) -> np.ndarray:
    """``sigma_a (x) sum_k I_k^b`` on the full space."""
    return sum(embed(SIGMA[electron_axis], SPIN1[nuclear_axis], k) for k in range(N_NUCLEI))


def nuclear_sum(axis: str) -> np.ndarray:
    """``1 (x) sum_k I_k^axis``."""
    return collective("i", axis)


def parity_blocks() -> tuple[np.ndarray, np.ndarray]:
    """Index sets of the two eigenspaces of ``sigma_z (x) prod_k exp(i pi I_k^z)``.

    Every Hamiltonian built here commutes with this parity, so in the
    permuted basis they are block diagonal with two 27 x 27 blocks.
    """
    e = np.array([1, -1])
    n = np.array([-1, 1, -1])  # (-1)^m for m = +1, 0, -1
    p = kron(e, n, n, n).real
    return np.flatnonzero(p > 0), np.flatnonzero(p < 0)


# --------------------------------------------------------------------------
# parameters

DEFAULT_HYPERFINE = (
    ((79.406, 18.391, 0.0), (18.391, 58.170, 0.0), (0.0, 0.0, 48.159)),
    ((46.944, 0.0, 0.0), (0.0, 90.025, 0.0), (0.0, 0.0, 48.158)),
    ((79.406, -18.391, 0.0), (-18.391, 58.170, 0.0), (0.0, 0.0, 48.159)),
)


@dataclass(frozen=True)
class PhysicalConstants:
    """Electron/nuclear constants in 2*pi*MHz (gyromagnetic ratios per mT)."""

    d_gs: float = 3471.0
    gamma_e: float = 28.025
    gamma_n: float = 3.077e-3
    quadrupole: tuple[float, float, float] = (0.383, 0.383, 0.383)

    def __post_init__(self):
        vals = (self.d_gs, self.gamma_e, self.gamma_n, *self.quadrupole)
        if not all(np.isfinite(vals)):
            raise ValueError("constants must be finite")
        if self.d_gs <= 0:
            raise ValueError("d_gs must be positive")
        if not self.gamma_e > self.gamma_n > 0:
            raise ValueError("need gamma_e > gamma_n > 0")
        if len(self.quadrupole) != N_NUCLEI:
            raise ValueError("one quadrupole constant per nucleus")


@dataclass(frozen=True)
class HyperfineSet:
    """Three hyperfine tensors in 2*pi*MHz with the D3h block structure."""

    tensors: tuple = DEFAULT_HYPERFINE

    def __post_init__(self):
        mats = self.matrices()
        if mats.shape != (N_NUCLEI, 3, 3):
            raise ValueError("need three 3x3 hyperfine tensors")
        for k, a in enumerate(mats):
            if not np.allclose(a, a.T):
                raise ValueError(f"hyperfine tensor {k} is not symmetric")
            if np.any(a[[0, 1, 2, 2], [2, 2, 0, 1]] != 0):
                raise ValueError(f"hyperfine tensor {k} mixes z with the in-plane block")
        zz = mats[:, 2, 2]
        if zz.max() - zz.min() > 0.01 + 1e-12:
            raise ValueError("A^zz must agree across nuclei within 0.01 (2*pi*MHz)")

    def matrices(self) -> np.ndarray:
        return np.asarray(self.tensors, dtype=float)

    def with_tensor(self, k: int, tensor) -> "HyperfineSet":
        t = list(self.tensors)
        t[k] = tuple(tuple(float(x) for x in row) for row in np.asarray(tensor, dtype=float))
        return replace(self, tensors=tuple(t))


@dataclass(frozen=True)
class DerivedParams:
    """Frequencies entering the rotating-frame Hamiltonian, all in rad/ns."""

    field_mT: float
    omega_0: float
    omega_k: np.ndarray
    a_z: float
    a_perp: float
    delta: float
    delta_k: np.ndarray
    sigma_k: np.ndarray
    a_zz_k: np.ndarray
    a_perp_k: np.ndarray
    b_perp_k: np.ndarray
    a_xy_k: np.ndarray
    quadrupole_k: np.ndarray = field(default_factory=lambda: np.zeros(N_NUCLEI))

    @property
    def sigma(self) -> float:
        return float(np.mean(self.sigma_k))

    @property
    def resolution(self) -> float:
        """Rotation-angle increment per CPMG period, ``4 a_perp / |Delta|``."""
        return 4 * self.a_perp / abs(self.delta)

    @property
    def max_frequency(self) -> float:
        """Largest oscillation frequency present in the rotating frame."""
        return float(max(np.abs(self.sigma_k).max(), np.abs(self.delta_k).max()))


def derive_params(c: PhysicalConstants, hf: HyperfineSet, field_mT: float) -> DerivedParams:
    if field_mT < 0:
        raise ValueError("field must be >= 0 (it points along +z)")
    a = hf.matrices() * MHZ
    omega_0 = (c.d_gs - c.gamma_e * field_mT) * MHZ
    omega_k = c.gamma_n * field_mT * MHZ + a[:, 2, 2] / 2
    return DerivedParams(
        field_mT=float(field_mT),
        omega_0=float(omega_0),
        omega_k=omega_k,
        a_z=float(a[:, 2, 2].sum() / 6),
        a_perp=float((a[:, 0, 0] + a[:, 1, 1]).sum() / (6 * SQRT2)),
        delta=float(np.mean(omega_0 - omega_k)),
        delta_k=omega_0 - omega_k,
        sigma_k=omega_0 + omega_k,
        a_zz_k=a[:, 2, 2].copy(),
        a_perp_k=(a[:, 0, 0] + a[:, 1, 1]) / (2 * SQRT2),
        b_perp_k=(a[:, 0, 0] - a[:, 1, 1]) / (2 * SQRT2),
        a_xy_k=a[:, 0, 1].copy(),
        quadrupole_k=np.asarray(c.quadrupole, dtype=float) * MHZ,
    )


def averaged_couplings(hf: HyperfineSet) -> tuple[float, float]:
    """``(a_z, a_perp)`` in 2*pi*MHz."""
    a = hf.matrices()
    return a[:, 2, 2].sum() / 6, (a[:, 0, 0] + a[:, 1, 1]).sum() / (6 * SQRT2)


def b_op(phi: float, n_rev: int, c: PhysicalConstants, hf: HyperfineSet, *, exact: bool = False) -> float:
    """Operating field (mT) above the level crossing for a U_x(phi) in ``n_rev`` periods.

    Default is the closed form ``(4 N a_perp / phi + D + a_z) / (gamma_e - gamma_n)``.
    With ``exact=True`` the field solves ``|Delta(B)| = 4 N a_perp / |phi|`` for the
    frequencies of :func:`derive_params`, so ``|phi| = N * resolution`` to rounding.
    The two differ by ~0.5 % in field and ~0.8 % in ``|Delta|``.
    """
    if phi == 0:
        raise ValueError("phi = 0 has no operating field")
    if n_rev < 1:
        raise ValueError("need at least one revolution")
    a_z, a_perp = averaged_couplings(hf)
    if exact:
        return (4 * n_rev * a_perp / abs(phi) + c.d_gs - a_z) / (c.gamma_e + c.gamma_n)
    return (4 * n_rev * a_perp / phi + c.d_gs + a_z) / (c.gamma_e - c.gamma_n)


def design_time(phi: float, p: int, hf: HyperfineSet) -> float:
    """Target U_x(phi) time ``2 pi p |phi| / (4 a_perp)`` in ns.

    Equals ``N T`` whenever the resolution identity holds exactly.
    """
    _, a_perp = averaged_couplings(hf)
    return 2 * np.pi * p * abs(phi) / (4 * a_perp * MHZ)


# --------------------------------------------------------------------------
# Hamiltonians


def lab_hamiltonian(c: PhysicalConstants, hf: HyperfineSet, field_mT: float, *, quadrupole: bool = False) -> np.ndarray:
    """Two-level-electron lab-frame Hamiltonian (rad/ns), field along z."""
    p = derive_params(c, hf, field_mT)
    a = hf.matrices() * MHZ
    h = -p.omega_0 / 2 * embed(SIGMA["z"])
    for k in range(N_NUCLEI):
        h -= p.omega_k[k] * embed(SIGMA["i"], SPIN1["z"], k)
        h += a[k, 2, 2] / 2 * embed(SIGMA["z"], SPIN1["z"], k)
        for i, ea in enumerate("xy"):
            for j, nb in enumerate("xy"):
                h += a[k, i, j] / SQRT2 * embed(SIGMA[ea], SPIN1[nb], k)
    if quadrupole:
        h += quadrupole_term(c)
    return h


def free_hamiltonian(p: DerivedParams) -> np.ndarray:
    """``-omega_0/2 sigma_z - sum_k omega_k I_k^z``, the rotating-frame reference."""
    h = -p.omega_0 / 2 * embed(SIGMA["z"])
    for k in range(N_NUCLEI):
        h -= p.omega_k[k] * embed(SIGMA["i"], SPIN1["z"], k)
    return h


def quadrupole_term(c: PhysicalConstants | DerivedParams) -> np.ndarray:
    """``sum_k Q_k (I_k^z)^2`` embedded in the 54-dim space (rad/ns)."""
    if isinstance(c, DerivedParams):
        q = c.quadrupole_k
    else:
        q = np.asarray(c.quadrupole, dtype=float) * MHZ
    iz2 = SPIN1["z"] @ SPIN1["z"]
    return sum(q[k] * embed(SIGMA["i"], iz2, k) for k in range(N_NUCLEI))


class RotatingFrameModel:
    """Callable ``t -> H(t)`` for the rotating-frame Hamiltonian with filters.

    ``parts`` picks the effective (``EFF``), odd rotating (``RW_ODD``) or
    counter-rotating (``CRW``) piece, or their sum (``ALL``).  ``averaged``
    swaps the per-nucleus coefficients of the effective piece for their
    averages ``a_z``, ``a_perp`` and ``Delta``; it defaults to ``True`` for
    ``EFF`` alone and ``False`` otherwise.
    """

    def __init__(
        self,
        params: DerivedParams,
        filters=None,
        parts: str = "ALL",
        *,
        averaged: bool | None = None,
        quadrupole: bool = False,
        xy_coefficient: float = XY_COEFF,
    ):
        if parts not in PARTS:
            raise ValueError(f"parts must be one of {PARTS}, got {parts!r}")
        self.params = params
        self.filters = filters
        self.parts = parts
        self.averaged = (parts == "EFF") if averaged is None else averaged
        self.xy_coefficient = xy_coefficient
        self.ops = _coupling_ops()
        self.static = quadrupole_term(params) if quadrupole else None

    def breakpoints(self) -> tuple[float, ...]:
        return () if self.filters is None else tuple(self.filters.breakpoints)

    def coefficients(self, t: float, fx: float = 1.0, fy: float = 1.0, fz: float = 1.0) -> np.ndarray:
        p = self.params
        use_eff = self.parts in ("EFF", "ALL")
        use_odd = self.parts in ("RW_ODD", "ALL")
        use_crw = self.parts in ("CRW", "ALL")
        c = np.zeros((N_NUCLEI, 5))
        if use_eff:
            if self.averaged:
                cd = np.cos(p.delta * t)
                c[:, 0] = fz * p.a_z
                c[:, 1] = fx * p.a_perp * cd
                c[:, 2] = fy * p.a_perp * cd
            else:
                cd = np.cos(p.delta_k * t)
                c[:, 0] = fz * p.a_zz_k / 2
                c[:, 1] = fx * p.a_perp_k * cd
                c[:, 2] = fy * p.a_perp_k * cd
        if use_odd:
            sd = p.a_perp_k * np.sin(p.delta_k * t)
            c[:, 3] -= fx * sd
            c[:, 4] += fy * sd
        if use_crw:
            cs, ss = np.cos(p.sigma_k * t), np.sin(p.sigma_k * t)
            axy = self.xy_coefficient * p.a_xy_k
            even = p.b_perp_k * cs - axy * ss  # multiplies (sx Ix - sy Iy)
            odd = p.b_perp_k * ss + axy * cs  # multiplies (sx Iy + sy Ix)
            c[:, 1] += fx * even
            c[:, 2] -= fy * even
            c[:, 3] += fx * odd
            c[:, 4] += fy * odd
        return c.ravel()

    def __call__(self, t: float) -> np.ndarray:
        if self.filters is None:
            fx = fy = fz = 1.0
        else:
            fx, fy, fz = self.filters(t)
        h = np.tensordot(self.coefficients(t, fx, fy, fz), self.ops, axes=1)
        if self.static is not None:
            h = h + self.static
        return h


def rotating_hamiltonian(
    t: float,
    params: DerivedParams,
    filters=None,
    parts: str = "ALL",
    *,
    averaged: bool | None = None,
    quadrupole: bool = False,
    xy_coefficient: float = XY_COEFF,
) -> np.ndarray:
    """Rotating-frame Hamiltonian at time ``t`` (54 x 54, rad/ns)."""
    model = RotatingFrameModel(
        params, filters, parts, averaged=averaged, quadrupole=quadrupole, xy_coefficient=xy_coefficient
    )
    return model(t)

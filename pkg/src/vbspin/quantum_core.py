"""Dense complex linear algebra shared by every other module.

Everything here works on plain ``numpy`` arrays of dtype ``complex128``.
The largest operator in the package is 54 x 54, so dense storage is used
throughout.
"""
from __future__ import annotations

from functools import reduce

import numpy as np

HERMITIAN_TOL = 1e-10
PSD_CLAMP = 1e-10
PSD_REJECT = 1e-8

ELECTRON_DIM = 2
NUCLEAR_DIM = 27


class NonHermitianError(ValueError):
    """Raised when a generator is expected to be Hermitian but is not."""


class NonPhysicalStateError(ValueError):
    """Raised when a density matrix has a clearly negative eigenvalue."""


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().swapaxes(-1, -2)


def anti_hermitian_norm(h: np.ndarray) -> float:
    return float(np.linalg.norm(h - dagger(h)) / 2)


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of matrices, left to right."""
    if not ops:
        raise ValueError("kron needs at least one operand")
    return reduce(np.kron, ops)


def expm_generator(h: np.ndarray, t: float = 1.0) -> np.ndarray:
    """Return ``exp(-i h t)`` for Hermitian ``h`` using its eigendecomposition.

    The eigenvector route keeps the result unitary to rounding error, which
    matters when thousands of short steps are chained together.
    """
    h = np.asarray(h, dtype=complex)
    resid = anti_hermitian_norm(h)
    if resid > HERMITIAN_TOL * max(1.0, float(np.linalg.norm(h))):
        raise NonHermitianError(
            f"generator is not Hermitian: ||(h - h^dag)/2||_F = {resid:.3e}"
        )
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ dagger(v)


def expm_hermitian_unchecked(h: np.ndarray, t: float) -> np.ndarray:
    # hot path of the integrators; caller guarantees Hermiticity
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def partial_trace_electron(rho: np.ndarray) -> np.ndarray:
    """Trace out the leading two-level electron factor of a 54-dim operator."""
    rho = np.asarray(rho)
    if rho.shape != (ELECTRON_DIM * NUCLEAR_DIM,) * 2:
        raise ValueError(
            f"expected a {ELECTRON_DIM * NUCLEAR_DIM}x{ELECTRON_DIM * NUCLEAR_DIM} "
            f"operator with the electron as leading factor, got {rho.shape}"
        )
    r = rho.reshape(ELECTRON_DIM, NUCLEAR_DIM, ELECTRON_DIM, NUCLEAR_DIM)
    return np.einsum("inim->nm", r)


def hermitize(a: np.ndarray) -> np.ndarray:
    return (a + dagger(a)) / 2


def sqrt_psd(rho: np.ndarray) -> np.ndarray:
    """Principal square root of a positive semidefinite matrix.

    Eigenvalues in ``[-1e-8, 0)`` are treated as integration noise and set to
    zero; anything more negative is rejected.
    """
    rho = np.asarray(rho, dtype=complex)
    w, v = np.linalg.eigh(hermitize(rho))
    if w.size and w.min() < -PSD_REJECT:
        raise NonPhysicalStateError(
            f"matrix has eigenvalue {w.min():.3e} < -{PSD_REJECT:g}"
        )
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dagger(v)


def haar_state(dim: int, seed: int | np.random.Generator | None = None) -> np.ndarray:
    """Haar-random pure state: a normalized i.i.d. complex Gaussian vector."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)


def haar_states(dim: int, count: int, seed: int | None = None) -> np.ndarray:
    """``count`` Haar-random states stacked as rows."""
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def ket(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).ravel()
    return v / np.linalg.norm(v)


def projector(vec: np.ndarray) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).ravel()
    return np.outer(v, v.conj())


def is_unitary(u: np.ndarray, tol: float = 1e-10) -> bool:
    return bool(np.abs(dagger(u) @ u - np.eye(u.shape[0])).max() < tol)


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-10) -> bool:
    """True when ``a = e^{i theta} b`` for some global phase theta."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    overlap = np.vdot(b, a)
    if abs(overlap) < 1e-300:
        return bool(np.abs(a).max() < tol and np.abs(b).max() < tol)
    phase = overlap / abs(overlap)
    return bool(np.abs(a - phase * b).max() < tol)

"""Exception types and input-validation helpers shared by every module."""

from __future__ import annotations

import numbers

import numpy as np

ALGEBRA_TOL = 1e-12
PSD_TOL = 1e-10


class SptqError(ValueError):
    """Base class for all errors raised by this package.

    ``code`` is a short machine-parseable identifier used by the CLI.
    """

    code = "E_INPUT"


class DimensionError(SptqError):
    code = "E_DIMENSION"


class NotPhysicalError(SptqError):
    code = "E_NOT_PHYSICAL"


class DegenerateError(SptqError):
    code = "E_DEGENERATE"


class InconsistentBudgetError(SptqError):
    code = "E_BUDGET"


class UnderdeterminedFitError(SptqError):
    code = "E_UNDERDETERMINED"


class PeriodMismatchError(SptqError):
    code = "E_PERIOD"


def check_unit_interval(value, name: str) -> float:
    """Return ``value`` as float, raising if it is not a number in [0, 1]."""
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise SptqError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise SptqError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_nonnegative(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise SptqError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    if not np.isfinite(value) or value < 0:
        raise SptqError(f"{name} must be finite and >= 0, got {value}")
    return value


def check_square(mat, name: str = "operator", dims=(2, 4, 16)) -> np.ndarray:
    mat = np.asarray(mat, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {mat.shape}")
    if dims is not None and mat.shape[0] not in dims:
        raise DimensionError(f"{name} dimension {mat.shape[0]} not in {tuple(dims)}")
    return mat


def is_unitary(mat, tol: float = ALGEBRA_TOL) -> bool:
    mat = np.asarray(mat)
    return np.allclose(mat.conj().T @ mat, np.eye(mat.shape[0]), atol=tol, rtol=0)


def check_density(rho, dim: int | None = None, name: str = "state",
                  tol: float = ALGEBRA_TOL, psd_tol: float = PSD_TOL) -> np.ndarray:
    """Validate a density matrix: square, Hermitian, unit trace, PSD."""
    rho = check_square(rho, name, dims=None if dim is None else (dim,))
    if not np.allclose(rho, rho.conj().T, atol=tol, rtol=0):
        raise NotPhysicalError(f"{name} is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol:
        raise NotPhysicalError(f"{name} trace is {tr!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -psd_tol:
        raise NotPhysicalError(f"{name} has a negative eigenvalue")
    return rho


def check_ket(psi, dim: int | None = None, name: str = "ket",
              tol: float = ALGEBRA_TOL) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise DimensionError(f"{name} must be a 1-d amplitude vector, got shape {psi.shape}")
    if dim is not None and psi.shape[0] != dim:
        raise DimensionError(f"{name} must have {dim} amplitudes, got {psi.shape[0]}")
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > tol:
        raise NotPhysicalError(f"{name} is not normalized (norm^2 = {norm!r})")
    return psi

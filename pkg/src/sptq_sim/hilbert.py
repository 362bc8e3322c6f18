"""Basis conventions and dense linear algebra for one- and two-photon states.

A photon carries two qubits: momentum (T=0, B=1) and polarization (H=0,
V=1).  Single-photon index is ``2*m + p``; pair index is
``4*signal + idler`` with the signal photon as the left tensor factor.
The four qubits of a pair are therefore ordered ``(mS, pS, mI, pI)``.

Pair states are always 16x16 density matrices; pure states are embedded as
rank-1 projectors via :func:`density`.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ._validation import (
    ALGEBRA_TOL,
    DimensionError,
    SptqError,
    check_density,
    check_ket,
    check_square,
    is_unitary,
)

T, B = 0, 1
H, V = 0, 1

PHOTON_DIM = 4
PAIR_DIM = 16

PHOTONS = ("signal", "idler")
QUBITS = ("mS", "pS", "mI", "pI")

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


def photon_index(m: int, p: int) -> int:
    return 2 * m + p


def pair_index(signal: int, idler: int) -> int:
    return 4 * signal + idler


def basis_ket(index: int, dim: int = PHOTON_DIM) -> np.ndarray:
    e = np.zeros(dim, dtype=complex)
    e[index] = 1.0
    return e


def photon_ket(momentum, polarization) -> np.ndarray:
    """Product photon state ``momentum (x) polarization`` from two 2-vectors."""
    return np.kron(np.asarray(momentum, dtype=complex), np.asarray(polarization, dtype=complex))


def tensor(a, b) -> np.ndarray:
    """Kronecker product ``a (x) b`` in the basis ordering above.

    Both arguments must be kets (1-d) or both operators (2-d); the combined
    dimension may not exceed 16.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim != b.ndim or a.ndim not in (1, 2):
        raise DimensionError("tensor needs two kets or two square operators")
    if a.ndim == 2:
        check_square(a, "left factor", dims=None)
        check_square(b, "right factor", dims=None)
    if a.shape[0] * b.shape[0] > PAIR_DIM:
        raise DimensionError(
            f"tensor product dimension {a.shape[0] * b.shape[0]} exceeds {PAIR_DIM}")
    return np.kron(a, b)


def density(psi) -> np.ndarray:
    psi = check_ket(psi)
    return np.outer(psi, psi.conj())


def as_density(state, dim: int = PAIR_DIM) -> np.ndarray:
    """Accept a normalized ket or a density matrix; return a density matrix."""
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 1:
        return density(check_ket(arr, dim))
    return check_density(arr, dim)


def _photon_slot(photon: str) -> int:
    try:
        return PHOTONS.index(photon)
    except ValueError:
        raise SptqError(f"photon must be one of {PHOTONS}, got {photon!r}") from None


def _kraus_list(g) -> list[np.ndarray]:
    g = getattr(g, "mat", g)
    if isinstance(g, (list, tuple)):
        ops = [check_square(getattr(k, "mat", k), "Kraus operator", dims=(4,)) for k in g]
        if not ops:
            raise SptqError("empty Kraus set")
        total = sum(k.conj().T @ k for k in ops)
        if not np.allclose(total, I4, atol=ALGEBRA_TOL, rtol=0):
            raise SptqError("Kraus operators do not sum to identity")
        return ops
    op = check_square(g, "gate", dims=(4,))
    if not is_unitary(op):
        raise SptqError("single-photon gate is not unitary; pass a Kraus list instead")
    return [op]


def lift(g, photon: str) -> np.ndarray:
    """Embed a 4x4 single-photon operator into the 16-dim pair space."""
    g = check_square(getattr(g, "mat", g), "gate", dims=(4,))
    return np.kron(g, I4) if _photon_slot(photon) == 0 else np.kron(I4, g)


def apply_to_photon(state, photon: str, g) -> np.ndarray:
    """Apply a unitary or a Kraus set to one photon of a pair.

    ``g`` may be a 4x4 unitary, a :class:`~sptq_sim.gates.GateOp`, or a
    sequence of 4x4 Kraus operators.
    """
    rho = check_density(state, PAIR_DIM)
    out = np.zeros_like(rho)
    for k in _kraus_list(g):
        big = lift(k, photon)
        out += big @ rho @ big.conj().T
    return out


def apply_to_single(state, g) -> np.ndarray:
    """Apply a unitary or Kraus set to a 4x4 single-photon density matrix."""
    rho = check_density(state, PHOTON_DIM)
    return sum(k @ rho @ k.conj().T for k in _kraus_list(g))


def partial_trace(state, keep: str) -> np.ndarray:
    rho = check_density(state, PAIR_DIM)
    r = rho.reshape(4, 4, 4, 4)
    if _photon_slot(keep) == 0:
        return np.einsum("ajbj->ab", r)
    return np.einsum("jajb->ab", r)


def reduce_qubits(state, keep: Sequence[str]) -> np.ndarray:
    """Reduced density matrix on a subset of the qubits ``(mS, pS, mI, pI)``.

    Works for 4x4 single-photon states too, whose qubits are ``(m, p)``.
    The kept qubits appear in their canonical order regardless of the order
    given in ``keep``.
    """
    rho = np.asarray(state, dtype=complex)
    if rho.shape == (PAIR_DIM, PAIR_DIM):
        names = QUBITS
    elif rho.shape == (PHOTON_DIM, PHOTON_DIM):
        names = ("m", "p")
    else:
        raise DimensionError(f"cannot reduce a state of shape {rho.shape}")
    unknown = set(keep) - set(names)
    if unknown:
        raise SptqError(f"unknown qubits {sorted(unknown)}; expected a subset of {names}")
    n = len(names)
    kept = [i for i, name in enumerate(names) if name in keep]
    letters = "abcdefghijklmnop"
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in kept:
            col[i] = row[i]
    out = "".join(row[i] for i in kept) + "".join(col[i] for i in kept)
    r = np.einsum("".join(row) + "".join(col) + "->" + out, rho.reshape((2,) * (2 * n)))
    d = 2 ** len(kept)
    return r.reshape(d, d)


def state_fidelity(rho, psi) -> float:
    """Overlap ``<psi|rho|psi>`` of a density matrix with a pure target."""
    rho = np.asarray(rho, dtype=complex)
    psi = check_ket(psi, rho.shape[0], name="target")
    return float(np.real(np.vdot(psi, rho @ psi)))


def purity(rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.real(np.trace(rho @ rho)))


def phase_insensitive_overlap(psi, phi) -> float:
    return float(abs(np.vdot(psi, phi)))


def concurrence(rho) -> float:
    """Wootters concurrence of a two-qubit density matrix."""
    rho = check_density(rho, 4, name="two-qubit state")
    yy = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))
    rho_tilde = yy @ rho.conj() @ yy
    ev = np.linalg.eigvals(rho @ rho_tilde)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0.0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def von_neumann_entropy(rho) -> float:
    ev = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    ev = ev[ev > 1e-15]
    return float(-np.sum(ev * np.log2(ev)))


def mutual_information(state, part_a: Sequence[str], part_b: Sequence[str]) -> float:
    rho_a = reduce_qubits(state, part_a)
    rho_b = reduce_qubits(state, part_b)
    rho_ab = reduce_qubits(state, list(part_a) + list(part_b))
    return von_neumann_entropy(rho_a) + von_neumann_entropy(rho_b) - von_neumann_entropy(rho_ab)

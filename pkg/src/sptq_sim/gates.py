"""Single-photon two-qubit gates built from wave plates and a Sagnac CNOT.

All gates are 4x4 unitaries on (momentum (x) polarization).  Half-wave
plates use the real Jones matrix with determinant -1; the global phase is
never observable here.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import hilbert as hb
from ._validation import SptqError, is_unitary

PATH_NAMES = {"T": hb.T, "B": hb.B}


@dataclass(frozen=True, eq=False)
class GateOp:
    mat: np.ndarray = field(repr=False)
    label: str = "gate"

    def __post_init__(self):
        mat = np.array(self.mat, dtype=complex)
        if mat.shape != (4, 4):
            raise SptqError(f"GateOp {self.label!r} must be 4x4, got {mat.shape}")
        if not is_unitary(mat):
            raise SptqError(f"GateOp {self.label!r} is not unitary")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    def __matmul__(self, other: "GateOp") -> "GateOp":
        return GateOp(self.mat @ other.mat, f"{self.label}*{other.label}")


def hwp_jones(fast_axis: float) -> np.ndarray:
    """Half-wave plate with its fast axis at ``fast_axis`` radians from H."""
    c, s = np.cos(2 * fast_axis), np.sin(2 * fast_axis)
    return np.array([[c, s], [s, -c]], dtype=complex)


def path_waveplate(path: str | int, fast_axis: float) -> GateOp:
    """A half-wave plate covering only one momentum path."""
    m = PATH_NAMES[path] if isinstance(path, str) else int(path)
    if m not in (hb.T, hb.B):
        raise SptqError(f"path must be T or B, got {path!r}")
    here = np.zeros((2, 2))
    here[m, m] = 1.0
    mat = np.kron(here, hwp_jones(fast_axis)) + np.kron(np.eye(2) - here, hb.I2)
    name = "TB"[m]
    return GateOp(mat, f"path_hwp({name},{np.degrees(fast_axis):g})")


def polarization_waveplate(fast_axis: float) -> GateOp:
    """A half-wave plate covering the whole beam."""
    return GateOp(np.kron(hb.I2, hwp_jones(fast_axis)), f"hwp({np.degrees(fast_axis):g})")


def m_cnot() -> GateOp:
    """Momentum-controlled NOT: a 45 degree HWP in the bottom path."""
    top = np.diag([1.0, 0.0])
    bottom = np.diag([0.0, 1.0])
    return GateOp(np.kron(top, hb.I2) + np.kron(bottom, hb.X), "m_cnot")


def p_cnot() -> GateOp:
    """Polarization-controlled NOT on momentum (the Sagnac + dove prism gate)."""
    h = np.diag([1.0, 0.0])
    v = np.diag([0.0, 1.0])
    return GateOp(np.kron(hb.I2, h) + np.kron(hb.X, v), "p_cnot")


def swap_gate() -> GateOp:
    """SWAP of momentum and polarization, composed as M-CNOT, P-CNOT, M-CNOT."""
    m, p = m_cnot(), p_cnot()
    return GateOp((m.mat @ p.mat @ m.mat).real, "swap")


CANONICAL_SWAP = np.array([[1, 0, 0, 0],
                           [0, 0, 1, 0],
                           [0, 1, 0, 0],
                           [0, 0, 0, 1]], dtype=complex)


def circuit(state, steps: Iterable[tuple[str, GateOp]]) -> np.ndarray:
    """Fold ``apply_to_photon`` over ``(photon, gate)`` steps, first step first."""
    rho = hb.as_density(state)
    for photon, gate in steps:
        rho = hb.apply_to_photon(rho, photon, gate)
    return rho


CIRCUIT_VARIANTS = ("full_swap", "no_final_mcnot")


def swap_steps(variant: str = "full_swap") -> list[tuple[str, GateOp]]:
    """Gate sequence applied to both photons for a circuit variant.

    ``full_swap`` runs M-CNOT, P-CNOT, M-CNOT; ``no_final_mcnot`` stops
    after the P-CNOT.
    """
    if variant not in CIRCUIT_VARIANTS:
        raise SptqError(f"circuit_variant must be one of {CIRCUIT_VARIANTS}, got {variant!r}")
    seq = [m_cnot(), p_cnot()]
    if variant == "full_swap":
        seq.append(m_cnot())
    return [(photon, g) for g in seq for photon in hb.PHOTONS]


def target_ket(variant: str = "full_swap") -> np.ndarray:
    """Ideal output of the SWAP circuit on the down-conversion pair.

    full_swap: |T_S B_I> (x) (|H_S V_I> + |V_S H_I>)/sqrt(2);
    no_final_mcnot: |T_S B_I> (x) (|H_S H_I> + |V_S V_I>)/sqrt(2).
    """
    if variant not in CIRCUIT_VARIANTS:
        raise SptqError(f"unknown circuit variant {variant!r}")
    pol_pairs = [(hb.H, hb.V), (hb.V, hb.H)] if variant == "full_swap" else [(hb.H, hb.H), (hb.V, hb.V)]
    psi = np.zeros(hb.PAIR_DIM, dtype=complex)
    for ps, pi in pol_pairs:
        psi[hb.pair_index(hb.photon_index(hb.T, ps), hb.photon_index(hb.B, pi))] = 1 / np.sqrt(2)
    return psi


_GATE_RE = re.compile(r"^\s*(\w+)\s*(?:\((.*)\))?\s*$")


def parse_gate(text: str) -> GateOp:
    """Parse a gate name: m_cnot, p_cnot, swap, hwp(<deg>), path_hwp(<T|B>,<deg>)."""
    match = _GATE_RE.match(text)
    if not match:
        raise SptqError(f"cannot parse gate {text!r}")
    name, args = match.group(1), match.group(2)
    argv = [a.strip() for a in args.split(",")] if args else []
    try:
        if name in ("m_cnot", "p_cnot", "swap") and not argv:
            return {"m_cnot": m_cnot, "p_cnot": p_cnot, "swap": swap_gate}[name]()
        if name == "hwp" and len(argv) == 1:
            return polarization_waveplate(np.radians(float(argv[0])))
        if name == "path_hwp" and len(argv) == 2 and argv[0] in PATH_NAMES:
            return path_waveplate(argv[0], np.radians(float(argv[1])))
    except ValueError:
        pass
    raise SptqError(f"cannot parse gate {text!r}")


def parse_steps(spec: Sequence[dict]) -> list[tuple[str, GateOp]]:
    """Turn ``[{"photon": "signal"|"idler"|"both", "gate": "<name>"}, ...]`` into steps."""
    steps = []
    for item in spec:
        gate = parse_gate(item["gate"])
        photon = item.get("photon", "both")
        if photon == "both":
            steps.extend((p, gate) for p in hb.PHOTONS)
        elif photon in hb.PHOTONS:
            steps.append((photon, gate))
        else:
            raise SptqError(f"photon must be signal, idler or both, got {photon!r}")
    return steps

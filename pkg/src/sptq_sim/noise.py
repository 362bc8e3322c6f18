"""Coherence-loss channels and the visibility budget of the SWAP experiment.

Gate imperfections are modeled as polarization dephasing after the SWAP,
where the interferometer's path coherence ends up.  The beam splitter and
the dove prism each contribute a multiplicative coherence factor, and the
source contributes a third one through its momentum coherence.  The 45
degree fringe visibility of the pair is the product of all three.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gates
from . import hilbert as hb
from . import measurement
from ._validation import InconsistentBudgetError, SptqError, check_unit_interval
from .source import SourceParams, classical_probe_state, noisy_source

DOFS = ("momentum", "polarization")


@dataclass(frozen=True)
class GateNoise:
    bs_coherence: float = 1.0
    dove_coherence: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "bs_coherence",
                           check_unit_interval(self.bs_coherence, "gate_bs_coherence"))
        object.__setattr__(self, "dove_coherence",
                           check_unit_interval(self.dove_coherence, "gate_dove_coherence"))

    @property
    def coherence(self) -> float:
        return self.bs_coherence * self.dove_coherence


def _dof_z(dof: str) -> np.ndarray:
    if dof == "momentum":
        return np.kron(hb.Z, hb.I2)
    if dof == "polarization":
        return np.kron(hb.I2, hb.Z)
    raise SptqError(f"dof must be one of {DOFS}, got {dof!r}")


def dephasing_kraus(dof: str, v: float) -> list[np.ndarray]:
    """Kraus pair {sqrt((1+v)/2) I, sqrt((1-v)/2) Z_dof} on one photon."""
    v = check_unit_interval(v, "coherence")
    return [np.sqrt((1 + v) / 2) * hb.I4, np.sqrt((1 - v) / 2) * _dof_z(dof)]


def dephase_subsystem(state, photon: str, dof: str, v: float) -> np.ndarray:
    """Multiply every coherence between the 0 and 1 levels of one qubit by ``v``.

    ``photon`` is "signal" or "idler" for a 16x16 pair state, or "single"
    for a 4x4 single-photon state.
    """
    kraus = dephasing_kraus(dof, v)
    if photon == "single":
        return hb.apply_to_single(state, kraus)
    return hb.apply_to_photon(state, photon, kraus)


def imperfect_swap_pipeline(src: SourceParams | None = None, gate: GateNoise | None = None,
                            variant: str = "full_swap",
                            per_photon_gate_noise: bool = False) -> np.ndarray:
    """Noisy source, ideal SWAP circuit on both photons, then gate dephasing.

    Gate dephasing is applied once per pair by default.  With
    ``per_photon_gate_noise`` each photon is dephased, so the gate factor
    enters squared.
    """
    gate = gate or GateNoise()
    rho = gates.circuit(noisy_source(src), gates.swap_steps(variant))
    photons = hb.PHOTONS if per_photon_gate_noise else ("signal",)
    for photon in photons:
        rho = dephase_subsystem(rho, photon, "polarization", gate.coherence)
    return rho


def classical_gate_visibility(gate: GateNoise | None = None, with_dove_prism: bool = True) -> float:
    """Visibility of a 45 degree polarized laser sent through the SWAP gate."""
    gate = gate or GateNoise()
    v = gate.coherence if with_dove_prism else gate.bs_coherence
    rho = hb.density(classical_probe_state(np.pi / 4))
    rho = hb.apply_to_single(rho, gates.swap_gate())
    rho = dephase_subsystem(rho, "single", "polarization", v)
    return measurement.polarization_fringe_visibility(hb.reduce_qubits(rho, ["p"]))


def predicted_v45(src: SourceParams | None = None, gate: GateNoise | None = None,
                  per_photon_gate_noise: bool = False) -> float:
    """Closed-form 45 degree visibility of the pipeline when white noise is off."""
    src = src or SourceParams()
    gate = gate or GateNoise()
    g = gate.coherence ** 2 if per_photon_gate_noise else gate.coherence
    return src.momentum_coherence * g


def decompose_fidelity(v45: float, v_c1: float) -> float:
    """Source coherence implied by a quantum and a classical visibility."""
    v45 = float(v45)
    v_c1 = float(v_c1)
    if not 0.0 < v_c1 <= 1.0:
        raise SptqError(f"classical visibility must lie in (0, 1], got {v_c1}")
    if v45 < 0.0:
        raise SptqError(f"quantum visibility must be >= 0, got {v45}")
    if v45 > v_c1:
        raise InconsistentBudgetError(
            f"quantum visibility {v45} exceeds classical gate visibility {v_c1}")
    return v45 / v_c1

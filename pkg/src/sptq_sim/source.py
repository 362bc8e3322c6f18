"""Down-conversion pair states and the classical laser probe.

Model assumptions of the two-mode reduction: the signal is taken at the
degenerate frequency (half the pump frequency), only one pair of conjugate
transverse directions (top/bottom) is kept, and the phase mismatch is zero.
The uncompensated birefringent delay leaves the polarization in the product
state |H_S V_I>, so no timing or spectral variables are carried.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hilbert as hb
from ._validation import check_unit_interval


@dataclass(frozen=True)
class SourceParams:
    """Imperfections of the pair source.

    momentum_coherence scales the coherence between the two momentum
    assignments; white_noise is the weight kept on the coherent state
    (1 means no white noise).
    """

    momentum_coherence: float = 1.0
    white_noise: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "momentum_coherence",
                           check_unit_interval(self.momentum_coherence, "source_coherence"))
        object.__setattr__(self, "white_noise",
                           check_unit_interval(self.white_noise, "source_white_noise"))


# (signal index, idler index) of the two terms
_TB_HV = (hb.photon_index(hb.T, hb.H), hb.photon_index(hb.B, hb.V))
_BT_HV = (hb.photon_index(hb.B, hb.H), hb.photon_index(hb.T, hb.V))


def spdc_pair_ket() -> np.ndarray:
    """(|T_S B_I> + |B_S T_I>)/sqrt(2) (x) |H_S V_I> as a 16-vector."""
    psi = np.zeros(hb.PAIR_DIM, dtype=complex)
    psi[hb.pair_index(*_TB_HV)] = 1 / np.sqrt(2)
    psi[hb.pair_index(*_BT_HV)] = 1 / np.sqrt(2)
    return psi


def spdc_pair_state() -> np.ndarray:
    return hb.density(spdc_pair_ket())


def noisy_source(params: SourceParams | None = None) -> np.ndarray:
    """Pair state with damped momentum coherence and optional white noise.

    White noise replaces the momentum part with I/4 while keeping the
    polarization product |H_S V_I>.
    """
    params = params or SourceParams()
    v, p = params.momentum_coherence, params.white_noise
    rho = spdc_pair_state()
    i, j = hb.pair_index(*_TB_HV), hb.pair_index(*_BT_HV)
    rho[i, j] *= v
    rho[j, i] *= v
    if p < 1.0:
        # signal H, idler V; all four momentum assignments
        mixed = np.zeros_like(rho)
        for ms in (hb.T, hb.B):
            for mi in (hb.T, hb.B):
                k = hb.pair_index(hb.photon_index(ms, hb.H), hb.photon_index(mi, hb.V))
                mixed[k, k] = 0.25
        rho = p * rho + (1 - p) * mixed
    return rho


def classical_probe_state(pol_angle: float) -> np.ndarray:
    """Laser filling both beam halves with linear polarization at ``pol_angle``."""
    momentum = np.array([1.0, 1.0]) / np.sqrt(2)
    pol = np.array([np.cos(pol_angle), np.sin(pol_angle)])
    return hb.photon_ket(momentum, pol)

"""Polarization analyzers, path selection, coincidences and CHSH.

Analyzer angles are polarizer transmission axes measured from H, in
radians.  Momentum selection defaults to signal on T and idler on B, the
paths both photons occupy after the SWAP.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import hilbert as hb
from ._validation import DegenerateError, SptqError, check_density

DEFAULT_PATHS = ("T", "B")
TSIRELSON = 2 * np.sqrt(2)


@dataclass(frozen=True)
class AnalyzerSetting:
    theta1: float
    theta2: float


@dataclass(frozen=True)
class ChshSettings:
    a: float
    a_prime: float
    b: float
    b_prime: float

    @classmethod
    def from_degrees(cls, a, a_prime, b, b_prime) -> "ChshSettings":
        return cls(*np.radians([a, a_prime, b, b_prime]))

    def degrees(self) -> dict:
        return {k: float(np.degrees(getattr(self, k))) for k in ("a", "a_prime", "b", "b_prime")}

    def pairs(self) -> list[tuple[float, float]]:
        """The four (arm 1, arm 2) pairs in the order they enter S."""
        return [(self.a, self.b), (self.a, self.b_prime), (self.a_prime, self.b), (self.a_prime, self.b_prime)]


# signs of E(a,b), E(a,b'), E(a',b), E(a',b') in S
CHSH_SIGNS = (1.0, -1.0, 1.0, 1.0)


def standard_chsh_settings(variant: str = "no_final_mcnot") -> ChshSettings:
    """The 22.5 degree family, oriented to give S > 0 for each circuit output."""
    if variant == "no_final_mcnot":
        return ChshSettings.from_degrees(0.0, 45.0, 22.5, 67.5)
    if variant == "full_swap":
        return ChshSettings.from_degrees(0.0, 45.0, 67.5, 22.5)
    raise SptqError(f"unknown circuit variant {variant!r}")


def analyzer_projector(theta: float) -> np.ndarray:
    u = np.array([np.cos(theta), np.sin(theta)], dtype=complex)
    return np.outer(u, u.conj())


def momentum_projector(path: str | int) -> np.ndarray:
    m = {"T": hb.T, "B": hb.B}.get(path, path) if isinstance(path, str) else int(path)
    if m not in (hb.T, hb.B):
        raise SptqError(f"path must be T or B, got {path!r}")
    p = np.zeros((2, 2), dtype=complex)
    p[m, m] = 1.0
    return p


def photon_projector(path, theta: float) -> np.ndarray:
    return np.kron(momentum_projector(path), analyzer_projector(theta))


def coincidence_probability(state, setting: AnalyzerSetting,
                            paths: tuple = DEFAULT_PATHS) -> float:
    """Probability that both photons pass their path selector and analyzer."""
    rho = check_density(state, hb.PAIR_DIM)
    proj = np.kron(photon_projector(paths[0], setting.theta1),
                   photon_projector(paths[1], setting.theta2))
    return float(np.real(np.trace(rho @ proj)))


def path_selected_polarization(state, paths: tuple = DEFAULT_PATHS) -> np.ndarray:
    """Unnormalized 4x4 polarization block for the chosen signal/idler paths."""
    rho = check_density(state, hb.PAIR_DIM)
    ms = momentum_projector(paths[0]).diagonal().real.argmax()
    mi = momentum_projector(paths[1]).diagonal().real.argmax()
    idx = [hb.pair_index(hb.photon_index(ms, ps), hb.photon_index(mi, pi))
           for ps in (hb.H, hb.V) for pi in (hb.H, hb.V)]
    return rho[np.ix_(idx, idx)]


def _orientations(theta1: float, theta2: float):
    perp = np.pi / 2
    # (++), (--), (-+), (+-)
    return [(theta1, theta2), (theta1 + perp, theta2 + perp),
            (theta1 + perp, theta2), (theta1, theta2 + perp)]


def correlation_E(state, theta1: float, theta2: float, paths: tuple = DEFAULT_PATHS) -> float:
    """Normalized polarization correlation from four coincidence probabilities."""
    pp, mm, mp, pm = (coincidence_probability(state, AnalyzerSetting(t1, t2), paths)
                      for t1, t2 in _orientations(theta1, theta2))
    total = pp + mm + mp + pm
    if total <= 1e-15:
        raise DegenerateError("no coincidences on the selected paths; correlation undefined")
    return (pp + mm - mp - pm) / total


def chsh_S(state, settings: ChshSettings, paths: tuple = DEFAULT_PATHS) -> float:
    """S = E(a,b) - E(a,b') + E(a',b) + E(a',b')."""
    return float(sum(sign * correlation_E(state, t1, t2, paths)
                     for sign, (t1, t2) in zip(CHSH_SIGNS, settings.pairs())))


def _spin(theta):
    """Analyzer observable Pi(theta) - Pi(theta + pi/2), broadcast over angles."""
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return np.stack([np.stack([c, s], -1), np.stack([s, -c], -1)], -2)


def correlation_grid(state, theta1, theta2, paths: tuple = DEFAULT_PATHS) -> np.ndarray:
    """Vectorized ``correlation_E`` on the outer product of two angle arrays."""
    block = path_selected_polarization(state, paths)
    total = np.trace(block).real
    if total <= 1e-15:
        raise DegenerateError("no coincidences on the selected paths; correlation undefined")
    r = block.reshape(2, 2, 2, 2)
    s1 = _spin(np.asarray(theta1, dtype=float))
    s2 = _spin(np.asarray(theta2, dtype=float))
    # E = Tr[rho (s1 (x) s2)] / Tr[rho]
    e = np.einsum("ijkl,xki,ylj->xy", r, s1, s2)
    return e.real / total


def optimize_chsh(state, paths: tuple = DEFAULT_PATHS, grid_step_deg: float = 5.0,
                  n_starts: int = 4, tol: float = 1e-10) -> tuple[ChshSettings, float]:
    """Maximize S over all four analyzer angles.

    A coarse grid over [0, 180) degrees picks starting points; each is
    refined with Nelder-Mead on the exact correlation.
    """
    grid = np.radians(np.arange(0.0, 180.0, grid_step_deg))
    e = correlation_grid(state, grid, grid, paths)
    # S[a, a', b, b'] = E[a,b] - E[a,b'] + E[a',b] + E[a',b']
    s = (e[:, None, :, None] - e[:, None, None, :]
         + e[None, :, :, None] + e[None, :, None, :])
    flat = np.argsort(s, axis=None)[::-1][:n_starts]
    starts = [grid[list(np.unravel_index(k, s.shape))] for k in flat]

    def neg_s(x):
        ee = correlation_grid(state, x[:2], x[2:], paths)
        return -(ee[0, 0] - ee[0, 1] + ee[1, 0] + ee[1, 1])

    best_x, best_s = starts[0], -neg_s(starts[0])
    for x0 in starts:
        res = minimize(neg_s, x0, method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": tol, "maxiter": 4000})
        if -res.fun > best_s:
            best_x, best_s = res.x, -res.fun
    angles = np.mod(best_x, np.pi)
    return ChshSettings(*(float(a) for a in angles)), float(best_s)


def sweep_curve(state, theta1: float, theta2_list, paths: tuple = DEFAULT_PATHS) -> list[tuple[float, float]]:
    return [(float(t2), coincidence_probability(state, AnalyzerSetting(theta1, t2), paths))
            for t2 in theta2_list]


def polarization_fringe_visibility(rho_pol) -> float:
    """Visibility of P(theta) = <theta|rho|theta> for a 2x2 polarization state.

    P(theta) = a + b cos 2theta + c sin 2theta, so the visibility is
    sqrt(b^2 + c^2) / a.
    """
    rho_pol = np.asarray(rho_pol, dtype=complex)
    a = (rho_pol[0, 0] + rho_pol[1, 1]).real / 2
    b = (rho_pol[0, 0] - rho_pol[1, 1]).real / 2
    c = rho_pol[0, 1].real
    if a <= 0:
        raise DegenerateError("zero-intensity polarization state")
    return float(np.hypot(b, c) / a)


def exact_fringe_visibility(state, theta1: float, paths: tuple = DEFAULT_PATHS) -> float:
    """Visibility of the exact coincidence curve versus arm 2 angle."""
    block = path_selected_polarization(state, paths).reshape(2, 2, 2, 2)
    p1 = analyzer_projector(theta1)
    # conditional arm-2 polarization state (unnormalized)
    cond = np.einsum("ki,ijkl->jl", p1, block)
    return polarization_fringe_visibility(cond)


def chsh_counts_plan(settings: ChshSettings) -> list[AnalyzerSetting]:
    """The 16 analyzer orientations of a CHSH run, grouped by term in S order."""
    return [AnalyzerSetting(t1, t2)
            for pair in settings.pairs() for t1, t2 in _orientations(*pair)]


__all__ = [
    "AnalyzerSetting", "ChshSettings", "CHSH_SIGNS", "DEFAULT_PATHS", "TSIRELSON",
    "analyzer_projector", "momentum_projector", "coincidence_probability",
    "correlation_E", "correlation_grid", "chsh_S", "optimize_chsh", "sweep_curve",
    "polarization_fringe_visibility", "exact_fringe_visibility", "standard_chsh_settings",
    "path_selected_polarization", "chsh_counts_plan",
]

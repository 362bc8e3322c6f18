"""Monte-Carlo coincidence counting, fringe fits and CHSH with error bars.

Counts are Poisson with mean ``dwell * (2 * pair_rate * P + accidentals)``:
``pair_rate`` is the coincidence rate with both analyzers removed, and a
transmission probability of 1/2 (the analyzer-summed value for a pair that
passes the path selection) maps onto ``pair_rate / 2``.

Every analyzer setting draws from its own Philox stream seeded with
``SeedSequence([seed, setting_index])``, so serial and threaded runs are
bit-identical.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import gates, measurement
from . import hilbert as hb
from . import noise
from ._validation import (
    DegenerateError,
    InconsistentBudgetError,
    PeriodMismatchError,
    UnderdeterminedFitError,
    check_density,
)
from .measurement import AnalyzerSetting, ChshSettings
from .scenario import ExperimentConfig, Scenario, validate_report
from .source import noisy_source

RNG_ALGORITHM = "numpy.random.Philox seeded by SeedSequence([seed, setting_index])"
THREADS_ENV = "SPTQ_SIM_THREADS"


@dataclass(frozen=True)
class CountsRecord:
    setting: AnalyzerSetting
    counts: float
    dwell: float
    prob_exact: float = float("nan")


@dataclass(frozen=True)
class FitResult:
    offset: float
    amplitude: float
    phase: float
    visibility: float
    sigma_visibility: float
    chi2: float

    def to_json(self) -> dict:
        return {"offset": self.offset, "amplitude": self.amplitude,
                "phase_deg": float(np.degrees(self.phase)), "visibility": self.visibility,
                "sigma_visibility": self.sigma_visibility, "chi2": self.chi2}


def accidental_rate(cfg: ExperimentConfig) -> float:
    return cfg.singles_rate_1 * cfg.singles_rate_2 * cfg.window


def setting_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def expected_counts(prob: float, cfg: ExperimentConfig) -> float:
    rate = 2.0 * cfg.pair_rate * prob
    if cfg.include_accidentals:
        rate += accidental_rate(cfg)
    return cfg.dwell * rate


def simulate_counts(state, setting: AnalyzerSetting, cfg: ExperimentConfig,
                    index: int = 0, exact: bool = False) -> CountsRecord:
    """One Poisson count for ``setting``; ``exact`` returns the mean instead."""
    prob = measurement.coincidence_probability(state, setting)
    mean = expected_counts(max(prob, 0.0), cfg)
    counts = mean if exact else int(setting_rng(cfg.seed, index).poisson(mean))
    return CountsRecord(setting, counts, cfg.dwell, prob)


def simulate_many(state, settings, cfg: ExperimentConfig, exact: bool = False,
                  threads: int | None = None, start_index: int = 0) -> list[CountsRecord]:
    """Counts for a list of settings; output order follows ``settings``."""
    rho = check_density(state, hb.PAIR_DIM)
    threads = threads or default_threads()
    jobs = [(s, start_index + i) for i, s in enumerate(settings)]

    def run(job):
        s, i = job
        return simulate_counts(rho, s, cfg, index=i, exact=exact)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(run, jobs))
    return [run(j) for j in jobs]


def _as_angles(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return X


class FringeFitter(RegressorMixin, BaseEstimator):
    """Weighted least-squares fit of ``offset * (1 + V cos(2(theta - phase)))``.

    The model is linearized as ``c + alpha cos 2theta + beta sin 2theta`` so
    the fit is a single weighted linear solve.  ``X`` holds analyzer angles
    in radians (one column); ``y`` holds counts.

    Parameters
    ----------
    poisson_weights : bool
        Weight each point by ``1 / max(counts, 1)``.  With False all weights
        are one.
    check_period : bool
        Refuse data that a 90-degree-period fringe describes better than the
        expected 180-degree one.
    period_margin : float
        Chi-square improvement the 90-degree model needs before the data are
        rejected.
    """

    def __init__(self, poisson_weights=True, check_period=True, period_margin=25.0):
        self.poisson_weights = poisson_weights
        self.check_period = check_period
        self.period_margin = period_margin

    def _weights(self, y):
        if self.poisson_weights:
            return 1.0 / np.maximum(y, 1.0)
        return np.ones_like(y)

    @staticmethod
    def _design(theta, harmonic=2):
        return np.column_stack([np.ones_like(theta), np.cos(harmonic * theta), np.sin(harmonic * theta)])

    def fit(self, X, y, sample_weight=None):
        X, y = check_X_y(_as_angles(X), y, dtype=float, y_numeric=True)
        if X.shape[1] != 1:
            raise ValueError(f"expected a single angle column, got {X.shape[1]}")
        theta = X[:, 0]
        if np.any(y < 0):
            raise ValueError("counts must be non-negative")
        if len(np.unique(np.round(np.mod(theta, np.pi), 12))) < 3:
            raise UnderdeterminedFitError("need at least 3 distinct analyzer angles")
        a = self._design(theta)
        if np.linalg.matrix_rank(a) < 3:
            raise UnderdeterminedFitError("analyzer angles do not determine the fringe")
        w = self._weights(y) if sample_weight is None else np.asarray(sample_weight, dtype=float)
        aw = a * w[:, None]
        cov = np.linalg.inv(a.T @ aw)
        c, alpha, beta = cov @ (aw.T @ y)
        if c <= 0:
            raise DegenerateError(f"fitted offset {c:.3g} is not positive")
        resid = y - a @ np.array([c, alpha, beta])
        chi2 = float(np.sum(w * resid ** 2))

        if self.check_period:
            a4 = self._design(theta, harmonic=4)
            coef4, *_ = np.linalg.lstsq(a4 * np.sqrt(w)[:, None], y * np.sqrt(w), rcond=None)
            chi2_4 = float(np.sum(w * (y - a4 @ coef4) ** 2))
            if chi2 - chi2_4 > self.period_margin:
                raise PeriodMismatchError(
                    f"a 90 degree period fits better (chi2 {chi2_4:.3g} vs {chi2:.3g}); "
                    "check the basis convention")

        r = float(np.hypot(alpha, beta))
        vis = r / c
        if r > 0:
            grad = np.array([-vis / c, alpha / (r * c), beta / (r * c)])
            sigma = float(np.sqrt(grad @ cov @ grad))
        else:
            sigma = float(np.sqrt(max(cov[1, 1], cov[2, 2]))) / c

        self.coef_ = np.array([c, alpha, beta])
        self.covariance_ = cov
        self.offset_ = float(c)
        self.amplitude_ = r
        self.phase_ = float(np.mod(0.5 * np.arctan2(beta, alpha), np.pi))
        self.visibility_ = float(vis)
        self.sigma_visibility_ = sigma
        self.chi2_ = chi2
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(_as_angles(X), dtype=float)
        return self._design(X[:, 0]) @ self.coef_

    def result(self) -> FitResult:
        check_is_fitted(self, "coef_")
        return FitResult(self.offset_, self.amplitude_, self.phase_, self.visibility_,
                         self.sigma_visibility_, self.chi2_)


def fit_fringe(data: list[CountsRecord], **params) -> FitResult:
    """Fit a fringe versus arm 2 angle from a list of count records."""
    theta = np.array([r.setting.theta2 for r in data], dtype=float)
    y = np.array([r.counts for r in data], dtype=float)
    if len(data) == 0:
        raise UnderdeterminedFitError("no data")
    return FringeFitter(**params).fit(theta, y).result()


@dataclass(frozen=True)
class ChshMeasurement:
    S: float
    sigma_S: float
    E: tuple
    sigma_E: tuple
    counts: tuple = field(repr=False)
    total_counts: float = 0.0

    @property
    def significance(self) -> float:
        """Distance of |S| above the local-realist bound in units of sigma_S."""
        return (abs(self.S) - 2.0) / self.sigma_S if self.sigma_S > 0 else float("inf")


def correlation_from_counts(n_pp, n_mm, n_mp, n_pm) -> tuple[float, float]:
    """E and its Poisson standard error from four coincidence counts."""
    total = n_pp + n_mm + n_mp + n_pm
    if total <= 0:
        raise DegenerateError("zero total counts for a CHSH setting")
    same, diff = n_pp + n_mm, n_mp + n_pm
    e = (same - diff) / total
    var = ((1 - e) ** 2 * same + (1 + e) ** 2 * diff) / total ** 2
    return float(e), float(np.sqrt(var))


def measure_chsh(state, settings: ChshSettings, cfg: ExperimentConfig, exact: bool = False,
                 threads: int | None = None, start_index: int = 0) -> ChshMeasurement:
    """Simulate the 16 CHSH coincidence counts and combine them into S +/- sigma."""
    plan = measurement.chsh_counts_plan(settings)
    records = simulate_many(state, plan, cfg, exact=exact, threads=threads, start_index=start_index)
    counts = [r.counts for r in records]
    es, ses = [], []
    for k in range(4):
        e, se = correlation_from_counts(*counts[4 * k: 4 * k + 4])
        es.append(e)
        ses.append(se)
    s = float(sum(sign * e for sign, e in zip(measurement.CHSH_SIGNS, es)))
    sigma = float(np.sqrt(np.sum(np.square(ses))))
    return ChshMeasurement(s, sigma, tuple(es), tuple(ses), tuple(counts), float(sum(counts)))


# Orchestration -----------------------------------------------------------------

def prepare_state(scn: Scenario) -> np.ndarray:
    """Pair state the scenario describes, after source, circuit and gate noise."""
    if scn.circuit is None:
        return noise.imperfect_swap_pipeline(scn.source, scn.gate, scn.circuit_variant,
                                             scn.per_photon_gate_noise)
    rho = gates.circuit(noisy_source(scn.source), gates.parse_steps(scn.circuit))
    photons = hb.PHOTONS if scn.per_photon_gate_noise else ("signal",)
    for photon in photons:
        rho = noise.dephase_subsystem(rho, photon, "polarization", scn.gate.coherence)
    return rho


def _header(scn: Scenario, kind: str, exact: bool) -> dict:
    return {"kind": kind, "scenario": scn.to_json(), "exact": bool(exact), "rng": RNG_ALGORITHM}


def _closest(curves, target_deg):
    for c in curves:
        if abs(((c["theta1_deg"] - target_deg) + 90) % 180 - 90) < 1e-9:
            return c
    return None


def run_sweep(scn: Scenario, exact: bool = False, threads: int | None = None) -> dict:
    rho = prepare_state(scn)
    cfg = scn.experiment
    theta2_deg = scn.sweep.theta2_grid_deg()
    curves = []
    offset = 0
    for t1_deg in scn.sweep.theta1_deg:
        settings = [AnalyzerSetting(np.radians(t1_deg), np.radians(t2)) for t2 in theta2_deg]
        records = simulate_many(rho, settings, cfg, exact=exact, threads=threads, start_index=offset)
        offset += len(settings)
        fit = fit_fringe(records)
        curves.append({
            "theta1_deg": float(t1_deg),
            "points": [{"theta2_deg": float(t2), "counts": float(r.counts), "dwell_s": r.dwell,
                        "prob_exact": float(min(max(r.prob_exact, 0.0), 1.0))}
                       for t2, r in zip(theta2_deg, records)],
            "fit": fit.to_json(),
            "visibility_exact": measurement.exact_fringe_visibility(rho, np.radians(t1_deg)),
        })

    v_c1 = noise.classical_gate_visibility(scn.gate, with_dove_prism=True)
    c0, c45 = _closest(curves, 0.0), _closest(curves, 45.0)
    v0 = c0["fit"]["visibility"] if c0 else None
    v45 = c45["fit"]["visibility"] if c45 else None
    source_coherence, budget_note = None, None
    if v45 is not None:
        # round-off from an exact-mode fit must not trip the budget check
        v45_budget = v_c1 if 0 < v45 - v_c1 < 1e-9 else v45
        try:
            source_coherence = noise.decompose_fidelity(v45_budget, v_c1)
        except InconsistentBudgetError as exc:
            budget_note = str(exc)
    derived = {
        "V0": v0, "V45": v45,
        "sigma_V0": c0["fit"]["sigma_visibility"] if c0 else None,
        "sigma_V45": c45["fit"]["sigma_visibility"] if c45 else None,
        "V0_model": measurement.exact_fringe_visibility(rho, 0.0),
        "V45_model": measurement.exact_fringe_visibility(rho, np.pi / 4),
        "V_C1_model": v_c1,
        "source_coherence": source_coherence,
        "configured_source_coherence": scn.source.momentum_coherence,
        "configured_white_noise": scn.source.white_noise,
    }
    if budget_note:
        derived["budget_error"] = budget_note
    return {**_header(scn, "sweep", exact), "curves": curves, "derived": derived}


def _chsh_block(rho, settings: ChshSettings, cfg, exact, threads, start_index) -> dict:
    m = measure_chsh(rho, settings, cfg, exact=exact, threads=threads, start_index=start_index)
    return {
        "settings_deg": settings.degrees(),
        "S_exact": measurement.chsh_S(rho, settings),
        "S": m.S, "sigma_S": m.sigma_S,
        "significance": m.significance if np.isfinite(m.significance) else None,
        "E": list(m.E), "sigma_E": list(m.sigma_E),
        "counts": [float(c) for c in m.counts],
        "total_counts": m.total_counts,
    }


def run_chsh(scn: Scenario, exact: bool = False, threads: int | None = None) -> dict:
    rho = prepare_state(scn)
    if scn.chsh_deg is not None:
        standard = ChshSettings.from_degrees(*scn.chsh_deg)
    else:
        standard = measurement.standard_chsh_settings(scn.circuit_variant)
    optimal, _ = measurement.optimize_chsh(rho)
    return {
        **_header(scn, "chsh", exact),
        "standard": _chsh_block(rho, standard, scn.experiment, exact, threads, 0),
        "optimized": _chsh_block(rho, optimal, scn.experiment, exact, threads, 16),
        "tsirelson_bound": measurement.TSIRELSON,
    }


def run_classical(scn: Scenario) -> dict:
    v_c1 = noise.classical_gate_visibility(scn.gate, with_dove_prism=True)
    v_c2 = noise.classical_gate_visibility(scn.gate, with_dove_prism=False)
    return {**_header(scn, "classical_visibility", True), "V_C1": v_c1, "V_C2": v_c2,
            "dove_ratio": v_c1 / v_c2 if v_c2 > 0 else 0.0}


def run_state(scn: Scenario) -> dict:
    rho = prepare_state(scn)
    target = hb.density(gates.target_ket(scn.circuit_variant))
    pol = hb.reduce_qubits(rho, ["pS", "pI"])
    mom = hb.reduce_qubits(rho, ["mS", "mI"])
    return {
        **_header(scn, "state", True),
        "target": scn.circuit_variant,
        "fidelity": hb.state_fidelity(rho, gates.target_ket(scn.circuit_variant)),
        "target_purity": hb.purity(target),
        "purity": {
            "pair": hb.purity(rho),
            "signal": hb.purity(hb.partial_trace(rho, "signal")),
            "idler": hb.purity(hb.partial_trace(rho, "idler")),
            "momentum": hb.purity(mom),
            "polarization": hb.purity(pol),
        },
        "concurrence": {"polarization": hb.concurrence(pol), "momentum": hb.concurrence(mom)},
        "density_real": np.real(rho).round(12).tolist(),
        "density_imag": np.imag(rho).round(12).tolist(),
    }


def run_experiment(scn: Scenario, exact: bool = False, threads: int | None = None) -> dict:
    """Run the scenario's measurement and return a schema-validated report."""
    if scn.measurement == "sweep":
        report = run_sweep(scn, exact, threads)
    elif scn.measurement == "chsh":
        report = run_chsh(scn, exact, threads)
    else:
        report = run_classical(scn)
    validate_report(report)
    return report

import numpy as np
import pytest
from sklearn.base import clone

from sptq_sim import experiment as ex
from sptq_sim import gates
from sptq_sim import hilbert as hb
from sptq_sim import measurement as ms
from sptq_sim._validation import DegenerateError, PeriodMismatchError, UnderdeterminedFitError
from sptq_sim.measurement import AnalyzerSetting, ChshSettings
from sptq_sim.noise import GateNoise, dephase_subsystem, imperfect_swap_pipeline
from sptq_sim.scenario import ExperimentConfig, Scenario, SweepPlan
from sptq_sim.source import SourceParams

THETA2 = np.radians(np.arange(0.0, 180.0, 10.0))


def eq5(v=1.0):
    rho = hb.density(gates.target_ket("no_final_mcnot"))
    return dephase_subsystem(rho, "signal", "polarization", v)


class TestAccidentals:
    def test_reference_rates(self):
        # 1e5 * 1e5 * 1e-9 = 10 counts/s
        cfg = ExperimentConfig(singles_rate_1=1e5, singles_rate_2=1e5, window=1e-9)
        assert ex.accidental_rate(cfg) == pytest.approx(10.0)

    def test_zero_window(self):
        assert ex.accidental_rate(ExperimentConfig(window=0.0)) == 0.0

    def test_higher_rates(self):
        cfg = ExperimentConfig(singles_rate_1=1e6, singles_rate_2=1e6, window=1e-9)
        assert ex.accidental_rate(cfg) == pytest.approx(1000.0)

    def test_window_required_with_accidentals(self):
        with pytest.raises(ValueError):
            ExperimentConfig(window=0.0, include_accidentals=True)


class TestSimulateCounts:
    def test_zero_probability_gives_zero(self):
        cfg = ExperimentConfig(pair_rate=1e6, dwell=10.0)
        for seed in range(20):
            rec = ex.simulate_counts(eq5(), AnalyzerSetting(0.0, np.pi / 2), ExperimentConfig(
                pair_rate=cfg.pair_rate, dwell=cfg.dwell, seed=seed))
            assert rec.counts == 0

    def test_poisson_five_sigma(self):
        # P = 1/2 at (0, 0) so the mean is pair_rate * dwell
        cfg = ExperimentConfig(pair_rate=10000.0, dwell=1.0, seed=11)
        rec = ex.simulate_counts(eq5(), AnalyzerSetting(0.0, 0.0), cfg)
        assert abs(rec.counts - 10000) <= 5 * 100

    def test_deterministic(self):
        cfg = ExperimentConfig(seed=42)
        a = ex.simulate_counts(eq5(), AnalyzerSetting(0.1, 0.4), cfg, index=3)
        b = ex.simulate_counts(eq5(), AnalyzerSetting(0.1, 0.4), cfg, index=3)
        assert a == b

    def test_exact_mode_returns_mean(self):
        cfg = ExperimentConfig(pair_rate=2000.0, dwell=2.0)
        rec = ex.simulate_counts(eq5(), AnalyzerSetting(0.0, np.pi / 4), cfg, exact=True)
        assert rec.counts == pytest.approx(2.0 * 2 * 2000.0 * 0.25)

    def test_accidentals_added_to_mean(self):
        cfg = ExperimentConfig(pair_rate=0.0, dwell=3.0, include_accidentals=True)
        rec = ex.simulate_counts(eq5(), AnalyzerSetting(0.0, 0.0), cfg, exact=True)
        assert rec.counts == pytest.approx(30.0)

    def test_threads_match_serial(self):
        cfg = ExperimentConfig(seed=5)
        settings = [AnalyzerSetting(0.0, t) for t in THETA2]
        serial = ex.simulate_many(eq5(0.9), settings, cfg, threads=1)
        parallel = ex.simulate_many(eq5(0.9), settings, cfg, threads=4)
        assert serial == parallel

    def test_sample_mean_converges(self):
        rho = eq5(0.8)
        setting = AnalyzerSetting(np.pi / 4, np.pi / 8)
        prob = ms.coincidence_probability(rho, setting)
        rate = 2 * 500.0 * prob
        n = 400
        cfg = ExperimentConfig(pair_rate=500.0, dwell=0.5, seed=9)
        draws = [ex.simulate_counts(rho, setting, cfg, index=i).counts / cfg.dwell for i in range(n)]
        assert abs(np.mean(draws) / rate - 1) < 5 / np.sqrt(n)


class TestFringeFitter:
    def test_exact_recovery(self):
        y = 0.5 * np.cos(THETA2) ** 2
        fit = ex.FringeFitter().fit(THETA2, y)
        assert fit.visibility_ == pytest.approx(1.0, abs=1e-9)
        assert fit.phase_ == pytest.approx(0.0, abs=1e-9)
        np.testing.assert_allclose(fit.predict(THETA2), y, atol=1e-12)

    def test_recovers_injected_parameters(self):
        offset, vis, phase = 800.0, 0.6, 0.4
        y = offset * (1 + vis * np.cos(2 * (THETA2 - phase)))
        fit = ex.FringeFitter().fit(THETA2.reshape(-1, 1), y)
        assert fit.offset_ == pytest.approx(offset)
        assert fit.visibility_ == pytest.approx(vis)
        assert fit.phase_ == pytest.approx(phase)
        assert fit.amplitude_ == pytest.approx(offset * vis)

    def test_sklearn_params_and_clone(self):
        est = ex.FringeFitter(period_margin=10.0)
        assert est.get_params() == {"poisson_weights": True, "check_period": True, "period_margin": 10.0}
        cloned = clone(est).set_params(poisson_weights=False)
        assert cloned.poisson_weights is False and est.poisson_weights is True

    def test_unfitted_predict(self):
        from sklearn.exceptions import NotFittedError
        with pytest.raises(NotFittedError):
            ex.FringeFitter().predict(THETA2)

    def test_too_few_angles(self):
        with pytest.raises(UnderdeterminedFitError):
            ex.FringeFitter().fit([0.0, 0.5, 0.0, np.pi], [1.0, 2.0, 1.0, 1.0])

    def test_angles_repeating_mod_pi(self):
        with pytest.raises(UnderdeterminedFitError):
            ex.FringeFitter().fit(np.radians([0, 90, 180, 270]), [1, 2, 1, 2])

    def test_negative_offset(self):
        y = -100 * (1 + 0.5 * np.cos(2 * THETA2))
        with pytest.raises(ValueError):
            ex.FringeFitter().fit(THETA2, y)

    def test_period_check(self):
        y = 1000 * (1 + 0.9 * np.cos(4 * THETA2))
        with pytest.raises(PeriodMismatchError):
            ex.FringeFitter().fit(THETA2, y)
        ex.FringeFitter(check_period=False).fit(THETA2, y)

    def test_degenerate_offset(self):
        with pytest.raises(DegenerateError):
            ex.FringeFitter(poisson_weights=False, check_period=False).fit(
                THETA2, np.zeros_like(THETA2))


class TestFitFringe:
    def test_monte_carlo_v45(self):
        rho = imperfect_swap_pipeline(SourceParams(0.95), GateNoise(0.93), "no_final_mcnot")
        cfg = ExperimentConfig(pair_rate=2000.0, dwell=1.0, seed=17)
        recs = ex.simulate_many(rho, [AnalyzerSetting(np.pi / 4, t) for t in THETA2], cfg)
        fit = ex.fit_fringe(recs)
        assert abs(fit.visibility - 0.8835) < 3 * fit.sigma_visibility
        assert fit.sigma_visibility > 0

    def test_monte_carlo_v0(self):
        rho = imperfect_swap_pipeline(SourceParams(0.95), GateNoise(0.93), "no_final_mcnot")
        cfg = ExperimentConfig(pair_rate=2000.0, dwell=1.0, seed=18)
        recs = ex.simulate_many(rho, [AnalyzerSetting(0.0, t) for t in THETA2], cfg)
        fit = ex.fit_fringe(recs)
        assert abs(fit.visibility - 1.0) < 3 * fit.sigma_visibility

    def test_randomized_recovery_and_coverage(self):
        rng = np.random.default_rng(123)
        inside3 = inside1 = 0
        n = 100
        for _ in range(n):
            offset = rng.uniform(400, 1000)
            vis = rng.uniform(0.2, 0.9)
            phase = rng.uniform(0, np.pi)
            y = rng.poisson(offset * (1 + vis * np.cos(2 * (THETA2 - phase))))
            fit = ex.FringeFitter().fit(THETA2, y)
            inside3 += abs(fit.visibility_ - vis) < 3 * fit.sigma_visibility_
            inside1 += abs(fit.visibility_ - vis) < fit.sigma_visibility_
        assert inside3 >= 95
        assert 0.58 <= inside1 / n <= 0.78

    def test_empty(self):
        with pytest.raises(UnderdeterminedFitError):
            ex.fit_fringe([])


class TestMeasureChsh:
    std = ChshSettings.from_degrees(0, 45, 22.5, 67.5)

    def test_exact_mode_ideal(self):
        m = ex.measure_chsh(eq5(), self.std, ExperimentConfig(), exact=True)
        assert m.S == pytest.approx(2 * np.sqrt(2), abs=1e-12)

    def test_sampled_dephased(self):
        v = 0.8835
        cfg = ExperimentConfig(pair_rate=10000.0, dwell=2.0, seed=3)
        m = ex.measure_chsh(eq5(v), self.std, cfg)
        assert m.total_counts / 16 == pytest.approx(1e4, rel=0.05)
        assert abs(m.S - np.sqrt(2) * (1 + v)) < 3 * m.sigma_S
        # about 89 sigma at 1e4 counts per orientation; 100 needs a longer dwell
        longer = ex.measure_chsh(eq5(v), self.std, ExperimentConfig(pair_rate=10000.0, dwell=4.0, seed=3))
        assert longer.significance > 100

    def test_separable(self):
        hv = hb.density(hb.tensor(hb.basis_ket(0), hb.basis_ket(3)))
        cfg = ExperimentConfig(pair_rate=5000.0, dwell=1.0, seed=8)
        for s in [self.std, ChshSettings.from_degrees(0, 45, -22.5, 22.5)]:
            m = ex.measure_chsh(hv, s, cfg)
            assert abs(m.S) <= 2 + 3 * m.sigma_S

    def test_error_propagation_formula(self):
        # oracle: finite-difference Poisson propagation through E = (s - d)/(s + d)
        counts = np.array([700.0, 650.0, 80.0, 95.0])
        e, se = ex.correlation_from_counts(*counts)

        def f(c):
            return (c[0] + c[1] - c[2] - c[3]) / c.sum()

        grad = []
        for k in range(4):
            step = np.zeros(4)
            step[k] = 1e-4
            grad.append((f(counts + step) - f(counts - step)) / 2e-4)
        assert e == pytest.approx(f(counts))
        assert se == pytest.approx(np.sqrt(np.sum(np.square(grad) * counts)), rel=1e-6)
        assert se == pytest.approx(np.sqrt((1 - e ** 2) / counts.sum()), rel=1e-12)

    def test_zero_counts(self):
        with pytest.raises(DegenerateError):
            ex.measure_chsh(eq5(), self.std, ExperimentConfig(pair_rate=0.0))


class TestRunExperiment:
    def test_ideal_sweep(self):
        rep = ex.run_experiment(Scenario(), exact=True)
        assert rep["derived"]["V0"] == pytest.approx(1.0, abs=1e-9)
        assert rep["derived"]["V45"] == pytest.approx(1.0, abs=1e-9)

    def test_ideal_chsh(self):
        rep = ex.run_experiment(Scenario(measurement="chsh"), exact=True)
        assert rep["standard"]["S"] == pytest.approx(2 * np.sqrt(2), abs=1e-12)
        assert rep["optimized"]["S_exact"] == pytest.approx(2 * np.sqrt(2), abs=1e-6)

    def test_reference_replication(self):
        scn = Scenario(source=SourceParams(0.95), gate=GateNoise(0.93))
        rep = ex.run_experiment(scn)
        assert abs(rep["derived"]["V45"] - 0.88) < 3 * rep["derived"]["sigma_V45"] + 0.01
        assert rep["derived"]["V45_model"] == pytest.approx(0.8835, abs=1e-12)
        chsh = ex.run_experiment(Scenario(source=SourceParams(0.95), gate=GateNoise(0.93),
                                          measurement="chsh"), exact=True)
        assert chsh["standard"]["S"] == pytest.approx(2.664, abs=1e-3)

    def test_no_source_entanglement(self):
        scn = Scenario(source=SourceParams(0.0), sweep=SweepPlan(theta1_deg=(45.0,)))
        rep = ex.run_experiment(scn)
        assert rep["curves"][0]["visibility_exact"] == pytest.approx(0.0, abs=1e-12)
        assert rep["derived"]["V45"] < 3 * rep["derived"]["sigma_V45"]
        chsh = ex.run_experiment(Scenario(source=SourceParams(0.0), measurement="chsh"), exact=True)
        assert chsh["optimized"]["S_exact"] <= 2 + 1e-9

    def test_reproducible(self):
        scn = Scenario(source=SourceParams(0.9))
        assert ex.run_experiment(scn) == ex.run_experiment(scn)
        assert ex.run_experiment(scn, threads=1) == ex.run_experiment(scn, threads=3)

    def test_custom_circuit(self):
        steps = ({"gate": "m_cnot"}, {"gate": "p_cnot"}, {"gate": "path_hwp(B,45)"})
        rep = ex.run_state(Scenario(circuit=steps))
        assert rep["fidelity"] == pytest.approx(1.0, abs=1e-12)

    def test_budget_error_reported(self):
        # with a perfect gate and source, about half the sampled V45 fits exceed V_C1 = 1
        flagged = 0
        for seed in range(10):
            scn = Scenario(sweep=SweepPlan(theta1_deg=(45.0,)), experiment=ExperimentConfig(seed=seed))
            derived = ex.run_experiment(scn)["derived"]
            if derived["V45"] > 1.0:
                flagged += 1
                assert derived["source_coherence"] is None
                assert "exceeds" in derived["budget_error"]
            else:
                assert derived["source_coherence"] == pytest.approx(derived["V45"])
        assert flagged > 0

    def test_exact_ideal_budget_is_consistent(self):
        rep = ex.run_experiment(Scenario(), exact=True)
        assert rep["derived"]["source_coherence"] == pytest.approx(1.0, abs=1e-9)

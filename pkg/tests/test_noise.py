import itertools

import numpy as np
import pytest

from sptq_sim import gates
from sptq_sim import hilbert as hb
from sptq_sim import measurement as ms
from sptq_sim._validation import InconsistentBudgetError, SptqError, check_density
from sptq_sim.noise import (
    GateNoise,
    classical_gate_visibility,
    decompose_fidelity,
    dephase_subsystem,
    dephasing_kraus,
    imperfect_swap_pipeline,
    predicted_v45,
)
from sptq_sim.source import SourceParams

from conftest import random_density

GRID = np.radians(np.arange(0.0, 180.0, 0.5))


def swept_visibility(rho, theta1):
    """Oracle: min/max of the coincidence curve sampled on a half-degree grid."""
    probs = [ms.coincidence_probability(rho, ms.AnalyzerSetting(theta1, t)) for t in GRID]
    return (max(probs) - min(probs)) / (max(probs) + min(probs))


def choi(kraus):
    d = kraus[0].shape[0]
    omega = np.eye(d).reshape(d * d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for k in kraus:
        vec = np.kron(np.eye(d), k) @ omega
        out += np.outer(vec, vec.conj())
    return out


class TestDephasing:
    def test_unit_coherence_is_identity(self, rng):
        rho = random_density(rng)
        for photon, dof in itertools.product(hb.PHOTONS, ("momentum", "polarization")):
            np.testing.assert_allclose(dephase_subsystem(rho, photon, dof, 1.0), rho, atol=1e-15)

    @pytest.mark.parametrize("photon", hb.PHOTONS)
    def test_full_dephasing_of_bell_polarization(self, eq5_state, photon):
        out = dephase_subsystem(eq5_state, photon, "polarization", 0.0)
        pol = hb.reduce_qubits(out, ["pS", "pI"])
        np.testing.assert_allclose(pol, np.diag([0.5, 0, 0, 0.5]), atol=1e-15)
        assert swept_visibility(out, np.pi / 4) == pytest.approx(0.0, abs=1e-12)

    def test_fidelity_of_dephased_bell_state(self, eq5_state):
        v = 0.8835
        out = dephase_subsystem(eq5_state, "signal", "polarization", v)
        assert hb.state_fidelity(out, gates.target_ket("no_final_mcnot")) == pytest.approx((1 + v) / 2, abs=1e-12)

    def test_elementwise_action(self, rng):
        rho = random_density(rng)
        v = 0.37
        out = dephase_subsystem(rho, "idler", "momentum", v)
        # oracle: element (r, c) scaled by v iff the mI bits of r and c differ
        for r, c in itertools.product(range(16), range(16)):
            factor = v if ((r >> 1) & 1) != ((c >> 1) & 1) else 1.0
            assert out[r, c] == pytest.approx(factor * rho[r, c], abs=1e-14)

    def test_single_photon(self):
        rho = hb.density(np.full(4, 0.5))
        out = dephase_subsystem(rho, "single", "polarization", 0.5)
        assert out[0, 1] == pytest.approx(0.125)
        assert out[0, 2] == pytest.approx(0.25)

    def test_composition_law(self, rng):
        rho = random_density(rng)
        for v1, v2 in [(0.9, 0.8), (0.3, 1.0), (0.0, 0.5)]:
            twice = dephase_subsystem(dephase_subsystem(rho, "signal", "polarization", v1),
                                      "signal", "polarization", v2)
            np.testing.assert_allclose(twice, dephase_subsystem(rho, "signal", "polarization", v1 * v2),
                                       atol=1e-14)

    @pytest.mark.parametrize("dof", ["momentum", "polarization"])
    @pytest.mark.parametrize("v", [0.0, 0.5, 0.93, 1.0])
    def test_kraus_completeness_and_choi(self, dof, v):
        kraus = dephasing_kraus(dof, v)
        np.testing.assert_allclose(sum(k.conj().T @ k for k in kraus), np.eye(4), atol=1e-12)
        assert np.linalg.eigvalsh(choi(kraus)).min() > -1e-12

    @pytest.mark.parametrize("v", [-0.1, 1.01])
    def test_out_of_range(self, v):
        with pytest.raises(SptqError):
            dephase_subsystem(np.eye(16) / 16, "signal", "polarization", v)

    def test_bad_dof(self):
        with pytest.raises(SptqError):
            dephasing_kraus("frequency", 0.5)


class TestPipeline:
    @pytest.mark.parametrize("variant", gates.CIRCUIT_VARIANTS)
    def test_ideal(self, variant):
        rho = imperfect_swap_pipeline(SourceParams(1, 1), GateNoise(1, 1), variant)
        assert hb.state_fidelity(rho, gates.target_ket(variant)) == pytest.approx(1, abs=1e-12)

    def test_reference_budget_split(self):
        rho = imperfect_swap_pipeline(SourceParams(0.95), GateNoise(0.95, 0.98))
        assert swept_visibility(rho, np.pi / 4) == pytest.approx(0.95 * 0.95 * 0.98, abs=1e-10)
        assert 0.86 <= 0.95 * 0.95 * 0.98 <= 0.90

    def test_reference_budget_combined(self):
        rho = imperfect_swap_pipeline(SourceParams(0.95), GateNoise(0.93))
        assert swept_visibility(rho, np.pi / 4) == pytest.approx(0.8835, abs=1e-10)

    @pytest.mark.parametrize("variant", gates.CIRCUIT_VARIANTS)
    def test_multiplicativity_on_grid(self, variant):
        for v_src, v_bs, v_dp in itertools.product([0.5, 0.9, 1.0], [0.8, 0.95], [0.9, 1.0]):
            rho = imperfect_swap_pipeline(SourceParams(v_src), GateNoise(v_bs, v_dp), variant)
            assert swept_visibility(rho, np.pi / 4) == pytest.approx(v_src * v_bs * v_dp, abs=1e-10)
            assert swept_visibility(rho, 0.0) == pytest.approx(1.0, abs=1e-10)
            assert ms.exact_fringe_visibility(rho, np.pi / 4) == pytest.approx(v_src * v_bs * v_dp, abs=1e-12)

    def test_per_photon_noise_squares_gate_factor(self):
        rho = imperfect_swap_pipeline(SourceParams(0.95), GateNoise(0.93), per_photon_gate_noise=True)
        assert swept_visibility(rho, np.pi / 4) == pytest.approx(0.95 * 0.93 ** 2, abs=1e-10)
        assert predicted_v45(SourceParams(0.95), GateNoise(0.93), True) == pytest.approx(0.95 * 0.93 ** 2)

    def test_outputs_physical(self):
        for v, p, g in itertools.product([0, 0.5, 1], [0, 0.5, 1], [0, 0.7, 1]):
            check_density(imperfect_swap_pipeline(SourceParams(v, p), GateNoise(g, 1.0)), 16)


class TestClassical:
    def test_reference_values(self):
        g = GateNoise(0.95, 0.98)
        assert classical_gate_visibility(g, True) == pytest.approx(0.931, abs=1e-12)
        assert classical_gate_visibility(g, False) == pytest.approx(0.95, abs=1e-12)

    def test_noiseless(self):
        assert classical_gate_visibility(GateNoise(), True) == pytest.approx(1.0, abs=1e-12)

    def test_triangular_gap(self):
        g = GateNoise(0.95, 0.975)
        ratio = classical_gate_visibility(g, True) / classical_gate_visibility(g, False)
        assert ratio == pytest.approx(0.975, abs=1e-12)


class TestDecompose:
    def test_reference_numbers(self):
        assert decompose_fidelity(0.88, 0.93) == pytest.approx(0.946, abs=5e-4)
        assert decompose_fidelity(0.8835, 0.93) == pytest.approx(0.95, abs=1e-12)

    @pytest.mark.parametrize("v", [0.0, 0.4, 1.0])
    def test_unit_gate(self, v):
        assert decompose_fidelity(v, 1.0) == v

    def test_inverts_forward_model(self):
        grid = [0.5, 0.8, 0.9, 0.95, 1.0]
        for v_src, v_gate in itertools.product(grid, grid):
            rho = imperfect_swap_pipeline(SourceParams(v_src), GateNoise(v_gate))
            v45 = ms.exact_fringe_visibility(rho, np.pi / 4)
            v_c1 = classical_gate_visibility(GateNoise(v_gate))
            assert decompose_fidelity(min(v45, v_c1), v_c1) == pytest.approx(v_src, abs=1e-12)

    def test_inconsistent_budget(self):
        with pytest.raises(InconsistentBudgetError):
            decompose_fidelity(0.95, 0.93)

    @pytest.mark.parametrize("v_c1", [0.0, 1.5])
    def test_bad_classical(self, v_c1):
        with pytest.raises(SptqError):
            decompose_fidelity(0.1, v_c1)

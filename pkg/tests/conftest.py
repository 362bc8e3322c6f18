import numpy as np
import pytest

from sptq_sim import gates
from sptq_sim import hilbert as hb
from sptq_sim.source import spdc_pair_state


def random_density(rng, dim=16, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_ket(rng, dim):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def random_unitary(rng, dim=4):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / abs(np.diag(r)))


def random_kraus(rng, n_ops=3, dim=4):
    """Kraus set from the blocks of a random isometry C^dim -> C^(n_ops*dim)."""
    big = rng.normal(size=(n_ops * dim, dim)) + 1j * rng.normal(size=(n_ops * dim, dim))
    q, _ = np.linalg.qr(big)
    return [q[k * dim:(k + 1) * dim] for k in range(n_ops)]


@pytest.fixture
def rng():
    return np.random.default_rng(20040101)


@pytest.fixture
def eq4_state():
    return hb.density(gates.target_ket("full_swap"))


@pytest.fixture
def eq5_state():
    return hb.density(gates.target_ket("no_final_mcnot"))


@pytest.fixture
def spdc():
    return spdc_pair_state()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)

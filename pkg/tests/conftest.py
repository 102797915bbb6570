"""Shared fixtures: canonical states, assemblages and one heavy statistical run."""

from __future__ import annotations

import time
import types

import numpy as np
import pytest

from steerqrng import assemblage as asm
from steerqrng import certify as cert
from steerqrng import simulate as sim
from steerqrng.linalg import singlet_state

BOOTSTRAP_SEED = 2024
BOOTSTRAP_RESAMPLES = 100


@pytest.fixture(scope="session")
def measurements():
    return asm.default_measurements()


@pytest.fixture(scope="session")
def singlet():
    return singlet_state()


@pytest.fixture(scope="session")
def assem_singlet_543(measurements):
    """Ideal singlet assemblage at the heralding efficiency used throughout."""
    return asm.ideal_assemblage(singlet_state(), measurements, eta=0.543)


@pytest.fixture(scope="session")
def bootstrap_run():
    """One full statistical chain, shared across test modules.

    Simulates >= 1e6 tomography trials at V = 0.99, eta_A = 0.543,
    reconstructs the assemblage by maximum likelihood, certifies it with a
    parametric bootstrap, and certifies the noiseless ideal assemblage at the
    same setting for comparison.  Session-scoped because the bootstrap costs
    about a minute; the certification unit tests and the acceptance suite
    both read from it.
    """
    t0 = time.perf_counter()
    config = sim.ExperimentConfig(
        visibility=0.99,
        eta_alice=0.543,
        trials_certification=1_000_000,
        rng_seed=77,
    )
    counts = sim.simulate_tomography(config)
    reconstruction = asm.ml_reconstruct(counts)
    result = cert.certify(
        reconstruction.assemblage,
        counts=counts,
        resamples=BOOTSTRAP_RESAMPLES,
        seed=BOOTSTRAP_SEED,
    )
    ideal = asm.ideal_assemblage(
        sim.werner_state(config.visibility), eta=config.eta_alice
    )
    ideal_result = cert.certify(ideal, x_star=result.x_star)
    elapsed = time.perf_counter() - t0
    return types.SimpleNamespace(
        config=config,
        counts=counts,
        reconstruction=reconstruction,
        result=result,
        ideal_result=ideal_result,
        elapsed=elapsed,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)

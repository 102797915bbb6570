"""Certification: guessing probability, LHS robustness, steering functional."""

import math

import numpy as np
import pytest

from steerqrng import assemblage as asm
from steerqrng import certify as cert
from steerqrng.linalg import ID2, hermitian_part, min_eigenvalue, singlet_state
from steerqrng.simulate import werner_state

from conftest import BOOTSTRAP_RESAMPLES, BOOTSTRAP_SEED


def singlet_assemblage(eta):
    return asm.ideal_assemblage(singlet_state(), eta=eta)


def verify_decomposition(result, assem, tol=1e-6):
    """Independent feasibility check of the eavesdropper's decomposition.

    Positivity of every part, parts summing to the assemblage, and the
    objective value recomputed from the parts: together these certify the
    reported guessing probability is achievable.
    """
    dec = result.decomposition
    for key, member in assem.members.items():
        total = dec.part_sum(*key)
        assert np.max(np.abs(total - member)) < tol, key
    recomputed = 0.0
    for e, part in dec.parts.items():
        for mat in part.values():
            assert min_eigenvalue(hermitian_part(np.asarray(mat, dtype=complex))) > -tol
        recomputed += float(np.real(np.trace(part[(result.x_star, e)])))
    assert recomputed == pytest.approx(result.p_guess, abs=10 * tol)


def evaluate_functional(functional, assem):
    """beta = sum_ax Tr F_{a|x} sigma_{a|x} for a given assemblage."""
    return sum(
        float(np.real(np.trace(functional[key] @ assem.members[key])))
        for key in functional
    )


class TestGuessingProbability:
    def test_lossless_singlet_is_perfectly_unpredictable(self):
        for x_star in ("X", "Z"):
            result = cert.guessing_probability(singlet_assemblage(1.0), x_star)
            assert result.p_guess == pytest.approx(0.5, abs=1e-7)
            verify_decomposition(result, singlet_assemblage(1.0))

    def test_threshold_efficiency_gives_no_randomness(self):
        result = cert.guessing_probability(singlet_assemblage(0.5), "X")
        assert result.p_guess == pytest.approx(1.0, abs=1e-6)

    def test_closed_form_law_above_threshold(self):
        """For the lossy singlet with these two measurements the optimum is
        linear in the heralding efficiency: p_guess = 3/2 - eta."""
        for eta in (0.52, 0.543, 0.6, 0.8):
            assem = singlet_assemblage(eta)
            result = cert.guessing_probability(assem, "X")
            assert result.p_guess == pytest.approx(1.5 - eta, abs=1e-7), eta
            verify_decomposition(result, assem)

    def test_settings_are_symmetric_for_singlet(self):
        assem = singlet_assemblage(0.7)
        px = cert.guessing_probability(assem, "X").p_guess
        pz = cert.guessing_probability(assem, "Z").p_guess
        assert px == pytest.approx(pz, abs=1e-7)

    def test_unsteerable_state_fully_guessable(self):
        # maximally mixed two-qubit state: no steering, no randomness
        assem = asm.ideal_assemblage(np.eye(4, dtype=complex) / 4, eta=0.9)
        result = cert.guessing_probability(assem, "Z")
        assert result.p_guess == pytest.approx(1.0, abs=1e-6)

    def test_trivial_lower_bound_holds(self):
        # Eve can always guess the most likely outcome outright
        assem = singlet_assemblage(0.543)
        result = cert.guessing_probability(assem, "X")
        trivial = max(
            float(np.real(np.trace(assem.member("X", a)))) for a in (0, 1, None)
        )
        assert result.p_guess >= trivial - 1e-9

    def test_solver_converged_with_small_gap(self):
        result = cert.guessing_probability(singlet_assemblage(0.6), "Z")
        assert result.solution.status == "optimal"
        assert result.solution.gap < 1e-7

    def test_unknown_setting_rejected(self):
        with pytest.raises(ValueError):
            cert.guessing_probability(singlet_assemblage(0.8), "Y")

    def test_invalid_assemblage_rejected(self, assem_singlet_543):
        with pytest.raises(cert.CertificationError):
            cert.guessing_probability(assem_singlet_543.scaled(1.1), "X")


class TestMinEntropy:
    def test_anchors(self):
        assert cert.min_entropy(1.0) == pytest.approx(0.0, abs=1e-12)
        assert cert.min_entropy(0.5) == pytest.approx(1.0, abs=1e-12)
        p = 1.5 - 0.543
        assert cert.min_entropy(p) == pytest.approx(-math.log2(p), abs=1e-12)

    def test_range_checked(self):
        with pytest.raises(ValueError):
            cert.min_entropy(0.0)
        with pytest.raises(ValueError):
            cert.min_entropy(1.5)


class TestLhsRobustness:
    def test_steered_singlet_negative(self):
        result = cert.lhs_mu(singlet_assemblage(0.8))
        assert result.mu < -1e-4

    def test_unsteerable_full_rank_positive(self):
        # Werner visibility 0.5 is well inside the unsteerable region and the
        # lossy assemblage is full rank: the model has slack on both sides
        assem = asm.ideal_assemblage(werner_state(0.5), eta=0.8)
        result = cert.lhs_mu(assem)
        assert result.mu > 0.01

    def test_werner_boundary_signs_at_full_efficiency(self):
        v_crit = 1.0 / math.sqrt(2.0)
        below = cert.lhs_mu(asm.ideal_assemblage(werner_state(v_crit - 0.01), eta=1.0))
        above = cert.lhs_mu(asm.ideal_assemblage(werner_state(v_crit + 0.01), eta=1.0))
        assert below.mu >= -1e-8
        assert above.mu < -1e-4

    def test_hidden_states_reproduce_assemblage(self):
        """Primal feasibility of the returned model, checked from scratch:
        sum_lambda D(a|x,lambda) tau_lambda = sigma_{a|x} - slack."""
        assem = asm.ideal_assemblage(werner_state(0.5), eta=0.8)
        result = cert.lhs_mu(assem)
        strategies = cert.deterministic_strategies(assem.settings)
        for x in assem.settings:
            for a in (0, 1, None):
                model = sum(
                    result.hidden_states[key]
                    for key, strat in zip(result.hidden_states, strategies)
                    if cert.strategy_response(strat, a, x)
                )
                assert np.max(np.abs(model - assem.member(x, a))) < 1e-6
        for mat in result.hidden_states.values():
            slack = hermitian_part(np.asarray(mat)) - result.mu * ID2
            assert min_eigenvalue(slack) > -1e-7


class TestSteeringFunctional:
    def test_duality_gap_tiny(self):
        for assem in (
            singlet_assemblage(0.543),
            singlet_assemblage(1.0),
            asm.ideal_assemblage(werner_state(0.5), eta=0.8),
            asm.ideal_assemblage(werner_state(0.9), eta=0.7),
        ):
            lhs = cert.lhs_mu(assem)
            steering = cert.steering_functional(assem)
            assert steering.beta == pytest.approx(lhs.mu, abs=1e-8)
            assert steering.beta == pytest.approx(steering.mu, abs=1e-8)

    def test_functional_is_dual_feasible(self):
        """G_lambda = sum_x F_{lambda(x)|x} must be PSD for all nine
        deterministic strategies, with unit normalization."""
        assem = singlet_assemblage(0.543)
        steering = cert.steering_functional(assem)
        strategies = cert.deterministic_strategies(assem.settings)
        total = 0.0
        for strat in strategies:
            g = sum(
                steering.functional[(x, a)]
                for x in assem.settings
                for a in (0, 1, None)
                if cert.strategy_response(strat, a, x)
            )
            assert min_eigenvalue(hermitian_part(np.asarray(g))) > -1e-8
            total += float(np.real(np.trace(g)))
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_witness_nonnegative_on_unsteerable_assemblages(self):
        """A functional extracted from a steered assemblage must evaluate to
        >= 0 on assemblages that admit a local-hidden-state model."""
        steering = cert.steering_functional(singlet_assemblage(0.543))
        assert steering.beta < -1e-4
        unsteerable = [
            asm.ideal_assemblage(werner_state(0.5), eta=0.8),
            asm.ideal_assemblage(np.eye(4, dtype=complex) / 4, eta=0.9),
            singlet_assemblage(0.4),
        ]
        for assem in unsteerable:
            assert evaluate_functional(steering.functional, assem) > -1e-8

    def test_value_matches_inner_product(self):
        assem = singlet_assemblage(0.7)
        steering = cert.steering_functional(assem)
        assert evaluate_functional(steering.functional, assem) == pytest.approx(
            steering.beta, abs=1e-8
        )


class TestCertifyOrchestrator:
    def test_fields_consistent(self, assem_singlet_543):
        result = cert.certify(assem_singlet_543)
        assert result.x_star in ("X", "Z")
        assert result.h_min == pytest.approx(-math.log2(result.p_guess), abs=1e-12)
        assert result.p_guess == pytest.approx(1.5 - 0.543, abs=1e-7)
        assert result.beta == pytest.approx(result.mu, abs=1e-8)
        assert "p_guess_by_setting" in result.diagnostics
        assert result.diagnostics["guessing_solver"]["status"] == "optimal"

    def test_explicit_setting_respected(self, assem_singlet_543):
        result = cert.certify(assem_singlet_543, x_star="Z")
        assert result.x_star == "Z"
        assert "p_guess_by_setting" not in result.diagnostics

    def test_bootstrap_requires_counts(self, assem_singlet_543):
        with pytest.raises(ValueError):
            cert.certify(assem_singlet_543, resamples=100)


class TestBootstrap:
    def test_minimum_resamples_enforced(self, bootstrap_run):
        with pytest.raises(ValueError):
            cert.bootstrap_uncertainty(
                bootstrap_run.counts, "X", resamples=10, seed=1
            )

    def test_statistics_sane(self, bootstrap_run):
        u = bootstrap_run.result.uncertainty
        assert u.resamples == BOOTSTRAP_RESAMPLES
        assert u.failed == 0
        assert u.h_min_std > 0.0
        assert len(u.h_min_values) == BOOTSTRAP_RESAMPLES
        # resampled spread brackets the point estimate
        assert abs(u.h_min_mean - bootstrap_run.result.h_min) < 5 * u.h_min_std
        assert u.p_guess_mean == pytest.approx(
            2.0 ** (-u.h_min_mean), abs=50 * u.p_guess_std
        )

    def test_deterministic_for_fixed_seed(self, bootstrap_run):
        repeat = cert.bootstrap_uncertainty(
            bootstrap_run.counts,
            bootstrap_run.result.x_star,
            resamples=BOOTSTRAP_RESAMPLES,
            seed=BOOTSTRAP_SEED,
            point_estimate=bootstrap_run.reconstruction.assemblage,
        )
        baseline = bootstrap_run.result.uncertainty
        assert repeat.h_min_values == baseline.h_min_values
        assert repeat.h_min_mean == baseline.h_min_mean
        assert repeat.failed == baseline.failed


class TestSerialization:
    def test_round_trip_with_uncertainty(self, tmp_path, bootstrap_run):
        path = tmp_path / "certification.txt"
        cert.save_certification(bootstrap_run.result, str(path))
        loaded = cert.load_certification(str(path))
        for name in ("x_star",):
            assert getattr(loaded, name) == getattr(bootstrap_run.result, name)
        for name in ("p_guess", "h_min", "mu", "beta"):
            assert getattr(loaded, name) == getattr(bootstrap_run.result, name)
        assert loaded.uncertainty.h_min_mean == \
            bootstrap_run.result.uncertainty.h_min_mean
        assert loaded.uncertainty.resamples == BOOTSTRAP_RESAMPLES
        for key, mat in bootstrap_run.result.functional.items():
            assert np.allclose(loaded.functional[key], mat, atol=1e-15)

    def test_round_trip_without_uncertainty(self, tmp_path, assem_singlet_543):
        result = cert.certify(assem_singlet_543)
        path = tmp_path / "certification.txt"
        cert.save_certification(result, str(path))
        loaded = cert.load_certification(str(path))
        assert loaded.uncertainty is None
        assert loaded.p_guess == result.p_guess

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("format something-else\n")
        with pytest.raises(ValueError):
            cert.load_certification(str(path))

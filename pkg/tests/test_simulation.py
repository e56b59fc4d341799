import numpy as np
import pytest

from egolsm.core.model import logit
from egolsm.core.partial_view import build_partial_view
from egolsm.exceptions import ModelSpecError
from egolsm.models.config import Scenario
from egolsm.services.simulation import (
    GroundTruth,
    RngSpec,
    apply_scenario,
    gen_dcsbm,
    gen_simulation1,
    sample_adjacency,
    spectral_factor,
)
from tests.factories import random_adjacency, random_model


class TestSimulation1:

    @pytest.fixture(scope="class")
    def truth(self):
        return gen_simulation1(200, 3, RngSpec(7))

    def test_latent_gram_normalized(self, truth):
        assert np.linalg.norm(truth.G_star) / 200 == pytest.approx(1.0, abs=1e-10)

    def test_degree_parameters_sum(self, truth):
        assert truth.model.alpha.sum() == pytest.approx(-200.0, rel=1e-12)
        assert np.all(truth.model.alpha < 0)

    def test_positions_centered(self, truth):
        assert np.allclose(truth.model.Z.sum(axis=0), 0.0, atol=1e-8)
        assert truth.model.Z.shape == (200, 3)

    def test_covariates(self, truth):
        X = truth.model.X
        assert np.linalg.norm(X) == pytest.approx(200.0, rel=1e-12)
        assert np.array_equal(X, X.T)
        assert np.all(np.diag(X) == 0)
        assert X.min() >= 0

    def test_labels_and_beta(self, truth):
        assert truth.model.beta == -0.5
        assert np.bincount(truth.labels).tolist() == [100, 100]

    def test_odd_n_rejected(self):
        with pytest.raises(ModelSpecError):
            gen_simulation1(201, 3, RngSpec(7))

    def test_reproducible(self):
        a = gen_simulation1(50, 2, RngSpec(3, stream=1))
        b = gen_simulation1(50, 2, RngSpec(3, stream=1))
        c = gen_simulation1(50, 2, RngSpec(3, stream=2))
        assert np.array_equal(a.theta_star, b.theta_star)
        assert not np.array_equal(a.theta_star, c.theta_star)


class TestDCSBM:

    def test_single_block_has_no_latent_part(self):
        truth = gen_dcsbm(12, 1, np.eye(1), alpha=-1.0)
        assert truth.model.Z.shape == (12, 1)
        assert np.all(truth.model.Z == 0)

    def test_two_equal_blocks(self):
        truth = gen_dcsbm(10, 2, np.eye(2), alpha=-1.0)
        Z = truth.model.Z
        assert Z.shape == (10, 1)
        assert np.allclose(np.abs(Z), 1 / np.sqrt(2))
        G = truth.G_star
        assert np.all(G[:5, :5] > 0) and np.all(G[5:, 5:] > 0)
        assert np.all(G[:5, 5:] < 0)
        assert truth.labels.tolist() == [0] * 5 + [1] * 5

    def test_rank_is_blocks_minus_one(self, rng):
        H = rng.normal(size=(4, 4))
        H = H @ H.T + 4 * np.eye(4)
        truth = gen_dcsbm(40, 4, H, rng=rng)
        assert truth.model.k == 3
        assert np.linalg.matrix_rank(truth.model.Z, tol=1e-8) == 3
        assert truth.model.alpha.sum() == pytest.approx(-40.0)

    def test_non_positive_definite_rejected(self):
        with pytest.raises(ModelSpecError):
            gen_dcsbm(10, 2, np.array([[1.0, 2.0], [2.0, 1.0]]))
        with pytest.raises(ModelSpecError):
            gen_dcsbm(10, 2, np.array([[1.0, 0.5], [0.0, 1.0]]))
        with pytest.raises(ModelSpecError):
            gen_dcsbm(10, 3, np.eye(2))

    def test_custom_block_sizes(self):
        truth = gen_dcsbm(10, 2, np.eye(2), alpha=-1.0, sizes=[7, 3])
        assert np.bincount(truth.labels).tolist() == [7, 3]
        with pytest.raises(ModelSpecError):
            gen_dcsbm(10, 2, np.eye(2), sizes=[7, 4])


def test_spectral_factor_reproduces_low_rank(rng):
    U = rng.normal(size=(15, 2))
    G = U @ U.T
    Z = spectral_factor(G, 2)
    assert np.allclose(Z @ Z.T, G, atol=1e-10)
    with pytest.raises(ModelSpecError):
        spectral_factor(G, 0)


class TestSampling:

    def test_edge_density(self):
        n = 2000
        theta = np.full((n, n), float(logit(0.3)))
        A = sample_adjacency(theta, RngSpec(1))
        density = A.edge_count / (n * (n - 1) / 2)
        assert density == pytest.approx(0.3, abs=0.01)

    def test_zero_probability_gives_empty_graph(self):
        A = sample_adjacency(np.full((20, 20), -np.inf), RngSpec(1))
        assert A.edge_count == 0

    def test_same_spec_same_graph(self, rng):
        theta = random_model(30, 2, rng).theta()
        first = sample_adjacency(theta, RngSpec(5, stream=2))
        second = sample_adjacency(theta, RngSpec(5, stream=2))
        assert np.array_equal(first.A, second.A)
        assert np.array_equal(first.A, first.A.T)
        assert not np.diag(first.A).any()


class TestScenarios:

    def test_imbalanced_is_identity(self, rng):
        A = random_adjacency(20, 0.3, rng)
        out = apply_scenario(A, 3, Scenario.IMBALANCED, rng)
        assert np.array_equal(out.A, A)

    def test_full_scenario_observes_everything(self, rng):
        A = random_adjacency(20, 0.3, rng)
        out = apply_scenario(A, 3, Scenario.FULL, rng)
        view = build_partial_view(out, 3)
        assert view.is_full
        assert np.array_equal(view.B, out.A)
        # only the center's row and column change
        keep = np.ones(20, dtype=bool)
        keep[3] = False
        assert np.array_equal(out.A[np.ix_(keep, keep)], A[np.ix_(keep, keep)])

    def test_balanced_degree_matches_observed_density(self):
        n = 400
        A = random_adjacency(n, 0.25, np.random.default_rng(0))
        p_hat = A[0].sum() / n
        degrees = [
            apply_scenario(A, 0, Scenario.BALANCED, RngSpec(9).generator(i)).A[0].sum()
            for i in range(200)
        ]
        assert np.mean(degrees) == pytest.approx((n - 1) * p_hat, abs=3.0)

    def test_center_out_of_range(self, rng):
        with pytest.raises(IndexError):
            apply_scenario(random_adjacency(5, 0.5, rng), 5, "full", rng)


def test_ground_truth_derived_matrices(rng):
    model = random_model(10, 2, rng)
    truth = GroundTruth(model=model)
    assert np.array_equal(truth.theta_star, model.theta())
    assert np.array_equal(truth.G_star, truth.G_star.T)
    assert truth.n == 10 and truth.k == 2

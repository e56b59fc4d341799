import logging

import numpy as np
import pytest

from egolsm.core.model import LatentModel, sigmoid, theta_from_parts
from egolsm.core.partial_view import build_partial_view, full_view, view_from_neighbor_set
from egolsm.exceptions import DimensionError
from egolsm.models.config import InitConfig
from egolsm.services.initializer import decompose_initial, initialize, usvt_probability_estimate
from egolsm.services.metrics import error_metric
from egolsm.services.simulation import RngSpec, gen_simulation1, sample_adjacency
from tests.factories import random_covariates


def _offdiag_error(Z, alpha, beta, X, theta):
    d = theta_from_parts(alpha, beta, Z, X) - theta
    np.fill_diagonal(d, 0.0)
    return float(np.linalg.norm(d))


class TestUSVT:

    def test_isolated_center_gives_clip_floor(self):
        n = 10
        view = view_from_neighbor_set(np.zeros((n, n), dtype=int), [], center=0)
        P = usvt_probability_estimate(view.B, view, InitConfig(k=2))
        assert np.all(P == 1e-3)

    def test_rank_one_reconstruction(self):
        n, p = 200, 0.3
        ones = np.ones((n, n)) - np.eye(n)
        view = full_view(ones.astype(int))
        P = usvt_probability_estimate(p * ones, view, InitConfig(k=1))
        off = P[~np.eye(n, dtype=bool)]
        assert np.max(np.abs(off - p)) <= 1.0 / n

    def test_threshold_above_spectrum(self, rng):
        model = LatentModel(alpha=np.full(30, -1.0), beta=0.0, Z=np.zeros((30, 1)), X=np.zeros((30, 30)))
        A = sample_adjacency(model.theta(), rng)
        view = build_partial_view(A, 0)
        config = InitConfig(k=1, usvt_threshold_const=1e6, prob_clip_eps=0.01)
        assert np.all(usvt_probability_estimate(view.B, view, config) == 0.01)

    def test_output_is_symmetric_and_clipped(self, rng):
        truth = gen_simulation1(60, 2, rng)
        A = sample_adjacency(truth.theta_star, rng)
        view = build_partial_view(A, 5)
        P = usvt_probability_estimate(view.B, view, InitConfig(k=2))
        assert np.array_equal(P, P.T)
        assert P.min() >= 1e-3 and P.max() <= 1 - 1e-3

    def test_shape_checked(self, path_graph):
        view = build_partial_view(path_graph, 0)
        with pytest.raises(DimensionError):
            usvt_probability_estimate(np.zeros((3, 3)), view, InitConfig(k=1))


class TestDecompose:

    @pytest.mark.parametrize("neighbors", [None, range(1, 9)])
    def test_no_latent_signal_recovers_degrees_and_beta(self, rng, neighbors):
        n = 30
        X = random_covariates(n, rng)
        model = LatentModel(alpha=rng.uniform(-1.5, -0.5, n), beta=-0.4, Z=np.zeros((n, 1)), X=X)
        empty = np.zeros((n, n), dtype=int)
        view = full_view(empty) if neighbors is None else view_from_neighbor_set(empty, neighbors, center=0)

        Z0, alpha0, beta0 = decompose_initial(sigmoid(model.theta()), X, view, k=1)

        assert beta0 == pytest.approx(-0.4, abs=1e-8)
        assert np.allclose(alpha0, model.alpha, atol=1e-8)
        assert np.allclose(Z0, 0.0, atol=1e-8)

    def test_zero_covariates_give_zero_beta(self, rng):
        truth = gen_simulation1(40, 2, rng)
        view = full_view(np.zeros((40, 40), dtype=int))
        _, _, beta0 = decompose_initial(sigmoid(truth.theta_star), np.zeros((40, 40)), view, k=2)
        assert beta0 == 0.0

    def test_refinement_improves_noiseless_fit(self):
        truth = gen_simulation1(60, 2, RngSpec(11))
        X = truth.model.X
        view = full_view(np.zeros((60, 60), dtype=int))
        P = sigmoid(truth.theta_star)

        rough = decompose_initial(P, X, view, k=2, refine_steps=0)
        refined = decompose_initial(P, X, view, k=2, refine_steps=10)

        assert _offdiag_error(*refined, X, truth.theta_star) < _offdiag_error(*rough, X, truth.theta_star)

    def test_noiseless_full_view_reassembles_theta(self):
        truth = gen_simulation1(60, 2, RngSpec(11))
        X = truth.model.X
        view = full_view(np.zeros((60, 60), dtype=int))

        Z0, alpha0, beta0 = decompose_initial(sigmoid(truth.theta_star), X, view, k=2)

        d = theta_from_parts(alpha0, beta0, Z0, X) - truth.theta_star
        np.fill_diagonal(d, 0.0)
        assert np.abs(d).max() <= 1e-6
        assert error_metric(Z0, alpha0, beta0, truth, view).e_t <= 1e-8

    def test_refinement_stops_once_converged(self, caplog):
        truth = gen_simulation1(40, 2, RngSpec(3))
        view = full_view(np.zeros((40, 40), dtype=int))
        P = sigmoid(truth.theta_star)
        with caplog.at_level(logging.DEBUG, logger="egolsm.services.initializer"):
            converged = decompose_initial(P, truth.model.X, view, k=2, refine_tol=1e-6)
        assert "converged after" in caplog.text
        capped = decompose_initial(P, truth.model.X, view, k=2, refine_steps=1)
        assert _offdiag_error(*converged, truth.model.X, truth.theta_star) < _offdiag_error(
            *capped, truth.model.X, truth.theta_star
        )

    def test_rank_shortfall_pads_with_zero_columns(self, caplog):
        n = 20
        model = LatentModel(alpha=np.full(n, -1.0), beta=0.0, Z=np.zeros((n, 1)), X=np.zeros((n, n)))
        view = full_view(np.zeros((n, n), dtype=int))
        Z0, _, _ = decompose_initial(sigmoid(model.theta()), np.zeros((n, n)), view, k=3)
        assert Z0.shape == (n, 3)
        assert "padding Z0" in caplog.text


def test_initialize_is_group_centered(rng):
    for center in (0, 7, 33):
        truth = gen_simulation1(80, 2, rng)
        A = sample_adjacency(truth.theta_star, rng)
        view = build_partial_view(A, center)
        Z0, alpha0, beta0 = initialize(view, truth.model.X, InitConfig(k=2))

        assert Z0.shape == (80, 2)
        assert alpha0.shape == (80,)
        assert np.isfinite(beta0)
        scale = max(1.0, float(np.abs(Z0).max()))
        assert np.allclose(Z0[view.S_diag].sum(axis=0), 0.0, atol=1e-10 * scale)
        if view.n_IS:
            assert np.allclose(Z0[~view.S_diag].sum(axis=0), 0.0, atol=1e-10 * scale)

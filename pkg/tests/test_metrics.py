import math

import numpy as np
import pytest
from scipy.stats import ortho_group

from egolsm.core.model import LatentModel, sigmoid
from egolsm.core.partial_view import (
    apply_centering,
    build_partial_view,
    full_view,
    mask_transform,
    view_from_neighbor_set,
)
from egolsm.exceptions import DimensionError
from egolsm.services.metrics import (
    error_metric,
    imbalance,
    neighborhood_diagnostics,
    procrustes_align,
)
from egolsm.services.simulation import GroundTruth, gen_dcsbm, sample_adjacency
from tests.factories import random_model


@pytest.fixture
def truth_and_view(rng):
    model = random_model(25, 2, rng)
    truth = GroundTruth(model=model)
    A = sample_adjacency(truth.theta_star, rng)
    return truth, build_partial_view(A, 4)


class TestProcrustes:

    def test_rotation_recovered(self, rng):
        Z_ref = rng.normal(size=(20, 3))
        Q = ortho_group.rvs(3, random_state=1)
        R, err = procrustes_align(Z_ref @ Q, Z_ref)
        assert err <= 1e-10
        assert np.allclose(R, Q, atol=1e-10)

    def test_identity(self, rng):
        Z = rng.normal(size=(10, 2))
        R, err = procrustes_align(Z, Z)
        assert np.allclose(R, np.eye(2), atol=1e-12)
        assert err == pytest.approx(0.0, abs=1e-12)

    def test_sign_flip(self):
        R, err = procrustes_align(np.array([[-1.0], [1.0]]), np.array([[1.0], [-1.0]]))
        assert R[0, 0] == pytest.approx(-1.0)
        assert err == pytest.approx(0.0, abs=1e-15)

    def test_error_invariant_to_rotating_estimate(self, rng):
        Z_ref = rng.normal(size=(15, 2))
        Z_hat = Z_ref + 0.3 * rng.normal(size=(15, 2))
        _, err = procrustes_align(Z_hat, Z_ref)
        for seed in range(5):
            Q = ortho_group.rvs(2, random_state=seed)
            assert procrustes_align(Z_hat @ Q, Z_ref)[1] == pytest.approx(err, abs=1e-10)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            procrustes_align(np.zeros((3, 2)), np.zeros((3, 1)))


class TestErrorMetric:

    def test_exact_parameters(self, truth_and_view):
        truth, view = truth_and_view
        star = truth.model
        Z_t = apply_centering(star.Z, view) @ ortho_group.rvs(2, random_state=3)
        report = error_metric(Z_t, star.alpha, star.beta, truth, view)
        assert report.e_t == pytest.approx(0.0, abs=1e-12)
        assert report.delta_Z_F == pytest.approx(0.0, abs=1e-10)
        assert report.delta_G_F_sq == pytest.approx(0.0, abs=1e-12)

    def test_beta_offset_only(self, truth_and_view):
        truth, view = truth_and_view
        star = truth.model
        report = error_metric(apply_centering(star.Z, view), star.alpha, star.beta + 0.25, truth, view)
        SX = mask_transform(star.X, view)
        assert report.e_t == pytest.approx(0.0625 * np.sum(SX ** 2), rel=1e-10)

    def test_constant_alpha_offset(self, truth_and_view):
        truth, view = truth_and_view
        star = truth.model
        c = 0.1
        report = error_metric(apply_centering(star.Z, view), star.alpha + c, star.beta, truth, view)
        assert report.e_t == pytest.approx(2 * c ** 2 * view.mask.sum(), rel=1e-10)

    def test_e_t_dominates_its_terms(self, truth_and_view, rng):
        truth, view = truth_and_view
        star = truth.model
        Z_t = apply_centering(star.Z, view) + 0.1 * rng.normal(size=star.Z.shape)
        d_alpha = 0.05 * rng.normal(size=view.n)
        report = error_metric(Z_t, star.alpha + d_alpha, star.beta - 0.1, truth, view)

        op = np.linalg.norm(apply_centering(star.Z, view), 2)
        alpha_term = 2 * np.sum(mask_transform(np.outer(d_alpha, np.ones(view.n)), view) ** 2)
        beta_term = 0.01 * np.sum(mask_transform(star.X, view) ** 2)
        z_term = op ** 2 * report.delta_Z_F ** 2
        for term in (z_term, alpha_term, beta_term):
            assert report.e_t >= term
        assert report.e_t == pytest.approx(z_term + alpha_term + beta_term, rel=1e-12)
        assert report.relative_error_Theta > 0
        assert report.c == pytest.approx(report.delta_Z_F / op)

    def test_conditional_zeroes_center_errors(self, truth_and_view):
        truth, view = truth_and_view
        star = truth.model
        alpha = star.alpha.copy()
        alpha[view.center] += 1.0

        plain = error_metric(star.Z, alpha, star.beta, truth, view)
        conditional = error_metric(star.Z, alpha, star.beta, truth, view, conditional=True)
        assert plain.delta_Theta_F_sq > 0
        assert conditional.delta_Theta_F_sq == pytest.approx(0.0, abs=1e-20)


class TestImbalance:

    def test_balanced_blocks_give_zero(self):
        truth = gen_dcsbm(40, 2, np.eye(2), alpha=-1.0)
        view = view_from_neighbor_set(np.zeros((40, 40), dtype=int), [1, 2, 3, 20, 21, 22, 23], center=0)
        U_S, normalized = imbalance(truth.model.Z, view, np.linalg.norm(truth.G_star))
        assert U_S <= 1e-10
        assert normalized <= 1e-10

    def test_one_sided_neighborhood_lower_bound(self):
        n = 40
        Z = np.where(np.arange(n) < 24, 1.0, -1.0)[:, None]
        view = view_from_neighbor_set(np.zeros((n, n), dtype=int), range(1, 24), center=0)
        U_S, _ = imbalance(Z, view)
        assert U_S ** 2 >= (view.r_S * n) ** 2 * (1 - 1e-12)

    def test_imbalanced_exceeds_balanced(self):
        truth = gen_dcsbm(40, 2, np.eye(2), alpha=-1.0)
        empty = np.zeros((40, 40), dtype=int)
        balanced = view_from_neighbor_set(empty, [1, 2, 3, 20, 21, 22, 23], center=0)
        lopsided = view_from_neighbor_set(empty, range(1, 8), center=0)
        norm = np.linalg.norm(truth.G_star)
        assert imbalance(truth.model.Z, lopsided, norm)[1] > imbalance(truth.model.Z, balanced, norm)[1]

    def test_rotation_invariance(self, truth_and_view):
        truth, view = truth_and_view
        Z = truth.model.Z
        Q = ortho_group.rvs(2, random_state=7)
        assert imbalance(Z @ Q, view)[0] == pytest.approx(imbalance(Z, view)[0], rel=1e-12)

    def test_default_normalization_uses_gram_norm(self, truth_and_view):
        truth, view = truth_and_view
        Z = truth.model.Z
        U_S, normalized = imbalance(Z, view)
        assert normalized == pytest.approx(U_S / np.linalg.norm(Z @ Z.T), rel=1e-12)

    def test_row_mismatch(self, truth_and_view):
        truth, view = truth_and_view
        with pytest.raises(DimensionError):
            imbalance(truth.model.Z[:-1], view)


class TestDiagnostics:

    def test_full_view_condition_number(self, rng):
        model = random_model(20, 3, rng)
        truth = GroundTruth(model=model)
        A = sample_adjacency(truth.theta_star, rng)
        stats = neighborhood_diagnostics(truth, full_view(A))
        sigma = np.linalg.svd(apply_centering(model.Z, full_view(A)), compute_uv=False)
        assert stats.kappa_prime == pytest.approx(sigma[0] / sigma[-1], rel=1e-10)
        assert stats.gamma_S == pytest.approx(min(1.0, stats.kappa_prime ** -4))
        assert stats.r_S == 1.0
        assert stats.centering_gap_F_sq == pytest.approx(0.0, abs=1e-12)

    def test_uniform_center_row_gives_zero_drift(self, rng):
        n = 12
        Z = np.zeros((n, 2))
        Z[1:] = rng.normal(size=(n - 1, 2))
        Z[1:] -= Z[1:].mean(axis=0)
        model = LatentModel(alpha=np.full(n, -1.0), beta=0.0, Z=Z, X=np.zeros((n, n)))
        truth = GroundTruth(model=model)
        view = view_from_neighbor_set(np.zeros((n, n), dtype=int), [1, 2, 3], center=0)

        stats = neighborhood_diagnostics(truth, view)
        assert stats.delta_n_sq == pytest.approx(0.0, abs=1e-20)
        assert stats.p_S == pytest.approx(float(sigmoid(-2.0)) * (n - 1) / n)

    def test_edge_density_excludes_self_pair(self):
        n = 4
        model = LatentModel(alpha=np.full(n, -1.0), beta=0.0, Z=np.zeros((n, 1)), X=np.zeros((n, n)))
        view = view_from_neighbor_set(np.zeros((n, n), dtype=int), [1], center=0)
        stats = neighborhood_diagnostics(GroundTruth(model=model), view)
        assert stats.p_S == pytest.approx(3 * float(sigmoid(-2.0)) / 4)
        assert stats.p_S == pytest.approx(0.0894, abs=1e-4)

    def test_rank_deficient_neighborhood(self, rng):
        model = random_model(15, 2, rng)
        truth = GroundTruth(model=model)
        view = view_from_neighbor_set(np.zeros((15, 15), dtype=int), [], center=3)
        stats = neighborhood_diagnostics(truth, view)
        assert math.isinf(stats.kappa_prime)
        assert stats.gamma_S == 0.0

    def test_balanced_view_has_no_centering_gap(self):
        truth = gen_dcsbm(40, 2, np.eye(2), alpha=-1.0)
        view = view_from_neighbor_set(np.zeros((40, 40), dtype=int), [1, 2, 3, 20, 21, 22, 23], center=0)
        stats = neighborhood_diagnostics(truth, view)
        assert stats.U_S <= 1e-10
        assert stats.centering_gap_F_sq <= 1e-10
        assert stats.covariate_stable_rank == 0.0

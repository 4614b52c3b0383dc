import math

import numpy as np
import pytest

from nenmf.compression import (
    GAUSSIAN,
    POWER_ITERATION,
    SUBSPACE_ITERATION,
    SketchPair,
    compress_problem,
    gaussian_sketch_pair,
    load_sketch,
    power_iteration_pair,
    save_sketch,
    subspace_iteration_pair,
)
from nenmf.errors import DimensionError, NumericalCollapseError, ZeroMatrixError
from nenmf.matrix import frobenius_norm, gaussian_matrix, uniform_matrix
from nenmf.nnls import InnerSolverConfig, solve_nnls
from nenmf.synthetic import generate_problem


def low_rank_matrix(n, m, rank, seed):
    rng = np.random.default_rng(seed)
    return rng.random((n, rank)) @ rng.random((rank, m))


def capture_residuals(X, sketch):
    left = frobenius_norm(X - sketch.L.T @ (sketch.L @ X)) / frobenius_norm(X)
    right = frobenius_norm(X - (X @ sketch.R) @ sketch.R.T) / frobenius_norm(X)
    return left, right


def ill_conditioned_low_rank(n, rank, spread, seed):
    """Exact rank-`rank` matrix with geometrically decaying singular values."""
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((n, rank)))
    V, _ = np.linalg.qr(rng.standard_normal((n, rank)))
    s = np.geomspace(1.0, spread, rank)
    return (U * s) @ V.T


class TestGaussianSketchPair:
    def test_shapes_at_paper_operating_point(self):
        sk = gaussian_sketch_pair(500, 500, 25, 1)
        assert sk.L.shape == (25, 500)
        assert sk.R.shape == (500, 25)
        assert sk.scheme == GAUSSIAN
        assert sk.q == 0

    def test_scaled_variance(self):
        sk = gaussian_sketch_pair(500, 500, 25, 2)
        assert sk.L.var() == pytest.approx(1 / 25, rel=0.10)
        assert sk.R.var() == pytest.approx(1 / 25, rel=0.10)

    def test_deterministic(self):
        a = gaussian_sketch_pair(40, 30, 5, 3)
        b = gaussian_sketch_pair(40, 30, 5, 3)
        assert (a.L == b.L).all() and (a.R == b.R).all()

    def test_zero_rank_rejected(self):
        with pytest.raises(DimensionError):
            gaussian_sketch_pair(10, 10, 0, 1)

    def test_scaling_invariance_of_compressed_solve(self):
        # rescaling L leaves the compressed subproblem's minimizer unchanged
        X = low_rank_matrix(60, 60, 6, 10)
        G = uniform_matrix(60, 6, 11)
        F0 = uniform_matrix(6, 60, 12)
        sk = gaussian_sketch_pair(60, 60, 10, 13)
        cfg = InnerSolverConfig(max_iter=2000, grad_tol=1e-10)
        F_a = solve_nnls(sk.L @ G, sk.L @ X, F0, cfg)
        F_b = solve_nnls((3.0 * sk.L) @ G, (3.0 * sk.L) @ X, F0, cfg)
        assert np.abs(F_a - F_b).max() <= 1e-6 * max(1.0, np.abs(F_a).max())


class TestSubspaceIterationPair:
    def test_orthonormal_rows_and_columns(self):
        X = generate_problem(200, 180, 10, 30.0, seed=5).X
        sk = subspace_iteration_pair(X, 20, 4, seed=6)
        assert np.abs(sk.L @ sk.L.T - np.eye(20)).max() <= 1e-10
        assert np.abs(sk.R.T @ sk.R - np.eye(20)).max() <= 1e-10

    def test_exact_range_capture_on_low_rank_data(self):
        X = low_rank_matrix(300, 300, 15, 20)
        sk = subspace_iteration_pair(X, 25, 4, seed=21)
        left, right = capture_residuals(X, sk)
        assert left <= 1e-8
        assert right <= 1e-8

    def test_capture_monotone_in_q(self):
        X = generate_problem(150, 150, 10, 30.0, seed=22).X
        prev_left, prev_right = math.inf, math.inf
        for q in (1, 2, 3, 4):
            sk = subspace_iteration_pair(X, 20, q, seed=23)
            left, right = capture_residuals(X, sk)
            assert left <= prev_left + 1e-12
            assert right <= prev_right + 1e-12
            prev_left, prev_right = left, right

    def test_deterministic(self):
        X = low_rank_matrix(50, 40, 5, 24)
        a = subspace_iteration_pair(X, 8, 2, seed=25)
        b = subspace_iteration_pair(X, 8, 2, seed=25)
        assert (a.L == b.L).all() and (a.R == b.R).all()

    def test_rank_above_dims_rejected(self):
        with pytest.raises(DimensionError):
            subspace_iteration_pair(np.ones((10, 8)), 9, 1, seed=1)

    def test_zero_matrix_rejected(self):
        with pytest.raises(ZeroMatrixError):
            subspace_iteration_pair(np.zeros((10, 10)), 2, 1, seed=1)

    def test_zero_q_rejected(self):
        with pytest.raises(ValueError):
            subspace_iteration_pair(np.ones((10, 10)), 2, 0, seed=1)


class TestPowerIterationPair:
    def test_single_step_captures_low_rank_range(self):
        X = low_rank_matrix(300, 300, 15, 30)
        sk = power_iteration_pair(X, 25, 1, seed=31)
        left, right = capture_residuals(X, sk)
        assert left <= 1e-6
        assert right <= 1e-6

    def test_agrees_with_subspace_on_full_target_rank(self):
        # exact rank nu and mild spectral decay: both schemes must recover the
        # same subspace, so all principal angles between the spans vanish
        nu = 12
        rng = np.random.default_rng(32)
        U, _ = np.linalg.qr(rng.standard_normal((150, nu)))
        V, _ = np.linalg.qr(rng.standard_normal((130, nu)))
        X = (U * np.geomspace(1.0, 0.2, nu)) @ V.T
        pw = power_iteration_pair(X, nu, 4, seed=33)
        sub = subspace_iteration_pair(X, nu, 4, seed=33)
        cosines = np.linalg.svd(pw.L @ sub.L.T, compute_uv=False)
        angles = np.arccos(np.clip(cosines, -1.0, 1.0))
        assert angles.max() <= 1e-6

    def test_orthonormal_despite_spectral_decay(self):
        X = generate_problem(200, 200, 10, 30.0, seed=34).X
        sk = power_iteration_pair(X, 20, 4, seed=35)
        assert np.abs(sk.L @ sk.L.T - np.eye(20)).max() <= 1e-10
        assert np.abs(sk.R.T @ sk.R - np.eye(20)).max() <= 1e-10

    def test_large_q_collapses_or_degrades(self):
        X = ill_conditioned_low_rank(300, 15, 1e-7, seed=36)
        try:
            pw = power_iteration_pair(X, 25, 40, seed=37)
        except NumericalCollapseError:
            return
        sub = subspace_iteration_pair(X, 25, 40, seed=37)
        pw_left = capture_residuals(X, pw)[0]
        sub_left = capture_residuals(X, sub)[0]
        assert pw_left >= 10 * sub_left


class TestCompressProblem:
    def test_identity_sketch(self):
        X = low_rank_matrix(20, 20, 3, 40)
        sk = SketchPair(L=np.eye(20), R=np.eye(20), nu=20, scheme=GAUSSIAN, q=0, seed=0)
        comp = compress_problem(X, sk)
        assert (comp.X_L == X).all()
        assert (comp.X_R == X).all()

    def test_shapes(self):
        X = generate_problem(500, 500, 15, 30.0, seed=41).X
        sk = gaussian_sketch_pair(500, 500, 25, 42)
        comp = compress_problem(X, sk)
        assert comp.X_L.shape == (25, 500)
        assert comp.X_R.shape == (500, 25)

    def test_orthonormal_sketch_contracts(self):
        X = generate_problem(120, 120, 8, 30.0, seed=43).X
        sk = subspace_iteration_pair(X, 16, 2, seed=44)
        comp = compress_problem(X, sk)
        assert frobenius_norm(comp.X_L) <= frobenius_norm(X) * (1 + 1e-12)
        assert frobenius_norm(comp.X_R) <= frobenius_norm(X) * (1 + 1e-12)

    def test_mismatched_shapes_rejected(self):
        X = np.ones((10, 12))
        sk = gaussian_sketch_pair(10, 10, 3, 1)
        with pytest.raises(DimensionError):
            compress_problem(X, sk)


class TestSketchSerialization:
    def test_round_trip(self, tmp_path):
        X = low_rank_matrix(40, 40, 4, 50)
        sk = subspace_iteration_pair(X, 8, 3, seed=51)
        save_sketch(sk, tmp_path / "sk")
        back = load_sketch(tmp_path / "sk")
        assert (back.L == sk.L).all() and (back.R == sk.R).all()
        assert (back.nu, back.scheme, back.q, back.seed) == (8, SUBSPACE_ITERATION, 3, 51)

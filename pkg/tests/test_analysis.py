"""Analysis-module tests: extraction, frequency-core reductions, synthesis.

Dual routes everywhere: probing extractors are checked against direct matrix
assembly, and the entry-table reduction against the transform-composition
route.
"""

from __future__ import annotations

import numpy as np
import pytest

from affinecast import analysis, linalg, models
from affinecast.analysis import (
    AffineModel,
    affine_of_fits,
    cosine_similarity,
    extract_affine,
    extract_affine_sigma,
    fits_bias_operator,
    fits_of_affine,
    irft_real_matrix,
    last_column_matrix,
    mean_matrix,
    moving_average_matrix,
    stack_complex,
    tw_matrix,
)
from affinecast.errors import ExpressivityError, NotAffineError, UnsupportedShapeError
from affinecast.models import (
    DLinearModel,
    FitsModel,
    ForecastModel,
    InstanceNorm,
    LinearLayer,
    forward,
    init_model,
    nlinear,
    rlinear,
)


class TestStructuralMatrices:
    def test_moving_average_known_matrix(self):
        expected = (
            np.array(
                [
                    [2, 1, 0, 0, 0, 0],
                    [1, 1, 1, 0, 0, 0],
                    [0, 1, 1, 1, 0, 0],
                    [0, 0, 1, 1, 1, 0],
                    [0, 0, 0, 1, 1, 1],
                    [0, 0, 0, 0, 1, 2],
                ]
            )
            / 3.0
        )
        got = moving_average_matrix(6, 3)
        assert np.max(np.abs(got - expected)) < 1e-12

    def test_matches_trend_filter(self):
        rng = np.random.default_rng(0)
        for length, k in [(6, 3), (10, 5), (8, 1), (12, 11), (9, 17)]:
            d = moving_average_matrix(length, k)
            x = rng.standard_normal(length)
            assert np.max(np.abs(d @ x - models.moving_average_trend(x, k))) < 1e-12

    def test_rows_sum_to_one(self):
        for length, k in [(6, 3), (20, 7), (5, 9)]:
            d = moving_average_matrix(length, k)
            assert np.max(np.abs(d.sum(axis=1) - 1.0)) < 1e-12

    def test_kernel_one_is_identity(self):
        assert np.array_equal(moving_average_matrix(5, 1), np.eye(5))

    def test_mean_matrix(self):
        m = mean_matrix(3, 4)
        assert m.shape == (3, 4)
        assert np.all(m == 0.25)
        x = np.array([1.0, 2.0, 3.0, 6.0])
        assert np.max(np.abs(m @ x - 3.0)) < 1e-15

    def test_last_column_matrix(self):
        m = last_column_matrix(2, 5)
        x = np.array([9.0, 8.0, 7.0, 6.0, 5.0])
        assert np.max(np.abs(m @ x - 5.0)) < 1e-15
        assert np.sum(m != 0) == 2


class TestExtractAffine:
    def test_recovers_linear_layer(self):
        rng = np.random.default_rng(1)
        w, b = rng.standard_normal((4, 7)), rng.standard_normal(4)
        m = ForecastModel(LinearLayer(w, b))
        got = extract_affine(lambda x: forward(m, x), 7)
        assert np.max(np.abs(got.weight - w)) < 1e-10
        assert np.max(np.abs(got.bias - b)) < 1e-10

    def test_dlinear_matches_direct_assembly(self):
        # independent route: B(I - D) + C D with bias c + d
        rng = np.random.default_rng(2)
        length, horizon, k = 6, 3, 3
        bw, bb = rng.standard_normal((horizon, length)), rng.standard_normal(horizon)
        cw, cb = rng.standard_normal((horizon, length)), rng.standard_normal(horizon)
        m = ForecastModel(DLinearModel(LinearLayer(bw, bb), LinearLayer(cw, cb), k))
        got = extract_affine(lambda x: forward(m, x), length)
        d = moving_average_matrix(length, k)
        want_w = bw - bw @ d + cw @ d
        assert np.max(np.abs(got.weight - want_w)) < 1e-10
        assert np.max(np.abs(got.bias - (bb + cb))) < 1e-10

    def test_nlinear_matches_direct_assembly(self):
        # last-value wrapper: B_T + A - A B_L with the last-entry matrices
        rng = np.random.default_rng(3)
        length, horizon = 8, 4
        w, b = rng.standard_normal((horizon, length)), rng.standard_normal(horizon)
        m = nlinear(LinearLayer(w, b))
        got = extract_affine(lambda x: forward(m, x), length)
        want = last_column_matrix(horizon, length) + w - w @ last_column_matrix(length, length)
        assert np.max(np.abs(got.weight - want)) < 1e-10
        assert np.max(np.abs(got.bias - b)) < 1e-10

    def test_nlinear_rows_sum_to_one(self):
        m = init_model("nlinear", 12, 5, seed=4)
        got = extract_affine(lambda x: forward(m, x), 12)
        assert np.max(np.abs(got.weight.sum(axis=1) - 1.0)) < 1e-10

    def test_rejects_nonlinear_function(self):
        with pytest.raises(NotAffineError):
            extract_affine(lambda x: x[:2] ** 2, 5)

    def test_rejects_instance_normalized_model(self):
        m = init_model("linear+in", 6, 3, seed=5)
        with pytest.raises(NotAffineError):
            extract_affine(lambda x: forward(m, x), 6)


class TestExtractAffineSigma:
    def test_instance_norm_matches_direct_assembly(self):
        # wrapped linear core collapses to B_T + A - A B_L with std-scaled bias
        rng = np.random.default_rng(6)
        length, horizon, eps = 8, 4, 1e-5
        w, c = rng.standard_normal((horizon, length)), rng.standard_normal(horizon)
        m = ForecastModel(LinearLayer(w, c), InstanceNorm(eps=eps))
        got = extract_affine_sigma(lambda x: forward(m, x), length, tol=10 * eps)
        want = mean_matrix(horizon, length) + w - w @ mean_matrix(length, length)
        assert got.sigma_coupled
        assert np.max(np.abs(got.weight - want)) < 1e-4
        assert np.max(np.abs(got.bias - c)) < 1e-4

    def test_instance_norm_exact_at_zero_eps(self):
        rng = np.random.default_rng(7)
        length, horizon = 8, 4
        w, c = rng.standard_normal((horizon, length)), rng.standard_normal(horizon)
        m = ForecastModel(LinearLayer(w, c), InstanceNorm(eps=1e-13))
        got = extract_affine_sigma(lambda x: forward(m, x), length)
        want = mean_matrix(horizon, length) + w - w @ mean_matrix(length, length)
        assert np.max(np.abs(got.weight - want)) < 1e-9
        assert np.max(np.abs(got.bias - c)) < 1e-9

    def test_revin_bias_formula(self):
        # b = beta*(1 - row sums of A) + alpha*c, checked against extraction
        rng = np.random.default_rng(8)
        length, horizon = 8, 4
        alpha, beta = 1.6, -0.7
        w, c = rng.standard_normal((horizon, length)), rng.standard_normal(horizon)
        m = ForecastModel(
            LinearLayer(w, c), models.RevIN(eps=1e-13, alpha=alpha, beta=beta)
        )
        got = extract_affine_sigma(lambda x: forward(m, x), length)
        want_b = beta * (1.0 - w.sum(axis=1)) + alpha * c
        want_w = mean_matrix(horizon, length) + w - w @ mean_matrix(length, length)
        assert np.max(np.abs(got.weight - want_w)) < 1e-8
        assert np.max(np.abs(got.bias - want_b)) < 1e-8

    def test_row_sums_are_one(self):
        for arch in ("linear+in", "rlinear", "dlinear+in", "fits+in"):
            m = init_model(arch, 8, 4, seed=9, kernel_size=3)
            got = extract_affine_sigma(lambda x: forward(m, x), 8, tol=1e-4)
            assert np.max(np.abs(got.weight.sum(axis=1) - 1.0)) < 1e-4, arch

    def test_rejects_plain_affine_with_bias(self):
        m = ForecastModel(LinearLayer(np.eye(4), np.ones(4)))
        with pytest.raises(NotAffineError):
            extract_affine_sigma(lambda x: forward(m, x), 4)


class TestAffineOfFits:
    def test_matches_native_forward(self):
        rng = np.random.default_rng(10)
        for length, horizon in [(8, 4), (16, 8), (8, 8), (6, 4)]:
            m = init_model("fits", length, horizon, seed=int(rng.integers(1 << 30)))
            form = affine_of_fits(m.core)
            for _ in range(5):
                x = rng.standard_normal(length)
                native = forward(m, x)
                assert np.max(np.abs(form.truncated.apply(x) - native)) < 1e-9

    def test_full_form_contains_truncation(self):
        m = init_model("fits", 8, 4, seed=11)
        form = affine_of_fits(m.core)
        assert form.full.weight.shape == (12, 8)
        assert form.truncated.weight.shape == (4, 8)
        assert np.array_equal(form.full.weight[8:], form.truncated.weight)
        assert np.array_equal(form.full.bias[8:], form.truncated.bias)

    def test_matches_probe_extraction(self):
        m = init_model("fits", 8, 4, seed=12)
        probed = extract_affine(lambda x: forward(m, x), 8)
        form = affine_of_fits(m.core)
        assert np.max(np.abs(form.truncated.weight - probed.weight)) < 1e-10
        assert np.max(np.abs(form.truncated.bias - probed.bias)) < 1e-10


class TestTwMatrix:
    def test_displayed_pattern_small(self):
        # horizon 2, context 4: 6 x 4 action matrix with the fixed
        # real/half/conjugate pattern
        rng = np.random.default_rng(13)
        w = rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3))
        got = tw_matrix(w, 4, 2)
        cj = np.conj
        expected = np.array(
            [
                [w[0, 0].real, w[0, 1] / 2, w[0, 2].real, cj(w[0, 1]) / 2],
                [w[1, 0], w[1, 1], w[1, 2], 0],
                [w[2, 0], w[2, 1], w[2, 2], 0],
                [w[3, 0].real, w[3, 1] / 2, w[3, 2].real, cj(w[3, 1]) / 2],
                [cj(w[2, 0]), 0, cj(w[2, 2]), cj(w[2, 1])],
                [cj(w[1, 0]), 0, cj(w[1, 2]), cj(w[1, 1])],
            ],
            dtype=complex,
        )
        assert np.max(np.abs(got - expected)) < 1e-15

    def test_action_equality_on_real_spectra(self):
        rng = np.random.default_rng(14)
        for length, horizon in [(4, 2), (8, 4), (16, 8), (8, 8)]:
            rows = (length + horizon) // 2 + 1
            cols = length // 2 + 1
            w = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
            v = tw_matrix(w, length, horizon)
            for _ in range(5):
                spectrum = linalg.dft(rng.standard_normal(length))
                direct = linalg.pi_inverse(w @ linalg.pi_project(spectrum), length + horizon)
                assert np.max(np.abs(v @ spectrum - direct)) < 1e-10

    def test_structural_zeros_exact(self):
        rng = np.random.default_rng(15)
        length, horizon = 8, 4
        w = rng.standard_normal((7, 5)) + 1j * rng.standard_normal((7, 5))
        v = tw_matrix(w, length, horizon)
        half_n, half_l = 6, 4
        for i in range(1, half_n):
            for j in range(half_l + 1, length):
                assert v[i, j] == 0.0

    def test_composition_route_matches_probing_route(self):
        # full affine weight two ways: transform-composition through the
        # action matrix vs column probing in affine_of_fits
        rng = np.random.default_rng(16)
        length, horizon = 8, 4
        n = length + horizon
        m = init_model("fits", length, horizon, seed=17)
        v = tw_matrix(m.core.weight, length, horizon)
        inv_n = np.conj(linalg.dft_matrix(n)) / n
        composed = (inv_n @ v @ linalg.dft_matrix(length)) * (n / length)
        assert np.max(np.abs(composed.imag)) < 1e-9
        form = affine_of_fits(m.core)
        assert np.max(np.abs(composed.real - form.full.weight)) < 1e-9


class TestFitsOfAffine:
    def test_round_trip_various_sizes(self):
        rng = np.random.default_rng(18)
        for length, horizon in [(8, 4), (16, 8), (8, 8), (6, 8)]:
            target = AffineModel(
                rng.standard_normal((horizon, length)), rng.standard_normal(horizon)
            )
            core = fits_of_affine(target, length, horizon)
            back = affine_of_fits(core).truncated
            assert np.max(np.abs(back.weight - target.weight)) < 1e-6, (length, horizon)
            assert np.max(np.abs(back.bias - target.bias)) < 1e-6

    def test_boundary_size_works(self):
        # context exactly horizon - 2 is the smallest expressible setting
        rng = np.random.default_rng(19)
        target = AffineModel(rng.standard_normal((8, 6)), rng.standard_normal(8))
        core = fits_of_affine(target, 6, 8)
        back = affine_of_fits(core).truncated
        assert np.max(np.abs(back.weight - target.weight)) < 1e-6

    def test_forward_agreement(self):
        rng = np.random.default_rng(20)
        target = AffineModel(rng.standard_normal((4, 8)), rng.standard_normal(4))
        core = fits_of_affine(target, 8, 4)
        m = ForecastModel(core)
        for _ in range(5):
            x = rng.standard_normal(8)
            assert np.max(np.abs(forward(m, x) - target.apply(x))) < 1e-6

    def test_too_short_context_rejected(self):
        rng = np.random.default_rng(21)
        target = AffineModel(rng.standard_normal((8, 2)), rng.standard_normal(8))
        with pytest.raises(ExpressivityError):
            fits_of_affine(target, 2, 8)

    def test_sigma_target_rejected(self):
        t = AffineModel(np.ones((4, 8)) / 8, np.zeros(4), sigma_coupled=True)
        with pytest.raises(NotAffineError):
            fits_of_affine(t, 8, 4)


class TestBiasOperator:
    def test_shape_and_inert_columns(self):
        length, horizon = 8, 4
        n = length + horizon
        m = fits_bias_operator(length, horizon)
        assert m.shape == (n, n + 2)
        half = n // 2 + 1
        assert np.all(m[:, half] == 0.0)  # imag part of component 0
        assert np.all(m[:, half + n // 2] == 0.0)  # imag part of the middle component

    def test_consistency_with_affine_form(self):
        rng = np.random.default_rng(22)
        for length, horizon in [(8, 4), (16, 8)]:
            m = init_model("fits", length, horizon, seed=int(rng.integers(1 << 30)))
            op = fits_bias_operator(length, horizon)
            want = affine_of_fits(m.core).full.bias
            got = op @ stack_complex(m.core.bias)
            assert np.max(np.abs(got - want)) < 1e-10

    def test_unscaled_spectrum_bounds(self):
        for n in [12, 24, 120, 816]:
            m = irft_real_matrix(n)
            svals = np.linalg.svd(m, compute_uv=False)
            assert 1 / np.sqrt(n) <= svals[0] <= 2 / np.sqrt(n)
            gram_norm = float(np.linalg.norm(m @ m.T, 2))
            assert gram_norm <= 4.0 / n

    def test_column_norms(self):
        n = 24
        m = irft_real_matrix(n)
        norms = np.linalg.norm(m, axis=0)
        assert np.max(norms) <= np.sqrt(2.0 / n) + 1e-12


class TestCosine:
    def test_known_values(self):
        a = np.array([[1.0, 0.0], [0.0, 0.0]])
        b = np.array([[0.0, 1.0], [0.0, 0.0]])
        assert abs(cosine_similarity(a, a) - 1.0) < 1e-12
        assert abs(cosine_similarity(a, b)) < 1e-12
        assert abs(cosine_similarity(a, -a) + 1.0) < 1e-12

    def test_scale_invariance(self):
        rng = np.random.default_rng(23)
        a, b = rng.standard_normal((3, 4)), rng.standard_normal((3, 4))
        assert abs(cosine_similarity(a, b) - cosine_similarity(5 * a, 0.1 * b)) < 1e-12

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            cosine_similarity(np.zeros((2, 2)), np.ones((2, 2)))

    def test_shape_mismatch_rejected(self):
        with pytest.raises(UnsupportedShapeError):
            cosine_similarity(np.ones((2, 2)), np.ones((2, 3)))

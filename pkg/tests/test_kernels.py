"""Spline kernels, ANOVA term structure, and matrix assembly."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hbspline import (
    AnovaSpec,
    assemble_matrices,
    bernoulli_k,
    dataset_from_unit_cube,
    default_spec,
    gram_matrix,
    kernel_full,
    kernel_main,
    kernel_term,
    null_space_eval,
    rescale_term_weights,
)
from hbspline.errors import InvalidConfigError, InvalidInputError

unit_floats = st.floats(min_value=0.0, max_value=1.0)


class TestBernoulliK:
    def test_frozen_values(self):
        assert bernoulli_k(1, 0.5) == 0.0
        assert abs(bernoulli_k(2, 0.0) - 1.0 / 12.0) < 1e-15
        assert abs(bernoulli_k(4, 0.0) - (-1.0 / 720.0)) < 1e-15

    def test_endpoint_symmetry(self):
        # All three polynomials are symmetric about t = 1/2.
        for level in (1, 2, 4):
            left = bernoulli_k(level, 0.1)
            right = bernoulli_k(level, 0.9)
            sign = -1.0 if level == 1 else 1.0
            assert abs(left - sign * right) < 1e-15

    def test_vectorized(self):
        t = np.linspace(0, 1, 11)
        assert np.allclose(bernoulli_k(1, t), t - 0.5)

    def test_rejects_out_of_range_and_bad_level(self):
        with pytest.raises(InvalidInputError):
            bernoulli_k(2, 1.5)
        with pytest.raises(InvalidInputError):
            bernoulli_k(3, 0.5)

    @given(unit_floats)
    def test_closed_forms(self, t):
        k1 = t - 0.5
        assert abs(bernoulli_k(2, t) - (k1**2 - 1 / 12) / 2) < 1e-15
        assert abs(bernoulli_k(4, t) - (k1**4 - k1**2 / 2 + 7 / 240) / 24) < 1e-15


class TestKernelMain:
    def test_frozen_origin_value(self):
        assert abs(kernel_main(0.0, 0.0) - 1.0 / 120.0) < 1e-15

    def test_symmetry(self, rng):
        s = rng.random(10_000)
        t = rng.random(10_000)
        assert np.array_equal(kernel_main(s, t), kernel_main(t, s))

    def test_gram_positive_semidefinite(self, rng):
        pts = rng.random(20)
        G = kernel_main(pts[:, None], pts[None, :])
        eigs = np.linalg.eigvalsh(G)
        assert eigs.min() >= -1e-10 * np.trace(G)

    def test_rejects_out_of_range(self):
        with pytest.raises(InvalidInputError):
            kernel_main(1.1, 0.5)


class TestAnovaSpec:
    def test_term_bookkeeping(self):
        spec = AnovaSpec(d=3, main_effects=(0, 1, 2), interactions=((0, 1), (1, 2)))
        assert spec.m == 4
        assert spec.n_terms == 5
        assert spec.terms() == [
            ("main", 0),
            ("main", 1),
            ("main", 2),
            ("inter", (0, 1)),
            ("inter", (1, 2)),
        ]
        assert spec.term_names() == ["x0", "x1", "x2", "x0:x1", "x1:x2"]
        assert spec.term_scales == (1.0,) * 5

    def test_default_spec_shapes(self):
        spec = default_spec(3)
        assert spec.main_effects == (0, 1, 2)
        assert spec.interactions == ((0, 1), (0, 2), (1, 2))
        assert default_spec(3, with_interactions=False).interactions == ()
        assert default_spec(1).interactions == ()

    def test_additive_model_null_space_dimension(self):
        assert default_spec(7, with_interactions=False).m == 8

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(d=2, main_effects=(0, 0)),
            dict(d=2, main_effects=(0, 2)),
            dict(d=2, main_effects=(0, 1), interactions=((1, 0),)),
            dict(d=3, main_effects=(0, 1), interactions=((0, 2),)),
            dict(d=2, main_effects=(0, 1), interactions=((0, 1), (0, 1))),
            dict(d=2, main_effects=(0, 1), term_scales=(1.0,)),
            dict(d=2, main_effects=(0, 1), term_scales=(1.0, -1.0)),
        ],
    )
    def test_rejects_inconsistent_specs(self, kwargs):
        with pytest.raises(InvalidConfigError):
            AnovaSpec(**kwargs)


class TestKernelTerm:
    def test_single_main_reduces_to_r1(self):
        x = np.zeros(3)
        val = kernel_term(x, x, ("main", 0))
        assert abs(val - 1.0 / 120.0) < 1e-15

    def test_interaction_symmetries(self, rng):
        x = rng.random(4)
        z = rng.random(4)
        v_xz = kernel_term(x, z, ("inter", (1, 3)))
        v_zx = kernel_term(z, x, ("inter", (1, 3)))
        assert abs(v_xz - v_zx) < 1e-15
        # Swapping the pair members leaves the sum of products intact.
        spec_a = AnovaSpec(d=4, main_effects=(1, 3), interactions=((1, 3),))
        assert abs(kernel_full(x, z, spec_a) - kernel_full(z, x, spec_a)) < 1e-15

    def test_theta_scales_linearly(self, rng):
        x, z = rng.random(2), rng.random(2)
        base = kernel_term(x, z, ("main", 1))
        assert abs(kernel_term(x, z, ("main", 1), theta=2.5) - 2.5 * base) < 1e-15

    def test_full_kernel_gram_psd(self, rng):
        pts = rng.random((30, 2))
        spec = default_spec(2)
        G = gram_matrix(pts, pts, spec)
        eigs = np.linalg.eigvalsh(G)
        assert eigs.min() >= -1e-10 * np.trace(G)

    def test_full_kernel_sums_terms(self, rng):
        x, z = rng.random(3), rng.random(3)
        spec = AnovaSpec(
            d=3,
            main_effects=(0, 1, 2),
            interactions=((0, 2),),
            term_scales=(1.0, 2.0, 3.0, 4.0),
        )
        total = sum(
            theta * kernel_term(x, z, term)
            for theta, term in zip(spec.term_scales, spec.terms())
        )
        assert abs(kernel_full(x, z, spec) - total) < 1e-14


class TestNullSpaceEval:
    def test_center_point_hits_constant_only(self):
        spec = default_spec(3)
        row = null_space_eval(np.full(3, 0.5), spec)
        assert np.array_equal(row, [1.0, 0.0, 0.0, 0.0])

    def test_linear_scores_in_spec_order(self):
        spec = AnovaSpec(d=3, main_effects=(2, 0))
        row = null_space_eval(np.array([0.2, 0.5, 0.9]), spec)
        assert np.allclose(row, [1.0, 0.4, -0.3])

    def test_matrix_form(self, rng):
        spec = default_spec(2)
        X = rng.random((6, 2))
        S = null_space_eval(X, spec)
        assert S.shape == (6, 3)
        assert np.allclose(S[:, 0], 1.0)
        assert np.allclose(S[:, 1], X[:, 0] - 0.5)

    def test_rejects_wrong_width(self):
        with pytest.raises(InvalidInputError):
            null_space_eval(np.zeros(3), default_spec(2))


class TestRescaleTermWeights:
    def test_average_diagonal_becomes_one(self, banana_data):
        data = banana_data(n=300, seed=1)
        spec = default_spec(2)
        scaled = rescale_term_weights(data, spec)
        for theta, (kind, ref) in zip(scaled.term_scales, scaled.terms()):
            G = kernel_term(data.X, data.X, (kind, ref), theta=theta)
            assert abs(np.trace(G) / data.n - 1.0) < 1e-12

    def test_idempotent_and_ignores_incoming_scales(self, uniform_data):
        data = uniform_data(n=100)
        spec = default_spec(2)
        once = rescale_term_weights(data, spec)
        twice = rescale_term_weights(data, once)
        assert once.term_scales == twice.term_scales
        inflated = AnovaSpec(
            d=2,
            main_effects=(0, 1),
            interactions=((0, 1),),
            term_scales=(10.0, 20.0, 30.0),
        )
        assert rescale_term_weights(data, inflated).term_scales == once.term_scales

    def test_uses_basis_points_when_given(self, uniform_data, rng):
        data = uniform_data(n=200)
        basis = rng.random((30, 2))
        spec = rescale_term_weights(data, default_spec(2), basis_points=basis)
        for theta, (kind, ref) in zip(spec.term_scales, spec.terms()):
            G = kernel_term(basis, basis, (kind, ref), theta=theta)
            assert abs(np.trace(G) / 30 - 1.0) < 1e-12

    def test_finite_positive_on_generated_data(self, uniform_data):
        data = uniform_data(n=60)
        spec = rescale_term_weights(data, default_spec(2), data.X[:30])
        assert all(np.isfinite(s) and s > 0 for s in spec.term_scales)

    def test_zero_trace_named(self, uniform_data, monkeypatch):
        # The cubic-spline diagonal is strictly positive, so force the
        # degenerate branch to check the error names the term.
        import hbspline.kernels as kernels

        monkeypatch.setattr(
            kernels, "_term_diag", lambda X, kind, ref: np.zeros(X.shape[0])
        )
        with pytest.raises(InvalidConfigError, match="x0"):
            rescale_term_weights(uniform_data(n=20), default_spec(2))


class TestAssembleMatrices:
    def _selection(self, data, idx):
        from hbspline import BasisSelection

        idx = np.asarray(idx, dtype=np.int64)
        return BasisSelection(
            indices=idx,
            bin_weight=np.full(idx.size, 1.0 / idx.size),
            nonempty_bins=idx.size,
            method="ubs",
            seed=0,
        )

    def test_full_selection_gives_square_kernel_matrix(self, uniform_data):
        data = uniform_data(n=30)
        spec = default_spec(2)
        sel = self._selection(data, np.arange(30))
        S, Rstar, Rss = assemble_matrices(data, sel, spec)
        assert S.shape == (30, spec.m)
        assert Rstar.shape == (30, 30)
        assert np.array_equal(Rstar, Rss)
        assert np.allclose(Rss, Rss.T)

    def test_selected_rows_bitwise_consistent(self, uniform_data):
        data = uniform_data(n=50)
        spec = default_spec(2)
        idx = np.array([3, 11, 19, 26, 40, 44, 45, 46, 47, 48])
        sel = self._selection(data, idx)
        S, Rstar, Rss = assemble_matrices(data, sel, spec)
        assert np.array_equal(Rstar[idx], Rss)

    def test_assembled_matrices_finite_and_psd(self, uniform_data):
        data = uniform_data(n=50)
        spec = rescale_term_weights(data, default_spec(2))
        sel = self._selection(data, np.arange(0, 50, 5))
        S, Rstar, Rss = assemble_matrices(data, sel, spec)
        assert np.all(np.isfinite(S))
        assert np.all(np.isfinite(Rstar))
        eigs = np.linalg.eigvalsh(Rss)
        assert eigs.min() >= -1e-10 * np.trace(Rss)

    def test_rejects_out_of_range_selection(self, uniform_data):
        data = uniform_data(n=20)
        sel = self._selection(data, [0, 25])
        with pytest.raises(InvalidInputError):
            assemble_matrices(data, sel, default_spec(2))


class TestNullSpaceExactness:
    def test_parametric_surface_fits_with_zero_residual(self, rng):
        # y lies in the unpenalized span, so any smoothing level must
        # reproduce it exactly with no kernel contribution.
        from hbspline import SelectionConfig, solve_coefficients, ubs_select

        X = rng.random((80, 2))
        y = 2.0 + 3.0 * (X[:, 0] - 0.5)
        data = dataset_from_unit_cube(X, y)
        spec = default_spec(2)
        sel = ubs_select(data, SelectionConfig(q=15, method="ubs", seed=3))
        S, Rstar, Rss = assemble_matrices(data, sel, spec)
        for lam in (1e-8, 1e-3, 10.0):
            alpha, beta = solve_coefficients(S, Rstar, Rss, y, lam)
            assert np.allclose(alpha, [2.0, 3.0, 0.0], atol=1e-8)
            assert np.max(np.abs(beta)) < 1e-8
            assert np.max(np.abs(y - S @ alpha - Rstar @ beta)) < 1e-8

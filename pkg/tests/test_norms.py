import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finsler_liouville.errors import DomainError, InvalidInput, InvalidModel, InvalidParameter
from finsler_liouville.norms import (NormModel, estimate_bounds, eval_gradient, eval_norm,
                                     load_norm_config, polar, polar_numeric, reverse,
                                     verify_norm_properties)

SHIFT = NormModel.shifted([0.5, 0.0])
LP4 = NormModel.lp(4, 2)
EUC = NormModel.euclidean(2)

ALL_2D = [EUC, LP4, NormModel.lp(1.5, 2), NormModel.quadratic([[2.0, 0.3], [0.3, 1.0]]),
          NormModel.shifted([0.25, 0.0]), SHIFT]
ALL_3D = [NormModel.euclidean(3), NormModel.lp(4, 3),
          NormModel.quadratic(np.diag([1.0, 2.0, 3.0])), NormModel.shifted([0.2, 0.1, -0.3])]


class TestEvaluation:
    def test_reference_values(self):
        assert eval_norm(EUC, [3, 4]) == pytest.approx(5.0, abs=1e-15)
        assert eval_norm(SHIFT, [1, 0]) == pytest.approx(1.5, abs=1e-15)
        assert eval_norm(SHIFT, [-1, 0]) == pytest.approx(0.5, abs=1e-15)
        assert eval_norm(LP4, [1, 1]) == pytest.approx(2 ** 0.25, rel=1e-15)

    def test_zero_and_nonfinite(self):
        assert eval_norm(SHIFT, [0, 0]) == 0.0
        with pytest.raises(InvalidInput):
            eval_norm(EUC, [np.nan, 1])
        with pytest.raises(InvalidInput):
            eval_norm(EUC, [1, 2, 3])

    def test_gradient_reference_values(self):
        np.testing.assert_allclose(eval_gradient(EUC, [3, 4]), [0.6, 0.8], atol=1e-15)
        np.testing.assert_allclose(eval_gradient(SHIFT, [0, 1]), [0.5, 1.0], atol=1e-15)
        np.testing.assert_allclose(eval_gradient(LP4, [1, 1]), [2 ** -0.75] * 2, rtol=1e-14)

    def test_gradient_at_origin_is_domain_error(self):
        with pytest.raises(DomainError):
            eval_gradient(EUC, [0.0, 0.0])
        with pytest.raises(DomainError):
            eval_gradient(EUC, [1e-13, 0.0])

    @pytest.mark.parametrize("model", ALL_2D + ALL_3D, ids=lambda m: m.family)
    def test_gradient_matches_central_differences(self, model):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((50, model.dimension))
        h = 1e-6
        fd = np.stack([(model.value(x + h * e) - model.value(x - h * e)) / (2 * h)
                       for e in np.eye(model.dimension)], axis=-1)
        np.testing.assert_allclose(model.gradient(x), fd, rtol=1e-5, atol=1e-8)

    @pytest.mark.parametrize("model", ALL_2D + ALL_3D, ids=lambda m: m.family)
    def test_homogeneity(self, model):
        rng = np.random.default_rng(7)
        x = rng.standard_normal((100, model.dimension))
        t = rng.uniform(0, 10, 100) + 1e-3
        lhs = model.value(t[:, None] * x)
        rhs = t * model.value(x)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12)


class TestPolar:
    def test_reference_values(self):
        assert polar(EUC, [3, 4]) == pytest.approx(5.0, abs=1e-15)
        assert polar(LP4, [1, 1]) == pytest.approx(2 ** 0.75, rel=1e-15)
        assert polar(SHIFT, [1, 0]) == pytest.approx(2 / 3, rel=1e-15)
        assert polar(SHIFT, [-1, 0]) == pytest.approx(2.0, rel=1e-15)

    def test_shifted_closed_form_against_dense_grid(self):
        # brute force over a 1e5-point angular grid
        th = 2 * np.pi * np.arange(100_000) / 100_000
        xi = np.stack((np.cos(th), np.sin(th)), axis=-1)
        for x in ([1, 0], [-1, 0], [0.3, -2.0]):
            brute = np.max(xi @ np.asarray(x, float) / SHIFT.value(xi))
            assert polar(SHIFT, x) == pytest.approx(brute, rel=1e-9)

    @pytest.mark.parametrize("model", ALL_2D + ALL_3D[:2] + ALL_3D[3:], ids=lambda m: m.family)
    def test_numeric_fallback_agrees(self, model):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((20, model.dimension))
        np.testing.assert_allclose(polar(model, x, method="numeric"), model.polar(x),
                                   rtol=1e-9)

    def test_shifted_polar_ball_is_translated_unit_ball(self):
        model = NormModel.shifted([0.3, -0.4])
        rng = np.random.default_rng(2)
        x = rng.standard_normal((200, 2)) * 5
        y = x / model.polar(x)[:, None] - model.shift
        np.testing.assert_allclose(np.linalg.norm(y, axis=1), 1.0, atol=1e-10)

    @pytest.mark.parametrize("model", ALL_2D, ids=lambda m: m.family)
    def test_duality_pairing(self, model):
        rng = np.random.default_rng(5)
        x = rng.standard_normal((400, 2))
        xi = rng.standard_normal((400, 2))
        lhs = np.sum(x * xi, axis=1)
        assert np.all(lhs <= model.polar(x) * model.value(xi) * (1 + 1e-12))

    def test_unknown_method(self):
        with pytest.raises(InvalidParameter):
            polar(EUC, [1, 0], method="magic")

    def test_polar_of_zero(self):
        assert polar(SHIFT, [0, 0]) == 0.0
        assert polar_numeric(EUC.value, np.zeros(2)) == 0.0


class TestReverse:
    def test_shifted_flips_sign(self):
        r = reverse(SHIFT)
        assert r.family == "shifted"
        np.testing.assert_array_equal(r.shift, [-0.5, 0.0])

    @pytest.mark.parametrize("model", ALL_2D + ALL_3D, ids=lambda m: m.family)
    def test_involution_is_exact(self, model):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((100, model.dimension))
        np.testing.assert_array_equal(reverse(reverse(model)).value(x), model.value(x))
        assert reverse(reverse(model)) == model

    @pytest.mark.parametrize("model", [EUC, LP4, ALL_2D[3]], ids=lambda m: m.family)
    def test_symmetric_families_unchanged(self, model):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((100, 2))
        np.testing.assert_array_equal(reverse(model).value(x), model.value(x))

    def test_hat_pair(self):
        x = np.array([0.7, -0.2])
        assert SHIFT.hat(x) == SHIFT.value(-x)
        assert SHIFT.hat_polar(x) == SHIFT.polar(-x)


class TestBounds:
    def test_euclidean(self):
        a, e = estimate_bounds(EUC)
        assert a == pytest.approx(1.0, abs=1e-12) and e == pytest.approx(1.0, abs=1e-12)

    def test_shifted(self):
        a, e = estimate_bounds(SHIFT)
        assert a == pytest.approx(0.5, abs=1e-10)
        assert e == pytest.approx(1.5, abs=1e-10)

    def test_lp4(self):
        a, e = estimate_bounds(LP4)
        assert a == pytest.approx(2 ** -0.25, abs=1e-10)
        assert e == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("model", ALL_2D + ALL_3D, ids=lambda m: m.family)
    def test_matches_closed_form(self, model):
        a, e = estimate_bounds(model)
        assert a == pytest.approx(model.alpha, rel=1e-6)
        assert e == pytest.approx(model.eta, rel=1e-6)

    def test_too_few_samples(self):
        with pytest.raises(InvalidParameter):
            estimate_bounds(EUC, samples=3)


class TestConstruction:
    def test_shift_too_large(self):
        with pytest.raises(InvalidModel):
            NormModel.shifted([1.0, 0.0])

    def test_bad_lp(self):
        with pytest.raises(InvalidModel):
            NormModel.lp(1.0, 2)

    def test_indefinite_matrix(self):
        with pytest.raises(InvalidModel):
            NormModel.quadratic([[1.0, 2.0], [2.0, 1.0]])

    def test_asymmetric_matrix(self):
        with pytest.raises(InvalidModel):
            NormModel.quadratic([[1.0, 0.5], [0.0, 1.0]])

    def test_unknown_family(self):
        with pytest.raises(InvalidModel):
            NormModel("l1", 2)

    def test_dimension(self):
        with pytest.raises(InvalidModel):
            NormModel.euclidean(1)

    def test_config_file(self, tmp_path):
        p = tmp_path / "n.yaml"
        p.write_text("family: quadratic\ndimension: 2\nmatrix: [2, 0.3, 0.3, 1]\n")
        m = load_norm_config(p)
        np.testing.assert_array_equal(m.matrix, [[2, 0.3], [0.3, 1]])
        p.write_text("family: shifted\na: [0.25, 0]\n")
        assert load_norm_config(p) == NormModel.shifted([0.25, 0])
        p.write_text("family: lp\np: 4\ndimension: 3\n")
        assert load_norm_config(p) == NormModel.lp(4, 3)

    def test_config_errors(self, tmp_path):
        p = tmp_path / "n.yaml"
        p.write_text("family: lp\n")
        with pytest.raises(InvalidInput):
            load_norm_config(p)
        p.write_text("[unclosed")
        with pytest.raises(InvalidInput):
            load_norm_config(p)
        with pytest.raises(InvalidInput):
            load_norm_config(tmp_path / "missing.yaml")

    def test_kappa_closed_forms(self):
        assert EUC.kappa == pytest.approx(math.pi)
        assert NormModel.euclidean(3).kappa == pytest.approx(4 * math.pi / 3)
        assert SHIFT.kappa == pytest.approx(math.pi)
        # |{x : |x|_{4/3} <= 1}| frozen from the Gamma-function formula
        assert LP4.kappa == pytest.approx(2.541639254381936, rel=1e-14)
        assert NormModel.lp(4, 3).kappa == pytest.approx(2.436192202286694, rel=1e-14)


class TestPropertySuite:
    @pytest.mark.parametrize("model", ALL_2D + ALL_3D, ids=lambda m: f"{m.family}{m.dimension}")
    def test_all_properties_pass(self, model):
        rep = verify_norm_properties(model, samples=1000, tol=1e-6)
        assert rep.passed, rep.details["failed"]
        assert rep.details["properties"]["polar_involution"]["max_violation"] < 1e-6

    def test_euler_example(self):
        x = np.array([3.0, 4.0])
        assert np.dot(x, EUC.gradient(x)) == pytest.approx(5.0)

    def test_shifted_unit_gradient(self):
        rep = verify_norm_properties(SHIFT, samples=1000)
        assert rep.details["properties"]["iv_unit_gradients"]["max_violation"] < 1e-6

    def test_literal_triangle_reported_for_non_symmetric(self):
        rep = verify_norm_properties(SHIFT, samples=1000)
        lit = rep.details["properties"]["i_triangle_literal"]
        assert lit["max_violation"] > 0 and lit["pass"]

    def test_measured_gradient_constant(self):
        rep = verify_norm_properties(SHIFT, samples=1000)
        c = rep.details["properties"]["ii_gradient_bounds"]["measured_C"]
        assert 1 <= c <= 2.0

    def test_bad_tol(self):
        with pytest.raises(InvalidParameter):
            verify_norm_properties(EUC, tol=0)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.9, 0.9), st.floats(-0.9, 0.9),
       st.lists(st.floats(-50, 50, allow_nan=False), min_size=2, max_size=2))
def test_shifted_polar_gradient_lies_on_unit_sphere(a1, a2, x):
    a = np.array([a1, a2])
    if np.linalg.norm(a) >= 0.95 or np.linalg.norm(x) < 1e-6:
        return
    m = NormModel.shifted(a)
    g = m.polar_gradient(np.asarray(x))
    assert m.value(g) == pytest.approx(1.0, abs=1e-9)

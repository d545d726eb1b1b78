import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coneiter import (ConeBpSpace, ConeValue, builtin_r2_matrix,
                      builtin_scalar_p, check_axioms, scalarize)

finite_floats = st.floats(min_value=-100.0, max_value=100.0,
                          allow_nan=False, allow_infinity=False)


class TestScalarize:
    def test_scalar_half_power(self):
        space = builtin_scalar_p(0.5)
        assert scalarize(space, 4.0, 0.0) == pytest.approx(2.0, abs=1e-12)

    def test_zero_at_equal_points(self):
        for space in (builtin_scalar_p(0.5), builtin_r2_matrix(np.eye(2))):
            x = np.ones(space.dim) * 0.7
            assert scalarize(space, x, x) == 0.0

    def test_r2_identity_matrix(self):
        space = builtin_r2_matrix(np.eye(2))
        # D((3,4)) = (5, 5), Euclidean norm 5*sqrt(2)
        assert scalarize(space, (3.0, 4.0), (0.0, 0.0)) == pytest.approx(
            7.0710678118654755, rel=1e-12)

    def test_symmetry(self):
        space = builtin_scalar_p(0.5)
        assert scalarize(space, 1.3, -0.4) == scalarize(space, -0.4, 1.3)

    def test_dimension_mismatch(self):
        space = builtin_r2_matrix(np.eye(2))
        with pytest.raises(ValueError, match="dimension"):
            scalarize(space, (1.0, 2.0, 3.0), (0.0, 0.0))


class TestBuiltinScalarP:
    def test_p_one_is_absolute_value(self):
        space = builtin_scalar_p(1.0)
        assert space.D(-3.0).components == (3.0,)

    def test_direct_evaluation(self):
        space = builtin_scalar_p(0.5)
        assert space.D(0.25).components[0] == pytest.approx(0.5, abs=1e-12)

    def test_subadditivity_confirms_b_one(self):
        space = builtin_scalar_p(0.5)
        lhs = space.D(2.0).norm          # D(1 + 1) = sqrt(2)
        rhs = space.D(1.0).norm + space.D(1.0).norm
        assert lhs == pytest.approx(math.sqrt(2.0), abs=1e-12)
        assert lhs <= rhs
        assert space.b == 1.0 and space.kappa == 1.0

    @pytest.mark.parametrize("p", [0.0, -0.3, 1.2, 2.0])
    def test_p_out_of_range(self, p):
        with pytest.raises(ValueError):
            builtin_scalar_p(p)


class TestBuiltinR2Matrix:
    def test_zero_matrix(self):
        space = builtin_r2_matrix([[0.0, 0.0], [0.0, 0.0]])
        assert space.D((1.0, 0.0)).components == pytest.approx((1.0, 0.0))

    def test_identity(self):
        space = builtin_r2_matrix(np.eye(2))
        r2 = math.sqrt(2.0)
        assert space.D((1.0, 1.0)).components == pytest.approx((r2, r2))

    def test_diagonal(self):
        space = builtin_r2_matrix([[2.0, 0.0], [0.0, 1.0]])
        assert space.D((1.0, 1.0)).components == pytest.approx(
            (math.sqrt(2.0), math.sqrt(5.0)))

    def test_rejects_bad_matrices(self):
        with pytest.raises(ValueError):
            builtin_r2_matrix([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
        with pytest.raises(ValueError):
            builtin_r2_matrix([[np.inf, 0.0], [0.0, 1.0]])


class TestConeValue:
    def test_rejects_negative_components(self):
        with pytest.raises(ValueError):
            ConeValue((1.0, -0.1))

    def test_partial_order(self):
        assert ConeValue((1.0, 2.0)).leq(ConeValue((1.0, 2.5)))
        assert not ConeValue((1.0, 3.0)).leq(ConeValue((1.0, 2.5)))

    def test_monotone_ambient_norm_gives_kappa_one(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            u = np.abs(rng.normal(size=3))
            v = u + np.abs(rng.normal(size=3))
            assert ConeValue(tuple(u)).leq(ConeValue(tuple(v)))
            assert np.linalg.norm(u) <= np.linalg.norm(v) + 1e-15


class TestVectorArithmetic:
    def test_commutative_associative(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            a, b, c = rng.uniform(-10, 10, size=(3, 2))
            assert np.allclose(a + b, b + a, rtol=1e-12)
            assert np.allclose((a + b) + c, a + (b + c), rtol=1e-12)

    def test_scaling_identities(self):
        v = np.array([1.5, -2.5])
        assert np.array_equal(1.0 * v, v)
        assert np.array_equal(0.0 * v, np.zeros(2))


class TestTranslationInvariance:
    @pytest.mark.parametrize("p", [0.3, 0.5, 1.0])
    def test_scalar_space(self, p):
        space = builtin_scalar_p(p)
        rng = np.random.default_rng(23)
        for _ in range(500):
            x, y, z = rng.uniform(-10, 10, size=3)
            d1 = scalarize(space, x + z, y + z)
            d2 = scalarize(space, x, y)
            assert abs(d1 - d2) <= 1e-12 * (1.0 + d2)

    def test_r2_space(self):
        space = builtin_r2_matrix([[2.0, 1.0], [0.0, 1.0]])
        rng = np.random.default_rng(29)
        for _ in range(500):
            x, y, z = rng.uniform(-10, 10, size=(3, 2))
            d1 = scalarize(space, x + z, y + z)
            d2 = scalarize(space, x, y)
            assert abs(d1 - d2) <= 1e-12 * (1.0 + d2)


class TestCheckAxioms:
    @pytest.mark.parametrize("p", [0.3, 0.5, 1.0])
    def test_scalar_spaces_pass(self, p):
        report = check_axioms(builtin_scalar_p(p), 2000, seed=7)
        assert report.passed, report.to_json()
        assert [c.axiom for c in report.checks] == ["i", "ii", "iii", "iv"]

    def test_r2_spaces_pass(self):
        rng = np.random.default_rng(99)
        for _ in range(3):
            space = builtin_r2_matrix(rng.uniform(-3, 3, size=(2, 2)))
            report = check_axioms(space, 2000, seed=11)
            assert report.passed, report.to_json()

    def test_broken_space_reported_at_zero(self):
        def bad_norm(x):
            return np.abs(x) - 1.0

        broken = ConeBpSpace(name="broken", dim=1, cone_dim=1,
                             cone_norm=bad_norm, b=1.0, p=1.0, kappa=1.0)
        report = check_axioms(broken, 500, seed=3)
        first = report.checks[0]
        assert first.axiom == "i"
        assert first.failures >= 1
        assert first.worst["inputs"]["x"] == [0.0]
        assert first.worst["violation"] == pytest.approx(1.0)

    def test_deterministic_given_seed(self):
        a = check_axioms(builtin_scalar_p(0.5), 1000, seed=42).to_json()
        b = check_axioms(builtin_scalar_p(0.5), 1000, seed=42).to_json()
        assert a == b

    def test_sample_count_validation(self):
        with pytest.raises(ValueError):
            check_axioms(builtin_scalar_p(0.5), 0, seed=1)

    def test_report_json_shape(self):
        report = check_axioms(builtin_scalar_p(1.0), 100, seed=0)
        data = json.loads(report.to_json())
        assert data["schema_version"] == "1"
        for entry in data["axioms"]:
            assert set(entry) == {"axiom", "samples", "failures", "worst"}


class TestAxiomProperties:
    @settings(max_examples=100, deadline=None)
    @given(x=finite_floats, y=finite_floats,
           p=st.sampled_from([0.3, 0.5, 1.0]))
    def test_scalarized_triangle(self, x, y, p):
        space = builtin_scalar_p(p)
        lhs = space.D(x + y).norm
        rhs = space.kappa * space.b * (space.D(x).norm + space.D(y).norm)
        assert lhs <= rhs + 1e-9

    @settings(max_examples=100, deadline=None)
    @given(x=finite_floats,
           tau=st.floats(min_value=0.0, max_value=50.0),
           p=st.sampled_from([0.3, 0.5, 1.0]))
    def test_homogeneity(self, x, tau, p):
        space = builtin_scalar_p(p)
        got = space.D(tau * x).norm
        expected = tau ** p * space.D(x).norm
        assert abs(got - expected) <= 1e-9 * (1.0 + expected)

    @settings(max_examples=100, deadline=None)
    @given(x=st.tuples(finite_floats, finite_floats),
           y=st.tuples(finite_floats, finite_floats))
    def test_r2_cone_order_triangle(self, x, y):
        space = builtin_r2_matrix([[1.0, 2.0], [0.0, 1.0]])
        dxy = np.asarray(space.cone_norm(np.asarray(x) + np.asarray(y)))
        bound = space.b * (np.asarray(space.cone_norm(np.asarray(x, float)))
                           + np.asarray(space.cone_norm(np.asarray(y, float))))
        assert np.all(dxy <= bound + 1e-9)

"""Tests for cone arithmetic used inside the interior-point iteration."""

import numpy as np
import pytest

from mopul_sdp.linalg import smat, svec
from mopul_sdp.models.conic import NonnegCone, PsdCone, SecondOrderCone, ZeroCone
from mopul_sdp.services.cones import Orthant, SecondOrder, Semidefinite, block_margin, cone_ops


def _random_psd(rng, side):
    g = rng.standard_normal((side, side))
    return svec(g @ g.T + side * np.eye(side))


def _random_soc(rng, dim):
    tail = rng.standard_normal(dim - 1)
    return np.concatenate([[np.linalg.norm(tail) + 1.0], tail])


class TestIdentity:
    @pytest.mark.parametrize("cone", [Orthant(3), SecondOrder(4), Semidefinite(3)])
    def test_identity_is_product_unit(self, cone, rng):
        v = rng.standard_normal(cone.dim)
        np.testing.assert_allclose(cone.product(cone.identity(), v), v, atol=1e-12)

    def test_degrees(self):
        assert Orthant(5).degree == 5
        assert SecondOrder(5).degree == 1
        assert Semidefinite(3).degree == 3


class TestDivision:
    def test_soc_divide_inverts_product(self, rng):
        cone = SecondOrder(4)
        lam = _random_soc(rng, 4)
        v = rng.standard_normal(4)
        np.testing.assert_allclose(cone.product(lam, cone.divide(lam, v)), v, atol=1e-10)

    def test_psd_divide_with_diagonal_lambda(self, rng):
        cone = Semidefinite(3)
        lam = svec(np.diag([1.0, 2.0, 3.0]))
        v = rng.standard_normal(cone.dim)
        np.testing.assert_allclose(cone.product(lam, cone.divide(lam, v)), v, atol=1e-10)


class TestMaxStep:
    def test_orthant(self):
        assert Orthant(2).max_step(np.array([1.0, 2.0]), np.array([-0.5, -4.0])) == pytest.approx(0.5)
        assert Orthant(2).max_step(np.ones(2), np.ones(2)) == float("inf")

    def test_soc_lands_on_boundary(self, rng):
        cone = SecondOrder(3)
        v = _random_soc(rng, 3)
        dv = rng.standard_normal(3) - np.array([3.0, 0.0, 0.0])
        alpha = cone.max_step(v, dv)
        assert np.isfinite(alpha)
        assert cone.margin(v + alpha * dv) == pytest.approx(0.0, abs=1e-8)

    @pytest.mark.parametrize("magnitude", [1.0, 1e-9, 1e6])
    def test_soc_step_brackets_boundary(self, rng, magnitude):
        cone = SecondOrder(5)
        for _ in range(200):
            v = magnitude * _random_soc(rng, 5)
            dv = magnitude * rng.standard_normal(5)
            alpha = cone.max_step(v, dv)
            if not np.isfinite(alpha):
                assert cone.margin(v + 1e3 * dv) >= -1e-9 * magnitude
                continue
            assert cone.margin(v + 0.999 * alpha * dv) > 0
            assert cone.margin(v + 1.001 * alpha * dv) < 0

    def test_soc_boundary_point_cannot_move(self):
        assert SecondOrder(3).max_step(np.array([5.0, 3.0, 4.0]), np.array([1.0, 0.0, 0.0])) == 0.0

    def test_psd_lands_on_boundary(self, rng):
        cone = Semidefinite(3)
        v = _random_psd(rng, 3)
        dv = -svec(np.eye(3)) + 0.1 * rng.standard_normal(cone.dim)
        alpha = cone.max_step(v, dv)
        assert np.isfinite(alpha)
        assert cone.margin(v + alpha * dv) == pytest.approx(0.0, abs=1e-8)


class TestScaling:
    @pytest.mark.parametrize(
        "cone,draw",
        [
            (Orthant(3), lambda rng: rng.uniform(0.5, 2.0, 3)),
            (SecondOrder(4), lambda rng: _random_soc(rng, 4)),
            (Semidefinite(3), lambda rng: _random_psd(rng, 3)),
        ],
    )
    def test_nt_point_maps_both_sides_to_lambda(self, cone, draw, rng):
        s, z = draw(rng), draw(rng)
        scaling = cone.scaling(s, z)
        np.testing.assert_allclose(scaling.apply(z), scaling.lam, atol=1e-9)
        np.testing.assert_allclose(scaling.apply_inv_t(s), scaling.lam, atol=1e-9)
        np.testing.assert_allclose(scaling.apply_inv(scaling.apply(z)), z, atol=1e-9)

    def test_soc_near_boundary_stays_finite(self, rng):
        cone = SecondOrder(4)
        s = np.array([5.0 + 1e-6, 3.0, 4.0, 0.0])
        z = _random_soc(rng, 4)
        scaling = cone.scaling(s, z)
        assert np.all(np.isfinite(scaling.w)) and np.all(np.isfinite(scaling.w_inv))
        np.testing.assert_allclose(scaling.apply(z), scaling.apply_inv_t(s), rtol=1e-4, atol=1e-8)
        assert cone.margin(scaling.lam) > 0

    @pytest.mark.parametrize(
        "cone,outside",
        [
            (Orthant(2), np.array([1.0, 0.0])),
            (SecondOrder(3), np.array([1.0, 2.0, 0.0])),
            (SecondOrder(3), np.array([-3.0, 0.0, 0.0])),
        ],
    )
    def test_exterior_point_rejected(self, cone, outside):
        with pytest.raises(np.linalg.LinAlgError, match="interior"):
            cone.scaling(outside, cone.identity())

    def test_psd_lambda_is_diagonal(self, rng):
        cone = Semidefinite(3)
        lam = smat(cone.scaling(_random_psd(rng, 3), _random_psd(rng, 3)).lam)
        np.testing.assert_allclose(lam, np.diag(np.diag(lam)), atol=1e-12)


class TestBlockMargin:
    def test_zero_cone(self):
        assert block_margin(ZeroCone(dim=2), np.array([0.1, -0.3])) == pytest.approx(-0.3)
        assert block_margin(ZeroCone(dim=2), np.array([5.0, 5.0]), dual=True) == float("inf")

    def test_soc_and_psd(self):
        assert block_margin(SecondOrderCone(dim=3), np.array([5.0, 3.0, 4.0])) == pytest.approx(0.0)
        assert block_margin(PsdCone(side=2), svec(np.diag([2.0, -1.0]))) == pytest.approx(-1.0)
        assert block_margin(NonnegCone(dim=2), np.array([1.0, 0.5])) == pytest.approx(0.5)

    def test_zero_cone_has_no_arithmetic(self):
        with pytest.raises(ValueError, match="zero"):
            cone_ops(ZeroCone(dim=1))

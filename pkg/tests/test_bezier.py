import json

import numpy as np
import pytest

from quadspline import bezier as bz
from conftest import deboor, deboor_surface, factorable_oracle


def decasteljau(pts, t):
    """Independent curve-evaluation oracle."""
    pts = [np.asarray(p, dtype=float) for p in pts]
    while len(pts) > 1:
        pts = [(1 - t) * a + t * b for a, b in zip(pts[:-1], pts[1:])]
    return pts[0]


def random_patch(rng):
    return bz.BezierPatch(rng.uniform(-1, 1, size=(4, 4, 3)))


def flat_patch():
    net = np.zeros((4, 4, 3))
    for i in range(4):
        for j in range(4):
            net[i, j] = (i / 3.0, j / 3.0, 0.0)
    return bz.BezierPatch(net)


class TestBezierEval:
    def test_flat_patch_linear_precision(self):
        p = flat_patch()
        assert np.allclose(p.eval(0.5, 0.5), (0.5, 0.5, 0.0), atol=1e-15)

    def test_flat_patch_first_derivative(self):
        p = flat_patch()
        assert np.allclose(p.eval(0.5, 0.5, du=1), (1.0, 0.0, 0.0), atol=1e-14)

    def test_matches_decasteljau_oracle(self, rng):
        p = random_patch(rng)
        for u, v in rng.uniform(0, 1, size=(10, 2)):
            rows = np.array([decasteljau(p.net[i], v) for i in range(4)])
            expect = decasteljau(rows, u)
            assert np.allclose(p.eval(u, v), expect, atol=1e-13)

    def test_derivatives_match_finite_differences(self, rng):
        h = 1e-5
        for _ in range(5):
            p = random_patch(rng)
            u, v = rng.uniform(0.2, 0.8, size=2)
            fd_u = (p.eval(u + h, v) - p.eval(u - h, v)) / (2 * h)
            got = p.eval(u, v, du=1)
            assert np.abs(fd_u - got).max() <= 1e-6 * max(1.0, np.abs(got).max())
            fd_uv = (p.eval(u + h, v + h) - p.eval(u + h, v - h)
                     - p.eval(u - h, v + h) + p.eval(u - h, v - h)) / (4 * h * h)
            got_uv = p.eval(u, v, du=1, dv=1)
            assert np.abs(fd_uv - got_uv).max() <= 1e-5 * max(1.0, np.abs(got_uv).max())

    def test_second_derivative_fd_of_first(self, rng):
        h = 1e-5
        p = random_patch(rng)
        u, v = 0.4, 0.6
        fd = (p.eval(u + h, v, du=1) - p.eval(u - h, v, du=1)) / (2 * h)
        got = p.eval(u, v, du=2)
        assert np.abs(fd - got).max() <= 1e-6 * max(1.0, np.abs(got).max())

    def test_affine_invariance(self, rng):
        p = random_patch(rng)
        A = rng.uniform(-1, 1, size=(3, 3))
        b = rng.uniform(-1, 1, size=3)
        q = bz.BezierPatch(p.net @ A.T + b)
        for u, v in rng.uniform(0, 1, size=(5, 2)):
            assert np.abs(q.eval(u, v) - (A @ p.eval(u, v) + b)).max() <= 1e-13

    def test_order_out_of_range(self):
        p = flat_patch()
        with pytest.raises(ValueError):
            p.eval(0.5, 0.5, du=4)


class TestSplineConversion:
    def test_matches_deboor_oracle(self, rng):
        net = rng.uniform(-2, 2, size=(8, 8, 3))
        patch = bz.SplinePatch(net)
        for u, v in rng.uniform(0, 1, size=(100, 2)):
            expect = deboor_surface(bz.KNOT_VECTOR, bz.KNOT_VECTOR, net, u, v)
            assert np.abs(patch.eval(u, v) - expect).max() <= 1e-12

    def test_bilinear_reproduction(self):
        # coefficients at Greville abscissae reproduce any bilinear exactly
        grev = np.array([bz.KNOT_VECTOR[i + 1:i + 4].mean() for i in range(8)])
        net = np.zeros((8, 8, 3))
        for i in range(8):
            for j in range(8):
                net[i, j] = (grev[i], grev[j], grev[i] * grev[j])
        pieces = bz.spline_to_pieces(net)
        for u, v in np.random.default_rng(3).uniform(0, 1, size=(20, 2)):
            iu = min(int(u * 3), 2)
            iv = min(int(v * 3), 2)
            s, t = u * 3 - iu, v * 3 - iv
            val = pieces[iu][iv].eval(s, t)
            assert np.abs(val - (u, v, u * v)).max() <= 1e-13

    def test_identity_on_bezier_knots(self, rng):
        net = rng.uniform(-1, 1, size=(4, 4, 3))
        grid = bz.spline_to_pieces(net, bz.BEZIER_KNOTS)
        assert len(grid) == 1 and len(grid[0]) == 1
        assert np.allclose(grid[0][0].net, net, atol=0)

    def test_unsupported_knots_rejected(self, rng):
        with pytest.raises(bz.KnotError):
            bz.spline_to_pieces(rng.uniform(size=(8, 8, 3)),
                                np.linspace(0, 1, 12))

    def test_insert_knot_preserves_curve(self, rng):
        coeffs = rng.uniform(-1, 1, size=(8, 3))
        knots2, coeffs2 = bz.insert_knot(bz.KNOT_VECTOR, coeffs, 0.5)
        for u in rng.uniform(0, 1, size=20):
            a = deboor(bz.KNOT_VECTOR, coeffs, u)
            b = deboor(knots2, coeffs2, u)
            assert np.abs(a - b).max() <= 1e-13

    def test_pw_spline_round_trip(self, rng):
        coeffs = rng.uniform(-1, 1, size=(8, 3))
        pw = bz.pw_from_spline(coeffs)
        back = bz.spline_from_pw(pw)
        assert np.abs(back - coeffs).max() <= 1e-12
        for u in rng.uniform(0, 1, size=20):
            assert np.abs(bz.pw_eval(pw, u) - deboor(bz.KNOT_VECTOR, coeffs, u)).max() <= 1e-13


class TestContinuityOrder:
    def test_adjacent_pieces_of_spline_are_c1(self, rng):
        patch = bz.SplinePatch(rng.uniform(-1, 1, size=(8, 8, 3)))
        pieces = patch.to_pieces()
        order, res = bz.continuity_order(pieces[0][1], pieces[1][1], edge=("u1", "u0"))
        assert order >= 1
        assert res[2] > 1e-6  # double knot: second derivative jumps generically

    def test_patch_against_itself(self, rng):
        p = random_patch(rng)
        order, _ = bz.continuity_order(p, p, edge=("u1", "u1"))
        assert order == 3

    def test_translated_copy(self, rng):
        p = random_patch(rng)
        q = bz.BezierPatch(p.net + np.array([0.0, 0.0, 1e-3]))
        order, res = bz.continuity_order(p, q, edge=("u1", "u1"))
        assert order == -1
        assert abs(res[0] - 1e-3) <= 1e-12

    def test_symmetry(self, rng):
        patch = bz.SplinePatch(rng.uniform(-1, 1, size=(8, 8, 3)))
        pieces = patch.to_pieces()
        a, _ = bz.continuity_order(pieces[0][0], pieces[1][0], edge=("u1", "u0"))
        b, _ = bz.continuity_order(pieces[1][0], pieces[0][0], edge=("u0", "u1"))
        assert a == b


def _curve_from_power(glob_coeffs):
    """BoundaryCurve from global power coefficients of degree <= 3."""
    segs = []
    for i in range(3):
        local = bz.poly_compose_affine(glob_coeffs, bz.BREAKS[i], bz.SEG_LEN)
        segs.append(bz.power_to_bezier(local))
    return bz.BoundaryCurve(np.array(segs))


class TestFactorization:
    def test_constructed_factorable(self):
        # c'(u) = (a + b u) * (1 + u): integrate to a cubic curve
        a = np.array([1.0, 0.5, -0.3])
        b = np.array([0.2, -1.0, 0.7])
        dpow = np.zeros((3, 3))
        dpow[0] = a
        dpow[1] = a + b
        dpow[2] = b
        cpow = np.zeros((4, 3))
        cpow[1:] = dpow / np.array([[1.0], [2.0], [3.0]])
        curve = _curve_from_power(cpow)
        fac = bz.factor_middle_derivative(curve)
        assert fac is not None
        assert fac.root is not None
        # gamma normalized at 1/3 and proportional to (1 + u)
        g = fac.gamma
        assert abs(g[0] + g[1] / 3 - 1.0) <= 1e-9
        assert abs(g[1] / g[0] - 1.0) <= 1e-8
        recon0 = bz.poly_eval(fac.ell, np.asarray(0.5)) * bz.poly_eval(fac.gamma, np.asarray(0.5))
        expect = bz.poly_eval(dpow, np.asarray(0.5))
        assert np.abs(recon0 - expect).max() <= 1e-9

    def test_generic_not_factorable(self, rng):
        for _ in range(20):
            cpow = np.zeros((4, 3))
            cpow[1:] = rng.uniform(-1, 1, size=(3, 3))
            curve = _curve_from_power(cpow)
            dpow = curve.middle_derivative_power()
            fac = bz.factor_middle_derivative(curve)
            assert (fac is not None) == factorable_oracle(dpow)

    def test_constant_derivative(self):
        cpow = np.zeros((4, 3))
        cpow[1] = (1.0, 2.0, 3.0)
        curve = _curve_from_power(cpow)
        fac = bz.factor_middle_derivative(curve)
        assert fac is not None and fac.root is None
        assert np.allclose(fac.gamma, [1.0, 0.0])

    def test_zero_derivative_errors(self):
        cpow = np.zeros((4, 3))
        cpow[0] = (1.0, 1.0, 1.0)
        curve = _curve_from_power(cpow)
        with pytest.raises(ValueError, match="degenerate"):
            bz.factor_middle_derivative(curve)

    def test_detector_matches_resultant_oracle(self, rng):
        disagreements = 0
        for k in range(300):
            if k % 2 == 0:
                dpow = rng.uniform(-1, 1, size=(3, 3))
            else:
                a = rng.uniform(-1, 1, size=3)
                b = rng.uniform(-1, 1, size=3)
                root = rng.uniform(0.8, 3.0)
                g = np.array([-root, 1.0])
                dpow = np.zeros((3, 3))
                dpow[0] = a * g[0]
                dpow[1] = a * g[1] + b * g[0]
                dpow[2] = b * g[1]
            got = bz.factor_quadratic_vector(dpow, anchor=1 / 3) is not None
            want = factorable_oracle(dpow)
            disagreements += int(got != want)
        assert disagreements == 0


class TestInterchange:
    def test_bit_exact_round_trip(self, rng):
        patch = bz.SplinePatch(rng.uniform(-1, 1, size=(8, 8, 3)))
        text = bz.patch_to_json(patch)
        back = bz.patch_from_json(text)
        assert isinstance(back, bz.SplinePatch)
        assert np.array_equal(back.net, patch.net)
        assert bz.patch_to_json(back) == text

    def test_bezier_round_trip(self, rng):
        patch = random_patch(rng)
        back = bz.patch_from_json(bz.patch_to_json(patch))
        assert isinstance(back, bz.BezierPatch)
        assert np.array_equal(back.net, patch.net)

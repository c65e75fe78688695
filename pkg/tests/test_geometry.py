"""Geometry: exact conics, rational derivatives, elevation, refinement."""

import json
from math import pi

import numpy as np
import pytest
from scipy.integrate import quad

from igadual import (
    GeometryError,
    ParameterError,
    circular_arc,
    extrude_curve,
    patch_from_json,
    revolve_curve,
    straight_line,
)

XS = np.array([0.0, 0.137, 0.5, 0.78, 1.0])


def fd_curve_derivative(curve, x, order, h=1e-5):
    lo = curve.eval(x - h, order - 1)[order - 1]
    hi = curve.eval(x + h, order - 1)[order - 1]
    return (hi - lo) / (2 * h)


class TestCircularArc:
    def test_points_on_circle(self):
        arc = circular_arc(2.5, 0.0, pi / 2, center=(1.0, -2.0))
        for x in XS:
            pt = arc.eval(x)[0]
            assert abs(np.linalg.norm(pt - [1.0, -2.0]) - 2.5) < 1e-13

    def test_endpoints(self):
        arc = circular_arc(1.0, 0.0, pi / 2)
        assert np.allclose(arc.eval(0.0)[0], [1.0, 0.0], atol=1e-14)
        assert np.allclose(arc.eval(1.0)[0], [0.0, 1.0], atol=1e-14)

    def test_tangent_orthogonal_to_radius(self):
        arc = circular_arc(3.0, 0.2, 0.2 + pi / 3)
        for x in XS[1:-1]:
            C = arc.eval(x, 1)
            assert abs(C[1] @ C[0]) < 1e-11

    def test_arc_length_quarter(self):
        # Oracle: independent adaptive integration of the arc-length rate.
        arc = circular_arc(1.0, 0.0, pi / 2)
        L, _ = quad(lambda x: arc.jacobian(x), 0.0, 1.0, epsabs=1e-13)
        assert abs(L - pi / 2) < 1e-10

    def test_arc_length_forty_degrees(self):
        R, ang = 25.0, np.deg2rad(40.0)
        arc = circular_arc(R, pi / 2 - ang / 2, pi / 2 + ang / 2)
        L, _ = quad(lambda x: arc.jacobian(x), 0.0, 1.0, epsabs=1e-12)
        assert abs(L - R * ang) < 1e-8

    def test_bad_sweep_rejected(self):
        with pytest.raises(ParameterError):
            circular_arc(1.0, 0.0, pi)
        with pytest.raises(ParameterError):
            circular_arc(1.0, 0.3, 0.3)


class TestCurveDerivatives:
    def test_first_and_second_by_finite_differences(self):
        arc = circular_arc(2.0, 0.1, 1.3)
        for x in (0.21, 0.55, 0.8):
            C = arc.eval(x, 2)
            assert np.allclose(C[1], fd_curve_derivative(arc, x, 1), rtol=1e-7, atol=1e-8)
            assert np.allclose(C[2], fd_curve_derivative(arc, x, 2), rtol=1e-6, atol=1e-6)

    def test_third_by_finite_differences(self):
        arc = circular_arc(1.0, 0.0, pi / 2).elevated(2)
        for x in (0.3, 0.62):
            C = arc.eval(x, 3)
            assert np.allclose(C[3], fd_curve_derivative(arc, x, 3), rtol=1e-5, atol=1e-4)

    def test_jacobian_derivatives_by_finite_differences(self):
        arc = circular_arc(1.7, 0.0, 1.1).elevated(1).refined_uniform(4)
        h = 1e-5
        for x in (0.33, 0.71):
            J = arc.jacobian(x, 2)
            J1 = (arc.jacobian(x + h) - arc.jacobian(x - h)) / (2 * h)
            J2 = (arc.jacobian(x + h) - 2 * arc.jacobian(x) + arc.jacobian(x - h)) / h**2
            assert abs(J[1] - J1) < 1e-6 * max(1.0, abs(J1))
            assert abs(J[2] - J2) < 1e-4 * max(1.0, abs(J2))

    def test_degenerate_rejected(self):
        line = straight_line([0.0, 0.0], [0.0, 0.0], degree=2)
        with pytest.raises(GeometryError):
            line.jacobian(0.5)


class TestElevationRefinement:
    def test_elevation_preserves_geometry(self):
        arc = circular_arc(1.0, 0.0, pi / 2)
        for t in (1, 2, 3):
            up = arc.elevated(t)
            assert up.p == 2 + t
            for x in XS:
                assert np.allclose(up.eval(x)[0], arc.eval(x)[0], atol=1e-12)

    def test_refinement_preserves_geometry(self):
        arc = circular_arc(2.0, 0.0, pi / 2).elevated(1)
        fine = arc.refined_uniform(8)
        assert fine.space.n_elem == 8
        assert np.allclose(np.diff(fine.space.breakpoints), 1.0 / 8, atol=1e-14)
        for x in XS:
            assert np.allclose(fine.eval(x, 1), arc.eval(x, 1), atol=1e-11)

    def test_elevation_of_multisegment_rejected(self):
        arc = circular_arc(1.0, 0.0, 1.0).refined_uniform(2)
        with pytest.raises(ParameterError):
            arc.elevated(1)


class TestStraightLine:
    def test_affine_map(self):
        line = straight_line([1.0, 2.0], [4.0, -2.0], degree=3)
        for x in XS:
            assert np.allclose(line.eval(x)[0], [1.0 + 3.0 * x, 2.0 - 4.0 * x], atol=1e-13)

    def test_constant_jacobian(self):
        line = straight_line([0.0, 0.0], [3.0, 4.0], degree=4).refined_uniform(5)
        js = [line.jacobian(x) for x in XS]
        assert np.allclose(js, 5.0, atol=1e-12)


class TestSurfaces:
    def test_extruded_cylinder_points(self):
        arc = circular_arc(300.0, pi / 2, pi / 2 - 0.9)
        surf = extrude_curve(arc, [0.0, 0.0, 300.0])
        for u in (0.0, 0.4, 1.0):
            for v in (0.0, 0.5, 1.0):
                X = surf.eval(u, v, 0)[0, 0]
                assert abs(np.hypot(X[0], X[1]) - 300.0) < 1e-9
                assert abs(X[2] - 300.0 * v) < 1e-9

    def test_extruded_area_jacobian(self):
        arc = circular_arc(2.0, 0.0, 1.0)
        surf = extrude_curve(arc, [0.0, 0.0, 5.0])
        for u in (0.2, 0.7):
            _, J = surf.normal(u, 0.5)
            assert abs(J - arc.jacobian(u) * 5.0) < 1e-10

    def test_surface_derivatives_by_finite_differences(self):
        arc = circular_arc(1.0, 0.0, pi / 2)
        surf = revolve_curve(arc, 0.0, pi / 2)
        h = 1e-5
        u, v = 0.37, 0.61
        C = surf.eval(u, v, 2)
        a_u = (surf.eval(u + h, v, 0)[0, 0] - surf.eval(u - h, v, 0)[0, 0]) / (2 * h)
        a_v = (surf.eval(u, v + h, 0)[0, 0] - surf.eval(u, v - h, 0)[0, 0]) / (2 * h)
        mix = (
            surf.eval(u + h, v + h, 0)[0, 0]
            - surf.eval(u + h, v - h, 0)[0, 0]
            - surf.eval(u - h, v + h, 0)[0, 0]
            + surf.eval(u - h, v - h, 0)[0, 0]
        ) / (4 * h * h)
        assert np.allclose(C[1, 0], a_u, rtol=1e-7, atol=1e-8)
        assert np.allclose(C[0, 1], a_v, rtol=1e-7, atol=1e-8)
        assert np.allclose(C[1, 1], mix, rtol=1e-5, atol=1e-5)

    def test_revolved_sphere_points(self):
        meridian = circular_arc(10.0, 0.0, pi / 2)
        surf = revolve_curve(meridian, 0.0, pi / 2)
        for u in (0.0, 0.3, 0.9):
            for v in (0.1, 0.5, 1.0):
                X = surf.eval(u, v, 0)[0, 0]
                assert abs(np.linalg.norm(X) - 10.0) < 1e-12

    def test_pole_row_is_degenerate_but_interior_ok(self):
        meridian = circular_arc(1.0, 0.0, pi / 2)
        surf = revolve_curve(meridian, 0.0, pi / 2)
        n, J = surf.normal(0.5, 0.5)
        assert J > 0.0
        X = surf.eval(0.5, 0.5, 0)[0, 0]
        assert np.allclose(np.abs(n), np.abs(X / np.linalg.norm(X)), atol=1e-12)

    def test_surface_elevation_and_refinement_preserve_geometry(self):
        arc = circular_arc(25.0, pi / 2 - 0.35, pi / 2 + 0.35)
        surf = extrude_curve(arc, [0.0, 0.0, 50.0])
        up = surf.elevated(times_u=1, times_v=2)
        assert up.degrees == (3, 3)
        fine = up.refined_uniform(4, 6)
        assert (fine.space_u.n_elem, fine.space_v.n_elem) == (4, 6)
        for u, v in ((0.0, 0.0), (0.3, 0.8), (1.0, 0.5)):
            ref = surf.eval(u, v, 0)[0, 0]
            assert np.allclose(up.eval(u, v, 0)[0, 0], ref, atol=1e-10)
            assert np.allclose(fine.eval(u, v, 0)[0, 0], ref, atol=1e-10)

    def test_meridian_crossing_axis_rejected(self):
        bad = straight_line([-1.0, 0.0], [1.0, 1.0], degree=1)
        with pytest.raises(GeometryError):
            revolve_curve(bad, 0.0, 1.0)


class TestRationalBasis:
    def test_partition_of_unity_and_point_consistency(self):
        arc = circular_arc(2.0, 0.0, 1.3).elevated(1).refined_uniform(5)
        for x in (0.11, 0.5, 0.93):
            R, first = arc.basis(x, 2)
            assert abs(R[0].sum() - 1.0) < 1e-13
            assert abs(R[1].sum()) < 1e-10
            P = arc.control_points[first : first + arc.p + 1]
            C = arc.eval(x, 2)
            assert np.allclose(R @ P, C, atol=1e-10)

    def test_unit_weights_reduce_to_bspline(self):
        line = straight_line([0.0, 0.0], [1.0, 1.0], degree=3).refined_uniform(4)
        from igadual import eval_basis

        R, first = line.basis(0.37, 2)
        tab, first_b = eval_basis(line.space, 0.37, 2)
        assert first == first_b
        assert np.allclose(R, tab, rtol=0, atol=1e-12)

    def test_surface_basis_consistency(self):
        arc = circular_arc(10.0, 0.0, pi / 2)
        surf = revolve_curve(arc, 0.0, pi / 2).elevated(1, 1).refined_uniform(3, 4)
        u, v = 0.43, 0.77
        R, fu, fv = surf.basis(u, v, 2)
        pu, pv = surf.degrees
        block = surf.control_points[fu : fu + pu + 1, fv : fv + pv + 1]
        C = surf.eval(u, v, 2)
        assert abs(R[0, 0].sum() - 1.0) < 1e-13
        for a, b in ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2)):
            got = np.einsum("ij,ijk->k", R[a, b], block)
            assert np.allclose(got, C[a, b], atol=1e-9), (a, b)


class TestJsonPatch:
    def _sample(self):
        arc = circular_arc(2.0, 0.0, 1.2)
        surf = extrude_curve(arc, [0.0, 0.0, 3.0])
        nu, nv = surf.weights.shape
        cps = []
        for i in range(nu):
            for j in range(nv):
                cps.append(list(surf.control_points[i, j]) + [surf.weights[i, j]])
        return surf, {
            "degree_u": 2,
            "degree_v": 1,
            "knots_u": list(surf.space_u.kv.knots),
            "knots_v": list(surf.space_v.kv.knots),
            "control_points": cps,
        }

    def test_roundtrip_dict(self):
        surf, data = self._sample()
        loaded = patch_from_json(data)
        for u, v in ((0.2, 0.4), (0.9, 0.1)):
            assert np.allclose(loaded.eval(u, v, 0)[0, 0], surf.eval(u, v, 0)[0, 0], atol=1e-13)

    def test_roundtrip_file(self, tmp_path):
        surf, data = self._sample()
        path = tmp_path / "patch.json"
        path.write_text(json.dumps(data))
        loaded = patch_from_json(str(path))
        assert np.allclose(loaded.eval(0.5, 0.5, 0)[0, 0], surf.eval(0.5, 0.5, 0)[0, 0], atol=1e-13)

    def test_missing_key_rejected(self):
        _, data = self._sample()
        del data["knots_u"]
        with pytest.raises(ParameterError):
            patch_from_json(data)

    def test_wrong_count_rejected(self):
        _, data = self._sample()
        data["control_points"] = data["control_points"][:-1]
        with pytest.raises(ParameterError):
            patch_from_json(data)

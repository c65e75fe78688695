"""Shell point kinematics: strain measures, variations, geometric stiffness."""

import numpy as np
import pytest

from igadual.errors import GeometryError, ParameterError
from igadual.geometry import circular_arc, extrude_curve
from igadual.shell import (
    ShellMaterial,
    frame_from_derivatives,
    material_matrix,
    shell_geometric_stiffness,
    shell_point_frame,
    shell_strain_rows,
    shell_strains,
    shell_stress_resultants,
)


def flat_plate_frame(du=None):
    ref = (
        np.array([1.0, 0.0, 0.0]),
        np.array([0.0, 1.0, 0.0]),
        np.zeros(3),
        np.zeros(3),
        np.zeros(3),
    )
    if du is None:
        return frame_from_derivatives(ref)
    cur = tuple(r + d for r, d in zip(ref, du))
    return frame_from_derivatives(ref, cur)


def curved_patch():
    surf = extrude_curve(circular_arc(2.0, 0.1, 1.2), (0.3, 0.2, 3.0))
    return surf.elevated(1, 2).refined_uniform(3, 3)


def point_tables(surf, u0, v0):
    R, fu, fv = surf.basis(u0, v0, 2)
    tabs = tuple(R[a, b].ravel() for a, b in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)])
    C = surf.eval(u0, v0, 2)
    ref = (C[1, 0], C[0, 1], C[2, 0], C[1, 1], C[0, 2])
    return tabs, ref


class TestMaterial:
    def test_zero_poisson_diagonal(self):
        C = material_matrix(2.0, 0.0)
        assert np.allclose(C, np.diag([2.0, 2.0, 1.0]))

    def test_reference_values(self):
        C = material_matrix(1.0, 0.3)
        assert abs(C[0, 0] - 1.0 / 0.91) < 1e-14
        assert abs(C[0, 1] - 0.3 / 0.91) < 1e-14

    def test_spd_below_half(self):
        for nu in (0.0, 0.2, 0.45, 0.499):
            C = material_matrix(3.0, nu)
            assert np.allclose(C, C.T)
            assert np.linalg.eigvalsh(C).min() > 0.0

    def test_validation(self):
        with pytest.raises(ParameterError):
            material_matrix(-1.0, 0.3)
        with pytest.raises(ParameterError):
            material_matrix(1.0, 0.5)
        with pytest.raises(ParameterError):
            ShellMaterial(1.0, 0.3, -0.1)

    def test_scales(self):
        mat = ShellMaterial(12.0, 0.0, 1.0)
        assert mat.membrane_scale == 1.0
        assert abs(mat.bending_scale - 1.0 / 12.0) < 1e-15


class TestStrainMeasures:
    def test_zero_at_reference(self):
        surf = curved_patch()
        fr = shell_point_frame(surf, 0.4, 0.7)
        eps, kap = shell_strains(fr)
        assert np.abs(eps).max() == 0.0
        assert np.abs(kap).max() == 0.0

    def test_rigid_motion_strain_free(self):
        # finite rotation plus translation of the current derivatives
        surf = curved_patch()
        C = surf.eval(0.3, 0.8, 2)
        ref = (C[1, 0], C[0, 1], C[2, 0], C[1, 1], C[0, 2])
        axis = np.array([1.0, 2.0, 3.0]) / np.sqrt(14.0)
        th = 0.7
        K = np.array(
            [
                [0.0, -axis[2], axis[1]],
                [axis[2], 0.0, -axis[0]],
                [-axis[1], axis[0], 0.0],
            ]
        )
        R = np.eye(3) + np.sin(th) * K + (1 - np.cos(th)) * (K @ K)
        cur = tuple(R @ v for v in ref)
        fr = frame_from_derivatives(ref, cur)
        eps, kap = shell_strains(fr)
        assert np.abs(eps).max() < 1e-10
        assert np.abs(kap).max() < 1e-10

    def test_flat_plate_parabolic_deflection(self):
        c, x0 = 1e-3, 0.6
        du = (
            np.array([0.0, 0.0, 2 * c * x0]),
            np.zeros(3),
            np.array([0.0, 0.0, 2 * c]),
            np.zeros(3),
            np.zeros(3),
        )
        fr = flat_plate_frame(du)
        eps, kap = shell_strains(fr)
        assert abs(kap[0] + 2 * c) < 4 * c**3
        assert abs(kap[1]) < 1e-15 and abs(kap[2]) < 1e-15
        assert abs(eps[0] - 2 * c**2 * x0**2) < 1e-15
        assert np.abs(eps[1:]).max() < 1e-15

    def test_sheared_net_membrane_oracle(self):
        # in-plane affine displacement on a skewed parametrization: local
        # Cartesian strains must equal the Green-Lagrange plane components,
        # independent of the parametric frame
        th = np.deg2rad(40.0)
        ref = (
            np.array([2.0, 0.0, 0.0]),
            np.array([np.cos(th), np.sin(th), 0.0]) * 1.3,
            np.zeros(3),
            np.zeros(3),
            np.zeros(3),
        )
        L = np.array([[0.02, -0.01, 0.0], [0.03, 0.015, 0.0], [0.0, 0.0, 0.0]])
        cur = (ref[0] + L @ ref[0], ref[1] + L @ ref[1], *ref[2:])
        fr = frame_from_derivatives(ref, cur)
        eps, kap = shell_strains(fr)
        F = np.eye(3) + L
        E = 0.5 * (F.T @ F - np.eye(3))
        assert abs(eps[0] - E[0, 0]) < 1e-14
        assert abs(eps[1] - E[1, 1]) < 1e-14
        assert abs(eps[2] - 2 * E[0, 1]) < 1e-14
        assert np.abs(kap).max() < 1e-12

    def test_degenerate_frame_rejected(self):
        ref = (np.array([1.0, 0.0, 0.0]),) * 2 + (np.zeros(3),) * 3
        with pytest.raises(GeometryError):
            frame_from_derivatives(ref)


class TestStressResultants:
    def test_zero_maps_to_zero(self):
        mat = ShellMaterial(1e7, 0.3, 0.01)
        nr, mr = shell_stress_resultants(mat, np.zeros(3), np.zeros(3))
        assert np.abs(nr).max() == 0.0 and np.abs(mr).max() == 0.0

    def test_uniaxial_values(self):
        mat = ShellMaterial(5.0, 0.0, 0.2)
        nr, _ = shell_stress_resultants(mat, np.array([1.0, 0, 0]), np.zeros(3))
        assert np.allclose(nr, [0.2 * 5.0, 0.0, 0.0])
        mat = ShellMaterial(12.0, 0.0, 1.0)
        _, mr = shell_stress_resultants(mat, np.zeros(3), np.array([1.0, 0, 0]))
        assert np.allclose(mr, [1.0, 0.0, 0.0])

    def test_energy_pairing_positive(self):
        mat = ShellMaterial(2.0, 0.45, 0.3)
        rng = np.random.default_rng(0)
        for _ in range(10):
            eps, kap = rng.standard_normal(3), rng.standard_normal(3)
            nr, mr = shell_stress_resultants(mat, eps, kap)
            assert nr @ eps + mr @ kap > 0.0


class TestStrainRows:
    def test_flat_plate_bending_rows_pure_second_derivatives(self):
        # undeformed flat plate: P a_ab = 0, so only -a3 B_ab terms remain
        fr = flat_plate_frame()
        rng = np.random.default_rng(1)
        tabs = tuple(rng.standard_normal(4) for _ in range(5))
        Bm, Bb = shell_strain_rows(fr, tabs)
        b11, b12, b22 = tabs[2], tabs[3], tabs[4]
        expect = np.zeros((3, 12))
        expect[0, 2::3] = -b11
        expect[1, 2::3] = -b22
        expect[2, 2::3] = -2 * b12
        assert np.abs(Bb - expect).max() < 1e-14

    def test_membrane_row_structure_on_plate(self):
        # orthonormal reference: Q is the identity and the first row is
        # a1 . B_{i,1} componentwise
        fr = flat_plate_frame()
        rng = np.random.default_rng(2)
        tabs = tuple(rng.standard_normal(5) for _ in range(5))
        Bm, _ = shell_strain_rows(fr, tabs)
        b1 = tabs[0]
        for i in range(5):
            assert np.allclose(Bm[0, 3 * i : 3 * i + 3], [b1[i], 0.0, 0.0])

    def test_mismatched_tables_rejected(self):
        fr = flat_plate_frame()
        with pytest.raises(ParameterError):
            shell_strain_rows(fr, (np.zeros(3),) * 4 + (np.zeros(2),))

    @pytest.mark.parametrize("seed", range(6))
    def test_rows_match_finite_differences(self, seed):
        surf = curved_patch()
        tabs, ref = point_tables(surf, 0.37, 0.61)
        nact = tabs[0].size
        rng = np.random.default_rng(seed)
        uh = 0.1 * rng.standard_normal(3 * nact)

        def strains(uvec):
            U = uvec.reshape(nact, 3)
            cur = tuple(r + t @ U for r, t in zip(ref, tabs))
            fr = frame_from_derivatives(ref, cur)
            return np.concatenate(shell_strains(fr))

        U = uh.reshape(nact, 3)
        fr = frame_from_derivatives(
            ref, tuple(r + t @ U for r, t in zip(ref, tabs))
        )
        Bm, Bb = shell_strain_rows(fr, tabs)
        B = np.vstack([Bm, Bb])
        h = 1e-5
        v = rng.standard_normal(3 * nact)
        fd = (strains(uh + h * v) - strains(uh - h * v)) / (2 * h)
        assert np.abs(B @ v - fd).max() <= 1e-6 * max(1.0, np.abs(fd).max())


class TestGeometricStiffness:
    def test_zero_stress_zero_kernel(self):
        surf = curved_patch()
        tabs, ref = point_tables(surf, 0.5, 0.5)
        fr = frame_from_derivatives(ref)
        K = shell_geometric_stiffness(fr, np.zeros(3), np.zeros(3), tabs)
        assert np.abs(K).max() == 0.0

    def test_membrane_only_block_diagonal_structure(self):
        # pure membrane prestress couples equal components only
        fr = flat_plate_frame()
        rng = np.random.default_rng(3)
        tabs = tuple(rng.standard_normal(4) for _ in range(5))
        K = shell_geometric_stiffness(fr, np.array([1.0, 2.0, 0.5]), np.zeros(3), tabs)
        assert np.abs(K - K.T).max() < 1e-14
        for a in range(3):
            for b in range(3):
                if a != b:
                    assert np.abs(K[a::3, b::3]).max() == 0.0
        b1, b2 = tabs[0], tabs[1]
        S = np.outer(b1, b1) + 2.0 * np.outer(b2, b2) + 0.5 * (
            np.outer(b1, b2) + np.outer(b2, b1)
        )
        assert np.abs(K[0::3, 0::3] - S).max() < 1e-14

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_fd_of_fixed_stress_residual(self, seed):
        surf = curved_patch()
        tabs, ref = point_tables(surf, 0.37, 0.61)
        nact = tabs[0].size
        rng = np.random.default_rng(100 + seed)
        uh = 0.1 * rng.standard_normal(3 * nact)
        nbar = rng.standard_normal(3)
        mbar = rng.standard_normal(3)

        def resid(uvec):
            U = uvec.reshape(nact, 3)
            cur = tuple(r + t @ U for r, t in zip(ref, tabs))
            fr = frame_from_derivatives(ref, cur)
            Bm, Bb = shell_strain_rows(fr, tabs)
            return Bm.T @ nbar + Bb.T @ mbar

        U = uh.reshape(nact, 3)
        fr = frame_from_derivatives(
            ref, tuple(r + t @ U for r, t in zip(ref, tabs))
        )
        K = shell_geometric_stiffness(fr, nbar, mbar, tabs)
        assert np.abs(K - K.T).max() < 1e-12
        h = 1e-5
        KFD = np.empty_like(K)
        for d in range(3 * nact):
            e = np.zeros(3 * nact)
            e[d] = h
            KFD[:, d] = (resid(uh + e) - resid(uh - e)) / (2 * h)
        rel = np.abs(K - KFD).max() / np.abs(KFD).max()
        assert rel < 1e-5

    def test_energy_invariance_of_transform(self):
        # the pulled-back pairing must equal the local Cartesian pairing
        surf = curved_patch()
        tabs, ref = point_tables(surf, 0.25, 0.8)
        fr = frame_from_derivatives(ref)
        rng = np.random.default_rng(5)
        from igadual.shell import _pull_back

        for _ in range(8):
            stress = rng.standard_normal(3)
            strain_cov = rng.standard_normal(3)
            strain_loc = fr.Q @ strain_cov
            s2 = _pull_back(fr.Q, stress)
            cov_pairing = (
                s2[0, 0] * strain_cov[0]
                + s2[1, 1] * strain_cov[1]
                + s2[0, 1] * strain_cov[2]
            )
            assert abs(stress @ strain_loc - cov_pairing) < 1e-12

"""Kirchhoff-Love shell kinematics at a single surface point.

Membrane strains come from the change of the first fundamental form,
bending strains from the change of curvature of the midsurface; the
director is the normalized cross product of the covariant tangents, so
no rotational dofs appear.  Strain and stress components are reported in
a local Cartesian frame built from the reference tangents, where the
plane-stress material law applies verbatim.

All kernels here are pointwise and act on interleaved displacement
coefficients (dof = 3*i + component); quadrature loops and global dof
bookkeeping live with the assembly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ParameterError

__all__ = [
    "ShellMaterial",
    "ShellPointFrame",
    "material_matrix",
    "shell_point_frame",
    "frame_from_derivatives",
    "shell_strains",
    "shell_strain_rows",
    "shell_geometric_stiffness",
    "shell_stress_resultants",
]


def material_matrix(modulus, poisson):
    """Plane-stress constitutive matrix for Voigt triples (11, 22, 2*12)."""
    if modulus <= 0.0:
        raise ParameterError("modulus must be positive")
    if not 0.0 <= poisson < 0.5:
        raise ParameterError("poisson ratio must lie in [0, 0.5)")
    c = modulus / (1.0 - poisson**2)
    return c * np.array(
        [
            [1.0, poisson, 0.0],
            [poisson, 1.0, 0.0],
            [0.0, 0.0, 0.5 * (1.0 - poisson)],
        ]
    )


@dataclass(frozen=True)
class ShellMaterial:
    """Saint Venant-Kirchhoff shell: E, nu, thickness, density."""

    modulus: float
    poisson: float
    thickness: float
    density: float = 1.0

    def __post_init__(self):
        if self.modulus <= 0.0:
            raise ParameterError("modulus must be positive")
        if not 0.0 <= self.poisson < 0.5:
            raise ParameterError("poisson ratio must lie in [0, 0.5)")
        if self.thickness <= 0.0:
            raise ParameterError("thickness must be positive")
        if self.density <= 0.0:
            raise ParameterError("density must be positive")

    @property
    def matrix(self):
        return material_matrix(self.modulus, self.poisson)

    @property
    def membrane_scale(self):
        return self.thickness

    @property
    def bending_scale(self):
        return self.thickness**3 / 12.0


def _skew(v):
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


@dataclass
class ShellPointFrame:
    """Reference and current midsurface derivatives at one point.

    Derivative vectors are ordered (d1, d2, d11, d12, d22).  The Voigt
    transform Q maps curvilinear strain triples (with engineering shear)
    to the local Cartesian frame of the reference surface.
    """

    A1: np.ndarray
    A2: np.ndarray
    A11: np.ndarray
    A12: np.ndarray
    A22: np.ndarray
    a1: np.ndarray
    a2: np.ndarray
    a11: np.ndarray
    a12: np.ndarray
    a22: np.ndarray
    A3: np.ndarray
    normA: float
    n3: np.ndarray
    norm_n: float
    a3: np.ndarray
    Q: np.ndarray

    @property
    def area_jacobian(self):
        return self.normA


def frame_from_derivatives(ref, cur=None):
    """Build the frame from derivative vectors (d1, d2, d11, d12, d22).

    ref holds the reference surface derivatives; cur the current ones
    (defaults to the reference state).  The local Cartesian frame is
    e1 = A1/|A1| with e2 its in-plane orthogonal complement.
    """
    A1, A2, A11, A12, A22 = (np.asarray(v, dtype=float) for v in ref)
    if cur is None:
        a1, a2, a11, a12, a22 = A1, A2, A11, A12, A22
    else:
        a1, a2, a11, a12, a22 = (np.asarray(v, dtype=float) for v in cur)
    N3 = np.cross(A1, A2)
    normA = float(np.linalg.norm(N3))
    if normA <= 0.0:
        raise GeometryError("degenerate reference surface frame")
    A3 = N3 / normA
    n3 = np.cross(a1, a2)
    norm_n = float(np.linalg.norm(n3))
    if norm_n <= 0.0:
        raise GeometryError("degenerate current surface frame")
    a3 = n3 / norm_n

    # contravariant reference tangents from the inverse metric
    G = np.array([[A1 @ A1, A1 @ A2], [A1 @ A2, A2 @ A2]])
    H = np.linalg.inv(G)
    Au = H[0, 0] * A1 + H[0, 1] * A2
    Av = H[1, 0] * A1 + H[1, 1] * A2

    e1 = A1 / np.linalg.norm(A1)
    e2 = np.cross(A3, e1)
    t = np.array([[e1 @ Au, e1 @ Av], [e2 @ Au, e2 @ Av]])
    Q = np.array(
        [
            [t[0, 0] ** 2, t[0, 1] ** 2, t[0, 0] * t[0, 1]],
            [t[1, 0] ** 2, t[1, 1] ** 2, t[1, 0] * t[1, 1]],
            [
                2.0 * t[0, 0] * t[1, 0],
                2.0 * t[0, 1] * t[1, 1],
                t[0, 0] * t[1, 1] + t[0, 1] * t[1, 0],
            ],
        ]
    )
    return ShellPointFrame(
        A1=A1, A2=A2, A11=A11, A12=A12, A22=A22,
        a1=a1, a2=a2, a11=a11, a12=a12, a22=a22,
        A3=A3, normA=normA, n3=n3, norm_n=norm_n, a3=a3, Q=Q,
    )


def shell_point_frame(surface, u, v, du=None):
    """Frame from the surface and optional displacement derivatives.

    du, if given, holds the displacement derivative vectors in the same
    (d1, d2, d11, d12, d22) order.
    """
    C = surface.eval(u, v, 2)
    ref = (C[1, 0], C[0, 1], C[2, 0], C[1, 1], C[0, 2])
    if du is None:
        return frame_from_derivatives(ref)
    cur = tuple(r + np.asarray(d, dtype=float) for r, d in zip(ref, du))
    return frame_from_derivatives(ref, cur)


def shell_strains(fr):
    """Membrane and bending strain triples in the local Cartesian frame.

    Membrane strains halve the change of the first fundamental form;
    bending strains are the change of the projected second derivatives,
    kappa = A_ab.A3 - a_ab.a3.  Both vanish for rigid motions.
    """
    eps = np.array(
        [
            0.5 * (fr.a1 @ fr.a1 - fr.A1 @ fr.A1),
            0.5 * (fr.a2 @ fr.a2 - fr.A2 @ fr.A2),
            fr.a1 @ fr.a2 - fr.A1 @ fr.A2,
        ]
    )
    kap = np.array(
        [
            fr.A11 @ fr.A3 - fr.a11 @ fr.a3,
            fr.A22 @ fr.A3 - fr.a22 @ fr.a3,
            2.0 * (fr.A12 @ fr.A3 - fr.a12 @ fr.a3),
        ]
    )
    return fr.Q @ eps, fr.Q @ kap


def _check_tabs(tabs):
    b1, b2, b11, b12, b22 = (np.asarray(t, dtype=float) for t in tabs)
    if not b1.size == b2.size == b11.size == b12.size == b22.size:
        raise ParameterError("basis derivative tables must share one length")
    return b1, b2, b11, b12, b22


def shell_strain_rows(fr, tabs):
    """First-variation matrices of the strain triples.

    tabs : basis derivative vectors (b1, b2, b11, b12, b22), length n.
    Returns (Bm, Bb), each 3 x 3n in the local Cartesian frame, acting on
    interleaved displacement coefficients.
    """
    b1, b2, b11, b12, b22 = _check_tabs(tabs)
    n = b1.size
    P = np.eye(3) - np.outer(fr.a3, fr.a3)

    Bm = np.zeros((3, 3 * n))
    Bb = np.zeros((3, 3 * n))
    for c in range(3):
        Bm[0, c::3] = fr.a1[c] * b1
        Bm[1, c::3] = fr.a2[c] * b2
        Bm[2, c::3] = fr.a1[c] * b2 + fr.a2[c] * b1
    # delta a3 = P delta n3 / |n3|; the cross products fold that into
    # coefficients of the first basis derivatives
    for voigt, (aab, scale) in enumerate(
        [(fr.a11, 1.0), (fr.a22, 1.0), (fr.a12, 2.0)]
    ):
        Pa = P @ aab
        w1 = np.cross(fr.a2, Pa) / fr.norm_n
        w2 = np.cross(fr.a1, Pa) / fr.norm_n
        bab = (b11, b22, b12)[voigt]
        for c in range(3):
            Bb[voigt, c::3] = scale * (
                -fr.a3[c] * bab - w1[c] * b1 + w2[c] * b2
            )
    return fr.Q @ Bm, fr.Q @ Bb


def shell_stress_resultants(mat, eps, kap):
    """Normal-force and moment triples conjugate to the strain triples."""
    C = mat.matrix
    return mat.membrane_scale * (C @ eps), mat.bending_scale * (C @ kap)


def _pull_back(Q, voigt):
    """Stress triple in curvilinear components as a symmetric 2x2.

    Stresses transform with the transpose of the strain map, keeping the
    energy pairing n.eps + m.kap invariant.
    """
    s = Q.T @ np.asarray(voigt, dtype=float)
    return np.array([[s[0], s[2]], [s[2], s[1]]])


def shell_geometric_stiffness(fr, nbar, mbar, tabs):
    """Second-variation kernel weighted by fixed stress resultants.

    nbar, mbar : Voigt triples in the local Cartesian frame.  Returns the
    symmetric 3n x 3n block pairing displacement variations, the exact
    Hessian of the strain energy increment at frozen stresses.
    """
    b1, b2, b11, b12, b22 = _check_tabs(tabs)
    n = b1.size
    nm = _pull_back(fr.Q, nbar)
    mm = _pull_back(fr.Q, mbar)

    # membrane part: scalar kernel times the identity on components
    S = (
        nm[0, 0] * np.outer(b1, b1)
        + nm[1, 1] * np.outer(b2, b2)
        + nm[0, 1] * (np.outer(b1, b2) + np.outer(b2, b1))
    )
    K = np.kron(S, np.eye(3))

    if not np.any(mm):
        return K

    P = np.eye(3) - np.outer(fr.a3, fr.a3)
    A_blocks = np.einsum("i,ab->iab", b2, _skew(fr.a1)) - np.einsum(
        "i,ab->iab", b1, _skew(fr.a2)
    )

    # moment-weighted combination of the curvature terms; the mixed pair
    # (1,2) and (2,1) both carry m12
    w = np.array([mm[0, 0], mm[1, 1], 2.0 * mm[0, 1]])
    W = w[0] * b11 + w[1] * b22 + w[2] * b12
    abar = w[0] * fr.a11 + w[1] * fr.a22 + w[2] * fr.a12

    PA = np.einsum("ab,jbc->jac", P, A_blocks)
    # rows pair second-derivative variations with normal linearizations
    T1 = -np.einsum("i,jac->iajc", W, PA) / fr.norm_n
    T1 = T1.reshape(3 * n, 3 * n)
    K += T1 + T1.T

    M = (
        np.outer(fr.a3, abar)
        + np.outer(abar, fr.a3)
        + (fr.a3 @ abar) * (np.eye(3) - 3.0 * np.outer(fr.a3, fr.a3))
    )
    T3 = -np.einsum("iab,bc,jcd->iajd", A_blocks, M, A_blocks) / fr.norm_n**2
    K += T3.reshape(3 * n, 3 * n)

    # bilinear part of the normal's second variation: delta a1 x Delta a2
    # and its mirror, projected on the weighted curvature vector
    q = _skew(P @ abar) / fr.norm_n
    S12 = np.outer(b1, b2) - np.outer(b2, b1)
    K += np.kron(S12, q)
    return K

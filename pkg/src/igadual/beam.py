"""Planar curved beam kinematics (extensible Euler-Bernoulli).

Strains are measured against the reference curve: a membrane strain from
the tangent stretch and a bending strain from the rotation of the unit
normal, both per unit reference arc length.  All quantities here are
pointwise; quadrature loops and dof bookkeeping live with the assembly.

Displacements are Cartesian vector fields u(xi); the current tangent is
a = A + u' with A the reference tangent.  Rigid motions produce exactly
zero strain, including finite rotations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ParameterError

__all__ = [
    "BeamSection",
    "BeamPointState",
    "beam_point_state",
    "beam_strains",
    "beam_strain_rows",
    "beam_geometric_hessian",
]

ROT90 = np.array([[0.0, -1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class BeamSection:
    """Linear elastic section: axial stiffness EA, bending stiffness EI."""

    modulus: float
    area: float
    inertia: float
    density: float = 1.0

    def __post_init__(self):
        for name in ("modulus", "area", "inertia", "density"):
            if getattr(self, name) <= 0.0:
                raise ParameterError(f"section {name} must be positive")

    @property
    def axial_stiffness(self):
        return self.modulus * self.area

    @property
    def bending_stiffness(self):
        return self.modulus * self.inertia


@dataclass
class BeamPointState:
    """Reference and current tangents at one parametric point."""

    A: np.ndarray       # reference tangent dC/dxi
    Ap: np.ndarray      # reference tangent derivative d2C/dxi2
    a: np.ndarray       # current tangent A + u'
    ap: np.ndarray      # current tangent derivative Ap + u''

    @property
    def jac(self):
        return float(np.linalg.norm(self.A))

    @property
    def metric(self):
        return float(self.A @ self.A)


def beam_point_state(curve, x, du1=None, du2=None):
    """Point state from the reference curve and displacement derivatives."""
    C = curve.eval(x, 2)
    A, Ap = C[1], C[2]
    if np.linalg.norm(A) <= 0.0:
        raise GeometryError(f"degenerate reference tangent at xi={x}")
    du1 = np.zeros(2) if du1 is None else np.asarray(du1, dtype=float)
    du2 = np.zeros(2) if du2 is None else np.asarray(du2, dtype=float)
    return BeamPointState(A=A, Ap=Ap, a=A + du1, ap=Ap + du2)


def _unit_normal(t):
    nt = np.linalg.norm(t)
    if nt <= 0.0:
        raise GeometryError("degenerate current tangent")
    return ROT90 @ (t / nt), nt


def beam_strains(st):
    """Membrane strain and bending strain (curvature change) at a point.

    eps = (a.a - A.A) / (2 A.A); kappa = (A'.N - a'.n) / (A.A) with N, n
    the reference and current unit normals.  Both vanish identically for
    rigid motions of any magnitude.
    """
    m = st.metric
    eps = (st.a @ st.a - m) / (2.0 * m)
    N, _ = _unit_normal(st.A)
    n, _ = _unit_normal(st.a)
    kap = (st.Ap @ N - st.ap @ n) / m
    return eps, kap


def beam_strain_rows(st, b1, b2):
    """First-variation rows of (eps, kappa) for the active control points.

    b1, b2 : arrays of first and second basis-function derivatives at the
    point (length n_active).  Returns (row_eps, row_kap), each of length
    2 * n_active with x/y components interleaved.
    """
    m = st.metric
    n, na = _unit_normal(st.a)
    that = st.a / na
    P = np.eye(2) - np.outer(that, that)
    g = P @ (ROT90.T @ st.ap)
    row_eps = np.empty(2 * b1.size)
    row_kap = np.empty(2 * b1.size)
    for c in range(2):
        row_eps[c::2] = st.a[c] / m * b1
        row_kap[c::2] = -(n[c] * b2 + g[c] / na * b1) / m
    return row_eps, row_kap


def beam_geometric_hessian(st, n_bar, m_bar, b1, b2):
    """Second-variation (geometric) stiffness block at a point.

    n_bar, m_bar : membrane force and bending moment carried by the point.
    Returns a (2 n_active, 2 n_active) symmetric matrix: the contraction
    n_bar * dd(eps) + m_bar * dd(kappa) in the interleaved dof ordering.
    """
    m = st.metric
    that, na = st.a / np.linalg.norm(st.a), float(np.linalg.norm(st.a))
    P = np.eye(2) - np.outer(that, that)
    # Pairing (u', u'): membrane part plus the normalization curvature of n.
    v = ROT90.T @ st.ap
    vt = float(v @ that)
    W = (-np.outer(v, that) - np.outer(that, v) - vt * np.eye(2) + 3.0 * vt * np.outer(that, that)) / (
        na * na
    )
    H11 = (n_bar / m) * np.eye(2) - (m_bar / m) * W
    # Pairing (u'', u') and its transpose.
    M21 = -(m_bar / (m * na)) * (ROT90 @ P)
    nb = b1.size
    K = np.zeros((2 * nb, 2 * nb))
    B1 = np.zeros((2, 2 * nb))
    B2 = np.zeros((2, 2 * nb))
    for c in range(2):
        B1[c, c::2] = b1
        B2[c, c::2] = b2
    K += B1.T @ H11 @ B1
    K += B2.T @ M21 @ B1
    K += B1.T @ M21.T @ B2
    return K

"""NURBS curves and surfaces for exact benchmark geometries.

Rational derivatives come from the homogeneous quotient rule, so circular
arcs, cylinders, and spheres are represented exactly; degree elevation of
single-segment (Bezier) patches plus knot insertion produces the refined
meshes the studies run on without perturbing the geometry.
"""

from __future__ import annotations

import json
from math import comb, cos, sin

import numpy as np

from .bspline import KnotVector, SplineSpace, eval_basis, insert_knot, make_open_knots
from .errors import GeometryError, ParameterError

__all__ = [
    "NurbsCurve",
    "NurbsSurface",
    "benchmark_patch",
    "circular_arc",
    "straight_line",
    "extrude_curve",
    "revolve_curve",
    "patch_from_json",
]


def _bezier_elevate(P, times):
    """Elevate homogeneous Bezier control points `times` degrees."""
    for _ in range(times):
        p = P.shape[0] - 1
        Q = np.zeros((p + 2, P.shape[1]))
        Q[0], Q[-1] = P[0], P[-1]
        for i in range(1, p + 1):
            a = i / (p + 1)
            Q[i] = a * P[i - 1] + (1.0 - a) * P[i]
        P = Q
    return P


class NurbsCurve:
    """Rational spline curve given by control points and weights."""

    def __init__(self, kv, control_points, weights):
        control_points = np.asarray(control_points, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if control_points.ndim != 2:
            raise ParameterError("control points must be a (n, dim) array")
        if weights.shape != (control_points.shape[0],):
            raise ParameterError("one weight per control point required")
        if np.any(weights <= 0.0):
            raise GeometryError("weights must be positive")
        if control_points.shape[0] != kv.numdofs:
            raise ParameterError("control net does not match the knot vector")
        self.space = SplineSpace(kv)
        self.control_points = control_points
        self.weights = weights

    @property
    def kv(self):
        return self.space.kv

    @property
    def p(self):
        return self.space.p

    @property
    def dim(self):
        return self.control_points.shape[1]

    def _homogeneous(self):
        return np.hstack([self.control_points * self.weights[:, None], self.weights[:, None]])

    def eval(self, x, nders=0):
        """Point and derivatives d^k C / dxi^k, shape (nders+1, dim)."""
        Pw = self._homogeneous()
        tab, first = eval_basis(self.space, x, nders)
        hom = tab @ Pw[first : first + self.p + 1]      # (nders+1, dim+1)
        A, w = hom[:, :-1], hom[:, -1]
        if w[0] <= 0.0:
            raise GeometryError("nonpositive rational weight at evaluation point")
        C = np.zeros_like(A)
        for k in range(nders + 1):
            acc = A[k].copy()
            for j in range(1, k + 1):
                acc -= comb(k, j) * w[j] * C[k - j]
            C[k] = acc / w[0]
        return C

    def basis(self, x, nders=0):
        """Rational basis values and derivatives at x.

        Returns (table, first) like the underlying spline basis; table row k
        holds d^k R_i / dxi^k for the p+1 active functions.  With unit
        weights this reduces to the B-spline table exactly.
        """
        tab, first = eval_basis(self.space, x, nders)
        wloc = self.weights[first : first + self.p + 1]
        Wd = tab @ wloc                                  # derivatives of the weight sum
        if Wd[0] <= 0.0:
            raise GeometryError("nonpositive rational weight at evaluation point")
        R = np.zeros_like(tab)
        for k in range(nders + 1):
            acc = wloc * tab[k]
            for j in range(1, k + 1):
                acc -= comb(k, j) * Wd[j] * R[k - j]
            R[k] = acc / Wd[0]
        return R, first

    def jacobian(self, x, nders=0):
        """Arc-length rate J = |C'| and, optionally, its first two derivatives.

        Returns a float for nders=0, else an array (J, J', ...) of length
        nders+1; nders at most 2.
        """
        if nders not in (0, 1, 2):
            raise ParameterError("jacobian derivatives available up to order 2")
        C = self.eval(x, nders + 1)
        J = float(np.linalg.norm(C[1]))
        if J <= 0.0:
            raise GeometryError(f"degenerate curve parametrization at xi={x}")
        if nders == 0:
            return J
        J1 = float(C[1] @ C[2]) / J
        if nders == 1:
            return np.array([J, J1])
        J2 = (float(C[2] @ C[2]) + float(C[1] @ C[3]) - J1 * J1) / J
        return np.array([J, J1, J2])

    def elevated(self, times=1):
        """Degree-elevated copy; only single-segment (Bezier) curves."""
        if times < 0:
            raise ParameterError("elevation count must be nonnegative")
        if times == 0:
            return self
        if self.space.n_elem != 1:
            raise ParameterError("degree elevation implemented for single-segment curves")
        Pw = _bezier_elevate(self._homogeneous(), times)
        a, b = self.kv.domain
        p_new = self.p + times
        kv = make_open_knots(p_new, 1, a, b)
        return NurbsCurve(kv, Pw[:, :-1] / Pw[:, -1:], Pw[:, -1])

    def refined(self, new_knots):
        """Copy with knots inserted (geometry unchanged)."""
        kv, Pw = insert_knot(self.kv, self._homogeneous(), new_knots)
        return NurbsCurve(kv, Pw[:, :-1] / Pw[:, -1:], Pw[:, -1])

    def refined_uniform(self, n_elem):
        """Copy refined to n_elem uniform elements."""
        a, b = self.kv.domain
        target = np.linspace(a, b, n_elem + 1)[1:-1]
        have = self.space.breakpoints
        new = [t for t in target if np.abs(have - t).min() > 1e-12]
        return self.refined(new)


class NurbsSurface:
    """Tensor-product rational surface."""

    def __init__(self, kv_u, kv_v, control_points, weights):
        control_points = np.asarray(control_points, dtype=float)
        weights = np.asarray(weights, dtype=float)
        nu, nv = kv_u.numdofs, kv_v.numdofs
        if control_points.shape != (nu, nv, 3):
            raise ParameterError(f"control net must have shape ({nu}, {nv}, 3)")
        if weights.shape != (nu, nv):
            raise ParameterError(f"weights must have shape ({nu}, {nv})")
        if np.any(weights <= 0.0):
            raise GeometryError("weights must be positive")
        self.space_u = SplineSpace(kv_u)
        self.space_v = SplineSpace(kv_v)
        self.control_points = control_points
        self.weights = weights

    @property
    def degrees(self):
        return self.space_u.p, self.space_v.p

    def _homogeneous(self):
        Pw = np.concatenate(
            [self.control_points * self.weights[..., None], self.weights[..., None]], axis=2
        )
        return Pw

    def eval(self, u, v, nders=2):
        """Mixed partials d^(i+j) X / du^i dv^j, shape (nders+1, nders+1, 3).

        Entry [i, j] is the (i, j) derivative; entries with i + j > nders are
        left zero.
        """
        pu, pv = self.degrees
        Pw = self._homogeneous()
        tu, fu = eval_basis(self.space_u, u, nders)
        tv, fv = eval_basis(self.space_v, v, nders)
        block = Pw[fu : fu + pu + 1, fv : fv + pv + 1]
        hom = np.einsum("ia,jb,abk->ijk", tu, tv, block)
        A, w = hom[..., :3], hom[..., 3]
        if w[0, 0] <= 0.0:
            raise GeometryError("nonpositive rational weight at evaluation point")
        C = np.zeros_like(A)
        for i in range(nders + 1):
            for j in range(nders + 1 - i):
                acc = A[i, j].copy()
                for a in range(i + 1):
                    for b_ in range(j + 1):
                        if a == 0 and b_ == 0:
                            continue
                        acc -= comb(i, a) * comb(j, b_) * w[a, b_] * C[i - a, j - b_]
                C[i, j] = acc / w[0, 0]
        return C

    def basis(self, u, v, nders=1):
        """Rational tensor-product basis values and mixed derivatives.

        Returns (table, first_u, first_v); table[a, b, i, j] holds the
        (a, b) mixed derivative of the rational function with local indices
        (i, j).  Entries with a + b > nders are left zero.
        """
        pu, pv = self.degrees
        tu, fu = eval_basis(self.space_u, u, nders)
        tv, fv = eval_basis(self.space_v, v, nders)
        wloc = self.weights[fu : fu + pu + 1, fv : fv + pv + 1]
        Bd = np.einsum("ai,bj->abij", tu, tv)
        Wd = np.einsum("abij,ij->ab", Bd, wloc)
        if Wd[0, 0] <= 0.0:
            raise GeometryError("nonpositive rational weight at evaluation point")
        R = np.zeros_like(Bd)
        for a in range(nders + 1):
            for b in range(nders + 1 - a):
                acc = wloc * Bd[a, b]
                for i in range(a + 1):
                    for j in range(b + 1):
                        if i == 0 and j == 0:
                            continue
                        acc -= comb(a, i) * comb(b, j) * Wd[i, j] * R[a - i, b - j]
                R[a, b] = acc / Wd[0, 0]
        return R, fu, fv

    def normal(self, u, v):
        """Unit normal and area Jacobian |a1 x a2| at (u, v)."""
        C = self.eval(u, v, 1)
        n = np.cross(C[1, 0], C[0, 1])
        J = float(np.linalg.norm(n))
        if J <= 0.0:
            raise GeometryError(f"degenerate surface parametrization at ({u}, {v})")
        return n / J, J

    def elevated(self, times_u=0, times_v=0):
        """Degree-elevated copy; only single-segment directions may elevate."""
        Pw = self._homogeneous()
        if times_u:
            if self.space_u.n_elem != 1:
                raise ParameterError("degree elevation implemented for single-segment directions")
            nu, nv = Pw.shape[0], Pw.shape[1]
            Pw = np.stack([_bezier_elevate(Pw[:, j], times_u) for j in range(nv)], axis=1)
        if times_v:
            if self.space_v.n_elem != 1:
                raise ParameterError("degree elevation implemented for single-segment directions")
            Pw = np.stack([_bezier_elevate(Pw[i], times_v) for i in range(Pw.shape[0])], axis=0)
        a_u, b_u = self.space_u.kv.domain
        a_v, b_v = self.space_v.kv.domain
        kv_u = make_open_knots(self.space_u.p + times_u, 1, a_u, b_u) if times_u else self.space_u.kv
        kv_v = make_open_knots(self.space_v.p + times_v, 1, a_v, b_v) if times_v else self.space_v.kv
        return NurbsSurface(kv_u, kv_v, Pw[..., :3] / Pw[..., 3:], Pw[..., 3])

    def refined(self, new_u=(), new_v=()):
        """Copy with knots inserted in either direction."""
        Pw = self._homogeneous()
        kv_u, kv_v = self.space_u.kv, self.space_v.kv
        if len(new_u):
            kv_u, Pw = insert_knot(kv_u, Pw, new_u)
        if len(new_v):
            Pw = np.swapaxes(Pw, 0, 1)
            kv_v, Pw = insert_knot(kv_v, Pw, new_v)
            Pw = np.swapaxes(Pw, 0, 1)
        return NurbsSurface(kv_u, kv_v, Pw[..., :3] / Pw[..., 3:], Pw[..., 3])

    def refined_uniform(self, n_u, n_v):
        """Copy refined to an n_u x n_v uniform element grid."""

        def missing(space, n):
            a, b = space.kv.domain
            target = np.linspace(a, b, n + 1)[1:-1]
            have = space.breakpoints
            return [t for t in target if np.abs(have - t).min() > 1e-12]

        return self.refined(missing(self.space_u, n_u), missing(self.space_v, n_v))


def circular_arc(radius, theta0, theta1, center=(0.0, 0.0)):
    """Exact circular arc as a one-segment quadratic rational curve.

    Planar (2D); the arc sweeps counterclockwise from theta0 to theta1,
    which must differ by less than pi.
    """
    sweep = theta1 - theta0
    if not 0.0 < abs(sweep) < np.pi:
        raise ParameterError("arc sweep must be nonzero and below pi")
    c = np.asarray(center, dtype=float)
    tm = 0.5 * (theta0 + theta1)
    half = 0.5 * sweep
    P = np.array(
        [
            c + radius * np.array([cos(theta0), sin(theta0)]),
            c + (radius / cos(half)) * np.array([cos(tm), sin(tm)]),
            c + radius * np.array([cos(theta1), sin(theta1)]),
        ]
    )
    w = np.array([1.0, cos(half), 1.0])
    return NurbsCurve(make_open_knots(2, 1), P, w)


def straight_line(p0, p1, degree=1):
    """Affine segment of the requested degree (uniform Greville spacing)."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    kv = make_open_knots(degree, 1)
    g = SplineSpace(kv).greville
    P = p0[None, :] + g[:, None] * (p1 - p0)[None, :]
    return NurbsCurve(kv, P, np.ones(degree + 1))


def extrude_curve(curve, direction):
    """Translational surface: the curve swept along a straight direction.

    The curve must be planar in 3D coordinates (2D curves are lifted with
    z = 0); the sweep becomes the v direction with degree 1.
    """
    d = np.asarray(direction, dtype=float)
    if d.shape != (3,):
        raise ParameterError("extrusion direction must be a 3-vector")
    P2 = curve.control_points
    if P2.shape[1] == 2:
        P2 = np.hstack([P2, np.zeros((P2.shape[0], 1))])
    elif P2.shape[1] != 3:
        raise ParameterError("curve must be 2D or 3D")
    n = P2.shape[0]
    cp = np.zeros((n, 2, 3))
    cp[:, 0] = P2
    cp[:, 1] = P2 + d
    w = np.repeat(curve.weights[:, None], 2, axis=1)
    return NurbsSurface(curve.kv, make_open_knots(1, 1), cp, w)


def revolve_curve(curve, theta0, theta1):
    """Surface of revolution of a meridian curve about the z axis.

    The meridian lives in the x-z plane as (r, z) pairs: 2D control points
    with first coordinate the axis distance (nonnegative) and second the
    height.  The circumferential direction (v) is an exact arc; a zero axis
    distance produces a degenerate pole row, admissible for evaluation away
    from the pole itself.
    """
    P = curve.control_points
    if P.shape[1] != 2:
        raise ParameterError("meridian must be 2D (axis distance, height)")
    if np.any(P[:, 0] < -1e-14):
        raise GeometryError("meridian crosses the revolution axis")
    arc = circular_arc(1.0, theta0, theta1)
    nu, nv = P.shape[0], 3
    cp = np.zeros((nu, nv, 3))
    for j in range(nv):
        cp[:, j, 0] = P[:, 0] * arc.control_points[j, 0]
        cp[:, j, 1] = P[:, 0] * arc.control_points[j, 1]
        cp[:, j, 2] = P[:, 1]
    w = np.outer(curve.weights, arc.weights)
    return NurbsSurface(curve.kv, arc.kv, cp, w)


def patch_from_json(source):
    """Load a surface patch from a JSON file path or parsed dict.

    Expected keys: degree_u, degree_v, knots_u, knots_v, control_points
    (row-major over u then v, entries [x, y, z, w]).
    """
    if isinstance(source, (str, bytes)):
        with open(source) as f:
            data = json.load(f)
    else:
        data = source
    try:
        pu, pv = int(data["degree_u"]), int(data["degree_v"])
        ku = np.asarray(data["knots_u"], dtype=float)
        kw = np.asarray(data["knots_v"], dtype=float)
        raw = np.asarray(data["control_points"], dtype=float)
    except KeyError as e:
        raise ParameterError(f"patch description missing key {e}") from None
    kv_u = KnotVector(ku, pu)
    kv_v = KnotVector(kw, pv)
    nu, nv = kv_u.numdofs, kv_v.numdofs
    if raw.shape != (nu * nv, 4):
        raise ParameterError(
            f"expected {nu * nv} homogeneous control points of length 4, got {raw.shape}"
        )
    grid = raw.reshape(nu, nv, 4)
    return NurbsSurface(kv_u, kv_v, grid[..., :3], grid[..., 3])


BENCHMARK_NAMES = (
    "quarter_circle",
    "scordelis_lo",
    "pinched_cylinder",
    "hemisphere",
    "straight_beam",
)


def benchmark_patch(name, degree=2, n_elem=1, radius=None, length=None):
    """Reference geometry for one of the named benchmark domains.

    Curves (`quarter_circle`, `straight_beam`) return a NurbsCurve; the
    shell benchmarks return the symmetric sub-patch (quarter roof, eighth
    cylinder, quarter hemisphere with an 18 degree polar hole) as a
    NurbsSurface.  Conics stay exact at every degree because elevation is
    applied to the quadratic Bezier representation before knot insertion.

    `radius`/`length` override the conventional dimensions.  `n_elem` is
    the per-direction Bezier element count.
    """
    if name not in BENCHMARK_NAMES:
        raise ParameterError(f"unknown benchmark geometry {name!r}")
    if degree < 2:
        raise ParameterError("benchmark patches need degree >= 2")
    n_elem = int(n_elem)
    if n_elem < 1:
        raise ParameterError("n_elem must be positive")

    if name == "quarter_circle":
        R = 1.0 if radius is None else float(radius)
        return circular_arc(R, 0.0, 0.5 * np.pi).elevated(degree - 2).refined_uniform(n_elem)

    if name == "straight_beam":
        L = 1.0 if length is None else float(length)
        return straight_line((0.0, 0.0), (L, 0.0), degree).refined_uniform(n_elem)

    if name == "scordelis_lo":
        # Quarter roof: u sweeps from the free edge (40 deg off the crest)
        # to the crest, v runs from the diaphragm to midspan.
        R = 25.0 if radius is None else float(radius)
        L = 50.0 if length is None else float(length)
        arc = circular_arc(R, np.deg2rad(50.0), np.deg2rad(90.0))
        surf = extrude_curve(arc, (0.0, 0.0, 0.5 * L))
    elif name == "pinched_cylinder":
        # Eighth model: u covers a quarter arc (load meridian at u=1),
        # v runs from the load plane at midspan to the diaphragm.
        R = 300.0 if radius is None else float(radius)
        L = 600.0 if length is None else float(length)
        arc = circular_arc(R, 0.0, 0.5 * np.pi)
        surf = extrude_curve(arc, (0.0, 0.0, 0.5 * L))
    else:
        # Quarter hemisphere: meridian from the rim of the 18 degree hole
        # (u=0) down to the equator (u=1), revolved a quarter turn; this
        # ordering makes the surface normal point radially outward.
        R = 10.0 if radius is None else float(radius)
        meridian = circular_arc(R, np.deg2rad(72.0), 0.0)
        surf = revolve_curve(meridian, 0.0, 0.5 * np.pi)
    return surf.elevated(degree - 2, degree - 2).refined_uniform(n_elem, n_elem)

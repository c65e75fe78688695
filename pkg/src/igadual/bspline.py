"""B-spline spaces on open knot vectors.

Evaluation follows the classical recurrence algorithms (find-span /
basis-funs / ders-basis-funs); everything downstream works with the dense
per-point table of the ``p + 1`` active functions plus the index of the first
active one.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, ParameterError

__all__ = [
    "make_open_knots",
    "KnotVector",
    "SplineSpace",
    "QuadratureRule",
    "BandedMatrix",
    "find_span",
    "eval_basis",
    "insert_knot",
    "assemble_gramian",
]


def make_open_knots(p, n_elem, a=0.0, b=1.0):
    """Uniform open knot vector of degree `p` with `n_elem` elements on [a, b].

    The first and last knot appear with multiplicity ``p + 1``; interior knots
    are simple, so the space has maximal smoothness C^{p-1}.

    Returns
    -------
    KnotVector
    """
    if p < 0 or int(p) != p:
        raise ParameterError(f"degree must be a nonnegative integer, got {p}")
    if n_elem < 1 or int(n_elem) != n_elem:
        raise ParameterError(f"need at least one element, got {n_elem}")
    if not b > a:
        raise ParameterError(f"empty parametric interval [{a}, {b}]")
    interior = np.linspace(a, b, n_elem + 1)[1:-1]
    knots = np.concatenate([np.full(p + 1, float(a)), interior, np.full(p + 1, float(b))])
    return KnotVector(knots, p)


class KnotVector:
    """Nondecreasing open knot vector together with the polynomial degree."""

    def __init__(self, knots, p):
        knots = np.ascontiguousarray(knots, dtype=float)
        if p < 0 or int(p) != p:
            raise ParameterError(f"degree must be a nonnegative integer, got {p}")
        if knots.ndim != 1 or knots.size < 2 * (p + 1):
            raise ParameterError("knot vector too short for the requested degree")
        if np.any(np.diff(knots) < 0.0):
            raise ParameterError("knot vector must be nondecreasing")
        if np.any(knots[: p + 1] != knots[0]) or np.any(knots[-p - 1 :] != knots[-1]):
            raise ParameterError("knot vector must be open (p+1-fold end knots)")
        self.knots = knots
        self.p = int(p)

    @property
    def domain(self):
        """Parametric interval (a, b)."""
        return (self.knots[0], self.knots[-1])

    @property
    def numdofs(self):
        """Dimension of the spanned spline space."""
        return self.knots.size - self.p - 1

    @property
    def breakpoints(self):
        """Unique knots, i.e. the element boundaries."""
        return np.unique(self.knots)

    @property
    def numspans(self):
        """Number of nonempty knot spans (elements)."""
        return self.breakpoints.size - 1

    def __repr__(self):
        return f"<KnotVector p={self.p}, {self.numspans} spans, dim {self.numdofs}>"

    def __eq__(self, other):
        return (
            isinstance(other, KnotVector)
            and self.p == other.p
            and self.knots.shape == other.knots.shape
            and np.array_equal(self.knots, other.knots)
        )


def find_span(knots, p, x):
    """Index i with knots[i] <= x < knots[i+1], clamped to the last span at x = b."""
    n = knots.size - p - 1
    if x >= knots[n]:
        return n - 1
    if x <= knots[p]:
        return p
    return int(np.searchsorted(knots, x, side="right") - 1)


def _basis_ders(knots, p, span, x, nders):
    """Values and derivatives of the p+1 nonzero basis functions at x.

    Classical ders-basis-funs recurrence.  Returns an array of shape
    ``(nders + 1, p + 1)``; row k holds the k-th derivatives.  Derivative
    orders above p are identically zero.
    """
    ndu = np.empty((p + 1, p + 1))
    left = np.empty(p + 1)
    right = np.empty(p + 1)
    ndu[0, 0] = 1.0
    for j in range(1, p + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((nders + 1, p + 1))
    ders[0, :] = ndu[:, p]
    ne = min(nders, p)
    a = np.empty((2, p + 1))
    for r in range(p + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, ne + 1):
            d = 0.0
            rk = r - k
            pk = p - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else p - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    r = p
    for k in range(1, ne + 1):
        ders[k, :] *= r
        r *= p - k
    return ders


class SplineSpace:
    """Scalar spline space over a :class:`KnotVector`.

    Parameters
    ----------
    kv : KnotVector
        Knot vector defining degree and elements.
    """

    def __init__(self, kv):
        if not isinstance(kv, KnotVector):
            raise ParameterError("SplineSpace expects a KnotVector")
        self.kv = kv

    @classmethod
    def uniform_open(cls, p, n_elem, a=0.0, b=1.0):
        return cls(make_open_knots(p, n_elem, a, b))

    @property
    def p(self):
        return self.kv.p

    @property
    def dim(self):
        return self.kv.numdofs

    @property
    def n_elem(self):
        return self.kv.numspans

    @property
    def breakpoints(self):
        return self.kv.breakpoints

    @property
    def greville(self):
        """Greville abscissae (knot averages)."""
        kk, p = self.kv.knots, self.p
        if p == 0:
            return 0.5 * (kk[:-1] + kk[1:])
        return np.array([kk[i + 1 : i + p + 1].mean() for i in range(self.dim)])

    def __repr__(self):
        return f"<SplineSpace p={self.p}, {self.n_elem} elements, dim {self.dim}>"

    def eval_field(self, coeffs, x, der=0):
        """Evaluate the spline with coefficient vector `coeffs` at points `x`."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape[0] != self.dim:
            raise ParameterError("coefficient vector does not match space dimension")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out_shape = (x.size,) + coeffs.shape[1:]
        out = np.zeros(out_shape)
        for i, xi in enumerate(x):
            tab, first = eval_basis(self, xi, der)
            out[i] = np.tensordot(tab[der], coeffs[first : first + self.p + 1], axes=(0, 0))
        return out

    def refine(self, new_knots):
        """Space with `new_knots` inserted (coefficients handled separately)."""
        dummy = np.zeros(self.dim)
        kv, _ = insert_knot(self.kv, dummy, new_knots)
        return SplineSpace(kv)

    def boundary_derivative_row(self, order, end):
        """Coefficient functional of the order-`order` derivative at an endpoint.

        Returns a dense row r with r @ coeffs = d^order u / dxi^order at the
        left (``end='left'``) or right (``end='right'``) end of the domain.
        """
        if order < 0 or order > self.p:
            raise ParameterError(f"derivative order {order} not available for degree {self.p}")
        a, b = self.kv.domain
        x = a if end == "left" else b
        tab, first = eval_basis(self, x, order)
        row = np.zeros(self.dim)
        row[first : first + self.p + 1] = tab[order]
        return row


def eval_basis(space, x, nders=0):
    """Active basis values and derivatives at a single parametric point.

    Parameters
    ----------
    space : SplineSpace
    x : float
        Point inside the knot domain.
    nders : int
        Highest derivative order; at most ``p + 2`` (orders beyond the degree
        come back as exact zeros).

    Returns
    -------
    table : ndarray, shape (nders+1, p+1)
        ``table[k, j]`` is the k-th derivative of the j-th active function.
    first : int
        Global index of the first active function.
    """
    kv = space.kv
    p = kv.p
    a, b = kv.domain
    if x < a or x > b:
        raise DomainError(f"point {x} outside knot domain [{a}, {b}]")
    if nders < 0 or nders > p + 2:
        raise ParameterError(f"nders must lie in [0, p+2], got {nders}")
    span = find_span(kv.knots, p, x)
    table = _basis_ders(kv.knots, p, span, x, nders)
    return table, span - p


def insert_knot(kv, coeffs, new_knots):
    """Insert knots into a spline, transforming the coefficients (Boehm).

    `coeffs` may be a vector or an array with the coefficient index first
    (e.g. homogeneous control points).  Returns the refined knot vector and
    the new coefficients; the represented spline is unchanged.
    """
    knots = kv.knots.copy()
    p = kv.p
    coeffs = np.asarray(coeffs, dtype=float).copy()
    for xnew in np.atleast_1d(np.asarray(new_knots, dtype=float)):
        a, b = knots[0], knots[-1]
        if not (a < xnew < b):
            raise ParameterError(f"new knot {xnew} must lie strictly inside ({a}, {b})")
        k = int(np.searchsorted(knots, xnew, side="right") - 1)
        n = coeffs.shape[0]
        out = np.empty((n + 1,) + coeffs.shape[1:])
        out[: k - p + 1] = coeffs[: k - p + 1]
        for i in range(k - p + 1, k + 1):
            alpha = (xnew - knots[i]) / (knots[i + p] - knots[i])
            out[i] = alpha * coeffs[i] + (1.0 - alpha) * coeffs[i - 1]
        out[k + 1 :] = coeffs[k:]
        knots = np.insert(knots, k + 1, xnew)
        coeffs = out
    return KnotVector(knots, p), coeffs


class QuadratureRule:
    """Per-element Gauss-Legendre rule on the elements of a breakpoint grid.

    Attributes
    ----------
    points, weights : ndarray, shape (n_elem, n_pts)
        Mapped abscissae and weights; ``sum(weights)`` equals the domain length.
    """

    def __init__(self, breakpoints, n_pts):
        if n_pts < 1:
            raise ParameterError(f"need at least one point per element, got {n_pts}")
        breakpoints = np.asarray(breakpoints, dtype=float)
        xg, wg = np.polynomial.legendre.leggauss(n_pts)
        mid = 0.5 * (breakpoints[1:] + breakpoints[:-1])
        half = 0.5 * np.diff(breakpoints)
        self.points = mid[:, None] + half[:, None] * xg[None, :]
        self.weights = half[:, None] * wg[None, :]
        self.n_pts = int(n_pts)

    @classmethod
    def for_space(cls, space, extra=0):
        """Rule with p+1+extra points per element (exact for degree 2p+1+2*extra)."""
        return cls(space.breakpoints, space.p + 1 + extra)

    @property
    def n_elem(self):
        return self.points.shape[0]

    @property
    def flat(self):
        """Points and weights flattened element by element."""
        return self.points.ravel(), self.weights.ravel()


class BandedMatrix:
    """Dense-diagonal storage of a banded matrix (LAPACK band layout).

    ``data[upper + i - j, j]`` holds entry ``(i, j)``; everything outside the
    band is exactly zero by construction.
    """

    def __init__(self, dim, lower, upper, data=None):
        if dim < 1 or lower < 0 or upper < 0:
            raise ParameterError("invalid banded matrix shape")
        self.dim = int(dim)
        self.lower = int(lower)
        self.upper = int(upper)
        if data is None:
            data = np.zeros((lower + upper + 1, dim))
        data = np.asarray(data, dtype=float)
        if data.shape != (lower + upper + 1, dim):
            raise ParameterError("band data has wrong shape")
        self.data = data

    @classmethod
    def from_dense(cls, A, lower, upper, tol=0.0):
        """Store a dense matrix, checking that out-of-band entries vanish."""
        A = np.asarray(A, dtype=float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ParameterError("matrix must be square")
        i, j = np.indices(A.shape)
        off = (i - j > lower) | (j - i > upper)
        leak = np.abs(A[off]).max() if off.any() else 0.0
        if leak > tol:
            raise ParameterError(f"out-of-band entries up to {leak:.3e} exceed tolerance {tol:.3e}")
        out = cls(n, lower, upper)
        for d in range(-lower, upper + 1):
            idx = np.arange(max(0, -d), min(n, n - d))
            out.data[upper - d, idx + d] = A[idx, idx + d]
        return out

    def toarray(self):
        A = np.zeros((self.dim, self.dim))
        for d in range(-self.lower, self.upper + 1):
            idx = np.arange(max(0, -d), min(self.dim, self.dim - d))
            A[idx, idx + d] = self.data[self.upper - d, idx + d]
        return A

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for d in range(-self.lower, self.upper + 1):
            idx = np.arange(max(0, -d), min(self.dim, self.dim - d))
            out[idx] += self.data[self.upper - d, idx + d] * x[idx + d]
        return out

    def rowsums(self):
        return self.matvec(np.ones(self.dim))

    def solve(self, rhs):
        """Solve A x = rhs by banded LU."""
        from scipy.linalg import solve_banded

        return solve_banded((self.lower, self.upper), self.data, rhs)

    def symmetry_error(self):
        """max |A_ij - A_ji| over the band."""
        A = self.toarray()
        return np.abs(A - A.T).max()

    def __repr__(self):
        return f"<BandedMatrix dim={self.dim}, bands=({self.lower},{self.upper})>"


def assemble_gramian(space, rule=None):
    """L2 Gramian G_ij = integral B_i B_j dxi over the parametric domain.

    The default rule uses p+1 Gauss points per element and is therefore exact.
    Returns a symmetric positive definite :class:`BandedMatrix` of bandwidth p.
    """
    if rule is None:
        rule = QuadratureRule.for_space(space)
    n, p = space.dim, space.p
    G = np.zeros((n, n))
    for e in range(rule.n_elem):
        for x, w in zip(rule.points[e], rule.weights[e]):
            tab, first = eval_basis(space, x)
            vals = tab[0]
            sl = slice(first, first + p + 1)
            G[sl, sl] += w * np.outer(vals, vals)
    return BandedMatrix.from_dense(G, p, p)

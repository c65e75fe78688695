"""Approximate dual bases with banded coefficient matrices.

An approximate dual basis collects functions ``lam_i = sum_j S_ij B_j`` with a
symmetric positive definite, banded S chosen so that every polynomial up to
the space degree is paired exactly as the true (globally supported) duals
would pair it.  That single property is what makes row-sum lumping of the
projection and mass matrices exact.  On mapped domains the duals are divided
by the geometry Jacobian, which restores approximate bi-orthogonality there;
in every integral against the physical measure the two Jacobian factors
cancel, so assembly works with the parametric duals throughout.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lstsq

from .bspline import BandedMatrix, QuadratureRule, assemble_gramian, eval_basis
from .errors import ConstructionError, GeometryError, ParameterError

__all__ = [
    "ExactDualMatrix",
    "ApproxInverse",
    "ConstraintSet",
    "ConstrainedDualBasis",
    "exact_dual_matrix",
    "approx_inverse",
    "eval_modified_duals",
    "apply_constraints",
    "monomial_moments",
]


def monomial_moments(space, kmax, rule=None):
    """m[k, j] = integral xi^k B_j dxi for k = 0..kmax (exact quadrature)."""
    if rule is None:
        rule = QuadratureRule(space.breakpoints, space.p + 1 + (kmax + 1) // 2)
    m = np.zeros((kmax + 1, space.dim))
    pows = np.arange(kmax + 1)
    for e in range(rule.n_elem):
        for x, w in zip(rule.points[e], rule.weights[e]):
            tab, first = eval_basis(space, x)
            m[:, first : first + space.p + 1] += w * (x**pows)[:, None] * tab[0][None, :]
    return m


def _quadrature_tabs(space):
    """Cached per-element basis tables of the default exact rule."""
    rule = QuadratureRule.for_space(space)
    tabs = []
    for e in range(rule.n_elem):
        pts = []
        for x, w in zip(rule.points[e], rule.weights[e]):
            tab, first = eval_basis(space, x)
            pts.append((x, w, tab[0], first))
        tabs.append(pts)
    return tabs


def _legendre_moment_block(space, tabs, window, cols, restrict=True):
    """Rows <L_q(t(.)), B_j> for j in cols, L_q Legendre on the window.

    The affine map t sends the window onto [-1, 1].  With restrict=True only
    elements inside the window contribute (sufficient when every requested
    column is supported there); restrict=False integrates the polynomial
    over the whole domain.
    """
    p = space.p
    lo, hi = window
    cols = np.asarray(cols)
    out = np.zeros((p + 1, cols.size))
    col_of = {j: c for c, j in enumerate(cols)}
    bp = space.breakpoints
    for e in range(len(tabs)):
        if restrict and (bp[e + 1] <= lo or bp[e] >= hi):
            continue
        for x, w, vals, first in tabs[e]:
            t = 2.0 * (x - lo) / (hi - lo) - 1.0
            leg = np.polynomial.legendre.legvander(np.array([t]), p)[0]
            for a in range(p + 1):
                c = col_of.get(first + a)
                if c is not None:
                    out[:, c] += w * vals[a] * leg
    return out


def _coeff_collocation(space, r):
    """Collocation data extracting B-spline coefficient r of any f in P^p.

    Returns (points, inverse-row) so that coefficient r of f equals
    row @ f(points).  Uses Chebyshev points in one element interior to the
    support of B_r; exact for polynomials up to the degree since they lie
    in the spline space.
    """
    p = space.p
    bp = space.breakpoints
    kk = space.kv.knots
    # Elements covered by the support [kk[r], kk[r+p+1]] of B_r.
    lo_e = np.searchsorted(bp, kk[r], side="right") - 1
    hi_e = np.searchsorted(bp, kk[r + p + 1], side="left") - 1
    e_star = (lo_e + hi_e) // 2
    a, b = bp[e_star], bp[e_star + 1]
    k = np.arange(p + 1)
    pts = 0.5 * (a + b) + 0.5 * (b - a) * np.cos(np.pi * (2 * k + 1) / (2 * (p + 1)))
    B = np.zeros((p + 1, p + 1))
    for row, x in enumerate(pts):
        tab, first = eval_basis(space, x)
        B[row] = tab[0]
    local = r - first
    inv_row = np.linalg.solve(B.T, np.eye(p + 1)[local])
    return pts, inv_row


class ExactDualMatrix:
    """Dense inverse Gramian: the coefficient matrix of the exact L2 duals.

    Globally supported; used as the oracle the banded construction is
    verified against.
    """

    def __init__(self, space, gramian, inverse):
        self.space = space
        self.gramian = gramian
        self.inverse = inverse

    def pairings(self, f_moments):
        """<f, lam_i> for each exact dual, given the moments <f, B_j>."""
        return self.inverse @ np.asarray(f_moments, dtype=float)


def exact_dual_matrix(space, rule=None):
    """Exact dual coefficients G^-1 by dense inversion (oracle path)."""
    G = assemble_gramian(space, rule)
    D = np.linalg.inv(G.toarray())
    err = np.abs(G.toarray() @ D - np.eye(space.dim)).max()
    assert err < 1e-9, f"Gramian inversion residual {err:.2e}"
    return ExactDualMatrix(space, G, D)


class ApproxInverse:
    """Banded symmetric approximate inverse of the Gramian.

    ``S.toarray() @ G`` is approximately the identity; exactly so in the
    row-sum sense and when paired with polynomials up to the degree.
    """

    def __init__(self, space, S, band, gramian, duality_residual):
        self.space = space
        self.S = S
        self.band = band
        self.gramian = gramian
        self.duality_residual = duality_residual
        self._dense = S.toarray()

    @property
    def dim(self):
        return self.space.dim

    def rows_dense(self):
        return self._dense

    def row_range(self, first):
        """Range of dual rows active where basis functions first..first+p are."""
        lo = max(0, first - self.band)
        hi = min(self.dim, first + self.space.p + self.band + 1)
        return lo, hi

    def dual_values(self, tab_row, first):
        """Values of the active parametric duals given active basis values."""
        lo, hi = self.row_range(first)
        block = self._dense[lo:hi, first : first + self.space.p + 1]
        return block @ tab_row, lo


def _neumann_band_iterate(G, band, n_corrections):
    n = G.shape[0]
    i, j = np.indices((n, n))
    mask = np.abs(i - j) <= band
    S = np.diag(1.0 / np.diag(G))
    for _ in range(n_corrections):
        S = S @ (2.0 * np.eye(n) - G @ S)
        S[~mask] = 0.0
        S = 0.5 * (S + S.T)
    return S


def _row_window(space, band, i):
    """Parametric union support of the columns dual row i may use."""
    kk, p, n = space.kv.knots, space.p, space.dim
    lo = max(0, i - band)
    hi = min(n - 1, i + band)
    return kk[lo], kk[hi + p + 1]


def approx_inverse(space, rule=None, band=None, n_corrections=2):
    """Construct the banded approximate inverse S of the Gramian.

    Parameters
    ----------
    space : SplineSpace
    rule : QuadratureRule, optional
        Rule for the Gramian; the default is exact.
    band : int, optional
        Half-bandwidth of S, at least p.  The default p gives the classical
        2p+1-diagonal structure and dual functions supported on at most
        3p+1 elements.
    n_corrections : int
        Band-truncated Neumann sweeps S <- S(2I - GS) from S = diag(1/G_ii)
        before the constrained polish.

    The polish projects the iterate onto the affine set {symmetric, banded,
    exact polynomial duality} in the Frobenius metric.  Duality is written
    row by row against Legendre polynomials scaled to the row's support
    window, with targets obtained exactly as B-spline coefficients of those
    polynomials (the L2 projector reproduces them), so no global solve and
    no ill-conditioned moment system is involved.

    Raises
    ------
    ConstructionError
        If the final monomial duality residual exceeds 1e-8 (band too small).
    """
    p, n = space.p, space.dim
    band = p if band is None else int(band)
    if band < p:
        raise ParameterError(f"band must be at least the degree p={p}, got {band}")
    Gb = assemble_gramian(space, rule)
    G = Gb.toarray()

    S0 = _neumann_band_iterate(G, band, n_corrections)
    tabs = _quadrature_tabs(space)

    iu, ju = np.nonzero(np.triu(np.abs(np.subtract.outer(np.arange(n), np.arange(n))) <= band))
    nunk = iu.size
    w = np.where(iu == ju, 1.0, 2.0)            # Frobenius weights
    s0 = S0[iu, ju]
    unk_of = {(a, b): t for t, (a, b) in enumerate(zip(iu, ju))}

    A = np.zeros((n * (p + 1), nunk))
    b = np.zeros(n * (p + 1))
    for r in range(n):
        lo, hi = _row_window(space, band, r)
        cols = np.arange(max(0, r - band), min(n, r + band + 1))
        block = _legendre_moment_block(space, tabs, (lo, hi), cols)
        pts, inv_row = _coeff_collocation(space, r)
        t = 2.0 * (pts - lo) / (hi - lo) - 1.0
        targets = np.polynomial.legendre.legvander(t, p).T @ inv_row
        for q in range(p + 1):
            arow = A[r * (p + 1) + q]
            for c, j in enumerate(cols):
                key = (r, j) if r <= j else (j, r)
                arow[unk_of[key]] += block[q, c]
        b[r * (p + 1) : (r + 1) * (p + 1)] = targets

    # Weighted Frobenius projection onto the constraints (min-norm correction).
    sw = np.sqrt(w)
    Aw = A / sw[None, :]
    y, *_ = lstsq(Aw, b - A @ s0, cond=1e-12, lapack_driver="gelsd")
    s = s0 + y / sw

    S = np.zeros((n, n))
    S[iu, ju] = s
    S[ju, iu] = s
    Sb = BandedMatrix.from_dense(S, band, band)

    mono = monomial_moments(space, p)
    mu_mono = Gb.solve(mono.T).T
    residual = np.abs(S @ mono.T - mu_mono.T).max()
    if residual > 1e-8:
        raise ConstructionError(
            f"polynomial duality residual {residual:.2e} after polish; "
            f"band {band} too small for degree {p}"
        )
    return ApproxInverse(space, Sb, band, Gb, residual)


def eval_modified_duals(dual, x, detj=None):
    """Dense table of modified dual values at parametric points.

    Parameters
    ----------
    dual : ApproxInverse or ConstrainedDualBasis
    x : array of parametric points
    detj : array of Jacobian determinants at x, or None for the parametric
        duals (detj identically one).

    Returns
    -------
    ndarray, shape (len(x), n_duals)
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if detj is None:
        detj = np.ones_like(x)
    else:
        detj = np.atleast_1d(np.asarray(detj, dtype=float))
        if detj.shape != x.shape:
            raise ParameterError("detj must match the evaluation points")
        if np.any(detj <= 0.0):
            raise GeometryError("nonpositive Jacobian at a dual evaluation point")
    space = dual.space
    rows = dual.rows_dense()
    out = np.zeros((x.size, rows.shape[0]))
    for k, xi in enumerate(x):
        tab, first = eval_basis(space, xi)
        out[k] = rows[:, first : first + space.p + 1] @ tab[0] / detj[k]
    return out


class ConstraintSet:
    """Homogeneous linear constraints on the coefficients of a spline space.

    Each row is a linear functional of the coefficient vector (endpoint value
    or derivative); `sides` tags every row 'left' or 'right' so the reduction
    knows which end of the index range it consumes.
    """

    def __init__(self, space, rows, sides):
        rows = np.atleast_2d(np.asarray(rows, dtype=float))
        if rows.size == 0:
            rows = rows.reshape(0, space.dim)
        if rows.shape[1] != space.dim:
            raise ParameterError("constraint rows must match the space dimension")
        if len(sides) != rows.shape[0]:
            raise ParameterError("one side tag per constraint row required")
        if rows.shape[0] and np.linalg.matrix_rank(rows, tol=1e-10) < rows.shape[0]:
            raise ParameterError("constraint rows are rank deficient")
        self.space = space
        self.rows = rows
        self.sides = list(sides)

    @classmethod
    def end_derivatives(cls, space, left=(), right=()):
        """Constrain endpoint derivatives of the given orders to zero."""
        rows = [space.boundary_derivative_row(o, "left") for o in left]
        rows += [space.boundary_derivative_row(o, "right") for o in right]
        sides = ["left"] * len(left) + ["right"] * len(right)
        if not rows:
            return cls(space, np.zeros((0, space.dim)), [])
        return cls(space, np.vstack(rows), sides)

    def __len__(self):
        return self.rows.shape[0]

    @property
    def n_left(self):
        return self.sides.count("left")

    @property
    def n_right(self):
        return self.sides.count("right")


def _end_null_basis(block):
    """Deterministic orthonormal null-space basis of a small constraint block."""
    from scipy.linalg import null_space

    Z = null_space(block, rcond=1e-12)
    # Fix signs: largest-magnitude entry of each column positive.
    for c in range(Z.shape[1]):
        k = np.argmax(np.abs(Z[:, c]))
        if Z[k, c] < 0:
            Z[:, c] = -Z[:, c]
    return Z


def nullspace_extraction(constraints):
    """Banded basis Z of the constrained coefficient space (columns span
    {c : C c = 0}); identity away from the ends.

    Returns (Z, wl, wr): the extraction plus the widths of the end
    coefficient blocks the constraints touch.
    """
    space = constraints.space
    n = space.dim
    C = constraints.rows
    left = [i for i, s in enumerate(constraints.sides) if s == "left"]
    right = [i for i, s in enumerate(constraints.sides) if s == "right"]
    wl = 0
    for i in left:
        nz = np.nonzero(np.abs(C[i]) > 1e-14)[0]
        wl = max(wl, nz[-1] + 1)
    wr = 0
    for i in right:
        nz = np.nonzero(np.abs(C[i]) > 1e-14)[0]
        wr = max(wr, n - nz[0])
    if wl + wr > n:
        raise ParameterError("constraints overlap in the middle of the space")
    cols = []
    if left:
        ZL = _end_null_basis(C[np.array(left)][:, :wl])
        for c in range(ZL.shape[1]):
            col = np.zeros(n)
            col[:wl] = ZL[:, c]
            cols.append(col)
    for j in range(wl, n - wr):
        col = np.zeros(n)
        col[j] = 1.0
        cols.append(col)
    if right:
        ZR = _end_null_basis(C[np.array(right)][:, n - wr :])
        for c in range(ZR.shape[1]):
            col = np.zeros(n)
            col[n - wr :] = ZR[:, c]
            cols.append(col)
    Z = np.array(cols).T
    assert Z.shape == (n, n - len(constraints))
    return Z, wl, wr


class ConstrainedDualBasis:
    """Reduced dual basis satisfying homogeneous boundary constraints.

    Attributes
    ----------
    rows : ndarray, shape (n_reduced, dim)
        Coefficients of each reduced dual in the B-spline basis.
    Z : ndarray, shape (dim, n_reduced)
        Extraction of the correspondingly constrained trial space.
    """

    def __init__(self, space, rows, Z, constraints, gramian):
        self.space = space
        self.rows = rows
        self.Z = Z
        self.constraints = constraints
        self.gramian = gramian

    @property
    def dim(self):
        return self.rows.shape[0]

    def rows_dense(self):
        return self.rows

    def lumped_rowsums(self):
        """Row sums of the reduced projection matrix S_red G Z (all one)."""
        return self.rows @ self.gramian.matvec(self.Z.sum(axis=1))


def apply_constraints(dual, constraints, max_width=None):
    """Reduce an approximate dual basis by homogeneous boundary constraints.

    Solves, row by row, an equality-constrained least-squares problem that
    minimizes the Frobenius change to the dual coefficient rows subject to

    * every reduced dual satisfying all constraints,
    * polynomial duality matching the exact duals of the constrained trial
      space (targets from the reduced Gramian, Legendre moments scaled to
      the full domain),
    * unit pairing with the summed constrained trial basis (keeps row-sum
      lumping exact after the reduction).

    Only rows whose column window reaches a constrained end are recomputed;
    interior rows keep their original coefficients, which already satisfy
    every condition (their windows cannot distinguish the constrained trial
    sum from the constant one).  Near-end windows widen toward the interior
    as needed for feasibility.
    """
    if len(constraints) == 0:
        Z = np.eye(dual.dim)
        return ConstrainedDualBasis(dual.space, dual.rows_dense().copy(), Z, constraints, dual.gramian)
    space = dual.space
    if constraints.space.dim != space.dim:
        raise ParameterError("constraints built for a different space")
    p, n = space.p, space.dim
    band = dual.band
    G = dual.gramian.toarray()
    C = constraints.rows
    n_c = len(constraints)
    if max_width is None:
        max_width = n

    Z, wl, wr = nullspace_extraction(constraints)
    nred = Z.shape[1]
    Gc = Z.T @ G @ Z
    S0 = Z.T @ dual.rows_dense()
    tabs = _quadrature_tabs(space)

    # Representative center of each reduced dual row's window.
    centers = [int(round(np.argmax(np.abs(Z[:, r])))) for r in range(nred)]
    gz1 = G @ Z.sum(axis=1)

    rows = np.zeros((nred, n))
    for r in range(nred):
        c0 = centers[r]
        # S G reaches band + p columns out, so rows closer than that to a
        # constrained end block see the modified trial sum in their row sum.
        near_left = wl > 0 and c0 < wl + band + p
        near_right = wr > 0 and c0 >= n - wr - band - p
        if not (near_left or near_right):
            rows[r] = S0[r]
            continue
        # The window must contain the end block the row interacts with;
        # widening then grows it toward the interior.
        width = min(n, max(2 * band + 1, c0 + band + 1 if near_left else n - c0 + band))
        while True:
            if near_left and near_right:
                lo, hi = 0, n
            elif near_left:
                lo, hi = 0, min(n, width)
            else:
                lo, hi = max(0, n - width), n
            J = np.arange(lo, hi)
            win = (space.kv.knots[lo], space.kv.knots[hi - 1 + p + 1])
            mwin = _legendre_moment_block(space, tabs, win, np.arange(n), restrict=False)
            targets = np.linalg.solve(Gc, Z.T @ mwin.T)[r]
            A = np.vstack([C[:, J], mwin[:, J], gz1[None, J]])
            b = np.concatenate([np.zeros(n_c), targets, [1.0]])
            # Mixed row scales (derivative rows ~ h^-o, moments ~ h): normalize.
            scal = np.linalg.norm(A, axis=1)
            scal[scal == 0.0] = 1.0
            A, b = A / scal[:, None], b / scal
            s0 = S0[r, J]
            # Frobenius projection of s0 onto {A s = b} via pseudo-inverse.
            Ap = np.linalg.pinv(A, rcond=1e-12)
            s = s0 + Ap @ (b - A @ s0)
            resid = np.abs(A @ s - b).max()
            if resid < 1e-9 or width >= min(n, max_width):
                break
            width += 2
        if resid > 1e-9:
            raise ConstructionError(
                f"constrained dual row {r} infeasible within width {width} (residual {resid:.2e})"
            )
        rows[r, J] = s

    out = ConstrainedDualBasis(space, rows, Z, constraints, dual.gramian)
    cn = np.linalg.norm(C, axis=1, keepdims=True)
    viol = np.abs((C / cn) @ rows.T).max()
    assert viol < 1e-8, f"constraint violation {viol:.2e} after reduction"
    return out

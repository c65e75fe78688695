"""Mixed Hellinger-Reissner Kirchhoff-Love shell on a single NURBS patch.

Displacement dofs are interleaved (x, y, z) per control point, with control
points ordered row-major over (u, v).  Each strain component carries its own
reduced tensor-product B-spline space on the displacement breakpoints:
degrees (p-1, p) for the 11 component, (p, p-1) for 22, and (p-1, p-1) for
the shear component, whose coefficients store the engineering (doubled)
value.  Strain coefficient vectors concatenate the three components; the
membrane and bending fields share these spaces, so the petrov strain
pairings for both coincide.

The petrov variant tests the strain equations with Jacobian-modified
approximate duals scaled by the inverse material and thickness.  That
scaling cancels the surface measure and the material from K21/K31, which
become parametric integrals, and turns K22 = K33 into the negated dual
pairing kron(S_u G_u, S_v G_v) per component, whose rows sum to -1 so that
row-sum lumping yields identity strain updates.

Assembly is batched per element: the rational basis tables, surface frames,
and strain-variation rows are computed for all element quadrature points at
once, mirroring the pointwise kernels in `shell` (which remain the tested
reference).  Blocks accumulate as COO triplets flushed periodically to CSR,
so large reference meshes stay within memory.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sps

from .bspline import QuadratureRule, eval_basis
from .dual import approx_inverse
from .errors import GeometryError, ParameterError
from .mixed import MixedBlocks, _check_variant, reduced_strain_space
from .shell import ShellMaterial, ShellPointFrame, shell_geometric_stiffness

__all__ = [
    "ShellMixedModel",
    "grid_dofs",
    "edge_dofs",
    "symmetry_ties",
]

# derivative slots of the per-element basis tables: value, d1, d2, d11, d12, d22
_DERS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def grid_dofs(nu, nv, i=None, j=None, comps=(0, 1, 2)):
    """Displacement dof indices of a control-net slice.

    i, j : int, sequence, slice, or None for the full range of the u and v
    control point indices; comps selects displacement components.  The dof
    layout is 3*(i*nv + j) + c.
    """
    ii = np.atleast_1d(np.arange(nu)[slice(None) if i is None else i])
    jj = np.atleast_1d(np.arange(nv)[slice(None) if j is None else j])
    cc = np.asarray(comps, dtype=int)
    base = 3 * (ii[:, None] * nv + jj[None, :])
    return np.unique((base[..., None] + cc).ravel())


def edge_dofs(nu, nv, side, ring=0, comps=(0, 1, 2)):
    """Dofs of the control-point row `ring` rows inside a patch edge.

    side : one of 'u0', 'u1', 'v0', 'v1', naming the boundary at the start
    or end of each parametric direction.  ring = 0 is the boundary row
    itself, ring = 1 the next row inward (used for clamped and symmetry
    conditions on the rotation).
    """
    if side not in ("u0", "u1", "v0", "v1"):
        raise ParameterError(f"unknown patch side {side!r}")
    count = nu if side[0] == "u" else nv
    if not 0 <= ring < count:
        raise ParameterError(f"ring {ring} out of range for side {side}")
    idx = ring if side[1] == "0" else count - 1 - ring
    if side[0] == "u":
        return grid_dofs(nu, nv, i=idx, comps=comps)
    return grid_dofs(nu, nv, j=idx, comps=comps)


def symmetry_ties(nu, nv, side, comps):
    """Ring-1-to-ring-0 equality pairs along a patch edge.

    A symmetry plane the patch meets perpendicularly leaves the in-plane
    displacement components even across the plane, so their derivative
    normal to the edge vanishes.  Discretely that ties each first-ring
    coefficient to its edge neighbour: pass the two components parallel to
    the plane here, and fix the plane-normal component of ring 0 via
    `edge_dofs`.  Returns (slave, master) dof pairs.
    """
    s0 = edge_dofs(nu, nv, side, 0, comps=comps)
    s1 = edge_dofs(nu, nv, side, 1, comps=comps)
    return list(zip(s1.tolist(), s0.tolist()))


class _Coo:
    """COO triplet accumulator flushed periodically to CSR."""

    LIMIT = 12_000_000

    def __init__(self, shape):
        self.shape = shape
        self._rows = []
        self._cols = []
        self._vals = []
        self._count = 0
        self._mat = None

    def add(self, rows, cols, block):
        self._rows.append(np.repeat(np.asarray(rows, dtype=np.int32), len(cols)))
        self._cols.append(np.tile(np.asarray(cols, dtype=np.int32), len(rows)))
        self._vals.append(np.asarray(block, dtype=float).ravel())
        self._count += self._rows[-1].size
        if self._count > self.LIMIT:
            self._flush()

    def _flush(self):
        if not self._vals:
            return
        chunk = sps.csr_matrix(
            (np.concatenate(self._vals), (np.concatenate(self._rows), np.concatenate(self._cols))),
            shape=self.shape,
        )
        self._mat = chunk if self._mat is None else self._mat + chunk
        self._rows, self._cols, self._vals, self._count = [], [], [], 0

    def csr(self):
        self._flush()
        if self._mat is None:
            return sps.csr_matrix(self.shape)
        return self._mat


def _rational_grid_tables(tu, tv, wloc):
    """Rational basis mixed partials on an element's quadrature grid.

    tu, tv : B-spline tables (nq_dir, 3, p_dir+1) for the element's points.
    Returns (nq, 6, nloc) with the derivative slots of `_DERS`, points
    flattened u-major, local functions flattened v-fastest.
    """
    Bd = np.einsum("xai,ybj->xyabij", tu, tv)
    Wd = np.einsum("xyabij,ij->xyab", Bd, wloc)
    if np.any(Wd[:, :, 0, 0] <= 0.0):
        raise GeometryError("nonpositive rational weight at a quadrature point")
    R = np.zeros_like(Bd)
    for a in range(3):
        for b in range(3 - a):
            acc = wloc[None, None] * Bd[:, :, a, b]
            for i in range(a + 1):
                for j in range(b + 1):
                    if i == 0 and j == 0:
                        continue
                    acc -= (
                        comb(a, i)
                        * comb(b, j)
                        * Wd[:, :, i, j, None, None]
                        * R[:, :, a - i, b - j]
                    )
            R[:, :, a, b] = acc / Wd[:, :, 0, 0, None, None]
    nqu, nqv, _, _, n1, n2 = R.shape
    out = np.empty((nqu * nqv, 6, n1 * n2))
    for s, (a, b) in enumerate(_DERS):
        out[:, s, :] = R[:, :, a, b].reshape(nqu * nqv, n1 * n2)
    return out


@dataclass
class _Frames:
    """Batched surface frames: the array form of ShellPointFrame."""

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
    normA: np.ndarray
    a3: np.ndarray
    norm_n: np.ndarray
    Q: np.ndarray

    def point(self, q):
        """Pointwise view for the scalar kernels."""
        n3 = self.a3[q] * self.norm_n[q]
        return ShellPointFrame(
            A1=self.A1[q], A2=self.A2[q], A11=self.A11[q], A12=self.A12[q], A22=self.A22[q],
            a1=self.a1[q], a2=self.a2[q], a11=self.a11[q], a12=self.a12[q], a22=self.a22[q],
            A3=self.A3[q], normA=float(self.normA[q]), n3=n3,
            norm_n=float(self.norm_n[q]), a3=self.a3[q], Q=self.Q[q],
        )


def _dot(a, b):
    return np.einsum("qi,qi->q", a, b)


def _frames_batch(ref, cur=None):
    """Vectorized frame construction; mirrors `frame_from_derivatives`.

    ref, cur : (nq, 5, 3) stacks of (d1, d2, d11, d12, d22).
    """
    A1, A2, A11, A12, A22 = (ref[:, s] for s in range(5))
    if cur is None:
        a1, a2, a11, a12, a22 = A1, A2, A11, A12, A22
    else:
        a1, a2, a11, a12, a22 = (cur[:, s] for s in range(5))
    N3 = np.cross(A1, A2)
    normA = np.linalg.norm(N3, axis=1)
    if np.any(normA <= 0.0):
        raise GeometryError("degenerate reference surface frame")
    A3 = N3 / normA[:, None]
    n3 = np.cross(a1, a2)
    norm_n = np.linalg.norm(n3, axis=1)
    if np.any(norm_n <= 0.0):
        raise GeometryError("degenerate current surface frame")
    a3 = n3 / norm_n[:, None]

    G11, G12, G22 = _dot(A1, A1), _dot(A1, A2), _dot(A2, A2)
    det = G11 * G22 - G12 * G12
    Au = (G22[:, None] * A1 - G12[:, None] * A2) / det[:, None]
    Av = (G11[:, None] * A2 - G12[:, None] * A1) / det[:, None]
    e1 = A1 / np.linalg.norm(A1, axis=1)[:, None]
    e2 = np.cross(A3, e1)
    t00, t01 = _dot(e1, Au), _dot(e1, Av)
    t10, t11 = _dot(e2, Au), _dot(e2, Av)
    Q = np.empty((ref.shape[0], 3, 3))
    Q[:, 0, 0], Q[:, 0, 1], Q[:, 0, 2] = t00**2, t01**2, t00 * t01
    Q[:, 1, 0], Q[:, 1, 1], Q[:, 1, 2] = t10**2, t11**2, t10 * t11
    Q[:, 2, 0] = 2.0 * t00 * t10
    Q[:, 2, 1] = 2.0 * t01 * t11
    Q[:, 2, 2] = t00 * t11 + t01 * t10
    return _Frames(
        A1=A1, A2=A2, A11=A11, A12=A12, A22=A22,
        a1=a1, a2=a2, a11=a11, a12=a12, a22=a22,
        A3=A3, normA=normA, a3=a3, norm_n=norm_n, Q=Q,
    )


def _strains_batch(fr, dd=None):
    """Membrane and bending strain triples, local Cartesian, (nq, 3) each.

    With the displacement-derivative stack dd = (d1, d2, d11, d12, d22) the
    metric differences are expanded in the increments, which avoids the
    cancellation of nearly equal quadratic terms at small strains.
    """
    if dd is None:
        eps = np.stack(
            [
                0.5 * (_dot(fr.a1, fr.a1) - _dot(fr.A1, fr.A1)),
                0.5 * (_dot(fr.a2, fr.a2) - _dot(fr.A2, fr.A2)),
                _dot(fr.a1, fr.a2) - _dot(fr.A1, fr.A2),
            ],
            axis=1,
        )
        kap = np.stack(
            [
                _dot(fr.A11, fr.A3) - _dot(fr.a11, fr.a3),
                _dot(fr.A22, fr.A3) - _dot(fr.a22, fr.a3),
                2.0 * (_dot(fr.A12, fr.A3) - _dot(fr.a12, fr.a3)),
            ],
            axis=1,
        )
    else:
        d1, d2, d11, d12, d22 = (dd[:, s] for s in range(5))
        eps = np.stack(
            [
                _dot(fr.A1, d1) + 0.5 * _dot(d1, d1),
                _dot(fr.A2, d2) + 0.5 * _dot(d2, d2),
                _dot(fr.A1, d2) + _dot(fr.A2, d1) + _dot(d1, d2),
            ],
            axis=1,
        )
        dn = fr.A3 - fr.a3
        kap = np.stack(
            [
                _dot(fr.A11, dn) - _dot(d11, fr.a3),
                _dot(fr.A22, dn) - _dot(d22, fr.a3),
                2.0 * (_dot(fr.A12, dn) - _dot(d12, fr.a3)),
            ],
            axis=1,
        )
    return np.einsum("qrs,qs->qr", fr.Q, eps), np.einsum("qrs,qs->qr", fr.Q, kap)


def _rows_batch(fr, b1, b2, b11, b12, b22):
    """First-variation matrices (Bm, Bb), each (nq, 3, 3n), local Cartesian.

    b1..b22 : basis derivative tables (nq, n); dof order 3*i + c matches
    the pointwise `shell_strain_rows`.
    """
    nq, n = b1.shape
    Bm = np.zeros((nq, 3, 3 * n))
    Bb = np.zeros((nq, 3, 3 * n))
    for c in range(3):
        Bm[:, 0, c::3] = fr.a1[:, c, None] * b1
        Bm[:, 1, c::3] = fr.a2[:, c, None] * b2
        Bm[:, 2, c::3] = fr.a1[:, c, None] * b2 + fr.a2[:, c, None] * b1
    P = np.eye(3)[None] - fr.a3[:, :, None] * fr.a3[:, None, :]
    for voigt, (aab, bab, scale) in enumerate(
        [(fr.a11, b11, 1.0), (fr.a22, b22, 1.0), (fr.a12, b12, 2.0)]
    ):
        Pa = np.einsum("qab,qb->qa", P, aab)
        w1 = np.cross(fr.a2, Pa) / fr.norm_n[:, None]
        w2 = np.cross(fr.a1, Pa) / fr.norm_n[:, None]
        for c in range(3):
            Bb[:, voigt, c::3] = scale * (
                -fr.a3[:, c, None] * bab - w1[:, c, None] * b1 + w2[:, c, None] * b2
            )
    return np.einsum("qrs,qsi->qri", fr.Q, Bm), np.einsum("qrs,qsi->qri", fr.Q, Bb)


# cache per-element geometry tables up to this many table entries (~200 MB)
_CACHE_ENTRIES = 4_000_000


class ShellMixedModel:
    """Kirchhoff-Love shell with independent strain fields per component.

    The displacement basis is the rational surface basis; boundary
    conditions fix displacement dofs (see `grid_dofs` / `edge_dofs`).
    Both membrane and bending strains are always projected.
    """

    def __init__(self, surface, material, fixed_dofs=(), tied_dofs=()):
        if not isinstance(material, ShellMaterial):
            raise ParameterError("material must be a ShellMaterial")
        su, sv = surface.space_u, surface.space_v
        if su.p < 2 or sv.p < 2:
            raise ParameterError("shell bending requires degree >= 2 in both directions")
        self.surface = surface
        self.material = material
        self.nu, self.nv = su.dim, sv.dim
        n_full = 3 * self.nu * self.nv
        fixed = np.unique(np.asarray(fixed_dofs, dtype=int)) if len(fixed_dofs) else np.empty(0, int)
        if fixed.size and (fixed.min() < 0 or fixed.max() >= n_full):
            raise ParameterError("fixed dof index out of range")
        self._build_reduction(n_full, fixed, tied_dofs)
        self.strain_spaces = (
            (reduced_strain_space(su), reduced_strain_space(sv, drop=0)),
            (reduced_strain_space(su, drop=0), reduced_strain_space(sv)),
            (reduced_strain_space(su), reduced_strain_space(sv)),
        )
        dims = [a.dim * b.dim for a, b in self.strain_spaces]
        self.strain_offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
        self._duals = None
        self._pairing = None
        self._tabulate()

    def _build_reduction(self, n_full, fixed, tied_dofs):
        """Merge tied dofs into shared unknowns; set the reduced dof maps.

        Ties chain transitively (a corner dof tied along both edges joins
        one group), and a group containing any fixed dof is fixed.
        """
        parent = np.arange(n_full)

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for a, b in tied_dofs:
            a, b = int(a), int(b)
            if not (0 <= a < n_full and 0 <= b < n_full):
                raise ParameterError("tied dof index out of range")
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        root = np.array([find(i) for i in range(n_full)])
        reps = np.unique(root)
        self.n_dofs = reps.size
        red_of_root = np.full(n_full, -1, dtype=int)
        red_of_root[reps] = np.arange(reps.size)
        self._red = red_of_root[root]
        if self.n_dofs == n_full:
            self._T = None
        else:
            self._T = sps.csr_matrix(
                (np.ones(n_full), (np.arange(n_full), self._red)), shape=(n_full, self.n_dofs)
            )
        fixed_red = np.unique(self._red[fixed]) if fixed.size else np.empty(0, int)
        self.fixed_dofs = fixed_red
        self.free_dofs = np.setdiff1d(np.arange(self.n_dofs), fixed_red)

    def _to_reduced(self, f):
        """Load-vector pullback: reduced entry sums its group's members."""
        return f if self._T is None else self._T.T @ f

    def _expand(self, coeffs):
        """Full control-point displacement vector of a reduced solution."""
        coeffs = np.asarray(coeffs, dtype=float)
        return coeffs if self._T is None else coeffs[self._red]

    # -- cached quadrature data ---------------------------------------------

    @staticmethod
    def _spline_tables(space, rule, nders):
        """Per-point tables and per-element first indices for one direction."""
        tabs = np.empty((rule.points.size, nders + 1, space.p + 1))
        first = np.empty(rule.n_elem, dtype=int)
        k = 0
        for e in range(rule.n_elem):
            for x in rule.points[e]:
                tab, f = eval_basis(space, x, nders)
                tabs[k] = tab
                k += 1
            first[e] = f
        return tabs, first

    def _tabulate(self):
        su, sv = self.surface.space_u, self.surface.space_v
        ru = QuadratureRule.for_space(su)
        rv = QuadratureRule.for_space(sv)
        self._rules = (ru, rv)
        self._nq = (ru.n_pts, rv.n_pts)
        self._tu, self._fu = self._spline_tables(su, ru, 2)
        self._tv, self._fv = self._spline_tables(sv, rv, 2)
        self._strain_tabs = []
        for a, b in self.strain_spaces:
            ta, fa = self._spline_tables(a, ru, 0)
            tb, fb = self._spline_tables(b, rv, 0)
            self._strain_tabs.append((ta[:, 0], fa, tb[:, 0], fb))
        nloc = (su.p + 1) * (sv.p + 1)
        n_elem = ru.n_elem * rv.n_elem
        self._elements = [(eu, ev) for eu in range(ru.n_elem) for ev in range(rv.n_elem)]
        self._dof_map = np.empty((n_elem, 3 * nloc), dtype=np.int64)
        for idx, (eu, ev) in enumerate(self._elements):
            gi = self._fu[eu] + np.arange(su.p + 1)
            gj = self._fv[ev] + np.arange(sv.p + 1)
            nodes = (gi[:, None] * self.nv + gj[None, :]).ravel()
            self._dof_map[idx] = (3 * nodes[:, None] + np.arange(3)).ravel()
        nq_el = self._nq[0] * self._nq[1]
        self._cache = {} if n_elem * nq_el * 6 * nloc <= _CACHE_ENTRIES else None

    def _element_tables(self, idx):
        if self._cache is not None and idx in self._cache:
            return self._cache[idx]
        eu, ev = self._elements[idx]
        su, sv = self.surface.space_u, self.surface.space_v
        ru, rv = self._rules
        nqu, nqv = self._nq
        tu = self._tu[eu * nqu : (eu + 1) * nqu]
        tv = self._tv[ev * nqv : (ev + 1) * nqv]
        iu = self._fu[eu] + np.arange(su.p + 1)
        iv = self._fv[ev] + np.arange(sv.p + 1)
        wloc = self.surface.weights[np.ix_(iu, iv)]
        R = _rational_grid_tables(tu, tv, wloc)
        Ploc = self.surface.control_points[np.ix_(iu, iv)].reshape(-1, 3)
        ref = np.einsum("qsi,ic->qsc", R[:, 1:6], Ploc)
        pos = R[:, 0] @ Ploc
        jac = np.linalg.norm(np.cross(ref[:, 0], ref[:, 1]), axis=1)
        if np.any(jac <= 0.0):
            raise GeometryError("degenerate surface parametrization at a quadrature point")
        w = np.outer(ru.weights[eu], rv.weights[ev]).ravel()
        tabs = (R, ref, pos, jac, w)
        if self._cache is not None:
            self._cache[idx] = tabs
        return tabs

    def _strain_cols(self, c, eu, ev):
        """Global coefficient indices and point values of component c's basis."""
        a, b = self.strain_spaces[c]
        ta, fa, tb, fb = self._strain_tabs[c]
        nqu, nqv = self._nq
        va = ta[eu * nqu : (eu + 1) * nqu]
        vb = tb[ev * nqv : (ev + 1) * nqv]
        vals = np.einsum("xi,yj->xyij", va, vb).reshape(nqu * nqv, -1)
        gi = fa[eu] + np.arange(a.p + 1)
        gj = fb[ev] + np.arange(b.p + 1)
        cols = (gi[:, None] * b.dim + gj[None, :]).ravel()
        return cols, vals

    # -- duals ---------------------------------------------------------------

    @property
    def duals(self):
        """Per-component pairs of 1D approximate inverses (u factor, v factor)."""
        if self._duals is None:
            built = {}
            out = []
            for axis, pair in enumerate(self.strain_spaces):
                key_u = ("u", pair[0].p)
                key_v = ("v", pair[1].p)
                if key_u not in built:
                    built[key_u] = approx_inverse(pair[0])
                if key_v not in built:
                    built[key_v] = approx_inverse(pair[1])
                out.append((built[key_u], built[key_v]))
            self._duals = tuple(out)
        return self._duals

    def petrov_pairing(self):
        """Per-component (S_2d, S G_2d): dual rows and the parametric pairing.

        Both are exact tensor products of the 1D factors, so the pairing
        rows sum to one without quadrature error.
        """
        if self._pairing is None:
            rows, pairs = [], []
            for du, dv in self.duals:
                sgu = du.rows_dense() @ du.gramian.toarray()
                sgv = dv.rows_dense() @ dv.gramian.toarray()
                rows.append(
                    sps.kron(sps.csr_matrix(du.rows_dense()), sps.csr_matrix(dv.rows_dense()), format="csr")
                )
                pairs.append(sps.kron(sps.csr_matrix(sgu), sps.csr_matrix(sgv), format="csr"))
            self._pairing = (tuple(rows), tuple(pairs))
        return self._pairing

    # -- loads ---------------------------------------------------------------

    def point_load(self, uv, force):
        """External force vector for a point load at parameters (u, v)."""
        R, fu, fv = self.surface.basis(uv[0], uv[1], 0)
        vals = R[0, 0].ravel()
        gi = fu + np.arange(R.shape[2])
        gj = fv + np.arange(R.shape[3])
        nodes = (gi[:, None] * self.nv + gj[None, :]).ravel()
        f = np.zeros(3 * self.nu * self.nv)
        force = np.asarray(force, dtype=float)
        for c in range(3):
            f[3 * nodes + c] = vals * force[c]
        return self._to_reduced(f)

    def area_load(self, load):
        """External force vector for a load per unit reference area.

        load : constant 3-vector, or a callable mapping positions (nq, 3)
        to force densities (nq, 3).
        """
        f = np.zeros(3 * self.nu * self.nv)
        const = None if callable(load) else np.asarray(load, dtype=float)
        for idx in range(len(self._elements)):
            R, ref, pos, jac, w = self._element_tables(idx)
            fv = load(pos) if const is None else np.broadcast_to(const, (pos.shape[0], 3))
            block = np.einsum("q,qi,qc->ic", w * jac, R[:, 0], fv)
            f[self._dof_map[idx]] += block.ravel()
        return self._to_reduced(f)

    def displacement(self, coeffs, uv):
        """Displacement vector of a solution field at parameters (u, v)."""
        R, fu, fv = self.surface.basis(uv[0], uv[1], 0)
        vals = R[0, 0].ravel()
        gi = fu + np.arange(R.shape[2])
        gj = fv + np.arange(R.shape[3])
        nodes = (gi[:, None] * self.nv + gj[None, :]).ravel()
        dofs = (3 * nodes[:, None] + np.arange(3)).ravel()
        return vals @ self._expand(coeffs)[dofs].reshape(-1, 3)

    # -- mass ----------------------------------------------------------------

    def mass(self, kind="consistent"):
        """Displacement mass matrix rho*d, identical blocks per component."""
        su, sv = self.surface.space_u, self.surface.space_v
        ru = QuadratureRule.for_space(su, extra=1)
        rv = QuadratureRule.for_space(sv, extra=1)
        tu, fu = self._spline_tables(su, ru, 2)
        tv, fv = self._spline_tables(sv, rv, 2)
        rho_d = self.material.density * self.material.thickness
        n_full = 3 * self.nu * self.nv
        acc = _Coo((n_full, n_full))
        nqu, nqv = ru.n_pts, rv.n_pts
        for eu in range(ru.n_elem):
            for ev in range(rv.n_elem):
                iu = fu[eu] + np.arange(su.p + 1)
                iv = fv[ev] + np.arange(sv.p + 1)
                wloc = self.surface.weights[np.ix_(iu, iv)]
                R = _rational_grid_tables(
                    tu[eu * nqu : (eu + 1) * nqu],
                    tv[ev * nqv : (ev + 1) * nqv],
                    wloc,
                )
                Ploc = self.surface.control_points[np.ix_(iu, iv)].reshape(-1, 3)
                d1 = R[:, 1] @ Ploc
                d2 = R[:, 2] @ Ploc
                jac = np.linalg.norm(np.cross(d1, d2), axis=1)
                w = np.outer(ru.weights[eu], rv.weights[ev]).ravel()
                block = np.einsum("q,qi,qj->ij", rho_d * w * jac, R[:, 0], R[:, 0])
                nodes = (iu[:, None] * self.nv + iv[None, :]).ravel()
                for c in range(3):
                    acc.add(3 * nodes + c, 3 * nodes + c, block)
        M = acc.csr()
        if self._T is not None:
            M = (self._T.T @ M @ self._T).tocsr()
        if kind == "consistent":
            return M
        if kind == "rowsum":
            return sps.diags(np.asarray(M.sum(axis=1)).ravel()).tocsr()
        raise ParameterError(f"unknown mass kind {kind!r}")

    # -- assembly ------------------------------------------------------------

    @property
    def strain_dims(self):
        m = int(self.strain_offsets[-1])
        return m, m

    @property
    def n_strain(self):
        return int(self.strain_offsets[-1])

    def component_coeffs(self, vec, c):
        """Coefficient grid (dim_u, dim_v) of one strain component field."""
        a, b = self.strain_spaces[c]
        lo, hi = self.strain_offsets[c], self.strain_offsets[c + 1]
        return np.asarray(vec, dtype=float)[lo:hi].reshape(a.dim, b.dim)

    def assemble(self, u, e, k, variant):
        _check_variant(variant)
        D = self.material.matrix
        d = self.material.membrane_scale
        db = self.material.bending_scale
        n = 3 * self.nu * self.nv
        offs = self.strain_offsets
        m = int(offs[-1])
        dims = np.diff(offs)
        ufull = np.zeros(n) if u is None else self._expand(u)
        e = np.zeros(m) if e is None else np.asarray(e, dtype=float)
        k = np.zeros(m) if k is None else np.asarray(k, dtype=float)
        mixed = variant != "displacement_only"
        petrov = variant == "petrov_lumped"
        live = bool(ufull.any()) or (mixed and bool(e.any() or k.any()))

        K11a = _Coo((n, n))
        F_int = np.zeros(n)
        K12a = _Coo((n, m)) if mixed else None
        K13a = _Coo((n, m)) if mixed else None
        if petrov:
            Zm = [_Coo((int(dims[c]), n)) for c in range(3)]
            Zb = [_Coo((int(dims[c]), n)) for c in range(3)]
            F_eps = [np.zeros(int(dims[c])) for c in range(3)]
            F_kap = [np.zeros(int(dims[c])) for c in range(3)]
        elif mixed:
            Wa = _Coo((m, m))
            F_eps = np.zeros(m)
            F_kap = np.zeros(m)

        for idx in range(len(self._elements)):
            eu, ev = self._elements[idx]
            R, ref, pos, jac, w = self._element_tables(idx)
            dofs = self._dof_map[idx]
            wC = w * jac
            if live:
                uloc = ufull[dofs].reshape(-1, 3)
                dd = np.einsum("qsi,ic->qsc", R[:, 1:6], uloc)
                fr = _frames_batch(ref, ref + dd)
            else:
                fr = _frames_batch(ref)
            Bm, Bb = _rows_batch(fr, R[:, 1], R[:, 2], R[:, 3], R[:, 4], R[:, 5])
            if live:
                eps, kap = _strains_batch(fr, dd)

            comps = [self._strain_cols(c, eu, ev) for c in range(3)]
            if mixed:
                if live:
                    e_pt = np.stack(
                        [vals @ e[offs[c] + cols] for c, (cols, vals) in enumerate(comps)], axis=1
                    )
                    k_pt = np.stack(
                        [vals @ k[offs[c] + cols] for c, (cols, vals) in enumerate(comps)], axis=1
                    )
                    nbar = d * (e_pt @ D.T)
                    mbar = db * (k_pt @ D.T)
            else:
                if live:
                    nbar = d * (eps @ D.T)
                    mbar = db * (kap @ D.T)

            if live:
                F_int[dofs] += np.einsum("q,qri,qr->i", wC, Bm, nbar) + np.einsum(
                    "q,qri,qr->i", wC, Bb, mbar
                )
                Kg = np.zeros((dofs.size, dofs.size))
                for q in range(wC.size):
                    Kg += wC[q] * shell_geometric_stiffness(
                        fr.point(q), nbar[q], mbar[q],
                        (R[q, 1], R[q, 2], R[q, 3], R[q, 4], R[q, 5]),
                    )
                K11a.add(dofs, dofs, Kg)

            if not mixed:
                BmD = np.einsum("qri,rs->qsi", Bm, D)
                BbD = np.einsum("qri,rs->qsi", Bb, D)
                Kel = d * np.einsum("q,qsi,qsj->ij", wC, BmD, Bm)
                Kel += db * np.einsum("q,qsi,qsj->ij", wC, BbD, Bb)
                K11a.add(dofs, dofs, Kel)
                continue

            BmD = np.einsum("qri,rc->qci", Bm, D)
            BbD = np.einsum("qri,rc->qci", Bb, D)
            for c, (cols, vals) in enumerate(comps):
                gcols = offs[c] + cols
                K12a.add(dofs, gcols, d * np.einsum("q,qi,qj->ij", wC, BmD[:, c], vals))
                K13a.add(dofs, gcols, db * np.einsum("q,qi,qj->ij", wC, BbD[:, c], vals))
                if petrov:
                    # parametric pairing: measure and material cancel
                    Zm[c].add(cols, dofs, np.einsum("q,qi,qj->ij", w, vals, Bm[:, c]))
                    Zb[c].add(cols, dofs, np.einsum("q,qi,qj->ij", w, vals, Bb[:, c]))
                    if live:
                        F_eps[c][cols] += np.einsum("q,qi,q->i", w, vals, eps[:, c])
                        F_kap[c][cols] += np.einsum("q,qi,q->i", w, vals, kap[:, c])
            if not petrov:
                if live:
                    epsD = eps @ D.T
                    kapD = kap @ D.T
                for c, (cols, vals) in enumerate(comps):
                    if live:
                        F_eps[offs[c] + cols] += d * np.einsum("q,qi,q->i", wC, vals, epsD[:, c])
                        F_kap[offs[c] + cols] += db * np.einsum("q,qi,q->i", wC, vals, kapD[:, c])
                    for r in range(3):
                        if D[c, r] == 0.0 or r < c:
                            continue
                        cr, vr = comps[r]
                        G = np.einsum("q,qi,qj->ij", wC * D[c, r], vals, vr)
                        Wa.add(offs[c] + cols, offs[r] + cr, G)
                        if r > c:
                            Wa.add(offs[r] + cr, offs[c] + cols, G.T)

        K11 = K11a.csr()
        F_int = self._to_reduced(F_int)
        if self._T is not None:
            K11 = (self._T.T @ K11 @ self._T).tocsr()
        if not mixed:
            return MixedBlocks(variant=variant, K11=K11, F_int=F_int)
        K12 = K12a.csr() if self._T is None else (self._T.T @ K12a.csr()).tocsr()
        K13 = K13a.csr() if self._T is None else (self._T.T @ K13a.csr()).tocsr()
        if petrov:
            S2, SG = self.petrov_pairing()
            K21 = sps.vstack([S2[c] @ Zm[c].csr() for c in range(3)], format="csr")
            K31 = sps.vstack([S2[c] @ Zb[c].csr() for c in range(3)], format="csr")
            if self._T is not None:
                K21 = (K21 @ self._T).tocsr()
                K31 = (K31 @ self._T).tocsr()
            K22 = sps.block_diag([-SG[c] for c in range(3)], format="csr")
            K33 = K22
            lump22 = -np.ones(m)
            lump33 = -np.ones(m)
            F_m = np.concatenate([S2[c] @ F_eps[c] for c in range(3)]) - e
            F_b = np.concatenate([S2[c] @ F_kap[c] for c in range(3)]) - k
        else:
            W = Wa.csr()
            K22 = (-d) * W
            K33 = (-db) * W
            K21 = K12.T.tocsr()
            K31 = K13.T.tocsr()
            lump22 = np.asarray(K22.sum(axis=1)).ravel()
            lump33 = np.asarray(K33.sum(axis=1)).ravel()
            if variant == "galerkin_consistent":
                F_m = F_eps + K22 @ e
                F_b = F_kap + K33 @ k
            else:
                F_m = F_eps + lump22 * e
                F_b = F_kap + lump33 * k
        return MixedBlocks(
            variant=variant,
            K11=K11,
            F_int=F_int,
            K12=K12,
            K13=K13,
            K21=K21,
            K31=K31,
            K22=K22,
            K33=K33,
            F_m=F_m,
            F_b=F_b,
            lumped22=lump22,
            lumped33=lump33,
        )

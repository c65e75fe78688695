"""Mixed membrane-bending equilibrium with lumped strain condensation.

The discrete problem couples displacement unknowns to independent membrane
and bending strain fields.  Each Newton step solves

    [K11  K12  K13] [du]   [F_ext - F_int]
    [K21  K22   0 ] [de] = [-F_m]
    [K31   0  K33 ] [dk]   [-F_b]

where K11 carries only the geometric stiffness (the material stiffness
enters through the strain coupling), K12/K13 are tested with the
displacement basis, and the strain rows K21/K31/K22/K33 depend on the
assembly variant:

* ``galerkin_consistent``: strain rows tested with the strain B-splines;
  K22/K33 are (negative) weighted Gramians that must be factorized.
* ``galerkin_lumped``: same rows, but K22/K33 replaced by their row-sum
  diagonal, so strains follow from a division.
* ``petrov_lumped``: strain rows tested with modified approximate duals.
  The material, thickness and Jacobian factors cancel against the test
  scaling, the strain equations are assembled in the parametric domain,
  and row-sum lumping turns K22 = K33 into minus the identity.  Strain
  increments become direct expressions de = K21 du + F_m.
* ``displacement_only``: no strain fields; K11 carries the full material
  plus geometric stiffness (the locking baseline).

Condensing the strain rows yields a displacement-only system

    K = K11 + K12 K21 + K13 K31,   R = F_ext - F_int - K12 F_m - K13 F_b

for the petrov variant (with the general lumped/consistent forms using the
inverse of the lumped diagonal or factorized K22).  The condensed petrov
matrix is unsymmetric; spectra symmetrize it and record the asymmetry.

This module owns the variant dispatch, the planar beam model, Newton
iteration, and spectra; the shell model in `shellmodel` produces the same
block container and reuses everything else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sps
import scipy.sparse.linalg as spsla

from .beam import BeamSection, BeamPointState, beam_strains, beam_strain_rows, beam_geometric_hessian
from .bspline import KnotVector, QuadratureRule, SplineSpace, eval_basis
from .dual import approx_inverse
from .errors import ConvergenceError, NumericalError, ParameterError

__all__ = [
    "VARIANTS",
    "NewtonSettings",
    "SolveReport",
    "MixedBlocks",
    "MixedSolution",
    "SpectrumResult",
    "reduced_strain_space",
    "BeamMixedModel",
    "condense",
    "strain_increments",
    "newton_solve",
    "spectrum",
]

VARIANTS = ("displacement_only", "galerkin_consistent", "galerkin_lumped", "petrov_lumped")
MIXED_VARIANTS = VARIANTS[1:]


def _check_variant(variant):
    if variant not in VARIANTS:
        raise ParameterError(f"unknown assembly variant {variant!r}; expected one of {VARIANTS}")


@dataclass(frozen=True)
class NewtonSettings:
    """Newton iteration controls; all loads here sit in the near-linear regime."""

    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_iter: int = 20
    n_load_steps: int = 1

    def __post_init__(self):
        if self.rel_tol <= 0.0 or self.abs_tol <= 0.0:
            raise ParameterError("Newton tolerances must be positive")
        if self.max_iter < 1 or self.n_load_steps < 1:
            raise ParameterError("max_iter and n_load_steps must be at least 1")


@dataclass
class SolveReport:
    variant: str
    iterations: int
    residuals: list
    converged: bool
    stalled: bool = False


@dataclass
class MixedBlocks:
    """Block system assembled at one displacement/strain state.

    `lumped22`/`lumped33` hold the diagonal of the lumped strain pairing
    (exactly -1 for the petrov variant by construction).  For the
    displacement_only variant all strain blocks are None and K11 contains
    the material stiffness as well.
    """

    variant: str
    K11: object
    F_int: np.ndarray
    K12: object = None
    K13: object = None
    K21: object = None
    K31: object = None
    K22: object = None
    K33: object = None
    F_m: np.ndarray = None
    F_b: np.ndarray = None
    lumped22: np.ndarray = None
    lumped33: np.ndarray = None


@dataclass
class MixedSolution:
    u: np.ndarray
    e: np.ndarray
    k: np.ndarray
    report: SolveReport


def reduced_strain_space(space, drop=1):
    """Spline space of degree p - drop on the same breakpoints, maximal smoothness."""
    q = space.p - drop
    if q < 0:
        raise ParameterError(f"cannot drop {drop} degrees from degree {space.p}")
    bp = space.breakpoints
    knots = np.concatenate([np.full(q + 1, bp[0]), bp[1:-1], np.full(q + 1, bp[-1])])
    return SplineSpace(KnotVector(knots, q))


# ---------------------------------------------------------------------------
# planar beam model


class BeamMixedModel:
    """Curved planar beam: displacement dofs interleaved (x, y) per control point.

    Displacements use the rational basis of the reference curve; both
    independent strain fields live in the degree p-1 B-spline space on the
    same breakpoints.  `project_bending=False` switches to the reduced
    variant that projects only the membrane strain and keeps the bending
    energy displacement-based.
    """

    def __init__(self, curve, section, fixed_dofs=(), project_bending=True):
        if not isinstance(section, BeamSection):
            raise ParameterError("section must be a BeamSection")
        sp = curve.space
        if sp.p < 2:
            raise ParameterError("beam bending requires degree >= 2")
        self.curve = curve
        self.section = section
        self.project_bending = bool(project_bending)
        self.strain_space = reduced_strain_space(sp)
        self.n_dofs = 2 * sp.dim
        fixed = np.unique(np.asarray(fixed_dofs, dtype=int)) if len(fixed_dofs) else np.empty(0, int)
        if fixed.size and (fixed.min() < 0 or fixed.max() >= self.n_dofs):
            raise ParameterError("fixed dof index out of range")
        self.fixed_dofs = fixed
        self.free_dofs = np.setdiff1d(np.arange(self.n_dofs), fixed)
        self._dual = None
        self._K22_petrov = None
        self._tabulate()

    # -- cached quadrature data ---------------------------------------------

    def _tabulate(self):
        sp = self.curve.space
        rule = QuadratureRule.for_space(sp)
        self.qpts = rule.points.ravel()
        self.qwts = rule.weights.ravel()
        nq = self.qpts.size
        p, q = sp.p, self.strain_space.p
        self.bas = np.empty((nq, 3, p + 1))
        self.dof_map = np.empty((nq, 2 * (p + 1)), dtype=int)
        self.A = np.empty((nq, 2))
        self.Ap = np.empty((nq, 2))
        self.jac = np.empty(nq)
        self.ntab = np.empty((nq, q + 1))
        self.nfirst = np.empty(nq, dtype=int)
        for k, x in enumerate(self.qpts):
            tab, first = self.curve.basis(x, 2)
            self.bas[k] = tab
            cols = first + np.arange(p + 1)
            self.dof_map[k, 0::2] = 2 * cols
            self.dof_map[k, 1::2] = 2 * cols + 1
            C = self.curve.eval(x, 2)
            self.A[k], self.Ap[k] = C[1], C[2]
            self.jac[k] = np.linalg.norm(C[1])
            nt, nf = eval_basis(self.strain_space, x)
            self.ntab[k] = nt[0]
            self.nfirst[k] = nf
        self._dvals = None

    @property
    def dual(self):
        if self._dual is None:
            self._dual = approx_inverse(self.strain_space)
        return self._dual

    def _dual_tables(self):
        if self._dvals is None:
            self._dvals = [self.dual.dual_values(self.ntab[k], self.nfirst[k]) for k in range(self.qpts.size)]
        return self._dvals

    @property
    def strain_dims(self):
        m = self.strain_space.dim
        return m, (m if self.project_bending else 0)

    @property
    def n_strain(self):
        return self.strain_space.dim

    # -- loads ---------------------------------------------------------------

    def point_load(self, x, force):
        """External force vector for a point load at parameter x."""
        tab, first = self.curve.basis(x, 0)
        f = np.zeros(self.n_dofs)
        cols = first + np.arange(tab.shape[1])
        for c in range(2):
            f[2 * cols + c] = tab[0] * force[c]
        return f

    def line_load(self, load):
        """External force vector for a load per unit reference arc length.

        `load` maps position (2,) to force density (2,).
        """
        f = np.zeros(self.n_dofs)
        for k, x in enumerate(self.qpts):
            val = np.asarray(load(self.curve.eval(x, 0)[0]), dtype=float)
            f[self.dof_map[k, 0::2]] += self.qwts[k] * self.jac[k] * val[0] * self.bas[k, 0]
            f[self.dof_map[k, 1::2]] += self.qwts[k] * self.jac[k] * val[1] * self.bas[k, 0]
        return f

    # -- mass ----------------------------------------------------------------

    def mass(self, kind="consistent"):
        """Displacement mass matrix: rho*A weighted, both components identical."""
        sp = self.curve.space
        rule = QuadratureRule.for_space(sp, extra=1)
        n = self.n_dofs
        M = np.zeros((n, n))
        rho_a = self.section.density * self.section.area
        for x, w in zip(rule.points.ravel(), rule.weights.ravel()):
            tab, first = self.curve.basis(x, 0)
            J = self.curve.jacobian(x)
            cols = first + np.arange(tab.shape[1])
            block = rho_a * w * J * np.outer(tab[0], tab[0])
            for c in range(2):
                M[np.ix_(2 * cols + c, 2 * cols + c)] += block
        if kind == "consistent":
            return M
        if kind == "rowsum":
            return np.diag(M.sum(axis=1))
        raise ParameterError(f"unknown mass kind {kind!r}")

    # -- assembly ------------------------------------------------------------

    def petrov_pairing(self):
        """Parametric dual pairing S G of the strain space (rows sum to one)."""
        if self._K22_petrov is None:
            self._K22_petrov = self.dual.rows_dense() @ self.dual.gramian.toarray()
        return self._K22_petrov

    def assemble(self, u, e, k, variant):
        _check_variant(variant)
        EA = self.section.axial_stiffness
        EI = self.section.bending_stiffness
        n, m = self.n_dofs, self.n_strain
        me, mk = self.strain_dims
        u = np.zeros(n) if u is None else np.asarray(u, dtype=float)
        e = np.zeros(me) if e is None else np.asarray(e, dtype=float)
        k = np.zeros(mk) if k is None else np.asarray(k, dtype=float)
        mixed = variant != "displacement_only"
        petrov = variant == "petrov_lumped"
        K11 = np.zeros((n, n))
        F_int = np.zeros(n)
        K12 = np.zeros((n, me)) if mixed else None
        K13 = np.zeros((n, mk)) if mixed and mk else None
        K21 = np.zeros((me, n)) if petrov else None
        K31 = np.zeros((mk, n)) if petrov and mk else None
        F_eps = np.zeros(me) if mixed else None
        F_kap = np.zeros(mk) if mixed and mk else None
        G22 = np.zeros((me, me)) if variant.startswith("galerkin") else None
        dtabs = self._dual_tables() if petrov else None

        q1 = self.strain_space.p + 1
        for iq in range(self.qpts.size):
            w = self.qwts[iq]
            J = self.jac[iq]
            dofs = self.dof_map[iq]
            b0, b1, b2 = self.bas[iq]
            uloc = u[dofs]
            du1 = np.array([uloc[0::2] @ b1, uloc[1::2] @ b1])
            du2 = np.array([uloc[0::2] @ b2, uloc[1::2] @ b2])
            st = BeamPointState(A=self.A[iq], Ap=self.Ap[iq], a=self.A[iq] + du1, ap=self.Ap[iq] + du2)
            eps, kap = beam_strains(st)
            row_eps, row_kap = beam_strain_rows(st, b1, b2)
            ncols = self.nfirst[iq] + np.arange(q1)
            nvals = self.ntab[iq]
            if mixed:
                e_h = e[ncols] @ nvals
                k_h = k[ncols] @ nvals if mk else kap
            else:
                e_h, k_h = eps, kap
            n_bar = EA * e_h
            m_bar = EI * k_h
            ix = np.ix_(dofs, dofs)
            K11[ix] += (w * J) * beam_geometric_hessian(st, n_bar, m_bar, b1, b2)
            F_int[dofs] += (w * J) * (n_bar * row_eps + m_bar * row_kap)
            project_b = mixed and mk
            if not mixed or not self.project_bending:
                K11[ix] += (w * J * EI) * np.outer(row_kap, row_kap)
            if not mixed:
                K11[ix] += (w * J * EA) * np.outer(row_eps, row_eps)
                continue
            K12[np.ix_(dofs, ncols)] += (w * J * EA) * np.outer(row_eps, nvals)
            if project_b:
                K13[np.ix_(dofs, ncols)] += (w * J * EI) * np.outer(row_kap, nvals)
            if petrov:
                dv, lo = dtabs[iq]
                rows = np.arange(lo, lo + dv.size)
                K21[np.ix_(rows, dofs)] += w * np.outer(dv, row_eps)
                F_eps[rows] += w * dv * eps
                if project_b:
                    K31[np.ix_(rows, dofs)] += w * np.outer(dv, row_kap)
                    F_kap[rows] += w * dv * kap
            else:
                nx = np.ix_(ncols, ncols)
                G22[nx] += (w * J) * np.outer(nvals, nvals)
                F_eps[ncols] += (w * J * EA) * nvals * eps
                if project_b:
                    F_kap[ncols] += (w * J * EI) * nvals * kap

        if not mixed:
            return MixedBlocks(variant=variant, K11=K11, F_int=F_int)

        if petrov:
            SG = self.petrov_pairing()
            K22 = -SG
            K33 = K22 if mk else None
            lump22 = -np.ones(me)
            lump33 = -np.ones(mk) if mk else None
            F_m = F_eps - e
            F_b = (F_kap - k) if mk else None
        else:
            K21 = K12.T.copy()
            K22 = -EA * G22
            K33 = -EI * G22 if mk else None
            K31 = K13.T.copy() if mk else None
            lump22 = K22.sum(axis=1)
            lump33 = K33.sum(axis=1) if mk else None
            if variant == "galerkin_consistent":
                F_m = F_eps + K22 @ e
                F_b = F_kap + K33 @ k if mk else None
            else:
                F_m = F_eps + lump22 * e
                F_b = F_kap + lump33 * k if mk else None
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


# ---------------------------------------------------------------------------
# condensation and Newton iteration


def _scale_rows(A, s):
    """Rows of A divided by s, for dense or sparse A."""
    if sps.issparse(A):
        return sps.diags(1.0 / s) @ A
    return A / s[:, None]


def _solve22(K, B):
    """Solve K X = B for the consistent strain pairing (dense reference path)."""
    Kd = K.toarray() if sps.issparse(K) else K
    Bd = B.toarray() if sps.issparse(B) else B
    try:
        return scipy.linalg.solve(Kd, Bd, assume_a="sym")
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise NumericalError(f"strain pairing factorization failed: {exc}") from exc


def condense(blocks, f_ext):
    """Reduce the block system to a displacement-only (K, R) pair.

    Lumped variants need no factorization; the consistent variant
    factorizes K22/K33 and is the documented expensive reference path.
    """
    v = blocks.variant
    if v == "displacement_only":
        return blocks.K11, f_ext - blocks.F_int
    if v == "petrov_lumped":
        K = blocks.K11 + blocks.K12 @ blocks.K21
        R = f_ext - blocks.F_int - blocks.K12 @ blocks.F_m
        if blocks.K13 is not None:
            K = K + blocks.K13 @ blocks.K31
            R = R - blocks.K13 @ blocks.F_b
        return K, R
    if v == "galerkin_lumped":
        K = blocks.K11 - blocks.K12 @ _scale_rows(blocks.K21, blocks.lumped22)
        R = f_ext - blocks.F_int + blocks.K12 @ (blocks.F_m / blocks.lumped22)
        if blocks.K13 is not None:
            K = K - blocks.K13 @ _scale_rows(blocks.K31, blocks.lumped33)
            R = R + blocks.K13 @ (blocks.F_b / blocks.lumped33)
        return K, R
    # galerkin_consistent
    K = blocks.K11 - blocks.K12 @ _solve22(blocks.K22, blocks.K21)
    R = f_ext - blocks.F_int + blocks.K12 @ _solve22(blocks.K22, blocks.F_m)
    if blocks.K13 is not None:
        K = K - blocks.K13 @ _solve22(blocks.K33, blocks.K31)
        R = R + blocks.K13 @ _solve22(blocks.K33, blocks.F_b)
    return K, R


def strain_increments(blocks, du):
    """Strain updates for a displacement increment (direct for lumped variants)."""
    v = blocks.variant
    if v == "displacement_only":
        return np.zeros(0), np.zeros(0)
    if v == "petrov_lumped":
        de = blocks.K21 @ du + blocks.F_m
        dk = blocks.K31 @ du + blocks.F_b if blocks.K31 is not None else np.zeros(0)
        return de, dk
    if v == "galerkin_lumped":
        de = -(blocks.F_m + blocks.K21 @ du) / blocks.lumped22
        dk = (
            -(blocks.F_b + blocks.K31 @ du) / blocks.lumped33
            if blocks.K31 is not None
            else np.zeros(0)
        )
        return de, dk
    de = -_solve22(blocks.K22, blocks.F_m + blocks.K21 @ du)
    dk = (
        -_solve22(blocks.K33, blocks.F_b + blocks.K31 @ du)
        if blocks.K31 is not None
        else np.zeros(0)
    )
    return de, dk


def _reduced(K, free):
    if sps.issparse(K):
        return K.tocsr()[free][:, free]
    return K[np.ix_(free, free)]


def _solve_reduced(K, r):
    if sps.issparse(K):
        return spsla.spsolve(K.tocsc(), r)
    return scipy.linalg.solve(K, r)


def _monolithic_step(blocks, r_u, free):
    """Full block solve for the consistent variant; returns (du_free, de, dk)."""
    me = blocks.F_m.size
    has_b = blocks.K31 is not None
    mk = blocks.F_b.size if has_b else 0
    sparse = sps.issparse(blocks.K11)
    if sparse:
        K11 = blocks.K11.tocsr()[free][:, free]
        K12 = blocks.K12.tocsr()[free]
        K21 = blocks.K21.tocsc()[:, free]
        rows = [[K11, K12, blocks.K13.tocsr()[free] if has_b else None],
                [K21, blocks.K22, None],
                [blocks.K31.tocsc()[:, free] if has_b else None, None, blocks.K33 if has_b else None]]
        if not has_b:
            rows = [r[:2] for r in rows[:2]]
        A = sps.bmat(rows, format="csc")
        rhs = np.concatenate([r_u[free], -blocks.F_m] + ([-blocks.F_b] if has_b else []))
        sol = spsla.spsolve(A, rhs)
    else:
        nf = free.size
        size = nf + me + mk
        A = np.zeros((size, size))
        A[:nf, :nf] = blocks.K11[np.ix_(free, free)]
        A[:nf, nf:nf + me] = blocks.K12[free]
        A[nf:nf + me, :nf] = blocks.K21[:, free]
        A[nf:nf + me, nf:nf + me] = blocks.K22
        if has_b:
            A[:nf, nf + me:] = blocks.K13[free]
            A[nf + me:, :nf] = blocks.K31[:, free]
            A[nf + me:, nf + me:] = blocks.K33
        rhs = np.concatenate([r_u[free], -blocks.F_m] + ([-blocks.F_b] if has_b else []))
        sol = scipy.linalg.solve(A, rhs)
    nf = free.size
    return sol[:nf], sol[nf:nf + me], sol[nf + me:]


STALL_REL = 1e-6


def newton_solve(model, f_ext, variant, settings=None):
    """Newton iteration at fixed load; returns the converged MixedSolution.

    Convergence is measured on the displacement equilibrium residual over
    the free dofs, relative to the load norm; the strain equations are
    updated every iteration and track quadratically.  An iteration that
    stops improving while already at the solver's round-off floor (below
    1e-6 relative) is accepted and reported as stalled, which the
    ill-conditioned displacement_only variant hits on slender beams.
    """
    _check_variant(variant)
    settings = NewtonSettings() if settings is None else settings
    f_ext = np.asarray(f_ext, dtype=float)
    me, mk = (0, 0) if variant == "displacement_only" else model.strain_dims
    u = np.zeros(model.n_dofs)
    e = np.zeros(me)
    k = np.zeros(mk)
    free = model.free_dofs
    ref = np.linalg.norm(f_ext[free])
    tol = max(settings.rel_tol * ref, settings.abs_tol)
    residuals = []
    for it in range(1, settings.max_iter + 1):
        blocks = model.assemble(u, e, k, variant)
        r_u = f_ext - blocks.F_int
        rn = float(np.linalg.norm(r_u[free]))
        residuals.append(rn)
        if rn <= tol:
            return MixedSolution(u, e, k, SolveReport(variant, it, residuals, True))
        if it >= 3 and rn <= STALL_REL * max(ref, settings.abs_tol):
            if rn > 0.25 * residuals[-2] and rn > 0.25 * residuals[-3]:
                return MixedSolution(u, e, k, SolveReport(variant, it, residuals, True, stalled=True))
        if variant == "galerkin_consistent":
            du_f, de, dk = _monolithic_step(blocks, r_u, free)
        else:
            K, R = condense(blocks, f_ext)
            du_f = _solve_reduced(_reduced(K, free), R[free])
            du = np.zeros(model.n_dofs)
            du[free] = du_f
            de, dk = strain_increments(blocks, du)
        u[free] += du_f
        e += de
        k += dk
    raise ConvergenceError(
        f"Newton did not reach tol {tol:.3e} in {settings.max_iter} iterations", residuals
    )


# ---------------------------------------------------------------------------
# spectra


@dataclass
class SpectrumResult:
    """Sorted generalized eigenvalues after rigid-mode removal."""

    eigenvalues: np.ndarray
    n_removed: int
    asymmetry: float
    variant: str = ""

    @property
    def n_modes(self):
        return self.eigenvalues.size

    def normalized(self, reference):
        """Mode fractions n/N and eigenvalue ratios against a reference array."""
        ref = np.asarray(reference, dtype=float)
        n = min(self.eigenvalues.size, ref.size)
        frac = (1.0 + np.arange(n)) / self.n_modes
        return frac, self.eigenvalues[:n] / ref[:n]


RIGID_TOL = 1e-8
IMAG_TOL = 1e-6


def spectrum(model, variant, n_rigid=0):
    """Generalized vibration eigenvalues of the condensed stiffness at zero state.

    All variants pair with the consistent mass.  The petrov condensed
    matrix is unsymmetric, so that path runs a nonsymmetric generalized
    eigensolve; the relative asymmetry is recorded either way.  Modes with
    |lambda| < 1e-8 * lambda_max are removed as rigid; their count must
    match ``n_rigid``.
    """
    _check_variant(variant)
    blocks = model.assemble(None, None, None, variant)
    K, _ = condense(blocks, np.zeros(model.n_dofs))
    free = model.free_dofs
    Kr = _reduced(K, free)
    if sps.issparse(Kr):
        Kr = Kr.toarray()
    asym = float(np.linalg.norm(Kr - Kr.T) / max(np.linalg.norm(Kr), 1e-300))
    M = model.mass("consistent")
    if sps.issparse(M):
        M = M.toarray()
    Mr = M[np.ix_(free, free)]
    if variant == "petrov_lumped":
        lam = scipy.linalg.eig(Kr, Mr, right=False)
        scale = float(np.abs(lam.real).max())
        if np.abs(lam.imag).max() > IMAG_TOL * scale:
            raise NumericalError("complex eigenvalues beyond tolerance in petrov spectrum")
        lam = np.sort(lam.real)
    else:
        lam = scipy.linalg.eigh(0.5 * (Kr + Kr.T), Mr, eigvals_only=True)
    lmax = float(lam.max())
    if lam.min() < -RIGID_TOL * lmax:
        raise NumericalError(f"negative eigenvalue {lam.min():.3e} beyond rigid-mode tolerance")
    keep = np.abs(lam) >= RIGID_TOL * lmax
    removed = int((~keep).sum())
    if removed != n_rigid:
        raise NumericalError(f"removed {removed} near-zero modes, expected {n_rigid}")
    return SpectrumResult(
        eigenvalues=np.sort(lam[keep]),
        n_removed=removed,
        asymmetry=asym,
        variant=variant,
    )


def reference_lowest_eigenvalue(model, variant="galerkin_consistent", n_iter=50):
    """Lowest vibration eigenvalue by inverse iteration with a Rayleigh quotient.

    On fine reference meshes the spectral spread makes a dense eigensolve
    unreliable in the lowest mode (its absolute error scales with the top
    of the spectrum).  Inverse iteration keeps the iterate smooth and the
    Rayleigh quotient is then accurate to the local stiffness scale.
    """
    _check_variant(variant)
    blocks = model.assemble(None, None, None, variant)
    K, _ = condense(blocks, np.zeros(model.n_dofs))
    free = model.free_dofs
    Kr = _reduced(K, free)
    if sps.issparse(Kr):
        Kr = Kr.toarray()
    Kr = np.asarray(Kr)
    M = model.mass("consistent")
    if sps.issparse(M):
        M = M.toarray()
    Mr = M[np.ix_(free, free)]
    lu = scipy.linalg.lu_factor(0.5 * (Kr + Kr.T))
    rng = np.random.default_rng(0)
    v = rng.standard_normal(free.size)
    lam = 0.0
    for _ in range(n_iter):
        w = scipy.linalg.lu_solve(lu, Mr @ v)
        v = w / np.sqrt(w @ (Mr @ w))
        new = (v @ (Kr @ v)) / (v @ (Mr @ v))
        if lam and abs(new - lam) <= 1e-14 * abs(new):
            lam = new
            break
        lam = new
    if not np.isfinite(lam) or lam <= 0.0:
        raise NumericalError("inverse iteration failed to produce a positive eigenvalue")
    return float(lam)

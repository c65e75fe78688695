"""Isogeometric beams and Kirchhoff-Love shells with dual-basis strain projection."""

__version__ = "0.1.0"

from .errors import (
    ConstructionError,
    ConvergenceError,
    DivergenceError,
    DomainError,
    GeometryError,
    NumericalError,
    ParameterError,
)
from .bspline import (
    BandedMatrix,
    KnotVector,
    QuadratureRule,
    SplineSpace,
    assemble_gramian,
    eval_basis,
    insert_knot,
    make_open_knots,
)
from .dual import (
    ApproxInverse,
    ConstrainedDualBasis,
    ConstraintSet,
    ExactDualMatrix,
    apply_constraints,
    approx_inverse,
    eval_modified_duals,
    exact_dual_matrix,
    monomial_moments,
)
from .geometry import (
    BENCHMARK_NAMES,
    NurbsCurve,
    NurbsSurface,
    benchmark_patch,
    circular_arc,
    extrude_curve,
    patch_from_json,
    revolve_curve,
    straight_line,
)
from .beam import (
    BeamPointState,
    BeamSection,
    beam_geometric_hessian,
    beam_point_state,
    beam_strain_rows,
    beam_strains,
)
from .projection import (
    dual_pairing_matrix,
    fit_rate,
    l2_error,
    mapped_mass_matrix,
    project,
    projection_study,
)
from .shell import (
    ShellMaterial,
    ShellPointFrame,
    frame_from_derivatives,
    material_matrix,
    shell_geometric_stiffness,
    shell_point_frame,
    shell_strain_rows,
    shell_strains,
    shell_stress_resultants,
)
from .mixed import (
    BeamMixedModel,
    MixedBlocks,
    MixedSolution,
    NewtonSettings,
    SolveReport,
    SpectrumResult,
    VARIANTS,
    condense,
    newton_solve,
    reduced_strain_space,
    spectrum,
    strain_increments,
)
from .shellmodel import (
    ShellMixedModel,
    edge_dofs,
    grid_dofs,
    symmetry_ties,
)

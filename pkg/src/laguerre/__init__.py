"""Numerical Laguerre geometry: Blaschke potentials, middle frames and T-transforms.

Typical use::

    from laguerre import Grid, seed_potential, run_pipeline
    p = seed_potential("radial", Grid.square(65), c=1.0, k=1.0)
    res = run_pipeline(p, m=1.0)
    res.quadric.rho, res.cmc.H_abs_mean   # about -0.25 and 2
"""
from .blaschke import (
    ClosednessError,
    ConvergenceError,
    DomainError,
    Potential,
    blaschke_residual,
    integrate_eta,
    invariants_from_potential,
    liouville_residual,
    newton_solve_liouville,
    seed_potential,
)
from .cyclographic import (
    ContactElement,
    IsotropicLine,
    OrientedPlane,
    OrientedSphere,
    contact_to_line,
    line_to_contact,
    pair_relation,
    point_to_sphere,
    sphere_to_point,
)
from .fields import Grid, ScalarField
from .frames import (
    FlatnessError,
    FrameField,
    assemble_alpha,
    flatness_residual,
    frame_drift,
    integrate_frame,
    realize_legendre,
)
from .geometry import (
    cmc_in_quadric,
    differentials,
    export_mesh,
    hyperplane_detect,
    lawson_table,
    middle_sphere_check,
    quadric_detect,
    run_pipeline,
)
from .minkowski import (
    AlgebraElement,
    InvalidElement,
    LaguerreElement,
    LaguerreFrame,
    causal_character,
    group_op,
    lorentz_dot,
    validate_frame,
    validate_laguerre_linear,
)

__version__ = "0.1.0"

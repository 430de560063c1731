"""finslermt: numerical laboratory for anisotropic Moser-Trudinger functionals.

Finsler norm duality and Wulff geometry, convex symmetrization, the
n-Finsler-Laplacian (energies, Dirichlet solves, first eigenpair, Green
constants), the perturbed exponential functional with its subcritical
maximizers, and the explicit concentration families with their sharp
constants.
"""

from .norms import (
    FinslerNorm,
    WulffBall,
    duality_check,
    euclidean,
    kappa_n,
    lambda_n,
    quadratic_form,
    sampled_support,
    weighted_p_norm,
)
from .grid import (
    GridFunction,
    disk_domain,
    polygon_domain,
    rectangle_domain,
    square_domain,
    wulff_domain,
)
from .symmetrize import (
    LevelSetStats,
    anisotropic_perimeter,
    coarea_check,
    convex_symmetrize,
    decreasing_rearrangement,
    isoperimetric_ratio,
    level_set_stats,
)
from .pde import (
    EigenPair,
    dirichlet_energy,
    dirichlet_solve,
    first_eigenpair,
    green_function,
    qn_residual,
    rayleigh_quotient,
)
from .bubble import RadialFunction, bubble, bubble_mass, bubble_residual
from .functional import (
    MTConfig,
    MTReport,
    concentration_diagnostics,
    el_verify,
    evaluate_J,
    maximize_subcritical,
)
from .families import (
    MoserSchedule,
    RadialGluedFamily,
    RadialMoserFamily,
    bound_sandwich,
    build_glued_bubble,
    build_moser_sequence,
    divergence_demo,
    harmonic_identities,
)

__all__ = [
    "EigenPair",
    "FinslerNorm",
    "GridFunction",
    "LevelSetStats",
    "MTConfig",
    "MTReport",
    "MoserSchedule",
    "RadialFunction",
    "RadialGluedFamily",
    "RadialMoserFamily",
    "WulffBall",
    "anisotropic_perimeter",
    "bound_sandwich",
    "bubble",
    "bubble_mass",
    "bubble_residual",
    "build_glued_bubble",
    "build_moser_sequence",
    "coarea_check",
    "concentration_diagnostics",
    "convex_symmetrize",
    "decreasing_rearrangement",
    "dirichlet_energy",
    "dirichlet_solve",
    "disk_domain",
    "divergence_demo",
    "duality_check",
    "el_verify",
    "euclidean",
    "evaluate_J",
    "first_eigenpair",
    "green_function",
    "harmonic_identities",
    "isoperimetric_ratio",
    "kappa_n",
    "lambda_n",
    "level_set_stats",
    "maximize_subcritical",
    "polygon_domain",
    "qn_residual",
    "quadratic_form",
    "rayleigh_quotient",
    "rectangle_domain",
    "sampled_support",
    "square_domain",
    "weighted_p_norm",
    "wulff_domain",
]

__version__ = "0.1.0"

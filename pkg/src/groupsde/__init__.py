"""Exact verification of twisted random recursions eta_k = xi_k phi(eta_{k-1})
on finite groups, plus Monte-Carlo experiments on the circle and 2-torus."""

from .errors import GroupSdeError
from .groups import (
    Automorphism,
    FiniteGroup,
    SdElement,
    Subgroup,
    build_automorphism,
    build_group,
    right_cosets,
    semidirect_inv,
    semidirect_mul,
    subgroup_closure,
)
from .measures import RationalMeasure, convolve, haar, pushforward, reverse
from .sde import (
    compute_Kmu,
    exists_solution,
    extremal_solutions,
    make_model,
    noise_product,
    solution_family,
    solution_from_limit,
    verify_solution,
)

__version__ = "0.1.0"

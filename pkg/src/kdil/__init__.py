"""Krein-space dilations of alpha-completely positive maps and their phi-maps."""

from .algebra import (
    AlgebraElement,
    FiniteCStarAlgebra,
    StarInvolutiveAutomorphism,
    alpha_from_expectation,
    identity_alpha,
    inner_alpha_matrix,
    permutation_alpha_matrix,
    verify_automorphism,
)
from .covariant import (
    CovariantDilation,
    FiniteGroup,
    PseudoUnitaryRep,
    covariant_construct,
    covariant_equivalence,
    verify_covariance,
    verify_rep,
)
from .crossed import CrossedModule, CrossedProductAlgebra, induce_crossed_maps
from .errors import KdilError
from .hmodule import FreeHilbertModule, ModuleAction, make_action, verify_action_compatibility
from .krein import KreinOperator, KreinSpace, sharp, verify_fundamental_symmetry, verify_pseudo_unitary
from .ksgns import KsgnsDilation, construct_ksgns, unitary_equivalence, verify_ksgns
from .maps import (
    AlphaCPMap,
    PhiMap,
    build_from_dilation,
    generate_instances,
    generate_phi_instances,
    make_alpha_cp,
    make_phi_map,
    phi_map_from_factorization,
    verify_alpha_cp,
    verify_phi_map,
)
from .numkit import DEFAULT_TOL, TolerancePolicy
from .report import Check, Report, emit_report
from .serialize import parse_instance

__version__ = "0.1.0"

"""Exact computations with representations up to homotopy of finite groupoids."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .exactla import RationalMatrix, SubspaceBasis, kernel_basis, image_basis, rank, solve
from .groupoid import (FiniteGroupoid, GroupoidMorphism, GSpace, HaarCutoff, action_groupoid,
                       cyclic_group, group_groupoid, haar_cutoff, identity_functor, inclusion_of_units,
                       pair_groupoid, symmetric_group, unit_groupoid, disjoint_union)
from .cochains import GradedBundle, Tensor, star, dhat0
from .rep import (RepUpToHomotopy, RuthMorphism, cohomology, ordinary_rep, structure_operator,
                  trivial_rep, verify_morphism, verify_structure, is_unital)
from .operations import (dualize, direct_sum, gauge_transform, hom_complex, mapping_cone, pullback,
                         shift, strict_symmetric_power)
from .homotopy import contract_ruth, invert_quasi_iso, transfer_to_cohomology
from .spectral import e2_compare, kappa, pages, vanishing_check
from .resolution import banal_check, check_resolution, resolution
from .io import dumps, load, parse, serialize

"""Holomorphic approximation with exact interpolation on planar compacts.

The building blocks are a discrete Cauchy transform that solves the dbar
equation, additive and multiplicative splitting across a good pair of
compacts, a Newton solver for the nonlinear gluing problem, and pipelines
that patch local approximants into one holomorphic section on a
neighbourhood of K.
"""

__version__ = "0.1.0"

from .compacts import (DiscretizedCompact, GeometryError, GoodPairContext, SetPrimitive,
                       build_compact, choose_generic_direction, slab_decompose,
                       validate_good_pair)
from .spaces import InterpolationSet, SampledMap, cr_residual, fit_polynomial, sup_norm
from .dbar import CauchyKernelPlan, cauchy_transform, solve_dbar
from .cousin import AdditiveSplitter, split_additive
from .cartan import CartanError, GroupMapSample, split_multiplicative
from .newton import OperatorProblem, solve_surjective
from .patching import (PatchingError, SectionChart, TransitionMap, glue_good_pair,
                       patch_sections)
from .combinatorics import (NerveGraph, bipartize_by_splitting, cycle_basis, nerve,
                            refine_cover_split, suppress_degree_two, two_color)
from .config import ConfigError, PipelineConfig, read_config
from .pipelines import (DEMOS, Approximant, PipelineError, RunReport, a3_to_a2, demo_c2,
                        demo_domain, demo_graph, demo_zero_dim, run_fixture)
from .kernels import BACKEND

__all__ = [
    "AdditiveSplitter", "Approximant", "BACKEND", "CartanError", "CauchyKernelPlan", "ConfigError",
    "DEMOS", "DiscretizedCompact", "GeometryError", "GoodPairContext", "GroupMapSample",
    "InterpolationSet", "NerveGraph", "OperatorProblem", "PatchingError", "PipelineConfig",
    "PipelineError", "RunReport", "SampledMap", "SectionChart", "SetPrimitive", "TransitionMap",
    "a3_to_a2", "bipartize_by_splitting", "build_compact", "cauchy_transform",
    "choose_generic_direction", "cr_residual", "cycle_basis", "demo_c2", "demo_domain",
    "demo_graph", "demo_zero_dim", "fit_polynomial", "glue_good_pair", "nerve",
    "patch_sections", "read_config", "refine_cover_split", "run_fixture", "slab_decompose",
    "solve_dbar", "solve_surjective", "split_additive", "split_multiplicative",
    "suppress_degree_two", "sup_norm", "two_color", "validate_good_pair",
]

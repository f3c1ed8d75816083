"""Finite, checkable versions of covering-dimension constructions and of
embeddings of n-dimensional complexes into R^(2n+1)."""

from .covers import (
    Cover,
    CoverError,
    CubeCoverSpec,
    RefinerContractError,
    cube_cover,
    dimension_upper_bound,
    lebesgue_number,
    merge_refinements,
    order,
    order_in,
    refines,
    staged_cover,
    star_cover,
    star_refiner,
)
from .embed import EmbeddingCertificate, PerturbationReport, embed_iterative, perturb_step, pl_embed, verify_embedding
from .geometry import (
    Intersection,
    PointSet,
    delta_metric,
    is_affinely_independent,
    is_general_position,
    perturb_to_general_position,
    rho_metric,
    simplices_disjoint,
)
from .maps import PLMap, blend_extend, escapes_to_infinity, fiber_diameter, partition_of_unity, proper_height
from .space import Exhaustion, FiniteMetricSpace, SampleSet, SimplicialComplex, build_exhaustion, realize_metric

__version__ = "0.1.0"

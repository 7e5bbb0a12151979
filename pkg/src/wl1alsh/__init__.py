"""Asymmetric LSH for nearest-neighbor search under the generalized weighted Manhattan distance.

The weight vector, whose entries may be negative, arrives with each query;
data points are hashed once without it.
"""

from ._kernels import BACKEND
from .core import (
    QuantizationGrid,
    WeightVector,
    box_radii_to_grid,
    grid_radii_to_box,
    quantize,
    weighted_manhattan,
    weighted_manhattan_rows,
)
from .errors import ALSHError, DimensionError, IndexFormatError, IngestionError, ParameterError
from .evaluation import (
    CollisionEstimate,
    RecallReport,
    brute_force_nn,
    estimate_collision_prob,
    run_recall_harness,
)
from .hashing import (
    HashFunctionSpec,
    HashVariant,
    collision_prob,
    default_window,
    hash_point,
    rho,
    sample_hash,
    select_params,
    transformed_angle,
    transformed_l2_distance,
)
from .index import HashTableSet, Hit, IndexParams, build, load, save
from .transform import (
    MAX_M,
    PrefixTable,
    build_prefix_table,
    fast_projection,
    materialize_data_transform,
    materialize_query_transform,
    unary_encode,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "MAX_M",
    "ALSHError",
    "CollisionEstimate",
    "DimensionError",
    "HashFunctionSpec",
    "HashTableSet",
    "HashVariant",
    "Hit",
    "IndexFormatError",
    "IndexParams",
    "IngestionError",
    "ParameterError",
    "PrefixTable",
    "QuantizationGrid",
    "RecallReport",
    "WeightVector",
    "box_radii_to_grid",
    "brute_force_nn",
    "build",
    "build_prefix_table",
    "collision_prob",
    "default_window",
    "estimate_collision_prob",
    "fast_projection",
    "grid_radii_to_box",
    "hash_point",
    "load",
    "materialize_data_transform",
    "materialize_query_transform",
    "quantize",
    "rho",
    "run_recall_harness",
    "sample_hash",
    "save",
    "select_params",
    "transformed_angle",
    "transformed_l2_distance",
    "unary_encode",
    "weighted_manhattan",
    "weighted_manhattan_rows",
]

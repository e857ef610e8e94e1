"""Self-training semi-supervised classification with a uniform-kernel
majority score ("best classifiable point" selection)."""

from .errors import (
    DegenerateParameters,
    EmptyRegion,
    InvalidInput,
    NoNeighbors,
    ParseError,
)
from .geometry import GridIndex, ball_query, build_index, hausdorff
from .datasets import (
    GeneratorSpec,
    LabeledSet,
    SplitSample,
    bayes_error,
    bayes_sine,
    bayes_truncgauss,
    gen_sine,
    gen_truncgauss,
    load_csv,
    prune_by_nn,
)
from .estimators import (
    Score,
    classify_from_score,
    extremality,
    kde_uniform,
    knn_classify,
    nw_score,
)
from .selftrain import (
    GridProjection,
    RunConfig,
    Trace,
    grid_project,
    run,
    run_batch,
    run_fast,
    run_sequential,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateParameters",
    "EmptyRegion",
    "GeneratorSpec",
    "GridIndex",
    "GridProjection",
    "InvalidInput",
    "LabeledSet",
    "NoNeighbors",
    "ParseError",
    "RunConfig",
    "Score",
    "SplitSample",
    "Trace",
    "ball_query",
    "bayes_error",
    "bayes_sine",
    "bayes_truncgauss",
    "build_index",
    "classify_from_score",
    "extremality",
    "gen_sine",
    "gen_truncgauss",
    "grid_project",
    "hausdorff",
    "kde_uniform",
    "knn_classify",
    "load_csv",
    "nw_score",
    "prune_by_nn",
    "run",
    "run_batch",
    "run_fast",
    "run_sequential",
]

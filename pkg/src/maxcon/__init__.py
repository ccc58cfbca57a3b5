"""maxcon: maximum-consensus robust fitting via Boolean influence estimation."""

__version__ = "0.1.0"

from .masks import SubsetMask
from .model import (
    Dataset,
    ModelParams,
    Tolerance,
    generate_line2d,
    generate_linear,
    load_dataset_csv,
    residual,
    residuals,
    save_dataset_csv,
)
from .feasibility import (
    FeasibilityOracle,
    FeasibilityOutcome,
    feasibility_threshold,
    infeasibility,
    is_feasible,
    minmax_solve,
)
from .boolean import (
    IdealMBF,
    IdealSpec,
    InfluenceVector,
    TabulatedMBF,
    as_mbf,
    ideal_mbf,
    influence_exact,
    influence_mse,
    influence_sampled,
    is_upper_zero,
    max_upper_zero_exhaustive,
    separation,
    tabulate_mbf,
    theorem1_influence,
    theorem2_influence,
)
from .solver import (
    IterationRecord,
    MaxConConfig,
    MaxConResult,
    lo_ransac,
    local_expansion,
    mbf_maxcon,
    mbf_maxcon_variant,
    ransac,
    timing_stripped,
)
from .bench import (
    ExperimentSpec,
    report,
    run_ablation,
    run_comparison,
    run_experiment,
    run_influence_error,
    run_separation,
)

__all__ = [
    "__version__",
    "SubsetMask",
    "Dataset",
    "ModelParams",
    "Tolerance",
    "generate_line2d",
    "generate_linear",
    "load_dataset_csv",
    "save_dataset_csv",
    "residual",
    "residuals",
    "FeasibilityOracle",
    "FeasibilityOutcome",
    "feasibility_threshold",
    "infeasibility",
    "is_feasible",
    "minmax_solve",
    "IdealMBF",
    "IdealSpec",
    "InfluenceVector",
    "TabulatedMBF",
    "as_mbf",
    "ideal_mbf",
    "influence_exact",
    "influence_mse",
    "influence_sampled",
    "is_upper_zero",
    "max_upper_zero_exhaustive",
    "separation",
    "tabulate_mbf",
    "theorem1_influence",
    "theorem2_influence",
    "IterationRecord",
    "MaxConConfig",
    "MaxConResult",
    "lo_ransac",
    "local_expansion",
    "mbf_maxcon",
    "mbf_maxcon_variant",
    "ransac",
    "timing_stripped",
    "ExperimentSpec",
    "report",
    "run_ablation",
    "run_comparison",
    "run_experiment",
    "run_influence_error",
    "run_separation",
]

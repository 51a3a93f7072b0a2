"""microanon: k-anonymity by microaggregation for numeric microdata.

Mask quasi-identifiers by replacing them with group means over groups of
at least k records, grouped by MDAV, single-axis sorting, per-column
sorting, or a diversity-preserving hybrid that clusters records and
confidential values first.  Ships with information-loss and
record-linkage metrics, a benchmark harness, and a CLI.
"""

from .schema import Attribute, AttributeRole, AttributeSchema
from .dataset import (
    ColumnStats,
    Microdata,
    SyntheticSpec,
    SyntheticTruth,
    column_stats,
    load_table,
    min_max_denormalize,
    min_max_normalize,
    save_table,
    synthesize,
)
from .fpclust import (
    ClusterModel,
    FuzzinessParams,
    FuzzyPossibilisticClustering,
    default_c_range,
    fp_cluster,
    hard_labels,
    pcaes,
    select_partition,
)
from .microagg import (
    METHODS,
    AnonymizationConfig,
    AnonymizedResult,
    Microaggregation,
    Partition,
    SubStructure,
    anonymize,
    centroid_replace,
    diversity_partition,
    equivalence_partition,
    hybrid_anonymize,
    individual_sorting_mask,
    mdav_partition,
    single_axis_partition,
    single_axis_scores,
)
from .metrics import (
    DbrlCounts,
    EvaluationReport,
    KAnonymityResult,
    dbrl,
    diversity_check,
    evaluate,
    group_sse,
    information_loss,
    k_anonymity_check,
)
from .bench import SweepRow, SweepSpec, emit_report, run_sweep
from .errors import (
    ClassTooSmallError,
    DataError,
    DegenerateModelError,
    KTooLargeError,
    MethodError,
    MicroanonError,
)

__version__ = "0.1.0"

__all__ = [
    "Attribute",
    "AttributeRole",
    "AttributeSchema",
    "ColumnStats",
    "Microdata",
    "SyntheticSpec",
    "SyntheticTruth",
    "column_stats",
    "load_table",
    "min_max_denormalize",
    "min_max_normalize",
    "save_table",
    "synthesize",
    "ClusterModel",
    "FuzzinessParams",
    "FuzzyPossibilisticClustering",
    "default_c_range",
    "fp_cluster",
    "hard_labels",
    "pcaes",
    "select_partition",
    "METHODS",
    "AnonymizationConfig",
    "AnonymizedResult",
    "Microaggregation",
    "Partition",
    "SubStructure",
    "anonymize",
    "centroid_replace",
    "diversity_partition",
    "equivalence_partition",
    "hybrid_anonymize",
    "individual_sorting_mask",
    "mdav_partition",
    "single_axis_partition",
    "single_axis_scores",
    "DbrlCounts",
    "EvaluationReport",
    "KAnonymityResult",
    "dbrl",
    "diversity_check",
    "evaluate",
    "group_sse",
    "information_loss",
    "k_anonymity_check",
    "SweepRow",
    "SweepSpec",
    "emit_report",
    "run_sweep",
    "ClassTooSmallError",
    "DataError",
    "DegenerateModelError",
    "KTooLargeError",
    "MethodError",
    "MicroanonError",
    "__version__",
]

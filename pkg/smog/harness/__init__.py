from .config import MODEL_IDS, ExperimentConfig
from .loop import RunRecord, RunRow, run_bo_loop
from .models import (
    ModelRegistry,
    Surrogate,
    build_model,
    default_registry,
    prepare_meta_models,
)
from .output import emit_csv, emit_front, emit_plot, read_csv
from .suite import (
    GapRow,
    ResultRow,
    SuiteResult,
    aggregate,
    final_front,
    median_run,
    run_ablation,
    run_suite,
)

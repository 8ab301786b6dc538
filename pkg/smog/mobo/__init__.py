from .acquisition import AcquisitionConfig, log_ehvi, log_ehvi_batch
from .optimize import (
    MixedSpace,
    optimize_acquisition_continuous,
    optimize_acquisition_mixed,
    pointwise,
)
from .pareto import (
    ParetoState,
    hv_gap,
    hypervolume,
    hypervolume_improvement,
    infer_reference_point,
    pareto_front,
    standardize,
)

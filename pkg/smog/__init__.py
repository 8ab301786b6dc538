from .benchmarks import Benchmark, HartmannBenchmark, SinusoidalBenchmark, parse_benchmark
from .data import MultiOutputDataset, StandardizationTransform, standardize
from .gp import (
    FittedGP,
    GPSpec,
    Hyperparameters,
    PosteriorGaussian,
    condition,
    fit,
    log_marginal_likelihood,
    posterior,
    sample_posterior,
)
from .harness import (
    ExperimentConfig,
    ModelRegistry,
    RunRecord,
    build_model,
    default_registry,
    run_bo_loop,
    run_suite,
)
from .kernels import (
    AugmentedInput,
    EquicorrelatedTaskParams,
    Matern52Params,
    augment,
    matern52,
    multi_output_kernel,
    task_covariance,
)
from .mobo import (
    AcquisitionConfig,
    ParetoState,
    hypervolume,
    infer_reference_point,
    log_ehvi,
    optimize_acquisition_continuous,
    optimize_acquisition_mixed,
    pareto_front,
)
from .model import (
    MetaTaskModel,
    SmogModel,
    TransferWeights,
    condition_target,
    fit_meta_tasks,
    fit_target,
    smog_posterior,
    smog_predict,
    target_prior,
)
from .oracle import JointKernelOracle, oracle_condition_on_all, oracle_condition_on_metadata
from .stats import Stats

register_model = default_registry.register

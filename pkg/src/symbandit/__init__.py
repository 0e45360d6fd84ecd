"""Linear bandits whose unknown parameter is constant on the blocks of a hidden
set partition: partition lattices, model selection, bandit algorithms and an
experiment harness."""

from .algorithms import (
    AlgorithmConfig,
    AlgorithmName,
    OfulParams,
    Selector,
    Trajectory,
    lasso_cd,
    run_algorithm,
    run_emc,
    run_emc_ws,
    run_estc_lasso,
    run_oful_full,
    t1_default,
    t2_default,
)
from .environments import (
    ArmSet,
    ArmSetKind,
    BanditEnvironment,
    EnvConfig,
    lower_bound_instance,
    make_environment,
    pull,
    random_partition,
    random_theta,
)
from .errors import *  # noqa: F401,F403
from .harness import ExperimentConfig, ExperimentRecord, emit_csv, read_csv, render_svg, run_experiment, sweep
from .partitions import (
    Partition,
    PartitionClass,
    Permutation,
    coarsen,
    count_partitions,
    enumerate_partitions,
    is_in_class,
    refines,
)
from .selection import SelectionResult, build_pool, select_bruteforce, select_greedy, separation_margin
from .subspace import (
    DesignSample,
    SubspaceModel,
    exploratory_distribution,
    fit_subspace,
    project_point,
    reduced_features,
    rip_constant,
)

__version__ = "0.1.0"

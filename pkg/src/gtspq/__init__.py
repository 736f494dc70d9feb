"""Desk-scale workbench for clustered-tour (GTSP) optimization.

Pipeline: GTSPLIB parsing -> instance reduction -> one-hot QUBO -> sampling
(exhaustive scan, simulated annealing, one-hot-subspace alternating-operator
simulator, external adapter) -> feasibility / approximation-ratio reports
against an exact baseline.
"""

from .baseline import ExactResult, exact_solve, random_tours
from .bench import (
    ExperimentGroup,
    InstanceReport,
    approximation_ratio,
    build_report,
    emit,
    feasibility_ratio,
)
from .instance import (
    GtspInstance,
    GtsplibError,
    NodeCoord,
    Tour,
    is_feasible_tour,
    parse_gtsplib,
    serialize_gtsplib,
    tour_cost,
)
from .preprocess import ReductionRecord, cluster_subsample, nn2c_reduce
from .qaoa import (
    GridConfig,
    PartitionLayout,
    QaoaParams,
    SubspaceState,
    apply_cost_phase,
    apply_xy_ring_mixer,
    build_layout,
    cost_diagonal,
    grid_search,
    initial_state,
    run_qaoa,
    sample_shots,
)
from .qubo import (
    IsingModel,
    QuboModel,
    build_qubo,
    decode,
    encode,
    energy,
    penalty_weight,
    to_ising,
    var_index,
)
from .sampler import (
    AnnealSchedule,
    Backend,
    ExternalSamplerConfig,
    Failure,
    SampleEntry,
    SampleSet,
    default_schedule,
    exhaustive_ground_state,
    external_sampler_submit,
    sa_sample,
)

__version__ = "0.1.0"

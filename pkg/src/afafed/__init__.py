"""Asynchronous, fair, adaptive federated learning in a deterministic simulator."""

from .bounds import (
    BoundInputs,
    ScaledBoundResult,
    beta_max_admissible,
    bound_clipped_beta,
    bound_constant_beta,
    bound_scaled,
    effective_horizon,
    ensemble_averages,
    gradient_variance_bound,
)
from .coworker import (
    AdaptiveConfig,
    CoworkerState,
    UplinkPayload,
    make_coworker,
    run_iteration_cluster,
    run_single_iteration,
)
from .errors import ConfigError, NumericDivergenceError, ProtocolError
from .model_core import (
    LossKind,
    LossModel,
    TrainingExample,
    global_risk,
    jain_fairness_index,
    local_gradient,
    local_risk,
    minibatch_gradient,
    normalized_weights,
    quadratic_global_minimum,
    smoothness_constant,
    uniform_weights,
)
from .network_sim import (
    ArrivalProcess,
    ComputeModel,
    CoworkerSetup,
    LinkModel,
    MetricsRow,
    RunResult,
    SimulationEngine,
)
from .profiler import ParameterEstimates, ProfilingLog, finalize, record_aggregation
from .server import AggregationRecord, MixingConfig, ServerState, process_uplink
from .stream_manager import StreamBuffer

__version__ = "0.1.0"

__all__ = [
    "AdaptiveConfig",
    "AggregationRecord",
    "ArrivalProcess",
    "BoundInputs",
    "ComputeModel",
    "ConfigError",
    "CoworkerSetup",
    "CoworkerState",
    "LinkModel",
    "LossKind",
    "LossModel",
    "MetricsRow",
    "MixingConfig",
    "NumericDivergenceError",
    "ParameterEstimates",
    "ProfilingLog",
    "ProtocolError",
    "RunResult",
    "ScaledBoundResult",
    "ServerState",
    "SimulationEngine",
    "StreamBuffer",
    "TrainingExample",
    "UplinkPayload",
    "beta_max_admissible",
    "bound_clipped_beta",
    "bound_constant_beta",
    "bound_scaled",
    "effective_horizon",
    "ensemble_averages",
    "finalize",
    "global_risk",
    "gradient_variance_bound",
    "jain_fairness_index",
    "local_gradient",
    "local_risk",
    "make_coworker",
    "minibatch_gradient",
    "normalized_weights",
    "process_uplink",
    "quadratic_global_minimum",
    "record_aggregation",
    "run_iteration_cluster",
    "run_single_iteration",
    "smoothness_constant",
    "uniform_weights",
    "__version__",
]

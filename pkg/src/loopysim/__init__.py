"""Simulator for a ring robot whose body shape emerges from cell-local
reaction-diffusion."""

__version__ = "0.1.0"

from .core_rd import (  # noqa: E402
    ConfigurationError,
    DynamicsDiverged,
    MorphogenState,
    ReactionParams,
    RingSpec,
    advance,
    init_state,
    reaction_terms,
    ring_laplacian,
    step,
)
from .geometry import (  # noqa: E402
    PolygonGeometry,
    ProjectionFailed,
    angles_from_morphogens,
    project_to_closure,
    reconstruct_polygon,
    segment_pair_intersects,
)
from .analysis import (  # noqa: E402
    ShapeSummary,
    SteadyStateCriterion,
    amplitude,
    count_lobes,
    detect_steady_state,
    turning_distance,
)
from .experiments import (  # noqa: E402
    ExperimentRecord,
    SweepConfig,
    TrajectorySchedule,
    hysteresis_report,
    run_sweep,
    run_trajectory,
    run_trial,
)

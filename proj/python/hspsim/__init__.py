"""Shuttered heralded single-photon source simulator and timestamp analysis."""

from ._hspsim import (  # noqa: F401
    Detection,
    Event,
    EventStream,
    ExperimentConfig,
    Mode,
    Origin,
    PointResult,
    ProbabilitySet,
    TriggerRecord,
    analyze_run,
    analyze_sweep_point,
    apply_jitter,
    calibrate_background,
    generate_poisson_stream,
    predict,
    run_experiment,
    thin_stream,
)

__all__ = [
    "Detection",
    "Event",
    "EventStream",
    "ExperimentConfig",
    "Mode",
    "Origin",
    "PointResult",
    "ProbabilitySet",
    "TriggerRecord",
    "analyze_run",
    "analyze_sweep_point",
    "apply_jitter",
    "calibrate_background",
    "generate_poisson_stream",
    "predict",
    "run_experiment",
    "thin_stream",
]

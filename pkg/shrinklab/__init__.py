"""shrinklab/__init__.py - Public API for the shrinklab package.

shrinklab evolves closed plane curves by mean curvature flow and its
rescaled forms, and measures how they approach the round shrinker of
radius sqrt(2): Gaussian area, the defect energy and its Dirichlet
quotient, normal-graph norms over the shrinker and fitted decay rates.

Quick start:
    from shrinklab import RunConfig, run_scenario

    result = run_scenario(RunConfig(initial="ellipse:2,1", t_end=10.0, output_dir="runs/ellipse"))
    print(result.summary["fits"]["m"])          # about 1 for an ellipse

    # Or from the shell:
    #   shrinklab run --initial ellipse:2,1 --mode rescaled --t-end 8

Exported names:
    ClosedCurve, snapshot:  Discrete curves and their geometry.
    FlowMode, FlowState:    Flow laws and the evolving state; ``advance`` steps it.
    measure:                One diagnostics sample of a snapshot.
    graph_decompose:        Normal graph over the shrinker.
    RunConfig:              Resolved configuration of a run.
    run_scenario, verify, sweep: The pipeline entry points.
"""

from .config import RunConfig, resolve_config
from .errors import (
    BlowUpDetected,
    CheckFailed,
    FitDegenerate,
    GraphDecompositionFailed,
    InsufficientData,
    InvalidArgument,
    NumericDegeneracy,
    ShrinklabError,
    StepRejected,
)
from .flow import FlowMode, FlowState, advance, step
from .geometry import ClosedCurve, snapshot
from .diagnostics import measure
from .pipeline import run_scenario, sweep, verify
from .shrinker import ReferenceShrinker, fit_rate, graph_decompose

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "resolve_config",
    "BlowUpDetected",
    "CheckFailed",
    "FitDegenerate",
    "GraphDecompositionFailed",
    "InsufficientData",
    "InvalidArgument",
    "NumericDegeneracy",
    "ShrinklabError",
    "StepRejected",
    "FlowMode",
    "FlowState",
    "advance",
    "step",
    "ClosedCurve",
    "snapshot",
    "measure",
    "run_scenario",
    "sweep",
    "verify",
    "ReferenceShrinker",
    "fit_rate",
    "graph_decompose",
]

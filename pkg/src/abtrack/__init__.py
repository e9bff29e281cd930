"""Online multi-object tracking by per-frame abduction of assignments and events."""
from .abduction import Action, ActionKind, Hypothesis, ProblemSpec, Track, TrackStatus, build_problem, solve
from .config import EngineConfig, load_config
from .geometry import Rect, iou
from .ingest import Detection, SceneSpec, generate_synthetic_scene
from .metrics import EvalReport, evaluate
from .pipeline import Explanation, process_sequence

__all__ = [
    "Action",
    "ActionKind",
    "EngineConfig",
    "EvalReport",
    "Explanation",
    "Hypothesis",
    "ProblemSpec",
    "Rect",
    "Detection",
    "SceneSpec",
    "Track",
    "TrackStatus",
    "build_problem",
    "evaluate",
    "generate_synthetic_scene",
    "iou",
    "load_config",
    "process_sequence",
    "solve",
]
__version__ = "0.1.0"

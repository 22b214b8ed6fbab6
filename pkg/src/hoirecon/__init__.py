"""Feed-forward 4D human-object interaction reconstruction, desk scale."""

__version__ = "0.1.0"

from .config import RunConfig, load_config
from .sequence import HoiSequence
from .bundles import SceneBundle, load_scene_bundle, load_sequence_bundle
from .weights import load_model, random_checkpoint
from .pipeline import InferenceResult, run_inference
from .metrics import MetricsReport, evaluate_sequence

__all__ = [
    "RunConfig", "load_config", "HoiSequence", "SceneBundle",
    "load_scene_bundle", "load_sequence_bundle", "load_model",
    "random_checkpoint", "InferenceResult", "run_inference",
    "MetricsReport", "evaluate_sequence", "__version__",
]

from .config import CAPACITIES, CAPACITY_SCALE, FAMILIES, BackboneConfig
from .backbones import TransformerExtractor, build_cnn_extractor, build_extractor
from .bundle import (
    ModelBundle,
    attach_lag_branch,
    build_model,
    forward_features,
    predict_logits,
)
from .checkpoint import load_model, save_model
from .layers import softmax

__all__ = [
    "CAPACITIES",
    "CAPACITY_SCALE",
    "FAMILIES",
    "BackboneConfig",
    "ModelBundle",
    "TransformerExtractor",
    "attach_lag_branch",
    "build_cnn_extractor",
    "build_extractor",
    "build_model",
    "forward_features",
    "load_model",
    "predict_logits",
    "save_model",
    "softmax",
]

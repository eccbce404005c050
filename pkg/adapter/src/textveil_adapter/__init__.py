"""Pretrained masked-LM provider for textveil's fill/encode protocol."""
from .miniature import build_miniature, miniature_tokenizer, miniature_vocabulary
from .provider import LAYERS_POOLED, AdapterConfig, MaskedLMProvider, checkpoint_exists, serve

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "MaskedLMProvider",
    "LAYERS_POOLED",
    "serve",
    "checkpoint_exists",
    "build_miniature",
    "miniature_tokenizer",
    "miniature_vocabulary",
    "__version__",
]

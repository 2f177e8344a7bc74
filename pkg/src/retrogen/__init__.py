"""retrogen: ending-first story generation over a token-inference wire
protocol, with a deterministic mock backend and two evaluation harnesses."""

from ._kernels import KERNEL_BACKEND
from .story import GenerationConfig, Sentence, StoryState, prepend, render, split_sentences

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "GenerationConfig",
    "Sentence",
    "StoryState",
    "prepend",
    "render",
    "split_sentences",
    "__version__",
]

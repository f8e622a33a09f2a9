"""scenarioforge: multimodal corner-case scenario generation and evaluation."""

from . import compgen, evalkit, interpreter, ir, netgen, pipeline, simcore

__all__ = ["compgen", "evalkit", "interpreter", "ir", "netgen", "pipeline",
           "simcore"]
__version__ = "0.1.0"

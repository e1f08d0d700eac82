"""Neural velocity-controller toolkit for a simulated gate-racing drone."""

from .gateworld import EnvConfig, GateEnv, Outcome
from .kernels import BACKEND
from .td3core import Td3Config, Trainer

__version__ = "0.1.0"

__all__ = ["BACKEND", "EnvConfig", "GateEnv", "Outcome", "Td3Config",
           "Trainer", "__version__"]

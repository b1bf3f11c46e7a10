"""Online spotting of hand gestures in 26-joint skeleton streams."""
from .skeleton import GestureClass, GestureInterval, GestureSequence
from .tcn import TcnEnsemble, TcnModel, TrainConfig

__version__ = "0.1.0"

__all__ = ["GestureClass", "GestureInterval", "GestureSequence", "TcnEnsemble", "TcnModel", "TrainConfig"]

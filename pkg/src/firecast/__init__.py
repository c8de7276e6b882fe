"""Monthly fire-count forecasting with a stacked LSTM+GRU network.

The pipeline: load a monthly count CSV, normalize on the training
slice, train the stacked recurrent model over sliding 12-month windows,
checkpoint the best epoch, and forecast recursively.  See the `firecast`
command-line entry point for the batch interface.
"""
from .backend import active_backend, available_backends
from .dataset import MonthlySeries, load_csv
from .forecast import forecast
from .network import StackedModel, init_model
from .persistence import load, save
from .training import Checkpoint, TrainConfig, evaluate, train

__version__ = "1.0.0"

__all__ = [
    "MonthlySeries", "StackedModel", "Checkpoint", "TrainConfig",
    "active_backend", "available_backends", "evaluate", "forecast",
    "init_model", "load", "load_csv", "save", "train", "__version__",
]

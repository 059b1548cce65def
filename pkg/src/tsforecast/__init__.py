"""Time series forecasting: Box-Jenkins models, small neural networks and LS-SVMs."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .datasets import load_dataset
from .metrics import evaluate
from .series import TimeSeries, TransformPipeline

__all__ = ["TimeSeries", "TransformPipeline", "evaluate", "load_dataset", "__version__"]

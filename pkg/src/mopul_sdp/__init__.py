"""mopul-sdp: conic approximation of matrix optimization over uncertain linear systems.

Builds the decoupled SOC/SDP program for a finite-horizon system, solves it with
an embedded interior-point method and certifies how far the exact rollout can
drift from the approximation.
"""

__version__ = "0.1.0"

from .config import MopulSettings, load_config  # noqa: E402
from .utils.logger import configure_logger, get_logger, logger, set_level  # noqa: E402

__all__ = [
    "MopulSettings",
    "load_config",
    "logger",
    "get_logger",
    "configure_logger",
    "set_level",
    "__version__",
]

"""Multi-UAV semantic video streaming simulator and PPO resource allocator."""

__version__ = "0.1.0"

from .channel import ChannelParams, ChannelRealization, downlink_rates, sample_channel
from .codec import Codebook, ema_update, new_codebook, quantize
from .config import ExperimentConfig, default_config, load_config
from .geometry import GeometryConfig, UavState, advance_position, corridor_for
from .qoe import QoEWeights, qoe_slot

__all__ = [
    "__version__",
    "ChannelParams",
    "ChannelRealization",
    "Codebook",
    "ExperimentConfig",
    "GeometryConfig",
    "QoEWeights",
    "UavState",
    "advance_position",
    "corridor_for",
    "default_config",
    "downlink_rates",
    "ema_update",
    "load_config",
    "new_codebook",
    "qoe_slot",
    "quantize",
    "sample_channel",
]

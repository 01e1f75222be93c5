"""Single-cell cellular + D2D scheduling simulator and policy library."""

from d2dsched.model import ConfigError, SystemConfig, SpatialRealization, load_config, sample_spatial

__all__ = [
    "ConfigError",
    "SystemConfig",
    "SpatialRealization",
    "load_config",
    "sample_spatial",
]

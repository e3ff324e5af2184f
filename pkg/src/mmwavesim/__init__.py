"""Measurement-based mmWave channel simulator.

Drop-based and spatially consistent channel generation with dynamic human
blockage and outdoor-to-indoor penetration loss, plus a Monte Carlo harness
for shadowing-loss CDFs and SNR outage statistics.
"""

from .config import (
    AntennaConfig,
    BlockageConfig,
    ConfigError,
    O2IConfig,
    SimConfig,
    TcslConfig,
    TrajectorySpec,
    validate_config,
)
from .rng import substream

__version__ = "0.1.0"

__all__ = [
    "AntennaConfig",
    "BlockageConfig",
    "ConfigError",
    "O2IConfig",
    "SimConfig",
    "TcslConfig",
    "TrajectorySpec",
    "substream",
    "validate_config",
    "__version__",
]

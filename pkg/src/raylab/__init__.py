"""Deterministic first-person grid-world RL environment platform."""

from .env import BadConfig, EnvConfig, Environment, EpisodeFinished, NotReset, UnknownLevel, create_env
from .lab import Lab

__version__ = "0.1.0"
PROTOCOL_VERSION = 1

__all__ = [
    "Lab",
    "Environment",
    "EnvConfig",
    "create_env",
    "BadConfig",
    "EpisodeFinished",
    "NotReset",
    "UnknownLevel",
    "PROTOCOL_VERSION",
]

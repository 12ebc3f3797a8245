"""Desk-scale emulation of a web-teleoperated two-MCU sensor robot."""

from .config import ChannelConfig, GeometryConfig, SimConfig, load_config
from .robot import RobotSim

__all__ = ["ChannelConfig", "GeometryConfig", "SimConfig", "load_config", "RobotSim"]

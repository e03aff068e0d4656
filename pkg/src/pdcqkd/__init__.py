"""Key-rate models for entanglement-based QKD with PDC sources."""

from .model import (
    ChannelScenario,
    Placement,
    SetupParams,
    SideParams,
    SourceParams,
    overall_gain,
    overall_qber,
    scenario_etas,
    scenario_setup,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelScenario",
    "Placement",
    "SetupParams",
    "SideParams",
    "SourceParams",
    "overall_gain",
    "overall_qber",
    "scenario_etas",
    "scenario_setup",
    "__version__",
]

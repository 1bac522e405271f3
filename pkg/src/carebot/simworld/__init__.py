from .world import (
    BatteryConfig,
    DriveCmd,
    Door,
    FacilityWorld,
    GroundGrid,
    InventorySlot,
    LedState,
    Marker,
    Person,
    RobotBody,
    SensorFrame,
    SimObject,
    Visible,
    battery_tick,
    step,
)
from .scenario import ConfigInvalid, load_scenario, load_scenario_file

__all__ = [
    "BatteryConfig",
    "ConfigInvalid",
    "DriveCmd",
    "Door",
    "FacilityWorld",
    "GroundGrid",
    "InventorySlot",
    "LedState",
    "Marker",
    "Person",
    "RobotBody",
    "SensorFrame",
    "SimObject",
    "Visible",
    "battery_tick",
    "load_scenario",
    "load_scenario_file",
    "step",
]

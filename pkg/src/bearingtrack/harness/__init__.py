"""File formats, scenario handling and the command-line interface."""

from .runner import simulate
from .scenario import Scenario, load_scenario, scenario_from_dict, scenario_to_dict

__all__ = ["Scenario", "load_scenario", "scenario_from_dict", "scenario_to_dict", "simulate"]

from .scenarios import SCENARIOS, describe, scenario_config
from .runner import RunReport, run_config, run_scenario

__all__ = ["SCENARIOS", "describe", "scenario_config", "RunReport", "run_config", "run_scenario"]

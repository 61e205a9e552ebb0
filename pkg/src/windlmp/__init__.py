"""Two-stage stochastic market clearing with locational marginal prices."""

from .grid import Network, load_network, validate
from .scenarios import ScenarioSet, WindScenario, make_scenario_set, uncertainty_sweep
from .formulation import assemble
from .lmp import LmpSurface, extract_lmps, lmp_report
from .experiments import ExperimentConfig, clear

__all__ = [
    "ExperimentConfig", "LmpSurface", "Network", "ScenarioSet", "WindScenario", "assemble",
    "clear", "extract_lmps", "load_network", "lmp_report", "make_scenario_set",
    "uncertainty_sweep", "validate",
]

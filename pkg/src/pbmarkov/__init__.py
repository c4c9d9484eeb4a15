"""Energy-state Markov chain analysis of power-beacon powered multi-source networks."""

from .analytic import TransitionModel, build_model, build_transition_model, cdf_harvest_it, cdf_harvest_nonit
from .analytic import selection_probability, state_transition_probability
from .config import NetworkConfig, dbm_to_watt, load_config, table1_config, watt_to_dbm
from .errors import (
    CapacityError,
    ConfigError,
    DomainError,
    NumericalConsistencyError,
    PBMarkovError,
    SolverError,
)
from .metrics import MetricsReport, compute_metrics
from .model import EnergyQuantizer, StateSpace, build_channel_stats, discretize, enumerate_states
from .model import state_index, state_levels
from .simulation import SimulationStats, empirical_transition_matrix, run_simulation
from .stationary import StationaryDistribution, solve_stationary, validate_stationary

__version__ = "0.1.0"

"""Energy-efficient power allocation for two-user SWIPT multiple-access channels.

Closed-form optimal transmit powers under a harvested-energy demand, built on
the principal branch of the Lambert W function, together with a brute-force
oracle, parameter sweeps and a command-line front end.
"""

from ._kernels import BACKEND
from .allocator import (
    KKTReport,
    Regime,
    SolverOutcome,
    Thresholds,
    chi_max,
    chi_prime,
    chi_star,
    kkt_residuals,
    optimal_efficiency,
    solve,
    thresholds,
    unconstrained_optimum,
)
from .errors import (
    ConstraintForcedActive,
    DenominatorNonpositive,
    DomainError,
    Infeasible,
    InfeasibleEverywhere,
    NoRoot,
    ScenarioError,
    SwiptError,
    ZeroConsumption,
)
from .lambert import LambertResult, lambert_w0, lambert_w0_array, solve_omega
from .model import (
    Demand,
    PowerAllocation,
    Scenario,
    UserLink,
    efficiency_baseline,
    efficiency_net,
    harvested_energy,
    net_gradient,
    sum_rate,
    total_energy,
)
from .oracle import OracleResult, grid_search, refined_search
from .scenario_io import ScenarioFileError, format_scenario, load_scenario, parse_scenario
from .sweep import (
    SweepRecord,
    reference_scenario,
    sample_scenario,
    sweep_chi,
    sweep_circuit_power,
    sweep_power,
    to_csv,
)

__version__ = "0.1.0"

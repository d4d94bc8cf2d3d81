"""Tabular finite-horizon constrained MDPs: exact solvers, primal-dual schemes
and optimistic online learners with strong/weak regret accounting."""

from .core import (
    entropy_value,
    evaluate_policy,
    kl_weighted,
    lagrangian,
    occupancy_of_policy,
    potential_phi,
    regularized_lagrangian,
)
from .exact import CmdpInfeasible, dp_plan, policy_from_occupancy, slater_gap, solve_cmdp_lp
from .learners import LearnerState, RegretLedger, learner_episode, run_learner, theoretical_hyperparams, update_ledger
from .model import CmdpModel, DimensionError, DomainError, minimal_bandit, uniform_policy
from .optimism import BonusConfig, EmpiricalModel, build_estimates, compute_bonuses, record_trajectory, truncated_policy_evaluation
from .schemes import (
    SchemeConfig,
    reg_dual_oracle_step,
    reg_pd_step,
    run_oracle_scheme,
    soft_value_iteration,
    vanilla_pd_step,
)

__version__ = "0.1.0"

"""Online optimistic learners and strong/weak regret accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import backward_values
from .exact import OptimalSolution, plan_greedy
from .generate import cumulative_rows, make_rng, sample_episode
from .model import CmdpModel, DomainError, uniform_policy
from .optimism import (
    BonusConfig,
    EmpiricalModel,
    build_estimates,
    compute_bonuses,
    record_trajectory,
    truncated_policy_evaluation,
)
from .schemes import SchemeConfig, dual_update, exponentiated_update, soft_value_iteration

LEARNER_KINDS = ("reg-pd", "vanilla-pd", "reg-dual", "vanilla-dual")


def theoretical_hyperparams(K: int, H: int, I: int, slater: float) -> SchemeConfig:
    """Step size, regularisation and dual cap from the regret-bound schedule."""
    if slater <= 0:
        raise DomainError("Slater gap must be positive")
    if K < 1:
        raise DomainError("K must be >= 1")
    return SchemeConfig(
        eta=slater * K ** (-5 / 7) / (H ** 2 * I),
        tau=K ** (-1 / 7),
        cap=(H / slater) * K ** (1 / 14),
        iterations=K,
        kind="reg-pd",
    )


@dataclass
class LearnerState:
    policy: np.ndarray
    lam: np.ndarray
    empirical: EmpiricalModel
    kind: str
    scheme: SchemeConfig
    bonus: BonusConfig
    k: int = 1

    @classmethod
    def initial(cls, model: CmdpModel, kind: str, scheme: SchemeConfig,
                bonus: Optional[BonusConfig] = None) -> "LearnerState":
        if kind not in LEARNER_KINDS:
            raise ValueError(f"unknown learner kind {kind!r}")
        if kind.startswith("reg") and scheme.tau <= 0:
            raise ValueError(f"{kind} needs tau > 0")
        return cls(
            policy=uniform_policy(model),
            lam=np.zeros(model.I),
            empirical=EmpiricalModel(model.H, model.S, model.A, model.I),
            kind=kind,
            scheme=scheme,
            bonus=bonus or BonusConfig(),
        )


def _plan(state: LearnerState, model: CmdpModel):
    """Policy to play this episode and the next ``(policy, lam)``."""
    cfg = state.scheme
    tau = cfg.tau if state.kind.startswith("reg") else 0.0
    bonuses = compute_bonuses(state.empirical, state.bonus)
    if state.kind.endswith("pd"):
        est = build_estimates(state.empirical, state.policy, bonuses)
        tv = truncated_policy_evaluation(est, state.policy, state.lam, tau, model.s1)
        new_policy = exponentiated_update(state.policy, tv.q_z, cfg.eta)
        new_lam = dual_update(state.lam, tv.v_u_start - model.c, cfg.eta, tau, cfg.cap)
        return state.policy, new_policy, new_lam

    emp = state.empirical
    b = bonuses.total
    r_hat = emp.mean_rewards() + b
    u_hat = emp.mean_constraints() + b
    p_hat = emp.transition_estimate()
    lagr = r_hat + np.tensordot(state.lam, u_hat, axes=1)
    if state.kind == "reg-dual":
        played, _ = soft_value_iteration(p_hat, lagr + tau * bonuses.entropy, tau)
    else:
        played, _ = plan_greedy(p_hat, lagr, model.s1)
    v, _ = backward_values(p_hat, played, u_hat)
    new_lam = dual_update(state.lam, v[:, 0, model.s1] - model.c, cfg.eta, tau, cfg.cap)
    return played, played, new_lam


def learner_episode(state: LearnerState, model: CmdpModel, rng: np.random.Generator,
                    deterministic_rewards: bool = False, _cum=None):
    """One episode: estimate, evaluate, update ``(pi, lam)``, play ``pi_k``, record.

    Returns ``(state, trajectory, played_policy)``; ``state`` is updated in place.
    """
    played, new_policy, new_lam = _plan(state, model)
    traj = sample_episode(model, played, rng, deterministic_rewards, _cum)
    record_trajectory(state.empirical, traj)
    state.policy = new_policy
    state.lam = new_lam
    state.k += 1
    return state, traj, played


@dataclass
class RegretLedger:
    """Per-episode gaps of played policies on the true model.

    ``subopt`` and ``violation`` hold signed gaps ``V* - V_r`` and
    ``c_i - V_{u_i}``; strong regrets sum positive parts, weak ones the
    signed values.
    """

    num_constraints: int = 1
    epsilons: Sequence[float] = (0.05, 0.1)
    subopt: list = field(default_factory=list)
    violation: list = field(default_factory=list)
    strong_r: list = field(default_factory=list)
    strong_u: list = field(default_factory=list)
    weak_r: list = field(default_factory=list)
    weak_u: list = field(default_factory=list)
    unsafe: list = field(default_factory=list)  # per episode, counts per epsilon
    _sum_r: float = 0.0
    _sum_pos_r: float = 0.0
    _sum_pos_u: float = 0.0
    _sum_u: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.subopt)

    def append(self, gap_r: float, gap_u: np.ndarray) -> None:
        gap_u = np.atleast_1d(np.asarray(gap_u, float))
        if self._sum_u is None:
            self._sum_u = np.zeros(gap_u.size)
        worst = float(gap_u.max())
        self._sum_r += gap_r
        self._sum_pos_r += max(gap_r, 0.0)
        self._sum_pos_u += max(worst, 0.0)
        self._sum_u = self._sum_u + gap_u
        prev = self.unsafe[-1] if self.unsafe else (0,) * len(self.epsilons)
        self.subopt.append(gap_r)
        self.violation.append(gap_u)
        self.strong_r.append(self._sum_pos_r)
        self.strong_u.append(self._sum_pos_u)
        self.weak_r.append(self._sum_r)
        self.weak_u.append(float(self._sum_u.max()))
        self.unsafe.append(tuple(n + (worst >= eps) for n, eps in zip(prev, self.epsilons)))

    def max_violation(self, k: int) -> float:
        return float(np.max(self.violation[k]))


def update_ledger(ledger: RegretLedger, reference: OptimalSolution, model: CmdpModel,
                  played: np.ndarray) -> RegretLedger:
    """Append the exact gaps of ``played`` to ``ledger`` (in place)."""
    v, _ = backward_values(model.p, played, np.concatenate([model.r[None], model.u]))
    start = v[:, 0, model.s1]
    ledger.append(reference.value - float(start[0]), model.c - start[1:])
    return ledger


def run_learner(model: CmdpModel, reference: OptimalSolution, kind: str, scheme: SchemeConfig,
                episodes: int, seed_key: Sequence[int], bonus: Optional[BonusConfig] = None,
                epsilons: Sequence[float] = (0.05, 0.1), deterministic_rewards: bool = False,
                ) -> RegretLedger:
    """Run ``episodes`` episodes; episode ``k`` draws from stream ``(*seed_key, k)``."""
    state = LearnerState.initial(model, kind, scheme, bonus)
    ledger = RegretLedger(num_constraints=model.I, epsilons=tuple(epsilons))
    cum = cumulative_rows(model.p)
    for k in range(1, episodes + 1):
        _, _, played = learner_episode(state, model, make_rng(*seed_key, k), deterministic_rewards, cum)
        update_ledger(ledger, reference, model, played)
    return ledger

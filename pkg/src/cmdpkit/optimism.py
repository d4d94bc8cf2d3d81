"""Visit counters, exploration bonuses and truncated policy evaluation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import backward_values
from .model import PROB_FLOOR, DimensionError, DomainError


@dataclass
class Trajectory:
    """One episode; arrays are indexed by step ``h``."""

    states: np.ndarray  # (H,)
    actions: np.ndarray  # (H,)
    rewards: np.ndarray  # (H,)
    constraint_rewards: np.ndarray  # (H, I)
    next_states: np.ndarray  # (H,)

    def __len__(self):
        return len(self.states)

    def steps(self):
        return zip(self.states, self.actions, self.rewards, self.constraint_rewards, self.next_states)


class EmpiricalModel:
    """Running counts and sums; mutated in place by its owning learner."""

    def __init__(self, H: int, S: int, A: int, I: int):
        self.dims = (H, S, A, I)
        self.counts = np.zeros((H, S, A), dtype=np.int64)
        self.transition_counts = np.zeros((H, S, A, S), dtype=np.int64)
        self.reward_sums = np.zeros((H, S, A))
        self.constraint_sums = np.zeros((I, H, S, A))

    def copy(self) -> "EmpiricalModel":
        out = EmpiricalModel(*self.dims)
        out.counts = self.counts.copy()
        out.transition_counts = self.transition_counts.copy()
        out.reward_sums = self.reward_sums.copy()
        out.constraint_sums = self.constraint_sums.copy()
        return out

    def mean_rewards(self) -> np.ndarray:
        return self.reward_sums / np.maximum(self.counts, 1)

    def mean_constraints(self) -> np.ndarray:
        return self.constraint_sums / np.maximum(self.counts, 1)

    def transition_estimate(self) -> np.ndarray:
        """Empirical transition rows; uniform where a cell was never visited."""
        H, S, A, _ = self.dims
        n = self.counts[..., None]
        return np.where(n > 0, self.transition_counts / np.maximum(n, 1), 1.0 / S)


def record_trajectory(state: EmpiricalModel, trajectory: Trajectory) -> EmpiricalModel:
    """Add one episode to the counters (in place) and return ``state``."""
    H, S, A, I = state.dims
    s = np.asarray(trajectory.states)
    a = np.asarray(trajectory.actions)
    s2 = np.asarray(trajectory.next_states)
    g = np.asarray(trajectory.constraint_rewards, float).reshape(len(s), I)
    if len(s) != H:
        raise DimensionError(f"trajectory length {len(s)} != H={H}")
    if (np.any((s < 0) | (s >= S)) or np.any((s2 < 0) | (s2 >= S))
            or np.any((a < 0) | (a >= A))):
        raise DimensionError("state or action index out of range")
    h = np.arange(H)
    # (h, s, a) cells are distinct across h, so fancy-index increments are exact
    state.counts[h, s, a] += 1
    state.transition_counts[h, s, a, s2] += 1
    state.reward_sums[h, s, a] += trajectory.rewards
    state.constraint_sums[:, h, s, a] += g.T
    return state


@dataclass(frozen=True)
class BonusConfig:
    mode: str = "scaled"  # "theory" or "scaled"
    delta: float = 0.1
    coef: float = 0.08
    episodes: int = 1

    def __post_init__(self):
        if self.mode not in ("theory", "scaled"):
            raise ValueError(f"unknown bonus mode {self.mode!r}")
        if not 0 < self.delta < 1 or self.coef <= 0 or self.episodes < 1:
            raise ValueError("need delta in (0, 1), coef > 0, episodes >= 1")


@dataclass(frozen=True)
class Bonuses:
    reward: np.ndarray  # b^r
    transition: np.ndarray  # b^p
    entropy: np.ndarray  # additive bonus on -log pi

    @property
    def total(self) -> np.ndarray:
        return self.reward + self.transition


def compute_bonuses(state: EmpiricalModel, cfg: BonusConfig) -> Bonuses:
    H, S, A, I = state.dims
    n = np.maximum(state.counts, 1).astype(float)
    if cfg.mode == "theory":
        K = cfg.episodes
        delta = cfg.delta / 3.0
        b_r = np.sqrt(0.5 * np.log(2 * S * A * H * (I + 1) * K / delta) / n)
        b_p = H * np.sqrt((2 * S + 2 * np.log(S * A * H * K / delta)) / n)
        return Bonuses(reward=b_r, transition=b_p, entropy=b_p * np.log(A))
    # one combined bonus; the entropy surrogate gets the same additive amount
    b = cfg.coef / np.sqrt(n)
    return Bonuses(reward=np.zeros_like(b), transition=b, entropy=b.copy())


@dataclass(frozen=True)
class OptimisticEstimates:
    r_hat: np.ndarray  # (H, S, A)
    u_hat: np.ndarray  # (I, H, S, A)
    psi: np.ndarray  # -log pi_k
    psi_hat: np.ndarray
    p_hat: np.ndarray  # (H, S, A, S)
    bonuses: Bonuses


def build_estimates(state: EmpiricalModel, policy: np.ndarray, bonuses: Bonuses) -> OptimisticEstimates:
    if np.any(policy < PROB_FLOOR):
        raise DomainError("current policy must be strictly positive")
    b = bonuses.total
    psi = -np.log(policy)
    return OptimisticEstimates(
        r_hat=state.mean_rewards() + b,
        u_hat=state.mean_constraints() + b,
        psi=psi,
        psi_hat=psi + bonuses.entropy,
        p_hat=state.transition_estimate(),
        bonuses=bonuses,
    )


@dataclass(frozen=True)
class TruncatedValues:
    q_z: np.ndarray  # (H, S, A)
    v_u_start: np.ndarray  # (I,)
    q_r: np.ndarray
    q_u: np.ndarray  # (I, H, S, A)
    q_psi: np.ndarray
    v_r: np.ndarray  # (H + 1, S)
    v_u: np.ndarray  # (I, H + 1, S)
    v_psi: np.ndarray


def truncated_policy_evaluation(est: OptimisticEstimates, policy: np.ndarray, lam, tau: float,
                                s1: int = 0) -> TruncatedValues:
    """Capped backward evaluation of ``policy`` under the optimistic model.

    Reward-like tables are capped at ``H - h`` (0-based ``h``); the entropy
    surrogate at ``psi + (H - h) log A``.
    """
    H, S, A = est.r_hat.shape
    I = est.u_hat.shape[0]
    lam = np.atleast_1d(np.asarray(lam, float))
    rewards = np.concatenate([est.r_hat[None], est.u_hat, est.psi_hat[None]])
    remaining = (H - np.arange(H)).astype(float)[:, None, None]
    caps = np.empty_like(rewards)
    caps[:-1] = remaining
    caps[-1] = est.psi + remaining * np.log(A)
    q = np.empty_like(rewards)
    v = np.zeros((I + 2, H + 1, S))
    for h in range(H - 1, -1, -1):
        nxt = np.einsum("ijk,nk->nij", est.p_hat[h], v[:, h + 1])
        q[:, h] = np.minimum(caps[:, h], rewards[:, h] + nxt)
        v[:, h] = np.einsum("ij,nij->ni", policy[h], q[:, h])
    q_r, q_u, q_psi = q[0], q[1:1 + I], q[-1]
    q_z = q_r + np.tensordot(lam, q_u, axes=1)
    if tau:
        q_z = q_z + tau * q_psi
    return TruncatedValues(
        q_z=q_z, v_u_start=v[1:1 + I, 0, s1].copy(),
        q_r=q_r, q_u=q_u, q_psi=q_psi,
        v_r=v[0], v_u=v[1:1 + I], v_psi=v[-1],
    )


def optimistic_values(est: OptimisticEstimates, policy: np.ndarray, s1: int = 0) -> np.ndarray:
    """Untruncated ``V_{u_hat}`` under ``p_hat`` at the initial state."""
    v, _ = backward_values(est.p_hat, policy, est.u_hat)
    return v[:, 0, s1]

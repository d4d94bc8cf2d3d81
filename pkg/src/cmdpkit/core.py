"""Exact policy evaluation, occupancy measures, entropy and Lagrangians."""

from __future__ import annotations

import numpy as np

from .model import (
    PROB_FLOOR,
    CmdpModel,
    DimensionError,
    DomainError,
    PotentialDiagnostics,
    ValueTable,
    check_policy,
)


def backward_values(p: np.ndarray, policy: np.ndarray, reward: np.ndarray):
    """Backward induction for one or a batch of reward tables.

    ``reward`` has shape ``(..., H, S, A)``; returns ``(v, q)`` with ``v`` of
    shape ``(..., H + 1, S)`` and ``q`` like ``reward``.
    """
    H, S, A, _ = p.shape
    batch = reward.shape[:-3]
    q = np.empty(reward.shape)
    v = np.zeros(batch + (H + 1, S))
    for h in range(H - 1, -1, -1):
        # (S, A, S') . (..., S') -> (..., S, A)
        q[..., h, :, :] = reward[..., h, :, :] + np.einsum("ijk,...k->...ij", p[h], v[..., h + 1, :])
        v[..., h, :] = np.einsum("ij,...ij->...i", policy[h], q[..., h, :, :])
    return v, q


def evaluate_policy(model: CmdpModel, policy: np.ndarray, reward_fn, label: str = "") -> ValueTable:
    """Exact value and action-value tables of ``policy`` for ``reward_fn``."""
    reward_fn = np.asarray(reward_fn, dtype=float)
    if reward_fn.shape != model.shape:
        raise DimensionError(f"reward shape {reward_fn.shape} != {model.shape}")
    policy = check_policy(policy, model.shape)
    v, q = backward_values(model.p, policy, reward_fn)
    return ValueTable(v=v, q=q, label=label)


def start_values(model: CmdpModel, policy: np.ndarray, rewards: np.ndarray) -> np.ndarray:
    """``V(s1)`` for a stack of reward tables of shape ``(n, H, S, A)``."""
    v, _ = backward_values(model.p, policy, np.asarray(rewards, float))
    return v[..., 0, model.s1]


def reward_and_constraint_values(model: CmdpModel, policy: np.ndarray) -> tuple[float, np.ndarray]:
    """``(V_r, [V_{u_i}])`` at the initial state."""
    vals = start_values(model, policy, np.concatenate([model.r[None], model.u]))
    return float(vals[0]), vals[1:]


def occupancy_of_policy(model: CmdpModel, policy: np.ndarray) -> np.ndarray:
    """State-action occupancy ``d[h, s, a] = P[s_h = s, a_h = a]``."""
    policy = check_policy(policy, model.shape)
    H, S, A = model.shape
    d = np.zeros((H, S, A))
    state = np.zeros(S)
    state[model.s1] = 1.0
    for h in range(H):
        d[h] = state[:, None] * policy[h]
        if h + 1 < H:
            state = np.einsum("ij,ijk->k", d[h], model.p[h])
    return d


def state_occupancy(model: CmdpModel, policy: np.ndarray) -> np.ndarray:
    return occupancy_of_policy(model, policy).sum(-1)


def _reachable_mask(model: CmdpModel, policy: np.ndarray) -> np.ndarray:
    return state_occupancy(model, policy) > 0


def entropy_value(model: CmdpModel, policy: np.ndarray) -> float:
    """Expected trajectory entropy ``-E[sum_h log pi_h(a_h | s_h)]``."""
    policy = check_policy(policy, model.shape)
    reach = _reachable_mask(model, policy)
    if np.any(policy[reach] < PROB_FLOOR):
        raise DomainError("policy has zero probability at a reachable state")
    with np.errstate(divide="ignore"):
        psi = -np.log(np.maximum(policy, PROB_FLOOR))
    return evaluate_policy(model, policy, psi, label="entropy").start(model.s1)


def lagrangian(model: CmdpModel, policy: np.ndarray, lam) -> float:
    lam = np.atleast_1d(np.asarray(lam, float))
    v_r, v_u = reward_and_constraint_values(model, policy)
    return v_r + float(lam @ (v_u - model.c))


def regularized_lagrangian(model: CmdpModel, policy: np.ndarray, lam, tau: float) -> float:
    if tau <= 0:
        raise DomainError("tau must be positive")
    lam = np.atleast_1d(np.asarray(lam, float))
    return lagrangian(model, policy, lam) + tau * (entropy_value(model, policy) + 0.5 * float(lam @ lam))


def kl_rows(ref: np.ndarray, pol: np.ndarray) -> np.ndarray:
    """Row-wise ``KL(ref || pol)`` over the last axis with ``0 log 0 = 0``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(ref > 0, ref * (np.log(ref) - np.log(pol)), 0.0)
    return terms.sum(-1)


def kl_weighted(model: CmdpModel, reference: np.ndarray, policy: np.ndarray) -> float:
    """Reference-occupancy weighted KL between two policies."""
    reference = check_policy(reference, model.shape)
    policy = check_policy(policy, model.shape)
    weights = state_occupancy(model, reference)
    support = (weights[..., None] > 0) & (reference > 0)
    if np.any(policy[support] <= 0):
        raise DomainError("policy must be positive wherever the reference policy is")
    kl = kl_rows(reference, np.where(support, policy, 1.0))
    return max(0.0, float(np.sum(weights * kl)))


def potential_phi(model, reference_policy, reference_lambda, policy, lam) -> PotentialDiagnostics:
    """KL-plus-dual-distance potential to a reference saddle pair."""
    diff = np.atleast_1d(np.asarray(reference_lambda, float)) - np.atleast_1d(np.asarray(lam, float))
    return PotentialDiagnostics(
        kl_term=kl_weighted(model, reference_policy, policy),
        dual_term=0.5 * float(diff @ diff),
    )

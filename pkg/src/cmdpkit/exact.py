"""Ground truth: occupancy-measure LP, Slater gap and unconstrained planning."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import evaluate_policy, reward_and_constraint_values
from .model import CmdpModel, DimensionError
from .simplex import InfeasibleLP, linprog_max


class CmdpInfeasible(ValueError):
    """No policy satisfies all constraints."""


@dataclass(frozen=True)
class OptimalSolution:
    value: float
    occupancy: np.ndarray
    policy: np.ndarray
    dual: Optional[np.ndarray] = None


@dataclass(frozen=True)
class SlaterCertificate:
    gap: float
    witness: np.ndarray

    @property
    def feasible(self) -> bool:
        return self.gap > 0


def flow_constraints(model: CmdpModel) -> tuple[np.ndarray, np.ndarray]:
    """Bellman-flow equalities over the flattened ``(H, S, A)`` occupancy."""
    H, S, A = model.shape
    n = H * S * A
    A_eq = np.zeros((H * S, n))
    b_eq = np.zeros(H * S)
    idx = np.arange(n).reshape(H, S, A)
    for s in range(S):
        A_eq[s, idx[0, s]] = 1.0
    b_eq[model.s1] = 1.0
    for h in range(1, H):
        for s2 in range(S):
            row = h * S + s2
            A_eq[row, idx[h, s2]] = 1.0
            A_eq[row, idx[h - 1].ravel()] -= model.p[h - 1, :, :, s2].ravel()
    return A_eq, b_eq


def policy_from_occupancy(occupancy: np.ndarray) -> np.ndarray:
    """Normalise occupancy rows; states without mass get the uniform row."""
    d = np.maximum(np.asarray(occupancy, float), 0.0)
    mass = d.sum(-1, keepdims=True)
    uniform = np.full_like(d, 1.0 / d.shape[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(mass > 0, d / np.where(mass > 0, mass, 1.0), uniform)


def solve_cmdp_lp(model: CmdpModel) -> OptimalSolution:
    """Optimal constrained value via the occupancy-measure linear program."""
    H, S, A = model.shape
    A_eq, b_eq = flow_constraints(model)
    A_ge = model.u.reshape(model.I, -1)
    try:
        res = linprog_max(model.r.ravel(), A_eq, b_eq, A_ge, model.c)
    except InfeasibleLP as exc:
        raise CmdpInfeasible(f"constraint set is empty: {exc}") from exc
    d = res.x.reshape(H, S, A)
    lam = np.maximum(-res.duals_ge, 0.0)
    return OptimalSolution(
        value=res.value,
        occupancy=d,
        policy=policy_from_occupancy(d),
        dual=None if np.any(np.isnan(lam)) else lam,
    )


def slater_gap(model: CmdpModel) -> SlaterCertificate:
    """Largest uniform slack ``t`` with ``V_{u_i} >= c_i + t`` for some policy."""
    H, S, A = model.shape
    n = H * S * A
    A_eq, b_eq = flow_constraints(model)
    A_eq = np.hstack([A_eq, np.zeros((A_eq.shape[0], 1))])
    A_ge = np.hstack([model.u.reshape(model.I, -1), -np.ones((model.I, 1))])
    obj = np.zeros(n + 1)
    obj[-1] = 1.0
    free = np.zeros(n + 1, bool)
    free[-1] = True
    res = linprog_max(obj, A_eq, b_eq, A_ge, model.c, free=free)
    witness = policy_from_occupancy(res.x[:n].reshape(H, S, A))
    return SlaterCertificate(gap=res.value, witness=witness)


def dp_plan(model: CmdpModel, reward_fn) -> tuple[np.ndarray, float]:
    """Greedy deterministic policy maximising ``reward_fn`` (ties: lowest action)."""
    reward_fn = np.asarray(reward_fn, float)
    if reward_fn.shape != model.shape:
        raise DimensionError(f"reward shape {reward_fn.shape} != {model.shape}")
    return plan_greedy(model.p, reward_fn, model.s1)


def plan_greedy(p: np.ndarray, reward_fn: np.ndarray, s1: int) -> tuple[np.ndarray, float]:
    H, S, A, _ = p.shape
    policy = np.zeros((H, S, A))
    v = np.zeros(S)
    for h in range(H - 1, -1, -1):
        q = reward_fn[h] + p[h] @ v
        best = np.argmax(q, axis=1)
        policy[h, np.arange(S), best] = 1.0
        v = q[np.arange(S), best]
    return policy, float(v[s1])


def is_feasible(model: CmdpModel, policy: np.ndarray, slack: float = 0.0) -> bool:
    _, v_u = reward_and_constraint_values(model, policy)
    return bool(np.all(v_u >= model.c - slack))


def policy_value(model: CmdpModel, policy: np.ndarray) -> float:
    return evaluate_policy(model, policy, model.r).start(model.s1)

"""Saddle-point iterations with an exact value-function oracle.

Three schemes share the dual projection onto ``[0, cap]^I``:

* ``vanilla-pd``: exponentiated-gradient ascent on ``Q_{r + lam.u}``, projected
  dual descent.
* ``reg-pd``: same, with the entropy surrogate ``-log pi`` added to the reward
  and a ``(1 - eta * tau)`` shrinkage on the multipliers.
* ``reg-dual``: the primal is the exact entropy-regularised best response.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import backward_values, potential_phi
from .model import PROB_FLOOR, CmdpModel, DomainError, ValueTable, check_policy, uniform_policy

SCHEME_KINDS = ("vanilla-pd", "reg-pd", "reg-dual")


@dataclass(frozen=True)
class SchemeConfig:
    eta: float
    tau: float
    cap: float
    iterations: int = 1
    kind: str = "reg-pd"

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if self.eta <= 0 or self.cap <= 0 or self.tau < 0:
            raise ValueError("need eta > 0, cap > 0, tau >= 0")
        if self.kind != "vanilla-pd" and self.tau == 0:
            raise ValueError(f"{self.kind} needs tau > 0")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")


@dataclass
class IterateRecord:
    k: int
    subopt: float
    violations: np.ndarray
    lam: np.ndarray
    value_r: float
    value_u: np.ndarray
    phi: Optional[object] = None

    @property
    def max_violation(self) -> float:
        return float(self.violations.max(initial=0.0))


def hyperparams_for_accuracy(epsilon: float) -> tuple[float, float, float]:
    """``(eta, tau, cap)`` proportional to ``(eps^6, eps^2, 1/eps)``, unit constants."""
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    return epsilon ** 6, epsilon ** 2, 1.0 / epsilon


def log_policy(policy: np.ndarray) -> np.ndarray:
    return np.log(np.maximum(policy, PROB_FLOOR))


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(-1, keepdims=True)
    w = np.exp(z)
    out = w / w.sum(-1, keepdims=True)
    return np.maximum(out, PROB_FLOOR)


def exponentiated_update(policy: np.ndarray, q: np.ndarray, eta: float) -> np.ndarray:
    """``pi' ∝ pi * exp(eta * q)`` per row, computed in log space."""
    return softmax_rows(log_policy(policy) + eta * q)


def dual_update(lam, gap, eta: float, tau: float, cap: float) -> np.ndarray:
    """``clip((1 - eta tau) lam - eta gap, 0, cap)`` where ``gap = V_u - c``."""
    return np.clip((1.0 - eta * tau) * lam - eta * gap, 0.0, cap)


def _pd_update(model: CmdpModel, policy, lam, eta, tau, cap):
    lam = np.atleast_1d(np.asarray(lam, float))
    tables = [model.r[None], model.u]
    if tau > 0:
        tables.append(-log_policy(policy)[None])
    v, q = backward_values(model.p, policy, np.concatenate(tables))
    q_z = q[0] + np.tensordot(lam, q[1:1 + model.I], axes=1)
    if tau > 0:
        q_z = q_z + tau * q[-1]
    v_start = v[:, 0, model.s1]
    v_r, v_u = float(v_start[0]), v_start[1:1 + model.I]
    new_policy = exponentiated_update(policy, q_z, eta)
    new_lam = dual_update(lam, v_u - model.c, eta, tau, cap)
    return new_policy, new_lam, v_r, v_u


def vanilla_pd_step(model: CmdpModel, policy, lam, config: SchemeConfig):
    policy = check_policy(policy, model.shape)
    new_policy, new_lam, _, _ = _pd_update(model, policy, lam, config.eta, 0.0, config.cap)
    return new_policy, new_lam


def reg_pd_step(model: CmdpModel, policy, lam, config: SchemeConfig):
    policy = check_policy(policy, model.shape, strictly_positive=config.tau > 0)
    new_policy, new_lam, _, _ = _pd_update(model, policy, lam, config.eta, config.tau, config.cap)
    return new_policy, new_lam


def soft_value_iteration(p: np.ndarray, reward_fn: np.ndarray, tau: float):
    """Maximiser of ``V_reward(pi) + tau * H(pi)`` by log-sum-exp backups.

    Returns ``(policy, ValueTable)``; the table holds soft values.
    """
    if tau <= 0:
        raise DomainError("tau must be positive")
    H, S, A, _ = p.shape
    reward_fn = np.asarray(reward_fn, float)
    policy = np.empty((H, S, A))
    q = np.empty((H, S, A))
    v = np.zeros((H + 1, S))
    for h in range(H - 1, -1, -1):
        q[h] = reward_fn[h] + p[h] @ v[h + 1]
        z = q[h] / tau
        zmax = z.max(-1, keepdims=True)
        w = np.exp(z - zmax)
        total = w.sum(-1, keepdims=True)
        v[h] = tau * (zmax + np.log(total))[:, 0]
        policy[h] = np.maximum(w / total, PROB_FLOOR)
    return policy, ValueTable(v=v, q=q, label="soft")


def _constraint_values(model: CmdpModel, policy) -> tuple[float, np.ndarray]:
    v, _ = backward_values(model.p, policy, np.concatenate([model.r[None], model.u]))
    start = v[:, 0, model.s1]
    return float(start[0]), start[1:]


def best_response(model: CmdpModel, lam, tau: float) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lam, float))
    policy, _ = soft_value_iteration(model.p, model.r + np.tensordot(lam, model.u, axes=1), tau)
    return policy


def reg_dual_oracle_step(model: CmdpModel, lam, config: SchemeConfig):
    """Regularised best response to ``lam`` and one shrunk dual descent step."""
    lam = np.atleast_1d(np.asarray(lam, float))
    policy = best_response(model, lam, config.tau)
    _, v_u = _constraint_values(model, policy)
    return policy, dual_update(lam, v_u - model.c, config.eta, config.tau, config.cap)


@dataclass
class SaddlePoint:
    policy: np.ndarray
    lam: np.ndarray
    iterations: int
    approximate: bool = field(default=True)


_SADDLE_CACHE: dict = {}


def reference_saddle_point(model: CmdpModel, tau: float, cap: float, eta: float = 0.05,
                           iterations: int = 1_000_000) -> SaddlePoint:
    """Approximate regularised saddle pair from a long oracle dual run.

    The dual map is deterministic, so the loop stops once ``lam`` is a
    bit-exact fixed point; later iterates would repeat it.
    Cached per ``(model, tau, cap)``.
    """
    key = (model.p.tobytes(), model.r.tobytes(), model.u.tobytes(), model.c.tobytes(),
           model.s1, tau, cap, eta, iterations)
    if key in _SADDLE_CACHE:
        return _SADDLE_CACHE[key]
    lam = np.zeros(model.I)
    rewards = np.concatenate([model.r[None], model.u])
    done = 0
    for done in range(1, iterations + 1):
        policy, _ = soft_value_iteration(model.p, model.r + np.tensordot(lam, model.u, axes=1), tau)
        v, _ = backward_values(model.p, policy, rewards)
        new_lam = dual_update(lam, v[1:, 0, model.s1] - model.c, eta, tau, cap)
        if np.array_equal(new_lam, lam):
            break
        lam = new_lam
    policy = best_response(model, lam, tau)
    result = SaddlePoint(policy=policy, lam=lam, iterations=done)
    _SADDLE_CACHE[key] = result
    return result


def run_oracle_scheme(model: CmdpModel, reference, config: SchemeConfig,
                      saddle: Optional[SaddlePoint] = None) -> list[IterateRecord]:
    """Iterate a scheme from the uniform policy and zero multipliers.

    Record ``k`` describes ``(pi_k, lam_k)`` before the ``k``-th update.
    """
    policy = uniform_policy(model)
    lam = np.zeros(model.I)
    records: list[IterateRecord] = []
    tau = config.tau if config.kind != "vanilla-pd" else 0.0
    for k in range(1, config.iterations + 1):
        if config.kind == "reg-dual":
            policy = best_response(model, lam, config.tau)
            v_r, v_u = _constraint_values(model, policy)
            new_policy, new_lam = policy, dual_update(lam, v_u - model.c, config.eta, tau, config.cap)
        else:
            new_policy, new_lam, v_r, v_u = _pd_update(model, policy, lam, config.eta, tau, config.cap)
        phi = None
        if saddle is not None:
            phi = potential_phi(model, saddle.policy, saddle.lam, policy, lam)
        records.append(IterateRecord(
            k=k,
            subopt=max(0.0, reference.value - v_r),
            violations=np.maximum(model.c - v_u, 0.0),
            lam=lam.copy(),
            value_r=v_r,
            value_u=v_u.copy(),
            phi=phi,
        ))
        policy, lam = new_policy, new_lam
    return records

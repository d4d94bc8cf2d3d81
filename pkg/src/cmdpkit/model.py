"""Tabular finite-horizon CMDP data types.

Arrays use 0-based step indices: ``p[h, s, a, s']`` for h in ``range(H)``.
Policies are plain ``(H, S, A)`` float arrays whose rows lie on the simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROB_FLOOR = 1e-300
SIMPLEX_TOL = 1e-9


class DimensionError(ValueError):
    """Array shapes do not match the model dimensions."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class CmdpModel:
    """Finite-horizon CMDP with ``I`` constraints ``V_{u_i} >= c_i``."""

    p: np.ndarray  # (H, S, A, S)
    r: np.ndarray  # (H, S, A)
    u: np.ndarray  # (I, H, S, A)
    c: np.ndarray  # (I,)
    s1: int = 0

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        r = np.asarray(self.r, dtype=float)
        u = np.asarray(self.u, dtype=float)
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        if p.ndim != 4 or p.shape[1] != p.shape[3]:
            raise DimensionError(f"transitions must have shape (H, S, A, S), got {p.shape}")
        H, S, A, _ = p.shape
        if r.shape != (H, S, A):
            raise DimensionError(f"reward shape {r.shape} != {(H, S, A)}")
        if u.ndim == 3:
            u = u[None]
        if u.shape[1:] != (H, S, A):
            raise DimensionError(f"constraint shape {u.shape} != (I, {H}, {S}, {A})")
        if c.shape != (u.shape[0],):
            raise DimensionError(f"thresholds shape {c.shape} != ({u.shape[0]},)")
        if not 0 <= self.s1 < S:
            raise DimensionError(f"initial state {self.s1} out of range for S={S}")
        if np.any(p < 0) or np.any(np.abs(p.sum(-1) - 1) > SIMPLEX_TOL):
            raise DomainError("transition rows must be probability vectors")
        if np.any((r < 0) | (r > 1)) or np.any((u < 0) | (u > 1)):
            raise DomainError("reward and constraint means must lie in [0, 1]")
        for name, arr in (("p", p), ("r", r), ("u", u), ("c", c)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "s1", int(self.s1))

    @property
    def H(self) -> int:
        return self.p.shape[0]

    @property
    def S(self) -> int:
        return self.p.shape[1]

    @property
    def A(self) -> int:
        return self.p.shape[2]

    @property
    def I(self) -> int:  # noqa: E743
        return self.u.shape[0]

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.H, self.S, self.A)

    def with_thresholds(self, c) -> "CmdpModel":
        return CmdpModel(self.p, self.r, self.u, np.atleast_1d(np.asarray(c, float)), self.s1)

    def to_dict(self) -> dict:
        return {
            "S": self.S, "A": self.A, "H": self.H, "I": self.I, "s1": self.s1,
            "p": self.p.tolist(), "r": self.r.tolist(),
            "u": self.u.tolist(), "c": self.c.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CmdpModel":
        model = cls(
            p=np.array(d["p"], float), r=np.array(d["r"], float),
            u=np.array(d["u"], float).reshape(-1, d["H"], d["S"], d["A"]),
            c=np.array(d["c"], float), s1=d.get("s1", 0),
        )
        if model.shape != (d["H"], d["S"], d["A"]) or model.I != d["I"]:
            raise DimensionError("declared dimensions disagree with array shapes")
        return model


def minimal_bandit() -> CmdpModel:
    """Single-state, single-step constrained bandit with three options.

    Option 2 (index 1) is optimal with value 1 and constraint slack 0.4.
    """
    return CmdpModel(
        p=np.ones((1, 1, 3, 1)),
        r=np.array([[[0.2, 1.0, 0.6]]]),
        u=np.array([[[[0.1, 0.9, 0.5]]]]),
        c=np.array([0.5]),
    )


def uniform_policy(model_or_shape) -> np.ndarray:
    shape = model_or_shape.shape if isinstance(model_or_shape, CmdpModel) else tuple(model_or_shape)
    return np.full(shape, 1.0 / shape[-1])


def check_policy(policy: np.ndarray, shape=None, strictly_positive: bool = False) -> np.ndarray:
    policy = np.asarray(policy, dtype=float)
    if shape is not None and policy.shape != tuple(shape):
        raise DimensionError(f"policy shape {policy.shape} != {tuple(shape)}")
    if np.any(policy < 0) or np.any(np.abs(policy.sum(-1) - 1) > SIMPLEX_TOL):
        raise DomainError("policy rows must lie on the probability simplex")
    if strictly_positive and np.any(policy < PROB_FLOOR):
        raise DomainError("policy must be strictly positive")
    return policy


def deterministic_policy(actions: np.ndarray, num_actions: int) -> np.ndarray:
    """One-hot policy from an ``(H, S)`` array of action indices."""
    actions = np.asarray(actions)
    return np.eye(num_actions)[actions]


def clamp_policy(policy: np.ndarray, floor: float = PROB_FLOOR) -> np.ndarray:
    """Raise entries to ``floor`` and renormalise; keeps log-policies finite."""
    policy = np.maximum(policy, floor)
    return policy / policy.sum(-1, keepdims=True)


@dataclass(frozen=True)
class ValueTable:
    v: np.ndarray  # (H + 1, S); row H is the terminal zero
    q: np.ndarray  # (H, S, A)
    label: str = ""

    def start(self, s1: int) -> float:
        return float(self.v[0, s1])


@dataclass(frozen=True)
class DualBox:
    """Projection box ``[0, cap]^I`` for Lagrange multipliers."""

    cap: float
    num_constraints: int = 1

    def project(self, lam: np.ndarray) -> np.ndarray:
        return np.clip(lam, 0.0, self.cap)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.num_constraints)


@dataclass(frozen=True)
class PotentialDiagnostics:
    kl_term: float
    dual_term: float
    phi: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "phi", self.kl_term + self.dual_term)

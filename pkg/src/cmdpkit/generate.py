"""Random CMDP instances and episode sampling.

Randomness comes from numpy's PCG64 bit generator seeded through
``SeedSequence``; sub-streams are keyed by integer tuples such as
``(base_seed, cell, run, episode)`` so every draw is reproducible and
independent of execution order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .exact import CmdpInfeasible, slater_gap, solve_cmdp_lp
from .model import CmdpModel
from .optimism import Trajectory

log = logging.getLogger(__name__)

MIN_SLATER_GAP = 0.05
MAX_THRESHOLD_DRAWS = 1000


def make_rng(*key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in key])))


@dataclass(frozen=True)
class GeneratorConfig:
    S: int = 5
    A: int = 5
    H: int = 5
    I: int = 1
    beta: float = 0.1
    seed: int = 123
    thresholds: Optional[Sequence[float]] = None  # None: uniform on [0, H]

    def __post_init__(self):
        if min(self.S, self.A, self.H, self.I) < 1:
            raise ValueError("dimensions must be >= 1")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")
        if self.thresholds is not None and len(self.thresholds) != self.I:
            raise ValueError("need one threshold per constraint")


def generate_cmdp(cfg: GeneratorConfig) -> CmdpModel:
    """Uniform rewards, anti-correlated constraint rewards, uniform-then-normalised rows.

    Random thresholds are redrawn until the instance is feasible with a
    Slater gap of at least ``MIN_SLATER_GAP``.
    """
    rng = make_rng(cfg.seed)
    H, S, A, I = cfg.H, cfg.S, cfg.A, cfg.I
    r = rng.random((H, S, A))
    u = np.clip((1.0 - r)[None] + cfg.beta * rng.standard_normal((I, H, S, A)), 0.0, 1.0)
    p = rng.random((H, S, A, S))
    p /= p.sum(-1, keepdims=True)
    if cfg.thresholds is not None:
        return CmdpModel(p, r, u, np.asarray(cfg.thresholds, float))
    for attempt in range(MAX_THRESHOLD_DRAWS):
        model = CmdpModel(p, r, u, rng.uniform(0.0, H, size=I))
        gap = slater_gap(model).gap
        if gap >= MIN_SLATER_GAP:
            return model
        log.info("seed %d: threshold draw %d rejected (slater gap %.4f)", cfg.seed, attempt, gap)
    raise CmdpInfeasible(f"no feasible thresholds after {MAX_THRESHOLD_DRAWS} draws")


def cumulative_rows(a: np.ndarray) -> np.ndarray:
    cum = np.cumsum(a, axis=-1)
    cum[..., -1] = 1.0
    return cum


def sample_episode(model: CmdpModel, policy: np.ndarray, rng: np.random.Generator,
                   deterministic_rewards: bool = False, _cum=None) -> Trajectory:
    """Roll out ``policy`` from ``s1`` with Bernoulli reward draws.

    ``_cum`` optionally carries the precomputed cumulative transition rows.
    """
    H, I = model.H, model.I
    cum_p = cumulative_rows(model.p) if _cum is None else _cum
    cum_pi = cumulative_rows(policy)
    draws = rng.random((H, 3 + I))
    states = np.empty(H, dtype=np.int64)
    actions = np.empty(H, dtype=np.int64)
    nxt = np.empty(H, dtype=np.int64)
    s = model.s1
    for h in range(H):
        a = int(np.searchsorted(cum_pi[h, s], draws[h, 0], side="right"))
        s2 = int(np.searchsorted(cum_p[h, s, a], draws[h, 1], side="right"))
        states[h], actions[h], nxt[h] = s, a, s2
        s = s2
    means_r = model.r[np.arange(H), states, actions]
    means_u = model.u[:, np.arange(H), states, actions].T
    if deterministic_rewards:
        rewards, g = means_r.copy(), means_u.copy()
    else:
        rewards = (draws[:, 2] < means_r).astype(float)
        g = (draws[:, 3:] < means_u).astype(float)
    return Trajectory(states, actions, rewards, g, nxt)


def solvable(model: CmdpModel) -> bool:
    try:
        solve_cmdp_lp(model)
    except CmdpInfeasible:
        return False
    return True

"""Grid sweeps over learners, seeds and runs."""

from __future__ import annotations

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .exact import CmdpInfeasible, slater_gap, solve_cmdp_lp
from .generate import GeneratorConfig, generate_cmdp
from .io import fmt, ledger_rows, load_model, save_model, write_csv
from .learners import LEARNER_KINDS, RegretLedger, run_learner
from .optimism import BonusConfig
from .schemes import SchemeConfig

log = logging.getLogger(__name__)

VANILLA_ETAS = (0.05, 0.075, 0.1, 0.125, 0.15, 0.2)
REG_ETAS = (0.05, 0.1, 0.2)
REG_TAUS = (0.01, 0.02)
MAX_REGENERATIONS = 100


@dataclass
class ExperimentConfig:
    algorithms: tuple = ("reg-pd", "vanilla-pd")
    episodes: int = 4000
    runs: int = 5
    base_seed: int = 123
    vanilla_etas: tuple = VANILLA_ETAS
    reg_etas: tuple = REG_ETAS
    reg_taus: tuple = REG_TAUS
    cap: float = 6.0
    bonus_mode: str = "scaled"
    bonus_coef: float = 0.08
    bonus_delta: float = 0.1
    epsilons: tuple = (0.05, 0.1)
    reward_noise: str = "bernoulli"  # or "deterministic"
    model_file: Optional[str] = None
    generator: dict = field(default_factory=dict)
    output_dir: str = "results"
    jobs: int = 1

    def __post_init__(self):
        for name in ("algorithms", "vanilla_etas", "reg_etas", "reg_taus", "epsilons"):
            setattr(self, name, tuple(getattr(self, name)))
        bad = set(self.algorithms) - set(LEARNER_KINDS)
        if bad:
            raise ValueError(f"unknown algorithms {sorted(bad)}")
        if self.episodes < 1 or self.runs < 1:
            raise ValueError("episodes and runs must be >= 1")
        if not self.algorithms or not all(self.grid(a) for a in self.algorithms):
            raise ValueError("hyperparameter grid is empty")
        if self.reward_noise not in ("bernoulli", "deterministic"):
            raise ValueError("reward_noise must be 'bernoulli' or 'deterministic'")

    def grid(self, algo: str) -> list[tuple[float, float]]:
        if algo.startswith("vanilla"):
            return [(float(e), 0.0) for e in self.vanilla_etas]
        return [(float(e), float(t)) for e in self.reg_etas for t in self.reg_taus]

    def cells(self):
        """``(algo_index, algo, cell_index, eta, tau)`` in a fixed order."""
        for ai, algo in enumerate(self.algorithms):
            for ci, (eta, tau) in enumerate(self.grid(algo)):
                yield ai, algo, ci, eta, tau


def cell_name(algo: str, eta: float, tau: float) -> str:
    return f"{algo}_eta{eta:g}_tau{tau:g}"


def resolve_model(cfg: ExperimentConfig):
    """Load or generate the instance; infeasible draws move on to the next seed."""
    if cfg.model_file:
        return load_model(cfg.model_file), None
    gen = dict(cfg.generator)
    seed = int(gen.pop("seed", cfg.base_seed))
    for attempt in range(MAX_REGENERATIONS):
        try:
            model = generate_cmdp(GeneratorConfig(seed=seed + attempt, **gen))
            solve_cmdp_lp(model)
            return model, seed + attempt
        except CmdpInfeasible as exc:
            log.warning("generator seed %d skipped: %s", seed + attempt, exc)
    raise CmdpInfeasible("no feasible instance found")


def _run_cell(args):
    model, reference, cfg, ai, algo, ci, eta, tau, run = args
    scheme = SchemeConfig(eta=eta, tau=tau, cap=cfg.cap, kind="vanilla-pd" if tau == 0 else "reg-pd")
    bonus = BonusConfig(mode=cfg.bonus_mode, coef=cfg.bonus_coef, delta=cfg.bonus_delta,
                        episodes=cfg.episodes)
    ledger = run_learner(
        model, reference, algo, scheme, cfg.episodes,
        seed_key=(cfg.base_seed, ai, ci, run), bonus=bonus, epsilons=cfg.epsilons,
        deterministic_rewards=cfg.reward_noise == "deterministic",
    )
    out = Path(cfg.output_dir) / "runs" / f"{cell_name(algo, eta, tau)}_run{run}.csv"
    write_csv(out, ledger_rows(ledger, algo, eta, tau, cfg.cap, run))
    return (ai, ci, run), ledger


def _mean_rows(ledgers: list[RegretLedger], algo, eta, tau, cap):
    stack = {
        name: np.mean([np.asarray(getattr(L, name), float) for L in ledgers], axis=0)
        for name in ("subopt", "strong_r", "strong_u", "weak_r", "weak_u")
    }
    vmax = np.mean([[L.max_violation(k) for k in range(len(L))] for L in ledgers], axis=0)
    unsafe = np.mean([[u[0] for u in L.unsafe] for L in ledgers], axis=0)
    for k in range(len(vmax)):
        yield (k + 1, algo, eta, tau, cap, "mean", float(stack["subopt"][k]), float(vmax[k]),
               float(stack["strong_r"][k]), float(stack["strong_u"][k]),
               float(stack["weak_r"][k]), float(stack["weak_u"][k]), float(unsafe[k]))


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Run every (algorithm, cell, run); write CSVs and a best-cell summary.

    Output bytes do not depend on ``cfg.jobs``.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    model, seed_used = resolve_model(cfg)
    reference = solve_cmdp_lp(model)
    save_model(model, out / "model.json")
    tasks = [(model, reference, cfg, ai, algo, ci, eta, tau, run)
             for ai, algo, ci, eta, tau in cfg.cells() for run in range(cfg.runs)]
    if cfg.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = dict(pool.map(_run_cell, tasks))
    else:
        results = dict(map(_run_cell, tasks))

    summary = {"reference_value": reference.value, "slater_gap": slater_gap(model).gap,
               "generator_seed": seed_used, "episodes": cfg.episodes, "runs": cfg.runs,
               "cells": [], "best": {}}
    for ai, algo in enumerate(cfg.algorithms):
        scored = []
        for ci, (eta, tau) in enumerate(cfg.grid(algo)):
            ledgers = [results[(ai, ci, run)] for run in range(cfg.runs)]
            name = cell_name(algo, eta, tau)
            write_csv(out / "curves" / f"{name}.csv", _mean_rows(ledgers, algo, eta, tau, cfg.cap))
            final_u = float(np.mean([L.strong_u[-1] for L in ledgers]))
            final_r = float(np.mean([L.strong_r[-1] for L in ledgers]))
            entry = {
                "algo": algo, "eta": eta, "tau": tau, "cell": name,
                "strong_reg_u": final_u, "strong_reg_r": final_r,
                "weak_reg_u": float(np.mean([L.weak_u[-1] for L in ledgers])),
                "weak_reg_r": float(np.mean([L.weak_r[-1] for L in ledgers])),
                "eps_unsafe": {fmt(e): float(np.mean([L.unsafe[-1][j] for L in ledgers]))
                               for j, e in enumerate(cfg.epsilons)},
            }
            summary["cells"].append(entry)
            scored.append(((final_u, final_r, name), entry))
        # ties resolve to the lexicographically first cell name
        summary["best"][algo] = min(scored, key=lambda t: t[0])[1]["cell"]
    summary["config"] = {k: v for k, v in asdict(cfg).items() if k not in ("output_dir", "jobs")}
    (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return summary

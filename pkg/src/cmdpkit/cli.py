"""Command-line entry point: ``cmdpkit {generate,solve,oracle,learn,sweep,plot}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path


from .exact import slater_gap, solve_cmdp_lp
from .experiment import ExperimentConfig, run_experiment
from .generate import GeneratorConfig, generate_cmdp
from .io import ledger_rows, load_model, save_model, write_csv
from .learners import LEARNER_KINDS, RegretLedger, run_learner
from .model import minimal_bandit
from .optimism import BonusConfig
from .plot import METRICS, emit_plot
from .schemes import SCHEME_KINDS, SchemeConfig, run_oracle_scheme


def floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _model(args):
    return minimal_bandit() if args.model == "bandit" else load_model(args.model)


def cmd_generate(args):
    cfg = GeneratorConfig(S=args.S, A=args.A, H=args.H, I=args.I, beta=args.beta, seed=args.seed,
                          thresholds=floats(args.thresholds) if args.thresholds else None)
    model = generate_cmdp(cfg)
    save_model(model, args.output)
    print(json.dumps({"model": str(args.output), "c": model.c.tolist()}))


def cmd_solve(args):
    model = _model(args)
    sol = solve_cmdp_lp(model)
    cert = slater_gap(model)
    print(json.dumps({
        "value": sol.value,
        "slater_gap": cert.gap,
        "dual": None if sol.dual is None else sol.dual.tolist(),
        "policy": sol.policy.tolist(),
    }))


def cmd_oracle(args):
    model = _model(args)
    reference = solve_cmdp_lp(model)
    cfg = SchemeConfig(eta=args.eta, tau=args.tau, cap=args.cap, iterations=args.iterations,
                       kind=args.scheme)
    ledger = RegretLedger(num_constraints=model.I)
    for rec in run_oracle_scheme(model, reference, cfg):
        ledger.append(reference.value - rec.value_r, model.c - rec.value_u)
    write_csv(args.output, ledger_rows(ledger, args.scheme, cfg.eta, cfg.tau, cfg.cap, 0))
    last = ledger.max_violation(len(ledger) - 1) if len(ledger) else None
    print(json.dumps({"csv": str(args.output), "iterations": len(ledger), "last_violation": last}))


def cmd_learn(args):
    model = _model(args)
    reference = solve_cmdp_lp(model)
    scheme = SchemeConfig(eta=args.eta, tau=args.tau, cap=args.cap,
                          kind="reg-pd" if args.tau > 0 else "vanilla-pd")
    bonus = BonusConfig(mode=args.bonus_mode, coef=args.bonus_coef, delta=args.delta,
                        episodes=args.episodes)
    ledger = run_learner(model, reference, args.algo, scheme, args.episodes, (args.seed, 0, 0, 0),
                         bonus=bonus, deterministic_rewards=args.reward_noise == "deterministic")
    write_csv(args.output, ledger_rows(ledger, args.algo, args.eta, args.tau, args.cap, 0))
    print(json.dumps({"csv": str(args.output), "strong_reg_u": ledger.strong_u[-1],
                      "strong_reg_r": ledger.strong_r[-1]}))


def cmd_sweep(args):
    names = {f.name for f in fields(ExperimentConfig)}
    values = {k: v for k, v in vars(args).items() if k in names and v is not None}
    if args.config:
        values.update(json.loads(Path(args.config).read_text()))
    summary = run_experiment(ExperimentConfig(**values))
    print(json.dumps({"best": summary["best"], "output_dir": values.get("output_dir", "results")}))


def cmd_plot(args):
    out = emit_plot(args.csv, args.kind, args.output, column=args.column)
    print(json.dumps({"svg": str(out)}))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmdpkit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a random CMDP model file")
    for dim in ("S", "A", "H"):
        p.add_argument(f"--{dim}", type=int, default=5)
    p.add_argument("--I", type=int, default=1)
    p.add_argument("--beta", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=123)
    p.add_argument("--thresholds", help="comma-separated fixed thresholds")
    p.add_argument("-o", "--output", default="model.json")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="LP optimum and Slater gap")
    p.add_argument("--model", default="bandit", help="model file, or 'bandit'")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("oracle", help="run a scheme with exact value functions")
    p.add_argument("--model", default="bandit")
    p.add_argument("--scheme", choices=SCHEME_KINDS, default="reg-pd")
    p.add_argument("--eta", type=float, default=0.05)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--cap", type=float, default=6.0)
    p.add_argument("--iterations", type=int, default=20000)
    p.add_argument("-o", "--output", default="oracle.csv")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("learn", help="run one online learner")
    p.add_argument("--model", default="bandit")
    p.add_argument("--algo", choices=LEARNER_KINDS, default="reg-pd")
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--cap", type=float, default=6.0)
    p.add_argument("--episodes", type=int, default=4000)
    p.add_argument("--seed", type=int, default=123)
    p.add_argument("--bonus-mode", choices=("scaled", "theory"), default="scaled")
    p.add_argument("--bonus-coef", type=float, default=0.08)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--reward-noise", choices=("bernoulli", "deterministic"), default="bernoulli")
    p.add_argument("-o", "--output", default="learn.csv")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("sweep", help="grid sweep; a --config JSON file overrides flags")
    p.add_argument("--config")
    p.add_argument("--algorithms", type=lambda s: s.split(","))
    p.add_argument("--episodes", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--base-seed", dest="base_seed", type=int)
    p.add_argument("--vanilla-etas", dest="vanilla_etas", type=floats)
    p.add_argument("--reg-etas", dest="reg_etas", type=floats)
    p.add_argument("--reg-taus", dest="reg_taus", type=floats)
    p.add_argument("--cap", type=float)
    p.add_argument("--bonus-mode", dest="bonus_mode", choices=("scaled", "theory"))
    p.add_argument("--bonus-coef", dest="bonus_coef", type=float)
    p.add_argument("--epsilons", type=floats)
    p.add_argument("--reward-noise", dest="reward_noise", choices=("bernoulli", "deterministic"))
    p.add_argument("--model-file", dest="model_file")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("plot", help="SVG line chart from CSV files")
    p.add_argument("csv", nargs="+")
    p.add_argument("--kind", choices=sorted(METRICS), default="strong")
    p.add_argument("--column", help="override the plotted CSV column")
    p.add_argument("-o", "--output", default="plot.svg")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except Exception as exc:  # noqa: BLE001
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Model files (JSON) and per-episode CSV records."""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .model import CmdpModel

CSV_HEADER = (
    "episode", "algo", "eta", "tau", "lambda_max", "run", "subopt", "violation_max",
    "strong_reg_r", "strong_reg_u", "weak_reg_r", "weak_reg_u", "eps_unsafe_count",
)


class FormatError(ValueError):
    pass


def save_model(model: CmdpModel, path) -> None:
    Path(path).write_text(json.dumps(model.to_dict(), indent=1) + "\n")


def load_model(path) -> CmdpModel:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not a model file ({exc})") from exc
    missing = {"S", "A", "H", "I", "p", "r", "u", "c"} - set(data)
    if missing:
        raise FormatError(f"{path}: missing fields {sorted(missing)}")
    return CmdpModel.from_dict(data)


def fmt(x) -> str:
    if isinstance(x, float):
        return repr(float(x))
    return str(x)


def ledger_rows(ledger, algo: str, eta: float, tau: float, cap: float, run, eps_index: int = 0):
    for k in range(len(ledger)):
        yield (
            k + 1, algo, eta, tau, cap, run,
            float(ledger.subopt[k]), ledger.max_violation(k),
            float(ledger.strong_r[k]), float(ledger.strong_u[k]),
            float(ledger.weak_r[k]), float(ledger.weak_u[k]),
            ledger.unsafe[k][eps_index] if ledger.unsafe[k] else 0,
        )


def write_csv(path, rows) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([fmt(x) for x in row])


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise FormatError(f"{path}: unexpected header {reader.fieldnames}")
        return list(reader)

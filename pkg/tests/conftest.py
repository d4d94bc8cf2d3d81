import json
import time

import numpy as np
import pytest

from cmdpkit.cli import main
from cmdpkit.io import read_csv
from cmdpkit.model import CmdpModel, minimal_bandit


def random_model(seed, H=3, S=3, A=2, I=1, threshold_scale=0.5) -> CmdpModel:
    rng = np.random.default_rng(seed)
    p = rng.random((H, S, A, S))
    p /= p.sum(-1, keepdims=True)
    return CmdpModel(
        p=p,
        r=rng.random((H, S, A)),
        u=rng.random((I, H, S, A)),
        c=rng.random(I) * H * threshold_scale,
        s1=int(rng.integers(S)),
    )


def random_policy(rng, shape, concentration=1.0):
    return rng.dirichlet(np.full(shape[-1], concentration), size=shape[:-1])


@pytest.fixture
def bandit():
    return minimal_bandit()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


class SweepResult:
    """Output directory of a finished sweep plus curve helpers."""

    def __init__(self, out, summary):
        self.out = out
        self.summary = summary

    def runs(self, cell):
        return [read_csv(path) for path in sorted((self.out / "runs").glob(f"{cell}_run*.csv"))]

    def curve(self, cell):
        return read_csv(self.out / "curves" / f"{cell}.csv")

    def ratio(self, cell, column, k):
        return float(self.curve(cell)[k - 1][column]) / k

    def amplitude(self, cell, last=500):
        """Run-averaged peak-to-peak of the per-episode max violation."""
        spans = []
        for rows in self.runs(cell):
            v = np.array([float(row["violation_max"]) for row in rows[-last:]])
            spans.append(v.max() - v.min())
        return float(np.mean(spans))


REFERENCE_PROTOCOL = ["--algorithms", "reg-pd,vanilla-pd", "--episodes", "4000", "--runs", "5",
                  "--base-seed", "123", "--cap", "6"]


def run_sweep(out, jobs):
    """Execute the ``sweep`` subcommand on the reference protocol."""
    start = time.perf_counter()
    code = main(["sweep", *REFERENCE_PROTOCOL, "--output-dir", str(out), "--jobs", str(jobs)])
    assert code == 0
    result = SweepResult(out, json.loads((out / "summary.json").read_text()))
    result.elapsed = time.perf_counter() - start
    return result


@pytest.fixture(scope="session")
def protocol_sweep(tmp_path_factory):
    return run_sweep(tmp_path_factory.mktemp("protocol_sweep"), jobs=1)

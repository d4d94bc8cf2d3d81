import json
import re

import numpy as np
import pytest

from cmdpkit.cli import main
from cmdpkit.core import state_occupancy
from cmdpkit.exact import slater_gap
from cmdpkit.experiment import ExperimentConfig, run_experiment
from cmdpkit.generate import GeneratorConfig, generate_cmdp, make_rng, sample_episode
from cmdpkit.io import CSV_HEADER, FormatError, load_model, read_csv, save_model, write_csv
from cmdpkit.model import CmdpModel, deterministic_policy, minimal_bandit, uniform_policy
from cmdpkit.plot import emit_plot, padded_range

from conftest import random_model, random_policy


def row(episode, algo="reg-pd", value=0.0):
    return (episode, algo, 0.1, 0.01, 6.0, 0, 0.0, value, 0.0, value, 0.0, value, 0)


class TestGenerator:
    def test_no_noise(self):
        model = generate_cmdp(GeneratorConfig(S=3, A=2, H=4, beta=0.0, seed=5))
        assert np.array_equal(model.u[0], 1.0 - model.r)

    def test_default_dims(self):
        cfg = GeneratorConfig()
        assert (cfg.S, cfg.A, cfg.H, cfg.I, cfg.beta) == (5, 5, 5, 1, 0.1)

    def test_valid_over_seeds(self):
        for seed in range(100):
            model = generate_cmdp(GeneratorConfig(S=3, A=3, H=3, I=2, seed=seed))
            assert np.allclose(model.p.sum(-1), 1)
            assert np.all((model.r >= 0) & (model.r <= 1)) and np.all((model.u >= 0) & (model.u <= 1))
            assert np.all((model.c >= 0) & (model.c <= model.H))
            assert slater_gap(model).gap >= 0.05 - 1e-9

    def test_negative_correlation(self):
        for seed in range(10):
            model = generate_cmdp(GeneratorConfig(seed=seed))
            assert np.corrcoef(model.r.ravel(), model.u[0].ravel())[0, 1] <= -0.9

    def test_deterministic(self):
        a, b = generate_cmdp(GeneratorConfig(seed=9)), generate_cmdp(GeneratorConfig(seed=9))
        assert a.to_dict() == b.to_dict()

    def test_fixed_thresholds(self):
        model = generate_cmdp(GeneratorConfig(S=2, A=2, H=2, I=2, thresholds=[0.5, 1.0]))
        assert np.array_equal(model.c, [0.5, 1.0])

    @pytest.mark.parametrize("kw", [dict(S=0), dict(beta=-1.0), dict(I=2, thresholds=[1.0])])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            GeneratorConfig(**kw)


class TestSampler:
    def test_deterministic_model(self):
        H, S, A = 4, 3, 2
        p = np.zeros((H, S, A, S))
        for s in range(S):
            p[:, s, 0, (s + 1) % S] = 1
            p[:, s, 1, s] = 1
        model = CmdpModel(p, np.full((H, S, A), 0.5), np.full((1, H, S, A), 0.5), [0.0])
        pol = deterministic_policy(np.array([[0, 1, 0]] * H), A)
        trajs = [sample_episode(model, pol, make_rng(k)) for k in range(30)]
        for t in trajs:
            assert np.array_equal(t.states, [0, 1, 1, 1]) and np.array_equal(t.actions, [0, 1, 1, 1])
            assert np.array_equal(t.next_states, [1, 1, 1, 1])
        assert len({tuple(t.rewards) for t in trajs}) > 1

    def test_zero_mean_reward(self, rng):
        model = random_model(1)
        zero = CmdpModel(model.p, np.zeros(model.shape), np.zeros((1,) + model.shape), [0.0], model.s1)
        for k in range(50):
            t = sample_episode(zero, uniform_policy(zero), make_rng(k))
            assert not t.rewards.any() and not t.constraint_rewards.any()

    def test_starts_at_initial_state(self):
        model = random_model(2)
        for k in range(20):
            t = sample_episode(model, uniform_policy(model), make_rng(k))
            assert t.states[0] == model.s1
            assert np.array_equal(t.states[1:], t.next_states[:-1])

    def test_visit_frequencies(self, rng):
        model = random_model(3, H=4, S=3, A=2)
        pol = random_policy(rng, model.shape)
        n = 50_000
        visits = np.zeros((model.H, model.S))
        for k in range(n):
            t = sample_episode(model, pol, make_rng(77, k))
            visits[np.arange(model.H), t.states] += 1
        freq = visits / n
        occ = state_occupancy(model, pol)
        se = np.sqrt(occ * (1 - occ) / n)
        assert np.all(np.abs(freq - occ) <= 3 * se + 1e-12)


class TestIo:
    def test_model_round_trip(self, tmp_path):
        model = random_model(4, I=2)
        save_model(model, tmp_path / "m.json")
        back = load_model(tmp_path / "m.json")
        for name in ("p", "r", "u", "c"):
            assert np.array_equal(getattr(back, name), getattr(model, name))
        assert back.s1 == model.s1
        assert set(json.loads((tmp_path / "m.json").read_text())) >= {"S", "A", "H", "I", "s1", "p", "r", "u", "c"}

    def test_bad_model_file(self, tmp_path):
        (tmp_path / "bad.json").write_text('{"S": 1}')
        with pytest.raises(FormatError):
            load_model(tmp_path / "bad.json")
        (tmp_path / "junk.json").write_text("not json")
        with pytest.raises(FormatError):
            load_model(tmp_path / "junk.json")

    def test_csv_header_and_floats(self, tmp_path):
        write_csv(tmp_path / "a.csv", [row(1, value=np.float64(0.1))])
        lines = (tmp_path / "a.csv").read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert "np.float64" not in lines[1] and read_csv(tmp_path / "a.csv")[0]["violation_max"] == "0.1"

    def test_csv_schema_check(self, tmp_path):
        (tmp_path / "x.csv").write_text("episode,value\n1,2\n")
        with pytest.raises(FormatError):
            read_csv(tmp_path / "x.csv")


class TestExperiment:
    def small(self, tmp_path, **kw):
        base = dict(algorithms=("reg-pd",), episodes=1, runs=1, reg_etas=(0.1,), reg_taus=(0.01,),
                    generator=dict(S=2, A=2, H=2), output_dir=str(tmp_path))
        base.update(kw)
        return ExperimentConfig(**base)

    def test_single_row(self, tmp_path):
        summary = run_experiment(self.small(tmp_path))
        files = list((tmp_path / "runs").glob("*.csv"))
        assert len(files) == 1 and len(read_csv(files[0])) == 1
        assert summary["best"]["reg-pd"] == "reg-pd_eta0.1_tau0.01"

    def test_layout(self, tmp_path):
        cfg = self.small(tmp_path, algorithms=("reg-pd", "vanilla-pd"), runs=2, episodes=5,
                         vanilla_etas=(0.1, 0.2), reg_taus=(0.01, 0.02))
        summary = run_experiment(cfg)
        assert len(list((tmp_path / "runs").glob("*.csv"))) == (2 + 2) * 2
        assert len(list((tmp_path / "curves").glob("*.csv"))) == 4
        assert len(summary["cells"]) == 4
        assert all(len(read_csv(p)) == 5 for p in (tmp_path / "curves").glob("*.csv"))
        assert (tmp_path / "model.json").exists()

    def test_deterministic(self, tmp_path):
        kw = dict(algorithms=("reg-pd", "vanilla-pd"), episodes=20, runs=2, vanilla_etas=(0.1,))
        run_experiment(self.small(tmp_path / "a", **kw))
        run_experiment(self.small(tmp_path / "b", **kw))
        for path in sorted((tmp_path / "a").rglob("*.csv")):
            assert path.read_bytes() == (tmp_path / "b" / path.relative_to(tmp_path / "a")).read_bytes()

    def test_best_cell_tiebreak(self, tmp_path):
        # on a vacuous instance every cell has zero regret, so the first name wins
        model = minimal_bandit().with_thresholds([0.0])
        save_model(model, tmp_path / "m.json")
        cfg = self.small(tmp_path / "out", model_file=str(tmp_path / "m.json"), episodes=3,
                         reg_etas=(0.2, 0.05), reg_taus=(0.02, 0.01))
        summary = run_experiment(cfg)
        names = sorted(c["cell"] for c in summary["cells"] if c["strong_reg_u"] == 0)
        scored = min((c["strong_reg_u"], c["strong_reg_r"], c["cell"]) for c in summary["cells"])
        assert summary["best"]["reg-pd"] == scored[2]
        assert names and summary["best"]["reg-pd"] in names

    def test_invalid_config(self, tmp_path):
        with pytest.raises(ValueError):
            self.small(tmp_path, episodes=0)
        with pytest.raises(ValueError):
            self.small(tmp_path, reg_etas=())
        with pytest.raises(ValueError):
            self.small(tmp_path, algorithms=("ppo",))


def polyline_points(svg):
    return [[tuple(map(float, p.split(","))) for p in m.split()]
            for m in re.findall(r'<polyline[^>]*points="([^"]*)"', svg)]


def svg_attr(svg, name):
    return float(re.search(rf'{name}="([^"]+)"', svg).group(1))


class TestPlot:
    def test_two_points(self, tmp_path):
        write_csv(tmp_path / "a.csv", [row(1, value=0.2), row(2, value=0.5)])
        svg = emit_plot([tmp_path / "a.csv"], "strong", tmp_path / "p.svg").read_text()
        lines = polyline_points(svg)
        assert len(lines) == 1 and len(lines[0]) == 2

    def test_two_series(self, tmp_path):
        write_csv(tmp_path / "a.csv", [row(k, "reg-pd", 0.1 * k) for k in range(1, 6)])
        write_csv(tmp_path / "b.csv", [row(k, "vanilla-pd", 0.3 * k) for k in range(1, 6)])
        svg = emit_plot([tmp_path / "a.csv", tmp_path / "b.csv"], "strong", tmp_path / "p.svg").read_text()
        assert len(polyline_points(svg)) == 2
        assert 'data-series="reg-pd"' in svg and 'data-series="vanilla-pd"' in svg
        assert "episode" in svg and "strong constraint regret" in svg

    def test_padded_axes(self, tmp_path):
        values = [0.3, -0.1, 0.7, 0.2]
        write_csv(tmp_path / "a.csv", [row(k + 1, value=v) for k, v in enumerate(values)])
        svg = emit_plot([tmp_path / "a.csv"], "iterates", tmp_path / "p.svg").read_text()
        assert svg_attr(svg, "data-xmin") == pytest.approx(1 - 0.05 * 3)
        assert svg_attr(svg, "data-xmax") == pytest.approx(4 + 0.05 * 3)
        assert svg_attr(svg, "data-ymin") == pytest.approx(-0.1 - 0.05 * 0.8)
        assert svg_attr(svg, "data-ymax") == pytest.approx(0.7 + 0.05 * 0.8)
        # map vertices back to data space through the emitted plot box
        box = re.search(r'<rect x="([\d.]+)" y="([\d.]+)" width="([\d.]+)" height="([\d.]+)"', svg)
        bx, by, bw, bh = map(float, box.groups())
        x0, x1, y0, y1 = (svg_attr(svg, f"data-{k}") for k in ("xmin", "xmax", "ymin", "ymax"))
        for (px, py), (episode, value) in zip(polyline_points(svg)[0], enumerate(values, 1)):
            assert x0 + (px - bx) / bw * (x1 - x0) == pytest.approx(episode, abs=1e-2)
            assert y1 - (py - by) / bh * (y1 - y0) == pytest.approx(value, abs=1e-3)

    def test_flat_series_padding(self):
        assert padded_range(2.0, 2.0) == pytest.approx((1.9, 2.1))

    def test_schema_mismatch(self, tmp_path):
        (tmp_path / "x.csv").write_text("a,b\n1,2\n")
        with pytest.raises(FormatError):
            emit_plot([tmp_path / "x.csv"], "strong", tmp_path / "p.svg")

    def test_unknown_kind(self, tmp_path):
        write_csv(tmp_path / "a.csv", [row(1)])
        with pytest.raises(ValueError):
            emit_plot([tmp_path / "a.csv"], "surface", tmp_path / "p.svg")


class TestCli:
    def test_solve_bandit(self, capsys):
        assert main(["solve"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["value"] == pytest.approx(1.0) and out["slater_gap"] == pytest.approx(0.4)

    def test_generate_solve_learn_plot(self, tmp_path, capsys):
        model = tmp_path / "m.json"
        assert main(["generate", "--S", "2", "--A", "2", "--H", "2", "-o", str(model)]) == 0
        assert main(["solve", "--model", str(model)]) == 0
        assert main(["oracle", "--model", str(model), "--iterations", "50", "-o", str(tmp_path / "o.csv")]) == 0
        assert len(read_csv(tmp_path / "o.csv")) == 50
        assert main(["learn", "--model", str(model), "--episodes", "30", "--algo", "vanilla-pd", "-o", str(tmp_path / "l.csv")]) == 0
        assert main(["plot", str(tmp_path / "l.csv"), str(tmp_path / "o.csv"), "-o", str(tmp_path / "p.svg")]) == 0
        assert len(polyline_points((tmp_path / "p.svg").read_text())) == 2

    def test_sweep_config_overrides_flags(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(dict(algorithms=["vanilla-pd"], vanilla_etas=[0.1], episodes=2, runs=1,
                                       generator=dict(S=2, A=2, H=2), output_dir=str(tmp_path / "out"))))
        assert main(["sweep", "--config", str(cfg), "--episodes", "7"]) == 0
        rows = read_csv(next((tmp_path / "out" / "runs").glob("*.csv")))
        assert len(rows) == 2

    def test_error_line(self, tmp_path, capsys):
        assert main(["solve", "--model", str(tmp_path / "missing.json")]) == 1
        err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert err["error"] == "FileNotFoundError" and err["message"]

    def test_infeasible_error(self, tmp_path, capsys):
        save_model(minimal_bandit().with_thresholds([0.95]), tmp_path / "m.json")
        assert main(["solve", "--model", str(tmp_path / "m.json")]) == 1
        assert json.loads(capsys.readouterr().err)["error"] == "CmdpInfeasible"

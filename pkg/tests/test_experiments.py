import csv
import json

import pytest

from chemotaxis.cli import main
from chemotaxis.errors import ParseError, UnknownPreset, ValidationError
from chemotaxis.experiments import (
    SweepRow,
    SweepSpec,
    parse_config,
    parse_config_text,
    parse_range,
    preset,
    read_sweep_csv,
    run_sweep,
    summarize_sweep,
)
from chemotaxis.grid import GridSpec, read_field
from chemotaxis.model import Constant, Linear, Logarithmic, ModelParams, PowerShift, PowerSingular, Singular
from chemotaxis.simulation import SimConfig


class TestParse:
    def test_minimal_file_gets_defaults(self, tmp_path):
        p = tmp_path / "a.cfg"
        p.write_text('model.production="power_shift"\nmodel.beta=0.5\n')
        cfg = parse_config(p)
        assert cfg == SimConfig()

    def test_sections_and_types(self):
        cfg = parse_config_text(
            """
            # full example
            [grid]
            nx = 32
            ny = 16
            lx = 0.2
            [model]
            sensitivity = inverse_power
            chi0 = 2e3
            k = 2
            production = linear
            [init]
            u_bar = 10
            sigma = 0
            seed = 42
            [control]
            t_end = 5
            preconditioner = none
            max_steps = 100
            [events]
            steady_window = 20
            """
        )
        assert cfg.grid == GridSpec(32, 16, 0.2, 0.1)
        assert cfg.params == ModelParams(PowerSingular(2e3, 2.0), Linear())
        assert (cfg.u_bar, cfg.sigma, cfg.seed, cfg.t_end) == (10, 0, 42, 5)
        assert cfg.solver.preconditioner is None
        assert cfg.max_steps == 100 and cfg.steady_window == 20

    @pytest.mark.parametrize(
        "name,law", [("constant", Constant(7.0)), ("inverse", Singular(7.0)), ("log", Logarithmic(7.0))]
    )
    def test_sensitivity_names(self, name, law):
        assert parse_config_text(f"[model]\nsensitivity={name}\nchi=7\n").params.sensitivity == law

    def test_beta_out_of_range(self):
        with pytest.raises(ValidationError, match="beta"):
            parse_config_text('model.production="power_shift"\nmodel.beta=1.5\n')

    @pytest.mark.parametrize(
        "text,line",
        [
            ("[grid]\nnx = 8\nbogus = 1\n", 3),
            ("[nosuch]\n", 1),
            ("[grid]\nnx 8\n", 2),
            ("nx = 8\n", 1),
            ("[grid]\nnx = 8\nnx = 9\n", 3),
            ("[grid]\n\nnx = eight\n", 3),
            ("[grid]\nnx = 8.5\n", 2),
            ("[grid\n", 1),
        ],
    )
    def test_parse_errors_carry_line(self, text, line):
        with pytest.raises(ParseError) as exc:
            parse_config_text(text)
        assert exc.value.line == line

    @pytest.mark.parametrize(
        "text",
        [
            "[grid]\nnx = 1\n",
            "[model]\nsensitivity = quadratic\n",
            "[model]\nproduction = cubic\n",
            "[model]\nchi = -1\n",
            "[model]\nchi = 1\nchi0 = 2\n",
            "[init]\nu_bar = 0\n",
            "[control]\ntol = 0.5\n",
            "[control]\npreconditioner = ilu\n",
            "[control]\ncfl = 3\n",
            "[sweep]\nbeta = 0.9:0.1:0.1\n",
            "[model]\nproduction = linear\n[sweep]\nbeta = 0.3,0.4\n",
            "[sweep]\nbeta = 0.4, 0.3\n",
            "[sweep]\nbeta = 0.3\nconcurrency = 0\n",
        ],
    )
    def test_validation_errors(self, text):
        with pytest.raises(ValidationError):
            parse_config_text(text)

    def test_sweep_range_expansion(self):
        spec = parse_config_text("[sweep]\nbeta = 0.30:0.80:0.05\nruns_per_beta = 2\n")
        assert isinstance(spec, SweepSpec)
        assert len(spec.beta_values) == 11
        assert spec.beta_values[0] == 0.3 and spec.beta_values[-1] == 0.8
        assert len(spec.configs()) == 22

    def test_parse_range_forms(self):
        assert parse_range("0.1:0.3:0.1") == [0.1, 0.2, 0.3]
        assert parse_range("0.5") == [0.5]
        assert parse_range("0.2, 0.4 0.6") == [0.2, 0.4, 0.6]
        assert parse_range("") == []


class TestPresets:
    def test_fig1(self):
        cfgs = preset("fig1")
        assert [(c.u_bar, c.params.sensitivity.chi) for c in cfgs] == [(1, 1e2), (1, 1e3), (10, 1e2), (10, 1e3)]
        assert all(c.params.production == Linear() and c.sigma == 1 for c in cfgs)

    def test_fig2(self):
        cfgs = preset("fig2")
        got = [(c.u_bar, c.sigma, c.params.sensitivity.chi) for c in cfgs]
        assert got == [(1, 1, 1e4), (10, 10, 1e3), (100, 100, 1e3)]
        assert all(c.params.production == PowerShift(0.5) for c in cfgs)

    def test_fig3(self):
        a, b = preset("fig3")
        assert a.params.sensitivity == Singular(1e4) and b.params.sensitivity == Logarithmic(1e4)
        assert all(c.u_bar == 100 and c.sigma == 10 and c.params.production == PowerShift(0.5) for c in (a, b))

    def test_fig4(self):
        (a,) = preset("fig4a")
        (b,) = preset("fig4b")
        assert a.base.params.sensitivity == Constant(1e3) and (a.base.u_bar, a.base.sigma) == (10, 1)
        assert b.base.params.sensitivity == Singular(1e4) and (b.base.u_bar, b.base.sigma) == (100, 10)
        for spec, lo, hi in ((a, 0.36, 0.44), (b, 0.6, 0.7)):
            betas = spec.beta_values
            assert betas[0] == 0.3 and betas[-1] == 0.8
            assert all(round(x, 2) in betas for x in (lo, hi, (lo + hi) / 2))
            assert 0.55 in betas

    def test_unknown(self):
        with pytest.raises(UnknownPreset):
            preset("fig9")


def tiny_spec(**kw):
    base = SimConfig(
        params=ModelParams(Constant(1e3), PowerShift(0.5)), grid=GridSpec(8, 8), u_bar=10.0, t_end=2e-4
    )
    args = dict(base=base, beta_values=(0.2, 0.5, 0.8), runs_per_beta=2, concurrency=1)
    args.update(kw)
    return SweepSpec(**args)


class TestSweep:
    def test_rows_and_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        rows = run_sweep(tiny_spec(), out)
        assert [(r.beta, r.seed) for r in rows] == [(b, s) for b in (0.2, 0.5, 0.8) for s in (0, 1)]
        back = read_sweep_csv(out)
        assert len(back) == 6
        assert [r.outcome for r in back] == [r.outcome for r in rows]

    def test_reproducible_and_concurrency_invariant(self):
        seq = run_sweep(tiny_spec())
        par = run_sweep(tiny_spec(concurrency=3))
        key = lambda r: (r.beta, r.seed, r.outcome, r.max_u, r.heterogeneity, r.t_detect, r.t_final)
        assert [key(r) for r in seq] == [key(r) for r in par]

    def test_failures_become_rows(self):
        # dt_min == dt0 with a tight rtol: the first rejection is terminal
        base = tiny_spec().base.with_(dt0=1e-2, dt_min=1e-2, dt_max=1e-2, rtol=1e-8, t_end=1.0)
        rows = run_sweep(tiny_spec(base=base, beta_values=(0.5,), runs_per_beta=1))
        assert len(rows) == 1 and rows[0].outcome == "NumericalFailure"

    def test_empty(self, tmp_path):
        out = tmp_path / "sweep.csv"
        rows = run_sweep(tiny_spec(beta_values=()), out)
        assert rows == []
        assert out.read_text().strip().split(",")[0] == "beta"

    def test_invalid_spec(self):
        with pytest.raises(ValidationError):
            tiny_spec(beta_values=(0.5, 0.5))
        with pytest.raises(ValidationError):
            tiny_spec(beta_values=(1.2,))


def row(beta, outcome, max_u):
    return SweepRow(beta, 0, outcome, max_u, 0.0, None, 1.0, 0.0)


def test_summary_brackets():
    rows = [
        row(0.3, "SteadyHomogeneous", 10.0),
        row(0.35, "SteadyHomogeneous", 10.0),
        row(0.4, "SteadyHeterogeneous", 50.0),
        row(0.45, "SteadyHeterogeneous", 5e6),
        row(0.5, "BlowUp", 6e6),
    ]
    s = summarize_sweep(rows)
    assert s.first_transition == (0.35, 0.4)
    assert len(s.transitions) == 2
    assert s.largest_jump[:2] == (0.4, 0.45)
    assert summarize_sweep([]).first_transition is None


class TestCli:
    def write(self, tmp_path, text, name="c.cfg"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    def test_run_outputs(self, tmp_path):
        cfg = self.write(tmp_path, "[control]\nt_end = 1e-4\n")
        out = tmp_path / "o"
        rc = main(["run", cfg, "--grid", "8", "--seed", "3", "--dump-fields", "0,5e-5", "--out", str(out), "--quiet"])
        assert rc == 0
        info = json.loads((out / "outcome.json").read_text())
        assert info["variant"] == "HorizonReached"
        assert info["config"]["grid"] == [8, 8] and info["config"]["seed"] == 3
        with open(out / "timeseries.csv") as fh:
            header = next(csv.reader(fh))
        assert header == ["t", "dt", "mass", "max_u", "min_u", "min_v", "max_v", "grad_energy", "err_est"]
        assert read_field(out / "fields_t0.dat").grid == GridSpec(8, 8)
        assert (out / "fields_t5e-05.dat").exists() and (out / "fields_t5e-05_v.dat").exists()

    def test_t_end_override(self, tmp_path):
        cfg = self.write(tmp_path, "[control]\nt_end = 1\n")
        out = tmp_path / "o"
        assert main(["run", cfg, "--grid", "8", "--t-end", "1e-5", "--out", str(out), "--quiet"]) == 0
        assert json.loads((out / "outcome.json").read_text())["final"]["t"] == pytest.approx(1e-5)

    def test_config_errors_exit_1(self, tmp_path, capsys):
        assert main(["run", self.write(tmp_path, "[grid]\nbogus = 1\n")]) == 1
        assert ":2:" in capsys.readouterr().err
        assert main(["run", str(tmp_path / "missing.cfg")]) == 1
        assert main(["preset", "fig9"]) == 1
        assert main(["sweep", self.write(tmp_path, "[grid]\nnx = 8\n", "nosweep.cfg")]) == 1

    def test_numerical_failure_exit_2(self, tmp_path):
        text = "[grid]\nnx=8\nny=8\n[control]\ndt0=1e-2\ndt_min=1e-2\ndt_max=1e-2\nrtol=1e-8\nt_end=1\n[model]\nchi=1000\n[init]\nu_bar=10\n"
        assert main(["run", self.write(tmp_path, text), "--out", str(tmp_path / "o"), "--quiet"]) == 2
        info = json.loads((tmp_path / "o" / "outcome.json").read_text())
        assert info["variant"] == "NumericalFailure" and info["reason"]

    def test_sweep(self, tmp_path):
        cfg = self.write(tmp_path, "[control]\nt_end=1e-5\n[sweep]\nbeta=0.3:0.5:0.1\n")
        out = tmp_path / "s"
        assert main(["sweep", cfg, "--grid", "8", "--threads", "2", "--out", str(out), "--quiet"]) == 0
        rows = read_sweep_csv(out / "sweep.csv")
        assert [r.beta for r in rows] == [0.3, 0.4, 0.5]

    def test_empty_sweep_exit_0(self, tmp_path):
        cfg = self.write(tmp_path, "[sweep]\nbeta=\n")
        assert main(["sweep", cfg, "--out", str(tmp_path / "s"), "--quiet"]) == 0
        assert len((tmp_path / "s" / "sweep.csv").read_text().splitlines()) == 1

    def test_preset_runs_each_config(self, tmp_path):
        out = tmp_path / "p"
        assert main(["preset", "fig3", "--grid", "8", "--t-end", "1e-6", "--out", str(out), "--quiet"]) == 0
        dirs = sorted(p.name for p in out.iterdir())
        assert len(dirs) == 2
        assert all((out / d / "outcome.json").exists() for d in dirs)

    def test_help_lists_defaults(self, capsys):
        with pytest.raises(SystemExit):
            main(["run", "--help"])
        text = capsys.readouterr().out
        assert "blowup_threshold = 1e10" in text and "--dump-fields" in text

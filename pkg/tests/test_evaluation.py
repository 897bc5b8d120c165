import csv
import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from statsmodels.stats.proportion import proportion_confint

from risae.errors import ConfigError
from risae.evaluation import (AnalyticLinkModel, SerCurve, analytic_ser, emit_results, ml_detection_ser,
                              monte_carlo_ser, read_csv, wilson_interval, write_csv)
from risae.evaluation.analytic import identity_padded, product_constellation, stream_alphabet
from risae.evaluation.cli import EXIT_CHECKPOINT, EXIT_CONFIG, main
from risae.evaluation.config import bundled_config, cascade_matrix, dbm_to_watts, load_config, parse_config
from risae.numerics import RngStream, q_function

DATA = Path(__file__).parent / "data"
SMOKE = DATA / "smoke.yaml"


class TestWilson:
    @pytest.mark.parametrize("k,n", [(0, 10), (3, 100), (50, 100), (100, 100), (7, 12345)])
    def test_matches_statsmodels(self, k, n):
        lo, hi = wilson_interval(k, n)
        ref = proportion_confint(k, n, method="wilson")
        assert lo == pytest.approx(ref[0], abs=1e-12)
        assert hi == pytest.approx(ref[1], abs=1e-12)

    def test_vectorized(self):
        lo, hi = wilson_interval([1, 2], [10, 20])
        assert lo.shape == (2,) and lo[0] < 0.1 < hi[0]

    def test_no_trials(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)

    @settings(max_examples=200, deadline=None)
    @given(st.integers(1, 10**6), st.floats(0, 1))
    def test_contains_estimate(self, n, frac):
        k = int(frac * n)
        lo, hi = wilson_interval(k, n)
        assert 0 <= lo <= k / n <= hi <= 1

    def test_coverage(self):
        rng = np.random.default_rng(0)
        p, n, reps = 0.05, 400, 4000
        k = rng.binomial(n, p, reps)
        lo, hi = wilson_interval(k, np.full(reps, n))
        assert np.mean((lo <= p) & (p <= hi)) >= 0.93


class TestSerCurve:
    def test_validation(self):
        with pytest.raises(ValueError):
            SerCurve("x", [0, 1], [1], [10, 10])
        with pytest.raises(ValueError):
            SerCurve("x", [0], [11], [10])

    def test_computed(self):
        c = SerCurve.computed("b", [0, 1], [0.5, 0.25])
        np.testing.assert_array_equal(c.ser, [0.5, 0.25])
        np.testing.assert_array_equal(c.interval[0], c.interval[1])

    def test_at(self):
        c = SerCurve("x", [-5, 0, 5], [1, 1, 1], [9, 9, 9])
        assert c.at(0.0) == 1
        with pytest.raises(KeyError):
            c.at(2.0)


class TestAnalytic:
    def test_alphabets(self):
        np.testing.assert_allclose(np.abs(stream_alphabet(4)), 1.0)
        pts = product_constellation(4, 2)
        assert pts.shape == (4, 2)
        assert len({tuple(p) for p in pts}) == 4
        with pytest.raises(ValueError):
            product_constellation(8, 2)

    def test_bpsk_exact(self):
        # two points: the union bound equals the exact error probability Q(sqrt(2/sigma^2))
        model = AnalyticLinkModel.default(np.ones((1, 1)), 2, 1)
        for nv in (0.1, 0.5, 2.0):
            assert analytic_ser(model, nv, 1.0) == pytest.approx(q_function(np.sqrt(2 / nv)), rel=1e-14)

    def test_norm_check(self):
        with pytest.raises(ValueError):
            AnalyticLinkModel(np.eye(2), 2 * identity_padded(2, 2), identity_padded(2, 2),
                              product_constellation(4, 2))

    def test_monotone_in_snr(self):
        model = AnalyticLinkModel.default(np.array([[1, 0.3 + 0.2j], [-0.1j, 0.8]]), 4, 2)
        vals = [analytic_ser(model, 10 ** (-s / 10), 1.0) for s in range(-5, 20)]
        assert np.all(np.diff(vals) < 0)
        assert analytic_ser(model, 0.0, 1.0) == 0.0

    @pytest.mark.parametrize("snr", [0.0, 4.0, 8.0, 12.0])
    def test_bound_dominates_ml(self, snr):
        model = AnalyticLinkModel.default(np.array([[1, 0.3 + 0.2j], [-0.1j, 0.8]]), 4, 2)
        nv = 10 ** (-snr / 10)
        ub = analytic_ser(model, nv, 1.0)
        err, n = ml_detection_ser(model, nv, 1.0, 200_000, RngStream(1, int(snr)))
        p = err / n
        assert ub >= p - 3 * math.sqrt(p * (1 - p) / n)
        # pairwise terms overlap little at moderate SNR, so the bound is also tight
        if snr >= 8:
            assert ub <= 1.2 * p + 3 * math.sqrt(p * (1 - p) / n)


class TestMonteCarlo:
    def test_common_random_numbers(self, trained_tiny):
        params, data = trained_tiny
        a = monte_carlo_ser(params, data.channel, [0.0, 10.0], 40, RngStream(2), chunk=7, max_errors=None)
        b = monte_carlo_ser(params, data.channel, [0.0, 10.0], 40, RngStream(2), chunk=40, max_errors=None)
        np.testing.assert_array_equal(a.errors, b.errors)
        assert a.symbols.tolist() == [160, 160]
        assert a.errors[0] >= a.errors[1]

    def test_early_stop(self, trained_tiny):
        params, data = trained_tiny
        c = monte_carlo_ser(params, data.channel, [-20.0, 10.0], 200, RngStream(3), chunk=10, max_errors=20)
        assert c.errors[0] >= 20 and c.symbols[0] < c.symbols[1]

    def test_zero_perturbation(self, trained_tiny):
        params, data = trained_tiny
        a = monte_carlo_ser(params, data.channel, [0.0], 20, RngStream(4))
        b = monte_carlo_ser(params, data.channel, [0.0], 20, RngStream(4), perturbation=np.zeros(2))
        np.testing.assert_array_equal(a.errors, b.errors)


class TestResults:
    def curves(self):
        return [SerCurve("clean", [0, 5], [3, 0], [100, 100]), SerCurve.computed("bound", [0, 5], [0.125, 1e-3])]

    def test_golden_file(self, tmp_path):
        path = write_csv(self.curves(), tmp_path / "c.csv")
        with open(path) as fh, open(DATA / "golden_curves.csv") as gh:
            got, want = list(csv.reader(fh)), list(csv.reader(gh))
        assert got[0] == want[0] and len(got) == len(want)
        for g, w in zip(got[1:], want[1:]):
            assert g[4:] == w[4:]
            np.testing.assert_allclose([float(x) for x in g[:4]], [float(x) for x in w[:4]], rtol=1e-12, atol=0)

    def test_round_trip(self, tmp_path):
        path = write_csv(self.curves(), tmp_path / "c.csv")
        back = read_csv(path)
        assert [c.label for c in back] == ["clean", "bound"]
        np.testing.assert_array_equal(back[0].errors, [3, 0])
        np.testing.assert_array_equal(back[1].ser, [0.125, 1e-3])
        write_csv(back, tmp_path / "d.csv")
        assert (tmp_path / "d.csv").read_bytes() == path.read_bytes()

    def test_rejects_empty(self, tmp_path):
        with pytest.raises(ValueError):
            write_csv([], tmp_path / "c.csv")
        with pytest.raises(ValueError):
            emit_results([], tmp_path, "h")

    def test_emit_layout(self, tmp_path):
        out = emit_results(self.curves(), tmp_path / "m", "abc", {"seed": 1})
        assert out["csv"].name == "curves.csv"
        meta = (tmp_path / "m" / "meta.txt").read_text().splitlines()
        assert meta == sorted(meta) and "config_hash: abc" in meta and "seed: 1" in meta
        dat = (tmp_path / "m" / "plotdata" / "clean.dat").read_text().splitlines()
        assert dat[0] == "# config_hash abc"
        assert len(dat) == 5 and len(dat[3].split()) == 4


class TestConfig:
    def test_bundled_valid(self):
        for name in ("desk", "full"):
            cfg = load_config(bundled_config(name))
            assert cfg.mode == "train" and len(cfg.hash()) == 64

    def test_defaults_filled(self):
        cfg = parse_config("run: {seed: 4}\n")
        assert cfg["train"]["epochs"] == 20 and cfg["evaluate"]["max_errors"] == 200
        assert cfg.name == "<memory>"

    def test_hash_ignores_key_order_and_run_only_keys(self):
        a = parse_config("run: {seed: 1}\ntrain: {epochs: 3, lr: 0.01}\n")
        b = parse_config("train: {lr: 0.01, epochs: 3}\nrun: {seed: 1, mode: attack, out_dir: x}\n")
        assert a.hash() == b.hash()
        assert a.hash() != a.with_overrides(seed=2).hash()
        assert a.hash() == a.with_overrides(mode="evaluate", threads=2).hash()

    @pytest.mark.parametrize("text,field,line", [
        ("run:\n  seed: 1\ntrain:\n  epochz: 3\n", "train.epochz", 4),
        ("run:\n  seed: 1\nsystem:\n  modulation: 3\n", "system.modulation", 4),
        ("evaluate:\n  snr_grid: [0, -1]\n", "evaluate.snr_grid", 2),
        ("bogus: 1\n", "bogus", 1),
        ("train:\n  lr: fast\n", "train.lr", 2),
    ])
    def test_errors_name_field_and_line(self, text, field, line):
        with pytest.raises(ConfigError) as exc:
            parse_config(text, "x.yaml")
        assert exc.value.field == field and exc.value.line == line
        assert field in str(exc.value)

    def test_numeric_strings(self):
        assert parse_config("channel:\n  carrier_hz: 2.6e9\n")["channel"]["carrier_hz"] == 2.6e9

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "none.yaml")

    def test_cascade(self):
        cfg = load_config(SMOKE)
        np.testing.assert_array_equal(cascade_matrix(cfg), [[1, 0.3 + 0.2j], [-0.1j, 0.8]])
        np.testing.assert_array_equal(cascade_matrix(parse_config("{}")), np.eye(4))

    def test_dbm(self):
        assert dbm_to_watts(30) == pytest.approx(1.0, rel=1e-15)
        assert dbm_to_watts(-90) == pytest.approx(1e-12, rel=1e-12)


class TestCli:
    def run(self, tmp_path, *args):
        return main(["run", str(SMOKE), "--out-dir", str(tmp_path), *args])

    def test_config_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text("train:\n  epochs: -1\n")
        assert main(["run", str(bad)]) == EXIT_CONFIG
        assert "train.epochs" in capsys.readouterr().err

    def test_missing_checkpoint(self, tmp_path):
        assert self.run(tmp_path, "--mode", "evaluate") == EXIT_CHECKPOINT

    def test_analytic_standalone(self, tmp_path, capsys):
        assert self.run(tmp_path, "--mode", "analytic", "--snr-grid", "0,6,12") == 0
        out = Path(capsys.readouterr().out.strip())
        curves = read_csv(out / "curves.csv")
        assert [c.label for c in curves] == ["union-bound", "ml-detection"]
        np.testing.assert_array_equal(curves[0].snr_db, [0, 6, 12])
        assert (out / "plotdata" / "union-bound.dat").is_file()

    def test_bad_override(self, tmp_path):
        with pytest.raises(SystemExit):
            self.run(tmp_path, "--snr-grid", "a,b")

    def test_pipeline_deterministic(self, tmp_path):
        outs = []
        for sub in ("a", "b"):
            d = tmp_path / sub
            for mode in ("train", "attack", "defend", "evaluate"):
                assert self.run(d, "--mode", mode) == 0, mode
            outs.append(d)
        run_a = next(outs[0].iterdir())
        run_b = next(outs[1].iterdir())
        assert run_a.name == run_b.name
        for mode in ("train", "attack", "defend", "evaluate"):
            assert (run_a / mode / "curves.csv").read_bytes() == (run_b / mode / "curves.csv").read_bytes()
            assert (run_a / mode / "meta.txt").read_bytes() == (run_b / mode / "meta.txt").read_bytes()
        labels = [c.label for c in read_csv(run_a / "evaluate" / "curves.csv")]
        assert labels == ["undefended/clean", "undefended/psr+0", "defended/clean", "defended/psr+0"]

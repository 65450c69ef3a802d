import json

import numpy as np
import pandas as pd
import pytest

from cli.arguments import build_parser
from cli.commands import main
from core.limit_laws import law_from_spec, mixture_two_hub
from core.utils import load_frame, load_results, read_frame_hash, save_frame


def last_json(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


@pytest.fixture
def xi_samples(tmp_path):
    path = str(tmp_path / "xi.csv")
    code = main(["simulate", "--family", "bipartite", "--param", "30", "--reps", "5000",
                 "--seed", "7", "--fast", "--out", path])
    assert code == 0
    return path


class TestGraphgen:
    def test_stdout(self, capsys):
        assert main(["graphgen", "--family", "two-hub", "--param", "2"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["family"] == "two_hub"
        assert payload["edges"] == [[0, 1], [0, 2], [1, 3], [2, 3]]

    def test_out_file(self, tmp_path):
        path = str(tmp_path / "cage.json")
        assert main(["graphgen", "--family", "cage", "--param", "2", "--out", path, "--summary"]) == 0
        assert load_results(path)["vertex_count"] == 14

    def test_non_prime_cage(self, capsys):
        assert main(["graphgen", "--family", "cage", "--param", "4"]) == 1
        error = last_json(capsys)
        assert error["type"] == "GraphError"
        assert error["exit_code"] == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["graphgen", "--family", "torus", "--param", "2"])
        assert excinfo.value.code == 1

    def test_missing_seed(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["simulate", "--family", "fan", "--param", "3", "--reps", "10", "--out", str(tmp_path / "x.csv")])
        assert excinfo.value.code == 1


class TestSimulate:
    def test_writes_hashed_csv(self, tmp_path):
        path = str(tmp_path / "fan.csv")
        assert main(["simulate", "--family", "fan", "--param", "4", "--margin", "uniform01",
                     "--reps", "100", "--seed", "1", "--out", path, "--threads", "2"]) == 0
        frame = load_frame(path)
        assert list(frame.columns) == ["rep_index", "xi_count", "xi_std", "s_n"]
        assert len(frame) == 100
        assert frame["s_n"].notna().all()
        assert len(read_frame_hash(path)) == 64

    def test_same_seed_same_file(self, tmp_path):
        paths = [str(tmp_path / f"{i}.csv") for i in range(2)]
        for path in paths:
            main(["simulate", "--family", "hypercube", "--param", "4", "--reps", "50", "--seed", "3", "--out", path])
        assert open(paths[0]).read() == open(paths[1]).read()

    def test_margin_config_file(self, tmp_path):
        margin = tmp_path / "margin.json"
        margin.write_text(json.dumps({"quantile_table": [[0, 0], [1, 1]]}))
        path = str(tmp_path / "custom.csv")
        assert main(["simulate", "--family", "bipartite", "--param", "3", "--margin-config", str(margin),
                     "--reps", "20", "--seed", "2", "--out", path]) == 0
        assert load_frame(path)["s_n"].notna().all()

    def test_missing_fast_path(self, tmp_path, capsys):
        code = main(["simulate", "--family", "cage", "--param", "2", "--reps", "10", "--seed", "1",
                     "--fast", "--out", str(tmp_path / "x.csv")])
        assert code == 1
        assert last_json(capsys)["type"] == "SamplerError"


class TestGof:
    def test_report(self, xi_samples, tmp_path):
        out = str(tmp_path / "gof.json")
        assert main(["gof", "--input", xi_samples, "--column", "xi_std", "--law", "vg-standardized:ell=2",
                     "--tests", "ks,chi2", "--out", out]) == 0
        payload = load_results(out)
        assert [r["test_name"] for r in payload["reports"]] == ["ks", "pearson_chi2"]
        assert payload["input_config_hash"] == read_frame_hash(xi_samples)

    def test_wrong_hash(self, xi_samples, tmp_path, capsys):
        code = main(["gof", "--input", xi_samples, "--column", "xi_std", "--law", "gaussian",
                     "--config-hash", "deadbeef", "--out", str(tmp_path / "gof.json")])
        assert code == 1
        assert last_json(capsys)["type"] == "ConfigError"

    def test_assert_mode(self, xi_samples, tmp_path, capsys):
        out = str(tmp_path / "gof.json")
        code = main(["gof", "--input", xi_samples, "--column", "xi_std", "--law", "gaussian",
                     "--tests", "ks", "--assert", "--out", out])
        assert code == 3
        assert last_json(capsys)["type"] == "StatisticalRejection"
        assert load_results(out)["rejections"] == ["ks"]

    def test_empty_column(self, xi_samples, tmp_path):
        assert main(["gof", "--input", xi_samples, "--law", "gaussian", "--out", str(tmp_path / "g.json")]) == 1


class TestLimit:
    def test_laplace_table(self, tmp_path):
        path = str(tmp_path / "vg.csv")
        assert main(["limit", "--law", "vg", "--n", "2", "--grid", "-2:2:0.5", "--out", path]) == 0
        frame = load_frame(path)
        assert len(frame) == 9
        assert frame["pdf"].iloc[4] == pytest.approx(0.5)

    def test_s_limit_requires_r(self, tmp_path):
        assert main(["limit", "--law", "s-limit", "--out", str(tmp_path / "s.csv")]) == 1

    def test_cf_route_rejects_atoms(self, tmp_path, capsys):
        code = main(["limit", "--law", "two-hub-mixture", "--r", "1", "--via-cf", "--grid", "-1:1:0.5",
                     "--out", str(tmp_path / "m.csv")])
        assert code == 2
        assert last_json(capsys)["type"] == "CfInversionError"

    def test_cf_route(self, tmp_path):
        path = str(tmp_path / "g.csv")
        assert main(["limit", "--law", "gaussian", "--via-cf", "--grid", "-1:1:1", "--out", path]) == 0
        assert load_frame(path)["cdf"].iloc[1] == pytest.approx(0.5, abs=1e-8)


class TestIndependence:
    def test_exact(self, tmp_path):
        out = str(tmp_path / "k22.json")
        assert main(["independence", "--family", "bipartite", "--param", "2", "--k", "4", "--out", out]) == 0
        report = load_results(out)
        assert report["independent"] is False
        assert report["witness"]["product"] == "1/16"

    def test_sampled_needs_seed(self):
        assert main(["independence", "--family", "cage", "--param", "3", "--k", "4", "--sampled"]) == 1

    def test_sampled(self, tmp_path):
        out = str(tmp_path / "cage.json")
        assert main(["independence", "--family", "cage", "--param", "3", "--k", "4", "--sampled",
                     "--tuples", "20", "--reps", "5000", "--seed", "1", "--out", out]) == 0
        assert load_results(out)["method"] == "sampled"

    def test_enumeration_cap(self, capsys):
        assert main(["independence", "--family", "hypercube", "--param", "5", "--k", "4"]) == 1
        assert last_json(capsys)["type"] == "IndependenceError"


class TestRun:
    def test_preset(self, tmp_path):
        out_dir = tmp_path / "figure2"
        assert main(["run", "--preset", "figure2", "--out-dir", str(out_dir)]) == 0
        assert (out_dir / "manifest.json").exists()
        assert len(list(out_dir.glob("law-*.csv"))) == 3

    def test_config_file(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"name": "tiny", "seed": 4, "family": "two_hub", "param": 10,
                                      "replications": 200, "fast_path": True}))
        out_dir = tmp_path / "tiny"
        assert main(["run", "--config", str(config), "--out-dir", str(out_dir), "--seed", "9"]) == 0
        assert load_results(str(out_dir / "manifest.json"))["seed"] == 9

    def test_assert_mode(self, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"name": "reject", "seed": 1, "family": "bipartite", "param": 30,
                                      "replications": 20000, "fast_path": True, "tests": ["ks"],
                                      "reference_law": "gaussian"}))
        code = main(["run", "--config", str(config), "--out-dir", str(tmp_path / "r"), "--assert"])
        assert code == 3
        assert last_json(capsys)["exit_code"] == 3

    def test_bad_config(self, tmp_path):
        config = tmp_path / "config.json"
        config.write_text(json.dumps({"name": "noseed", "laws": ["gaussian"]}))
        assert main(["run", "--config", str(config), "--out-dir", str(tmp_path / "x")]) == 1


class TestNegativeValues:
    def test_grid_starting_below_zero(self):
        args = build_parser().parse_args(["limit", "--law", "gaussian", "--grid", "-6:6:0.01", "--out", "x.csv"])
        assert args.grid == "-6:6:0.01"

    def test_negative_mixing_coefficient(self, tmp_path):
        path = str(tmp_path / "s.csv")
        assert main(["limit", "--law", "s-limit", "--r", "-0.5", "--grid", "-1:1:1", "--out", path]) == 0
        assert load_frame(path)["cdf"].iloc[1] == pytest.approx(0.5, abs=1e-8)

    def test_unknown_dash_option_still_fails(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["limit", "--law", "gaussian", "-x", "--out", "x.csv"])
        assert excinfo.value.code == 1


class TestVarianceGammaScale:
    def test_limit_and_law_string_agree(self, tmp_path):
        path = str(tmp_path / "vg.csv")
        assert main(["limit", "--law", "vg", "--n", "2", "--s", "2", "--grid", "-1:1:1", "--out", path]) == 0
        law = law_from_spec("vg:n=2,s=2")
        frame = load_frame(path)
        assert frame["pdf"].tolist() == pytest.approx(law.pdf(frame["x"].to_numpy()).tolist(), rel=1e-12)
        assert frame["pdf"].iloc[1] == pytest.approx(0.25)


class TestSummaryStream:
    def test_summary_goes_to_stderr(self, capsys):
        assert main(["graphgen", "--family", "two-hub", "--param", "2", "--summary"]) == 0
        captured = capsys.readouterr()
        assert json.loads(captured.out)["family"] == "two_hub"
        assert "girth" in captured.err.lower()


class TestGofWithAtoms:
    def test_default_battery_accepts_law_with_atom(self, tmp_path):
        draws = mixture_two_hub(1.0).sample(np.random.default_rng(11), 20000)
        samples = str(tmp_path / "mix.csv")
        save_frame(pd.DataFrame({"xi_std": draws}), samples)
        out = str(tmp_path / "gof.json")
        code = main(["gof", "--input", samples, "--column", "xi_std", "--law", "two-hub-mixture:r=1",
                     "--assert", "--out", out])
        assert code == 0
        report = load_results(out)
        assert [r["test_name"] for r in report["reports"]] == ["ks", "anderson_darling", "pearson_chi2"]
        assert report["rejections"] == []

    def test_ks_distance_bound(self, xi_samples, tmp_path):
        out = str(tmp_path / "gof.json")
        code = main(["gof", "--input", xi_samples, "--column", "xi_std", "--law", "gaussian",
                     "--tests", "ks", "--ks-max", "0.5", "--assert", "--out", out])
        assert code == 0
        assert load_results(out)["reports"][0]["details"]["ks_max"] == 0.5

import json

import pytest

from rentbuy import ScenarioError
from rentbuy.cli import (
    EXIT_DEGENERATE,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VALIDATION,
    parse_grid,
    run_command,
)

PAPER_LITERAL = json.dumps({
    "market": {"preset": "atlanta"},
    "household": {"payoff_mode": "paper_literal", "K_abs": 1.6, "hc_flow": 0.5},
})


def read_rows(path):
    meta, rows = {}, []
    header = None
    for line in path.read_text().splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            meta[key] = value
        elif header is None:
            header = line.split(",")
        else:
            rows.append(dict(zip(header, line.split(","))))
    return meta, rows


class TestParseGrid:
    def test_inclusive(self):
        g = parse_grid("8:18:21")
        assert g[0] == 8.0 and g[-1] == 18.0 and len(g) == 21

    def test_single_point(self):
        assert list(parse_grid("5:5:1")) == [5.0]

    def test_malformed(self):
        for bad in ("8:18", "a:b:c", "1:2:0"):
            with pytest.raises(ScenarioError):
                parse_grid(bad)


class TestExitCodes:
    def test_threshold_ok(self, tmp_path):
        out = tmp_path / "t.csv"
        assert run_command(["threshold", "--out", str(out)]) == EXIT_OK
        meta, rows = read_rows(out)
        vals = {r["quantity"]: r["value"] for r in rows}
        assert vals["regime"] == "interior"
        assert float(vals["x_star"]) == pytest.approx(13.186, abs=1e-3)
        assert meta["preset"] == "atlanta"
        assert meta["market_provenance"] == "paper"

    def test_unknown_subcommand_is_usage(self, capsys):
        assert run_command(["frobnicate"]) == EXIT_USAGE
        capsys.readouterr()

    def test_validation_failure(self, tmp_path, capsys):
        cfg = json.dumps({"market": {"ratio": {"mu_x": 0.01, "sigma_x": -0.1}}})
        assert run_command(["threshold", "--config", cfg, "--out", str(tmp_path / "x.csv")]) == EXIT_VALIDATION
        assert "sigma_x" in capsys.readouterr().err

    def test_config_and_preset_conflict(self, capsys):
        assert run_command(["threshold", "--config", "{}", "--preset", "atlanta"]) == EXIT_VALIDATION
        capsys.readouterr()

    def test_degenerate_regime(self, tmp_path):
        out = tmp_path / "d.csv"
        code = run_command(["threshold", "--config", PAPER_LITERAL, "--out", str(out)])
        assert code == EXIT_DEGENERATE
        _, rows = read_rows(out)
        vals = {r["quantity"]: r["value"] for r in rows}
        assert vals["regime"] == "no_finite_threshold"

    def test_io_failure(self, capsys):
        code = run_command(["threshold", "--out", "/nonexistent-dir/t.csv"])
        assert code == EXIT_IO
        assert "cannot write" in capsys.readouterr().err


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ["threshold", "--preset", "columbus"],
            ["value", "--x-grid", "5:40:36"],
            ["sweep", "--grid", "0.05:0.3:6", "--series", "sigma_x=0.25"],
            ["map", "--lambda", "0.05:0.3:4", "--sigma", "0.1:0.35:4"],
            ["compare"],
            ["simulate", "--n-paths", "2000", "--dt", "0.02", "--horizon", "5"],
            ["verify", "--grid", "10:16:4", "--n-paths", "2000", "--dt", "0.02", "--horizon", "5"],
        ],
        ids=lambda a: a[0],
    )
    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_reruns_byte_identical(self, argv, fmt, tmp_path):
        a, b = tmp_path / "a.out", tmp_path / "b.out"
        assert run_command(argv + ["--format", fmt, "--out", str(a)]) == EXIT_OK
        assert run_command(argv + ["--format", fmt, "--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()


class TestSubcommands:
    def test_sweep_values(self, tmp_path):
        out = tmp_path / "s.csv"
        run_command(["sweep", "--grid", "0.1:0.2:2", "--out", str(out)])
        meta, rows = read_rows(out)
        assert meta["axis_name"] == "lam"
        by_axis = {r["axis"]: float(r["x_star"]) for r in rows}
        assert by_axis["0.1"] == pytest.approx(13.1861195, abs=1e-6)
        assert by_axis["0.2"] == pytest.approx(11.2082016, abs=1e-6)

    def test_map_markers(self, tmp_path):
        out = tmp_path / "m.csv"
        run_command(["map", "--lambda", "0.1:0.2:2", "--sigma", "0.15:0.25:2", "--out", str(out)])
        meta, rows = read_rows(out)
        assert "lambda:0.1;sigma:0.15;provenance:paper" == meta["marker_atlanta"]
        assert "provenance:illustrative" in meta["marker_san_diego"]
        assert len(rows) == 4
        corner = {(r["lambda"], r["sigma"]): float(r["x_star"]) for r in rows}
        assert corner[("0.1", "0.15")] == pytest.approx(13.1861195, abs=1e-6)

    def test_compare_metadata(self, tmp_path):
        out = tmp_path / "c.csv"
        run_command(["compare", "--x-grid", "5:25:5", "--out", str(out)])
        meta, rows = read_rows(out)
        assert float(meta["x_star_left"]) == pytest.approx(13.186, abs=1e-3)
        assert float(meta["x_star_right"]) == pytest.approx(7.954, abs=1e-3)
        assert meta["provenance_left"] == "paper"
        assert len(rows) == 5

    def test_value_columns(self, tmp_path):
        out = tmp_path / "v.csv"
        run_command(["value", "--x-grid", "14:20:4", "--out", str(out)])
        meta, rows = read_rows(out)
        assert "x_star" in meta
        assert [r["x"] for r in rows] == ["14", "16", "18", "20"]
        # buying looks worse as the ratio rises
        d = [float(r["d"]) for r in rows]
        assert all(b < a for a, b in zip(d, d[1:]))

    def test_simulate_reports_estimate(self, tmp_path):
        out = tmp_path / "sim.csv"
        code = run_command([
            "simulate", "--n-paths", "2000", "--dt", "0.02", "--horizon", "5",
            "--threshold", "25", "--out", str(out),
        ])
        assert code == EXIT_OK
        meta, rows = read_rows(out)
        vals = {r["quantity"]: r["value"] for r in rows}
        assert float(vals["mean"]) == pytest.approx(-20.2666667, abs=1e-6)
        assert vals["fraction_stopped"] == "1"
        assert meta["threshold"] == "25"

    def test_verify_metadata(self, tmp_path):
        out = tmp_path / "ver.csv"
        code = run_command([
            "verify", "--grid", "10:16:4", "--n-paths", "4000", "--dt", "0.02",
            "--horizon", "10", "--out", str(out),
        ])
        assert code == EXIT_OK
        meta, rows = read_rows(out)
        assert float(meta["x_star_closed_form"]) == pytest.approx(13.186, abs=1e-3)
        assert float(meta["argmax_threshold"]) in (10.0, 12.0, 14.0, 16.0)
        assert len(rows) == 4

    def test_seed_override_changes_hash(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_command(["threshold", "--out", str(a)])
        run_command(["threshold", "--seed", "7", "--out", str(b)])
        ma, _ = read_rows(a)
        mb, _ = read_rows(b)
        assert ma["scenario_hash"] != mb["scenario_hash"]
        assert mb["seed"] == "7"

    def test_stdout_default(self, capsys):
        assert run_command(["threshold"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("# scenario_hash=")
        assert "x_star" in out

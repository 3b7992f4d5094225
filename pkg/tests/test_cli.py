"""Experiment driver: CSV emission, determinism, figure files, validation."""

import math

import numpy as np
import pytest

from ris_downlink import analytics as an
from ris_downlink import cli
from ris_downlink.channel import ScenarioConfig


def make_spec(experiment, grid, rho, out, trials=50, seed=4242, scenario=None, **kw):
    return cli.ExperimentSpec(
        experiment=experiment,
        sweep_grid=tuple(grid),
        rho_list_db=tuple(rho),
        n_trials=trials,
        master_seed=seed,
        out_path=str(out),
        scenario=scenario or ScenarioConfig(),
        make_plot=False,
        **kw,
    )


class TestExperimentSpec:
    def test_rejects_empty_grid(self):
        with pytest.raises(ValueError, match="nonempty"):
            make_spec("fig1", (), (0.0,), "x.csv")

    def test_rejects_non_increasing_grid(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            make_spec("fig1", (10, 10), (0.0,), "x.csv")

    def test_rejects_empty_rho(self):
        with pytest.raises(ValueError, match="rho"):
            make_spec("fig1", (2, 5), (), "x.csv")


class TestFig1:
    def test_row_shape_and_header(self, tmp_path):
        out = tmp_path / "f1.csv"
        rows = cli.run_fig1(make_spec("fig1", (2, 5, 10), (0.0, 5.0), out))
        assert len(rows) == 3 * 2
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# cfg_hash=") and "master_seed=4242" in lines[0]
        assert "version=" in lines[0]
        assert lines[1] == "k,rho_db,mc_delta,mc_stderr,analytic_delta"
        assert len(lines) == 2 + 6

    def test_byte_identical_reruns_and_worker_counts(self, tmp_path):
        a, b, c = (tmp_path / n for n in ("a.csv", "b.csv", "c.csv"))
        cli.run_fig1(make_spec("fig1", (2, 5), (0.0,), a, trials=128))
        cli.run_fig1(make_spec("fig1", (2, 5), (0.0,), b, trials=128))
        cli.run_fig1(make_spec("fig1", (2, 5), (0.0,), c, trials=128, n_workers=2))
        assert a.read_bytes() == b.read_bytes() == c.read_bytes()

    def test_analytic_delta_monotone_for_nonnegative_rho(self, tmp_path):
        out = tmp_path / "mono.csv"
        rows = cli.run_fig1(
            make_spec("fig1", (2, 5, 10, 20, 50, 100), (0.0, 5.0, 10.0), out, trials=2)
        )
        for rho in (0.0, 5.0, 10.0):
            deltas = [r["analytic_delta"] for r in rows if r["rho_db"] == rho]
            assert all(b <= a for a, b in zip(deltas, deltas[1:]))

    def test_k10_accuracy_budget(self, tmp_path):
        out = tmp_path / "k10.csv"
        rows = cli.run_fig1(make_spec("fig1", (10,), (0.0,), out, trials=1000))
        r = rows[0]
        assert abs(r["mc_delta"] - r["analytic_delta"]) <= 3.0 * r["mc_stderr"] + 0.3

    def test_rejects_k_below_two(self, tmp_path):
        with pytest.raises(ValueError, match=">= 2"):
            cli.run_fig1(make_spec("fig1", (1, 5), (0.0,), tmp_path / "x.csv"))

    def test_plot_file_rendered(self, tmp_path):
        out = tmp_path / "plot.csv"
        spec = cli.ExperimentSpec(
            "fig1", (2, 5), (0.0,), 20, 1, str(out), ScenarioConfig(), make_plot=True
        )
        cli.run_fig1(spec)
        assert (tmp_path / "plot.png").exists()


class TestAtomSweeps:
    def test_fig3_columns_and_reference_line(self, tmp_path):
        out = tmp_path / "f3.csv"
        rows = cli.run_fig3(make_spec("fig3", (5, 10), (0.0,), out, trials=100))
        assert len(rows) == 2
        assert set(rows[0]) == {
            "q",
            "rho_db",
            "mc_csum",
            "mc_stderr",
            "analytic_csum",
            "no_ris_mc",
            "no_ris_analytic",
        }
        # the unaided reference is one level for the whole sweep
        assert rows[0]["no_ris_mc"] == rows[1]["no_ris_mc"]
        assert all(r["mc_csum"] > r["no_ris_mc"] for r in rows)

    def test_hardening_curve_weaker_at_small_q_strong_reflection(self, tmp_path):
        spec2 = make_spec("fig2", (10,), (10.0,), tmp_path / "f2.csv", trials=500)
        spec3 = make_spec("fig3", (10,), (10.0,), tmp_path / "f3.csv", trials=500)
        r2 = cli.run_fig2(spec2)[0]
        r3 = cli.run_fig3(spec3)[0]
        assert r2["mc_csum"] == r3["mc_csum"]  # same seed, same draws
        err2 = abs(r2["analytic_csum"] - r2["mc_csum"])
        err3 = abs(r3["analytic_csum"] - r3["mc_csum"])
        assert err2 > err3

    def test_calibrated_unaided_reference_level(self, tmp_path):
        scenario = ScenarioConfig(gain_calibration=100.0)
        out = tmp_path / "cal.csv"
        rows = cli.run_fig2(make_spec("fig2", (5,), (0.0,), out, trials=2000, scenario=scenario))
        assert abs(rows[0]["no_ris_mc"] - 25.26) <= 0.3


class TestSnrScaling:
    def test_linear_regime_normalization(self, tmp_path):
        out = tmp_path / "lin.csv"
        rows = cli.run_snr_scaling(
            make_spec("snr-scaling", (100, 200), (), out, regime="q_linear_in_k", chi=1.0)
        )
        stats_limit = rows[0]["predicted_limit"]
        row200 = [r for r in rows if r["k"] == 200][0]
        assert row200["q"] == 200
        assert abs(row200["normalized"] - stats_limit) / stats_limit <= 0.05

    def test_sqrt_log_regime_limit_constant(self, tmp_path):
        from ris_downlink.channel import derive_link_stats

        scenario = ScenarioConfig()
        out = tmp_path / "sqrt.csv"
        chi = 0.7
        rows = cli.run_snr_scaling(
            make_spec("snr-scaling", (100, 10_000), (), out, regime="q_sqrt_log_k", chi=chi,
                      scenario=scenario)
        )
        stats = derive_link_stats(scenario)
        sh, sf, sg = (math.sqrt(stats.sigma_h_sq), math.sqrt(stats.sigma_f_sq),
                      math.sqrt(stats.sigma_g_sq))
        want = stats.p_tx * ((sf * sg * chi + sh) ** 2 + an.EULER_MASCHERONI * sf * sg * sh * chi)
        for r in rows:
            assert r["predicted_limit"] == pytest.approx(want, rel=1e-12)
            assert r["q"] == math.ceil(chi * math.sqrt(math.log(r["k"])))

    def test_chi_zero_reduces_to_unaided_diversity_line(self, tmp_path):
        from ris_downlink.channel import derive_link_stats

        out = tmp_path / "chi0.csv"
        rows = cli.run_snr_scaling(
            make_spec("snr-scaling", (10, 1000), (), out, regime="q_sqrt_log_k", chi=0.0)
        )
        stats = derive_link_stats(ScenarioConfig())
        for r in rows:
            want = stats.p_tx * stats.sigma_h_sq * (an.EULER_MASCHERONI + math.log(r["k"]))
            assert r["avg_snr"] == pytest.approx(want, rel=1e-12)

    def test_unknown_regime_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="regime"):
            cli.run_snr_scaling(
                make_spec("snr-scaling", (10,), (), tmp_path / "x.csv", regime="bogus")
            )


class TestCsvFormat:
    def test_twelve_significant_digits(self, tmp_path):
        out = tmp_path / "digits.csv"
        cli.run_snr_scaling(
            make_spec("snr-scaling", (10, 100), (), out, regime="q_linear_in_k", chi=1.0)
        )
        lines = out.read_text().splitlines()
        value = lines[2].split(",")[2]  # avg_snr column
        mantissa = value.replace("-", "").replace(".", "").split("e")[0].lstrip("0")
        assert len(mantissa) in (11, 12)  # trailing zeros may be trimmed by %g
        assert float(value) > 0


class TestValidate:
    def test_fresh_run_passes(self, capsys):
        failures = cli.run_validate()
        out = capsys.readouterr().out
        assert failures == 0
        assert an.HARDENING_SUPPORT_NOTE in out
        assert out.count("[PASS]") == len(cli.VALIDATION_CHECKS)

    def test_corrupted_tolerance_fails(self, capsys):
        failures = cli.run_validate(tolerance_overrides={"moment_match_round_trip": -1.0})
        out = capsys.readouterr().out
        assert failures == 1
        assert "[FAIL] moment_match_round_trip" in out


class TestMainEntry:
    def test_fig1_command(self, tmp_path, monkeypatch):
        out = tmp_path / "main.csv"
        rc = cli.main(
            [
                "fig1",
                "--k-grid",
                "2,5",
                "--rho-list",
                "0",
                "--trials",
                "40",
                "--seed",
                "7",
                "--out",
                str(out),
                "--no-plot",
            ]
        )
        assert rc == 0
        assert out.exists()

    def test_validate_command_exit_codes(self, tmp_path, monkeypatch, capsys):
        assert cli.main(["validate", "--seed", "5"]) == 0
        # corrupt one tolerance: the validate command must exit nonzero
        checks = tuple(
            (name, fn, -1.0 if name == "gamma_ratio_recurrence" else tol)
            for name, fn, tol in cli.VALIDATION_CHECKS
        )
        monkeypatch.setattr(cli, "VALIDATION_CHECKS", checks)
        assert cli.main(["validate", "--seed", "5"]) == 1

    def test_config_file_round_trip(self, tmp_path):
        scn = tmp_path / "case.scn"
        scn.write_text("k_users = 4\nrho_db = 5\n")
        out = tmp_path / "cfg.csv"
        rc = cli.main(
            [
                "fig3",
                "--config",
                str(scn),
                "--q-grid",
                "5",
                "--rho-list",
                "0",
                "--trials",
                "30",
                "--out",
                str(out),
                "--no-plot",
            ]
        )
        assert rc == 0
        assert "cfg_hash=" in out.read_text().splitlines()[0]

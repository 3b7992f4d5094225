"""Geometry, pathloss derivation, steering vector, and channel draws."""

import math
from dataclasses import replace

import numpy as np
import pytest

from ris_downlink.channel import (
    ChannelRealization,
    ScenarioConfig,
    ScenarioFormatError,
    derive_link_stats,
    draw_realization,
    load_scenario,
    nakagami_refl_stats,
    scenario_hash,
    steering_vector,
)
from ris_downlink.montecarlo import trial_rng


class TestSteeringVector:
    def test_single_atom(self):
        np.testing.assert_allclose(steering_vector(1, 1, 0.3, -0.2, 0.25), [1.0 + 0j])

    def test_two_atom_quarter_wavelength(self):
        got = steering_vector(2, 1, 1.0, 0.0, 0.25)
        np.testing.assert_allclose(got, [1.0, 1j], atol=1e-15)

    def test_broadside_is_all_ones(self):
        np.testing.assert_allclose(steering_vector(2, 2, 0.0, 0.0, 0.25), np.ones(4))

    def test_unit_modulus(self):
        got = steering_vector(5, 3, 0.4, -0.7, 0.25)
        np.testing.assert_allclose(np.abs(got), 1.0, rtol=1e-14)

    def test_kronecker_ordering(self):
        got = steering_vector(2, 3, 0.5, 0.25, 0.25)
        # entry (p, q) sits at index p*qy + q
        for p in range(2):
            for q in range(3):
                want = np.exp(2j * np.pi * 0.25 * (p * 0.5 + q * 0.25))
                assert got[p * 3 + q] == pytest.approx(want)

    def test_rejects_bad_cosines(self):
        with pytest.raises(ValueError):
            steering_vector(2, 2, 1.5, 0.0, 0.25)


class TestDeriveLinkStats:
    def test_reference_distances_and_power(self):
        cfg = ScenarioConfig()
        stats = derive_link_stats(cfg)
        lam = cfg.wavelength
        aperture = lam**2 / (4 * math.pi) ** 2
        # BS at (0,0), RIS at (10,0): d = 10 m exactly
        assert stats.sigma_g_sq == pytest.approx(10**2.5 * 10.0**-1.6 * aperture, rel=1e-12)
        # BS at (0,0), cluster at (40,-10): d = sqrt(1700)
        d_h = math.sqrt(1700.0)
        assert d_h == pytest.approx(41.23105625617661, rel=1e-12)
        assert stats.sigma_h_sq == pytest.approx(10**0.5 * d_h**-1.6 * aperture, rel=1e-12)
        # EIRP 33 dBm over -100 dBm noise
        assert stats.p_tx == pytest.approx(10**13.3, rel=1e-12)

    def test_rho_fixes_sigma_f(self):
        for rho in (-10.0, 0.0, 5.0):
            stats = derive_link_stats(ScenarioConfig(rho_db=rho))
            want = 10 ** (rho / 10.0) * stats.sigma_h_sq / stats.sigma_g_sq
            assert stats.sigma_f_sq == pytest.approx(want, rel=1e-12)

    def test_gain_calibration_scales_both_h_and_f(self):
        base = derive_link_stats(ScenarioConfig())
        cal = derive_link_stats(ScenarioConfig(gain_calibration=100.0))
        assert cal.sigma_h_sq == pytest.approx(100.0 * base.sigma_h_sq, rel=1e-12)
        assert cal.sigma_f_sq == pytest.approx(100.0 * base.sigma_f_sq, rel=1e-12)
        assert cal.sigma_g_sq == base.sigma_g_sq

    def test_directional_cosines_inside_disk(self):
        stats = derive_link_stats(ScenarioConfig(theta_ris=2.1, phi_ris=0.8))
        assert stats.u_x**2 + stats.u_y**2 <= 1.0

    def test_coincident_positions_rejected(self):
        with pytest.raises(ValueError, match="zero link distance"):
            derive_link_stats(ScenarioConfig(ris_position=(0.0, 0.0)))


class TestDrawRealization:
    def test_direct_channel_power(self):
        # 1e6 draws of h via 100 trials with 10^4 users each
        cfg = ScenarioConfig(k_users=10_000, qx=1, qy=1)
        stats = derive_link_stats(cfg)
        acc = 0.0
        for t in range(100):
            re = draw_realization(stats, cfg, trial_rng(7, t))
            acc += float(np.mean(np.abs(re.h) ** 2))
        mean = acc / 100
        assert abs(mean - stats.sigma_h_sq) <= 0.005 * stats.sigma_h_sq

    def test_reflection_channel_power(self):
        cfg = ScenarioConfig(k_users=10_000, qx=2, qy=2)
        stats = derive_link_stats(cfg)
        acc = 0.0
        for t in range(100):
            re = draw_realization(stats, cfg, trial_rng(8, t))
            acc += float(np.mean(np.sum(np.abs(re.f) ** 2, axis=1)))
        mean = acc / 100
        want = cfg.q_total * stats.sigma_f_sq
        assert abs(mean - want) <= 0.005 * want

    def test_single_atom_g_is_sigma_g(self):
        cfg = ScenarioConfig(qx=1, qy=1)
        stats = derive_link_stats(cfg)
        re = draw_realization(stats, cfg, trial_rng(9, 0))
        np.testing.assert_allclose(re.g, [math.sqrt(stats.sigma_g_sq)], rtol=1e-14)

    def test_g_modulus_is_sigma_g(self):
        cfg = ScenarioConfig()
        stats = derive_link_stats(cfg)
        re = draw_realization(stats, cfg, trial_rng(10, 0))
        np.testing.assert_allclose(np.abs(re.g), math.sqrt(stats.sigma_g_sq), rtol=1e-13)

    def test_reflection_norm_identity(self):
        # ||diag(f*) g|| = sigma_g * ||f|| because |g_q| = sigma_g for all q
        cfg = ScenarioConfig(k_users=5)
        stats = derive_link_stats(cfg)
        re = draw_realization(stats, cfg, trial_rng(11, 3))
        sg = math.sqrt(stats.sigma_g_sq)
        for k in range(cfg.k_users):
            lhs = np.linalg.norm(np.conj(re.f[k]) * re.g)
            rhs = sg * np.linalg.norm(re.f[k])
            assert abs(lhs - rhs) <= 1e-12 * rhs

    def test_bit_identical_redraw(self):
        cfg = ScenarioConfig(k_users=4)
        stats = derive_link_stats(cfg)
        a = draw_realization(stats, cfg, trial_rng(12345, 17))
        b = draw_realization(stats, cfg, trial_rng(12345, 17))
        assert np.array_equal(a.h, b.h) and np.array_equal(a.f, b.f) and np.array_equal(a.g, b.g)

    def test_reflection_magnitude_variance_matches_exact_formula(self):
        # variance of Z2 = sigma_g*sqrt(Q)*||f|| over 1e5 draws, 3 standard errors
        cfg = ScenarioConfig(k_users=10_000, qx=4, qy=2)
        stats = derive_link_stats(cfg)
        sg = math.sqrt(stats.sigma_g_sq)
        z = []
        for t in range(10):
            re = draw_realization(stats, cfg, trial_rng(13, t))
            z.append(sg * math.sqrt(cfg.q_total) * np.linalg.norm(re.f, axis=1))
        z = np.concatenate(z)
        _, want_var, _, _ = nakagami_refl_stats(
            cfg.q_total, math.sqrt(stats.sigma_f_sq), sg
        )
        zc = z - z.mean()
        sample_var = float(np.mean(zc**2))
        m4 = float(np.mean(zc**4))
        se_var = math.sqrt(max(m4 - sample_var**2, 0.0) / z.size)
        assert abs(sample_var - want_var) <= 3.0 * se_var


class TestNakagamiReflStats:
    def test_q1_is_rayleigh(self):
        mean, var, mean_s, var_s = nakagami_refl_stats(1, 1.0, 1.0)
        assert mean == pytest.approx(math.sqrt(math.pi) / 2.0, rel=1e-14)
        assert var == pytest.approx(1.0 - math.pi / 4.0, rel=1e-12)
        assert mean_s == 1.0 and var_s == 0.25

    def test_large_q_variance_approaches_quarter(self):
        _, var, _, _ = nakagami_refl_stats(1024, 1.0, 1.0)
        assert 0.999 <= var / (1024 / 4.0) <= 1.001

    def test_q30_mean_close_to_stirling(self):
        mean, _, _, _ = nakagami_refl_stats(30, 1.0, 1.0)
        assert 0.995 <= mean / 30.0 <= 1.0

    def test_scales(self):
        mean, var, mean_s, var_s = nakagami_refl_stats(8, 0.5, 3.0)
        base_mean, base_var, _, _ = nakagami_refl_stats(8, 1.0, 1.0)
        assert mean == pytest.approx(1.5 * base_mean, rel=1e-13)
        assert var == pytest.approx(2.25 * base_var, rel=1e-13)


class TestScenarioFiles:
    def test_defaults_and_overrides(self, tmp_path):
        path = tmp_path / "case.scn"
        path.write_text(
            "# comment line\n"
            "k_users = 25\n"
            "rho_db = 5.0   # inline comment\n"
            "cluster_x = 60\n"
            "gain_calibration = 100.0\n"
        )
        cfg = load_scenario(path)
        assert cfg.k_users == 25
        assert cfg.rho_db == 5.0
        assert cfg.cluster_center == (60.0, -10.0)
        assert cfg.gain_calibration == 100.0
        assert cfg.f0_hz == 25e9  # untouched default

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.scn"
        path.write_text("num_users = 3\n")
        with pytest.raises(ScenarioFormatError, match="unknown key"):
            load_scenario(path)

    def test_bad_value_rejected(self, tmp_path):
        path = tmp_path / "bad.scn"
        path.write_text("k_users = many\n")
        with pytest.raises(ScenarioFormatError, match="bad value"):
            load_scenario(path)

    def test_bad_syntax_rejected(self, tmp_path):
        path = tmp_path / "bad.scn"
        path.write_text("just some words\n")
        with pytest.raises(ScenarioFormatError, match="key = value"):
            load_scenario(path)

    def test_invalid_config_value_rejected(self, tmp_path):
        path = tmp_path / "bad.scn"
        path.write_text("k_users = 0\n")
        with pytest.raises(ScenarioFormatError):
            load_scenario(path)

    def test_hash_tracks_content(self):
        a = scenario_hash(ScenarioConfig())
        b = scenario_hash(ScenarioConfig(rho_db=5.0))
        assert a != b
        assert a == scenario_hash(ScenarioConfig())


class TestConfigValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"k_users": 0},
            {"qx": 0},
            {"f0_hz": 0.0},
            {"spacing_ratio": 0.0},
            {"pathloss_exp": -1.0},
            {"theta_ris": 7.0},
            {"phi_ris": 2.0},
            {"gain_calibration": 0.0},
        ],
    )
    def test_rejects(self, kwargs):
        with pytest.raises(ValueError):
            ScenarioConfig(**kwargs)

    def test_q_total(self):
        assert ScenarioConfig(qx=6, qy=5).q_total == 30

"""Scenario geometry, pathloss derivation, RIS steering vector and random
channel generation.

Conventions:
  * CN(0, s2) means real and imaginary parts are independent N(0, s2/2),
    so E|h|^2 = s2 (circular-symmetric complex Gaussian).
  * The BS->RIS channel is deterministic line-of-sight: g = sigma_g * a_RIS
    with a unit-modulus steering vector a_RIS, hence |g_q| = sigma_g for all q.
  * All users share the cluster-center pathloss (homogeneous cluster).
"""

import hashlib
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .specfun import gamma_ratio_half

__all__ = [
    "C_LIGHT",
    "ScenarioConfig",
    "DerivedLinkStats",
    "ChannelRealization",
    "ScenarioFormatError",
    "steering_vector",
    "derive_link_stats",
    "draw_realization",
    "nakagami_refl_stats",
    "load_scenario",
    "scenario_text",
    "scenario_hash",
]

C_LIGHT = 299792458.0  # m/s


@dataclass(frozen=True)
class ScenarioConfig:
    """Physical scenario: geometry, array size, link budget.

    Defaults reproduce the reference deployment: BS at the origin, RIS at
    (10, 0) m, user cluster centered at (40, -10) m, 25 GHz carrier,
    quarter-wavelength element spacing, EIRP 33 dBm over -100 dBm noise.

    gain_calibration multiplies the derived direct-link variance sigma_h^2;
    it absorbs the BS-side antenna-gain convention that the link budget
    leaves open (see README, "Gain calibration").
    """

    bs_position: tuple = (0.0, 0.0)
    ris_position: tuple = (10.0, 0.0)
    cluster_center: tuple = (40.0, -10.0)
    k_users: int = 10
    qx: int = 6
    qy: int = 5
    f0_hz: float = 25e9
    spacing_ratio: float = 0.25  # element spacing / wavelength
    pathloss_exp: float = 1.6
    gain_ris_dbi: float = 25.0
    gain_ue_dbi: float = 5.0
    eirp_dbm: float = 33.0
    noise_dbm: float = -100.0
    rho_db: float = 0.0  # (sigma_f^2 sigma_g^2) / sigma_h^2, in dB
    theta_ris: float = 0.9  # azimuth of the BS->RIS path, rad, [0, 2pi)
    phi_ris: float = -0.35  # elevation, rad, [-pi/2, pi/2)
    gain_calibration: float = 1.0

    def __post_init__(self):
        if self.k_users < 1:
            raise ValueError("k_users must be >= 1")
        if self.qx < 1 or self.qy < 1:
            raise ValueError("qx and qy must be >= 1")
        if self.f0_hz <= 0.0:
            raise ValueError("f0_hz must be positive")
        if self.spacing_ratio <= 0.0:
            raise ValueError("spacing_ratio must be positive")
        if self.pathloss_exp <= 0.0:
            raise ValueError("pathloss_exp must be positive")
        if not 0.0 <= self.theta_ris < 2.0 * math.pi:
            raise ValueError("theta_ris must lie in [0, 2*pi)")
        if not -math.pi / 2.0 <= self.phi_ris < math.pi / 2.0:
            raise ValueError("phi_ris must lie in [-pi/2, pi/2)")
        if self.gain_calibration <= 0.0:
            raise ValueError("gain_calibration must be positive")

    @property
    def q_total(self) -> int:
        return self.qx * self.qy

    @property
    def wavelength(self) -> float:
        return C_LIGHT / self.f0_hz


@dataclass(frozen=True)
class DerivedLinkStats:
    """Linear-scale link statistics derived from a ScenarioConfig.

    p_tx is noise-normalized (noise power = 1), so p_tx * alpha is an SNR.
    """

    sigma_h_sq: float
    sigma_g_sq: float
    sigma_f_sq: float
    p_tx: float
    u_x: float
    u_y: float


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the downlink channels.

    h: (K,) direct BS->UE channels.
    f: (K, Q) RIS->UE channels, one row per user.
    g: (Q,) deterministic BS->RIS channel, |g_q| = sigma_g.
    """

    h: np.ndarray
    f: np.ndarray
    g: np.ndarray


def _az_el_to_cosines(theta: float, phi: float) -> tuple:
    u_x = math.sin(theta) * math.cos(phi)
    u_y = math.sin(theta) * math.sin(phi)
    return u_x, u_y


def steering_vector(qx, qy, u_x, u_y, spacing_ratio):
    """Unit-modulus array response of a qx-by-qy rectangular grid.

    Entry (p, q) in Kronecker order equals
    exp(j*2*pi*spacing_ratio*(p*u_x + q*u_y)).
    """
    if abs(u_x) > 1.0 or abs(u_y) > 1.0:
        raise ValueError("directional cosines must satisfy |u| <= 1")
    ax = np.exp(2j * np.pi * spacing_ratio * u_x * np.arange(qx))
    ay = np.exp(2j * np.pi * spacing_ratio * u_y * np.arange(qy))
    return np.kron(ax, ay)


def derive_link_stats(cfg: ScenarioConfig) -> DerivedLinkStats:
    """Pathloss variances and normalized transmit power for a scenario.

    sigma_alpha^2 = G_alpha * d_alpha^(-eta) * lambda0^2 / (4*pi)^2 with the
    RIS gain on the BS->RIS link and the UE gain on the direct link;
    sigma_f^2 follows from the configured power ratio rho.
    """
    bs = np.asarray(cfg.bs_position, dtype=float)
    ris = np.asarray(cfg.ris_position, dtype=float)
    cluster = np.asarray(cfg.cluster_center, dtype=float)
    d_g = float(np.linalg.norm(ris - bs))
    d_h = float(np.linalg.norm(cluster - bs))
    if d_g == 0.0 or d_h == 0.0:
        raise ValueError("coincident node positions give zero link distance")

    lam = cfg.wavelength
    aperture = lam**2 / (4.0 * np.pi) ** 2
    sigma_g_sq = 10.0 ** (cfg.gain_ris_dbi / 10.0) * d_g ** (-cfg.pathloss_exp) * aperture
    sigma_h_sq = (
        cfg.gain_calibration
        * 10.0 ** (cfg.gain_ue_dbi / 10.0)
        * d_h ** (-cfg.pathloss_exp)
        * aperture
    )
    sigma_f_sq = 10.0 ** (cfg.rho_db / 10.0) * sigma_h_sq / sigma_g_sq
    p_tx = 10.0 ** ((cfg.eirp_dbm - cfg.noise_dbm) / 10.0)
    u_x, u_y = _az_el_to_cosines(cfg.theta_ris, cfg.phi_ris)
    return DerivedLinkStats(
        sigma_h_sq=sigma_h_sq,
        sigma_g_sq=sigma_g_sq,
        sigma_f_sq=sigma_f_sq,
        p_tx=p_tx,
        u_x=u_x,
        u_y=u_y,
    )


def draw_realization(stats: DerivedLinkStats, cfg: ScenarioConfig, rng) -> ChannelRealization:
    """Draw one independent channel realization from an initialized stream.

    h_k ~ CN(0, sigma_h^2) i.i.d., f_k entries ~ CN(0, sigma_f^2) i.i.d.,
    g = sigma_g * steering vector. The draw order (h first, then f row-major)
    is part of the reproducibility contract.
    """
    k, q = cfg.k_users, cfg.q_total
    sh = math.sqrt(stats.sigma_h_sq / 2.0)
    sf = math.sqrt(stats.sigma_f_sq / 2.0)
    h = sh * (rng.standard_normal(k) + 1j * rng.standard_normal(k))
    f = sf * (rng.standard_normal((k, q)) + 1j * rng.standard_normal((k, q)))
    g = math.sqrt(stats.sigma_g_sq) * steering_vector(
        cfg.qx, cfg.qy, stats.u_x, stats.u_y, cfg.spacing_ratio
    )
    return ChannelRealization(h=h, f=f, g=g)


def nakagami_refl_stats(Q, sigma_f, sigma_g):
    """Exact and Stirling mean/variance of the reflection-path magnitude
    sigma_g * sqrt(Q) * ||f_k||.

    The magnitude is Nakagami with shape Q; exact moments use the
    half-integer gamma ratio, the Stirling variants its leading order:
    mean ~ sigma_f*sigma_g*Q, variance ~ sigma_f^2*sigma_g^2*Q/4.

    Returns (mean, variance, mean_stirling, variance_stirling).
    """
    if Q != int(Q) or Q < 1:
        raise ValueError("Q must be an integer >= 1")
    Q = int(Q)
    r = gamma_ratio_half(Q)
    c = sigma_f * sigma_g
    mean = c * math.sqrt(Q) * r
    variance = c * c * Q * Q * (1.0 - r * r / Q)
    return mean, variance, c * Q, c * c * Q / 4.0


# ---------------------------------------------------------------------------
# Scenario files: flat "key = value" text, '#' comments, unknown keys rejected.
# ---------------------------------------------------------------------------


class ScenarioFormatError(ValueError):
    """Malformed scenario file (syntax, unknown key, or bad value)."""


_SCALAR_PARSERS = {
    "k_users": int,
    "qx": int,
    "qy": int,
    "f0_hz": float,
    "spacing_ratio": float,
    "pathloss_exp": float,
    "gain_ris_dbi": float,
    "gain_ue_dbi": float,
    "eirp_dbm": float,
    "noise_dbm": float,
    "rho_db": float,
    "theta_ris": float,
    "phi_ris": float,
    "gain_calibration": float,
}
_POINT_KEYS = {
    "bs_x": ("bs_position", 0),
    "bs_y": ("bs_position", 1),
    "ris_x": ("ris_position", 0),
    "ris_y": ("ris_position", 1),
    "cluster_x": ("cluster_center", 0),
    "cluster_y": ("cluster_center", 1),
}


def load_scenario(path) -> ScenarioConfig:
    """Parse a scenario file; unspecified keys keep the default deployment."""
    overrides = {}
    points = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ScenarioFormatError(f"line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            try:
                if key in _SCALAR_PARSERS:
                    overrides[key] = _SCALAR_PARSERS[key](value)
                elif key in _POINT_KEYS:
                    attr, idx = _POINT_KEYS[key]
                    points.setdefault(attr, [None, None])[idx] = float(value)
                else:
                    raise ScenarioFormatError(f"line {lineno}: unknown key '{key}'")
            except ScenarioFormatError:
                raise
            except ValueError as exc:
                raise ScenarioFormatError(
                    f"line {lineno}: bad value for '{key}': {value!r}"
                ) from exc
    cfg = ScenarioConfig()
    for attr, pair in points.items():
        base = getattr(cfg, attr)
        overrides[attr] = (
            pair[0] if pair[0] is not None else base[0],
            pair[1] if pair[1] is not None else base[1],
        )
    try:
        return replace(cfg, **overrides)
    except ValueError as exc:
        raise ScenarioFormatError(str(exc)) from exc


def scenario_text(cfg: ScenarioConfig) -> str:
    """Canonical key=value rendering of a scenario (hash input and docs)."""
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, tuple):
            v = ",".join(f"{x:.12g}" for x in v)
        elif isinstance(v, float):
            v = f"{v:.12g}"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"


def scenario_hash(cfg: ScenarioConfig) -> str:
    """Short stable digest of the scenario, embedded in CSV headers."""
    return hashlib.sha256(scenario_text(cfg).encode("utf-8")).hexdigest()[:16]

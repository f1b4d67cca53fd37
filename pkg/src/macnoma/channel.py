"""Field-response channel model for the movable-antenna C-NOMA downlink.

Positions are 2-D arrays with the coordinate pair on the last axis, so every
function here accepts a single position ``(2,)`` or a batch ``(..., 2)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import cached_property

import numpy as np


class ConfigError(ValueError):
    """Raised for an invalid or inconsistent system configuration."""


def db_to_linear(x_db):
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def dbm_to_watts(x_dbm):
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(p):
    return 10.0 * np.log10(np.asarray(p, dtype=float)) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """Physical parameters of one deployment.

    Powers are in watts, distances and the wavelength in meters, gains linear.
    """

    n_bs_antennas: int = 4
    wavelength: float = 0.01
    l_b: int = 6
    l_a: int = 6
    l_r: int = 6
    region_side: float = 0.02
    # Lower-left corner of the mobility square (both coordinates).
    region_origin: float = 0.0
    alpha: float = 3.9
    sigma2: float = float(dbm_to_watts(-100.0))
    p_t: float = float(dbm_to_watts(15.0))
    p_nf: float = float(dbm_to_watts(10.0))
    r_th: float = 0.7
    g0: float = float(db_to_linear(-40.0))
    omega_si2: float = float(db_to_linear(-110.0))
    d_bn: float = 50.0
    d_bf: float = 140.0
    d_nf: float = 50.0
    penalty: float = 10.0

    def __post_init__(self):
        for name in ("n_bs_antennas", "l_b", "l_a", "l_r"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"{name} must be an integer >= 1, got {value!r}")
        for name in ("wavelength", "region_side", "sigma2", "p_t", "p_nf",
                     "g0", "omega_si2", "d_bn", "d_bf", "d_nf", "penalty"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be finite and > 0, got {value!r}")
        if not np.isfinite(self.region_origin):
            raise ConfigError(f"region_origin must be finite, got {self.region_origin!r}")
        if not self.alpha > 2:
            raise ConfigError(f"alpha must be > 2, got {self.alpha!r}")
        if not (np.isfinite(self.r_th) and self.r_th >= 0):
            raise ConfigError(f"r_th must be >= 0, got {self.r_th!r}")

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    @property
    def region_center(self) -> np.ndarray:
        return np.full(2, self.region_origin + self.region_side / 2.0)

    @property
    def min_separation(self) -> float:
        """Minimum distance between user N's transmit and receive MAs."""
        return self.wavelength / 2.0

    def mean_gain(self, link: str) -> float:
        """Expected per-antenna channel power gain ``g0 * d**-alpha`` of a link."""
        d = {"bn": self.d_bn, "bf": self.d_bf, "nf": self.d_nf}[link]
        return self.g0 * d ** (-self.alpha)


@dataclass(frozen=True)
class PathAngleSet:
    elevation: np.ndarray
    azimuth: np.ndarray

    def __len__(self):
        return len(self.elevation)


@dataclass(frozen=True)
class LinkAngles:
    tx: PathAngleSet
    rx: PathAngleSet


@dataclass(frozen=True)
class ScenarioRealization:
    """One random draw of every quantity that stays fixed while the MAs move."""

    angles_bn: LinkAngles
    angles_bf: LinkAngles
    angles_nf: LinkAngles
    prm_bn: np.ndarray
    prm_bf: np.ndarray
    prm_nf: np.ndarray
    h_si: complex
    bs_antenna_positions: np.ndarray
    wavelength: float

    @cached_property
    def bs_response_n(self) -> np.ndarray:
        """``Sigma_N @ G_N``, shape ``(L_R, N)``; fixed for the whole scenario."""
        return self.prm_bn @ transmit_frm(self.bs_antenna_positions, self.angles_bn.tx, self.wavelength)

    @cached_property
    def bs_response_f(self) -> np.ndarray:
        return self.prm_bf @ transmit_frm(self.bs_antenna_positions, self.angles_bf.tx, self.wavelength)


@dataclass(frozen=True)
class ChannelSet:
    h_n: np.ndarray
    h_f: np.ndarray
    h_d: np.ndarray | complex
    h_si: complex = 0j


def bs_antenna_positions(config: SystemConfig) -> np.ndarray:
    """Fixed half-wavelength ULA along x: ``t_n = ((n-1) * lambda/2, 0)``."""
    n = np.arange(config.n_bs_antennas)
    return np.stack([n * config.wavelength / 2.0, np.zeros(config.n_bs_antennas)], axis=-1)


def _split(x: np.ndarray, counts) -> list[np.ndarray]:
    out, start = [], 0
    for n in counts:
        out.append(x[start:start + n])
        start += n
    return out


def sample_scenario(config: SystemConfig, seed=None) -> ScenarioRealization:
    """Draw path angles, path-response matrices and the SI channel.

    ``seed`` may be anything accepted by :func:`numpy.random.default_rng`,
    including an existing ``Generator`` (which is then advanced).
    """
    rng = np.random.default_rng(seed)
    c = config
    # All angles in one draw, split per link end: (bn tx, bn rx, bf tx, bf rx, nf tx, nf rx).
    counts = (c.l_b, c.l_r, c.l_b, c.l_r, c.l_a, c.l_r)
    total = sum(counts)
    sets = [PathAngleSet(e, a) for e, a in zip(_split(rng.uniform(0.0, np.pi, total), counts),
                                                _split(rng.uniform(0.0, 2.0 * np.pi, total), counts))]
    angles_bn, angles_bf, angles_nf = (LinkAngles(sets[k], sets[k + 1]) for k in (0, 2, 4))
    # PRM entries in one complex Gaussian draw, then scaled per link.
    shapes = ((c.l_r, c.l_b), (c.l_r, c.l_b), (c.l_r, c.l_a))
    sizes = [r * q for r, q in shapes]
    z = rng.standard_normal((2, sum(sizes) + 1))
    z = (z[0] + 1j * z[1]) / np.sqrt(2.0)
    blocks = _split(z, sizes)
    prm_bn, prm_bf, prm_nf = (
        np.sqrt(c.mean_gain(link) / size) * block.reshape(shape)
        for link, size, block, shape in zip(("bn", "bf", "nf"), sizes, blocks, shapes)
    )
    h_si = complex(np.sqrt(c.omega_si2) * z[-1])
    scenario = ScenarioRealization(
        angles_bn=angles_bn,
        angles_bf=angles_bf,
        angles_nf=angles_nf,
        prm_bn=prm_bn,
        prm_bf=prm_bf,
        prm_nf=prm_nf,
        h_si=h_si,
        bs_antenna_positions=bs_antenna_positions(c),
        wavelength=c.wavelength,
    )
    return scenario


def propagation_difference(pos, elevation, azimuth):
    """Path-length difference ``x cos(theta) sin(phi) + y sin(theta)``.

    ``pos`` has shape ``(..., 2)`` and the angles shape ``(L,)``; the result
    has shape ``(..., L)``.
    """
    pos = np.asarray(pos, dtype=float)
    elevation = np.asarray(elevation, dtype=float)
    azimuth = np.asarray(azimuth, dtype=float)
    if elevation.ndim == 0:
        return pos[..., 0] * np.cos(elevation) * np.sin(azimuth) + pos[..., 1] * np.sin(elevation)
    x = pos[..., 0:1]
    y = pos[..., 1:2]
    return x * np.cos(elevation) * np.sin(azimuth) + y * np.sin(elevation)


def frv(pos, angles: PathAngleSet, wavelength: float) -> np.ndarray:
    """Field response vector ``exp(-j 2 pi / lambda * rho_k(pos))`` over the paths."""
    rho = propagation_difference(pos, angles.elevation, angles.azimuth)
    return np.exp(-2j * np.pi / wavelength * rho)


def transmit_frm(positions: np.ndarray, angles: PathAngleSet, wavelength: float) -> np.ndarray:
    """Stack the FRVs of several fixed antennas column-wise, shape ``(L, n_antennas)``."""
    return frv(positions, angles, wavelength).T


def _check_shapes(scenario: ScenarioRealization, config: SystemConfig):
    expected = {
        "prm_bn": (config.l_r, config.l_b),
        "prm_bf": (config.l_r, config.l_b),
        "prm_nf": (config.l_r, config.l_a),
        "bs_antenna_positions": (config.n_bs_antennas, 2),
    }
    for name, shape in expected.items():
        got = np.shape(getattr(scenario, name))
        if got != shape:
            raise ConfigError(f"scenario.{name} has shape {got}, config expects {shape}")


def _bs_user(scenario: ScenarioRealization, user_rx_pos, link: str, wavelength: float) -> np.ndarray:
    if link == "N":
        angles, response = scenario.angles_bn, scenario.bs_response_n
    elif link == "F":
        angles, response = scenario.angles_bf, scenario.bs_response_f
    else:
        raise ValueError(f"link must be 'N' or 'F', got {link!r}")
    return frv(user_rx_pos, angles.rx, wavelength) @ response


def _d2d(scenario: ScenarioRealization, tx_pos, rx_pos, wavelength: float):
    f = frv(rx_pos, scenario.angles_nf.rx, wavelength)
    g = frv(tx_pos, scenario.angles_nf.tx, wavelength)
    if f.ndim == 1 and g.ndim == 1:
        return complex(f @ scenario.prm_nf @ g)
    return np.einsum("...r,rt,...t->...", f, scenario.prm_nf, g)


def assemble_bs_user_channel(scenario: ScenarioRealization, user_rx_pos, link: str,
                             config: SystemConfig) -> np.ndarray:
    """BS-to-user channel ``f^T(r) Sigma G`` for ``link`` in ``{"N", "F"}``."""
    _check_shapes(scenario, config)
    return _bs_user(scenario, user_rx_pos, link, config.wavelength)


def assemble_d2d_channel(scenario: ScenarioRealization, tx_pos, rx_pos,
                         config: SystemConfig):
    """D2D channel ``f_F^T(r_F) Sigma_NF g_N(t_d)``; scalar, or one per batch entry."""
    _check_shapes(scenario, config)
    return _d2d(scenario, tx_pos, rx_pos, config.wavelength)


def channels_at(scenario: ScenarioRealization, t_d, r_n, r_f, config: SystemConfig) -> ChannelSet:
    _check_shapes(scenario, config)
    wl = config.wavelength
    return ChannelSet(
        h_n=_bs_user(scenario, r_n, "N", wl),
        h_f=_bs_user(scenario, r_f, "F", wl),
        h_d=_d2d(scenario, t_d, r_f, wl),
        h_si=scenario.h_si,
    )

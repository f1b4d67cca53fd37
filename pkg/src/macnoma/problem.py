"""Constraints, beamformer power normalization and the penalized reward."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .channel import SystemConfig

if TYPE_CHECKING:
    from .link_rates import CandidateSolution, LinkEvaluation

# Normalized beamformers hit P_T only up to rounding.
BS_POWER_RTOL = 1e-9


class DegenerateBeamformerError(ValueError):
    """Both beamformers are zero, so no direction exists to rescale."""


def _power(w):
    return np.sum(np.abs(w) ** 2, axis=-1)


def normalize_beamformers(w_f, w_n, p_t):
    """Rescale both beamformers jointly so their total power equals ``p_t``."""
    w_f = np.asarray(w_f, dtype=complex)
    w_n = np.asarray(w_n, dtype=complex)
    total = _power(w_f) + _power(w_n)
    if np.any(total <= 0):
        raise DegenerateBeamformerError("zero-power beamformer pair cannot be normalized")
    scale = np.sqrt(p_t / total)[..., None]
    return w_f * scale, w_n * scale


def default_beamformers(n_antennas: int, p_t: float):
    """Equal-power, uniform-phase pair used when a proposal has zero power."""
    w = np.full(n_antennas, np.sqrt(p_t / (2 * n_antennas)), dtype=complex)
    return w, w.copy()


def normalize_or_default(w_f, w_n, p_t):
    """:func:`normalize_beamformers`, substituting the default pair for zero-power rows."""
    w_f = np.array(w_f, dtype=complex)
    w_n = np.array(w_n, dtype=complex)
    dead = (_power(w_f) + _power(w_n)) <= 0
    if np.any(dead):
        d_f, d_n = default_beamformers(w_f.shape[-1], p_t)
        w_f[dead] = d_f
        w_n[dead] = d_n
    return normalize_beamformers(w_f, w_n, p_t)


def indicator_violation(x):
    """Step indicator: 0 when ``x >= 0``, 1 when ``x < 0``."""
    out = (np.asarray(x) < 0).astype(int)
    return int(out) if out.ndim == 0 else out


def region_slack(pos, side: float, origin: float = 0.0):
    """Signed distance of ``pos`` to the boundary of ``[origin, origin + side]^2`` (>= 0 inside)."""
    pos = np.asarray(pos, dtype=float) - origin
    return np.min(np.minimum(pos, side - pos), axis=-1)


@dataclass(frozen=True)
class ConstraintSlacks:
    bs_power: np.ndarray | float
    relay_power_low: np.ndarray | float
    relay_power_high: np.ndarray | float
    qos_n: np.ndarray | float
    qos_f: np.ndarray | float
    sic: np.ndarray | float
    region_td: np.ndarray | float
    region_rn: np.ndarray | float
    region_rf: np.ndarray | float
    ma_separation: np.ndarray | float
    bs_power_budget: float = 1.0

    @property
    def placement_ok(self):
        ok = ((np.asarray(self.region_td) >= 0) & (np.asarray(self.region_rn) >= 0)
              & (np.asarray(self.region_rf) >= 0) & (np.asarray(self.ma_separation) >= 0))
        return bool(ok) if ok.ndim == 0 else ok

    @property
    def feasible(self):
        ok = (
            (np.asarray(self.bs_power) >= -BS_POWER_RTOL * self.bs_power_budget)
            & (np.asarray(self.relay_power_low) >= 0)
            & (np.asarray(self.relay_power_high) >= 0)
            & (np.asarray(self.qos_n) >= 0)
            & (np.asarray(self.qos_f) >= 0)
            & (np.asarray(self.sic) >= 0)
            & self.placement_ok
        )
        return bool(ok) if np.ndim(ok) == 0 else ok


def compute_slacks(evaluation: "LinkEvaluation", sol: "CandidateSolution", config: SystemConfig,
                   enforce_separation: bool = True) -> ConstraintSlacks:
    """Signed margin of every constraint; a candidate is feasible iff all are >= 0.

    The BS power margin is judged with a relative rounding tolerance, since
    normalization lands on the budget rather than strictly inside it. With
    ``enforce_separation=False`` the transmit/receive MA spacing rule is
    reported as satisfied (schemes whose relay MA is idle or hard-wired).
    """
    p_n = np.asarray(sol.p_n, dtype=float)
    bs_power = config.p_t - _power(sol.w_f) - _power(sol.w_n)
    side, origin = config.region_side, config.region_origin
    if enforce_separation:
        sep = np.linalg.norm(np.asarray(sol.t_d) - np.asarray(sol.r_n), axis=-1) - config.min_separation
    else:
        sep = np.zeros(np.shape(p_n))
    return ConstraintSlacks(
        bs_power=bs_power,
        relay_power_low=p_n,
        relay_power_high=config.p_nf - p_n,
        qos_n=np.asarray(evaluation.r_nn) - config.r_th,
        qos_f=np.asarray(evaluation.r_ff) - config.r_th,
        sic=np.asarray(evaluation.r_nf) - config.r_th,
        region_td=region_slack(sol.t_d, side, origin),
        region_rn=region_slack(sol.r_n, side, origin),
        region_rf=region_slack(sol.r_f, side, origin),
        ma_separation=sep,
        bs_power_budget=config.p_t,
    )


@dataclass(frozen=True)
class RewardBreakdown:
    sum_rate: np.ndarray | float
    penalty_qos: np.ndarray | float
    penalty_region: np.ndarray | float
    penalty_power: np.ndarray | float
    total: np.ndarray | float


def reward(evaluation: "LinkEvaluation", slacks: ConstraintSlacks, pen: float) -> RewardBreakdown:
    """Sum rate minus one ``pen`` per fired indicator (QoS/SIC, placement, relay power)."""
    # min(R_NN, R_NF, R_FF) - R_th, taken from the slacks.
    qos_margin = np.minimum(np.minimum(slacks.qos_n, slacks.qos_f), slacks.sic)
    i_qos = indicator_violation(qos_margin)
    i_region = 1 - np.asarray(slacks.placement_ok, dtype=int)
    relay_margin = np.minimum(slacks.relay_power_low, slacks.relay_power_high)
    i_power = indicator_violation(relay_margin)
    p_qos = pen * i_qos
    p_region = pen * i_region
    p_power = pen * i_power
    total = evaluation.sum_rate - (p_qos + p_region + p_power)
    if np.ndim(total) == 0:
        return RewardBreakdown(float(evaluation.sum_rate), float(p_qos), float(p_region),
                               float(p_power), float(total))
    return RewardBreakdown(evaluation.sum_rate, p_qos, p_region, p_power, total)

"""SINRs and achievable rates of the full-duplex C-NOMA downlink.

All functions broadcast over leading batch axes; beamformers and BS channels
carry the antenna index on the last axis.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, SystemConfig
from .problem import ConstraintSlacks, compute_slacks


def _gain(h, w):
    """``|h^H w|^2`` along the last axis."""
    return np.abs(np.sum(np.conj(h) * w, axis=-1)) ** 2


def sinr_decode_f_at_n(h_n, w_f, w_n, p_n, h_si, sigma2):
    """SINR for decoding user F's message at user N (first SIC stage)."""
    return _gain(h_n, w_f) / (_gain(h_n, w_n) + p_n * np.abs(h_si) ** 2 + sigma2)


def sinr_own_at_n(h_n, w_n, p_n, h_si, sigma2):
    """SINR of user N's own message once F's message has been cancelled."""
    return _gain(h_n, w_n) / (p_n * np.abs(h_si) ** 2 + sigma2)


def sinr_mrc_at_f(h_f, w_f, w_n, p_n, h_d, sigma2):
    """MRC-combined SINR at user F: BS branch plus the D2D relay branch."""
    return _gain(h_f, w_f) / (_gain(h_f, w_n) + sigma2) + p_n * np.abs(h_d) ** 2 / sigma2


def rate(sinr):
    """Spectral efficiency ``log2(1 + sinr)`` in bits/s/Hz."""
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ValueError("SINR must be non-negative")
    out = np.log2(1.0 + sinr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class CandidateSolution:
    """Decision variables of the sum-rate problem.

    Fields may carry a leading batch axis; positions end in a length-2 axis.
    """

    w_f: np.ndarray
    w_n: np.ndarray
    p_n: np.ndarray | float
    t_d: np.ndarray
    r_n: np.ndarray
    r_f: np.ndarray

    @staticmethod
    def dim(n_antennas: int) -> int:
        return 4 * n_antennas + 7

    def to_vector(self) -> np.ndarray:
        """Real layout ``[Re w_F, Im w_F, Re w_N, Im w_N, P_N, t_d, r_N, r_F]``."""
        p_n = np.asarray(self.p_n, dtype=float)[..., None]
        return np.concatenate([
            self.w_f.real, self.w_f.imag, self.w_n.real, self.w_n.imag,
            p_n, self.t_d, self.r_n, self.r_f,
        ], axis=-1)

    @classmethod
    def from_vector(cls, x, n_antennas: int) -> "CandidateSolution":
        x = np.asarray(x, dtype=float)
        n = n_antennas
        if x.shape[-1] != cls.dim(n):
            raise ValueError(f"expected last axis {cls.dim(n)}, got {x.shape[-1]}")
        p_n = x[..., 4 * n]
        return cls(
            w_f=x[..., 0:n] + 1j * x[..., n:2 * n],
            w_n=x[..., 2 * n:3 * n] + 1j * x[..., 3 * n:4 * n],
            p_n=float(p_n) if p_n.ndim == 0 else p_n,
            t_d=x[..., 4 * n + 1:4 * n + 3],
            r_n=x[..., 4 * n + 3:4 * n + 5],
            r_f=x[..., 4 * n + 5:4 * n + 7],
        )


@dataclass(frozen=True)
class LinkEvaluation:
    sinr_nf: np.ndarray | float
    sinr_nn: np.ndarray | float
    sinr_mrc: np.ndarray | float
    r_nf: np.ndarray | float
    r_nn: np.ndarray | float
    r_mrc: np.ndarray | float
    r_ff: np.ndarray | float
    sum_rate: np.ndarray | float
    slacks: ConstraintSlacks | None = None
    feasible: np.ndarray | bool | None = None


def evaluate_links(channels: ChannelSet, sol: CandidateSolution, config: SystemConfig,
                   enforce_separation: bool = True) -> LinkEvaluation:
    """Compute every SINR, rate and constraint margin for one candidate.

    A negative relay power is not physical; rates use ``max(P_N, 0)`` while the
    slacks still see the proposed value.
    """
    if np.shape(sol.w_f)[-1] != np.shape(channels.h_n)[-1]:
        raise ValueError("beamformer length does not match the BS channel length")
    p_n = np.maximum(sol.p_n, 0.0)
    s2 = config.sigma2
    sinr_nf = sinr_decode_f_at_n(channels.h_n, sol.w_f, sol.w_n, p_n, channels.h_si, s2)
    sinr_nn = sinr_own_at_n(channels.h_n, sol.w_n, p_n, channels.h_si, s2)
    sinr_mrc = sinr_mrc_at_f(channels.h_f, sol.w_f, sol.w_n, p_n, channels.h_d, s2)
    r_nf, r_nn, r_mrc = rate(sinr_nf), rate(sinr_nn), rate(sinr_mrc)
    r_ff = np.minimum(r_mrc, r_nf)
    r_ff = float(r_ff) if np.ndim(r_ff) == 0 else r_ff
    evaluation = LinkEvaluation(
        sinr_nf=sinr_nf, sinr_nn=sinr_nn, sinr_mrc=sinr_mrc,
        r_nf=r_nf, r_nn=r_nn, r_mrc=r_mrc, r_ff=r_ff,
        sum_rate=r_nn + r_ff,
    )
    slacks = compute_slacks(evaluation, sol, config, enforce_separation)
    return dataclasses.replace(evaluation, slacks=slacks, feasible=slacks.feasible)

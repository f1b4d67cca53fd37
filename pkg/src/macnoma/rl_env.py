"""Episodic environment wrapping the sum-rate problem for a continuous-action agent.

Raw actions live in ``[-1, 1]^K`` with ``K = 4N + 7``: real and imaginary
parts of ``w_F`` then ``w_N``, the relay power, and the three MA positions
``t_d, r_N, r_F``. Each episode freezes one scenario realization, so only the
MA positions proposed by the agent change the channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet, ScenarioRealization, SystemConfig, channels_at, sample_scenario
from .link_rates import CandidateSolution, LinkEvaluation, evaluate_links
from .problem import RewardBreakdown, normalize_or_default, reward

# Power and position decode ranges overshoot the feasible box by this fraction
# of its width on each side, so the placement and relay-power penalties can fire.
OVERSHOOT = 0.25


def action_dim(config: SystemConfig) -> int:
    return CandidateSolution.dim(config.n_bs_antennas)


def state_dim(config: SystemConfig) -> int:
    return action_dim(config) + 3 + 2 * (2 * config.n_bs_antennas + 1)


@dataclass(frozen=True)
class EnvState:
    """Observation after a step, kept in physical units.

    ``channels`` holds ``[Re h_N, Im h_N, Re h_F, Im h_F, Re h_d, Im h_d]``
    measured at the MA positions of the previous action.
    """

    prev_action: np.ndarray
    prev_power_wf: float
    prev_power_wn: float
    prev_p_n: float
    channels: np.ndarray

    def to_vector(self, config: SystemConfig) -> np.ndarray:
        """Network input: powers over their budgets, channels over their RMS gain."""
        n = config.n_bs_antennas
        scale = np.concatenate([
            np.full(2 * n, np.sqrt(config.mean_gain("bn"))),
            np.full(2 * n, np.sqrt(config.mean_gain("bf"))),
            np.full(2, np.sqrt(config.mean_gain("nf"))),
        ])
        return np.concatenate([
            self.prev_action,
            [self.prev_power_wf / config.p_t, self.prev_power_wn / config.p_t,
             self.prev_p_n / config.p_nf],
            self.channels / scale,
        ])


def _flatten_channels(ch: ChannelSet) -> np.ndarray:
    h_d = np.atleast_1d(ch.h_d)
    return np.concatenate([ch.h_n.real, ch.h_n.imag, ch.h_f.real, ch.h_f.imag, h_d.real, h_d.imag])


def decode_action(raw, config: SystemConfig) -> CandidateSolution:
    """Map a raw action in ``[-1, 1]^K`` affinely onto physical units."""
    raw = np.clip(np.asarray(raw, dtype=float), -1.0, 1.0)
    n = config.n_bs_antennas
    if raw.shape[-1] != action_dim(config):
        raise ValueError(f"expected action length {action_dim(config)}, got {raw.shape[-1]}")
    half = 0.5 + OVERSHOOT
    x = np.empty_like(raw)
    x[..., :4 * n] = raw[..., :4 * n] * np.sqrt(config.p_t)
    x[..., 4 * n] = config.p_nf * (0.5 + half * raw[..., 4 * n])
    x[..., 4 * n + 1:] = config.region_origin + config.region_side * (0.5 + half * raw[..., 4 * n + 1:])
    return CandidateSolution.from_vector(x, n)


def encode_solution(sol: CandidateSolution, config: SystemConfig) -> np.ndarray:
    """Inverse of :func:`decode_action` (no clipping)."""
    n = config.n_bs_antennas
    x = sol.to_vector()
    half = 0.5 + OVERSHOOT
    raw = np.empty_like(x)
    raw[..., :4 * n] = x[..., :4 * n] / np.sqrt(config.p_t)
    raw[..., 4 * n] = (x[..., 4 * n] / config.p_nf - 0.5) / half
    raw[..., 4 * n + 1:] = ((x[..., 4 * n + 1:] - config.region_origin) / config.region_side - 0.5) / half
    return raw


@dataclass(frozen=True)
class StepInfo:
    solution: CandidateSolution
    channels: ChannelSet
    evaluation: LinkEvaluation
    reward: RewardBreakdown


def evaluate_action(raw, scenario: ScenarioRealization, config: SystemConfig) -> StepInfo:
    """Decode, normalize the beamformers to ``P_T``, rebuild channels, and score."""
    sol = decode_action(raw, config)
    w_f, w_n = normalize_or_default(sol.w_f, sol.w_n, config.p_t)
    sol = CandidateSolution(w_f, w_n, sol.p_n, sol.t_d, sol.r_n, sol.r_f)
    ch = channels_at(scenario, sol.t_d, sol.r_n, sol.r_f, config)
    ev = evaluate_links(ch, sol, config)
    return StepInfo(sol, ch, ev, reward(ev, ev.slacks, config.penalty))


def _state_from(raw, sol: CandidateSolution, ch: ChannelSet) -> EnvState:
    return EnvState(
        prev_action=np.clip(np.asarray(raw, dtype=float), -1.0, 1.0),
        prev_power_wf=float(np.sum(np.abs(sol.w_f) ** 2)),
        prev_power_wn=float(np.sum(np.abs(sol.w_n) ** 2)),
        prev_p_n=float(sol.p_n),
        channels=_flatten_channels(ch),
    )


def initial_state(scenario: ScenarioRealization, config: SystemConfig) -> EnvState:
    """State as if the all-zero action had just been taken (every MA at the region center)."""
    raw = np.zeros(action_dim(config))
    sol = decode_action(raw, config)
    w_f, w_n = normalize_or_default(sol.w_f, sol.w_n, config.p_t)
    sol = CandidateSolution(w_f, w_n, sol.p_n, sol.t_d, sol.r_n, sol.r_f)
    ch = channels_at(scenario, sol.t_d, sol.r_n, sol.r_f, config)
    return _state_from(raw, sol, ch)


def reset(config: SystemConfig, seed=None) -> tuple[EnvState, ScenarioRealization]:
    """Draw a fresh scenario and return its initial state together with it."""
    scenario = sample_scenario(config, seed)
    return initial_state(scenario, config), scenario


def step(state: EnvState, raw_action, scenario: ScenarioRealization,
         config: SystemConfig) -> tuple[EnvState, float]:
    """Pure transition; ``state`` is accepted for interface symmetry, the
    successor depends only on the action and the frozen scenario."""
    info = evaluate_action(raw_action, scenario, config)
    return _state_from(raw_action, info.solution, info.channels), float(info.reward.total)


class MaCnomaEnv:
    """Stateful wrapper used by the training loop."""

    def __init__(self, config: SystemConfig):
        self.config = config
        self.scenario: ScenarioRealization | None = None
        self.state: EnvState | None = None

    @property
    def state_dim(self) -> int:
        return state_dim(self.config)

    @property
    def action_dim(self) -> int:
        return action_dim(self.config)

    def reset(self, seed=None, scenario: ScenarioRealization | None = None) -> np.ndarray:
        if scenario is None:
            self.state, self.scenario = reset(self.config, seed)
        else:
            self.scenario = scenario
            self.state = initial_state(scenario, self.config)
        return self.state.to_vector(self.config)

    def step(self, raw_action) -> tuple[np.ndarray, float, StepInfo]:
        if self.scenario is None:
            raise RuntimeError("call reset() before step()")
        info = evaluate_action(raw_action, self.scenario, self.config)
        self.state = _state_from(raw_action, info.solution, info.channels)
        return self.state.to_vector(self.config), float(info.reward.total), info

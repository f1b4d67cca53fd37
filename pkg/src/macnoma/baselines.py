"""Reference optimizer and the reduced comparison schemes.

The reference optimizer is a budgeted derivative-free search over the
physical decision vector (layout of :meth:`CandidateSolution.to_vector`):

1. uniform random sampling of the box (``n_random`` points),
2. the best ``n_starts`` samples seed a coordinate pattern search with
   extrapolation moves and step halving, pruned by successive halving
   (the better half of the surviving starts keeps refining).

Candidates are ranked by a merit that puts every feasible point above every
infeasible one and orders infeasible points by total constraint violation.
The evaluation order never depends on the budget, so a larger budget only
extends the same search.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .channel import ScenarioRealization, SystemConfig, channels_at, dbm_to_watts, sample_scenario
from .link_rates import CandidateSolution, LinkEvaluation, evaluate_links
from .problem import normalize_or_default
from .seeding import seed_sequence, stream

INFEASIBLE_OFFSET = 1000.0
# Successive-halving schedule: (surviving starts, pattern iterations per stage).
# The last stage runs until the budget or convergence stops it.
HALVING_SCHEDULE = ((64, 3), (16, 6), (4, 20), (1, None))
MIN_STEP_FRACTION = 1e-4


class Scheme(str, enum.Enum):
    MA_CNOMA = "MA-CNOMA"
    MA_NOMA = "MA-NOMA"
    F_CNOMA = "F-CNOMA"
    F_NOMA = "F-NOMA"

    @property
    def cooperation_enabled(self) -> bool:
        return self in (Scheme.MA_CNOMA, Scheme.F_CNOMA)

    @property
    def ma_enabled(self) -> bool:
        return self in (Scheme.MA_CNOMA, Scheme.MA_NOMA)

    @property
    def enforce_separation(self) -> bool:
        # Only an active, movable relay MA can collide with the receive MA;
        # fixed hardware is assumed to be built with the spacing.
        return self.cooperation_enabled and self.ma_enabled


def apply_scheme(sol: CandidateSolution, scheme: Scheme, config: SystemConfig) -> CandidateSolution:
    """Force ``P_N = 0`` without cooperation and pin MAs to the region center without mobility."""
    scheme = Scheme(scheme)
    p_n = sol.p_n
    t_d, r_n, r_f = sol.t_d, sol.r_n, sol.r_f
    if not scheme.cooperation_enabled:
        p_n = np.zeros_like(np.asarray(sol.p_n, dtype=float))
        p_n = float(p_n) if p_n.ndim == 0 else p_n
    if not scheme.ma_enabled:
        center = config.region_center
        t_d = np.broadcast_to(center, np.shape(t_d)).copy()
        r_n = np.broadcast_to(center, np.shape(r_n)).copy()
        r_f = np.broadcast_to(center, np.shape(r_f)).copy()
    return CandidateSolution(sol.w_f, sol.w_n, p_n, t_d, r_n, r_f)


@dataclass(frozen=True)
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray
    free: np.ndarray

    @classmethod
    def for_scheme(cls, config: SystemConfig, scheme: Scheme) -> "SearchSpace":
        n = config.n_bs_antennas
        dim = CandidateSolution.dim(n)
        amp = np.sqrt(config.p_t)
        lo = config.region_origin
        lower = np.concatenate([np.full(4 * n, -amp), [0.0], np.full(6, lo)])
        upper = np.concatenate([np.full(4 * n, amp), [config.p_nf], np.full(6, lo + config.region_side)])
        free = np.ones(dim, dtype=bool)
        center = config.region_center[0]
        if not scheme.cooperation_enabled:
            # No relay: P_N = 0 and the relay MA position is irrelevant.
            free[4 * n:4 * n + 3] = False
            lower[4 * n] = upper[4 * n] = 0.0
            lower[4 * n + 1:4 * n + 3] = upper[4 * n + 1:4 * n + 3] = center
        if not scheme.ma_enabled:
            free[4 * n + 1:] = False
            lower[4 * n + 1:] = upper[4 * n + 1:] = center
        return cls(lower, upper, free)


@dataclass(frozen=True)
class OptimizerReport:
    best_solution: CandidateSolution
    best_objective: float
    feasible: bool
    evaluations_used: int
    evaluation: LinkEvaluation


def evaluate_candidates(x, scenario: ScenarioRealization, config: SystemConfig, scheme: Scheme):
    """Score a batch of decision vectors; returns ``(merit, LinkEvaluation, solutions)``.

    Beamformers are normalized to ``P_T`` before evaluation.
    """
    sol = CandidateSolution.from_vector(np.atleast_2d(x), config.n_bs_antennas)
    w_f, w_n = normalize_or_default(sol.w_f, sol.w_n, config.p_t)
    sol = CandidateSolution(w_f, w_n, sol.p_n, sol.t_d, sol.r_n, sol.r_f)
    ch = channels_at(scenario, sol.t_d, sol.r_n, sol.r_f, config)
    ev = evaluate_links(ch, sol, config, enforce_separation=Scheme(scheme).enforce_separation)
    s = ev.slacks
    lam = config.wavelength
    violation = (
        np.maximum(0.0, -s.qos_n) + np.maximum(0.0, -s.qos_f) + np.maximum(0.0, -s.sic)
        + (np.maximum(0.0, -s.region_td) + np.maximum(0.0, -s.region_rn)
           + np.maximum(0.0, -s.region_rf) + np.maximum(0.0, -s.ma_separation)) / lam
        + (np.maximum(0.0, -s.relay_power_low) + np.maximum(0.0, -s.relay_power_high)) / config.p_nf
    )
    merit = np.where(ev.feasible, ev.sum_rate, -INFEASIBLE_OFFSET - violation)
    return merit, ev, sol


class _Evaluator:
    """Budget-truncating wrapper around :func:`evaluate_candidates`."""

    def __init__(self, scenario, config, scheme, budget):
        self.scenario, self.config, self.scheme = scenario, config, scheme
        self.budget = budget
        self.used = 0
        self.best_x = None
        self.best_merit = -np.inf

    @property
    def exhausted(self) -> bool:
        return self.used >= self.budget

    def __call__(self, x):
        """Evaluate as many rows as the budget allows; unevaluated rows score ``-inf``."""
        x = np.atleast_2d(x)
        n = min(len(x), self.budget - self.used)
        merit = np.full(len(x), -np.inf)
        if n > 0:
            merit[:n], _, _ = evaluate_candidates(x[:n], self.scenario, self.config, self.scheme)
            self.used += n
            k = int(np.argmax(merit[:n]))
            if merit[k] > self.best_merit:
                self.best_merit = float(merit[k])
                self.best_x = x[k].copy()
        return merit


def _pattern_iteration(evaluate: _Evaluator, space: SearchSpace, x, f, step, prev):
    """One exploratory sweep for every start in place; returns the row mask that moved."""
    idx = np.flatnonzero(space.free)
    n_starts, dim = x.shape
    k = len(idx)
    # +step and -step along every free coordinate.
    cand = np.repeat(x[:, None, :], 2 * k, axis=1)
    rows = np.arange(k)
    cand[:, rows, idx] += step[:, idx]
    cand[:, k + rows, idx] -= step[:, idx]
    cand = np.clip(cand, space.lower, space.upper)
    fc = evaluate(cand.reshape(-1, dim)).reshape(n_starts, 2 * k)
    # Combined move: every improving coordinate at once; extrapolation: repeat the last move.
    up, down = fc[:, :k], fc[:, k:]
    gain_up = up > f[:, None]
    gain_down = (down > f[:, None]) & ~(gain_up & (up >= down))
    delta = np.zeros_like(x)
    delta[:, idx] = np.where(gain_up & (up >= down), step[:, idx], 0.0)
    delta[:, idx] -= np.where(gain_down, step[:, idx], 0.0)
    combined = np.clip(x + delta, space.lower, space.upper)
    extrapolated = np.clip(x + (x - prev), space.lower, space.upper)
    extra = np.stack([combined, extrapolated], axis=1)
    fe = evaluate(extra.reshape(-1, dim)).reshape(n_starts, 2)
    all_f = np.concatenate([fc, fe], axis=1)
    all_x = np.concatenate([cand, extra], axis=1)
    best = np.argmax(all_f, axis=1)
    best_f = all_f[np.arange(n_starts), best]
    moved = best_f > f
    prev[:] = x
    x[moved] = all_x[np.flatnonzero(moved), best[moved]]
    f[moved] = best_f[moved]
    step[~moved] *= 0.5
    return moved


def reference_optimize(scenario: ScenarioRealization, config: SystemConfig, scheme: Scheme = Scheme.MA_CNOMA,
                       budget: int = 20_000, seed=0, n_starts: int = 64,
                       n_random: int = 4096) -> OptimizerReport:
    """Best feasible objective found within ``budget`` evaluations.

    When nothing feasible turns up, ``feasible`` is False and the least
    violating candidate is reported.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    scheme = Scheme(scheme)
    rng = np.random.default_rng(seed)
    space = SearchSpace.for_scheme(config, scheme)
    evaluate = _Evaluator(scenario, config, scheme, budget)

    samples = rng.uniform(space.lower, space.upper, size=(n_random, len(space.lower)))
    merit = evaluate(samples)
    n_seed = min(n_starts, n_random)
    order = np.argsort(-merit, kind="stable")[:n_seed]
    x = samples[order].copy()
    f = merit[order].copy()
    step = np.tile(0.25 * (space.upper - space.lower), (n_seed, 1))
    prev = x.copy()
    min_step = MIN_STEP_FRACTION * (space.upper - space.lower)

    for keep, iterations in HALVING_SCHEDULE:
        if evaluate.exhausted or not np.all(np.isfinite(f)):
            break
        keep = min(keep, len(f))
        survivors = np.argsort(-f, kind="stable")[:keep]
        x, f, step, prev = x[survivors], f[survivors], step[survivors], prev[survivors]
        it = 0
        while iterations is None or it < iterations:
            active = np.any(step[:, space.free] > min_step[space.free], axis=1)
            if not np.any(active) or evaluate.exhausted:
                break
            xa, fa, sa, pa = x[active], f[active], step[active], prev[active]
            _pattern_iteration(evaluate, space, xa, fa, sa, pa)
            x[active], f[active], step[active], prev[active] = xa, fa, sa, pa
            it += 1

    raw = CandidateSolution.from_vector(evaluate.best_x, config.n_bs_antennas)
    w_f, w_n = normalize_or_default(raw.w_f, raw.w_n, config.p_t)
    sol = CandidateSolution(w_f, w_n, raw.p_n, raw.t_d, raw.r_n, raw.r_f)
    ev = evaluate_links(channels_at(scenario, sol.t_d, sol.r_n, sol.r_f, config), sol, config,
                        enforce_separation=scheme.enforce_separation)
    return OptimizerReport(
        best_solution=sol,
        best_objective=float(ev.sum_rate),
        feasible=bool(ev.feasible),
        evaluations_used=evaluate.used,
        evaluation=ev,
    )


@dataclass(frozen=True)
class SweepRow:
    scheme: str
    sweep_variable: str
    value: float
    mean_rate: float
    stderr: float
    n_scenarios: int


SWEEP_VARIABLES = {"power": "bs_power_dbm", "region": "region_scale"}


def sweep_point_config(config: SystemConfig, kind: str, value: float) -> SystemConfig:
    """Config for one sweep point: BS power in dBm, or a multiplier on the region side.

    The scaled square keeps the nominal center, so fixed antennas see the
    same channels at every region size.
    """
    if kind == "power":
        return config.replace(p_t=float(dbm_to_watts(value)))
    if kind == "region":
        if value <= 0:
            raise ValueError(f"region scale must be > 0, got {value}")
        side = config.region_side * value
        return config.replace(region_side=side, region_origin=float(config.region_center[0] - side / 2.0))
    raise ValueError(f"sweep kind must be 'power' or 'region', got {kind!r}")


def scenario_objectives(config: SystemConfig, scheme: Scheme, kind: str, values, n_scenarios: int,
                        budget: int, seed: int) -> np.ndarray:
    """Reference objectives, shape ``(len(values), n_scenarios)``; infeasible counts as 0.

    Scenario ``i`` and its optimizer stream are shared by every scheme and
    sweep point (common random numbers).
    """
    out = np.zeros((len(values), n_scenarios))
    for i in range(n_scenarios):
        scenario = sample_scenario(config, stream(seed, "scenario", i))
        opt_seed = seed_sequence(seed, "optimizer", i)
        for j, value in enumerate(values):
            point = sweep_point_config(config, kind, value)
            report = reference_optimize(scenario, point, scheme, budget, opt_seed)
            out[j, i] = report.best_objective if report.feasible else 0.0
    return out


def evaluate_scheme_sweep(config: SystemConfig, scheme: Scheme, kind: str, values, n_scenarios: int,
                          budget: int = 20_000, seed: int = 0) -> list[SweepRow]:
    if n_scenarios < 1:
        raise ValueError("n_scenarios must be >= 1")
    scheme = Scheme(scheme)
    obj = scenario_objectives(config, scheme, kind, values, n_scenarios, budget, seed)
    rows = []
    for j, value in enumerate(values):
        stderr = float(obj[j].std(ddof=1) / np.sqrt(n_scenarios)) if n_scenarios > 1 else 0.0
        rows.append(SweepRow(scheme.value, SWEEP_VARIABLES[kind], float(value),
                             float(obj[j].mean()), stderr, n_scenarios))
    return rows


def write_sweep_csv(path, rows: list[SweepRow], provenance: str | None = None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if provenance:
            fh.write(f"# {provenance}\n")
        writer = csv.writer(fh)
        writer.writerow(["scheme", "sweep_variable", "value", "mean_rate", "stderr", "n_scenarios"])
        for r in rows:
            writer.writerow([r.scheme, r.sweep_variable, repr(r.value), f"{r.mean_rate:.10g}",
                             f"{r.stderr:.10g}", r.n_scenarios])

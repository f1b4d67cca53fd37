"""Command-line experiment driver: ``train``, ``sweep`` and ``accuracy``.

Experiments are described by an INI file. Every section and key is optional;
anything omitted takes the library default, and unknown sections or keys are
rejected. Example::

    [system]
    bs_power_dbm = 15
    region_side_wavelengths = 2

    [agent]
    episodes = 400

    [sweep]
    power_dbm = 11, 13, 15, 17, 18
    scenarios = 100

    [run]
    seed = 0
    out_dir = results

Every CSV starts with a ``#`` provenance line carrying the SHA-256 of the
resolved configuration and the master seed.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import Scheme, evaluate_scheme_sweep, reference_optimize, write_sweep_csv
from .channel import ConfigError, SystemConfig, db_to_linear, dbm_to_watts, sample_scenario
from .ddpg import AgentConfig, rollout, train
from .neural import load_checkpoint, save_checkpoint
from .rl_env import MaCnomaEnv
from .seeding import seed_sequence, stream

log = logging.getLogger("macnoma")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2

# File key -> (SystemConfig field, converter from file units).
_SYSTEM_KEYS = {
    "n_bs_antennas": ("n_bs_antennas", int),
    "wavelength": ("wavelength", float),
    "l_b": ("l_b", int),
    "l_a": ("l_a", int),
    "l_r": ("l_r", int),
    "alpha": ("alpha", float),
    "noise_dbm": ("sigma2", lambda v: float(dbm_to_watts(float(v)))),
    "bs_power_dbm": ("p_t", lambda v: float(dbm_to_watts(float(v)))),
    "relay_power_dbm": ("p_nf", lambda v: float(dbm_to_watts(float(v)))),
    "r_th": ("r_th", float),
    "g0_db": ("g0", lambda v: float(db_to_linear(float(v)))),
    "si_variance_db": ("omega_si2", lambda v: float(db_to_linear(float(v)))),
    "d_bn": ("d_bn", float),
    "d_bf": ("d_bf", float),
    "d_nf": ("d_nf", float),
    "penalty": ("penalty", float),
}
_AGENT_INT = {"buffer_capacity", "batch_size", "episodes", "steps"}
_AGENT_FLOAT = {"discount", "tau", "noise_stddev_initial", "noise_decay", "noise_floor",
                "actor_lr", "critic_lr", "actor_final_scale", "reward_scale"}
_AGENT_TUPLE = {"hidden": int, "betas": float}

DEFAULT_POWERS_DBM = (11.0, 13.0, 15.0, 17.0, 18.0)
DEFAULT_REGION_SCALES = (0.25, 0.5, 0.75, 1.0, 1.25, 1.5)


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    sweep_powers_dbm: tuple = DEFAULT_POWERS_DBM
    sweep_region_scales: tuple = DEFAULT_REGION_SCALES
    sweep_scenarios: int = 100
    sweep_budget: int = 20_000
    accuracy_powers_dbm: tuple = (15.0,)
    accuracy_scenarios: int = 20
    accuracy_budget: int = 20_000
    seed: int = 0
    out_dir: str = "results"

    def canonical(self) -> dict:
        """Everything that influences results; the output directory is excluded."""
        d = dataclasses.asdict(self)
        d.pop("out_dir")
        return d

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, default=repr)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def provenance(self) -> str:
        return f"config_sha256={self.digest()} master_seed={self.seed}"


def _floats(text: str) -> tuple:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(t) for t in items)


def _parse(section: str, key: str, value: str, convert):
    try:
        return convert(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key} = {value!r}: {exc}") from None


def parse_experiment_config(text: str) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from INI text; raises :class:`ConfigError`."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file: {exc}") from None

    known = {"system", "agent", "sweep", "accuracy", "run"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")

    def section(name: str, allowed) -> dict:
        if not parser.has_section(name):
            return {}
        items = dict(parser.items(name))
        bad = set(items) - set(allowed)
        if bad:
            raise ConfigError(f"[{name}] unknown key(s): {', '.join(sorted(bad))}")
        return items

    sys_items = section("system", [*_SYSTEM_KEYS, "region_side_wavelengths"])
    sys_kwargs = {}
    for key, value in sys_items.items():
        if key == "region_side_wavelengths":
            continue
        name, convert = _SYSTEM_KEYS[key]
        sys_kwargs[name] = _parse("system", key, value, convert)
    wavelength = sys_kwargs.get("wavelength", SystemConfig.wavelength)
    scale = _parse("system", "region_side_wavelengths", sys_items.get("region_side_wavelengths", "2"), float)
    sys_kwargs["region_side"] = scale * wavelength

    agent_items = section("agent", [*_AGENT_INT, *_AGENT_FLOAT, *_AGENT_TUPLE])
    agent_kwargs = {}
    for key, value in agent_items.items():
        if key in _AGENT_INT:
            agent_kwargs[key] = _parse("agent", key, value, int)
        elif key in _AGENT_FLOAT:
            agent_kwargs[key] = _parse("agent", key, value, float)
        else:
            conv = _AGENT_TUPLE[key]
            agent_kwargs[key] = _parse("agent", key, value, lambda v: tuple(conv(x) for x in _floats(v)))

    sweep = section("sweep", ["power_dbm", "region_scale", "scenarios", "budget"])
    acc = section("accuracy", ["power_dbm", "scenarios", "budget"])
    run = section("run", ["seed", "out_dir"])

    try:
        system = SystemConfig(**sys_kwargs)
    except ConfigError as exc:
        raise ConfigError(f"[system] {exc}") from None
    try:
        agent = AgentConfig(**agent_kwargs)
    except ValueError as exc:
        raise ConfigError(f"[agent] {exc}") from None

    out = ExperimentConfig(
        system=system,
        agent=agent,
        sweep_powers_dbm=_parse("sweep", "power_dbm", sweep["power_dbm"], _floats)
        if "power_dbm" in sweep else DEFAULT_POWERS_DBM,
        sweep_region_scales=_parse("sweep", "region_scale", sweep["region_scale"], _floats)
        if "region_scale" in sweep else DEFAULT_REGION_SCALES,
        sweep_scenarios=_parse("sweep", "scenarios", sweep.get("scenarios", "100"), int),
        sweep_budget=_parse("sweep", "budget", sweep.get("budget", "20000"), int),
        accuracy_powers_dbm=_parse("accuracy", "power_dbm", acc["power_dbm"], _floats)
        if "power_dbm" in acc else (15.0,),
        accuracy_scenarios=_parse("accuracy", "scenarios", acc.get("scenarios", "20"), int),
        accuracy_budget=_parse("accuracy", "budget", acc.get("budget", "20000"), int),
        seed=_parse("run", "seed", run.get("seed", "0"), int),
        out_dir=run.get("out_dir", "results"),
    )
    _validate(out)
    return out


def _validate(cfg: ExperimentConfig):
    for name in ("sweep_scenarios", "sweep_budget", "accuracy_scenarios", "accuracy_budget"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be >= 1, got {getattr(cfg, name)}")
    if any(s <= 0 for s in cfg.sweep_region_scales):
        raise ConfigError("sweep region_scale values must be > 0")
    if cfg.seed < 0:
        raise ConfigError(f"seed must be >= 0, got {cfg.seed}")


def load_experiment_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_experiment_config(text)


def _write_rows(path: Path, provenance: str, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# {provenance}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return f"{float(x):.10g}"


def cmd_train(cfg: ExperimentConfig) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    env = MaCnomaEnv(cfg.system)

    def progress(episode, mean_reward):
        if episode % 10 == 0 or episode == cfg.agent.episodes - 1:
            log.info("episode %d mean reward %.4f", episode, mean_reward)

    result = train(env, cfg.agent, cfg.seed, progress)
    curve = result.learning_curve
    _write_rows(out / "learning_curve.csv", cfg.provenance(), ["episode", "mean_reward"],
                [[k, _fmt(r)] for k, r in enumerate(curve)])
    agent = result.agent
    save_checkpoint(out / "checkpoint.npz",
                    {"actor": agent.actor, "critic": agent.critic,
                     "target_actor": agent.target_actor, "target_critic": agent.target_critic},
                    {"config_sha256": cfg.digest(), "master_seed": cfg.seed,
                     "system": dataclasses.asdict(cfg.system)})
    window = max(1, len(curve) // 10)
    print(f"final-window mean reward: {curve[-window:].mean():.4f} "
          f"(first window {curve[:window].mean():.4f})")
    return EXIT_OK


def power_ordering_violations(table: dict, values) -> list[str]:
    """Ordering and monotonicity checks for a power sweep; ``table[scheme][j]`` is a mean rate."""
    issues = []
    order = [(Scheme.MA_CNOMA, Scheme.MA_NOMA), (Scheme.MA_NOMA, Scheme.F_NOMA),
             (Scheme.MA_CNOMA, Scheme.F_CNOMA), (Scheme.F_CNOMA, Scheme.F_NOMA)]
    for j, v in enumerate(values):
        for hi, lo in order:
            if table[hi][j] < table[lo][j]:
                issues.append(f"{hi.value} < {lo.value} at {v:g}")
    for s, means in table.items():
        for j in range(1, len(values)):
            if means[j] < means[j - 1]:
                issues.append(f"{s.value} decreases from {values[j - 1]:g} to {values[j]:g}")
    return issues


def cmd_sweep(cfg: ExperimentConfig, kind: str) -> int:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    values = cfg.sweep_powers_dbm if kind == "power" else cfg.sweep_region_scales
    rows, table = [], {}
    for scheme in Scheme:
        log.info("sweeping %s over %s", scheme.value, kind)
        r = evaluate_scheme_sweep(cfg.system, scheme, kind, values, cfg.sweep_scenarios,
                                  cfg.sweep_budget, cfg.seed)
        rows.extend(r)
        table[scheme] = [row.mean_rate for row in r]
    write_sweep_csv(out / f"sweep_{kind}.csv", rows, cfg.provenance())
    for row in rows:
        print(f"{row.scheme:9s} {row.sweep_variable}={row.value:g} mean={row.mean_rate:.4f} "
              f"stderr={row.stderr:.4f}")
    if kind == "power":
        issues = power_ordering_violations(table, values)
        print(f"ordering violations: {len(issues)}")
        for issue in issues:
            print(f"  {issue}")
    return EXIT_OK


@dataclass(frozen=True)
class AccuracyRow:
    bs_power_dbm: float
    ddpg_mean: float
    reference_mean: float
    n_scenarios: int

    @property
    def ratio(self) -> float:
        return self.ddpg_mean / self.reference_mean if self.reference_mean > 0 else float("nan")


def accuracy_table(actor, system: SystemConfig, powers_dbm, n_scenarios: int, steps: int,
                   budget: int, seed: int) -> list[AccuracyRow]:
    """Deterministic-policy rollouts against the reference optimizer on held-out scenarios.

    Both sides score an infeasible outcome as 0.
    """
    rows = []
    for p in powers_dbm:
        point = system.replace(p_t=float(dbm_to_watts(p)))
        env = MaCnomaEnv(point)
        ddpg, ref = np.zeros(n_scenarios), np.zeros(n_scenarios)
        for i in range(n_scenarios):
            scenario = sample_scenario(point, stream(seed, "heldout", i))
            ddpg[i], _ = rollout(actor, env, scenario, steps)
            report = reference_optimize(scenario, point, Scheme.MA_CNOMA, budget,
                                        seed_sequence(seed, "optimizer", i))
            ref[i] = report.best_objective if report.feasible else 0.0
        rows.append(AccuracyRow(float(p), float(ddpg.mean()), float(ref.mean()), n_scenarios))
    return rows


def cmd_accuracy(cfg: ExperimentConfig, checkpoint) -> int:
    path = Path(checkpoint)
    if not path.is_file():
        print(f"error: checkpoint {path} not found", file=sys.stderr)
        return EXIT_FAILURE
    try:
        nets, _ = load_checkpoint(path)
        actor = nets["actor"]
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: cannot load checkpoint {path}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    env = MaCnomaEnv(cfg.system)
    if actor.spec.input_dim != env.state_dim or actor.spec.output_dim != env.action_dim:
        print("error: checkpoint network shape does not match the configured system", file=sys.stderr)
        return EXIT_FAILURE
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = accuracy_table(actor, cfg.system, cfg.accuracy_powers_dbm, cfg.accuracy_scenarios,
                          cfg.agent.steps, cfg.accuracy_budget, cfg.seed)
    total_ddpg = sum(r.ddpg_mean for r in rows)
    total_ref = sum(r.reference_mean for r in rows)
    aggregate = total_ddpg / total_ref if total_ref > 0 else float("nan")
    body = [[_fmt(r.bs_power_dbm), _fmt(r.ddpg_mean), _fmt(r.reference_mean), _fmt(r.ratio), r.n_scenarios]
            for r in rows]
    body.append(["all", _fmt(total_ddpg / len(rows)), _fmt(total_ref / len(rows)), _fmt(aggregate),
                 sum(r.n_scenarios for r in rows)])
    _write_rows(out / "accuracy.csv", cfg.provenance(),
                ["bs_power_dbm", "ddpg_mean_rate", "reference_mean_rate", "ratio", "n_scenarios"], body)
    for r in rows:
        print(f"P_T={r.bs_power_dbm:g} dBm ddpg={r.ddpg_mean:.4f} reference={r.reference_mean:.4f} "
              f"ratio={r.ratio:.4f}")
    print(f"aggregate ratio: {aggregate:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="macnoma", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="INI experiment file")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--out-dir", help="override the output directory")
        p.add_argument("--scenarios", type=int, help="override the scenario count")

    common(sub.add_parser("train", help="train the DDPG agent; writes learning_curve.csv and checkpoint.npz"))
    sp = sub.add_parser("sweep", help="reference-optimized scheme comparison; writes sweep_<kind>.csv")
    common(sp)
    sp.add_argument("--kind", choices=("power", "region"), required=True)
    ap = sub.add_parser("accuracy", help="DDPG vs reference on held-out scenarios; writes accuracy.csv")
    common(ap)
    ap.add_argument("--checkpoint", required=True)
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.out_dir is not None:
        changes["out_dir"] = args.out_dir
    if args.scenarios is not None:
        changes["sweep_scenarios"] = args.scenarios
        changes["accuracy_scenarios"] = args.scenarios
    cfg = dataclasses.replace(cfg, **changes)
    _validate(cfg)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_experiment_config(args.config), args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "train":
        return cmd_train(cfg)
    if args.command == "sweep":
        return cmd_sweep(cfg, args.kind)
    return cmd_accuracy(cfg, args.checkpoint)


if __name__ == "__main__":
    sys.exit(main())

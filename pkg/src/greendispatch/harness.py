"""Experiment protocol: agent/scenario comparisons, ablations and
one-parameter sweeps, with deterministic report files.

Each (scenario preset, seed) cell synthesizes a training series and a
held-out evaluation series, trains the learning agents on the former and
evaluates every agent greedily on the latter. Episode logs are archived
next to the reports so every metric cell can be recomputed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import metrics
from .agents.baselines import HeuristicAgent, TabularPolicy, rule_based_act, tabular_q_train
from .agents.observation import ObservationBuilder
from .agents.ppo import (
    AblationFlags,
    PPOConfig,
    TrainResult,
    act,
    fit_forecaster,
    train,
)
from .nn.network import ConvSpec, NetworkConfig
from .sim.env import DispatchEnv
from .sim.io import save_episode_jsonl, scenario_from_series
from .sim.types import Action, EpisodeLog, Scenario
from .traces.synth import synthesize

TRAIN_SEED_BASE = 10_000
EVAL_SEED_BASE = 20_000

AGENT_NAMES = ("rule-based", "heuristic", "tabular-q", "ppo")
SWEEP_AXES = ("recurrent_units", "conv_filters", "minibatch_size", "learning_rate")

CURVE_HEADER = ("update_index", "episodes", "mean_cumulative_reward", "mean_cost", "sla_rate")

SINGLE_FLAG_ABLATIONS = (
    AblationFlags(no_reward_tuning=True),
    AblationFlags(no_exploration=True),
    AblationFlags(no_energy_prediction=True),
)


@dataclass(frozen=True)
class ExperimentPlan:
    name: str = "default"
    scenario_presets: tuple[str, ...] = ("high", "low", "mixed")
    agents: tuple[str, ...] = AGENT_NAMES
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    days: int = 7
    dt_hours: float = 0.25
    ppo: PPOConfig = field(default_factory=PPOConfig)
    ablations: tuple[AblationFlags, ...] = SINGLE_FLAG_ABLATIONS
    sweep_axis: str | None = None
    sweep_values: tuple[float, ...] = ()
    q_episodes: int = 300

    def __post_init__(self) -> None:
        if not self.scenario_presets or not self.agents or not self.seeds:
            raise ValueError("plan needs at least one scenario, agent and seed")
        for agent in self.agents:
            if agent not in AGENT_NAMES:
                raise ValueError(f"unknown agent {agent!r}")
        if self.sweep_axis is not None and self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.sweep_axis!r}")


def build_cell_scenarios(plan: ExperimentPlan, preset: str, seed: int) -> tuple[Scenario, Scenario]:
    """Training and held-out evaluation scenarios for one cell."""
    train_series = synthesize(preset, plan.days, TRAIN_SEED_BASE + seed, plan.dt_hours)
    eval_series = synthesize(preset, plan.days, EVAL_SEED_BASE + seed, plan.dt_hours)
    return (
        scenario_from_series(train_series, label=preset),
        scenario_from_series(eval_series, label=preset),
    )


_TRAIN_CACHE: dict[tuple, TrainResult] = {}


def train_ppo_cached(
    train_scenario: Scenario,
    ppo_config: PPOConfig,
    flags: AblationFlags,
    seed: int,
    net_config: NetworkConfig | None = None,
) -> TrainResult:
    key = (train_scenario, ppo_config, flags, seed, net_config)
    if key not in _TRAIN_CACHE:
        _TRAIN_CACHE[key] = train(
            [train_scenario], ppo_config, flags=flags, seed=seed, net_config=net_config
        )
    return _TRAIN_CACHE[key]


def _greedy_episode_with_policy(scenario: Scenario, policy, seed: int) -> EpisodeLog:
    env = DispatchEnv(scenario, seed=seed)
    while not env.done:
        env.step(policy(env.state))
    return env.log


def evaluate_agent(
    agent: str,
    plan: ExperimentPlan,
    train_scenario: Scenario,
    eval_scenario: Scenario,
    seed: int,
    flags: AblationFlags = AblationFlags(),
    net_config: NetworkConfig | None = None,
) -> tuple[EpisodeLog, TrainResult | None]:
    """Train (if needed) and run one greedy evaluation episode."""
    if agent == "rule-based":
        log = _greedy_episode_with_policy(
            eval_scenario, lambda s: rule_based_act(s, eval_scenario), seed
        )
        return log, None
    if agent == "heuristic":
        forecaster = fit_forecaster(train_scenario)
        helper = HeuristicAgent(eval_scenario, forecaster)
        log = _greedy_episode_with_policy(eval_scenario, helper.act, seed)
        return log, None
    if agent == "tabular-q":
        policy: TabularPolicy = tabular_q_train(
            [train_scenario], episodes=plan.q_episodes, seed=seed
        )
        log = _greedy_episode_with_policy(
            eval_scenario, lambda s: policy.act(s, eval_scenario), seed
        )
        return log, None
    if agent == "ppo":
        result = train_ppo_cached(train_scenario, plan.ppo, flags, seed, net_config)
        forecaster = result.forecasters[train_scenario.label]
        builder = ObservationBuilder(
            eval_scenario,
            forecaster,
            zero_forecast=flags.no_energy_prediction,
            window=plan.ppo.window,
            horizon=plan.ppo.forecast_horizon,
        )

        def policy_fn(state):
            action, _, _ = act(result.params, result.net_config, builder.build(state), mode="greedy")
            return Action(action)

        log = _greedy_episode_with_policy(eval_scenario, policy_fn, seed)
        return log, result
    raise ValueError(f"unknown agent {agent!r}")


@dataclass
class CellResult:
    agent: str
    scenario: str
    seed: int
    report: metrics.MetricReport


@dataclass
class Table:
    """A rectangular report table: fixed header plus string rows."""

    name: str
    header: tuple[str, ...]
    rows: list[list[str]]


_METRIC_HIGHER_BETTER = {
    "energy_cost": False,
    "sla_violations": False,
    "sla_rate": False,
    "energy_efficiency": True,
    "cumulative_reward": True,
    "carbon_emissions_kg": False,
}


def _improvement_pct(value: float, base: float, higher_better: bool) -> float:
    if base == 0.0:
        return 0.0
    if higher_better:
        return (value - base) / abs(base) * 100.0
    return (base - value) / abs(base) * 100.0


def _archive(log: EpisodeLog, out_dir: Path | None, *parts: str) -> None:
    if out_dir is None:
        return
    target = out_dir.joinpath(*parts)
    target.mkdir(parents=True, exist_ok=True)
    save_episode_jsonl(log, target / "episode.jsonl")


def _write_curve(result: TrainResult, out_dir: Path | None, *parts: str) -> None:
    if out_dir is None:
        return
    target = out_dir.joinpath(*parts)
    target.mkdir(parents=True, exist_ok=True)
    with (target / "curve.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_HEADER)
        for point in result.curve:
            writer.writerow(
                [
                    point.update_index,
                    point.episodes,
                    repr(point.mean_cumulative_reward),
                    repr(point.mean_cost),
                    repr(point.sla_rate),
                ]
            )


def run_comparison(plan: ExperimentPlan, out_root: str | Path | None = None) -> Table:
    """Agent x scenario comparison: per-metric mean and stdev over seeds,
    plus relative improvement against the rule-based baseline."""
    out_dir = _prepare_out_dir(plan, out_root)
    cells: list[CellResult] = []
    for preset in plan.scenario_presets:
        for seed in plan.seeds:
            train_sc, eval_sc = build_cell_scenarios(plan, preset, seed)
            for agent in plan.agents:
                log, result = evaluate_agent(agent, plan, train_sc, eval_sc, seed)
                cells.append(CellResult(agent, preset, seed, metrics.report_from_log(log)))
                _archive(log, out_dir, agent, preset, str(seed))
                if result is not None:
                    _write_curve(result, out_dir, agent, preset, str(seed))

    baseline_agent = "rule-based" if "rule-based" in plan.agents else plan.agents[0]
    header = ["agent", "scenario"]
    for col in metrics.REPORT_COLUMNS:
        header.extend([f"{col}_mean", f"{col}_std", f"{col}_improvement_pct"])
    rows: list[list[str]] = []
    for agent in plan.agents:
        for preset in plan.scenario_presets:
            own = [c.report for c in cells if c.agent == agent and c.scenario == preset]
            base = [
                c.report
                for c in cells
                if c.agent == baseline_agent and c.scenario == preset
            ]
            row = [agent, preset]
            for col in metrics.REPORT_COLUMNS:
                values = np.array([getattr(r, col) for r in own], dtype=float)
                base_values = np.array([getattr(r, col) for r in base], dtype=float)
                mean = float(values.mean())
                row.append(repr(mean))
                row.append(repr(float(values.std())))
                row.append(
                    repr(
                        _improvement_pct(
                            mean, float(base_values.mean()), _METRIC_HIGHER_BETTER[col]
                        )
                    )
                )
            rows.append(row)
    table = Table(name="comparison", header=tuple(header), rows=rows)
    if out_dir is not None:
        write_table(table, out_dir / "comparison.csv")
    return table


def run_ablation(plan: ExperimentPlan, out_root: str | Path | None = None) -> Table:
    """Full system vs single-flag ablations under identical seeds/budgets.

    The ordering_ok column records whether the full system is weakly best
    (cost and cumulative reward) in that scenario; an ablation beating the
    full system is reported, not an error. Evaluation always logs under
    the canonical reward weights.
    """
    out_dir = _prepare_out_dir(plan, out_root)
    variants: list[AblationFlags] = [AblationFlags()] + list(plan.ablations)
    results: dict[tuple[str, str], list[metrics.MetricReport]] = {}
    for preset in plan.scenario_presets:
        for seed in plan.seeds:
            train_sc, eval_sc = build_cell_scenarios(plan, preset, seed)
            for flags in variants:
                log, result = evaluate_agent(
                    "ppo", plan, train_sc, eval_sc, seed, flags=flags
                )
                results.setdefault((flags.tag(), preset), []).append(
                    metrics.report_from_log(log)
                )
                _archive(log, out_dir, f"ppo-{flags.tag()}", preset, str(seed))
                if result is not None:
                    _write_curve(result, out_dir, f"ppo-{flags.tag()}", preset, str(seed))

    header = ["variant", "scenario"]
    for col in metrics.REPORT_COLUMNS:
        header.extend([f"{col}_mean", f"{col}_std"])
    header.append("ordering_ok")
    rows: list[list[str]] = []
    for flags in variants:
        tag = flags.tag()
        for preset in plan.scenario_presets:
            reports = results[(tag, preset)]
            full = results[("full", preset)]
            row = [tag, preset]
            for col in metrics.REPORT_COLUMNS:
                values = np.array([getattr(r, col) for r in reports], dtype=float)
                row.append(repr(float(values.mean())))
                row.append(repr(float(values.std())))
            full_cost = float(np.mean([r.energy_cost for r in full]))
            full_reward = float(np.mean([r.cumulative_reward for r in full]))
            var_cost = float(np.mean([r.energy_cost for r in reports]))
            var_reward = float(np.mean([r.cumulative_reward for r in reports]))
            ordering_ok = full_cost <= var_cost and full_reward >= var_reward
            row.append(str(ordering_ok))
            rows.append(row)
    table = Table(name="ablation", header=tuple(header), rows=rows)
    if out_dir is not None:
        write_table(table, out_dir / "ablation.csv")
    return table


def _sweep_configs(
    plan: ExperimentPlan, axis: str, value: float
) -> tuple[PPOConfig, NetworkConfig | None]:
    ppo = plan.ppo
    if axis == "minibatch_size":
        return replace(ppo, minibatch_size=int(value)), None
    if axis == "learning_rate":
        return replace(ppo, learning_rate=float(value)), None
    base = NetworkConfig(
        window=ppo.window,
        features=7 + ppo.forecast_horizon,
        actions=11,
    )
    if axis == "recurrent_units":
        return ppo, replace(base, recurrent_units=int(value))
    if axis == "conv_filters":
        filters = int(value)
        return ppo, replace(
            base, conv=(ConvSpec(filters, 3, 1), ConvSpec(2 * filters, 3, 2))
        )
    raise ValueError(f"unknown sweep axis {axis!r}")


def run_sweep(plan: ExperimentPlan, out_root: str | Path | None = None) -> Table:
    """Vary one parameter, holding everything else at plan defaults, and
    record the success rate and mean metrics per value."""
    if plan.sweep_axis is None or not plan.sweep_values:
        raise ValueError("plan must set sweep_axis and sweep_values")
    axis = plan.sweep_axis
    out_dir = _prepare_out_dir(plan, out_root)
    header = ["axis", "value", "success_rate"] + [f"{c}_mean" for c in metrics.REPORT_COLUMNS]
    rows: list[list[str]] = []
    for value in plan.sweep_values:
        ppo_config, net_config = _sweep_configs(plan, axis, value)
        reports: list[metrics.MetricReport] = []
        for preset in plan.scenario_presets:
            for seed in plan.seeds:
                train_sc, eval_sc = build_cell_scenarios(plan, preset, seed)
                result = train_ppo_cached(
                    train_sc, ppo_config, AblationFlags(), seed, net_config
                )
                forecaster = result.forecasters[train_sc.label]
                builder = ObservationBuilder(
                    eval_sc,
                    forecaster,
                    window=ppo_config.window,
                    horizon=ppo_config.forecast_horizon,
                )

                def policy_fn(state):
                    action, _, _ = act(
                        result.params, result.net_config, builder.build(state), mode="greedy"
                    )
                    return Action(action)

                log = _greedy_episode_with_policy(eval_sc, policy_fn, seed)
                reports.append(metrics.report_from_log(log))
        row = [axis, repr(float(value)), repr(metrics.success_rate(reports))]
        for col in metrics.REPORT_COLUMNS:
            row.append(repr(float(np.mean([getattr(r, col) for r in reports]))))
        rows.append(row)
    table = Table(name=f"sweep_{axis}", header=tuple(header), rows=rows)
    if out_dir is not None:
        write_table(table, out_dir / f"sweep_{axis}.csv")
    return table


def _prepare_out_dir(plan: ExperimentPlan, out_root: str | Path | None) -> Path | None:
    if out_root is None:
        return None
    out_dir = Path(out_root) / plan.name
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "plan.txt").write_text(_plan_text(plan), encoding="utf-8")
    return out_dir


def _plan_text(plan: ExperimentPlan) -> str:
    pairs = {
        "name": plan.name,
        "scenario_presets": ",".join(plan.scenario_presets),
        "agents": ",".join(plan.agents),
        "seeds": ",".join(str(s) for s in plan.seeds),
        "days": str(plan.days),
        "dt_hours": repr(plan.dt_hours),
        "ppo_updates": str(plan.ppo.total_updates),
        "ppo_rollout_length": str(plan.ppo.rollout_length),
        "ppo_learning_rate": repr(plan.ppo.learning_rate),
        "q_episodes": str(plan.q_episodes),
    }
    return "".join(f"{k} = {v}\n" for k, v in pairs.items())


def write_table(table: Table, path: str | Path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.header)
        writer.writerows(table.rows)


def read_table(path: str | Path) -> Table:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        rows = [row for row in reader]
    return Table(name=Path(path).stem, header=header, rows=rows)


def emit_report(tables: list[Table], out_dir: str | Path) -> list[Path]:
    """Write one CSV per table plus a plain-text summary; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for table in tables:
        path = out / f"{table.name}.csv"
        write_table(table, path)
        written.append(path)
    summary = out / "summary.txt"
    summary.write_text(format_summary(tables), encoding="utf-8")
    written.append(summary)
    return written


def format_summary(tables: list[Table]) -> str:
    lines: list[str] = []
    for table in tables:
        lines.append(f"== {table.name} ==")
        widths = [
            max(len(str(table.header[i])), *(len(row[i]) for row in table.rows))
            if table.rows
            else len(str(table.header[i]))
            for i in range(len(table.header))
        ]
        lines.append("  ".join(h.ljust(w) for h, w in zip(table.header, widths)))
        for row in table.rows:
            lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
        lines.append("")
    return "\n".join(lines)

"""Command-line entry point.

Subcommands: gen-traces, preprocess, train, evaluate, compare, ablate,
sweep, grad-check. Exit codes: 0 success, 1 usage error, 2 runtime
failure. Every run echoes its effective configuration next to its outputs.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, fields, replace
from datetime import datetime, timedelta
from pathlib import Path

from . import metrics
from .agents.baselines import HeuristicAgent, rule_based_act, tabular_q_train
from .agents.observation import ObservationBuilder
from .agents.ppo import AblationFlags, PPOConfig, act, fit_forecaster, train
from .forecast import ForecastModel
from .harness import (
    CURVE_HEADER,
    ExperimentPlan,
    emit_report,
    run_ablation,
    run_comparison,
    run_sweep,
)
from .kvconfig import parse_bool, parse_kv_file
from .nn.gradcheck import grad_check
from .nn.network import ConvSpec, NetworkConfig
from .nn.params import load_checkpoint, save_checkpoint
from .sim.env import DispatchEnv
from .sim.io import load_scenario, save_episode_jsonl, scenario_from_series
from .sim.types import Action
from .traces.pipeline import clean, unify_records
from .traces.records import RawRecord, load_csv, save_csv
from .traces.synth import synthesize

TRACE_EPOCH = datetime(2024, 1, 1)


@dataclass(frozen=True)
class RunConfig:
    preset: str = "mixed"
    presets: str = "high,low,mixed"
    scenario: str = ""
    agent: str = "ppo"
    agents: str = "rule-based,heuristic,tabular-q,ppo"
    days: int = 7
    dt_hours: float = 0.25
    seed: int = 0
    seeds: str = "0,1,2,3,4"
    out: str = "out"
    updates: int = 60
    rollout_length: int = 2048
    minibatch_size: int = 64
    epochs: int = 4
    learning_rate: float = 3e-4
    clip_epsilon: float = 0.2
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    discount: float = 0.99
    gae_lambda: float = 0.95
    reward_scale: float = 0.02
    soc_shaping_per_kwh: float = -1.0  # negative = derive from the scenario
    window: int = 8
    forecast_horizon: int = 4
    q_episodes: int = 300
    no_reward_tuning: bool = False
    no_exploration: bool = False
    no_energy_prediction: bool = False
    sweep_axis: str = "learning_rate"
    sweep_values: str = "0.0003,0.003"
    plan_name: str = "default"

    def seed_list(self) -> tuple[int, ...]:
        return tuple(int(s) for s in self.seeds.split(",") if s.strip())

    def preset_list(self) -> tuple[str, ...]:
        return tuple(p.strip() for p in self.presets.split(",") if p.strip())

    def agent_list(self) -> tuple[str, ...]:
        return tuple(a.strip() for a in self.agents.split(",") if a.strip())

    def flags(self) -> AblationFlags:
        return AblationFlags(
            no_reward_tuning=self.no_reward_tuning,
            no_exploration=self.no_exploration,
            no_energy_prediction=self.no_energy_prediction,
        )

    def ppo_config(self) -> PPOConfig:
        return PPOConfig(
            discount=self.discount,
            gae_lambda=self.gae_lambda,
            clip_epsilon=self.clip_epsilon,
            entropy_coef=self.entropy_coef,
            value_coef=self.value_coef,
            epochs=self.epochs,
            minibatch_size=self.minibatch_size,
            rollout_length=self.rollout_length,
            total_updates=self.updates,
            learning_rate=self.learning_rate,
            reward_scale=self.reward_scale,
            soc_shaping_per_kwh=(
                None if self.soc_shaping_per_kwh < 0 else self.soc_shaping_per_kwh
            ),
            window=self.window,
            forecast_horizon=self.forecast_horizon,
        )

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                text = "true" if value else "false"
            elif isinstance(value, float):
                text = repr(value)
            else:
                text = str(value)
            lines.append(f"{f.name} = {text}\n")
        return "".join(lines)


def load_config(path: str | Path) -> RunConfig:
    """Parse a run config; unknown keys are rejected by name, absent keys
    take their defaults."""
    pairs = parse_kv_file(path)
    known = {f.name: f for f in fields(RunConfig)}
    updates = {}
    for key, value in pairs.items():
        if key not in known:
            raise ValueError(f"{path}: unknown config key {key!r}")
        f = known[key]
        if f.type == "bool":
            updates[key] = parse_bool(value, key)
        elif f.type == "int":
            updates[key] = int(value)
        elif f.type == "float":
            updates[key] = float(value)
        else:
            updates[key] = value
    return RunConfig(**updates)


def _echo_config(cfg: RunConfig, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "effective_config.txt").write_text(cfg.to_text(), encoding="utf-8")


def _series_to_records(series) -> list[RawRecord]:
    step = timedelta(hours=series.timestep_hours)
    return [
        RawRecord(
            timestamp=TRACE_EPOCH + t * step,
            solar_kw=series.solar_kw[t],
            wind_kw=series.wind_kw[t],
            demand_kw=series.demand_kw[t],
            grid_price_per_kwh=series.grid_price_per_kwh[t],
        )
        for t in range(len(series))
    ]


def _build_scenario(cfg: RunConfig, preset: str, seed: int, label: str | None = None):
    if cfg.scenario:
        return load_scenario(cfg.scenario)
    series = synthesize(preset, cfg.days, seed, cfg.dt_hours)
    return scenario_from_series(series, label=label or preset)


def _cmd_gen_traces(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out)
    _echo_config(cfg, out_dir)
    series = synthesize(cfg.preset, cfg.days, cfg.seed, cfg.dt_hours)
    path = out_dir / f"traces_{cfg.preset}.csv"
    save_csv(_series_to_records(series), path)
    print(f"wrote {path}")
    return 0


def _cmd_preprocess(cfg: RunConfig, traces_path: str) -> int:
    out_dir = Path(cfg.out)
    _echo_config(cfg, out_dir)
    records = clean(load_csv(traces_path))
    unified, stats = unify_records(records, cfg.dt_hours)
    path = out_dir / "unified.csv"
    names = sorted(unified[0].features)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["step"] + names + ["time_sin", "time_cos"] + [f"raw_{n}" for n in names]
        )
        for rec in unified:
            writer.writerow(
                [rec.step]
                + [repr(rec.features[n]) for n in names]
                + [repr(rec.time_sin), repr(rec.time_cos)]
                + [repr(rec.raw[n]) for n in names]
            )
    stats_path = out_dir / "normalization_stats.txt"
    stats_path.write_text(
        "".join(
            f"{name} = {stats[name].lo!r},{stats[name].hi!r}\n" for name in names
        ),
        encoding="utf-8",
    )
    print(f"wrote {path} and {stats_path}")
    return 0


def _forecaster_meta(model: ForecastModel) -> dict:
    return {
        "kind": model.kind,
        "order": model.order,
        "bias": model.bias,
        "coefficients": list(model.coefficients),
        "steps_per_day": model.steps_per_day,
        "fallback": model.fallback,
    }


def _forecaster_from_meta(meta: dict) -> ForecastModel:
    return ForecastModel(
        kind=meta["kind"],
        order=meta["order"],
        bias=meta["bias"],
        coefficients=tuple(meta["coefficients"]),
        steps_per_day=meta["steps_per_day"],
        fallback=meta["fallback"],
    )


def _net_config_meta(config: NetworkConfig) -> dict:
    return {
        "window": config.window,
        "features": config.features,
        "actions": config.actions,
        "conv": [[s.filters, s.width, s.stride] for s in config.conv],
        "recurrent_units": config.recurrent_units,
        "dense": list(config.dense),
        "dense_activation": config.dense_activation,
    }


def _net_config_from_meta(meta: dict) -> NetworkConfig:
    return NetworkConfig(
        window=meta["window"],
        features=meta["features"],
        actions=meta["actions"],
        conv=tuple(ConvSpec(*spec) for spec in meta["conv"]),
        recurrent_units=meta["recurrent_units"],
        dense=tuple(meta["dense"]),
        dense_activation=meta["dense_activation"],
    )


def _cmd_train(cfg: RunConfig) -> int:
    out_dir = Path(cfg.out)
    _echo_config(cfg, out_dir)
    scenarios = [
        _build_scenario(cfg, preset, 10_000 + cfg.seed, label=preset)
        for preset in (cfg.preset_list() if not cfg.scenario else ["file"])
    ]
    result = train(scenarios, cfg.ppo_config(), flags=cfg.flags(), seed=cfg.seed)
    meta = {
        "net_config": _net_config_meta(result.net_config),
        "forecasters": {
            label: _forecaster_meta(model) for label, model in result.forecasters.items()
        },
        "window": cfg.window,
        "forecast_horizon": cfg.forecast_horizon,
        "seed": cfg.seed,
    }
    save_checkpoint(result.params, out_dir / "checkpoint.json", meta=meta)
    with (out_dir / "curve.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_HEADER)
        for p in result.curve:
            writer.writerow(
                [
                    p.update_index,
                    p.episodes,
                    repr(p.mean_cumulative_reward),
                    repr(p.mean_cost),
                    repr(p.sla_rate),
                ]
            )
    print(f"wrote {out_dir / 'checkpoint.json'} and {out_dir / 'curve.csv'}")
    return 0


def _cmd_evaluate(cfg: RunConfig, checkpoint: str | None) -> int:
    out_dir = Path(cfg.out)
    _echo_config(cfg, out_dir)
    scenario = _build_scenario(cfg, cfg.preset, 20_000 + cfg.seed)
    env = DispatchEnv(scenario, seed=cfg.seed)
    if cfg.agent == "ppo":
        if not checkpoint:
            raise ValueError("evaluate with agent=ppo requires --checkpoint")
        params, meta = load_checkpoint(checkpoint)
        net_config = _net_config_from_meta(meta["net_config"])
        forecasters = meta.get("forecasters", {})
        key = scenario.label if scenario.label in forecasters else next(iter(forecasters), None)
        forecaster = _forecaster_from_meta(forecasters[key]) if key else None
        builder = ObservationBuilder(
            scenario,
            forecaster,
            zero_forecast=cfg.no_energy_prediction,
            window=meta.get("window", cfg.window),
            horizon=meta.get("forecast_horizon", cfg.forecast_horizon),
        )
        while not env.done:
            action, _, _ = act(params, net_config, builder.build(env.state), mode="greedy")
            env.step(Action(action))
    elif cfg.agent == "rule-based":
        while not env.done:
            env.step(rule_based_act(env.state, scenario))
    elif cfg.agent == "heuristic":
        train_sc = _build_scenario(cfg, cfg.preset, 10_000 + cfg.seed)
        helper = HeuristicAgent(scenario, fit_forecaster(train_sc))
        while not env.done:
            env.step(helper.act(env.state))
    elif cfg.agent == "tabular-q":
        train_sc = _build_scenario(cfg, cfg.preset, 10_000 + cfg.seed)
        policy = tabular_q_train([train_sc], episodes=cfg.q_episodes, seed=cfg.seed)
        while not env.done:
            env.step(policy.act(env.state, scenario))
    else:
        raise ValueError(f"unknown agent {cfg.agent!r}")

    save_episode_jsonl(env.log, out_dir / "episode.jsonl")
    report = metrics.report_from_log(env.log)
    with (out_dir / "metrics.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(metrics.REPORT_COLUMNS)
        writer.writerow(report.to_csv_row())
    for col in metrics.REPORT_COLUMNS:
        print(f"{col}: {getattr(report, col)}")
    return 0


def _plan_from_config(cfg: RunConfig) -> ExperimentPlan:
    return ExperimentPlan(
        name=cfg.plan_name,
        scenario_presets=cfg.preset_list(),
        agents=cfg.agent_list(),
        seeds=cfg.seed_list(),
        days=cfg.days,
        dt_hours=cfg.dt_hours,
        ppo=cfg.ppo_config(),
        q_episodes=cfg.q_episodes,
    )


def _cmd_compare(cfg: RunConfig) -> int:
    plan = _plan_from_config(cfg)
    _echo_config(cfg, Path(cfg.out) / plan.name)
    table = run_comparison(plan, out_root=cfg.out)
    emit_report([table], Path(cfg.out) / plan.name)
    print(f"wrote {Path(cfg.out) / plan.name / 'comparison.csv'}")
    return 0


def _cmd_ablate(cfg: RunConfig) -> int:
    plan = _plan_from_config(cfg)
    _echo_config(cfg, Path(cfg.out) / plan.name)
    table = run_ablation(plan, out_root=cfg.out)
    emit_report([table], Path(cfg.out) / plan.name)
    print(f"wrote {Path(cfg.out) / plan.name / 'ablation.csv'}")
    return 0


def _cmd_sweep(cfg: RunConfig, axis: str | None, values: str | None) -> int:
    plan = _plan_from_config(cfg)
    sweep_axis = axis or cfg.sweep_axis
    raw_values = values or cfg.sweep_values
    sweep_values = tuple(float(v) for v in raw_values.split(",") if v.strip())
    plan = replace(plan, sweep_axis=sweep_axis, sweep_values=sweep_values)
    _echo_config(cfg, Path(cfg.out) / plan.name)
    table = run_sweep(plan, out_root=cfg.out)
    emit_report([table], Path(cfg.out) / plan.name)
    print(f"wrote {Path(cfg.out) / plan.name / f'sweep_{sweep_axis}.csv'}")
    return 0


GRAD_TOLERANCES = {"conv": 1e-3, "recurrent": 1e-3, "softmax": 1e-3, "dense": 1e-3, "value": 1e-3}
DENSE_ONLY_TOLERANCE = 1e-6


def _cmd_grad_check(cfg: RunConfig) -> int:
    default = NetworkConfig(window=cfg.window, features=7 + cfg.forecast_horizon, actions=11)
    report = grad_check(default, seed=cfg.seed)
    print("default config:")
    print(report)
    dense_only = NetworkConfig(
        window=cfg.window,
        features=7 + cfg.forecast_horizon,
        actions=11,
        conv=(),
        recurrent_units=0,
        dense=(32, 16),
    )
    dense_report = grad_check(dense_only, seed=cfg.seed)
    print("dense-only config:")
    print(dense_report)
    ok = all(
        err < GRAD_TOLERANCES[layer] for layer, err in report.per_layer.items()
    ) and all(err < DENSE_ONLY_TOLERANCE for err in dense_report.per_layer.values())
    if not ok:
        print("gradient check FAILED", file=sys.stderr)
        return 2
    print("gradient check passed")
    return 0


class _CliParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors instead of exiting."""

    def error(self, message):
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _build_parser() -> _CliParser:
    parser = _CliParser(prog="greendispatch", add_help=True)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--config", type=str, default=None)
    parser.add_argument("--out", type=str, default=None)
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("gen-traces", help="synthesize a trace CSV")
    p.add_argument("--preset", choices=("high", "low", "mixed"), default=None)
    p.add_argument("--days", type=int, default=None)

    p = sub.add_parser("preprocess", help="run the cleaning/normalization pipeline")
    p.add_argument("--traces", required=True)
    p.add_argument("--dt-hours", type=float, default=None)

    p = sub.add_parser("train", help="train the PPO controller")
    p.add_argument("--preset", default=None)
    p.add_argument("--updates", type=int, default=None)

    p = sub.add_parser("evaluate", help="evaluate an agent on a scenario")
    p.add_argument("--agent", default=None)
    p.add_argument("--preset", default=None)
    p.add_argument("--checkpoint", default=None)

    sub.add_parser("compare", help="run the baseline comparison protocol")
    sub.add_parser("ablate", help="run the ablation protocol")

    p = sub.add_parser("sweep", help="vary one parameter at a time")
    p.add_argument("--axis", default=None)
    p.add_argument("--values", default=None)

    sub.add_parser("grad-check", help="verify analytic gradients")
    return parser


def dispatch_command(argv: list[str]) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1

    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out"] = args.out
        for name in ("preset", "days", "agent", "updates"):
            value = getattr(args, name, None)
            if value is not None:
                overrides[name] = value
        if getattr(args, "dt_hours", None) is not None:
            overrides["dt_hours"] = args.dt_hours
        cfg = replace(cfg, **overrides)

        if args.command == "gen-traces":
            return _cmd_gen_traces(cfg)
        if args.command == "preprocess":
            return _cmd_preprocess(cfg, args.traces)
        if args.command == "train":
            return _cmd_train(cfg)
        if args.command == "evaluate":
            return _cmd_evaluate(cfg, args.checkpoint)
        if args.command == "compare":
            return _cmd_compare(cfg)
        if args.command == "ablate":
            return _cmd_ablate(cfg)
        if args.command == "sweep":
            return _cmd_sweep(cfg, args.axis, args.values)
        if args.command == "grad-check":
            return _cmd_grad_check(cfg)
        print(f"error: unknown command {args.command!r}", file=sys.stderr)
        return 1
    except (_UsageError, BrokenPipeError):
        raise
    except Exception as exc:  # runtime failure contract: report and exit 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main(argv: list[str] | None = None) -> int:
    return dispatch_command(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    raise SystemExit(main())

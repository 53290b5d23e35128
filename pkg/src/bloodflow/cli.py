"""Command-line front end: generate, simulate, forecast, compare, report.

Every command is deterministic given its inputs and seed, writes a
manifest.json recording exactly how its outputs were produced, and uses exit
codes 0 (success), 2 (usage or config error), 1 (runtime failure). The
BLOODFLOW_DATA_DIR environment variable supplies the default dataset
directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date
from pathlib import Path

from . import __version__
from .forecast import (
    DEFAULT_HORIZON,
    DEFAULT_TRAIN_LEN,
    ForecastTask,
    MODEL_KINDS,
    evaluate_model,
)
from .lstm import LstmConfig
from .plots import plot_acceptance_series, plot_forecast_eval, plot_run_comparison
from .simengine import (
    POLICIES,
    ScenarioConfig,
    SimReport,
    load_acceptance_series,
    run_simulation,
)
from .stats import RunSummary, compare_runs
from .store import BloodStore
from .synthgen import Dataset, GenConfig, generate_dataset

GEN_SCHEMA = "bloodflow.genconfig.v1"
SCENARIO_SCHEMA = "bloodflow.scenario.v1"


class ConfigError(Exception):
    """Bad flags or config file contents; maps to exit code 2."""


def _load_config(path: str | None, schema: str, allowed: set[str]) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    got_schema = data.pop("schema", None)
    if got_schema != schema:
        raise ConfigError(f"config schema must be {schema!r}, got {got_schema!r}")
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    return data


def _parse_date(text: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise ConfigError(f"invalid date {text!r}; expected YYYY-MM-DD") from None


def _write_manifest(out_dir: Path, command: str, argv: list[str], config: dict,
                    outputs: list[str], extra: dict | None = None) -> None:
    manifest = {
        "tool": "bloodflow",
        "version": __version__,
        "command": command,
        "argv": argv,
        "config": config,
        "outputs": sorted(outputs),
    }
    if extra:
        manifest.update(extra)
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def _default_dataset_dir(args_value: str | None) -> Path:
    if args_value:
        return Path(args_value)
    env = os.environ.get("BLOODFLOW_DATA_DIR")
    if env:
        return Path(env)
    raise ConfigError("no dataset directory: pass --dataset or set BLOODFLOW_DATA_DIR")


# -- generate ---------------------------------------------------------------

_GEN_FIELDS = {
    "n_banks", "n_users", "n_seed_transactions", "start_date", "seed",
    "pre_window_days", "donor_fraction", "patient_fraction",
}


def cmd_generate(args: argparse.Namespace, argv: list[str]) -> int:
    overrides = _load_config(args.config, GEN_SCHEMA, _GEN_FIELDS)
    for flag, key in (
        (args.banks, "n_banks"),
        (args.users, "n_users"),
        (args.seed_transactions, "n_seed_transactions"),
        (args.seed, "seed"),
        (args.start_date, "start_date"),
        (args.pre_window_days, "pre_window_days"),
    ):
        if flag is not None:
            overrides[key] = flag
    try:
        cfg = GenConfig.from_dict(overrides) if overrides else GenConfig()
        cfg.validate()
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    dataset = generate_dataset(cfg)
    out_dir = Path(args.out)
    dataset.save(out_dir)
    dataset_hash = dataset.content_hash()
    outputs = ["banks.jsonl", "users.jsonl", "inventory.jsonl", "transactions.jsonl"]
    _write_manifest(out_dir, "generate", argv, cfg.to_dict(), outputs,
                    {"seed": cfg.seed, "dataset_hash": dataset_hash})
    print(json.dumps({
        "banks": len(dataset.banks),
        "users": len(dataset.users),
        "transactions": len(dataset.transactions),
        "dataset_hash": dataset_hash,
        "out_dir": str(out_dir),
    }, sort_keys=True))
    return 0


# -- simulate ---------------------------------------------------------------

_SCENARIO_FIELDS = {
    "start_date", "n_days", "daily_events", "request_probability",
    "proximity_fraction", "policy", "request_quantity", "seed",
}


def cmd_simulate(args: argparse.Namespace, argv: list[str]) -> int:
    overrides = _load_config(args.config, SCENARIO_SCHEMA, _SCENARIO_FIELDS)
    for flag, key in (
        (args.policy, "policy"),
        (args.days, "n_days"),
        (args.seed, "seed"),
        (args.start_date, "start_date"),
        (args.request_probability, "request_probability"),
        (args.proximity_fraction, "proximity_fraction"),
        (args.request_quantity, "request_quantity"),
    ):
        if flag is not None:
            overrides[key] = flag
    if args.daily_events is not None:
        try:
            lo, hi = (int(part) for part in args.daily_events.split(":"))
        except ValueError:
            raise ConfigError("--daily-events expects LO:HI, e.g. 40:50") from None
        overrides["daily_events"] = [lo, hi]

    base = ScenarioConfig().to_dict()
    base.update(overrides)
    try:
        cfg = ScenarioConfig.from_dict(base)
        cfg.validate()
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None

    dataset_dir = _default_dataset_dir(args.dataset)
    try:
        dataset = Dataset.load(dataset_dir)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from None

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with BloodStore.open(out_dir / "store") as store:
        report = run_simulation(cfg, dataset, store)
    report.save(out_dir / "report.json")
    report.save_acceptance_series(out_dir / "acceptance_series.csv")
    _write_manifest(out_dir, "simulate", argv, cfg.to_dict(),
                    ["report.json", "acceptance_series.csv", "store"],
                    {"seed": cfg.seed, "dataset_hash": dataset.content_hash(),
                     "dataset_dir": str(dataset_dir)})
    print(json.dumps({
        "accepted": report.accepted,
        "denied": report.denied,
        "acceptance_ratio": report.acceptance_ratio,
        "total_distance": report.total_distance,
        "expired_units": report.expired_units,
    }, sort_keys=True))
    return 0


# -- forecast ---------------------------------------------------------------

def cmd_forecast(args: argparse.Namespace, argv: list[str]) -> int:
    series_path = Path(args.series)
    if not series_path.exists():
        raise ConfigError(f"series file not found: {series_path}")
    series = load_acceptance_series(series_path)
    if not series:
        raise ConfigError(f"series file {series_path} holds no banks")

    train_len, horizon = args.train_len, args.horizon
    needed = train_len + horizon
    tasks = {}
    for bank_id, values in series.items():
        if len(values) < needed:
            raise ConfigError(
                f"bank {bank_id} has {len(values)} days of history; "
                f"forecasting day {needed} needs at least {needed}"
            )
        tasks[bank_id] = ForecastTask(values, train_len=train_len, horizon=horizon)

    try:
        order = tuple(int(x) for x in args.arima_order.split(","))
        if len(order) != 3:
            raise ValueError
    except ValueError:
        raise ConfigError("--arima-order expects p,d,q, e.g. 1,1,1") from None

    models = MODEL_KINDS if args.model == "all" else (args.model,)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    summary = {}
    for kind in models:
        result = evaluate_model(
            kind, tasks, arima_order=order,
            lstm_config=LstmConfig(init_seed=args.lstm_seed),
        )
        eval_path = out_dir / f"forecast_eval_{kind}.json"
        result.save(eval_path)
        csv_path = out_dir / f"forecast_eval_{kind}.csv"
        result.save_csv(csv_path)
        outputs += [eval_path.name, csv_path.name]
        summary[kind] = result.mean_percent_difference
    _write_manifest(out_dir, "forecast", argv,
                    {"models": list(models), "arima_order": list(order),
                     "train_len": train_len, "horizon": horizon,
                     "lstm_seed": args.lstm_seed, "series": str(series_path)},
                    outputs)
    print(json.dumps({"mean_percent_difference": summary}, sort_keys=True))
    return 0


# -- compare ----------------------------------------------------------------

def cmd_compare(args: argparse.Namespace, argv: list[str]) -> int:
    summaries = []
    for path in (args.baseline, args.treatment):
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"report not found: {p}")
        try:
            summaries.append(RunSummary.from_report_dict(json.loads(p.read_text(encoding="utf-8"))))
        except (json.JSONDecodeError, KeyError) as exc:
            raise ConfigError(f"cannot parse report {p}: {exc}") from None
    try:
        comparison = compare_runs(summaries[0], summaries[1])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    comparison.save(out_dir / "comparison.json")
    _write_manifest(out_dir, "compare", argv,
                    {"baseline": str(args.baseline), "treatment": str(args.treatment)},
                    ["comparison.json"])
    print(comparison.as_table())
    return 0


# -- report -----------------------------------------------------------------

def cmd_report(args: argparse.Namespace, argv: list[str]) -> int:
    run_dirs = [Path(r) for r in args.run]
    for run_dir in run_dirs:
        if not (run_dir / "report.json").exists():
            raise ConfigError(f"no report.json under {run_dir}")
    out_dir = Path(args.out) if args.out else run_dirs[0]
    out_dir.mkdir(parents=True, exist_ok=True)

    outputs = []
    summaries = []
    rows = []
    for run_dir in run_dirs:
        report = SimReport.load(run_dir / "report.json")
        summaries.append(RunSummary(
            policy=report.policy,
            accepted=report.accepted,
            denied=report.denied,
            acceptance_ratio=report.acceptance_ratio,
            total_distance=report.total_distance,
        ))
        rows.append((report.policy, report.seed, report.n_days, report.accepted,
                     report.denied, report.acceptance_ratio, report.total_distance,
                     report.expired_units))
        series_path = run_dir / "acceptance_series.csv"
        series = (load_acceptance_series(series_path) if series_path.exists()
                  else report.per_bank_daily)
        fig_name = f"acceptance_{report.policy}_seed{report.seed}.png"
        plot_acceptance_series(
            series, out_dir / fig_name,
            title=f"Acceptance ratio by bank ({report.policy}, seed {report.seed})",
        )
        outputs.append(fig_name)

    summary_path = out_dir / "summary.csv"
    with summary_path.open("w", encoding="utf-8") as fh:
        fh.write("policy,seed,n_days,accepted,denied,acceptance_ratio,total_distance,expired_units\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    outputs.append(summary_path.name)

    if len(summaries) >= 2:
        plot_run_comparison(summaries, out_dir / "policy_comparison.png")
        outputs.append("policy_comparison.png")

    if args.forecast_eval:
        eval_path = Path(args.forecast_eval)
        if not eval_path.exists():
            raise ConfigError(f"forecast evaluation not found: {eval_path}")
        eval_dict = json.loads(eval_path.read_text(encoding="utf-8"))
        fig_name = f"forecast_{eval_dict['model']}.png"
        plot_forecast_eval(eval_dict, out_dir / fig_name)
        outputs.append(fig_name)

    _write_manifest(out_dir, "report", argv,
                    {"runs": [str(r) for r in run_dirs]}, outputs)
    print(json.dumps({"out_dir": str(out_dir), "figures": sorted(outputs)}, sort_keys=True))
    return 0


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bloodflow",
        description="Blood-bank network simulation, forecasting, and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"bloodflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="produce a synthetic dataset")
    p.add_argument("--config", help=f"JSON config with schema {GEN_SCHEMA}")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--banks", type=int, dest="banks")
    p.add_argument("--users", type=int, dest="users")
    p.add_argument("--seed-transactions", type=int, dest="seed_transactions")
    p.add_argument("--seed", type=int)
    p.add_argument("--start-date", dest="start_date", type=_parse_date)
    p.add_argument("--pre-window-days", dest="pre_window_days", type=int)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("simulate", help="run one allocation scenario")
    p.add_argument("--dataset", help="dataset directory (default: $BLOODFLOW_DATA_DIR)")
    p.add_argument("--config", help=f"JSON config with schema {SCENARIO_SCHEMA}")
    p.add_argument("--out", required=True)
    p.add_argument("--policy", choices=POLICIES)
    p.add_argument("--days", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--start-date", dest="start_date", type=_parse_date)
    p.add_argument("--request-probability", dest="request_probability", type=float)
    p.add_argument("--proximity-fraction", dest="proximity_fraction", type=float)
    p.add_argument("--request-quantity", dest="request_quantity", type=int)
    p.add_argument("--daily-events", dest="daily_events", help="LO:HI events per day")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("forecast", help="predict day train_len+horizon acceptance ratios")
    p.add_argument("--series", required=True, help="acceptance_series.csv from simulate")
    p.add_argument("--model", choices=MODEL_KINDS + ("all",), default="all")
    p.add_argument("--arima-order", dest="arima_order", default="1,1,1")
    p.add_argument("--train-len", dest="train_len", type=int, default=DEFAULT_TRAIN_LEN)
    p.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    p.add_argument("--lstm-seed", dest="lstm_seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("compare", help="metric deltas and significance for two runs")
    p.add_argument("--baseline", required=True, help="baseline report.json")
    p.add_argument("--treatment", required=True, help="treatment report.json")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="render figures and a delimited summary for runs")
    p.add_argument("--run", action="append", required=True, help="simulate output directory")
    p.add_argument("--out", help="figure directory (default: first run dir)")
    p.add_argument("--forecast-eval", dest="forecast_eval",
                   help="forecast_eval_<model>.json to render as a figure")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()

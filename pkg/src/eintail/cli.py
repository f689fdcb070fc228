"""Command-line entry point.

    eintail selftest [FIXTURE ...]
    eintail bound      --config cfg.json [--seed N] [--out DIR] [--threads N]
    eintail experiment --config cfg.json [--seed N] [--trials N] [--out DIR] [--threads N]
    eintail decouple   --config cfg.json [--seed N] [--trials N] [--out DIR] [--threads N]

Exit codes: 0 pass, 2 invariant/dominance violation, 3 assumption refusal,
4 config error.  Reports are byte-identical for identical config and seed,
independent of --threads; `--seed` moves the evaluation stream only (the
pilot stream feeding bound statistics stays keyed to the config).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .config import (
    ConfigError,
    SCHEMA_VERSION,
    build_decouple_settings,
    build_settings,
    load_config,
)
from .random_ensembles import SeedPolicy
from .selftest import run_selftest
from .verify import (
    DominanceReport,
    InvalidRunError,
    estimate_decoupling,
    run_dominance_experiment,
)

EXIT_OK = 0
EXIT_VIOLATION = 2
EXIT_REFUSAL = 3
EXIT_CONFIG = 4

CSV_HEADER = "theta,p_hat,ci_low,ci_high,bound,t_star,verdict"


def _fmt(x: Optional[float]) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(value).items()}
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and (value != value):  # NaN -> null for valid JSON
        return None
    return value


def _sanitize_nonfinite(obj):
    if isinstance(obj, float):
        if obj != obj:
            return None
        if obj == float("inf"):
            return "inf"
        if obj == float("-inf"):
            return "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _sanitize_nonfinite(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_sanitize_nonfinite(v) for v in obj]
    return obj


def _report_config(cfg: dict, eval_seed: int, trials: int) -> dict:
    # threads and output paths are execution details, not experiment inputs;
    # leaving them out keeps reports byte-identical across --threads/--out.
    cleaned = {k: v for k, v in cfg.items() if k not in ("threads", "output")}
    cleaned["effective_eval_seed"] = eval_seed
    cleaned["effective_trials"] = trials
    return cleaned


def _dominance_rows_json(report: DominanceReport) -> list[dict]:
    rows = []
    for r in report.rows:
        row = {
            "theta": r.theta,
            "p_hat": r.tail.p_hat if r.tail else None,
            "ci_low": r.tail.ci_low if r.tail else None,
            "ci_high": r.tail.ci_high if r.tail else None,
            "hits": r.tail.hits if r.tail else None,
            "trials": r.tail.trials if r.tail else None,
            "bound": r.bound,
            "bound_capped": r.bound_capped,
            "t_star": r.t_star,
            "verdict": r.verdict,
            "note": r.note,
            "trace": _jsonable(r.trace) if r.trace else None,
        }
        rows.append(row)
    return rows


def _dominance_csv(report: DominanceReport) -> str:
    lines = [CSV_HEADER]
    for r in report.rows:
        lines.append(",".join([
            _fmt(r.theta),
            _fmt(r.tail.p_hat) if r.tail else "",
            _fmt(r.tail.ci_low) if r.tail else "",
            _fmt(r.tail.ci_high) if r.tail else "",
            _fmt(r.bound),
            _fmt(r.t_star) if r.t_star is not None else "",
            r.verdict,
        ]))
    return "\n".join(lines) + "\n"


def _decouple_csv(result) -> str:
    lines = [CSV_HEADER]
    for lhs, rhs in zip(result.lhs_tails, result.rhs_tails_at_d_hat):
        verdict = "pass" if lhs.ci_low <= result.d_hat * rhs.ci_high else "violation"
        lines.append(",".join([
            _fmt(lhs.theta),
            _fmt(lhs.p_hat),
            _fmt(lhs.ci_low),
            _fmt(lhs.ci_high),
            _fmt(result.d_hat * rhs.ci_high),
            "",
            verdict,
        ]))
    return "\n".join(lines) + "\n"


def _write_outputs(cfg: dict, out_dir: Path, json_doc: dict, csv_text: str,
                   default_stem: str) -> tuple[Path, Path]:
    output = cfg.get("output", {})
    json_path = out_dir / output.get("json", f"{default_stem}.json")
    csv_path = out_dir / output.get("csv", f"{default_stem}.csv")
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    doc = _sanitize_nonfinite(_jsonable(json_doc))
    json_path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
    csv_path.write_text(csv_text)
    return json_path, csv_path


def _dominance_exit_code(report: DominanceReport) -> int:
    if report.any_violation:
        return EXIT_VIOLATION
    if report.any_refusal:
        return EXIT_REFUSAL
    return EXIT_OK


def cmd_experiment(args, evaluate_tails: bool = True) -> int:
    try:
        cfg = load_config(args.config)
        if cfg["mode"] == "decouple":
            raise ConfigError("decouple configs run under `eintail decouple`")
        settings = build_settings(
            cfg, Path(args.config).resolve().parent,
            seed_override=args.seed, trials_override=args.trials,
            threads=args.threads, evaluate_tails=evaluate_tails,
        )
        report = run_dominance_experiment(settings)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidRunError as exc:
        print(f"invalid run: {exc}", file=sys.stderr)
        return EXIT_VIOLATION

    exit_code = _dominance_exit_code(report)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "mode": report.mode,
        "config": _report_config(cfg, settings.eval_seed, settings.trials),
        "assumptions": report.assumptions,
        "pilot": report.pilot,
        "rows": _dominance_rows_json(report),
        "excluded_trials": report.excluded_trials,
        "ensemble_note": report.ensemble_note,
        "exit_code": exit_code,
    }
    stem = "bound" if not evaluate_tails else "experiment"
    json_path, csv_path = _write_outputs(
        cfg, Path(args.out), doc, _dominance_csv(report), stem
    )
    for row in report.rows:
        print(f"theta={row.theta:g} verdict={row.verdict}"
              + (f" p_hat={row.tail.p_hat:.4g}" if row.tail else "")
              + (f" bound={row.bound:.4g}" if row.bound is not None else ""))
    print(f"report: {json_path}")
    print(f"summary: {csv_path}")
    return exit_code


def cmd_bound(args) -> int:
    return cmd_experiment(args, evaluate_tails=False)


def cmd_decouple(args) -> int:
    try:
        cfg = load_config(args.config)
        if cfg["mode"] != "decouple":
            raise ConfigError("`eintail decouple` needs a decouple-mode config")
        kw = build_decouple_settings(
            cfg, Path(args.config).resolve().parent,
            seed_override=args.seed, trials_override=args.trials, threads=args.threads,
        )
        result = estimate_decoupling(
            spec=kw["spec"], kernel=kw["kernel"], m_order=kw["m_order"],
            theta_grid=kw["theta_grid"], trials=kw["trials"],
            policy=SeedPolicy(kw["seed"]), k=kw["k"], exact=kw["exact"],
            d_cap=kw["d_cap"], threads=kw["threads"],
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidRunError as exc:
        print(f"invalid run: {exc}", file=sys.stderr)
        return EXIT_VIOLATION
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    exit_code = EXIT_OK if math.isfinite(result.d_hat) else EXIT_VIOLATION
    doc = {
        "schema_version": SCHEMA_VERSION,
        "mode": "decouple",
        "config": _report_config(cfg, kw["seed"], kw["trials"]),
        "decoupling": {
            "m_order": result.m_order,
            "d_hat": result.d_hat,
            "uninformative": result.uninformative,
            "exact": result.exact,
            "trials": result.trials,
            "c_hat": result.c_hat,
            "e_hat": result.e_hat,
            "note": "empirical lower evidence for the existential constant, not a proof",
            "lhs_tails": [_jsonable(t) for t in result.lhs_tails],
            "rhs_tails_at_d_hat": [_jsonable(t) for t in result.rhs_tails_at_d_hat],
        },
        "excluded_trials": result.excluded,
        "exit_code": exit_code,
    }
    json_path, csv_path = _write_outputs(cfg, Path(args.out), doc, _decouple_csv(result), "decouple")
    print(f"d_hat={result.d_hat:.6g} (uninformative={result.uninformative})")
    print(f"report: {json_path}")
    print(f"summary: {csv_path}")
    return exit_code


def cmd_selftest(args) -> int:
    return run_selftest(args.fixtures)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eintail",
        description="Einstein-product tensor tail bounds: invariant suites, "
                    "bound evaluation, and Monte Carlo dominance experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_self = sub.add_parser("selftest", help="run the built-in invariant suite")
    p_self.add_argument("fixtures", nargs="*", help="optional tensor fixture files to validate")
    p_self.set_defaults(func=cmd_selftest)

    for name, func, help_text in (
        ("bound", cmd_bound, "evaluate bounds only (no Monte Carlo tails)"),
        ("experiment", cmd_experiment, "run a dominance experiment"),
        ("decouple", cmd_decouple, "estimate the decoupling constant"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None,
                       help="override master_seed for the evaluation stream")
        p.add_argument("--trials", type=int, default=None, help="override trial count")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (must not affect results)")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

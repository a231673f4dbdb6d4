"""Command line: validate data, run a walk-forward experiment, merge reports.

Exit codes: 0 success, 3 configuration error, 4 data error, 5 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, DataError, DrlTradeError, ScheduleError
from .features import file_sha256, load_csv, random_walk_series, regime_series, validate_csv
from .reporting import (
    comparison_csv,
    comparison_rows,
    dump_json,
    equity_csv,
    report_payload,
    write_plots,
)
from .walkforward import build_schedule, run_benchmarks, run_walkforward, stitched_rows

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 3, 4, 5

log = logging.getLogger("drltrade")


def cmd_validate(path: str, as_json: bool = False) -> int:
    if not Path(path).is_file():
        print(f"error: no such file: {path}", file=sys.stderr)
        return EXIT_DATA
    violations = validate_csv(path)
    if as_json:
        print(json.dumps({"file": str(path), "violations": [{"line": v.line, "message": v.message}
                                                             for v in violations]}, indent=2))
    else:
        for v in violations:
            print(f"{path}:{v.line}: {v.message}")
        print(f"{path}: {len(violations)} violation(s)")
    return EXIT_OK if not violations else EXIT_DATA


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _manifest(cfg: RunConfig, seed: int, status: str, data_info: dict, **extra) -> dict:
    m = {
        "status": status,
        "label": cfg.label,
        "asset": cfg.asset,
        "seed": seed,
        "periods_per_year": cfg.walkforward.periods_per_year,
        "config": cfg.to_dict(),
        "data": data_info,
        "version": __version__,
    }
    m.update(extra)
    return m


def cmd_run(config_path: str, seed: Optional[int] = None, out: Optional[str] = None, jobs: int = 1) -> int:
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = cfg.seed if seed is None else seed
    out_dir = Path(out or cfg.out or f"runs/{cfg.asset}-{cfg.label}")
    out_dir.mkdir(parents=True, exist_ok=True)
    data_info = {"path": str(cfg.data_path), "sha256": file_sha256(cfg.data_path)}
    _write(out_dir / "manifest.json", dump_json(_manifest(cfg, seed, "incomplete", data_info)))
    try:
        series = load_csv(cfg.data_path)
        data_info.update(bars=len(series), first=str(series.dates[0]), last=str(series.dates[-1]))
        sc = cfg.schedule
        schedule = build_schedule(sc.train_start, sc.first_val_year, sc.windows, series.dates)
        N = cfg.walkforward.periods_per_year
        files: List[str] = []
        windows_meta = []
        if cfg.benchmark_only:
            lo, hi = stitched_rows(series, schedule)
            benches = run_benchmarks(series.dates[lo:hi], series.close[lo:hi], cfg.env, N)
            curve, positions, strategy = None, None, None
            extra = {}
        else:
            log.info("running %s on %s with %d window(s)", cfg.label, cfg.asset, len(schedule))
            res = run_walkforward(series, schedule, cfg.agent, cfg.env, cfg.features, cfg.walkforward,
                                  seed=seed, jobs=jobs)
            benches = res.benchmarks
            curve, positions, strategy = res.curve, res.positions, res.report
            for w in res.windows:
                name = f"windows/window{w.window.index}.json"
                _write(out_dir / name, dump_json(w.to_dict()))
                files.append(name)
                if w.checkpoint is not None:
                    ck = f"checkpoints/window{w.window.index}.json"
                    _write(out_dir / ck, json.dumps(w.checkpoint) + "\n")
                    files.append(ck)
                windows_meta.append({
                    "index": w.window.index, "describe": w.window.describe(), "seed": w.seed,
                    "selected_generation": w.selection.record.index if w.selection else None,
                    "warning": w.selection.warning if w.selection else None,
                })
            extra = {"identity_error": res.identity_error,
                     "windows": [{"index": w.window.index, "report": w.report.to_dict()} for w in res.windows]}
        bench_reports = {k: v[1] for k, v in benches.items()}
        bench_curves = {k: v[0].curve for k, v in benches.items()}
        _write(out_dir / "report.json", dump_json(report_payload(cfg.label, strategy, bench_reports, extra)))
        rows = ([strategy] if strategy else []) + list(bench_reports.values())
        _write(out_dir / "report.csv", comparison_csv(rows))
        main_curve = curve if curve is not None else bench_curves["buy_and_hold"]
        _write(out_dir / "equity.csv", equity_csv(main_curve, positions, bench_curves))
        plot_curves = ({cfg.label: curve} if curve is not None else {}) | bench_curves
        write_plots(out_dir, plot_curves, title=f"{cfg.asset} {cfg.label}")
        files += ["report.json", "report.csv", "equity.csv", "balance.svg", "drawdown.svg"]
        _write(out_dir / "manifest.json", dump_json(_manifest(cfg, seed, "complete", data_info,
                                                              windows=windows_meta, files=files)))
        print(f"{cfg.label}: wrote {out_dir}")
        return EXIT_OK
    except (ConfigError, ScheduleError) as exc:
        code, msg = EXIT_CONFIG, f"config error: {exc}"
    except DataError as exc:
        code, msg = EXIT_DATA, f"data error: {exc}"
    except (DrlTradeError, ArithmeticError, ValueError, RuntimeError, OSError) as exc:
        code, msg = EXIT_RUNTIME, f"runtime error: {exc}"
    _write(out_dir / "manifest.json", dump_json(_manifest(cfg, seed, "incomplete", data_info, error=msg)))
    print(msg, file=sys.stderr)
    return code


def _find_runs(run_dir: Path) -> List[Path]:
    if (run_dir / "manifest.json").is_file():
        return [run_dir]
    return sorted(p.parent for p in run_dir.glob("*/manifest.json"))


def cmd_report(run_dir: str, out: Optional[str] = None) -> int:
    root = Path(run_dir)
    runs = _find_runs(root) if root.is_dir() else []
    if not runs:
        print(f"error: no runs found in {run_dir}", file=sys.stderr)
        return EXIT_DATA
    payloads = []
    for r in runs:
        manifest = json.loads((r / "manifest.json").read_text())
        if manifest.get("status") != "complete" or not (r / "report.json").is_file():
            print(f"missing or incomplete run: {r}", file=sys.stderr)
            continue
        payloads.append(json.loads((r / "report.json").read_text()))
    if not payloads:
        print(f"error: no completed runs in {run_dir}", file=sys.stderr)
        return EXIT_DATA
    rows = comparison_rows(payloads)
    dest = Path(out) if out else root
    dest.mkdir(parents=True, exist_ok=True)
    _write(dest / "comparison.csv", comparison_csv(rows))
    _write(dest / "comparison.json", dump_json([r.to_dict() for r in rows]))
    sys.stdout.write(comparison_csv(rows))
    return EXIT_OK


def cmd_synth(kind: str, out: str, start: str, end: str, seed: int, calendar: str) -> int:
    make = regime_series if kind == "regime" else random_walk_series
    make(start, end, seed=seed, calendar=calendar).to_csv(out)
    print(f"wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drltrade", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check a bar CSV and list every violation")
    v.add_argument("data", help="CSV with header timestamp,open,high,low,close")
    v.add_argument("--json", action="store_true", help="print the violations as JSON")

    r = sub.add_parser("run", help="run a walk-forward experiment from a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int, default=None, help="override the config's master seed")
    r.add_argument("--out", default=None, help="output directory (overrides the config)")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for window training")

    rep = sub.add_parser("report", help="merge completed runs into one comparison table")
    rep.add_argument("run_dir")
    rep.add_argument("--out", default=None)

    s = sub.add_parser("synth", help="write a seeded synthetic bar CSV")
    s.add_argument("--kind", choices=["regime", "random"], default="regime")
    s.add_argument("--out", required=True)
    s.add_argument("--start", default="2005-01-01")
    s.add_argument("--end", default="2012-12-31")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--calendar", choices=["equity", "fx", "crypto"], default="equity")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "validate":
        return cmd_validate(args.data, args.json)
    if args.command == "run":
        return cmd_run(args.config, args.seed, args.out, args.jobs)
    if args.command == "report":
        return cmd_report(args.run_dir, args.out)
    return cmd_synth(args.kind, args.out, args.start, args.end, args.seed, args.calendar)


if __name__ == "__main__":
    sys.exit(main())

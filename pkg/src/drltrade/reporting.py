"""Run artifacts: report JSON/CSV, equity and drawdown CSV, SVG charts."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .market import Position
from .metrics import EquityCurve, PerformanceReport, reports_to_csv

REPORT_VERSION = 1

# Strategy row order of the comparison table; benchmarks follow.
STRATEGY_ORDER = ["ddqn-dense", "ddqn-transformer", "ppo-dense", "ppo-transformer"]
BENCHMARK_ORDER = ["buy_and_hold", "perfect_annual"]


def drawdown_series(equity) -> np.ndarray:
    e = np.asarray(equity, dtype=np.float64)
    return e / np.maximum.accumulate(e) - 1.0


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def equity_csv(curve: EquityCurve, positions: Optional[List[int]], benchmarks: Dict[str, EquityCurve]) -> str:
    """One row per bar: strategy equity, drawdown, position held into the bar, benchmark equities."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(benchmarks)
    w.writerow(["date", "equity", "drawdown", "position", *names])
    dd = drawdown_series(curve.equity)
    for k, d in enumerate(curve.dates):
        pos = "" if positions is None or k == 0 else Position(positions[k - 1]).name
        bench = [repr(float(benchmarks[n].equity[k])) for n in names]
        w.writerow([str(d), repr(float(curve.equity[k])), repr(float(dd[k])), pos, *bench])
    return buf.getvalue()


def report_payload(label: str, strategy: Optional[PerformanceReport], benchmarks: Dict[str, PerformanceReport],
                   extra: Optional[dict] = None) -> dict:
    payload = {
        "version": REPORT_VERSION,
        "label": label,
        "strategy": strategy.to_dict() if strategy else None,
        "benchmarks": {k: v.to_dict() for k, v in benchmarks.items()},
    }
    payload.update(extra or {})
    return payload


def comparison_rows(payloads: List[dict]) -> List[PerformanceReport]:
    """Strategy rows in table order followed by both benchmarks (taken from the first run)."""
    strategies = [(p["label"], PerformanceReport.from_dict(p["strategy"])) for p in payloads if p.get("strategy")]
    rank = {name: k for k, name in enumerate(STRATEGY_ORDER)}
    strategies.sort(key=lambda item: (rank.get(item[0], len(rank)), item[0]))
    rows = [r for _, r in strategies]
    for p in payloads:
        if p.get("benchmarks"):
            rows += [PerformanceReport.from_dict(p["benchmarks"][b]) for b in BENCHMARK_ORDER if b in p["benchmarks"]]
            break
    return rows


def comparison_csv(rows: List[PerformanceReport]) -> str:
    return reports_to_csv(rows)


def write_plots(out: Path, curves: Dict[str, EquityCurve], title: str = "") -> List[Path]:
    """Balance and drawdown line charts as SVG, free of timestamps."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "drltrade"
    paths = []
    for kind in ("balance", "drawdown"):
        fig, ax = plt.subplots(figsize=(9, 4))
        for name, c in curves.items():
            y = c.equity if kind == "balance" else 100.0 * drawdown_series(c.equity)
            ax.plot(c.dates.astype("datetime64[D]").astype(object), y, label=name, linewidth=1.0)
        ax.set_ylabel("balance" if kind == "balance" else "drawdown (%)")
        ax.set_title(f"{title} {kind}".strip())
        ax.grid(alpha=0.3)
        ax.legend(loc="best", fontsize=8)
        fig.autofmt_xdate()
        path = out / f"{kind}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        paths.append(path)
    return paths

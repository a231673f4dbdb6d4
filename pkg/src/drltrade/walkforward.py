"""Anchored walk-forward training, generation selection and out-of-sample stitching.

Every window retrains a fresh agent on an anchored train span, scores one
checkpoint per training cycle on the following validation year, and runs
the selected checkpoint on the year after that. Test years are chained:
equity and the open position carry from one window into the next.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .agents import AgentSpec, encoder_for, make_agent
from .agents.ddqn import DDQNAgent
from .agents.ppo import PPOAgent, Rollout
from .benchmarks import BenchmarkSpec, buy_and_hold, perfect_annual
from .errors import DataError, ScheduleError, SelectionError, StateError, UndefinedMetricError
from .features import FeatureMatrix, FeatureSpec, MarketSeries, Scaler, build_features, fit_scaler
from .market import EnvConfig, Position, Segment, SimulationResult, TradingEnv, run_policy, simulate
from .metrics import EquityCurve, PerformanceReport, full_report, sharpe
from .rl import Transition

log = logging.getLogger(__name__)

# Anchored train start, annualization and provision per asset family.
ASSET_PRESETS = {
    "fx": {"train_start": "2005-01-01", "periods_per_year": 312, "provision": 0.0001},
    "sp500": {"train_start": "2005-01-01", "periods_per_year": 252, "provision": 0.00025},
    "btc": {"train_start": "2013-01-01", "periods_per_year": 365, "provision": 0.001},
}

# Leading/trailing gap tolerated between a span edge and the first/last bar.
EDGE_SLACK_DAYS = 10


# --- schedule -------------------------------------------------------------------


def _year_start(y: int) -> np.datetime64:
    return np.datetime64(f"{y:04d}-01-01")


def _year_end(y: int) -> np.datetime64:
    return np.datetime64(f"{y:04d}-12-31")


@dataclass(frozen=True)
class Window:
    index: int
    train_start: np.datetime64
    train_end: np.datetime64
    val_start: np.datetime64
    val_end: np.datetime64
    test_start: np.datetime64
    test_end: np.datetime64

    @property
    def val_year(self) -> int:
        return int(str(self.val_start)[:4])

    @property
    def test_year(self) -> int:
        return int(str(self.test_start)[:4])

    @property
    def train_years(self) -> Tuple[int, int]:
        return int(str(self.train_start)[:4]), int(str(self.train_end)[:4])

    def describe(self) -> str:
        a, b = self.train_years
        return f"window {self.index}: train {a}-{b} / validate {self.val_year} / test {self.test_year}"

    def to_dict(self) -> dict:
        return {k: str(v) if isinstance(v, np.datetime64) else v for k, v in asdict(self).items()}


@dataclass
class WindowSchedule:
    train_start: np.datetime64
    windows: List[Window]

    def __len__(self) -> int:
        return len(self.windows)

    def __iter__(self):
        return iter(self.windows)

    def layout(self) -> List[Tuple[Tuple[int, int], int, int]]:
        """((train first year, train last year), validation year, test year) per window."""
        return [(w.train_years, w.val_year, w.test_year) for w in self.windows]

    @property
    def test_start(self) -> np.datetime64:
        return self.windows[0].test_start

    @property
    def test_end(self) -> np.datetime64:
        return self.windows[-1].test_end


def build_schedule(train_start, first_val_year: int, n_windows: int, dates=None) -> WindowSchedule:
    """Anchored windows: window k validates ``first_val_year + k - 1`` and tests the year after.

    Args:
        train_start: fixed first date of every train span.
        dates: optional bar dates; when given the data must cover every span.

    Raises:
        ScheduleError: bad arguments, or data missing for part of the schedule.
    """
    start = np.datetime64(train_start, "D")
    if n_windows < 1:
        raise ScheduleError("window count must be >= 1")
    if start >= _year_start(first_val_year):
        raise ScheduleError(f"train start {start} leaves no training data before {first_val_year}")
    windows = []
    for k in range(n_windows):
        v = first_val_year + k
        windows.append(Window(k + 1, start, _year_end(v - 1), _year_start(v), _year_end(v),
                              _year_start(v + 1), _year_end(v + 1)))
    schedule = WindowSchedule(start, windows)
    if dates is not None:
        check_coverage(schedule, dates)
    return schedule


def check_coverage(schedule: WindowSchedule, dates) -> None:
    dates = np.asarray(dates, dtype="datetime64[D]")
    slack = np.timedelta64(EDGE_SLACK_DAYS, "D")
    missing = []
    if len(dates) == 0:
        raise ScheduleError(f"no data; need {schedule.train_start} .. {schedule.test_end}")
    if dates[0] > schedule.train_start + slack:
        missing.append(f"{schedule.train_start} .. {dates[0] - 1}")
    if dates[-1] < schedule.test_end - slack:
        missing.append(f"{dates[-1] + 1} .. {schedule.test_end}")
    years = set((dates.astype("datetime64[Y]").astype(int) + 1970).tolist())
    first, last = int(str(schedule.train_start)[:4]), int(str(schedule.test_end)[:4])
    for y in range(first, last + 1):
        if y not in years and not any(m.startswith(str(y)) for m in missing):
            missing.append(f"{_year_start(y)} .. {_year_end(y)}")
    if missing:
        raise ScheduleError("data does not cover the schedule; missing " + "; ".join(missing))


# --- selection ------------------------------------------------------------------


@dataclass
class SelectionPolicy:
    fraction: float = 0.5
    radius: int = 2
    metric: str = "sharpe"

    def __post_init__(self):
        if not 0.0 < self.fraction <= 1.0:
            raise ValueError("fraction must lie in (0, 1]")
        if self.radius < 0:
            raise ValueError("radius must be >= 0")
        if self.metric not in ("sharpe", "final_balance"):
            raise ValueError(f"unknown ranking metric {self.metric!r}")


@dataclass
class GenerationRecord:
    index: int
    checkpoint: str
    sharpe: Optional[float]
    final_balance: float
    snapshot: Optional[dict] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {"index": self.index, "checkpoint": self.checkpoint, "sharpe": self.sharpe,
                "final_balance": self.final_balance}


@dataclass
class Selection:
    record: GenerationRecord
    # (generation index, metric, present) for offsets -radius..+radius, skipping 0
    neighbors: List[Tuple[int, Optional[float], bool]]
    warning: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "generation": self.record.index,
            "checkpoint": self.record.checkpoint,
            "sharpe": self.record.sharpe,
            "final_balance": self.record.final_balance,
            "neighbors": [{"generation": g, "metric": m, "present": p} for g, m, p in self.neighbors],
            "warning": self.warning,
        }


def _rank_value(rec: GenerationRecord, metric: str) -> float:
    v = getattr(rec, metric)
    return -np.inf if v is None or not np.isfinite(v) else float(v)


def select_generation(records: Sequence[GenerationRecord], policy: Optional[SelectionPolicy] = None) -> Selection:
    """Best validation metric among the later generations, with a neighbor report.

    Candidates are records with ``index >= fraction * max index``; an
    undefined metric ranks last and ties go to the lower index. The
    neighbors' metrics are reported but never veto the choice; a warning is
    attached when the chosen value exceeds both adjacent generations by
    more than a factor of two.
    """
    policy = policy or SelectionPolicy()
    if not records:
        raise SelectionError("no generation records to select from")
    top = max(r.index for r in records)
    cands = [r for r in records if r.index >= policy.fraction * top]
    if not cands:
        raise SelectionError("no eligible generations")
    best = min(cands, key=lambda r: (-_rank_value(r, policy.metric), r.index))
    by_index = {r.index: r for r in records}
    neighbors = []
    for off in range(-policy.radius, policy.radius + 1):
        if off == 0:
            continue
        g = best.index + off
        rec = by_index.get(g)
        neighbors.append((g, getattr(rec, policy.metric) if rec else None, rec is not None))
    warning = None
    val = getattr(best, policy.metric)
    adjacent = [by_index.get(best.index - 1), by_index.get(best.index + 1)]
    if val is not None and val > 0 and all(r is not None for r in adjacent):
        adj = [getattr(r, policy.metric) for r in adjacent]
        if all(a is None or val > 2.0 * a for a in adj):
            warning = f"generation {best.index} scores more than twice both adjacent generations"
    return Selection(best, neighbors, warning)


# --- per-window data ------------------------------------------------------------


@dataclass
class WindowData:
    """Row ranges ``[lo, hi)`` of one window and its scaled features."""

    window: Window
    scaler: Scaler
    X: np.ndarray
    train: Tuple[int, int]
    val: Tuple[int, int]
    test: Tuple[int, int]
    lookback: int

    def segment(self, series: MarketSeries, lo: int, hi: int) -> Segment:
        return Segment(series.dates[lo:hi], series.close[lo:hi], self.X[lo:hi])

    def eval_segment(self, series: MarketSeries, span: Tuple[int, int]) -> Segment:
        """Rows whose first decision falls on the last bar before ``span``."""
        lo, hi = span
        return self.segment(series, lo - self.lookback, hi)


def _span(dates: np.ndarray, start, end) -> Tuple[int, int]:
    lo = int(np.searchsorted(dates, np.datetime64(start, "D"), side="left"))
    hi = int(np.searchsorted(dates, np.datetime64(end, "D"), side="right"))
    return lo, hi


def prepare_window(series: MarketSeries, features: FeatureMatrix, window: Window, lookback: int) -> WindowData:
    """Fit the scaler on the train span only and locate every span's rows.

    Raises:
        ScheduleError: a span is empty or the spans overlap.
        DataError: not enough history before the first decision bar.
    """
    d = series.dates
    tr_lo, tr_hi = _span(d, window.train_start, window.train_end)
    tr_lo = max(tr_lo, features.warmup)
    va, te = _span(d, window.val_start, window.val_end), _span(d, window.test_start, window.test_end)
    for name, (lo, hi) in (("train", (tr_lo, tr_hi)), ("validation", va), ("test", te)):
        if hi <= lo:
            raise ScheduleError(f"{window.describe()}: {name} span has no bars")
    if not (tr_hi <= va[0] and va[1] <= te[0]):
        raise ScheduleError(f"{window.describe()}: spans overlap")
    if tr_hi - tr_lo <= lookback + 1:
        raise DataError(f"{window.describe()}: train span too short for lookback {lookback}")
    if va[0] - lookback < features.warmup:
        raise DataError(f"{window.describe()}: not enough history before the validation year")
    scaler = fit_scaler(features, tr_lo, tr_hi)
    if not scaler.fit_end < window.val_start or not d[tr_hi - 1] <= window.train_end:
        raise ScheduleError(f"{window.describe()}: scaler fit span leaks past the train span")
    return WindowData(window, scaler, scaler.transform(features.values), (tr_lo, tr_hi), va, te, lookback)


# --- training -------------------------------------------------------------------


@dataclass
class WalkForwardConfig:
    cycles: int = 40
    # steps per training episode; None means one year of bars
    episode_bars: Optional[int] = None
    periods_per_year: float = 252
    selection: SelectionPolicy = field(default_factory=SelectionPolicy)

    def __post_init__(self):
        if isinstance(self.selection, dict):
            self.selection = SelectionPolicy(**self.selection)
        if self.cycles < 0:
            raise ValueError("cycles must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def _validation_sharpe(curve: EquityCurve, N: float) -> Optional[float]:
    try:
        return sharpe(curve.returns(), N)
    except UndefinedMetricError:
        return None


def _episode_slices(rng: np.random.Generator, lo: int, hi: int, length: int):
    if hi - lo <= length:
        return lo, hi
    a = int(rng.integers(lo, hi - length + 1))
    return a, a + length


def _ddqn_episode(agent: DDQNAgent, env: TradingEnv, encode) -> None:
    obs = env.reset()
    s = encode(obs)
    while True:
        a = agent.act(s, train=True)
        res = env.step(a)
        s2 = None if res.done else encode(res.observation)
        agent.observe(Transition(s, a, res.reward, s2, res.done))
        if res.done:
            return
        s = s2


def _ppo_collect(agent: PPOAgent, env: TradingEnv, encode, rollout: Rollout) -> None:
    obs = env.reset()
    while True:
        s = encode(obs)
        a, logp, v = agent.act(s, train=True)
        res = env.step(a)
        rollout.add(s, a, logp, res.reward, res.done, v)
        if res.done:
            return
        obs = res.observation


def train_window(series: MarketSeries, wd: WindowData, spec: AgentSpec, env_cfg: EnvConfig,
                 wf: WalkForwardConfig, seed: int):
    """Train a fresh agent for ``wf.cycles`` cycles and score each on validation.

    A DDQN cycle is one episode; a PPO cycle collects whole episodes until
    the horizon is reached and then updates once. Episodes run on seeded
    random contiguous slices of the train span.

    Returns:
        (records, agent). Each record keeps an in-memory parameter snapshot.
    """
    rng = np.random.default_rng(seed)
    n_feat = wd.X.shape[1]
    L = env_cfg.lookback
    steps = int(wf.episode_bars or round(wf.periods_per_year))
    tr_lo, tr_hi = wd.train
    steps = min(steps, tr_hi - tr_lo - L)
    overrides = {}
    if spec.algo == "ddqn" and "eps_decay_steps" not in spec.ddqn:
        overrides["eps_decay_steps"] = max(1, wf.cycles * steps // 2)
    agent = make_agent(spec, n_feat, L, seed, overrides)
    encode = encoder_for(spec.net)
    val_env = TradingEnv(wd.eval_segment(series, wd.val), env_cfg)
    records: List[GenerationRecord] = []
    for g in range(wf.cycles):
        if spec.algo == "ddqn":
            lo, hi = _episode_slices(rng, tr_lo, tr_hi, steps + L)
            _ddqn_episode(agent, TradingEnv(wd.segment(series, lo, hi), env_cfg), encode)
        else:
            rollout = Rollout()
            while len(rollout) < max(agent.config.horizon, agent.config.minibatch):
                lo, hi = _episode_slices(rng, tr_lo, tr_hi, steps + L)
                _ppo_collect(agent, TradingEnv(wd.segment(series, lo, hi), env_cfg), encode, rollout)
            agent.update(rollout, bootstrap_value=0.0)
        agent.generation = g
        curve, _, _ = run_policy(val_env, lambda o: agent.greedy(encode(o)))
        rec = GenerationRecord(g, f"window{wd.window.index}/generation{g}",
                               _validation_sharpe(curve, wf.periods_per_year), curve.final, agent.snapshot())
        records.append(rec)
        log.debug("%s generation %d: validation sharpe %s", wd.window.describe(), g, rec.sharpe)
    return records, agent


# --- full run -------------------------------------------------------------------


@dataclass
class WindowResult:
    window: Window
    seed: int
    records: List[GenerationRecord]
    selection: Optional[Selection]
    checkpoint: Optional[dict]
    scaler: dict
    curve: EquityCurve
    trades: list
    positions: List[int]
    report: PerformanceReport

    def to_dict(self) -> dict:
        return {
            "window": self.window.to_dict(),
            "seed": self.seed,
            "scaler": self.scaler,
            "generations": [r.to_dict() for r in self.records],
            "selection": self.selection.to_dict() if self.selection else None,
            "test": {"start_equity": float(self.curve.equity[0]), "end_equity": self.curve.final,
                     "report": self.report.to_dict(), "trades": [t.to_dict() for t in self.trades]},
        }


@dataclass
class WalkForwardResult:
    label: str
    windows: List[WindowResult]
    curve: EquityCurve
    trades: list
    positions: List[int]
    report: PerformanceReport
    benchmarks: Dict[str, Tuple[SimulationResult, PerformanceReport]]
    identity_error: float

    def window_product(self) -> float:
        return float(np.prod([w.curve.final / w.curve.equity[0] for w in self.windows]))


def _train_and_select(args):
    """Worker: train one window and return its selected checkpoint (picklable I/O)."""
    series, wd, spec, env_cfg, wf, seed = args
    records, agent = train_window(series, wd, spec, env_cfg, wf, seed)
    if not records:
        return records, None, None
    sel = select_generation(records, wf.selection)
    agent.load_snapshot(sel.record.snapshot)
    agent.generation = sel.record.index
    ckpt = agent.checkpoint()
    for r in records:
        r.snapshot = None
    return records, sel, ckpt


def load_agent(ckpt: dict):
    return (DDQNAgent if ckpt["kind"] == "ddqn" else PPOAgent).from_checkpoint(ckpt)


def run_walkforward(series: MarketSeries, schedule: WindowSchedule, spec: AgentSpec, env_cfg: EnvConfig,
                    feature_spec: Optional[FeatureSpec] = None, wf: Optional[WalkForwardConfig] = None,
                    seed: int = 0, jobs: int = 1,
                    fixed_policy: Optional[Callable] = None) -> WalkForwardResult:
    """Train, select and test every window, then stitch the test years.

    Args:
        seed: master seed; window k (1-based) uses ``seed + k``.
        jobs: worker processes for window training (results do not depend on it).
        fixed_policy: observation -> action; skips training (used for reference runs).
    """
    wf = wf or WalkForwardConfig()
    features = build_features(series, feature_spec)
    check_coverage(schedule, series.dates)
    data = [prepare_window(series, features, w, env_cfg.lookback) for w in schedule]
    for a, b in zip(data, data[1:]):
        if a.test[1] != b.test[0]:
            raise ScheduleError("test spans are not contiguous")

    tasks = [(series, wd, spec, env_cfg, wf, seed + wd.window.index) for wd in data]
    if fixed_policy is not None:
        trained = [([], None, None)] * len(data)
    elif jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trained = list(pool.map(_train_and_select, tasks))
    else:
        trained = [_train_and_select(t) for t in tasks]

    encode = encoder_for(spec.net)
    position, equity = Position.FLAT, env_cfg.initial_capital
    results: List[WindowResult] = []
    for wd, (records, sel, ckpt), task in zip(data, trained, tasks):
        if fixed_policy is not None:
            policy = fixed_policy
        elif ckpt is None:
            raise SelectionError(f"{wd.window.describe()}: zero training cycles, nothing to select")
        else:
            agent = load_agent(ckpt)
            policy = (lambda ag: (lambda o: ag.greedy(encode(o))))(agent)
        env = TradingEnv(wd.eval_segment(series, wd.test), env_cfg)
        curve, trades, positions = run_policy(env, policy, position, equity)
        position, equity = env.position, env.equity
        report = full_report(curve, trades, positions, wf.periods_per_year, name=f"{spec.label}/window{wd.window.index}")
        results.append(WindowResult(wd.window, task[-1], records, sel, ckpt, wd.scaler.to_dict(),
                                    curve, trades, positions, report))

    lo, hi = stitched_rows(series, schedule)
    dates, closes = series.dates[lo:hi], series.close[lo:hi]
    positions = [p for r in results for p in r.positions]
    stitched = simulate(dates, closes, positions, env_cfg.provision, env_cfg.initial_capital)
    chained = np.concatenate([results[0].curve.equity] + [r.curve.equity[1:] for r in results[1:]])
    if not np.array_equal(stitched.curve.equity, chained):
        raise StateError("stitched equity differs from the chained window curves")
    product = env_cfg.initial_capital * float(np.prod([r.curve.final / r.curve.equity[0] for r in results]))
    identity_error = abs(stitched.curve.final - product) / product
    N = wf.periods_per_year
    report = full_report(stitched.curve, stitched.trades, stitched.positions, N, name=spec.label)
    benches = run_benchmarks(dates, closes, env_cfg, N)
    return WalkForwardResult(spec.label, results, stitched.curve, stitched.trades, stitched.positions,
                             report, benches, identity_error)


def stitched_rows(series: MarketSeries, schedule: WindowSchedule) -> Tuple[int, int]:
    """Rows ``[lo, hi)`` of the stitched test period, starting at its first decision bar."""
    lo, _ = _span(series.dates, schedule.test_start, schedule.test_end)
    _, hi = _span(series.dates, schedule.test_start, schedule.test_end)
    if lo < 1 or hi <= lo:
        raise ScheduleError("no bars before or inside the test period")
    return lo - 1, hi


def run_benchmarks(dates, closes, env_cfg: EnvConfig, N: float) -> Dict[str, Tuple[SimulationResult, PerformanceReport]]:
    """Buy-and-hold and perfect-annual over the same bars as the stitched test curve."""
    out = {}
    for name, fn, kind in (("buy_and_hold", buy_and_hold, "buy-and-hold"),
                           ("perfect_annual", perfect_annual, "perfect-annual")):
        res = fn(dates, closes, BenchmarkSpec(kind, env_cfg.provision, env_cfg.initial_capital))
        out[name] = (res, full_report(res.curve, res.trades, res.positions, N, name=name))
    return out

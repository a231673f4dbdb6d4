"""Three-action trading environment with full reinvestment and opening provisions.

Actions and positions share one encoding: 0 Long, 1 Short, 2 Flat. A
decision taken at bar t's close earns the return of bar t+1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import ConfigError, DataError, StateError
from .features.pipeline import Observation, observation_at
from .metrics import EquityCurve


class Position(enum.IntEnum):
    LONG = 0
    SHORT = 1
    FLAT = 2

    @property
    def sign(self) -> int:
        return (1, -1, 0)[self]


SIGN = np.array([1.0, -1.0, 0.0])


@dataclass
class EnvConfig:
    provision: float = 0.0001
    reward_scale: float = 100.0
    lookback: int = 20
    initial_capital: float = 10_000.0

    def __post_init__(self):
        if self.provision < 0:
            raise ConfigError("provision rate must be >= 0")
        if self.reward_scale <= 0:
            raise ConfigError("reward scale must be positive")
        if self.lookback < 1:
            raise ConfigError("lookback must be >= 1")
        if self.initial_capital <= 0:
            raise ConfigError("initial capital must be positive")


def provision_charge(equity: float, rate: float) -> float:
    if rate < 0:
        raise ConfigError("provision rate must be >= 0")
    return rate * equity


@dataclass
class Trade:
    open_date: np.datetime64
    close_date: Optional[np.datetime64]
    direction: Position
    entry_equity: float
    exit_equity: Optional[float] = None
    provision: float = 0.0
    bars: int = 0
    # opened before the span this log covers (position carried in)
    carried: bool = False

    def to_dict(self) -> dict:
        return {
            "open": str(self.open_date), "close": str(self.close_date), "direction": self.direction.name,
            "entry_equity": self.entry_equity, "exit_equity": self.exit_equity,
            "provision": self.provision, "bars": self.bars, "carried": self.carried,
        }


class Ledger:
    """Equity, position and trade bookkeeping shared by the env and ``simulate``."""

    def __init__(self, start_date, equity: float, rate: float, position: int = Position.FLAT):
        self.rate = rate
        self.equity = float(equity)
        self.position = Position(position)
        self.dates = [np.datetime64(start_date, "D")]
        self.curve = [self.equity]
        self.positions: List[int] = []
        self.trades: List[Trade] = []
        self.provisions: List[float] = []
        self.open_trade: Optional[Trade] = None
        if self.position != Position.FLAT:
            self.open_trade = Trade(self.dates[0], None, self.position, self.equity, carried=True)
            self.trades.append(self.open_trade)

    def step(self, action: int, rho: float, date):
        """Apply ``action`` at the current bar and realize return ``rho`` to ``date``.

        Returns:
            (opened, charge, signed_return).
        """
        new = Position(action)
        here = self.dates[-1]
        opened = new != Position.FLAT and new != self.position
        if new != self.position and self.open_trade is not None:
            self._close(here)
        charge = provision_charge(self.equity, self.rate) if opened else 0.0
        if opened:
            self.open_trade = Trade(here, None, new, self.equity, provision=charge)
            self.trades.append(self.open_trade)
        self.position = new
        signed = SIGN[new] * rho
        self.equity = self.equity * (1.0 + signed) - charge
        if self.open_trade is not None:
            self.open_trade.bars += 1
        self.dates.append(np.datetime64(date, "D"))
        self.curve.append(self.equity)
        self.positions.append(int(new))
        self.provisions.append(charge)
        return opened, charge, signed

    def _close(self, date):
        t = self.open_trade
        t.close_date = date
        t.exit_equity = self.equity
        self.open_trade = None
        if t.carried and t.bars == 0:
            # carried in and closed before holding a single bar here
            self.trades = [x for x in self.trades if x is not t]

    def close_out(self):
        if self.open_trade is not None:
            self._close(self.dates[-1])

    def equity_curve(self) -> EquityCurve:
        return EquityCurve(np.array(self.dates), np.array(self.curve), self.curve[0])


@dataclass
class SimulationResult:
    curve: EquityCurve
    trades: List[Trade]
    positions: List[int]
    provisions: List[float]


def simulate(dates, closes, actions: Sequence[int], rate: float, capital: float,
             initial_position: int = Position.FLAT) -> SimulationResult:
    """Replay a fixed action sequence; ``actions[t]`` is decided at bar t.

    Needs ``len(actions) == len(closes) - 1``. Open trades are closed out
    at the last bar.
    """
    closes = np.asarray(closes, dtype=np.float64)
    dates = np.asarray(dates, dtype="datetime64[D]")
    if len(actions) != len(closes) - 1:
        raise DataError(f"need {len(closes) - 1} actions for {len(closes)} bars, got {len(actions)}")
    ledger = Ledger(dates[0], capital, rate, initial_position)
    for t, a in enumerate(actions):
        ledger.step(a, closes[t + 1] / closes[t] - 1.0, dates[t + 1])
    ledger.close_out()
    return SimulationResult(ledger.equity_curve(), ledger.trades, ledger.positions, ledger.provisions)


@dataclass
class Segment:
    """Bars an environment runs over: dates, closes and scaled feature rows.

    Decisions are taken from row ``lookback - 1`` onwards, so a segment of
    n rows yields ``n - lookback`` steps.
    """

    dates: np.ndarray
    closes: np.ndarray
    features: np.ndarray

    def __post_init__(self):
        self.dates = np.asarray(self.dates, dtype="datetime64[D]")
        self.closes = np.asarray(self.closes, dtype=np.float64)
        self.features = np.asarray(self.features, dtype=np.float64)
        if not (len(self.dates) == len(self.closes) == len(self.features)):
            raise DataError("segment columns differ in length")

    def __len__(self) -> int:
        return len(self.closes)


@dataclass
class StepResult:
    observation: Optional[Observation]
    reward: float
    done: bool
    info: dict = field(default_factory=dict)


class TradingEnv:
    def __init__(self, segment: Segment, config: Optional[EnvConfig] = None):
        self.config = config or EnvConfig()
        self.segment = segment
        self.ledger: Optional[Ledger] = None
        self.t = -1
        self.done = True

    @property
    def first_bar(self) -> int:
        return self.config.lookback - 1

    @property
    def n_steps(self) -> int:
        return len(self.segment) - self.config.lookback

    def reset(self, initial_position: int = Position.FLAT, initial_equity: Optional[float] = None) -> Observation:
        """Start at the first decidable bar.

        Args:
            initial_position: position carried into the segment (Flat by default).
            initial_equity: starting equity; defaults to the configured capital.
        """
        if len(self.segment) <= self.config.lookback:
            raise DataError(f"segment of {len(self.segment)} bars is too short for lookback {self.config.lookback}")
        if not np.all(np.isfinite(self.segment.features)):
            raise DataError("segment features contain non-finite values")
        self.t = self.first_bar
        equity = self.config.initial_capital if initial_equity is None else initial_equity
        self.ledger = Ledger(self.segment.dates[self.t], equity, self.config.provision, initial_position)
        self.done = False
        return self.observation()

    @property
    def position(self) -> Position:
        return self.ledger.position

    @property
    def equity(self) -> float:
        return self.ledger.equity

    def observation(self) -> Observation:
        return observation_at(self.segment.features, self.t, self.ledger.position, self.config.lookback)

    def step(self, action: int) -> StepResult:
        if self.done:
            raise StateError("step() after the episode finished; call reset()")
        c = self.segment.closes
        rho = c[self.t + 1] / c[self.t] - 1.0
        opened, charge, signed = self.ledger.step(action, rho, self.segment.dates[self.t + 1])
        reward = self.config.reward_scale * (signed - (self.config.provision if opened else 0.0))
        self.t += 1
        self.done = self.t >= len(self.segment) - 1
        if self.done:
            self.ledger.close_out()
        info = {"equity": self.ledger.equity, "position": int(self.ledger.position),
                "provision": charge, "opened": opened, "return": rho}
        return StepResult(None if self.done else self.observation(), reward, self.done, info)

    def equity_curve(self) -> EquityCurve:
        return self.ledger.equity_curve()

    @property
    def trades(self) -> List[Trade]:
        return self.ledger.trades


def run_policy(env: TradingEnv, policy: Callable[[Observation], int], initial_position: int = Position.FLAT,
               initial_equity: Optional[float] = None):
    """Roll a deterministic policy over the whole segment.

    Returns:
        (EquityCurve, trades, positions) where positions[k] is held over step k.
    """
    obs = env.reset(initial_position, initial_equity)
    while True:
        res = env.step(policy(obs))
        if res.done:
            break
        obs = res.observation
    return env.equity_curve(), list(env.trades), list(env.ledger.positions)

"""Simulation of the game under stationary pure strategies.

Randomness comes from a counter-based generator: the uniform used by
trajectory k at stage t is a hash of ``(mix(seed) ^ k, t)``, so results do not
depend on how trajectories are batched.  Successor states are drawn by
inverse CDF in the fixed order absorb, swap, stay.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import csvio
from .core import CompactGame, GameState, check_action, check_discount
from .errors import DomainError

TAIL_TOL = 1e-10
ABSORPTION_WARN = 0.10

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    # SplitMix64 finaliser
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def trajectory_keys(seed: int, index: np.ndarray) -> np.ndarray:
    # the seed is hashed before the xor: a bare seed ^ k only permutes the
    # trajectories of a batch whose size is a multiple of a power of two
    with np.errstate(over="ignore"):
        base = _mix(np.asarray([seed & _MASK64], dtype=np.uint64) + _GAMMA)[0]
    return _mix(base ^ np.asarray(index, dtype=np.uint64))


def uniforms(keys: np.ndarray, t: int) -> np.ndarray:
    """Uniforms in [0, 1) for stage t (1-based) of the given trajectories."""
    with np.errstate(over="ignore"):
        z = _mix(keys + np.uint64(t) * _GAMMA)
    return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


class Stationary(NamedTuple):
    """A stationary pure strategy: one action per nonabsorbing state."""

    plus: float
    minus: float

    @classmethod
    def constant(cls, action: float) -> "Stationary":
        return cls(action, action)

    @classmethod
    def of(cls, spec) -> "Stationary":
        if isinstance(spec, Stationary):
            return spec
        if isinstance(spec, dict):
            return cls(spec[GameState.OMEGA_PLUS], spec[GameState.OMEGA_MINUS])
        return cls.constant(float(spec))


def horizon_for(lam: float, tail_tol: float = TAIL_TOL) -> int:
    """Smallest H with (1 - lam)^H <= tail_tol."""
    return max(1, math.ceil(math.log(tail_tol) / math.log1p(-lam)))


@dataclass(frozen=True)
class SimConfig:
    lam: float
    strategy_p1: Stationary
    strategy_p2: Stationary
    trajectories: int = 10_000
    start: GameState = GameState.OMEGA_PLUS
    horizon: int | None = None
    seed: int = 0
    tail_tol: float = TAIL_TOL

    def __post_init__(self):
        check_discount(self.lam)
        object.__setattr__(self, "strategy_p1", Stationary.of(self.strategy_p1))
        object.__setattr__(self, "strategy_p2", Stationary.of(self.strategy_p2))
        for a in (*self.strategy_p1, *self.strategy_p2):
            check_action(a)
        if self.trajectories < 1:
            raise DomainError("need at least one trajectory")
        if self.horizon is not None and self.horizon < 1:
            raise DomainError("horizon must be positive")
        if not 0 <= self.seed <= _MASK64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        if not 0.0 < self.tail_tol < 1.0:
            raise DomainError("tail_tol must lie in (0, 1)")

    @property
    def resolved_horizon(self) -> int:
        return self.horizon if self.horizon is not None else horizon_for(self.lam, self.tail_tol)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["start"] = self.start.value
        d["strategy_p1"] = list(self.strategy_p1)
        d["strategy_p2"] = list(self.strategy_p2)
        d["horizon"] = self.resolved_horizon
        return d


class SimReport(NamedTuple):
    mean_discounted_payoff: float
    std_error: float
    absorption_fraction: float
    mean_absorption_time: float
    occupation_plus_fraction: float
    trajectories: int
    horizon: int

    FIELDS = ("mean_discounted_payoff", "std_error", "absorption_fraction",
              "mean_absorption_time", "occupation_plus_fraction",
              "trajectories", "horizon")

    def csv_row(self) -> str:
        return ",".join(csvio.fmt(v) for v in self)


def _stage_laws(game: CompactGame, cfg: SimConfig):
    """(p_absorb, p_swap) in omega+ and omega- under the stationary pair."""
    out = []
    for state, x, y in ((GameState.OMEGA_PLUS, cfg.strategy_p1.plus, cfg.strategy_p2.plus),
                        (GameState.OMEGA_MINUS, cfg.strategy_p1.minus, cfg.strategy_p2.minus)):
        try:
            kv = game.kernel(x, y)
        except Exception as exc:
            raise DomainError(f"kernel evaluation failed (trajectory 0, {state.value}): {exc}") from exc
        if state is GameState.OMEGA_PLUS:
            pa, ps = float(kv.p_star_plus), float(kv.p_plus)
        else:
            pa, ps = float(kv.p_star_minus), float(kv.p_minus)
        if not (pa >= -1e-12 and ps >= -1e-12 and pa + ps <= 1 + 1e-12):
            raise DomainError(f"kernel at ({x}, {y}) in {state.value} is not a "
                              f"probability law: absorb {pa}, swap {ps}")
        out.append((max(pa, 0.0), max(ps, 0.0)))
    return out


def simulate(game: CompactGame, cfg: SimConfig) -> SimReport:
    """Estimate the discounted payoff sum_t lam (1 - lam)^(t-1) g_t.

    The sum is truncated at the horizon; once a trajectory is absorbed its
    remaining payoff up to the horizon is added in closed form.
    """
    lam, H, N = cfg.lam, cfg.resolved_horizon, cfg.trajectories
    q = 1.0 - lam
    tail_h = q ** H
    if cfg.start.absorbing:
        sign = 1.0 if cfg.start is GameState.ABS_PLUS else -1.0
        return SimReport(sign * (1.0 - tail_h), 0.0, 1.0, 1.0, float("nan"), N, H)

    (a_p, s_p), (a_m, s_m) = _stage_laws(game, cfg)
    absorb = np.array([a_p, a_m])
    move = np.array([a_p + s_p, a_m + s_m])
    gain = np.array([1.0, -1.0])

    payoff = np.zeros(N)
    absorbed_at = np.zeros(N, dtype=np.int64)
    idx = np.arange(N)
    keys = trajectory_keys(cfg.seed, idx)
    state = np.full(N, 0 if cfg.start is GameState.OMEGA_PLUS else 1, dtype=np.int64)
    plus_time = 0
    alive_time = 0
    weight = lam
    for t in range(1, H + 1):
        if idx.size == 0:
            break
        payoff[idx] += weight * gain[state]
        alive_time += idx.size
        plus_time += int(np.count_nonzero(state == 0))
        weight *= q
        u = uniforms(keys, t)
        hit = u < absorb[state]
        if hit.any():
            # value of the rest of the horizon in the absorbing state
            payoff[idx[hit]] += (q ** t - tail_h) * gain[state[hit]]
            absorbed_at[idx[hit]] = t + 1
        swap = ~hit & (u < move[state])
        state = np.where(swap, 1 - state, state)
        keep = ~hit
        idx, keys, state = idx[keep], keys[keep], state[keep]

    done = absorbed_at > 0
    mean = float(np.sum(payoff) / N)
    se = float(np.std(payoff, ddof=1) / math.sqrt(N)) if N > 1 else 0.0
    n_abs = int(np.count_nonzero(done))
    mean_time = float(np.sum(absorbed_at[done]) / n_abs) if n_abs else float("nan")
    occ = plus_time / alive_time if alive_time else float("nan")
    return SimReport(mean, se, n_abs / N, mean_time, occ, N, H)


class OccupationWarning(UserWarning):
    """Absorption inside the occupation window is too frequent for the
    invariant-measure heuristic to apply."""


class OccupationResult(NamedTuple):
    empirical: float
    predicted: float
    absorption_fraction: float
    window: int


def occupation_window(lam: float) -> int:
    return math.ceil(lam ** (-2.0 / 3.0))


def occupation_check(game: CompactGame, lam: float, cfg: SimConfig) -> OccupationResult:
    """Share of nonabsorbed stages spent in omega+ during the first
    ceil(lam^(-2/3)) stages, against p_-(lam, lam) / (p_-(lam, lam) + p_+(lam, lam)).
    """
    lam = check_discount(lam)
    lam_pair = Stationary.constant(lam)
    if cfg.strategy_p1 != lam_pair or cfg.strategy_p2 != lam_pair or cfg.lam != lam:
        raise DomainError("occupation_check needs both strategies equal to lam")
    window = occupation_window(lam)
    rep = simulate(game, replace(cfg, horizon=window))
    kv = game.kernel(lam, lam)
    pp, pm = float(kv.p_plus), float(kv.p_minus)
    predicted = pm / (pm + pp)
    if rep.absorption_fraction > ABSORPTION_WARN:
        warnings.warn(f"{rep.absorption_fraction:.1%} of trajectories absorbed within "
                      f"the {window}-stage window", OccupationWarning, stacklevel=2)
    return OccupationResult(rep.occupation_plus_fraction, predicted,
                            rep.absorption_fraction, window)


def append_report(path, report: SimReport, cfg: SimConfig, label: str = "") -> None:
    """Append one report row to a results file, creating its header."""
    path = Path(path)
    conf = cfg.to_dict()
    h = csvio.config_hash(conf)
    new = not path.exists() or path.stat().st_size == 0
    with open(path, "a", newline="\n", encoding="utf-8") as fh:
        if new:
            fh.write("# simulation reports; config_hash = sha256 of the row's resolved SimConfig\n")
            fh.write(",".join(("config_hash", "label") + SimReport.FIELDS) + "\n")
        fh.write(f"{h},{csvio.fmt(label)},{report.csv_row()}\n")

"""States, payoffs, values and the closed-form value map of the game."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError
from .families import ACTION_BOUND, SDProfile
from .transitions import TransitionKernel, build_kernel


class GameState(enum.Enum):
    OMEGA_PLUS = "omega+"
    OMEGA_MINUS = "omega-"
    ABS_PLUS = "1*"
    ABS_MINUS = "-1*"

    @property
    def absorbing(self) -> bool:
        return self in (GameState.ABS_PLUS, GameState.ABS_MINUS)


_PAYOFF = {
    GameState.OMEGA_PLUS: 1.0,
    GameState.ABS_PLUS: 1.0,
    GameState.OMEGA_MINUS: -1.0,
    GameState.ABS_MINUS: -1.0,
}


def payoff(state: GameState) -> float:
    """Stage payoff; it does not depend on the actions."""
    return _PAYOFF[state]


def check_action(x: float) -> float:
    x = float(x)
    if not 0.0 <= x <= ACTION_BOUND:
        raise DomainError(f"action {x!r} outside [0, 1/16]")
    return x


def check_discount(lam: float, upper: float = ACTION_BOUND) -> float:
    """Validate a discount factor in (0, upper]; upper is 1/16 unless a
    caller explicitly works outside the class (e.g. lam = 1/i, i < 16)."""
    lam = float(lam)
    if not 0.0 < lam <= upper:
        raise DomainError(f"discount {lam!r} outside (0, {upper:g}]")
    return lam


class ValuePair(NamedTuple):
    """Values at omega+ and omega-; absorbing states are worth +-1."""

    v_plus: float
    v_minus: float

    def distance(self, other) -> float:
        return max(abs(self.v_plus - other[0]), abs(self.v_minus - other[1]))


@dataclass(frozen=True)
class CompactGame:
    kernel: TransitionKernel
    profile: SDProfile | None = field(default=None, repr=False)
    action_bound: float = ACTION_BOUND

    @classmethod
    def from_profile(cls, profile: SDProfile, kernel: TransitionKernel | None = None):
        return cls(kernel if kernel is not None else build_kernel(profile), profile)


def closed_form_value(profile: SDProfile, lam: float) -> ValuePair:
    """(s(lam) + d(lam), s(lam) - d(lam))."""
    lam = check_discount(lam)
    s = float(profile.s(lam))
    d = float(profile.d(lam))
    return ValuePair(s + d, s - d)


def closed_form_values(profile: SDProfile, lams) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised closed form over an array of discounts."""
    lams = np.asarray(lams, dtype=float)
    if np.any(lams <= 0.0) or np.any(lams > ACTION_BOUND):
        raise DomainError("discounts must lie in (0, 1/16]")
    s, d = profile.s(lams), profile.d(lams)
    return s + d, s - d


def equalizing_residuals(game: CompactGame, lam: float, opponent_grid) -> float:
    """Largest violation of the four one-stage equations at lam.

    For each opponent action a in the grid, checks that Player 1 playing lam
    against a, and Player 2 playing lam against a, both reproduce the
    closed-form value in omega+ and omega-.  The residual of each equation,
    ``lam g + (1 - lam) E f - f``, is evaluated as
    ``lam (g - f) + (1 - lam) [p_star (a - f) + p (f_other - f)]``.
    """
    if game.profile is None:
        raise DomainError("equalizing_residuals needs the game's profile")
    lam = check_discount(lam)
    grid = np.asarray(opponent_grid, dtype=float)
    if np.any(grid < 0.0) or np.any(grid > ACTION_BOUND):
        raise DomainError("opponent grid must lie in [0, 1/16]")
    vp, vm = closed_form_value(game.profile, lam)
    worst = 0.0
    for kv in (game.kernel(lam, grid), game.kernel(grid, lam)):
        r_plus = lam * (1 - vp) + (1 - lam) * (kv.p_star_plus * (1 - vp)
                                               + kv.p_plus * (vm - vp))
        r_minus = lam * (-1 - vm) + (1 - lam) * (kv.p_star_minus * (-1 - vm)
                                                 + kv.p_minus * (vp - vm))
        worst = max(worst, float(np.max(np.abs(r_plus))), float(np.max(np.abs(r_minus))))
    return worst

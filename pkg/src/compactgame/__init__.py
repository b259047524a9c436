"""A compact stochastic game whose discounted and n-stage values oscillate.

Four states: omega+ and omega- (payoff +1 and -1) and two absorbing states
1* and -1*.  Both players pick actions in [0, 1/16], and transitions are built
from an (s, d) profile so that ``v_lam = (s + d, s - d)`` with the pure action
lam equalizing for both players.
"""

from .core import (CompactGame, GameState, ValuePair, closed_form_value,
                   closed_form_values, equalizing_residuals, payoff)
from .errors import (ConvergenceError, DegenerateSystemError, DomainError,
                     InfeasibleProfileError)
from .families import (Family, SDProfile, bound_certificate, constant, custom,
                       make_profile, sinlog, sinloglog, value_derivative, zero)
from .montecarlo import SimConfig, SimReport, Stationary, occupation_check, simulate
from .solvers import (FiniteBKGame, GridGame, check_transfer, shapley_apply,
                      solve_discounted, solve_finite_bk, solve_nstage)
from .transitions import KernelValues, build_kernel, f1, f2, scan_feasibility

__all__ = [
    "CompactGame", "GameState", "ValuePair", "closed_form_value", "closed_form_values",
    "equalizing_residuals", "payoff", "ConvergenceError", "DegenerateSystemError",
    "DomainError", "InfeasibleProfileError", "Family", "SDProfile", "bound_certificate",
    "constant", "custom", "make_profile", "sinlog", "sinloglog", "value_derivative", "zero",
    "SimConfig", "SimReport", "Stationary", "occupation_check", "simulate", "FiniteBKGame",
    "GridGame", "check_transfer", "shapley_apply", "solve_discounted", "solve_finite_bk",
    "solve_nstage", "KernelValues", "build_kernel", "f1", "f2", "scan_feasibility",
]

"""Grid solvers for the discounted and n-stage values, and the finite
Stay/Quit game.

Nothing here uses the closed-form values; they serve only as oracles in
tests and in :func:`check_transfer`.

Values are carried internally as ``(mean, half_gap)``, i.e.
``v(omega+-) = mean +- half_gap``.  For small lam the half gap is orders
of magnitude below the resolution of ``v(omega+)`` itself, and every
quantity the solvers compare is a combination of the two that would
otherwise cancel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .core import CompactGame, ValuePair, check_discount, closed_form_value
from .errors import ConvergenceError, DomainError
from .families import ACTION_BOUND, SDProfile, value_derivative
from .transitions import KernelValues

DEFAULT_GRID_SIZE = 129
GAP_WARN = 1e-12
# Below this the grid game is not resolvable in double precision: entries of
# the equalizing column cancel terms of size sqrt(x lam) down to O(lam).
MIN_SOLVER_DISCOUNT = 1e-20
_GEO_FLOOR = 1e-12


def default_action_grid(size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """0, a geometric ladder from 1e-12, and a uniform comb, merged."""
    if size < 3:
        raise DomainError("grid size must be at least 3")
    n_geo = size // 2
    m = size - n_geo
    pts = np.concatenate([[0.0], np.geomspace(_GEO_FLOOR, ACTION_BOUND, n_geo),
                          ACTION_BOUND * np.arange(1, m + 1) / m])
    return np.unique(pts)


@dataclass(frozen=True)
class GridGame:
    """The compact game restricted to a finite action grid (same for both
    players), with kernel matrices ``P[i, j]`` cached."""

    actions: np.ndarray
    game: CompactGame = field(repr=False)
    P: KernelValues = field(repr=False)

    @classmethod
    def build(cls, game: CompactGame, size: int = DEFAULT_GRID_SIZE, actions=None):
        acts = default_action_grid(size) if actions is None else np.asarray(actions, float)
        acts = np.unique(acts)
        if acts.size == 0:
            raise DomainError("empty action grid")
        if acts[0] < 0.0 or acts[-1] > ACTION_BOUND:
            raise DomainError("grid actions must lie in [0, 1/16]")
        X, Y = np.meshgrid(acts, acts, indexing="ij")
        return cls(acts, game, game.kernel(X, Y))

    def with_actions(self, *extra: float) -> "GridGame":
        new = [x for x in extra if not self.contains(x)]
        if not new:
            return self
        return GridGame.build(self.game, actions=np.concatenate([self.actions, new]))

    def with_discount(self, lam: float) -> "GridGame":
        """Insert lam exactly; it is the equalizing action of the lam-game."""
        return self.with_actions(check_discount(lam))

    def contains(self, x: float) -> bool:
        return bool(np.any(self.actions == x))

    def __len__(self):
        return self.actions.size


class Backup(NamedTuple):
    """One Shapley step: upper value (min-max), lower value (max-min)."""

    value: ValuePair
    lower: ValuePair
    duality_gap: float

    @property
    def gap_warning(self) -> bool:
        return self.duality_gap > GAP_WARN


def _advantages(P: KernelValues, lam: float, gaps):
    """Entry-wise ``M[i, j] - f(omega)`` for both nonabsorbing states."""
    a, b, g = gaps
    stay_p = lam + (1 - lam) * P.p_star_plus
    stay_m = lam + (1 - lam) * P.p_star_minus
    dp = stay_p * a - (1 - lam) * P.p_plus * g
    dm = (1 - lam) * P.p_minus * g - stay_m * b
    return dp, dm


def _upper_lower(D: np.ndarray) -> tuple[float, float]:
    # rows: Player 1 (maximiser), columns: Player 2
    return float(D.max(axis=0).min()), float(D.min(axis=1).max())


def _backup(P, lam, gaps):
    dp, dm = _advantages(P, lam, gaps)
    up_p, lo_p = _upper_lower(dp)
    up_m, lo_m = _upper_lower(dm)
    return (up_p, up_m), (lo_p, lo_m), max(up_p - lo_p, up_m - lo_m)


def _gaps(f) -> tuple[float, float, float]:
    return 1.0 - f[0], 1.0 + f[1], f[0] - f[1]


def _shift(gaps, up):
    a, b, g = gaps
    return a - up[0], b + up[1], g + (up[0] - up[1])


def _pair(gaps) -> ValuePair:
    return ValuePair(1.0 - gaps[0], gaps[1] - 1.0)


def shapley_apply(grid: GridGame, lam: float, f) -> Backup:
    """Apply the discounted Shapley operator (pure actions on the grid).

    For each nonabsorbing state the stage matrix is
    ``lam g + (1 - lam) [p_star a + p f(other) + (1 - p_star - p) f(self)]``
    with a = +-1 the absorbing value; the returned value is its min-max and
    ``lower`` its max-min.  ``lam`` may exceed 1/16 (up to 1).
    """
    lam = check_discount(lam, upper=1.0)
    up, lo, gap = _backup(grid.P, lam, _gaps(f))
    return Backup(ValuePair(f[0] + up[0], f[1] + up[1]),
                  ValuePair(f[0] + lo[0], f[1] + lo[1]), gap)


def _pair_value(P: KernelValues, lam, ip, jp, im, jm):
    """Gaps of the stationary pure profile (ip, jp) in omega+, (im, jm) in
    omega-, from the 2x2 linear system scaled by its diagonal."""
    ps, p = P.p_star_plus[ip, jp], P.p_plus[ip, jp]
    qs, q = P.p_star_minus[im, jm], P.p_minus[im, jm]
    a1 = lam + (1 - lam) * (ps + p)
    a2 = lam + (1 - lam) * (qs + q)
    e1, r1 = (lam + (1 - lam) * ps) / a1, (1 - lam) * p / a1
    e2, r2 = (lam + (1 - lam) * qs) / a2, (1 - lam) * q / a2
    det = e1 + e2 - e1 * e2
    return (float(2 * e2 * r1 / det), float(2 * e1 * r2 / det),
            float(2 * e1 * e2 / det))


class DiscountedSolution(NamedTuple):
    value: ValuePair
    half_gap: float
    residual: float
    duality_gap: float
    iterations: int
    grid: GridGame

    @property
    def gap_warning(self) -> bool:
        return self.duality_gap > GAP_WARN


def _strategy_iteration(P, lam, max_iter):
    """Hoffman-Karp iteration on Player 2's stationary pure strategy with the
    min-max (Player 2 commits first) stage operator.  Returns (gaps,
    iterations)."""
    # switch only on improvements above rounding noise, else ties cycle
    eps = max(64.0 * np.finfo(float).eps * lam, rounding_floor(lam))
    gaps = (1.0, 1.0, 0.0)
    dp, dm = _advantages(P, lam, gaps)
    jp, jm = int(dp.max(axis=0).argmin()), int(dm.max(axis=0).argmin())
    ip, im = int(dp[:, jp].argmax()), int(dm[:, jm].argmax())
    it = 0
    while it < max_iter:
        # Player 1 best response to (jp, jm): policy iteration on the MDP
        while it < max_iter:
            it += 1
            gaps = _pair_value(P, lam, ip, jp, im, jm)
            dp, dm = _advantages(P, lam, gaps)
            changed = False
            k = int(dp[:, jp].argmax())
            if dp[k, jp] > dp[ip, jp] + eps:
                ip, changed = k, True
            k = int(dm[:, jm].argmax())
            if dm[k, jm] > dm[im, jm] + eps:
                im, changed = k, True
            if not changed:
                break
        else:
            break
        changed = False
        cp, cm = dp.max(axis=0), dm.max(axis=0)
        k = int(cp.argmin())
        if cp[k] < cp[jp] - eps:
            jp, ip, changed = k, int(dp[:, k].argmax()), True
        k = int(cm.argmin())
        if cm[k] < cm[jm] - eps:
            jm, im, changed = k, int(dm[:, k].argmax()), True
        if not changed:
            return gaps, it
    raise ConvergenceError("strategy iteration did not settle",
                           last_iterate=_pair(gaps))


def rounding_floor(lam: float) -> float:
    """Smallest Shapley step that double precision can certify at lam.

    Entries in the equalizing row and column carry terms of size about
    sqrt(lam); an unrepresentable fixed point leaves residuals of a few ulps
    of those.  Only binds below lam ~ 1e-11 with the default tolerance, and
    passes lam itself near 1e-28, which is why :data:`MIN_SOLVER_DISCOUNT`
    exists.
    """
    return 64.0 * np.finfo(float).eps * math.sqrt(lam)


def solve_discounted(grid: GridGame, lam: float, tol: float = 1e-10,
                     max_iter: int = 100_000, method: str = "strategy",
                     insert_lambda: bool = True) -> DiscountedSolution:
    """Fixed point of :func:`shapley_apply` on the grid.

    Stops once the Shapley step is at most ``tol * lam`` in sup norm (or
    :func:`rounding_floor`, whichever is larger), which bounds the distance
    to the fixed point by ``tol``.  ``method="picard"`` iterates the operator
    from (0, 0); the default first runs strategy iteration (Picard needs
    O(1/lam) steps) and then confirms with Picard steps.  With
    ``insert_lambda`` the discount is added to the grid.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    lam = check_discount(lam, upper=1.0)
    if lam < MIN_SOLVER_DISCOUNT:
        raise DomainError(f"discount {lam!r} below the solver floor "
                          f"{MIN_SOLVER_DISCOUNT:g}")
    if insert_lambda and lam <= ACTION_BOUND:
        grid = grid.with_discount(lam)
    P = grid.P
    gaps, it = (1.0, 1.0, 0.0), 0
    if method == "strategy":
        gaps, it = _strategy_iteration(P, lam, max_iter)
    elif method != "picard":
        raise DomainError(f"unknown method {method!r}")
    target = max(tol * lam, rounding_floor(lam))
    while True:
        up, lo, gap = _backup(P, lam, gaps)
        step = max(abs(up[0]), abs(up[1]))
        if step <= target:
            break
        if it >= max_iter:
            raise ConvergenceError(
                f"no convergence after {it} iterations (step {step:.3e})",
                last_iterate=_pair(gaps), step=step)
        gaps = _shift(gaps, up)
        it += 1
    return DiscountedSolution(_pair(gaps), 0.5 * gaps[2], step, gap, it, grid)


class NStageSolution(NamedTuple):
    n: int
    value: ValuePair
    max_duality_gap: float


def nstage_values(grid: GridGame, ns: Sequence[int]) -> dict[int, NStageSolution]:
    """Run the unnormalised recursion once up to max(ns), recording each n.

    ``U_k(w) = g(w) + val[E U_{k-1}]`` with ``U_0 = 0``; absorbing states
    carry ``U_k(1*) = k``, ``U_k(-1*) = -k``.  The stage value is the grid
    min-max; the recorded duality gap is the largest stage gap seen.
    """
    ns = sorted({int(n) for n in ns})
    if not ns or ns[0] < 1:
        raise DomainError("n must be a positive integer")
    P = grid.P
    up_ = 0.0
    um_ = 0.0
    worst = 0.0
    out = {}
    want = set(ns)
    for k in range(1, ns[-1] + 1):
        a = k - 1.0
        dp = P.p_star_plus * (a - up_) + P.p_plus * (um_ - up_)
        dm = P.p_star_minus * (-a - um_) + P.p_minus * (up_ - um_)
        hp, lp = _upper_lower(dp)
        hm, lm = _upper_lower(dm)
        worst = max(worst, hp - lp, hm - lm)
        up_, um_ = 1.0 + up_ + hp, -1.0 + um_ + hm
        if k in want:
            out[k] = NStageSolution(k, ValuePair(up_ / k, um_ / k), worst)
    return out


def solve_nstage(grid: GridGame, n: int) -> NStageSolution:
    """Value of the n-stage game on the grid (average of n stage payoffs)."""
    return nstage_values(grid, [n])[n]


# ---------------------------------------------------------------------------
# v_n against v_{1/n}

class TransferRow(NamedTuple):
    n: int
    v_n: ValuePair | None
    w_n: ValuePair | None
    distance: float
    neyman_bound: float
    grid_slack: float
    violated: bool
    max_duality_gap: float
    note: str = ""


@dataclass(frozen=True)
class TransferTable:
    rows: tuple[TransferRow, ...]
    bound_vanishes: bool
    grid_size: int

    def computed(self):
        return [r for r in self.rows if not r.note]


def derivative_screen(profile: SDProfile) -> bool:
    """Whether lam |dv/dlam| visibly vanishes along lam = 10^-k, k = 2..300.

    Heuristic stand-in for the o(1/lam) condition: the tail block k >= 250
    must sit below 5% of the overall maximum.
    """
    ks = np.arange(2, 301)
    lams = 10.0 ** (-ks.astype(float))
    scaled = np.array([lam * max(abs(a) for a in value_derivative(profile, lam))
                       for lam in lams])
    return bool(scaled[ks >= 250].max() <= 0.05 * scaled.max())


def _neyman_bounds(profile: SDProfile, grid: GridGame, n_max: int, tol: float):
    """B_n = (1/n) sum_{i<n} i ||w_{i+1} - w_i|| for n = 1..n_max (index n).

    w_i is the closed form for i >= 16; below that lam = 1/i leaves the
    closed-form domain and the grid fixed point at lam = 1/i is used
    (w_1 = payoff vector, since lam = 1 ignores the future).
    """
    i = np.arange(1, n_max + 1, dtype=float)
    w_p = np.empty(n_max)
    w_m = np.empty(n_max)
    for k in range(1, min(n_max, 15) + 1):
        sol = solve_discounted(grid, 1.0 / k, tol=tol, insert_lambda=False)
        w_p[k - 1], w_m[k - 1] = sol.value
    if n_max >= 16:
        lam = 1.0 / i[15:]
        s, d = profile.s(lam), profile.d(lam)
        w_p[15:], w_m[15:] = s + d, s - d
    step = np.maximum(np.abs(np.diff(w_p)), np.abs(np.diff(w_m)))  # index i-1 -> i
    terms = i[:-1] * step
    bounds = np.zeros(n_max + 1)
    bounds[2:] = np.cumsum(terms) / i[1:]
    return bounds


def check_transfer(profile: SDProfile, n_list: Sequence[int], grid: GridGame,
                   slack_factor: float = 10.0, guard: int = 100_000,
                   tol: float = 1e-10, nstage=None) -> TransferTable:
    """Compare grid v_n with w_n = v_{1/n} against the Neyman bound.

    A row is flagged when ``||v_n - w_n|| > B_n + grid_slack``, the slack
    being ``slack_factor`` times the grid's own fixed-point error at
    lam = 1/n (discount not inserted into the grid).  ``nstage`` may hold
    results of :func:`nstage_values` on the same grid to avoid recomputing.
    """
    rows = []
    ok = [n for n in n_list if 16 <= n <= guard]
    n_max = max(ok) if ok else 0
    bounds = _neyman_bounds(profile, grid, n_max, tol) if ok else None
    missing = [n for n in ok if not nstage or n not in nstage]
    sols = dict(nstage or {})
    if missing:
        sols.update(nstage_values(grid, missing))
    nan = float("nan")
    for n in n_list:
        if n < 16:
            rows.append(TransferRow(n, None, None, nan, nan, nan, False, nan,
                                    "skipped: lam = 1/n outside (0, 1/16]"))
            continue
        if n > guard:
            rows.append(TransferRow(n, None, None, nan, nan, nan, False, nan,
                                    f"skipped: n above runtime guard {guard}"))
            continue
        lam = 1.0 / n
        w = closed_form_value(profile, lam)
        v = sols[n]
        disc = solve_discounted(grid, lam, tol=tol, insert_lambda=False)
        slack = slack_factor * disc.value.distance(w)
        dist = v.value.distance(w)
        rows.append(TransferRow(n, v.value, w, dist, float(bounds[n]), slack,
                                bool(dist > bounds[n] + slack), v.max_duality_gap))
    return TransferTable(tuple(rows), derivative_screen(profile), len(grid))


# ---------------------------------------------------------------------------
# Finite Stay/Quit game

@dataclass(frozen=True)
class FiniteBKGame:
    """Two-action game: (Quit, Quit) absorbs with probability p_star_k in
    omega_k, a single Quit swaps the state, (Stay, Stay) stays."""

    p_star_plus: float
    p_star_minus: float

    def __post_init__(self):
        for p in (self.p_star_plus, self.p_star_minus):
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"absorption parameter {p!r} outside [0, 1]")

    @property
    def limit_value(self) -> float | None:
        """(sqrt p+ - sqrt p-) / (sqrt p+ + sqrt p-), when both are positive."""
        if self.p_star_plus <= 0.0 or self.p_star_minus <= 0.0:
            return None
        a, b = math.sqrt(self.p_star_plus), math.sqrt(self.p_star_minus)
        return (a - b) / (a + b)


def _value_2x2(m00, m01, m10, m11):
    """Value of a 2x2 zero-sum matrix game (row player maximises), with the
    row player's and column player's probabilities on the second action."""
    rows = ((m00, m01), (m10, m11))
    for r in (0, 1):
        for c in (0, 1):
            v = rows[r][c]
            if v == min(rows[r]) and v == max(rows[0][c], rows[1][c]):
                return v, float(r), float(c)
    # no pure saddle: both players mix so as to make the other indifferent
    den = m00 - m01 - m10 + m11
    x = (m00 - m01) / den
    y = (m00 - m10) / den
    return (m00 * m11 - m01 * m10) / den, x, y


class FiniteBKSolution(NamedTuple):
    v: ValuePair
    x_opt: tuple[float, float]
    y_opt: tuple[float, float]
    limit: float | None


def _bk_state(lam, own, other, absorb_value, p_star, g):
    """Increment ``val - own`` in one state, with the Quit probabilities."""
    swap = (1 - lam) * (other - own)
    quit_both = (1 - lam) * p_star * (absorb_value - own)
    base = lam * (g - own)
    v, x, y = _value_2x2(0.0, swap, swap, quit_both)
    return base + v, x, y


def solve_finite_bk(game: FiniteBKGame, lam: float) -> FiniteBKSolution:
    """Discounted value of the mixed extension, actions = Quit probabilities.

    The stationary fixed point is found by nested bracketing root search:
    for fixed v(omega-), v(omega+) solves ``T_+(v) = v(omega+)`` (a strictly
    decreasing gap since T is a (1 - lam)-contraction), and the outer search
    solves the omega- equation along that curve.
    """
    lam = check_discount(lam, upper=1.0)
    pp, pm = game.p_star_plus, game.p_star_minus

    def plus_root(vm):
        g = lambda vp: _bk_state(lam, vp, vm, 1.0, pp, 1.0)[0]
        return brentq(g, -1.0, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)

    def outer(vm):
        return _bk_state(lam, vm, plus_root(vm), -1.0, pm, -1.0)[0]

    vm = brentq(outer, -1.0, 1.0, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    vp = plus_root(vm)
    _, xp, yp = _bk_state(lam, vp, vm, 1.0, pp, 1.0)
    _, xm, ym = _bk_state(lam, vm, vp, -1.0, pm, -1.0)
    return FiniteBKSolution(ValuePair(vp, vm), (xp, xm), (yp, ym), game.limit_value)

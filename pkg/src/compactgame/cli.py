"""Sweeps over discounts and horizons, and the command-line entry point.

Every table is a :class:`Table` that renders to CSV with a commented header
holding the resolved configuration and a hash of the data.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import csvio
from .core import CompactGame, GameState, closed_form_value
from .errors import DomainError, InfeasibleProfileError
from .families import (ACTION_BOUND, SDProfile, certified_feasible, make_profile,
                       with_power_gap)
from .montecarlo import (OccupationWarning, SimConfig, Stationary, append_report,
                         occupation_check, simulate)
from .solvers import (DEFAULT_GRID_SIZE, MIN_SOLVER_DISCOUNT, FiniteBKGame, GridGame,
                      check_transfer, nstage_values, solve_discounted, solve_finite_bk)
from .transitions import build_kernel, scan_feasibility

MIN_DISCOUNT = 1e-300
NSTAGE_GUARD = 100_000


# ---------------------------------------------------------------------------
# schedules

@dataclass(frozen=True)
class LogUniform:
    lo: float
    hi: float
    count: int

    def lambdas(self) -> np.ndarray:
        return np.geomspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class LogLogUniform:
    """Uniform in ln(-ln lam): the natural scale of the log-log family."""

    lo: float
    hi: float
    count: int

    def lambdas(self) -> np.ndarray:
        t = np.linspace(math.log(-math.log(self.hi)), math.log(-math.log(self.lo)), self.count)
        lams = np.exp(-np.exp(t))[::-1]
        lams[0], lams[-1] = self.lo, self.hi
        return lams


@dataclass(frozen=True)
class Explicit:
    values: tuple[float, ...]

    def lambdas(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


Schedule = LogUniform | LogLogUniform | Explicit


def _schedule_dict(s: Schedule) -> dict:
    return {"kind": type(s).__name__, **asdict(s)}


def check_schedule(s: Schedule, upper: float = ACTION_BOUND) -> np.ndarray:
    if isinstance(s, (LogUniform, LogLogUniform)):
        if s.count < 2:
            raise DomainError("schedule count must be at least 2")
        if not MIN_DISCOUNT <= s.lo < s.hi <= upper:
            raise DomainError(f"schedule bounds must satisfy 1e-300 <= min < max <= {upper:g}")
        if isinstance(s, LogLogUniform) and s.hi >= 1.0:
            raise DomainError("log-log schedule needs max < 1")
    lams = s.lambdas()
    if lams.size < 1 or np.any(lams < MIN_DISCOUNT) or np.any(lams > upper):
        raise DomainError(f"schedule values must lie in [1e-300, {upper:g}]")
    return lams


# ---------------------------------------------------------------------------
# sweep spec and tables

@dataclass(frozen=True)
class SweepSpec:
    family: str = "zero"
    amplitude: float | None = None
    samples: str | None = None
    d_scale: float = 1.0
    d_exponent: float = 0.5
    schedule: Schedule = field(default_factory=lambda: LogUniform(1e-6, ACTION_BOUND, 20))
    n_schedule: tuple[int, ...] = ()
    grid_size: int = DEFAULT_GRID_SIZE
    tol: float = 1e-10
    solve: bool = True
    guard: int = NSTAGE_GUARD
    seed: int = 0
    out: str | None = None

    def profile(self) -> SDProfile:
        prof = make_profile(self.family, self.amplitude, self.samples)
        if (self.d_scale, self.d_exponent) != (1.0, 0.5):
            prof = with_power_gap(prof, self.d_scale, self.d_exponent)
        return prof

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schedule"] = _schedule_dict(self.schedule)
        d["n_schedule"] = list(self.n_schedule)
        d.pop("out")
        return d


@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple]
    config: dict
    notes: list[str] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([np.nan if r[k] is None else r[k] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        return csvio.render(self.config, self.columns, self.rows, self.notes)

    def write(self, path) -> str:
        return csvio.write_table(path, self.config, self.columns, self.rows, self.notes)


def require_feasible(profile: SDProfile, grid_size: int = 401):
    """Pass silently for certified profiles, else scan and refuse on failure."""
    if certified_feasible(profile):
        return None
    report = scan_feasibility(build_kernel(profile), grid_size=grid_size)
    if not report.feasible:
        raise InfeasibleProfileError(
            f"profile {profile.name} failed the feasibility scan\n" + report.to_text(), report)
    return report


VALUE_COLUMNS = ("lambda", "v_plus_closed", "v_minus_closed", "v_plus_solved",
                 "v_minus_solved", "residual", "duality_gap")


def run_value_sweep(spec: SweepSpec) -> Table:
    """Closed-form values per discount and, if ``spec.solve``, the grid
    fixed point with the discount inserted into the grid."""
    lams = check_schedule(spec.schedule)
    profile = spec.profile()
    require_feasible(profile)
    notes = []
    grid = None
    if spec.solve:
        grid = GridGame.build(CompactGame.from_profile(profile), size=spec.grid_size)
        if np.any(lams < MIN_SOLVER_DISCOUNT):
            notes.append(f"solver columns empty for lambda < {MIN_SOLVER_DISCOUNT:g} "
                         "(not resolvable in double precision)")
    rows = []
    for lam in lams:
        lam = float(lam)
        w = closed_form_value(profile, lam)
        if grid is not None and lam >= MIN_SOLVER_DISCOUNT:
            sol = solve_discounted(grid, lam, tol=spec.tol)
            rows.append((lam, w.v_plus, w.v_minus, sol.value.v_plus, sol.value.v_minus,
                         sol.residual, sol.duality_gap))
        else:
            rows.append((lam, w.v_plus, w.v_minus, None, None, None, None))
    table = Table(VALUE_COLUMNS, rows, spec.to_dict(), notes)
    if spec.out:
        table.write(spec.out)
    return table


class OscillationRecord(NamedTuple):
    max: float
    min: float
    spread: float
    arg_rows: tuple[int, int]


def oscillation_metric(table: Table, column: str = "v_plus_closed") -> OscillationRecord:
    """Range of the column with the square-root gap removed (v+ - sqrt(lam),
    v- + sqrt(lam))."""
    if len(table.rows) < 2:
        raise DomainError("oscillation_metric needs at least two rows")
    vals = table.column(column)
    root = np.sqrt(table.column("lambda"))
    vals = vals + root if "minus" in column else vals - root
    if np.all(np.isnan(vals)):
        raise DomainError(f"column {column!r} is empty")
    hi, lo = int(np.nanargmax(vals)), int(np.nanargmin(vals))
    return OscillationRecord(float(vals[hi]), float(vals[lo]), float(vals[hi] - vals[lo]), (hi, lo))


NSTAGE_COLUMNS = ("n", "v_plus_n", "v_minus_n", "w_plus_n", "w_minus_n", "neyman_bound",
                  "gap_flag", "grid_slack", "distance", "max_duality_gap")


def run_nstage_sweep(spec: SweepSpec) -> Table:
    """Grid n-stage values against the closed form at lam = 1/n."""
    ns = list(spec.n_schedule)
    if not ns or min(ns) < 1:
        raise DomainError("n_schedule must hold positive integers")
    profile = spec.profile()
    require_feasible(profile)
    grid = GridGame.build(CompactGame.from_profile(profile), size=spec.grid_size)
    ok = [n for n in ns if n <= spec.guard]
    values = nstage_values(grid, ok) if ok else {}
    transfer = check_transfer(profile, [n for n in ok if n >= 16], grid,
                              guard=spec.guard, tol=spec.tol, nstage=values)
    by_n = {r.n: r for r in transfer.rows}
    rows, notes = [], []
    for n in ns:
        if n > spec.guard:
            rows.append((n, None, None, None, None, None, None, None, None, None))
            notes.append(f"n={n} skipped: above runtime guard {spec.guard}")
            continue
        v = values[n]
        r = by_n.get(n)
        if r is None:
            rows.append((n, v.value.v_plus, v.value.v_minus, None, None, None, None,
                         None, None, v.max_duality_gap))
            continue
        rows.append((n, v.value.v_plus, v.value.v_minus, r.w_n.v_plus, r.w_n.v_minus,
                     r.neyman_bound, bool(r.violated), r.grid_slack, r.distance,
                     v.max_duality_gap))
    if any(n < 16 for n in ns):
        notes.append("w columns empty for n < 16 (lambda = 1/n outside (0, 1/16])")
    if not transfer.bound_vanishes:
        notes.append("lam |dv/dlam| does not visibly vanish; the Neyman bound need not go to 0")
    table = Table(NSTAGE_COLUMNS, rows, spec.to_dict(), notes)
    if spec.out:
        table.write(spec.out)
    return table


FINITE_COLUMNS = ("lambda", "v_plus", "v_minus", "x_quit_plus", "y_quit_minus",
                  "limit_formula", "x_quit_minus", "y_quit_plus")


def run_finite_bk(p_star_plus: float, p_star_minus: float, schedule: Schedule,
                  out=None) -> Table:
    """Discounted values of the finite Stay/Quit game along a schedule."""
    game = FiniteBKGame(p_star_plus, p_star_minus)
    lams = check_schedule(schedule, upper=1.0)
    rows = []
    for lam in lams:
        sol = solve_finite_bk(game, float(lam))
        rows.append((float(lam), sol.v.v_plus, sol.v.v_minus, sol.x_opt[0], sol.y_opt[1],
                     sol.limit, sol.x_opt[1], sol.y_opt[0]))
    config = {"p_star_plus": p_star_plus, "p_star_minus": p_star_minus,
              "schedule": _schedule_dict(schedule)}
    notes = [] if game.limit_value is not None else ["limit formula needs both parameters > 0"]
    table = Table(FINITE_COLUMNS, rows, config, notes)
    if out:
        table.write(out)
    return table


# ---------------------------------------------------------------------------
# command line

def _add_profile_args(p):
    p.add_argument("--family", default="zero",
                   choices=["zero", "sinlog", "sinloglog", "const", "custom"])
    p.add_argument("--amplitude", type=float, default=None)
    p.add_argument("--samples", default=None, help="two-column (x, s(x)) file for --family custom")
    p.add_argument("--d-scale", type=float, default=1.0, help="d(x) = scale * x**exponent")
    p.add_argument("--d-exponent", type=float, default=0.5)


def _add_schedule_args(p, lo=1e-6, hi=ACTION_BOUND, count=20):
    p.add_argument("--schedule", choices=["log", "loglog", "explicit"], default="log")
    p.add_argument("--lambda-min", type=float, default=lo)
    p.add_argument("--lambda-max", type=float, default=hi)
    p.add_argument("--count", type=int, default=count)
    p.add_argument("--lambdas", type=float, nargs="+", default=None,
                   help="values for --schedule explicit")


def _schedule(args) -> Schedule:
    if args.schedule == "explicit":
        if not args.lambdas:
            raise DomainError("--schedule explicit needs --lambdas")
        return Explicit(tuple(args.lambdas))
    cls = LogUniform if args.schedule == "log" else LogLogUniform
    return cls(args.lambda_min, args.lambda_max, args.count)


def _spec(args, **kw) -> SweepSpec:
    return SweepSpec(family=args.family, amplitude=args.amplitude, samples=args.samples,
                     d_scale=args.d_scale, d_exponent=args.d_exponent,
                     grid_size=getattr(args, "grid", DEFAULT_GRID_SIZE),
                     tol=getattr(args, "tol", 1e-10), seed=getattr(args, "seed", 0),
                     out=getattr(args, "out", None), **kw)


def _emit(table: Table, out) -> None:
    if not out:
        sys.stdout.write(table.to_csv())


def _cmd_values(args) -> int:
    table = run_value_sweep(_spec(args, schedule=_schedule(args), solve=not args.closed_only))
    _emit(table, args.out)
    return 0


def _cmd_oscillation(args) -> int:
    table = run_value_sweep(_spec(args, schedule=_schedule(args), solve=False))
    rec = oscillation_metric(table, args.column)
    lam = table.column("lambda")
    print(f"column={args.column} max={rec.max:.17g} (lambda={lam[rec.arg_rows[0]]:.6g}) "
          f"min={rec.min:.17g} (lambda={lam[rec.arg_rows[1]]:.6g}) spread={rec.spread:.17g}")
    return 0


def _cmd_nstage(args) -> int:
    table = run_nstage_sweep(_spec(args, n_schedule=tuple(args.n), guard=args.guard))
    _emit(table, args.out)
    return 0


def _cmd_feasibility(args) -> int:
    profile = _spec(args).profile()
    report = scan_feasibility(build_kernel(profile), grid_size=args.grid,
                              continuity_tol=args.continuity_tol)
    text = report.to_text()
    if args.out:
        with open(args.out, "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if report.feasible else 1


def _cmd_finite(args) -> int:
    table = run_finite_bk(args.p_plus, args.p_minus, _schedule(args), out=args.out)
    _emit(table, args.out)
    return 0


def _cmd_simulate(args) -> int:
    profile = _spec(args).profile()
    require_feasible(profile)
    game = CompactGame.from_profile(profile)
    p1 = args.lam if args.p1 is None else args.p1
    p2 = args.lam if args.p2 is None else args.p2
    cfg = SimConfig(args.lam, Stationary.constant(p1), Stationary.constant(p2),
                    trajectories=args.trajectories, start=GameState(args.start),
                    horizon=args.horizon, seed=args.seed)
    if args.occupation:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", OccupationWarning)
            res = occupation_check(game, args.lam, cfg)
        print(f"window={res.window} empirical={res.empirical:.17g} "
              f"predicted={res.predicted:.17g} absorbed={res.absorption_fraction:.17g}")
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        return 0
    rep = simulate(game, cfg)
    if args.out:
        append_report(args.out, rep, cfg, label=profile.name)
    for k, v in zip(rep.FIELDS, rep):
        print(f"{k}={csvio.fmt(v)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compactgame",
                                     description="Value sweeps for a compact stochastic game "
                                                 "with oscillating discounted values.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("values", help="closed-form and grid-solved v_lambda along a schedule")
    _add_profile_args(p)
    _add_schedule_args(p)
    p.add_argument("--grid", type=int, default=DEFAULT_GRID_SIZE)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--closed-only", action="store_true", help="skip the solver columns")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_values)

    p = sub.add_parser("oscillation", help="spread of v_lambda - sqrt(lambda) along a schedule")
    _add_profile_args(p)
    _add_schedule_args(p, lo=1e-10, hi=1e-2, count=200)
    p.add_argument("--column", default="v_plus_closed",
                   choices=["v_plus_closed", "v_minus_closed"])
    p.set_defaults(func=_cmd_oscillation)

    p = sub.add_parser("nstage", help="grid v_n against v_(1/n) and the Neyman bound")
    _add_profile_args(p)
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--grid", type=int, default=65)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--guard", type=int, default=NSTAGE_GUARD)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_nstage)

    p = sub.add_parser("feasibility", help="scan the transition kernel of a profile")
    _add_profile_args(p)
    p.add_argument("--grid", type=int, default=401)
    p.add_argument("--continuity-tol", type=float, default=1e-3)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_feasibility)

    p = sub.add_parser("finite", help="the finite Stay/Quit game along a schedule")
    p.add_argument("--p-plus", type=float, required=True)
    p.add_argument("--p-minus", type=float, required=True)
    _add_schedule_args(p, lo=1e-8, hi=1e-1, count=15)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_finite)

    p = sub.add_parser("simulate", help="Monte Carlo under constant strategies")
    _add_profile_args(p)
    p.add_argument("--lambda", dest="lam", type=float, default=ACTION_BOUND)
    p.add_argument("--p1", type=float, default=None, help="Player 1 action (default lambda)")
    p.add_argument("--p2", type=float, default=None, help="Player 2 action (default lambda)")
    p.add_argument("--trajectories", type=int, default=10_000)
    p.add_argument("--start", default="omega+", choices=[s.value for s in GameState])
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--occupation", action="store_true",
                   help="report the omega+ occupation over the first lambda^(-2/3) stages")
    p.add_argument("--out", help="append the report row to this file")
    p.set_defaults(func=_cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleProfileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

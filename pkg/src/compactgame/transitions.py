"""Transition kernels of the four-state game.

The kernel gives, on the action square [0, 1/16]^2 (first argument is
Player 1's action), the four probabilities

    p_star_plus  = rho(1*   | i, j, omega+)
    p_plus       = rho(omega- | i, j, omega+)
    p_star_minus = rho(-1*  | i, j, omega-)
    p_minus      = rho(omega+ | i, j, omega-)

Two constructions are provided.  ``kernel_sqrt`` is specialised to
d = sqrt and rewrites the defining quotients through the divided
differences ``f1``/``f2`` so that diagonal and boundary values are exact.
``kernel_general`` evaluates the raw two-point solution for any (s, d).
In both, the minus side is the plus-side formula applied to -s.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import DegenerateSystemError, DomainError
from .families import ACTION_BOUND, EVAL_FLOOR, DKind, SDProfile

# Relative half-width of the diagonal band, in sqrt-space for the sqrt
# kernel: |sqrt x - sqrt y| < SQRT_DIAG_DELTA * max(sqrt x, sqrt y).
SQRT_DIAG_DELTA = 1e-7
# Same for the general kernel, in lambda-space.  Inside the band the kernel
# is replaced by its value at the offsets m(1 +- GENERAL_DIAG_DELTA).
GENERAL_DIAG_DELTA = 1e-4
DEGENERACY_RTOL = 1e-14

# Absolute floor of the local scale used to normalise diagonal jumps.
JUMP_SCALE_FLOOR = 1e-9

P_STAR_BOUND = 4912.0 / 2925.0
P_SWAP_BOUND = 2312.0 / 2925.0


class KernelSource(enum.Enum):
    SPECIALIZED_SQRT = "specialized_sqrt"
    GENERAL_TWO_POINT = "general_two_point"


class KernelValues(NamedTuple):
    p_star_plus: np.ndarray
    p_plus: np.ndarray
    p_star_minus: np.ndarray
    p_minus: np.ndarray


NAMES = KernelValues._fields


@dataclass(frozen=True)
class TransitionKernel:
    """Immutable kernel; ``kernel(x, y)`` returns all four arrays at once."""

    source: KernelSource
    evaluate: Callable[[np.ndarray, np.ndarray], KernelValues] = field(repr=False)
    profile: SDProfile | None = field(default=None, repr=False)

    def __call__(self, x, y) -> KernelValues:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        _check_square(x, y)
        x, y = np.broadcast_arrays(x, y)
        return self.evaluate(x, y)

    def p_star_plus(self, x, y):
        return self(x, y).p_star_plus

    def p_plus(self, x, y):
        return self(x, y).p_plus

    def p_star_minus(self, x, y):
        return self(x, y).p_star_minus

    def p_minus(self, x, y):
        return self(x, y).p_minus

    @property
    def approximate_diagonal(self) -> bool:
        return self.source is KernelSource.GENERAL_TWO_POINT

    def band_probes(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Points y just inside and just outside the diagonal band at x."""
        if self.source is KernelSource.SPECIALIZED_SQRT:
            r = np.sqrt(x)
            return (r * (1 - 0.5 * SQRT_DIAG_DELTA)) ** 2, (r * (1 - 2 * SQRT_DIAG_DELTA)) ** 2
        return x * (1 - 0.5 * GENERAL_DIAG_DELTA), x * (1 - 2 * GENERAL_DIAG_DELTA)


def _check_square(x, y, lo_open=False):
    for a in (x, y):
        bad = (a <= 0.0) if lo_open else (a < 0.0)
        if np.any(bad | (a > ACTION_BOUND) | ~np.isfinite(a)):
            span = "(0, 1/16]" if lo_open else "[0, 1/16]"
            raise DomainError(f"argument outside {span}")


def _divided_differences(x, y, profile: SDProfile):
    """(f1, f2) for x, y > 0, switching to the diagonal formulas in the band."""
    u, v = np.sqrt(x), np.sqrt(y)
    diff = u - v
    near = np.abs(diff) < SQRT_DIAG_DELTA * np.maximum(u, v)
    sx, sy = profile.s(x), profile.s(y)
    with np.errstate(divide="ignore", invalid="ignore"):
        f1 = (u * sx - v * sy) / diff
        f2 = (v * sx - u * sy) / diff
    if np.any(near):
        m = (0.5 * (u + v)) ** 2
        two_xsp = 2.0 * profile.xs_prime(m)
        sm = profile.s(m)
        f1 = np.where(near, two_xsp + sm, f1)
        f2 = np.where(near, two_xsp - sm, f2)
    return sx, sy, f1, f2


def f1(x, y, profile: SDProfile):
    """(sqrt x s(x) - sqrt y s(y)) / (sqrt x - sqrt y), and 2x s'(x) + s(x)
    on the diagonal."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    _check_square(x, y, lo_open=True)
    return _divided_differences(x, y, profile)[2]


def f2(x, y, profile: SDProfile):
    """(sqrt y s(x) - sqrt x s(y)) / (sqrt x - sqrt y), and 2x s'(x) - s(x)
    on the diagonal."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    _check_square(x, y, lo_open=True)
    return _divided_differences(x, y, profile)[3]


def _sqrt_side(x, y, sx, sy, g1, g2):
    """Plus-side (p_star, p) of the sqrt kernel; minus side passes -s."""
    u, v = np.sqrt(x), np.sqrt(y)
    uv = u * v
    denom = (1 - x) * (1 - y)
    with np.errstate(divide="ignore", invalid="ignore"):
        p_star = uv * ((1 - u) * (1 - v) - g1 + uv * g2) / (denom * (1 + g2))
        p = (u + v) * (1 - u - sx) * (1 - v - sy) / (2 * denom * (1 + g2))
        row_x = u * (1 - u - sx) / (2 * (1 - x))
        row_y = v * (1 - v - sy) / (2 * (1 - y))
    xpos, ypos = x > 0, y > 0
    interior = xpos & ypos
    p_star = np.where(interior, p_star, 0.0)
    p = np.where(interior, p,
                 np.where(xpos, row_x, np.where(ypos, row_y, 0.0)))
    return p_star, p


def kernel_sqrt(profile: SDProfile) -> TransitionKernel:
    """Kernel with d = sqrt, completed on the diagonal and on xy = 0."""
    if profile.d_kind is not DKind.SQUARE_ROOT:
        raise DomainError("kernel_sqrt requires d = sqrt")

    def evaluate(x, y):
        # substitute an interior point where an argument is 0; those
        # entries are overwritten by the boundary rows
        xs = np.where(x > 0, x, ACTION_BOUND)
        ys = np.where(y > 0, y, ACTION_BOUND)
        sx, sy, g1, g2 = _divided_differences(xs, ys, profile)
        sx = np.where(x > 0, sx, 0.0)
        sy = np.where(y > 0, sy, 0.0)
        ps_p, p_p = _sqrt_side(x, y, sx, sy, g1, g2)
        ps_m, p_m = _sqrt_side(x, y, -sx, -sy, -g1, -g2)
        return KernelValues(ps_p, p_p, ps_m, p_m)

    return TransitionKernel(KernelSource.SPECIALIZED_SQRT, evaluate, profile)


def _general_side(lam, mu, s_l, s_m, d_l, d_m):
    """Plus-side (p_star, p) from the two-point system; minus side passes -s."""
    a, b = d_l * (1 - s_m), d_m * (1 - s_l)
    bracket = a - b
    if np.any(np.abs(bracket) < DEGENERACY_RTOL * (np.abs(a) + np.abs(b))):
        raise DegenerateSystemError(
            "two-point system is degenerate: d(l)(1-s(m)) - d(m)(1-s(l)) ~ 0")
    stay_l = 1 - s_l - d_l
    stay_m = 1 - s_m - d_m
    denom = (1 - lam) * (1 - mu) * bracket
    p = (lam - mu) * stay_l * stay_m / (2 * denom)
    p_star = (lam * (1 - mu) * d_m * stay_l - mu * (1 - lam) * d_l * stay_m) / denom
    return p_star, p


def kernel_general(profile: SDProfile) -> TransitionKernel:
    """Kernel from the raw two-point solution for an arbitrary (s, d).

    Zero actions are clamped to 1e-300.  Inside the diagonal band the value
    is the average over the two offset points m(1 +- delta), which is an
    approximation: the formulas are 0/0 on the diagonal itself.
    """

    def evaluate(x, y):
        lam = np.maximum(x, EVAL_FLOOR)
        mu = np.maximum(y, EVAL_FLOOR)
        near = np.abs(lam - mu) < GENERAL_DIAG_DELTA * np.maximum(lam, mu)
        if np.any(near):
            m = 0.5 * (lam + mu)
            hi = np.where(near, m * (1 + GENERAL_DIAG_DELTA), lam)
            lo = np.where(near, m * (1 - GENERAL_DIAG_DELTA), mu)
            first = _general_all(hi, lo, profile)
            second = _general_all(lo, hi, profile)
            return KernelValues(*(np.where(near, 0.5 * (f + g), f)
                                  for f, g in zip(first, second)))
        return _general_all(lam, mu, profile)

    return TransitionKernel(KernelSource.GENERAL_TWO_POINT, evaluate, profile)


def _general_all(lam, mu, profile):
    s_l, s_m = profile.s(lam), profile.s(mu)
    d_l, d_m = profile.d(lam), profile.d(mu)
    ps_p, p_p = _general_side(lam, mu, s_l, s_m, d_l, d_m)
    ps_m, p_m = _general_side(lam, mu, -s_l, -s_m, d_l, d_m)
    return KernelValues(ps_p, p_p, ps_m, p_m)


def build_kernel(profile: SDProfile) -> TransitionKernel:
    """The specialised kernel when d = sqrt, the general one otherwise."""
    if profile.d_kind is DKind.SQUARE_ROOT:
        return kernel_sqrt(profile)
    return kernel_general(profile)


def scan_lattice(grid_size: int) -> np.ndarray:
    """Nodes of [0, 1/16], uniform in sqrt-space (dense near 0)."""
    return ACTION_BOUND * (np.arange(grid_size) / (grid_size - 1)) ** 2


class RowStats(NamedTuple):
    name: str
    min: float
    max: float
    argmin: tuple[float, float]
    argmax: tuple[float, float]
    diag_jump: float


@dataclass(frozen=True)
class FeasibilityReport:
    rows: tuple[RowStats, ...]
    feasible: bool
    in_range: bool
    continuous: bool
    grid_size: int
    continuity_tol: float
    approximate_diagonal: bool
    note: str = ""
    lattice: np.ndarray | None = field(default=None, repr=False, compare=False)
    values: KernelValues | None = field(default=None, repr=False, compare=False)

    def row(self, name: str) -> RowStats:
        return next(r for r in self.rows if r.name == name)

    def to_text(self) -> str:
        lines = [
            f"# feasibility scan grid={self.grid_size} continuity_tol={self.continuity_tol:g}"
            f" approximate_diagonal={self.approximate_diagonal}",
            f"{'function':<14}{'min':>24}{'max':>24}{'argmin':>48}{'argmax':>48}{'diag_jump':>24}",
        ]
        for r in self.rows:
            amin = f"({r.argmin[0]:.6e},{r.argmin[1]:.6e})"
            amax = f"({r.argmax[0]:.6e},{r.argmax[1]:.6e})"
            lines.append(f"{r.name:<14}{r.min:>24.17g}{r.max:>24.17g}"
                         f"{amin:>48}{amax:>48}{r.diag_jump:>24.6g}")
        lines.append(f"feasible={self.feasible} in_range={self.in_range}"
                     f" continuous={self.continuous}")
        if self.note:
            lines.append(f"note: {self.note}")
        return "\n".join(lines) + "\n"


def scan_feasibility(kernel: TransitionKernel, grid_size: int = 401,
                     continuity_tol: float = 1e-3) -> FeasibilityReport:
    """Evaluate the kernel on a grid_size x grid_size lattice and report.

    Feasible means every value lies in [-1e-12, 1/2 + 1e-12] and the jump
    across the diagonal band, relative to the local value, is at most
    ``continuity_tol``.  A degenerate system is reported, not raised.
    """
    if grid_size < 16:
        raise DomainError("grid_size must be at least 16")
    nodes = scan_lattice(grid_size)
    X, Y = np.meshgrid(nodes, nodes, indexing="ij")
    try:
        vals = kernel(X, Y)
        diag = nodes[1:]
        y_in, y_out = kernel.band_probes(diag)
        inside, outside, on = kernel(diag, y_in), kernel(diag, y_out), kernel(diag, diag)
    except DegenerateSystemError as exc:
        nan = float("nan")
        rows = tuple(RowStats(n, nan, nan, (nan, nan), (nan, nan), nan) for n in NAMES)
        return FeasibilityReport(rows, False, False, False, grid_size, continuity_tol,
                                 kernel.approximate_diagonal, note=f"degenerate: {exc}",
                                 lattice=nodes)
    rows = []
    in_range = True
    continuous = True
    for name, v, a, b, c in zip(NAMES, vals, inside, outside, on):
        finite = np.all(np.isfinite(v))
        if finite:
            k_min, k_max = np.argmin(v), np.argmax(v)
            vmin, vmax = float(v.flat[k_min]), float(v.flat[k_max])
            amin = (float(X.flat[k_min]), float(Y.flat[k_min]))
            amax = (float(X.flat[k_max]), float(Y.flat[k_max]))
        else:
            vmin = vmax = float("nan")
            amin = amax = (float("nan"), float("nan"))
        scale = np.maximum(np.abs(c), JUMP_SCALE_FLOOR)
        jump = float(np.max(np.abs(a - b) / scale))
        ok_range = bool(finite and vmin >= -1e-12 and vmax <= 0.5 + 1e-12)
        ok_cont = bool(np.isfinite(jump) and jump <= continuity_tol)
        in_range &= ok_range
        continuous &= ok_cont
        rows.append(RowStats(name, vmin, vmax, amin, amax, jump))
    return FeasibilityReport(tuple(rows), in_range and continuous, in_range, continuous,
                             grid_size, continuity_tol, kernel.approximate_diagonal,
                             lattice=nodes, values=vals)

"""Families of (s, d) profiles.

A profile prescribes the discounted values of the two nonabsorbing states,
``v(omega+) = s(lam) + d(lam)`` and ``v(omega-) = s(lam) - d(lam)``.  Every
built-in family carries its analytic derivative, so ``x s'(x)`` can be
evaluated without forming the product of a huge and a tiny number.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError

ACTION_BOUND = 1.0 / 16.0
# Arguments below this are clamped before evaluating s; 1e-300 keeps
# ln(-ln x) finite and x * s'(x) representable.
EVAL_FLOOR = 1e-300
FEASIBILITY_BOUND = 1.0 / 16.0

ArrayFn = Callable[[np.ndarray], np.ndarray]


class Family(enum.Enum):
    ZERO = "zero"
    SINLOG = "sinlog"
    SINLOGLOG = "sinloglog"
    CONST = "const"
    CUSTOM = "custom"


class DKind(enum.Enum):
    SQUARE_ROOT = "sqrt"
    CUSTOM = "custom"


def _clamp(x):
    return np.maximum(np.asarray(x, dtype=float), EVAL_FLOOR)


def _sqrt(x):
    return np.sqrt(np.asarray(x, dtype=float))


def _sqrt_prime(x):
    return 0.5 / np.sqrt(_clamp(x))


@dataclass(frozen=True)
class SDProfile:
    """A pair (s, d) together with the derivative data the kernels need.

    ``xs_prime`` is ``x -> x * s'(x)``; ``s_prime`` is kept for callers that
    want the raw derivative.  ``amplitude`` is the scale applied to the base
    family (for CONST it is the constant itself).
    """

    family: Family
    s: ArrayFn
    s_prime: ArrayFn
    xs_prime: ArrayFn
    d: ArrayFn = _sqrt
    d_prime: ArrayFn | None = _sqrt_prime
    d_kind: DKind = DKind.SQUARE_ROOT
    amplitude: float = 0.0
    label: str = ""
    samples: tuple | None = field(default=None, compare=False, repr=False)

    def negated(self) -> "SDProfile":
        """Profile with s replaced by -s (d unchanged)."""
        s, sp, xsp = self.s, self.s_prime, self.xs_prime
        return replace(
            self,
            s=lambda x: -s(x),
            s_prime=lambda x: -sp(x),
            xs_prime=lambda x: -xsp(x),
            amplitude=-self.amplitude,
            label=f"-({self.label or self.family.value})",
        )

    @property
    def name(self) -> str:
        return self.label or self.family.value


def zero() -> SDProfile:
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return SDProfile(Family.ZERO, z, z, z, amplitude=0.0, label="zero")


def constant(c: float) -> SDProfile:
    c = float(c)
    val = lambda x: np.full_like(np.asarray(x, dtype=float), c)
    z = lambda x: np.zeros_like(np.asarray(x, dtype=float))
    return SDProfile(Family.CONST, val, z, z, amplitude=c, label=f"const({c:g})")


def sinlog(amplitude: float = 1.0 / 16.0) -> SDProfile:
    """s(x) = A sin(ln x); x s'(x) = A cos(ln x)."""
    a = float(amplitude)

    def s(x):
        return a * np.sin(np.log(_clamp(x)))

    def xs_prime(x):
        return a * np.cos(np.log(_clamp(x)))

    def s_prime(x):
        x = _clamp(x)
        return a * np.cos(np.log(x)) / x

    return SDProfile(Family.SINLOG, s, s_prime, xs_prime, amplitude=a, label="sinlog")


def sinloglog(amplitude: float = 1.0 / 16.0) -> SDProfile:
    """s(x) = A sin(ln(-ln x)); x s'(x) = A cos(ln(-ln x)) / ln x."""
    a = float(amplitude)

    def s(x):
        return a * np.sin(np.log(-np.log(_clamp(x))))

    def xs_prime(x):
        lx = np.log(_clamp(x))
        return a * np.cos(np.log(-lx)) / lx

    def s_prime(x):
        x = _clamp(x)
        lx = np.log(x)
        return a * np.cos(np.log(-lx)) / (x * lx)

    return SDProfile(
        Family.SINLOGLOG, s, s_prime, xs_prime, amplitude=a, label="sinloglog"
    )


def custom(xs, ss) -> SDProfile:
    """Profile interpolated from samples (x_k, s(x_k)).

    s is linear in ln x between samples and flat outside the sampled range;
    s' comes from second-order finite differences of the samples.
    """
    xs = np.asarray(xs, dtype=float)
    ss = np.asarray(ss, dtype=float)
    if xs.ndim != 1 or xs.shape != ss.shape or xs.size < 2:
        raise DomainError("custom profile needs two matching 1-d sample arrays")
    if not np.all(np.diff(xs) > 0):
        raise DomainError("custom sample abscissae must be strictly increasing")
    if xs[0] <= 0.0 or xs[-1] > ACTION_BOUND:
        raise DomainError("custom sample abscissae must lie in (0, 1/16]")
    if not np.all(np.isfinite(ss)):
        raise DomainError("custom sample values must be finite")
    lx = np.log(xs)
    # derivative in ln x is x s'(x)
    dlog = np.gradient(ss, lx)

    def _check(x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0.0) or np.any(x > ACTION_BOUND):
            raise DomainError("custom profile evaluated outside (0, 1/16]")
        return x

    def s(x):
        return np.interp(np.log(_check(x)), lx, ss)

    def xs_prime(x):
        return np.interp(np.log(_check(x)), lx, dlog)

    def s_prime(x):
        x = _check(x)
        return xs_prime(x) / x

    return SDProfile(Family.CUSTOM, s, s_prime, xs_prime, amplitude=float("nan"),
                     label="custom", samples=(xs, ss))


def load_samples(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column whitespace-separated file of (x, s(x))."""
    data = np.loadtxt(Path(path), comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns, got {data.shape[1]}")
    return data[:, 0], data[:, 1]


def with_power_gap(profile: SDProfile, scale: float, exponent: float) -> SDProfile:
    """Replace d by x -> scale * x**exponent.

    ``(1, 0.5)`` keeps the square-root kind; anything else is a custom d.
    """
    b, alpha = float(scale), float(exponent)
    if b == 1.0 and alpha == 0.5:
        return replace(profile, d=_sqrt, d_prime=_sqrt_prime, d_kind=DKind.SQUARE_ROOT)

    def d(x):
        return b * np.power(np.asarray(x, dtype=float), alpha)

    def d_prime(x):
        return b * alpha * np.power(_clamp(x), alpha - 1.0)

    return replace(profile, d=d, d_prime=d_prime, d_kind=DKind.CUSTOM,
                   label=f"{profile.name}|d={b:g}x^{alpha:g}")


def with_d(profile: SDProfile, d: ArrayFn, d_prime: ArrayFn | None = None) -> SDProfile:
    """Attach an arbitrary gap function d."""
    return replace(profile, d=d, d_prime=d_prime, d_kind=DKind.CUSTOM)


def make_profile(family: str, amplitude: float | None = None,
                 samples_path=None) -> SDProfile:
    """Build a profile from a configuration-style family name."""
    fam = Family(family.lower())
    if fam is Family.ZERO:
        return zero()
    if fam is Family.SINLOG:
        return sinlog(1.0 / 16.0 if amplitude is None else amplitude)
    if fam is Family.SINLOGLOG:
        return sinloglog(1.0 / 16.0 if amplitude is None else amplitude)
    if fam is Family.CONST:
        return constant(0.0 if amplitude is None else amplitude)
    if samples_path is None:
        raise DomainError("the custom family needs a sample file")
    return custom(*load_samples(samples_path))


class BoundCertificate(NamedTuple):
    sup_abs_s: float
    sup_abs_xsprime: float
    analytic: bool

    @property
    def C(self) -> float:
        return max(self.sup_abs_s, self.sup_abs_xsprime)

    @property
    def within_feasibility_bound(self) -> bool:
        return self.C <= FEASIBILITY_BOUND + 1e-12


def bound_certificate(profile: SDProfile, grid_size: int = 4096) -> BoundCertificate:
    """Bounds on sup |s| and sup |x s'(x)| over (0, 1/16].

    Built-in families get analytic values.  For SINLOGLOG the second entry
    is the upper bound A / ln 16 rather than the attained supremum.  Custom
    profiles are scanned on a log-spaced grid spanning their samples.
    """
    if grid_size < 2:
        raise DomainError("grid_size must be at least 2")
    a = abs(profile.amplitude)
    fam = profile.family
    if fam is Family.ZERO:
        return BoundCertificate(0.0, 0.0, True)
    if fam is Family.CONST:
        return BoundCertificate(a, 0.0, True)
    if fam is Family.SINLOG:
        return BoundCertificate(a, a, True)
    if fam is Family.SINLOGLOG:
        return BoundCertificate(a, a / math.log(16.0), True)
    if profile.samples is not None:
        lo, hi = profile.samples[0][0], profile.samples[0][-1]
    else:
        lo, hi = EVAL_FLOOR, ACTION_BOUND
    grid = np.geomspace(lo, hi, grid_size)
    return BoundCertificate(
        float(np.max(np.abs(profile.s(grid)))),
        float(np.max(np.abs(profile.xs_prime(grid)))),
        False,
    )


def certified_feasible(profile: SDProfile) -> bool:
    """True when an analytic certificate meets the |s|, |x s'| <= 1/16 test
    and d is the square root, i.e. the pair is feasible without scanning."""
    if profile.d_kind is not DKind.SQUARE_ROOT:
        return False
    cert = bound_certificate(profile)
    return cert.analytic and cert.within_feasibility_bound


def value_derivative(profile: SDProfile, lam: float) -> tuple[float, float]:
    """d v_lam / d lam at omega+ and omega-: s'(lam) +- d'(lam)."""
    if not 0.0 < lam <= ACTION_BOUND:
        raise DomainError(f"discount {lam!r} outside (0, 1/16]")
    if profile.d_prime is None:
        raise DomainError("value_derivative needs d' (custom d without derivative)")
    sp = float(profile.s_prime(lam))
    dp = float(profile.d_prime(lam))
    return sp + dp, sp - dp

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compactgame.errors import DomainError
from compactgame.families import (ACTION_BOUND, DKind, Family, bound_certificate,
                                  certified_feasible, constant, custom, load_samples,
                                  make_profile, sinlog, sinloglog, value_derivative,
                                  with_power_gap, zero)

INTERIOR = np.geomspace(1e-3, 0.06, 25)


@pytest.mark.parametrize("make", [sinlog, sinloglog])
def test_derivative_matches_central_difference(make):
    prof = make()
    h = 1e-6
    fd = (prof.s(INTERIOR + h) - prof.s(INTERIOR - h)) / (2 * h)
    assert np.max(np.abs(prof.s_prime(INTERIOR) - fd)) <= 1e-4


def test_loglog_derivative_sign():
    # s'(x) = A cos(ln(-ln x)) / (x ln x); the opposite sign breaks continuity
    prof = sinloglog()
    x = 1e-3
    expected = math.cos(math.log(-math.log(x))) / (16 * x * math.log(x))
    assert prof.s_prime(x) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("make", [zero, sinlog, sinloglog, lambda: constant(0.01)])
def test_xs_prime_is_x_times_s_prime(make):
    prof = make()
    x = np.geomspace(1e-200, ACTION_BOUND, 40)
    np.testing.assert_allclose(prof.xs_prime(x), x * prof.s_prime(x), rtol=1e-13, atol=1e-300)


def test_sinlog_values():
    prof = sinlog()
    assert prof.s(1e-4) == pytest.approx(math.sin(math.log(1e-4)) / 16, rel=1e-15)
    assert prof.xs_prime(1e-4) == pytest.approx(math.cos(math.log(1e-4)) / 16, rel=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.floats(min_value=-690.0 + 2 * math.pi, max_value=math.log(ACTION_BOUND)))
def test_sinlog_period(log_x):
    prof = sinlog()
    x, y = math.exp(log_x), math.exp(log_x - 2 * math.pi)
    assert prof.s(x) == pytest.approx(prof.s(y), abs=1e-13)


def test_negated_profile():
    prof = sinloglog()
    neg = prof.negated()
    x = np.geomspace(1e-100, ACTION_BOUND, 9)
    np.testing.assert_array_equal(neg.s(x), -prof.s(x))
    np.testing.assert_array_equal(neg.xs_prime(x), -prof.xs_prime(x))
    np.testing.assert_array_equal(neg.d(x), prof.d(x))


def test_tiny_arguments_finite():
    for prof in (sinlog(), sinloglog()):
        vals = prof.s(np.array([0.0, 1e-320, 1e-300]))
        assert np.all(np.isfinite(vals))


def test_certificates():
    a = 1 / 16
    assert bound_certificate(zero()).C == 0.0
    assert bound_certificate(sinlog()) == (a, a, True)
    cert = bound_certificate(sinloglog())
    assert cert.sup_abs_xsprime == pytest.approx(a / math.log(16))
    assert cert.within_feasibility_bound
    assert not bound_certificate(sinlog(0.5)).within_feasibility_bound
    for prof in (zero(), sinlog(), sinloglog()):
        assert certified_feasible(prof)
    assert not certified_feasible(sinlog(0.5))
    assert not certified_feasible(with_power_gap(zero(), 2.0, 0.5))


def test_loglog_certificate_dominates_scan():
    prof = sinloglog()
    x = np.geomspace(1e-300, ACTION_BOUND, 20000)
    assert np.max(np.abs(prof.xs_prime(x))) <= bound_certificate(prof).sup_abs_xsprime


def test_custom_profile_interpolates(tmp_path):
    xs = np.geomspace(1e-8, ACTION_BOUND, 200)
    ss = sinlog().s(xs)
    path = tmp_path / "s.txt"
    np.savetxt(path, np.column_stack([xs, ss]))
    prof = make_profile("custom", samples_path=path)
    assert prof.family is Family.CUSTOM
    x = np.geomspace(2e-8, 0.06, 30)
    np.testing.assert_allclose(prof.s(x), sinlog().s(x), atol=2e-4)
    np.testing.assert_allclose(prof.xs_prime(x), sinlog().xs_prime(x), atol=2e-3)
    cert = bound_certificate(prof)
    assert not cert.analytic and cert.C <= 1 / 16 + 1e-9
    loaded = load_samples(path)
    np.testing.assert_array_equal(loaded[0], xs)


@pytest.mark.parametrize("xs, ss", [
    ([1e-3, 1e-4], [0.0, 0.0]),          # not increasing
    ([0.0, 1e-3], [0.0, 0.0]),           # zero abscissa
    ([1e-3, 0.1], [0.0, 0.0]),           # beyond 1/16
    ([1e-3, 1e-2], [0.0, float("nan")]),
    ([1e-3], [0.0]),
])
def test_custom_rejects_bad_samples(xs, ss):
    with pytest.raises(DomainError):
        custom(xs, ss)


def test_custom_domain():
    prof = custom([1e-4, 1e-2], [0.0, 0.01])
    with pytest.raises(DomainError):
        prof.s(0.1)


def test_load_samples_wrong_columns(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("1e-3 0 0\n1e-2 0 0\n")
    with pytest.raises(DomainError):
        load_samples(path)


def test_make_profile():
    assert make_profile("SinLog", 0.03).amplitude == 0.03
    assert make_profile("const", 0.02).s(1e-3) == 0.02
    with pytest.raises(DomainError):
        make_profile("custom")
    with pytest.raises(ValueError):
        make_profile("cosine")


def test_power_gap():
    prof = with_power_gap(zero(), 2.0, 0.75)
    assert prof.d_kind is DKind.CUSTOM
    assert prof.d(1e-4) == pytest.approx(2.0 * 1e-3)
    assert with_power_gap(zero(), 1.0, 0.5).d_kind is DKind.SQUARE_ROOT


def test_value_derivative():
    vp, vm = value_derivative(zero(), 1e-4)
    assert vp == pytest.approx(50.0) and vm == pytest.approx(-50.0)
    with pytest.raises(DomainError):
        value_derivative(zero(), 0.1)

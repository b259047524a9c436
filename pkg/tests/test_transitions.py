import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compactgame.errors import DomainError
from compactgame.families import (ACTION_BOUND, constant, make_profile, sinlog,
                                  sinloglog, with_d, with_power_gap, zero)
from compactgame.transitions import (NAMES, P_STAR_BOUND, P_SWAP_BOUND, KernelSource,
                                     build_kernel, f1, f2, kernel_general, kernel_sqrt,
                                     scan_feasibility, scan_lattice)

# (family, x, y, (p_star_plus, p_plus, p_star_minus, p_minus)) from
# tests/oracles/kernel_oracle.py: the equalizing equations solved in
# 500-digit arithmetic, without the closed-form kernel.
ORACLE = [
    ("zero", 0.0625, 0.015625, (0.022222222222222222, 0.13333333333333333, 0.022222222222222222, 0.13333333333333333)),
    ("zero", 0.001, 1.0e-5, (9.6629088987401168e-5, 0.016806240518500459, 9.6629088987401168e-5, 0.016806240518500459)),
    ("zero", 3.0e-8, 0.05, (3.1646707497082575e-5, 0.091426939651257393, 3.1646707497082575e-5, 0.091426939651257393)),
    ("zero", 1.0e-200, 1.0e-100, (1.0e-150, 5.0e-51, 1.0e-150, 5.0e-51)),
    ("sinlog", 0.0625, 0.015625, (0.029172694378812764, 0.14808003811688458, 0.016858755288255785, 0.12152232047228415)),
    ("sinlog", 0.001, 1.0e-5, (0.00010827205580344223, 0.017625509854410686, 8.6395357015777872e-5, 0.016021190091531292)),
    ("sinlog", 3.0e-8, 0.05, (3.4153706067834761e-5, 0.092501059577675436, 2.943463590462652e-5, 0.09035342759377885)),
    ("sinlog", 1.0e-200, 1.0e-100, (8.9625881202141322e-151, 4.7509499890629579e-51, 1.1170255327129751e-150, 5.2490500109370421e-51)),
    ("sinloglog", 0.0625, 0.015625, (0.022198830828970975, 0.12383414168574843, 0.022242535549326406, 0.14283256239953376)),
    ("sinloglog", 0.001, 1.0e-5, (9.4165968525047529e-5, 0.01575635237807162, 9.8911212658208559e-5, 0.017857742992535956)),
    ("sinloglog", 3.0e-8, 0.05, (2.9910930182596443e-5, 0.084874347786911808, 3.3321706635116146e-5, 0.097979850203289665)),
    ("sinloglog", 1.0e-200, 1.0e-100, (1.036967277709937e-150, 5.233529842323473e-51, 9.6233178212886781e-151, 4.766470157676527e-51)),
]

unit = st.floats(min_value=0.0, max_value=ACTION_BOUND)
tiny_or_unit = st.one_of(unit, st.floats(min_value=1e-300, max_value=1e-8))


@pytest.mark.parametrize("family, x, y, expected", ORACLE)
@pytest.mark.parametrize("route", [kernel_sqrt, kernel_general])
def test_kernel_matches_oracle(route, family, x, y, expected):
    got = route(make_profile(family))(x, y)
    np.testing.assert_allclose(np.array(got, dtype=float), expected, rtol=1e-12)


def test_zero_profile_hand_values():
    k = build_kernel(zero())
    kv = k(1 / 16, 1 / 16)
    assert kv.p_star_plus == pytest.approx(0.04, abs=1e-15)
    assert kv.p_plus == pytest.approx(0.16, abs=1e-15)
    edge = k(0.0, 1 / 16)
    assert edge.p_star_plus == 0.0
    assert edge.p_plus == pytest.approx(0.1, abs=1e-15)
    origin = k(0.0, 0.0)
    assert all(float(v) == 0.0 for v in origin)


def test_boundary_rows_continuous(family_profile):
    k = build_kernel(family_profile)
    y = np.geomspace(1e-6, ACTION_BOUND, 20)
    edge = k(0.0, y)
    near = k(1e-300, y)
    for a, b in zip(edge, near):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_routes_agree_on_lattice(family_profile):
    nodes = scan_lattice(41)[1:]
    X, Y = np.meshgrid(nodes, nodes, indexing="ij")
    off = np.abs(np.sqrt(X) - np.sqrt(Y)) > 1e-3
    a = kernel_sqrt(family_profile)(X, Y)
    b = kernel_general(family_profile)(X, Y)
    for u, v in zip(a, b):
        np.testing.assert_allclose(u[off], v[off], rtol=1e-9, atol=1e-15)
        # inside the diagonal the general route is only an approximation
        np.testing.assert_allclose(u, v, rtol=1e-3, atol=1e-12)


def test_build_kernel_dispatch():
    assert build_kernel(sinlog()).source is KernelSource.SPECIALIZED_SQRT
    gen = build_kernel(with_power_gap(zero(), 1.0, 0.6))
    assert gen.source is KernelSource.GENERAL_TWO_POINT and gen.approximate_diagonal
    with pytest.raises(DomainError):
        kernel_sqrt(with_power_gap(zero(), 1.0, 0.6))


@settings(max_examples=200, deadline=None)
@given(tiny_or_unit, tiny_or_unit)
def test_kernel_bounds_and_symmetry(x, y):
    sx, sy = np.sqrt(x), np.sqrt(y)
    for prof in (zero(), sinlog(), sinloglog()):
        k = build_kernel(prof)
        kv = k(x, y)
        for name in NAMES:
            v = float(getattr(kv, name))
            assert -1e-12 <= v <= 0.5 + 1e-12
        for p_star in (kv.p_star_plus, kv.p_star_minus):
            assert p_star <= P_STAR_BOUND * sx * sy + 1e-12
        for p in (kv.p_plus, kv.p_minus):
            assert p <= P_SWAP_BOUND * (sx + sy) + 1e-12
        swapped = k(y, x)
        for a, b in zip(kv, swapped):
            assert float(a) == pytest.approx(float(b), rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.floats(min_value=1e-250, max_value=ACTION_BOUND))
def test_negation_swaps_sides(x):
    prof = sinloglog()
    y = min(ACTION_BOUND, 3.7 * x)
    a = build_kernel(prof)(x, y)
    b = build_kernel(prof.negated())(x, y)
    assert float(a.p_star_plus) == pytest.approx(float(b.p_star_minus), rel=1e-12)
    assert float(a.p_plus) == pytest.approx(float(b.p_minus), rel=1e-12)


@pytest.mark.parametrize("x", [1e-250, 1e-40, 1e-6, 1e-3, 0.05])
def test_diagonal_continuity(family_profile, x):
    k = build_kernel(family_profile)
    on = k(x, x)
    for factor in (1 + 1e-9, 1 + 1e-6, 1 + 1e-4):
        near = k(x, x / factor)
        for a, b in zip(on, near):
            assert float(b) == pytest.approx(float(a), rel=5e-4)


def test_divided_differences():
    prof = sinlog()
    x, y = 1e-3, 2e-5
    u, v = np.sqrt(x), np.sqrt(y)
    assert f1(x, y, prof) == pytest.approx((u * prof.s(x) - v * prof.s(y)) / (u - v), rel=1e-14)
    assert f2(x, y, prof) == pytest.approx((v * prof.s(x) - u * prof.s(y)) / (u - v), rel=1e-14)
    diag_1 = 2 * prof.xs_prime(x) + prof.s(x)
    diag_2 = 2 * prof.xs_prime(x) - prof.s(x)
    assert f1(x, x, prof) == pytest.approx(diag_1, rel=1e-14)
    assert f2(x, x, prof) == pytest.approx(diag_2, rel=1e-14)
    assert f1(x, x * (1 + 1e-5), prof) == pytest.approx(diag_1, rel=1e-4)
    with pytest.raises(DomainError):
        f1(0.0, x, prof)


@pytest.mark.parametrize("x, y", [(-1e-3, 0.01), (0.01, 0.07), (float("nan"), 0.0)])
def test_kernel_domain(x, y):
    with pytest.raises(DomainError):
        build_kernel(zero())(x, y)


def test_kernel_broadcasts():
    kv = build_kernel(sinlog())(np.array([1e-3, 1e-2]), 1e-4)
    assert kv.p_plus.shape == (2,)


def test_scan_feasible_families(family_profile):
    rep = scan_feasibility(build_kernel(family_profile), grid_size=101)
    assert rep.feasible and rep.in_range and rep.continuous
    assert rep.values.p_plus.shape == (101, 101)
    assert "feasible=True" in rep.to_text()
    assert rep.row("p_plus").max <= 0.5


def test_scan_rejects_large_amplitude():
    rep = scan_feasibility(build_kernel(sinlog(0.5)), grid_size=101)
    assert not rep.feasible and not rep.in_range
    assert min(r.min for r in rep.rows) < 0.0


def test_scan_constant_gap_is_degenerate():
    # with s and d both constant the two-point system is singular everywhere
    prof = with_d(constant(0.0), lambda x: np.ones_like(np.asarray(x, float)))
    rep = scan_feasibility(build_kernel(prof), grid_size=33)
    assert not rep.feasible
    assert rep.note.startswith("degenerate")


def test_scan_linear_gap():
    # d(lam) = lam: nothing is absorbed and the swap probability is 1/2
    prof = with_power_gap(zero(), 1.0, 1.0)
    k = build_kernel(prof)
    kv = k(1e-3, 1e-5)
    assert float(kv.p_star_plus) == pytest.approx(0.0, abs=1e-13)
    assert float(kv.p_plus) == pytest.approx(0.5, rel=1e-9)
    assert scan_feasibility(k, grid_size=65).feasible


def test_scan_power_gap_reject():
    rep = scan_feasibility(build_kernel(with_power_gap(zero(), 3.0, 0.5)), grid_size=65)
    assert not rep.feasible


def test_scan_grid_size_domain():
    with pytest.raises(DomainError):
        scan_feasibility(build_kernel(zero()), grid_size=4)

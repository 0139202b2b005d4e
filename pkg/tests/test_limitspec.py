import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from roomgap.limitspec import (
    LimitParams,
    beta_of_mu,
    default_mode_range,
    limit_fiber_bands,
    limit_spectrum,
    solve_beta_star,
)

# frozen from the bisection oracle below (tolerance 1e-15 in k)
BETA_111 = 1.4587630978421162


def bisect(f, a, b, tol=1e-15):
    fa = f(a)
    while b - a > tol:
        c = 0.5 * (a + b)
        fc = f(c)
        if (fc > 0) == (fa > 0):
            a, fa = c, fc
        else:
            b = c
    return 0.5 * (a + b)


def beta_oracle(alpha, r, L):
    """Gap edge as k^2 where k*alpha*r*cos(kL) + (alpha - k^2)*sin(kL) = 0 on (sqrt(alpha), pi/(2L)).

    Eliminating mu from -k tan(kL) = mu and mu = alpha*r*beta/(alpha - beta), beta = k^2.
    """
    def f(k):
        return k * alpha * r * math.cos(k * L) + (alpha - k * k) * math.sin(k * L)

    return bisect(f, math.sqrt(alpha), math.pi / (2 * L)) ** 2


def test_beta_regression_and_oracle():
    edge = solve_beta_star(LimitParams(1, 1, 1))
    assert edge.beta == pytest.approx(BETA_111, abs=1e-12)
    assert edge.beta == pytest.approx(beta_oracle(1, 1, 1), abs=1e-12)
    assert 1 < edge.beta < (math.pi / 2) ** 2


@pytest.mark.parametrize("alpha,r,L", [(1, 1, 1), (0.5, 2, 2), (2, 0.3, 1), (0.1, 5, 1), (2.4, 1, 1)])
def test_fixed_point_two_ways(alpha, r, L):
    p = LimitParams(alpha, r, L)
    edge = solve_beta_star(p)
    assert edge.mu < -alpha * r
    assert edge.identity_residual <= 1e-9
    assert abs(edge.beta - alpha * edge.mu / (alpha * r + edge.mu)) <= 1e-9
    assert alpha < edge.beta < p.threshold
    assert edge.beta == pytest.approx(beta_oracle(alpha, r, L), rel=1e-10)


def test_no_gap_above_threshold():
    assert solve_beta_star(LimitParams(3, 1, 1)) is None
    s = limit_spectrum(LimitParams(3, 1, 1))
    assert not s.has_gap and s.intervals == ((0.0, math.inf),)


def test_limit_spectrum_with_gap():
    s = limit_spectrum(LimitParams(1, 1, 1))
    assert s.has_gap and s.intervals[0] == (0.0, 1.0)
    assert s.intervals[1][0] == pytest.approx(BETA_111, abs=1e-12)
    assert s.contains(0.5) and not s.contains(1.2) and s.contains(10.0)


@pytest.mark.parametrize("alpha,gap", [(0.6, True), (0.62, False)])
def test_threshold_L2(alpha, gap):
    # (pi/4)^2 = 0.61685...
    assert limit_spectrum(LimitParams(alpha, 1, 2)).has_gap is gap


def test_beta_of_mu_limits():
    assert beta_of_mu(0.0, 1.0) == 0.0
    assert beta_of_mu(0.0, 3.0) == 0.0
    assert beta_of_mu(-1e6, 1.0) == pytest.approx((math.pi / 2) ** 2, abs=1e-4)


def test_beta_of_mu_positive_mu_oracle():
    kappa = bisect(lambda q: q * math.tanh(q) - 1.0, 0.0, 5.0)
    assert beta_of_mu(1.0, 1.0) == pytest.approx(-kappa ** 2, abs=1e-12)
    assert beta_of_mu(1.0, 1.0) == pytest.approx(-1.4392, abs=1e-4)


def test_beta_of_mu_negative_mu_oracle():
    for mu in (-0.3, -2.0, -40.0):
        k = bisect(lambda k: -k * math.tan(k) - mu, 1e-12, math.pi / 2 - 1e-12)
        assert beta_of_mu(mu, 1.0) == pytest.approx(k * k, abs=1e-11)


def test_beta_of_mu_decreasing_on_grid():
    mus = np.linspace(-1e3, 1e3, 100)
    vals = np.array([beta_of_mu(m, 1.0) for m in mus])
    assert np.all(np.diff(vals) < 0)


@settings(max_examples=60, deadline=None)
@given(st.floats(-1e4, 1e4), st.floats(1e-3, 1e2), st.floats(0.2, 5))
def test_beta_of_mu_monotone_property(m1, dm, L):
    assert beta_of_mu(m1 + dm, L) < beta_of_mu(m1, L)


def test_fiber_zero_root_at_phase_zero():
    fb = limit_fiber_bands(LimitParams(1, 1, 1), 0.0)
    assert fb.per_mode[0][0][0] == 0.0
    assert fb.lower[0] == 0.0


@pytest.mark.parametrize("phi", [0.0, 0.9, math.pi, 4.0])
def test_fiber_structure(phi):
    p = LimitParams(1, 1, 1)
    fb = limit_fiber_bands(p, phi, lam_max=40)
    assert len(fb.lower) >= 3 and len(fb.upper) >= 1
    assert np.all(fb.lower < p.alpha)
    # theta = phi and theta = phi - 2 pi give equal roots at phi = pi: non-strict
    assert np.all(np.diff(p.alpha - fb.lower) <= 0)
    spec = limit_spectrum(p)
    assert all(spec.contains(x) for x in np.concatenate([fb.lower, fb.upper]))


def test_gap_edge_attained_only_at_phase_zero():
    # the m = 0 mode at phi = 0 solves the fixed-point equation itself
    p = LimitParams(1, 1, 1)
    beta = solve_beta_star(p).beta
    assert limit_fiber_bands(p, 0.0).upper[0] == pytest.approx(beta, abs=1e-12)
    for phi in (0.05, 1.0, math.pi, 6.0):
        assert limit_fiber_bands(p, phi, lam_max=40).upper[0] > beta + 1e-6


def test_more_modes_push_lower_family_towards_alpha():
    p = LimitParams(1, 1, 1)
    small = limit_fiber_bands(p, 1.0, lower_modes=2)
    big = limit_fiber_bands(p, 1.0, lower_modes=8)
    assert big.lower.max() > small.lower.max()
    assert np.all(np.isin(small.lower, big.lower))


def test_default_mode_range_window_complete():
    p = LimitParams(1, 1, 1)
    lam_max = 2 * p.threshold
    lo, hi = default_mode_range(0.3, p, lam_max, lower_modes=0)
    for m in range(lo - 3, hi + 4):
        theta2 = (0.3 + 2 * math.pi * m) ** 2
        assert (lo <= m <= hi) == (theta2 <= lam_max + p.alpha)


@pytest.mark.parametrize("alpha,r,L,phi", [(1, 1, 1, 0.5), (0.5, 2, 2, 2.0), (2, 0.3, 1, 4.5)])
def test_roots_solve_original_dispersion(alpha, r, L, phi):
    # check each root against the tan/tanh form with the pole kept
    p = LimitParams(alpha, r, L)
    fb = limit_fiber_bands(p, phi, lam_max=30)
    for m, (lower, upper) in fb.per_mode.items():
        theta = phi + 2 * math.pi * m
        for lam in lower + upper:
            mu = alpha * r * lam / (alpha - lam)
            s = lam - theta ** 2
            lhs = -math.sqrt(s) * math.tan(math.sqrt(s) * L) if s > 0 else \
                math.sqrt(-s) * math.tanh(math.sqrt(-s) * L)
            assert lhs == pytest.approx(mu, rel=1e-8, abs=1e-8)

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import trapz_xi
from hillcert.bounds import (direct_error_bound, error_bound, optimal_required_truncation,
                             required_truncation, subharmonic_error_bound, taylor_remainder,
                             xi_polynomial_bound)
from hillcert.errors import DomainError, InvalidEnvelopeError
from hillcert.fourier import DecayEnvelope
from hillcert.series_oracle import iter_tuples, xi_factor

ENV = DecayEnvelope(a=1.0, b=1.0)


def test_direct_order_zero():
    assert direct_error_bound(ENV, 0, 0.3).bound == pytest.approx(math.exp(1.2) - 1, rel=1e-14)


def test_zero_time():
    assert direct_error_bound(ENV, 7, 0.0).bound == 0.0
    assert subharmonic_error_bound(ENV, 7, 0.0).bound == 0.0


def test_direct_high_precision():
    with mpmath.workdps(40):
        ref = (2 / mpmath.e) ** 5 * (mpmath.e ** 2 - 1)
    assert direct_error_bound(ENV, 5, 0.5).bound == pytest.approx(float(ref), rel=1e-14)


def test_invalid_envelope():
    with pytest.raises(InvalidEnvelopeError):
        direct_error_bound(DecayEnvelope(1.0, 0.6), 3, 1.0)
    with pytest.raises(InvalidEnvelopeError):
        subharmonic_error_bound(DecayEnvelope(1.0, math.inf), 3, 1.0)


@pytest.mark.parametrize("N", [0, 1, 4, 17])
def test_subharmonic_is_direct_at_double_order(N):
    env = DecayEnvelope(2.3, 1.7)
    assert subharmonic_error_bound(env, N, 1.1).bound == direct_error_bound(env, 2 * N, 1.1).bound


def test_subharmonic_decay_rate_doubles():
    env = DecayEnvelope(1.5, 1.2)
    for N in (1, 5, 20):
        sub = math.log(subharmonic_error_bound(env, N, 2.0).bound
                       / subharmonic_error_bound(env, N + 1, 2.0).bound)
        dirr = math.log(direct_error_bound(env, N, 2.0).bound
                        / direct_error_bound(env, N + 1, 2.0).bound)
        assert sub == pytest.approx(2 * dirr, abs=1e-12)


def test_large_order_underflows_to_zero():
    assert direct_error_bound(DecayEnvelope(1.0, 5.0), 10 ** 6, 1.0).bound == 0.0


@pytest.mark.parametrize("N", [1, 3, 10, 40])
def test_required_truncation_inverts_bound(N):
    env = DecayEnvelope(0.9, 1.4)
    E = direct_error_bound(env, N, 2.0).bound
    assert required_truncation(env, 2.0, E, "direct") == N


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.75, 5), st.floats(0.05, 10), st.floats(-14, -1))
def test_required_truncation_is_minimal(a, b, t, log_e):
    env = DecayEnvelope(a, b)
    E = 10.0 ** log_e
    for form in ("direct", "subharmonic"):
        N = required_truncation(env, t, E, form)
        assert error_bound(env, N, t, form).bound <= E * (1 + 1e-8)
        if N > 0:
            assert error_bound(env, N - 1, t, form).bound > E


def test_subharmonic_order_about_half():
    env = DecayEnvelope(0.9, 1.1)
    for E in (1e-3, 1e-6, 1e-10):
        d = required_truncation(env, 3.0, E, "direct")
        s = required_truncation(env, 3.0, E, "subharmonic")
        assert abs(s - math.ceil(d / 2)) <= 1


def test_scalar_example_required_order():
    N, a, b, E = optimal_required_truncation(0.01, 0.8, 6.5, 1e-6, "direct")
    assert 113 <= N <= 142
    assert E <= 1e-6


def test_xi_bound_values():
    assert xi_polynomial_bound(1, 2.0) == pytest.approx(2.0)
    assert xi_polynomial_bound(3, 1.0) == pytest.approx(1 / 6)


def test_xi_bound_dominates_samples():
    # exhaustive tuples, m <= 4, entries in [-3, 3]; quadrature is too slow at m = 4
    T = 2 * math.pi
    ts = np.linspace(0, 3 * T, 120)
    for m in range(1, 5):
        bound = np.array([xi_polynomial_bound(m, t) for t in ts])
        for p in iter_tuples(m, -3, 3):
            vals = np.abs(xi_factor(p, 1.0)(ts))
            assert np.all(vals <= bound * (1 + 1e-12) + 1e-12), p


def test_xi_bound_against_quadrature():
    t, vals = trapz_xi((2, -1, 0), 1.0, 3 * 2 * math.pi, n=4000)
    assert np.all(np.abs(vals) <= t ** 3 / 6 + 1e-9)


def test_taylor_remainder_geometric():
    for x in (0.1, -0.4, 0.7):
        assert taylor_remainder(x, 0, 5) == pytest.approx(x ** 6 / (1 - x), rel=1e-13)


def test_taylor_remainder_zero():
    assert taylor_remainder(0.0, 3, 4) == 0.0


def direct_tail(x, k, N):
    total, M = 0.0, N + 1
    while True:
        term = math.comb(M + k, k) * x ** M
        total += term
        if abs(term) < 1e-18 * abs(total):
            return total
        M += 1


def test_taylor_remainder_direct_sum():
    assert taylor_remainder(0.3, 3, 7) == pytest.approx(direct_tail(0.3, 3, 7), rel=1e-13)


def test_taylor_remainder_domain():
    with pytest.raises(DomainError):
        taylor_remainder(1.0, 1, 1)

"""Builtin example systems as Fourier series."""

import math

import numpy as np

from .fourier import DecayEnvelope, FourierMatrixSeries, fit_decay_envelope, \
    optimal_finite_support_envelope
from .hbm import DuffingParams, linearized_series, solve_duffing_hbm
from .numerics import spectral_norm

DUFFING_CONFIGS = {
    1: DuffingParams(alpha=5.0, beta=0.1, delta=0.02, F=0.1, omega=5.0),
    2: DuffingParams(alpha=0.5, beta=3.0, delta=0.05, F=0.1, omega=0.3),
}


def scalar_series(beta, gamma, omega=1.0):
    """Scalar system ``y' = (beta + 2 gamma cos(omega t)) y``."""
    return FourierMatrixSeries(omega=omega, dim=1,
                               coeffs={0: [[beta]], 1: [[gamma]], -1: [[gamma]]}, real=True)


def scalar_exact(beta, gamma, t, omega=1.0):
    """Closed-form fundamental solution of :func:`scalar_series`."""
    return math.exp(beta * t + 2.0 * gamma * math.sin(omega * t) / omega)


def mathieu_series(delta, epsilon, omega=2.0):
    """First-order Mathieu system ``x'' + (delta + epsilon cos(omega t)) x = 0``."""
    return FourierMatrixSeries(
        omega=omega, dim=2,
        coeffs={0: [[0.0, 1.0], [-delta, 0.0]],
                1: [[0.0, 0.0], [-epsilon / 2, 0.0]],
                -1: [[0.0, 0.0], [-epsilon / 2, 0.0]]},
        real=True)


def support_one_norms(series):
    """``(||J_0||, max(||J_1||, ||J_-1||))`` for a series supported on ``|k| <= 1``."""
    if series.max_harmonic > 1:
        raise ValueError("series has harmonics beyond |k| = 1")
    beta = spectral_norm(series.coeff(0))
    gamma = max(spectral_norm(series.coeff(1)), spectral_norm(series.coeff(-1)))
    return beta, gamma


def optimal_envelope_factory(series, t, subharmonic=True):
    """``N -> DecayEnvelope`` minimising the bound at each order.

    Only for series with harmonics ``|k| <= 1``. The subharmonic bound has
    exponent ``2N``, so the envelope is optimised for that order.
    """
    beta, gamma = support_one_norms(series)
    factor = 2 if subharmonic else 1

    def env(N):
        a, b, _ = optimal_finite_support_envelope(beta, gamma, t, max(1, factor * N))
        return DecayEnvelope(a=a, b=b)
    return env


def default_envelope(series, t, subharmonic=True):
    """Envelope used by the CLI when none is given.

    Series with harmonics ``|k| <= 1`` get the per-order optimal envelope;
    anything else gets the majorising fit of its coefficient norms.
    """
    if series.max_harmonic <= 1:
        if all(not np.any(series.coeff(k)) for k in (-1, 1)):
            a = spectral_norm(series.coeff(0))
            return DecayEnvelope(a=a, b=700.0)
        return optimal_envelope_factory(series, t, subharmonic)
    return fit_decay_envelope(series)


def duffing_system(config=1, N_h=45, params=None):
    """Solve the Duffing oscillator by harmonic balance and linearise.

    Returns
    -------
    (series, solution, params)
    """
    if params is None:
        params = DUFFING_CONFIGS[config]
    sol = solve_duffing_hbm(params, N_h)
    return linearized_series(sol, params), sol, params

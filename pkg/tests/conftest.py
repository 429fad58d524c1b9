"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the code paths under test: high
precision arithmetic comes from mpmath, reference trajectories from scipy's
DOP853, quadrature from a hand-rolled trapezoidal rule.
"""

import math

import mpmath
import numpy as np
import pytest
import scipy.integrate

from hillcert.fourier import FourierMatrixSeries, eval_series


def mp_matrix(A):
    A = np.asarray(A, dtype=complex)
    return mpmath.matrix([[mpmath.mpc(v.real, v.imag) for v in row] for row in A])


def to_numpy(M):
    return np.array([[complex(M[i, j]) for j in range(M.cols)] for i in range(M.rows)])


def taylor_expm(A, dps=64):
    """exp(A) by Taylor series with scaling and squaring in ``dps`` digits."""
    with mpmath.workdps(dps):
        M = mp_matrix(A)
        norm = mpmath.mnorm(M, 1)
        s = max(0, int(mpmath.ceil(mpmath.log(norm + 1, 2))) + 1)
        M = M / mpmath.mpf(2) ** s
        n = M.rows
        out = mpmath.eye(n)
        term = mpmath.eye(n)
        tol = mpmath.mpf(10) ** (-dps)
        for k in range(1, 400):
            term = term * M / k
            out = out + term
            if mpmath.mnorm(term, 1) < tol:
                break
        for _ in range(s):
            out = out * out
        return to_numpy(out)


def mp_sigma_min(A, dps=32):
    with mpmath.workdps(dps):
        s = mpmath.svd_c(mp_matrix(A), compute_uv=False)
        return float(min(abs(s[i]) for i in range(len(s))))


def gram_sigma_min(A):
    """sqrt of the smallest eigenvalue of A^H A, computed in mpmath."""
    A = np.asarray(A, dtype=complex)
    with mpmath.workdps(40):
        G = mp_matrix(A.conj().T @ A)
        ev = mpmath.eighe(G, eigvals_only=True)
        return float(mpmath.sqrt(max(min(ev), 0)))


def poly_roots(coeffs):
    """Roots by mpmath's Durand-Kerner iteration, highest degree first."""
    with mpmath.workdps(40):
        roots = mpmath.polyroots([mpmath.mpf(c) for c in coeffs], maxsteps=200, extraprec=80)
        return [complex(r) for r in roots]


def rk_fundamental(series, t, tol=1e-12):
    """Fundamental solution at ``t`` from scipy's DOP853."""
    n = series.dim
    J = lambda tau: eval_series(series, tau)

    def rhs(tau, y):
        return (J(tau) @ y.reshape(n, n)).ravel()

    sol = scipy.integrate.solve_ivp(rhs, (0.0, t), np.eye(n, dtype=complex).ravel(),
                                    method="DOP853", rtol=tol, atol=tol)
    assert sol.success
    return sol.y[:, -1].reshape(n, n)


def trapz_xi(p, omega, t_end, n=20000):
    """xi_p on a uniform grid by nested cumulative trapezoid with Richardson extrapolation."""

    def nested(m):
        t = np.linspace(0.0, t_end, m + 1)
        f = np.ones_like(t, dtype=complex)
        for pk in reversed(p):
            g = f * np.exp(1j * pk * omega * t)
            f = np.concatenate([[0.0], np.cumsum((g[1:] + g[:-1]) / 2) * (t[1] - t[0])])
        return t, f

    t, coarse = nested(n)
    _, fine = nested(2 * n)
    return t, (4 * fine[::2] - coarse) / 3


def random_series(rng, dim, support, omega=1.0, scale=0.5, real=False):
    coeffs = {}
    for k in range(-support, support + 1):
        coeffs[k] = scale * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    if real:
        for k in range(1, support + 1):
            coeffs[-k] = coeffs[k].conj()
        coeffs[0] = coeffs[0].real
    return FourierMatrixSeries(omega=omega, dim=dim, coeffs=coeffs, real=real)


_REPORT_LINES = []


def report(name, ok, detail=""):
    """One acceptance line on stdout, repeated in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f": {detail}"
    print(line)
    _REPORT_LINES.append(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if _REPORT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _REPORT_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


TWO_PI = 2 * math.pi

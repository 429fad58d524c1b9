"""Harmonic balance for the forced Duffing oscillator.

    x'' + delta x' + alpha x + beta x^3 = F cos(omega t)

The displacement is represented by complex Fourier coefficients
``c_k, k = -N_h..N_h`` with ``c_{-k} = conj(c_k)``. The cubic term is
evaluated by alternating frequency/time (inverse FFT, cube, forward FFT) on
at least ``4 N_h + 1`` samples, which is enough to keep the projected
harmonics ``|k| <= N_h`` of ``x^3`` free of aliasing.
"""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConvergenceError, ParameterError
from .fourier import FourierMatrixSeries

NEWTON_TOL = 1e-12
NEWTON_MAXITER = 50
DEFAULT_HARMONICS = 45


@dataclass(frozen=True)
class DuffingParams:
    alpha: float
    beta: float
    delta: float
    F: float
    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ParameterError(f"omega must be positive, got {self.omega}")

    @property
    def period(self):
        return 2 * np.pi / self.omega


@dataclass(frozen=True)
class PeriodicSolution:
    """Converged harmonic-balance solution.

    Attributes
    ----------
    harmonics : int
        ``N_h``.
    coeffs : (2 N_h + 1,) complex ndarray
        Coefficients of ``x_1`` for ``k = -N_h..N_h``.
    omega : float
    residual_norm : float
    iterations : int
    """

    harmonics: int
    coeffs: np.ndarray
    omega: float
    residual_norm: float
    iterations: int = 0

    def coeff(self, k):
        if abs(k) > self.harmonics:
            return 0j
        return complex(self.coeffs[k + self.harmonics])

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = np.arange(-self.harmonics, self.harmonics + 1)
        return np.real(np.exp(1j * self.omega * np.multiply.outer(t, k)) @ self.coeffs)

    def velocity(self, t):
        t = np.asarray(t, dtype=float)
        k = np.arange(-self.harmonics, self.harmonics + 1)
        return np.real(np.exp(1j * self.omega * np.multiply.outer(t, k))
                       @ (1j * k * self.omega * self.coeffs))


def _n_samples(N_h):
    return 4 * N_h + 1


def _to_time(coeffs, N_h, M):
    spec = np.zeros(M, dtype=complex)
    k = np.arange(-N_h, N_h + 1)
    spec[k % M] = coeffs
    return np.real(np.fft.ifft(spec)) * M


def _to_freq(x, N_h):
    M = len(x)
    X = np.fft.fft(x) / M
    k = np.arange(-N_h, N_h + 1)
    return X[k % M]


def _linear_factor(params, N_h):
    k = np.arange(-N_h, N_h + 1)
    w = k * params.omega
    return params.alpha - w ** 2 + 1j * params.delta * w


def _full_residual(coeffs, params, N_h):
    M = _n_samples(N_h)
    x = _to_time(coeffs, N_h, M)
    cubic = _to_freq(x ** 3, N_h)
    R = _linear_factor(params, N_h) * coeffs + params.beta * cubic
    R[N_h + 1] -= params.F / 2
    R[N_h - 1] -= params.F / 2
    return R


def _check_coeffs(coeffs, N_h):
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.shape != (2 * N_h + 1,):
        raise ParameterError(f"expected {2 * N_h + 1} coefficients, got {coeffs.shape}")
    if not np.allclose(coeffs, np.conj(coeffs[::-1]), rtol=0, atol=1e-12 * (1 + np.abs(coeffs).max())):
        raise ParameterError("coefficients must be conjugate-symmetric")
    return coeffs


def hbm_residual(coeffs, params, N_h):
    """Harmonic-balance residual for harmonics ``k = 0..N_h``.

    Parameters
    ----------
    coeffs : (2 N_h + 1,) array_like
        Conjugate-symmetric coefficients of ``x_1``, ``k = -N_h..N_h``.
    params : DuffingParams
    N_h : int

    Returns
    -------
    (N_h + 1,) complex ndarray
    """
    coeffs = _check_coeffs(coeffs, N_h)
    return _full_residual(coeffs, params, N_h)[N_h:]


def _pack(coeffs, N_h):
    half = coeffs[N_h:]
    return np.concatenate([[half[0].real], half[1:].real, half[1:].imag])


def _unpack(u, N_h):
    half = np.empty(N_h + 1, dtype=complex)
    half[0] = u[0]
    half[1:] = u[1:N_h + 1] + 1j * u[N_h + 1:]
    return np.concatenate([np.conj(half[:0:-1]), half])


def _real_residual(coeffs, params, N_h):
    R = _full_residual(coeffs, params, N_h)[N_h:]
    return np.concatenate([[R[0].real], R[1:].real, R[1:].imag])


def _jacobian(coeffs, params, N_h):
    """Exact Jacobian of the packed real residual w.r.t. the packed unknowns."""
    M = _n_samples(N_h)
    t = np.arange(M) / M
    x = _to_time(coeffs, N_h, M)
    k = np.arange(1, N_h + 1)
    phase = np.exp(2j * np.pi * np.outer(t, k))
    # time signals of the unknown directions: c_0, Re c_k, Im c_k
    basis = np.concatenate([np.ones((M, 1)), 2 * phase.real, -2 * phase.imag], axis=1)
    dcubic = np.fft.fft(3 * x[:, None] ** 2 * basis, axis=0) / M
    dcubic = dcubic[np.arange(0, N_h + 1)]
    lin = _linear_factor(params, N_h)[N_h:]
    n = 2 * N_h + 1
    dR = params.beta * dcubic
    dR[0, 0] += lin[0]
    for i in range(1, N_h + 1):
        dR[i, i] += lin[i]
        dR[i, N_h + i] += 1j * lin[i]
    J = np.empty((n, n))
    J[0] = dR[0].real
    J[1:N_h + 1] = dR[1:].real
    J[N_h + 1:] = dR[1:].imag
    return J


def linear_response(params, N_h):
    """Coefficients of the steady state with ``beta = 0``.

    Raises
    ------
    ParameterError
        At exact undamped resonance, where no periodic response exists.
    """
    if N_h < 1:
        raise ParameterError("N_h must be >= 1")
    denom = params.alpha - params.omega ** 2 + 1j * params.delta * params.omega
    if denom == 0:
        raise ParameterError("undamped resonance: the linear response does not exist")
    c = np.zeros(2 * N_h + 1, dtype=complex)
    c1 = (params.F / 2) / denom
    c[N_h + 1] = c1
    c[N_h - 1] = np.conj(c1)
    return c


def _initial_guess(params, N_h):
    try:
        return linear_response(params, N_h)
    except ParameterError:
        if params.beta == 0:
            raise
    # one-harmonic cubic balance 3/4 beta A^3 = F at linear resonance
    A = np.cbrt(4 * params.F / (3 * params.beta))
    c = np.zeros(2 * N_h + 1, dtype=complex)
    c[N_h + 1] = c[N_h - 1] = A / 2
    return c


def solve_duffing_hbm(params, N_h=DEFAULT_HARMONICS, initial=None, tol=NEWTON_TOL,
                      maxiter=NEWTON_MAXITER):
    """Newton iteration on the harmonic-balance residual.

    Parameters
    ----------
    params : DuffingParams
    N_h : int, optional
        Number of harmonics, default 45.
    initial : PeriodicSolution, optional
        Starting point; the linear response by default. A solution with a
        different harmonic count is padded or truncated.
    tol : float, optional
        Stop once the residual 2-norm (harmonics ``0..N_h``) is below this.

    Raises
    ------
    ConvergenceError
        If the tolerance is not reached within ``maxiter`` steps.
    """
    if N_h < 1:
        raise ParameterError("N_h must be >= 1")
    if initial is None:
        c = _initial_guess(params, N_h)
    else:
        c = np.array([initial.coeff(k) for k in range(-N_h, N_h + 1)], dtype=complex)
    u = _pack(c, N_h)
    r = _real_residual(c, params, N_h)
    norm = float(np.linalg.norm(r))
    it = 0
    while norm >= tol:
        if it >= maxiter:
            raise ConvergenceError(f"harmonic balance did not converge in {maxiter} iterations "
                                   f"(residual {norm:.3e})")
        step = np.linalg.solve(_jacobian(c, params, N_h), -r)
        # backtracking keeps Newton from overshooting on strongly nonlinear cases
        lam = 1.0
        while True:
            u_new = u + lam * step
            c_new = _unpack(u_new, N_h)
            r_new = _real_residual(c_new, params, N_h)
            n_new = float(np.linalg.norm(r_new))
            if n_new < norm or lam < 1e-4:
                break
            lam /= 2
        u, c, r, norm = u_new, c_new, r_new, n_new
        it += 1
    return PeriodicSolution(harmonics=N_h, coeffs=c, omega=params.omega,
                            residual_norm=norm, iterations=it)


def linearized_series(sol, params):
    """Fourier series of ``J(t) = [[0, 1], [-alpha - 3 beta x_1(t)^2, -delta]]``."""
    N_h = sol.harmonics
    c = sol.coeffs
    # x_1^2 coefficients by exact convolution, |k| <= 2 N_h
    sq = np.convolve(c, c)
    coeffs = {}
    for idx, v in enumerate(sq):
        k = idx - 2 * N_h
        J = np.zeros((2, 2), dtype=complex)
        J[1, 0] = -3 * params.beta * v
        if k == 0:
            J[0, 1] = 1.0
            J[1, 0] -= params.alpha
            J[1, 1] = -params.delta
        if np.any(J != 0):
            coeffs[k] = J
    return FourierMatrixSeries(omega=params.omega, dim=2, coeffs=coeffs, real=True)


def solution_to_json(sol, params):
    return {
        "params": asdict(params),
        "harmonics": sol.harmonics,
        "omega": sol.omega,
        "residual_norm": sol.residual_norm,
        "coeffs": [{"k": k, "re": float(v.real), "im": float(v.imag)}
                   for k, v in zip(range(-sol.harmonics, sol.harmonics + 1), sol.coeffs)],
    }


def solution_from_json(data):
    params = DuffingParams(**data["params"])
    N_h = int(data["harmonics"])
    c = np.zeros(2 * N_h + 1, dtype=complex)
    for item in data["coeffs"]:
        c[int(item["k"]) + N_h] = complex(item["re"], item["im"])
    sol = PeriodicSolution(harmonics=N_h, coeffs=c, omega=float(data["omega"]),
                           residual_norm=float(data["residual_norm"]))
    return sol, params


def save_solution(sol, params, path):
    with open(path, "w") as fh:
        json.dump(solution_to_json(sol, params), fh, indent=2)


def load_solution(path):
    with open(path) as fh:
        return solution_from_json(json.load(fh))

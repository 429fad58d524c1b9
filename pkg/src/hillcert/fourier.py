"""Matrix Fourier series of a T-periodic system matrix J(t).

A :class:`FourierMatrixSeries` stores finitely many coefficient matrices
``J_k`` so that ``J(t) = sum_k J_k exp(i k omega t)``. This module also fits
the exponential decay envelope ``||J_k|| <= a exp(-b |k|)`` that the error
bounds need, and implements the coefficient algebra used elsewhere
(evaluation, sampling, Cauchy products, JSON I/O).
"""

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import DimensionError, EmptyFitError, ParameterError
from .numerics import spectral_norm

LN2 = math.log(2.0)

#: Coefficients with spectral norm at or below this are ignored when fitting.
DEFAULT_FLOOR = 1e-15


@dataclass(frozen=True)
class FourierMatrixSeries:
    """Finite matrix Fourier series ``sum_k J_k exp(i k omega t)``.

    Parameters
    ----------
    omega : float
        Base angular frequency; the period is ``2 pi / omega``.
    dim : int
        State dimension ``n``.
    coeffs : mapping of int to (n, n) array_like
        Fourier coefficient matrices. Missing keys are zero.
    real : bool, optional
        Declare that J(t) is real-valued. When set, conjugate symmetry
        ``J_{-k} = conj(J_k)`` is checked on construction.
    """

    omega: float
    dim: int
    coeffs: dict = field(default_factory=dict)
    real: bool = False

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ParameterError(f"omega must be positive and finite, got {self.omega}")
        if self.dim < 1:
            raise ParameterError(f"dim must be >= 1, got {self.dim}")
        frozen = {}
        for k, J in self.coeffs.items():
            J = np.array(J, dtype=complex)
            if J.shape != (self.dim, self.dim):
                raise DimensionError(
                    f"coefficient {k} has shape {J.shape}, expected {(self.dim, self.dim)}")
            if not np.all(np.isfinite(J)):
                raise ParameterError(f"coefficient {k} has non-finite entries")
            J.setflags(write=False)
            frozen[int(k)] = J
        object.__setattr__(self, "coeffs", MappingProxyType(frozen))
        if self.real:
            for k, J in frozen.items():
                partner = frozen.get(-k, np.zeros_like(J))
                scale = max(1.0, float(np.max(np.abs(J))))
                if not np.allclose(partner, J.conj(), rtol=0, atol=1e-12 * scale):
                    raise ParameterError(
                        f"real series requires J_{{-{k}}} = conj(J_{k})")

    @property
    def period(self):
        return 2.0 * math.pi / self.omega

    @property
    def support(self):
        """Sorted list of stored harmonic indices."""
        return sorted(self.coeffs)

    @property
    def max_harmonic(self):
        return max((abs(k) for k in self.coeffs), default=0)

    def coeff(self, k):
        """``J_k``, or the zero matrix if ``k`` is not stored."""
        J = self.coeffs.get(k)
        if J is None:
            return np.zeros((self.dim, self.dim), dtype=complex)
        return J

    def norms(self):
        """Mapping ``k -> ||J_k||_2`` over the stored support."""
        return {k: spectral_norm(J) for k, J in self.coeffs.items()}

    def __call__(self, t):
        return eval_series(self, t)


@dataclass(frozen=True)
class DecayEnvelope:
    """Constants of the bound ``||J_k||_2 <= a exp(-b |k|)``.

    ``b`` may be ``inf`` for a series that only has ``J_0``; such an
    envelope cannot be used in a certificate until the caller picks a finite
    ``b``.
    """

    a: float
    b: float

    def __post_init__(self):
        if not self.a >= 0 or math.isnan(self.a) or math.isinf(self.a):
            raise ParameterError(f"envelope a must be finite and >= 0, got {self.a}")
        if not self.b > 0:
            raise ParameterError(f"envelope b must be positive, got {self.b}")

    @property
    def bound_valid(self):
        return self.b > LN2 and math.isfinite(self.b)

    def majorizes(self, series, rtol=1e-12, floor=0.0):
        """Check the envelope inequality for every coefficient with norm above ``floor``."""
        for k, norm in series.norms().items():
            if norm > floor and norm > self.a * math.exp(-self.b * abs(k)) * (1 + rtol) + 1e-300:
                return False
        return True


def eval_series(series, t):
    """Evaluate ``J(t) = sum_k J_k exp(i k omega t)`` over the stored support."""
    out = np.zeros((series.dim, series.dim), dtype=complex)
    for k, J in series.coeffs.items():
        out += J * np.exp(1j * k * series.omega * t)
    return out


def series_evaluator(series):
    """Return a fast vectorised callable ``t -> J(t)`` for repeated evaluation.

    Used inside integrators where :func:`eval_series` would be called many
    thousands of times.
    """
    ks = np.array(series.support, dtype=float)
    if ks.size == 0:
        zero = np.zeros((series.dim, series.dim), dtype=complex)
        return lambda t: zero.copy()
    stack = np.stack([series.coeffs[int(k)] for k in ks])
    freqs = 1j * ks * series.omega

    def J(t):
        return np.tensordot(np.exp(freqs * t), stack, axes=1)

    return J


def coefficients_from_samples(sampler, omega, n_samples, k_max, real=False):
    """Project uniform samples of one period onto harmonics ``|k| <= k_max``.

    Parameters
    ----------
    sampler : callable
        ``t -> (n, n)`` matrix, defined on ``[0, 2 pi / omega)``.
    omega : float
        Base frequency.
    n_samples : int
        Number of equispaced samples; must exceed ``2 * k_max`` so that the
        retained harmonics are not aliased onto each other.
    k_max : int
        Highest harmonic kept.
    """
    if k_max < 0:
        raise ParameterError("k_max must be >= 0")
    if n_samples <= 2 * k_max:
        raise ParameterError(
            f"aliasing guard: need n_samples > 2*k_max ({n_samples} <= {2 * k_max})")
    T = 2.0 * math.pi / omega
    ts = np.arange(n_samples) * (T / n_samples)
    samples = np.array([np.asarray(sampler(t), dtype=complex) for t in ts])
    if samples.ndim == 1:
        samples = samples[:, None, None]
    if samples.ndim != 3 or samples.shape[1] != samples.shape[2]:
        raise DimensionError(f"sampler must return square matrices, got {samples.shape[1:]}")
    n = samples.shape[1]
    # J_k = (1/M) sum_j J(t_j) exp(-i k omega t_j) is the DFT along axis 0.
    spectrum = np.fft.fft(samples, axis=0) / n_samples
    coeffs = {}
    for k in range(-k_max, k_max + 1):
        coeffs[k] = spectrum[k % n_samples]
    if real:
        coeffs = {k: 0.5 * (coeffs[k] + coeffs[-k].conj()) for k in coeffs}
    return FourierMatrixSeries(omega=omega, dim=n, coeffs=coeffs, real=real)


def convolve(series_a, series_b):
    """Cauchy product of two series: the coefficients of ``A(t) B(t)``."""
    if not math.isclose(series_a.omega, series_b.omega, rel_tol=1e-14):
        raise ParameterError(
            f"frequency mismatch: {series_a.omega} vs {series_b.omega}")
    if series_a.dim != series_b.dim:
        raise DimensionError(f"dimension mismatch: {series_a.dim} vs {series_b.dim}")
    out = {}
    for ka, A in series_a.coeffs.items():
        for kb, B in series_b.coeffs.items():
            k = ka + kb
            prod = A @ B
            out[k] = out[k] + prod if k in out else prod
    return FourierMatrixSeries(omega=series_a.omega, dim=series_a.dim, coeffs=out,
                               real=series_a.real and series_b.real)


def fit_decay_envelope(series, floor=DEFAULT_FLOOR, method="anchored"):
    """Fit constants ``(a, b)`` with ``||J_k||_2 <= a exp(-b |k|)``.

    Only coefficients with norm above ``floor`` take part. Two methods are
    available; both return a true majorant of every retained coefficient.

    ``"anchored"`` (default)
        ``a`` is the largest coefficient norm and ``b`` the steepest decay
        that still majorises all retained coefficients,
        ``b = min_k (ln a - ln ||J_k||) / |k|``.
    ``"lstsq"``
        Least-squares line through ``(|k|, ln ||J_k||)``; the slope gives
        ``-b`` and ``a`` is then raised just enough to majorise every
        retained coefficient.

    A series whose only retained coefficient is ``J_0`` yields ``b = inf``;
    the caller must then choose a finite ``b`` before certifying anything.

    Raises
    ------
    EmptyFitError
        If every coefficient is at or below ``floor``.
    """
    if floor <= 0:
        raise ParameterError("floor must be positive")
    pts = [(abs(k), nrm) for k, nrm in series.norms().items() if nrm > floor]
    if not pts:
        raise EmptyFitError("all Fourier coefficients lie below the fitting floor")
    ks = np.array([p[0] for p in pts], dtype=float)
    logs = np.log(np.array([p[1] for p in pts]))
    if np.all(ks == 0):
        return DecayEnvelope(a=float(np.exp(logs.max())), b=math.inf)
    if method == "anchored":
        log_a = float(logs.max())
        nonzero = ks > 0
        if not np.any(nonzero):
            return DecayEnvelope(a=math.exp(log_a), b=math.inf)
        b = float(np.min((log_a - logs[nonzero]) / ks[nonzero]))
        if b <= 0:
            # the largest coefficient sits at |k| > 0; fall back to the fit below
            method = "lstsq"
        else:
            return DecayEnvelope(a=math.exp(log_a), b=b)
    if method != "lstsq":
        raise ParameterError(f"unknown fit method {method!r}")
    if np.unique(ks).size < 2:
        slope = -1.0
    else:
        slope, _ = np.polyfit(ks, logs, 1)
    b = -float(slope)
    if not b > 0:
        raise EmptyFitError("retained coefficients do not decay; no envelope with b > 0")
    log_a = float(np.max(logs + b * ks))
    return DecayEnvelope(a=math.exp(log_a), b=b)


def optimal_finite_support_envelope(beta, gamma, t, N):
    """Bound-minimising envelope for a series supported on ``k in {-1, 0, 1}``.

    With ``||J_0|| = beta`` and ``||J_{+-1}|| = gamma`` the bound at order
    ``N`` written in terms of ``eps = 2 exp(-b)`` is
    ``eps**N * (exp(4 a t) - 1)`` with ``a = max(beta, 2 gamma / eps)``.
    Its minimiser is ``eps = 8 t gamma / N`` (``a = N / (4 t)``) when
    ``beta < N / (4 t)``, and ``eps = 2 gamma / beta`` (``a = beta``)
    otherwise.

    ``eps`` is clipped into ``(0, 1)`` so that the returned envelope always
    has ``b > ln 2``; ``E_star`` is the bound evaluated with the returned
    envelope.

    Returns
    -------
    (a, b, E_star) : tuple of float
    """
    if N < 1:
        raise ParameterError("N must be >= 1")
    if beta < 0 or gamma < 0:
        raise ParameterError("beta and gamma must be nonnegative")
    t = abs(t)
    if t == 0:
        raise ParameterError("t must be nonzero")
    if gamma == 0:
        # only J_0: any b > 0 is admissible; a steep b drives the bound to zero
        a, b = beta, 700.0
        return a, b, _log_domain_bound(a, b, N, t)
    if beta < N / (4.0 * t):
        eps = 8.0 * t * gamma / N
    else:
        eps = 2.0 * gamma / beta
    eps = min(eps, 1.0 - 1e-12)
    a = max(beta, 2.0 * gamma / eps)
    b = LN2 - math.log(eps)
    return a, b, _log_domain_bound(a, b, N, t)


def scalar_bound_over_eps(beta, gamma, t, N, eps):
    """``eps**N (exp(4 a(eps) t) - 1)`` with ``a(eps) = max(beta, 2 gamma / eps)``."""
    a = max(beta, 2.0 * gamma / eps)
    return _log_domain_bound(a, LN2 - math.log(eps), N, abs(t))


def _log_domain_bound(a, b, N, t):
    x = 4.0 * a * t
    if x == 0:
        return 0.0
    log_val = N * (LN2 - b) + x + math.log(-math.expm1(-x))
    return math.exp(log_val) if log_val < 709 else math.inf


def series_to_json(series):
    """Serialise a series into the JSON-compatible dict used by the CLI."""
    return {
        "omega": series.omega,
        "dim": series.dim,
        "real": series.real,
        "coeffs": [
            {"k": k, "re": series.coeffs[k].real.tolist(), "im": series.coeffs[k].imag.tolist()}
            for k in series.support
        ],
    }


def series_from_json(data):
    """Inverse of :func:`series_to_json`. ``im`` may be omitted for real matrices."""
    try:
        omega = float(data["omega"])
        dim = int(data["dim"])
        coeffs = {}
        for entry in data["coeffs"]:
            re = np.asarray(entry["re"], dtype=float)
            im = np.asarray(entry.get("im", np.zeros_like(re)), dtype=float)
            coeffs[int(entry["k"])] = re + 1j * im
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"malformed series document: {exc}") from exc
    return FourierMatrixSeries(omega=omega, dim=dim, coeffs=coeffs,
                               real=bool(data.get("real", False)))


def load_series(path):
    with open(path) as fh:
        return series_from_json(json.load(fh))


def save_series(series, path):
    with open(path, "w") as fh:
        json.dump(series_to_json(series), fh, indent=2)

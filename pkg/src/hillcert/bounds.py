"""Closed-form truncation-error bounds and the truncation orders they imply.

For a coefficient envelope ``||J_k|| <= a exp(-b |k|)`` with ``b > ln 2`` the
direct projection error satisfies

    ||Phi(t) - C exp(H t) W|| <= (2 exp(-b))**N (exp(|4 a t|) - 1)

and the subharmonic variant the same expression with ``2N`` in place of
``N``. Everything is evaluated in the log domain so large ``N`` underflows
gracefully to 0.0 rather than producing NaN.
"""

import math
from dataclasses import dataclass

from .errors import DomainError, InvalidEnvelopeError, ParameterError
from .fourier import DecayEnvelope, optimal_finite_support_envelope
from .projection import Formulation

LN2 = math.log(2.0)

# relative slack used to recognise an exact integer solution of the inverse
_ROUND_TOL = 1e-9


@dataclass(frozen=True)
class ErrorCertificate:
    """A guaranteed upper bound on ``||Phi(t) - Phi_approx(t)||_2``."""

    bound: float
    t: float
    N: int
    formulation: Formulation
    envelope: DecayEnvelope


def _check_envelope(env):
    if not isinstance(env, DecayEnvelope):
        raise ParameterError("expected a DecayEnvelope")
    if not math.isfinite(env.b):
        raise InvalidEnvelopeError("b = inf is not usable in a certificate; choose a finite b")
    if not env.bound_valid:
        raise InvalidEnvelopeError(f"bound requires b > ln 2, got b = {env.b}")


def log_bound(a, b, N_eff, t):
    """``ln((2 e^{-b})^N_eff (e^{|4at|} - 1))``; ``-inf`` when the bound is zero."""
    x = abs(4.0 * a * t)
    if x == 0.0:
        return -math.inf
    # ln(e^x - 1) = x + ln(1 - e^{-x})
    return N_eff * (LN2 - b) + x + math.log(-math.expm1(-x))


def _bound_value(a, b, N_eff, t):
    lb = log_bound(a, b, N_eff, t)
    if lb == -math.inf:
        return 0.0
    if lb > 709.0:
        return math.inf
    return math.exp(lb)


def direct_error_bound(env, N, t):
    """Error bound for the direct projection at order ``N``.

    Parameters
    ----------
    env : DecayEnvelope
        Must satisfy ``ln 2 < b < inf``.
    N : int
        Truncation order, ``N >= 0``.
    t : float
        Time at which the fundamental matrix is approximated.

    Raises
    ------
    InvalidEnvelopeError
        If ``b <= ln 2`` or ``b`` is infinite.
    """
    _check_envelope(env)
    if N < 0:
        raise ParameterError(f"N must be >= 0, got {N}")
    return ErrorCertificate(bound=_bound_value(env.a, env.b, N, t), t=t, N=N,
                            formulation=Formulation.DIRECT, envelope=env)


def subharmonic_error_bound(env, N, t):
    """Error bound for the subharmonic projection; the exponent doubles to ``2N``."""
    _check_envelope(env)
    if N < 0:
        raise ParameterError(f"N must be >= 0, got {N}")
    return ErrorCertificate(bound=_bound_value(env.a, env.b, 2 * N, t), t=t, N=N,
                            formulation=Formulation.SUBHARMONIC, envelope=env)


def error_bound(env, N, t, formulation=Formulation.SUBHARMONIC):
    formulation = Formulation(formulation)
    if formulation is Formulation.DIRECT:
        return direct_error_bound(env, N, t)
    if formulation is Formulation.SUBHARMONIC:
        return subharmonic_error_bound(env, N, t)
    raise ParameterError("the reference solution carries no truncation bound")


def _ceil_tolerant(x):
    r = round(x)
    if abs(x - r) <= _ROUND_TOL * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def required_truncation(env, t, E_des, formulation=Formulation.SUBHARMONIC):
    """Smallest truncation order whose bound does not exceed ``E_des``.

    Returns
    -------
    int
        ``N*`` with ``bound(N*) <= E_des < bound(N* - 1)``, clamped at 0.
    """
    _check_envelope(env)
    formulation = Formulation(formulation)
    if not E_des > 0:
        raise ParameterError(f"E_des must be positive, got {E_des}")
    if t == 0:
        raise ParameterError("t must be nonzero")
    x = abs(4.0 * env.a * t)
    if x == 0.0:
        return 0
    threshold = (x + math.log(-math.expm1(-x)) - math.log(E_des)) / (env.b - LN2)
    if formulation is Formulation.SUBHARMONIC:
        threshold /= 2.0
    elif formulation is not Formulation.DIRECT:
        raise ParameterError("the reference solution carries no truncation bound")
    return max(0, _ceil_tolerant(threshold))


def optimal_required_truncation(beta, gamma, t, E_des, formulation=Formulation.SUBHARMONIC,
                                N_max=100000):
    """Smallest ``N`` certified to ``E_des`` when the envelope is re-optimised per ``N``.

    Applies to series supported on ``k in {-1, 0, 1}`` with ``||J_0|| = beta``
    and ``||J_{+-1}|| = gamma``. For each candidate order the envelope of
    :func:`hillcert.fourier.optimal_finite_support_envelope` is used (with
    the doubled order for the subharmonic formulation).

    Returns
    -------
    (N, a, b, bound) : tuple
    """
    formulation = Formulation(formulation)
    if not E_des > 0:
        raise ParameterError(f"E_des must be positive, got {E_des}")
    factor = 2 if formulation is Formulation.SUBHARMONIC else 1
    for N in range(1, N_max + 1):
        a, b, E = optimal_finite_support_envelope(beta, gamma, t, factor * N)
        if E <= E_des:
            return N, a, b, E
    raise ParameterError(f"no N <= {N_max} reaches E_des = {E_des}")


def xi_polynomial_bound(m, t):
    """``|t|**m / m!``, the a-priori bound on any scalar factor of length ``m``."""
    if m < 1:
        raise ParameterError(f"m must be >= 1, got {m}")
    t = abs(t)
    if t == 0:
        return 0.0
    return math.exp(m * math.log(t) - math.lgamma(m + 1))


def taylor_remainder(x, k, N):
    """Tail ``sum_{M > N} binom(M + k, k) x**M`` of the series of ``(1 - x)**-(k+1)``.

    Closed form ``x**N sum_{m=0}^{k} binom(N+k+1, N+m+1) (x / (1 - x))**(m+1)``.

    Raises
    ------
    DomainError
        If ``|x| >= 1``.
    """
    if not abs(x) < 1:
        raise DomainError(f"remainder needs |x| < 1, got {x}")
    if k < 0 or N < 0:
        raise ParameterError("k and N must be nonnegative")
    if x == 0:
        return 0.0
    r = x / (1.0 - x)
    total = 0.0
    for m in range(k + 1):
        total += math.comb(N + k + 1, N + m + 1) * r ** (m + 1)
    return x ** N * total

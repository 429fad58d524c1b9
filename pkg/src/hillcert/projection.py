"""Fundamental-matrix approximations from the Hill matrix, plus an RK reference.

``direct_fundamental`` returns the central block ``C exp(H t) W``.
``subharmonic_fundamental`` combines the two decoupled exponentials of the
period-doubled Hill matrix with alternating signs. ``reference_fundamental``
integrates ``Phi' = J(t) Phi`` with an adaptive Dormand-Prince 5(4) pair and
serves as the independent check of both.

The truncation bounds hold in exact arithmetic. The computed Hill
projections also carry rounding error, which grows with the transient
amplification ``||exp(H t)||`` and, for the subharmonic variant, with the
cancellation between its two sums. Each approximation therefore records a
``rounding`` estimate ``ROUNDING_FACTOR * u * dim(H) * ||exp(H t)||_1``.
This is an empirical allowance, not a proof.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, StiffnessError
from .fourier import series_evaluator
from .hill import assemble_full_subharmonic, assemble_hill, assemble_subharmonic_pair
from .numerics import mat_exp

# observed errors stay below ~5 u dim(H) ||exp(Ht)||_1; keep a tenfold margin
ROUNDING_FACTOR = 50.0
_U = float(np.finfo(float).eps)


class Formulation(str, enum.Enum):
    DIRECT = "direct"
    SUBHARMONIC = "subharmonic"
    REFERENCE = "reference"


@dataclass(frozen=True)
class FundamentalApprox:
    """Approximate ``Phi(t)`` with an estimate of its floating-point error."""

    value: np.ndarray
    t: float
    N: int
    formulation: Formulation
    rounding: float = 0.0


def _exp_times_stack(H, t, n, with_rounding=False):
    """``exp(H t) W`` where ``W`` stacks identities of size ``n``."""
    E = mat_exp(H * t)
    nb = H.shape[0] // n
    EW = E.reshape(H.shape[0], nb, n).sum(axis=1)
    if with_rounding:
        return EW, ROUNDING_FACTOR * _U * H.shape[0] * float(np.linalg.norm(E, 1))
    return EW


def direct_fundamental(series, N, t):
    """``Phi(t) ~ C exp(H t) W`` for the order-``N`` Hill matrix."""
    ops = assemble_hill(series, N)
    n = ops.n
    EW, rounding = _exp_times_stack(ops.H, t, n, with_rounding=True)
    value = EW[N * n:(N + 1) * n]
    return FundamentalApprox(value=value, t=t, N=N, formulation=Formulation.DIRECT,
                             rounding=rounding)


def q_blocks(series, N, t):
    """The ``2N+1`` blocks ``Q_j(t)`` of ``exp(i omega D t) exp(H t) W``, j = -N..N."""
    ops = assemble_hill(series, N)
    n = ops.n
    Q = np.exp(1j * series.omega * ops.D * t)[:, None] * _exp_times_stack(ops.H, t, n)
    return [Q[i * n:(i + 1) * n] for i in range(2 * N + 1)]


def subharmonic_q_blocks(series, N, t):
    """The ``4N+1`` blocks of the period-doubled stack, computed from the full ``H_tilde``.

    Used to cross-check :func:`subharmonic_fundamental`, which never forms
    ``H_tilde``.
    """
    H_tilde, D_tilde = assemble_full_subharmonic(series, N)
    n = series.dim
    Q = np.exp(1j * series.omega * D_tilde * t)[:, None] * _exp_times_stack(H_tilde, t, n)
    return [Q[i * n:(i + 1) * n] for i in range(4 * N + 1)]


def subharmonic_fundamental(series, N, t):
    """Subharmonic projection via the two decoupled exponentials.

    The even blocks (from ``H``) enter with ``+`` and the odd blocks (from
    ``H_hat``) with ``-``; each block is demodulated by its own frequency
    ``exp(i omega d t)`` before summation.
    """
    ops = assemble_subharmonic_pair(series, N)
    n = ops.n
    EW, r_even = _exp_times_stack(ops.H, t, n, with_rounding=True)
    EW_hat, r_odd = _exp_times_stack(ops.H_hat, t, n, with_rounding=True)
    even = np.exp(1j * series.omega * ops.D * t)[:, None] * EW
    odd = np.exp(1j * series.omega * ops.D_hat * t)[:, None] * EW_hat
    value = (even.reshape(-1, n, n).sum(axis=0) - odd.reshape(-1, n, n).sum(axis=0))
    return FundamentalApprox(value=value, t=t, N=N, formulation=Formulation.SUBHARMONIC,
                             rounding=r_even + r_odd)


def fundamental(series, N, t, formulation=Formulation.SUBHARMONIC):
    formulation = Formulation(formulation)
    if formulation is Formulation.DIRECT:
        return direct_fundamental(series, N, t)
    if formulation is Formulation.SUBHARMONIC:
        return subharmonic_fundamental(series, N, t)
    raise ParameterError(f"no truncation order applies to {formulation.value}")


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
H_MIN = 1e-12


def integrate_dopri(rhs, y0, t_end, rel_tol, abs_tol, h_max):
    """Integrate ``y' = rhs(t, y)`` from 0 to ``t_end`` with Dormand-Prince 5(4).

    Step control is the PI controller of Hairer & Wanner with safety factor
    0.9; steps are confined to ``[1e-12, h_max]``.
    """
    y = np.array(y0, dtype=complex)
    t = 0.0
    if t_end == 0:
        return y
    direction = 1.0 if t_end > 0 else -1.0
    span = abs(t_end)
    k1 = rhs(t, y)
    scale = abs_tol + rel_tol * np.abs(y)
    d0 = np.sqrt(np.mean(np.abs(y / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(k1 / scale) ** 2))
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    h = min(max(h, H_MIN), h_max, span)
    err_prev = 1e-4
    alpha, beta = 0.7 / 5, 0.4 / 5
    ks = [None] * 7
    while abs(t) < span:
        h = min(h, span - abs(t))
        ks[0] = k1
        for s in range(1, 7):
            dy = sum(a * k for a, k in zip(_A[s], ks[:s]) if a != 0.0)
            ks[s] = rhs(t + direction * _C[s] * h, y + direction * h * dy)
        y_new = y + direction * h * sum(b * k for b, k in zip(_B5, ks) if b != 0.0)
        err_vec = h * sum(e * k for e, k in zip(_E, ks) if e != 0.0)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))
        if err <= 1.0:
            t += direction * h
            y = y_new
            k1 = ks[6]
            err = max(err, 1e-10)
            factor = SAFETY * err ** -alpha * err_prev ** beta
            err_prev = err
            h = h * min(5.0, max(0.2, factor))
        else:
            h = h * max(0.2, SAFETY * err ** -0.2)
        h = min(h, h_max)
        if h < H_MIN and span - abs(t) > H_MIN:
            raise StiffnessError(f"step size fell below {H_MIN:g} at t = {t:g}")
    return y


def reference_fundamental(series, t, rel_tol=1e-10, abs_tol=1e-10):
    """Fundamental matrix by adaptive Runge-Kutta integration of ``Phi' = J(t) Phi``."""
    for name, tol in (("rel_tol", rel_tol), ("abs_tol", abs_tol)):
        if not 0 < tol <= 1e-2:
            raise ParameterError(f"{name} must lie in (0, 1e-2], got {tol}")
    n = series.dim
    J = series_evaluator(series)

    def rhs(tau, y):
        return (J(tau) @ y.reshape(n, n)).ravel()

    h_max = series.period / 10.0
    y = integrate_dopri(rhs, np.eye(n, dtype=complex).ravel(), float(t),
                        rel_tol, abs_tol, h_max)
    return FundamentalApprox(value=y.reshape(n, n), t=t, N=-1,
                             formulation=Formulation.REFERENCE)

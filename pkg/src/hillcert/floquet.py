"""Floquet multipliers and certified stability verdicts.

Every matrix within 2-norm distance ``E`` of ``phi`` has its eigenvalues in
the pseudospectrum ``{z : sigma_min(z I - phi) <= E}``. Since
``z -> sigma_min(z I - phi)`` is 1-Lipschitz, a curve segment of length ``h``
whose endpoints both have ``sigma_min > E + h/2`` cannot meet the
pseudospectrum. All sampled checks below rely on this.
"""

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import error_bound
from .errors import InvalidEnvelopeError, ParameterError
from .numerics import as_matrix, eigenvalues, min_singular_values_shifted, spectral_norm
from .projection import Formulation, fundamental

DEFAULT_CIRCLE_SAMPLES = 4096
DEFAULT_AXIS_SAMPLES = 2048
# a multiplier counts as numerically stable up to this excess over 1
STABILITY_TOL = 1e-6
# bisection depth for the adaptive Lipschitz exclusion test
MAX_REFINE = 40


class Status(str, enum.Enum):
    GUARANTEED_STABLE = "guaranteed-stable"
    GUARANTEED_UNSTABLE = "guaranteed-unstable"
    NUMERIC_STABLE = "numeric-stable"
    NUMERIC_UNSTABLE = "numeric-unstable"
    UNDETERMINED = "undetermined"

    @property
    def guaranteed(self):
        return self in (Status.GUARANTEED_STABLE, Status.GUARANTEED_UNSTABLE)


@dataclass(frozen=True)
class StabilityVerdict:
    """Multipliers, exponents and certification status of one monodromy matrix.

    ``numeric_stable`` records the uncertified eigenvalue verdict so an
    ``UNDETERMINED`` status still carries a best guess.
    """

    multipliers: tuple
    exponents: tuple
    bound: float
    status: Status
    N: int = -1
    numeric_stable: bool = True
    monodromy: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def max_modulus(self):
        return max(abs(x) for x in self.multipliers)


def floquet_multipliers(phi):
    """Eigenvalues of the monodromy matrix (``FundamentalApprox`` or array)."""
    value = getattr(phi, "value", phi)
    return [complex(x) for x in eigenvalues(value)]


def floquet_exponents(multipliers, T):
    """Principal-branch exponents ``ln(lambda) / T``."""
    out = []
    for lam in multipliers:
        if lam == 0:
            out.append(complex(-math.inf, 0.0))
        else:
            out.append(cmath.log(lam) / T)
    return out


def pseudospectrum_membership(phi, z, E):
    """True iff ``sigma_min(z I - phi) <= E``."""
    if E < 0:
        raise ParameterError(f"E must be nonnegative, got {E}")
    return bool(min_singular_values_shifted(phi, [z])[0] <= E)


def _numeric_stable(multipliers):
    return max(abs(x) for x in multipliers) <= 1.0 + STABILITY_TOL


def _curve_excluded(phi, E, curve, s0, s1, n_samples, max_refine=MAX_REFINE):
    """Decide whether the curve ``curve(s)``, ``s in [s0, s1]``, avoids the E-pseudospectrum.

    ``curve`` must be parametrised with unit speed (arc length). Returns
    ``True`` if the curve is provably outside, ``False`` if a sample inside
    was found or refinement ran out.
    """
    s = np.linspace(s0, s1, n_samples + 1)
    sig = min_singular_values_shifted(phi, curve(s))
    if np.any(sig <= E):
        return False
    pending = [(s[i], s[i + 1], sig[i], sig[i + 1], 0) for i in range(n_samples)]
    while pending:
        bad = [(a, b, fa, fb, d) for a, b, fa, fb, d in pending
               if min(fa, fb) <= E + (b - a) / 2]
        if not bad:
            return True
        if any(d >= max_refine for *_, d in bad):
            return False
        mids = np.array([(a + b) / 2 for a, b, *_ in bad])
        fm = min_singular_values_shifted(phi, curve(mids))
        if np.any(fm <= E):
            return False
        pending = []
        for (a, b, fa, fb, d), m, f in zip(bad, mids, fm):
            pending.append((a, m, fa, f, d + 1))
            pending.append((m, b, f, fb, d + 1))
    return True


def _circle(center, radius):
    def curve(s):
        return center + radius * np.exp(1j * s / radius)
    return curve


def certify_disk_containment(phi, E, n_samples=DEFAULT_CIRCLE_SAMPLES):
    """True only if the E-pseudospectrum lies inside the open unit disk.

    Requires every eigenvalue strictly inside the unit circle and the unit
    circle itself free of the pseudospectrum (sampled with the Lipschitz
    margin). A ``True`` result certifies asymptotic stability of every
    system whose monodromy matrix is within ``E`` of ``phi``.
    """
    if n_samples < 64:
        raise ParameterError("n_samples must be >= 64")
    phi = as_matrix(phi)
    if np.any(np.abs(eigenvalues(phi)) >= 1.0):
        return False
    h = 2 * math.pi / n_samples
    sig = min_singular_values_shifted(phi, np.exp(1j * h * np.arange(n_samples)))
    return bool(np.all(sig > E + h / 2))


def certify_instability(phi, E, lambda_hat, n_samples=512, radius=None):
    """True only if some matrix eigenvalue outside the unit disk is robust to ``E``.

    Looks for a circle around ``lambda_hat`` that stays outside the unit
    disk, encloses exactly one eigenvalue of ``phi`` and avoids the
    E-pseudospectrum (sampled adaptively with the Lipschitz margin).
    Eigenvalue counts inside such a contour are constant
    along the segment ``phi + s Delta``, ``||Delta|| <= E``, so the true
    monodromy matrix also has an eigenvalue there.

    Parameters
    ----------
    radius : float, optional
        Contour radius to test. By default a geometric sequence of radii
        below ``|lambda_hat| - 1`` is tried.
    """
    phi = as_matrix(phi)
    lambda_hat = complex(lambda_hat)
    gap = abs(lambda_hat) - 1.0
    if gap <= 0:
        return False
    ev = eigenvalues(phi)
    radii = [radius] if radius is not None else [gap * 0.999 * 0.5 ** i for i in range(30)]
    for r in radii:
        if not 0 < r < gap:
            continue
        inside = np.sum(np.abs(ev - lambda_hat) < r)
        if inside != 1:
            continue
        if _curve_excluded(phi, E, _circle(lambda_hat, r), 0.0, 2 * math.pi * r, n_samples):
            return True
    return False


def mathieu_verdict(phi, E, n_circle=DEFAULT_CIRCLE_SAMPLES, n_axis=DEFAULT_AXIS_SAMPLES):
    """Two-set test for real 2x2 monodromy matrices with determinant 1.

    The true multipliers either form a conjugate pair on the unit circle or
    a reciprocal real pair. If the E-pseudospectrum misses the real axis the
    system is certified stable; if it misses the unit circle it is
    certified unstable. The axis is checked on ``[-rho, rho]`` with
    ``rho = ||phi||_2 + E + 0.1``, beyond which ``sigma_min > E`` holds
    automatically.
    """
    phi = as_matrix(phi)
    if phi.shape != (2, 2):
        raise ParameterError(f"the two-set test needs a 2x2 matrix, got {phi.shape}")
    mult = floquet_multipliers(phi)
    rho = spectral_norm(phi) + E + 0.1
    circle_free = _curve_excluded(phi, E, _circle(0.0, 1.0), 0.0, 2 * math.pi, n_circle)
    axis_free = _curve_excluded(phi, E, lambda s: s.astype(complex), -rho, rho, n_axis)
    if axis_free and not circle_free:
        status = Status.GUARANTEED_STABLE
    elif circle_free and not axis_free:
        status = Status.GUARANTEED_UNSTABLE
    else:
        status = Status.UNDETERMINED
    return StabilityVerdict(multipliers=tuple(mult), exponents=(), bound=E, status=status,
                            numeric_stable=_numeric_stable(mult), monodromy=phi)


def _resolve_envelope(env, N):
    if env is None:
        return None
    return env(N) if callable(env) else env


def analyze_stability(series, env, N, formulation=Formulation.SUBHARMONIC, mathieu=False,
                      n_circle=DEFAULT_CIRCLE_SAMPLES, n_axis=DEFAULT_AXIS_SAMPLES):
    """Monodromy approximation, certificate and the strongest verdict it supports.

    The certified radius ``bound`` is the truncation bound plus the
    projection's rounding estimate (see :mod:`hillcert.projection`).

    Parameters
    ----------
    series : FourierMatrixSeries
    env : DecayEnvelope, callable or None
        Envelope for the error bound, or ``N -> DecayEnvelope``. ``None``
        or an envelope with ``b <= ln 2`` gives a numeric-only verdict.
    N : int
    formulation : Formulation or str
    mathieu : bool, optional
        Allow the two-set test for real 2x2 systems with trace-free ``J``.
        When it is enabled and no certificate succeeds the status is
        ``UNDETERMINED``; ``numeric_stable`` still holds the eigenvalue guess.
    """
    formulation = Formulation(formulation)
    T = series.period
    approx = fundamental(series, N, T, formulation)
    phi = approx.value
    mult = floquet_multipliers(phi)
    expo = floquet_exponents(mult, T)
    num_stable = _numeric_stable(mult)
    numeric = Status.NUMERIC_STABLE if num_stable else Status.NUMERIC_UNSTABLE

    envelope = _resolve_envelope(env, N)
    E = math.nan
    status = numeric
    if envelope is not None:
        try:
            # truncation bound plus the floating-point allowance of the projection
            E = error_bound(envelope, N, T, formulation).bound + approx.rounding
        except InvalidEnvelopeError:
            envelope = None
    mathieu = mathieu and phi.shape == (2, 2)
    if envelope is not None and math.isfinite(E):
        status = _certify(phi, E, mult, mathieu, n_circle, n_axis) or numeric
    if mathieu and envelope is not None and not status.guaranteed:
        # the two-set test ran (or the bound overflowed) without a decision
        status = Status.UNDETERMINED
    return StabilityVerdict(multipliers=tuple(mult), exponents=tuple(expo), bound=E,
                            status=status, N=N, numeric_stable=num_stable, monodromy=phi)


def _certify(phi, E, mult, mathieu, n_circle, n_axis):
    if certify_disk_containment(phi, E, max(n_circle, 64)):
        return Status.GUARANTEED_STABLE
    for lam in mult:
        if abs(lam) > 1 and certify_instability(phi, E, lam):
            return Status.GUARANTEED_UNSTABLE
    if mathieu:
        st = mathieu_verdict(phi, E, n_circle, n_axis).status
        if st.guaranteed:
            return st
    return None


def minimal_n_for_guarantee(series, env, formulation=Formulation.SUBHARMONIC, N_max=100,
                            mathieu=False, N_min=None, **kwargs):
    """Smallest ``N <= N_max`` whose verdict is guaranteed, or ``None``."""
    if N_max < 1:
        raise ParameterError("N_max must be >= 1")
    formulation = Formulation(formulation)
    if N_min is None:
        N_min = 1 if formulation is Formulation.SUBHARMONIC else 0
    for N in range(N_min, N_max + 1):
        v = analyze_stability(series, env, N, formulation, mathieu=mathieu, **kwargs)
        if v.status.guaranteed:
            return N
    return None

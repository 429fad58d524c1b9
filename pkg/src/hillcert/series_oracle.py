"""Exact scalar factors and truncated multi-index series for Phi and Q_j.

The scalar factor of an index tuple ``p = [p_1, ..., p_m]`` obeys

    d/dt xi_p = xi_[p_2..p_m] exp(i p_1 omega t),    xi_p(0) = 0,

with ``xi_[] = 1``. Repeated antidifferentiation therefore gives ``xi_p``
exactly as a finite sum ``sum c_{k,q} t**q exp(i k omega t)``, which is what
:class:`ExpPolynomial` stores.

The truncated series for ``Phi``, ``Q_j`` and the subharmonic combination
are sums of ``xi_p(t) J_p`` over constrained tuple sets. Rather than looping
over tuples they are accumulated by a dynamic program over the first entry:
``p`` is eligible iff ``p_1`` is an allowed step from the current state and
the tail is eligible from the successor state. The same recursion builds
``xi_p``, so each DP node is itself a matrix-valued ExpPolynomial.

Half-integer centres ``j`` are passed around as the integer ``2j``.
"""

import itertools
import math
from fractions import Fraction

import numpy as np
import scipy.special
import sympy

from .errors import ParameterError


def _is_zero(c):
    if isinstance(c, np.ndarray):
        return not np.any(c)
    if isinstance(c, sympy.Basic):
        return sympy.expand(c) == 0
    return c == 0


class ExpPolynomial:
    """Finite sum ``sum_{(k, q)} c_{k,q} t**q exp(i k omega t)``.

    Coefficients may be Python/numpy complex scalars, ``(n, n)`` arrays (for
    matrix-valued functions) or, with ``exact=True``, sympy numbers; in the
    exact case ``omega`` should be a sympy Rational.

    Parameters
    ----------
    terms : dict
        Mapping ``(k, q) -> coefficient``; zero coefficients are dropped.
    omega : number
        Base angular frequency.
    exact : bool, optional
        Use ``sympy.I`` instead of ``1j`` for the imaginary unit.
    """

    __slots__ = ("terms", "omega", "exact")

    def __init__(self, terms, omega, exact=False):
        if exact:
            omega = sympy.nsimplify(omega)
            if not omega.is_positive:
                raise ParameterError("omega must be positive")
        elif not omega > 0:
            raise ParameterError("omega must be positive")
        self.omega = omega
        self.exact = exact
        clean = {}
        for (k, q), c in terms.items():
            if q < 0:
                raise ParameterError("powers of t must be nonnegative")
            if exact:
                c = sympy.expand(c)
            if not _is_zero(c):
                clean[(int(k), int(q))] = c
        self.terms = clean

    @classmethod
    def constant(cls, c, omega, exact=False):
        return cls({(0, 0): c}, omega, exact)

    def _unit(self):
        return sympy.I if self.exact else 1j

    def _like(self, terms):
        return ExpPolynomial(terms, self.omega, self.exact)

    def __add__(self, other):
        out = dict(self.terms)
        for key, c in other.terms.items():
            out[key] = out[key] + c if key in out else c
        return self._like(out)

    def __neg__(self):
        return self._like({key: -c for key, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        """Multiply every coefficient by the scalar ``s`` (on the left for arrays)."""
        return self._like({key: s * c for key, c in self.terms.items()})

    def left_matmul(self, M):
        """``M @ f(t)`` for a matrix-valued ``f``."""
        return self._like({key: M @ c for key, c in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, ExpPolynomial):
            return self.scale(other)
        out = {}
        for (k1, q1), c1 in self.terms.items():
            for (k2, q2), c2 in other.terms.items():
                key = (k1 + k2, q1 + q2)
                v = c1 * c2
                out[key] = out[key] + v if key in out else v
        return self._like(out)

    def shift(self, p):
        """Multiply by ``exp(i p omega t)``."""
        return self._like({(k + p, q): c for (k, q), c in self.terms.items()})

    def derivative(self):
        out = {}
        unit = self._unit()
        for (k, q), c in self.terms.items():
            if q > 0:
                key = (k, q - 1)
                out[key] = out.get(key, 0) + q * c
            if k != 0:
                key = (k, q)
                out[key] = out.get(key, 0) + unit * k * self.omega * c
        return self._like(out)

    def antiderivative(self):
        """The antiderivative vanishing at ``t = 0``.

        Uses ``int t^q e^{lt} dt = e^{lt} sum_r (-1)^r q!/(q-r)! t^{q-r} / l^{r+1}``.
        """
        out = {}
        unit = self._unit()

        def add(key, v):
            out[key] = out[key] + v if key in out else v

        for (k, q), c in self.terms.items():
            if k == 0:
                if self.exact:
                    add((0, q + 1), c * sympy.Rational(1, q + 1))
                else:
                    add((0, q + 1), c / (q + 1))
                continue
            lam = unit * k * self.omega
            falling = 1
            for r in range(q + 1):
                v = c * ((-1) ** r * falling) / lam ** (r + 1)
                add((k, q - r), v)
                falling *= q - r
            # value at t = 0 comes from the r = q term only
            add((0, 0), -(c * ((-1) ** q * math.factorial(q)) / lam ** (q + 1)))
        return self._like(out)

    @property
    def max_power(self):
        return max((q for _, q in self.terms), default=0)

    @property
    def frequencies(self):
        return sorted({k for k, _ in self.terms})

    def is_zero(self):
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, ExpPolynomial):
            return NotImplemented
        return (self - other).is_zero()

    __hash__ = None

    def __call__(self, t):
        """Evaluate at ``t`` (scalar or array for scalar coefficients)."""
        omega = float(self.omega)
        t = np.asarray(t, dtype=float)
        total = 0j
        for (k, q), c in self.terms.items():
            if self.exact:
                c = complex(c)
            basis = t ** q * np.exp(1j * k * omega * t)
            if isinstance(c, np.ndarray):
                basis = basis[..., None, None]
            total = total + c * basis
        return total

    def __repr__(self):
        return f"ExpPolynomial({len(self.terms)} terms, omega={self.omega})"


def _check_tuple(p):
    p = tuple(int(x) for x in p)
    if len(p) < 1:
        raise ParameterError("index tuples need at least one entry")
    return p


def one_norm(p):
    """``|p| = sum |p_k|``."""
    return sum(abs(x) for x in p)


def xi_factor(p, omega, exact=False):
    """The scalar factor ``xi_p`` as an exact ExpPolynomial.

    Parameters
    ----------
    p : sequence of int
        Index tuple of length ``m >= 1``.
    omega : float or sympy Rational
    exact : bool, optional
        Build with sympy arithmetic.
    """
    p = _check_tuple(p)
    xi = ExpPolynomial.constant(sympy.Integer(1) if exact else 1.0 + 0j, omega, exact)
    for pk in reversed(p):
        xi = xi.shift(pk).antiderivative()
    return xi


def xi_eval(xi, t):
    return xi(t)


def coeff_product(series, p):
    """Ordered product ``J_{p_1} J_{p_2} ... J_{p_m}``."""
    p = _check_tuple(p)
    out = np.eye(series.dim, dtype=complex)
    for k in p:
        out = out @ series.coeff(k)
    return out


def periodicity_check(p):
    """True iff every contiguous sum ``p_v + ... + p_w`` is nonzero."""
    p = _check_tuple(p)
    prefix = [0]
    for x in p:
        prefix.append(prefix[-1] + x)
    # contiguous sums are differences of prefix sums
    return len(set(prefix)) == len(prefix)


def _twice(j):
    tj = Fraction(j) * 2
    if tj.denominator != 1:
        raise ParameterError(f"j must be an integer or half-integer, got {j}")
    return int(tj)


def _enumerate(step, start, m, N):
    """All tuples of length ``m`` with entries in ``[-2N, 2N]`` accepted by ``step``."""
    entries = range(-2 * N, 2 * N + 1)
    level = [((), start)]
    for _ in range(m):
        nxt = []
        for prefix, state in level:
            for x in entries:
                ns = step(state, x)
                if ns is not None:
                    nxt.append((prefix + (x,), ns))
        level = nxt
    return frozenset(pre for pre, _ in level)


def _eligible_step(N):
    def step(tj, p):
        # tj is twice the current centre j - (p_1 + ... + p_w)
        nj = tj - 2 * p
        return nj if abs(nj) <= 2 * N else None
    return step


def _subharmonic_step(N):
    def step(state, p):
        # state = (lowest, highest) earlier prefix sum relative to the current one
        lo, hi = state
        lo, hi = min(lo - p, 0), max(hi - p, 0)
        return (lo, hi) if hi - lo <= 2 * N else None
    return step


def eligible_set(j, N, m):
    """Tuples ``p`` of length ``m`` with ``|j - (p_1 + ... + p_w)| <= N`` for all ``w``.

    ``j`` may be a half-integer (int, float or Fraction).
    """
    if m < 1 or N < 0:
        raise ParameterError("need m >= 1 and N >= 0")
    tj = _twice(j)
    if abs(tj) > 2 * N:
        return frozenset()
    return _enumerate(_eligible_step(N), tj, m, N)


def subharmonic_set(N, m):
    """Tuples of length ``m`` whose contiguous sums all have modulus ``<= 2N``."""
    if m < 1 or N < 0:
        raise ParameterError("need m >= 1 and N >= 0")
    return _enumerate(_subharmonic_step(N), (0, 0), m, N)


def _constrained_series(series, m_max, t, step, start):
    """``I + sum_{m=1}^{m_max} sum_{p accepted} xi_p(t) J_p``."""
    if m_max < 1:
        raise ParameterError(f"m_max must be >= 1, got {m_max}")
    omega = series.omega
    n = series.dim
    ident = ExpPolynomial.constant(np.eye(n, dtype=complex), omega)
    coeffs = list(series.coeffs.items())
    memo = {}

    def G(state, r):
        key = (state, r)
        if key in memo:
            return memo[key]
        if r == 0:
            out = ident
        else:
            out = ExpPolynomial({}, omega)
            for p, Jp in coeffs:
                ns = step(state, p)
                if ns is None:
                    continue
                out = out + G(ns, r - 1).shift(p).antiderivative().left_matmul(Jp)
        memo[key] = out
        return out

    total = np.zeros((n, n), dtype=complex)
    for r in range(m_max + 1):
        total = total + G(start, r)(t)
    return total


def series_tail_bound(series, m_max, t, envelope=None):
    """Bound on the omitted orders ``m > m_max`` of any of the truncated series.

    With ``s = sum_k ||J_k||`` (or ``2a / (1 - e^{-b})`` from an envelope) the
    order-``m`` contribution is at most ``(s |t|)**m / m!``.
    """
    if envelope is not None:
        s = 2.0 * envelope.a / (-math.expm1(-envelope.b))
    else:
        s = float(sum(series.norms().values()))
    x = s * abs(t)
    if x == 0:
        return 0.0
    # sum_{m > m_max} x^m / m! = e^x P(m_max + 1, x)
    return float(math.exp(x) * scipy.special.gammainc(m_max + 1, x))


def series_fundamental(series, m_max, t, envelope=None):
    """Truncated multi-index series for ``Phi(t)`` with its tail bound.

    Returns
    -------
    (value, tail_bound) : (ndarray, float)
    """
    value = _constrained_series(series, m_max, t, lambda state, p: 0, 0)
    return value, series_tail_bound(series, m_max, t, envelope)


def series_q_block(series, N, j, m_max, t):
    """Truncated series for ``Q_j(t)``; half-integer ``j`` gives a subharmonic block."""
    tj = _twice(j)
    if abs(tj) > 2 * N:
        raise ParameterError(f"|j| must be <= N, got j = {j}")
    return _constrained_series(series, m_max, t, _eligible_step(N), tj)


def series_subharmonic(series, N, m_max, t):
    """Truncated series over the subharmonic set (contiguous sums bounded by ``2N``)."""
    return _constrained_series(series, m_max, t, _subharmonic_step(N), (0, 0))


def count_multiindices(m, M):
    """Number of ``alpha`` in ``N^m`` with ``|alpha| = M``."""
    if m < 1 or M < 0:
        raise ParameterError("need m >= 1 and M >= 0")
    return math.comb(M + m - 1, m - 1)


def integer_tuple_count_bound(m, M):
    """Upper bound ``2**m binom(M+m-1, m-1)`` on ``#{p in Z^m : |p| = M}``."""
    return 2 ** m * count_multiindices(m, M)


def vandermonde_pair(n, M, P):
    """``sum_{a=0}^{M} binom(a+n, n) binom(M+P-a, M-a) = binom(M+P+n+1, M)``."""
    if min(n, M, P) < 0:
        raise ParameterError("arguments must be nonnegative")
    return math.comb(M + P + n + 1, M)


def vandermonde_multisum(M, n_vec):
    """Closed form ``binom(m + M + |n|, M)`` of the ``m``-fold nested binomial sum."""
    n_vec = [int(x) for x in n_vec]
    if M < 0 or any(x < 0 for x in n_vec):
        raise ParameterError("entries must be nonnegative")
    if not n_vec:
        raise ParameterError("n_vec needs at least one entry")
    return math.comb(len(n_vec) + M + sum(n_vec), M)


def iter_tuples(m, lo, hi):
    """All integer tuples of length ``m`` with entries in ``[lo, hi]``."""
    return itertools.product(range(lo, hi + 1), repeat=m)

"""Truncated Hill matrices for the direct and subharmonic projections.

Block rows and columns are indexed ``j = -N, ..., N`` from top to bottom.
Block ``(j, k)`` of ``H`` is ``J_{j-k}``, and the diagonal block ``j``
additionally carries ``-i j omega I``, so the top-left block is
``J_0 + i N omega I``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParameterError, StructureError
from .fourier import FourierMatrixSeries


@dataclass(frozen=True)
class HillOperators:
    """Truncated Hill matrix of order ``N`` with its companions.

    Attributes
    ----------
    N, n : int
        Truncation order and state dimension.
    H : (n(2N+1), n(2N+1)) ndarray
        Hill matrix.
    D : (n(2N+1),) ndarray
        Diagonal of ``diag(-N, ..., N) (x) I``.
    W : (n(2N+1), n) ndarray
        Stack of ``2N+1`` identities.
    C : (n, n(2N+1)) ndarray
        Selector of the central block row.
    """

    N: int
    n: int
    H: np.ndarray
    D: np.ndarray
    W: np.ndarray
    C: np.ndarray

    @property
    def size(self):
        return self.H.shape[0]

    def block(self, j, k):
        """Block ``(j, k)`` of ``H`` with ``j, k`` in ``-N..N``."""
        return _block(self.H, self.n, self.N, j, k)


@dataclass(frozen=True)
class SubharmonicOperators:
    """The two decoupled pieces of the subharmonic Hill matrix.

    ``H``/``D``/``W`` are the ordinary order-``N`` operators; ``H_hat`` is
    ``H`` without its last block row and column and with ``i omega / 2``
    subtracted from the diagonal, and ``D_hat`` holds the half-integer
    frequencies ``-N + 1/2, ..., N - 1/2`` of the odd subharmonic blocks.
    """

    N: int
    n: int
    H: np.ndarray
    D: np.ndarray
    W: np.ndarray
    H_hat: np.ndarray
    D_hat: np.ndarray
    W_hat: np.ndarray


def _block(M, n, N, j, k):
    r = (j + N) * n
    c = (k + N) * n
    return M[r:r + n, c:c + n]


def _stack_identities(count, n):
    return np.tile(np.eye(n, dtype=complex), (count, 1))


def _coupling(series, N):
    """Block Toeplitz part of the Hill matrix, without the frequency shift."""
    n = series.dim
    nb = 2 * N + 1
    H = np.zeros((n * nb, n * nb), dtype=complex)
    for k, Jk in series.coeffs.items():
        if abs(k) > 2 * N:
            continue
        # block (j, j - k) holds J_k
        for j in range(max(-N, -N + k), min(N, N + k) + 1):
            r = (j + N) * n
            c = (j - k + N) * n
            H[r:r + n, c:c + n] += Jk
    return H


def assemble_hill(series: FourierMatrixSeries, N: int) -> HillOperators:
    """Build the order-``N`` Hill matrix from the coefficients ``J_{-2N..2N}``."""
    if N < 0:
        raise ParameterError(f"truncation order must be >= 0, got {N}")
    n = series.dim
    nb = 2 * N + 1
    H = _coupling(series, N)
    D = np.repeat(np.arange(-N, N + 1, dtype=float), n)
    H[np.diag_indices_from(H)] -= 1j * series.omega * D
    W = _stack_identities(nb, n)
    C = np.zeros((n, n * nb), dtype=complex)
    C[:, N * n:(N + 1) * n] = np.eye(n)
    return HillOperators(N=N, n=n, H=H, D=D, W=W, C=C)


def assemble_subharmonic_pair(series: FourierMatrixSeries, N: int) -> SubharmonicOperators:
    """Direct Hill operators of order ``N`` plus the odd-block companion ``H_hat``."""
    if N < 1:
        raise ParameterError(f"subharmonic formulation needs N >= 1, got {N}")
    ops = assemble_hill(series, N)
    n = ops.n
    m = 2 * N * n
    D_hat = ops.D[:m] + 0.5
    # shift once by -i omega D_hat so the diagonal rounds exactly as in H_tilde
    H_hat = _coupling(series, N)[:m, :m]
    H_hat[np.diag_indices_from(H_hat)] -= 1j * series.omega * D_hat
    return SubharmonicOperators(N=N, n=n, H=ops.H, D=ops.D, W=ops.W,
                                H_hat=H_hat, D_hat=D_hat, W_hat=_stack_identities(2 * N, n))


def subharmonic_series(series: FourierMatrixSeries) -> FourierMatrixSeries:
    """The same J(t) written over the doubled period: ``J~_{2k} = J_k``, odd ones zero."""
    return FourierMatrixSeries(omega=series.omega / 2.0, dim=series.dim,
                               coeffs={2 * k: J for k, J in series.coeffs.items()},
                               real=series.real)


def assemble_full_subharmonic(series: FourierMatrixSeries, N: int):
    """Hill matrix of order ``2N`` for the doubled-period series.

    Returns
    -------
    H_tilde : (n(4N+1), n(4N+1)) ndarray
    D_tilde : (n(4N+1),) ndarray
        Diagonal entries ``-N, -N + 1/2, ..., N`` (each repeated ``n`` times).
    """
    if N < 1:
        raise ParameterError(f"subharmonic formulation needs N >= 1, got {N}")
    ops = assemble_hill(subharmonic_series(series), 2 * N)
    return ops.H, ops.D / 2.0


def decoupling_permutation(n, N):
    """Index permutation putting even subharmonic blocks first, then odd ones.

    Blocks are numbered ``jt = -2N..2N``; the returned array ``perm`` satisfies
    ``H_tilde[perm][:, perm] = blockdiag(H, H_hat)``.
    """
    nb = 4 * N + 1
    even = [p for p in range(nb) if (p - 2 * N) % 2 == 0]
    odd = [p for p in range(nb) if (p - 2 * N) % 2 != 0]
    return np.concatenate([np.arange(p * n, (p + 1) * n) for p in even + odd])


def permutation_decouple(H_tilde, n, N):
    """Split ``H_tilde`` into its even-block and odd-block diagonal parts.

    Raises
    ------
    StructureError
        If the permuted matrix has any nonzero entry coupling the two parts.
    """
    H_tilde = np.asarray(H_tilde)
    size = n * (4 * N + 1)
    if H_tilde.shape != (size, size):
        raise DimensionError(f"expected shape {(size, size)}, got {H_tilde.shape}")
    perm = decoupling_permutation(n, N)
    P = H_tilde[np.ix_(perm, perm)]
    m = n * (2 * N + 1)
    if np.any(P[:m, m:] != 0) or np.any(P[m:, :m] != 0):
        raise StructureError("permuted subharmonic Hill matrix has nonzero coupling blocks")
    return P[:m, :m].copy(), P[m:, m:].copy()

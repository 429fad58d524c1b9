"""Dense complex linear-algebra kernel.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``. The
heavy lifting is delegated to LAPACK (through numpy/scipy): the matrix
exponential is scipy's scaling-and-squaring Padé implementation, eigenvalues
come from a Hessenberg reduction followed by shifted QR (``zgeev``), and
singular values from ``zgesdd``.
"""

import numpy as np
import scipy.linalg

from .errors import DimensionError, DomainError


def as_matrix(A, square=True):
    """Validate ``A`` and return it as a finite complex 2-D array.

    Parameters
    ----------
    A : array_like
        Candidate matrix.
    square : bool, optional
        Require ``A`` to be square. Default True.

    Raises
    ------
    DimensionError
        If ``A`` is not 2-D, empty, or (when requested) not square.
    DomainError
        If any entry is NaN or infinite.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] == 0 or A.shape[1] == 0:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise DomainError("matrix contains non-finite entries")
    return A


def mat_exp(A):
    """Matrix exponential exp(A) by scaling and squaring with a Padé approximant."""
    A = as_matrix(A)
    return scipy.linalg.expm(A)


def eigenvalues(A):
    """All eigenvalues of ``A`` (with algebraic multiplicity, unordered)."""
    A = as_matrix(A)
    return np.linalg.eigvals(A)


def min_singular_value(A):
    """Smallest singular value of a square matrix."""
    A = as_matrix(A)
    return float(np.linalg.svd(A, compute_uv=False)[-1])


def min_singular_values_shifted(phi, z):
    """sigma_min(z_i I - phi) for every point of the 1-D array ``z``.

    Vectorised over ``z`` with a batched SVD; used by the pseudospectrum
    sampling loops.
    """
    phi = as_matrix(phi)
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    n = phi.shape[0]
    stack = z[:, None, None] * np.eye(n)[None, :, :] - phi[None, :, :]
    return np.linalg.svd(stack, compute_uv=False)[:, -1]


def spectral_norm(A):
    """Induced 2-norm (largest singular value)."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {A.shape}")
    if A.size == 0:
        return 0.0
    return float(np.linalg.norm(A, 2))


def solve(A, b):
    """Solve ``A x = b`` for square ``A``."""
    A = as_matrix(A)
    return np.linalg.solve(A, np.asarray(b, dtype=complex))

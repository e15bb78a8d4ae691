"""Dense complex matrices: characteristic polynomials, spectra and ranks.

Float matrices are plain ``numpy`` complex arrays.  Exact matrices are
nested lists whose entries are ``Fraction``/``GaussRat`` scalars or exact
:class:`~epcat.poly.UniPoly` objects (for a symbolic parameter); those go
through Faddeev-LeVerrier, which only ever divides by integers.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .config import DEFAULT, Tolerances
from .exact import GaussRat, is_exact_scalar, to_complex
from .poly import NonConvergence, UniPoly, roots


def as_cmatrix(H) -> np.ndarray:
    """Validate and convert to a square, finite complex128 array."""
    if is_exact_matrix(H):
        H = exact_to_float(H)
    A = np.asarray(H, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def is_exact_matrix(H) -> bool:
    if isinstance(H, np.ndarray):
        return False
    try:
        return all(is_exact_scalar(x) or (isinstance(x, UniPoly) and x.is_exact) for row in H for x in row)
    except TypeError:
        return False


def exact_to_float(H) -> np.ndarray:
    return np.array([[to_complex(x) for x in row] for row in H], dtype=complex)


@dataclass
class EigenDecomp:
    eigenvalues: np.ndarray
    right_vectors: Optional[np.ndarray] = None
    converged: bool = True

    def __len__(self):
        return len(self.eigenvalues)


# ----------------------------------------------------------------------
# characteristic polynomials


def _faddeev_leverrier(H: Sequence[Sequence], var: str):
    """Coefficients of det(x I - H), ascending; entries from any exact ring."""
    n = len(H)
    zero = H[0][0] * 0
    M = [[zero] * n for _ in range(n)]  # M_0 = 0
    coeffs = [None] * (n + 1)
    coeffs[n] = Fraction(1)
    c_prev = Fraction(1)
    for k in range(1, n + 1):
        # M_k = H M_{k-1} + c_{n-k+1} I
        HM = [[sum((H[i][l] * M[l][j] for l in range(n)), zero) for j in range(n)] for i in range(n)]
        for i in range(n):
            HM[i][i] = HM[i][i] + c_prev
        M = HM
        trace = sum((sum((H[i][l] * M[l][i] for l in range(n)), zero) for i in range(n)), zero)
        c_prev = -trace / k
        coeffs[n - k] = c_prev
    return coeffs


def _hessenberg_char_poly(H: np.ndarray) -> np.ndarray:
    """Ascending coefficients of det(x I - H) via the Hessenberg recurrence."""
    n = H.shape[0]
    A = scipy.linalg.hessenberg(H)
    polys = [np.array([1.0 + 0j])]
    for k in range(n):
        # p_{k+1} = (x - a_kk) p_k - sum_{i<k} a_ik prod_{m=i+1..k} a_{m,m-1} p_i
        pk = polys[-1]
        nxt = np.zeros(k + 2, dtype=complex)
        nxt[1:] += pk
        nxt[: k + 1] -= A[k, k] * pk
        prod = 1.0 + 0j
        for i in range(k - 1, -1, -1):
            prod *= A[i + 1, i]
            nxt[: i + 1] -= A[i, k] * prod * polys[i]
        polys.append(nxt)
    return polys[-1]


def char_poly(H, var: str = "F") -> UniPoly:
    """Monic ``det(var*I - H)``.

    Exact matrices give exact coefficients; float matrices are reduced to
    Hessenberg form first.
    """
    if is_exact_matrix(H):
        if not H or len(H) != len(H[0]):
            raise ValueError("expected a non-empty square matrix")
        if any(isinstance(x, UniPoly) for row in H for x in row):
            raise TypeError("symbolic entries: use poly-valued char poly via symbolic_char_poly")
        return UniPoly(tuple(_faddeev_leverrier(H, var)), var)
    A = as_cmatrix(H)
    return UniPoly(tuple(_hessenberg_char_poly(A)), var)


def char_poly_ring(H: Sequence[Sequence], var: str = "F") -> list:
    """Faddeev-LeVerrier coefficients for matrices over a polynomial ring."""
    return _faddeev_leverrier(H, var)


# ----------------------------------------------------------------------
# spectra


def eigen(H, want_vectors: bool = False, tol: Tolerances = DEFAULT) -> EigenDecomp:
    """All eigenvalues (and optionally unit right eigenvectors).

    LAPACK's Hessenberg + shifted QR does the work; if it fails to
    converge the spectrum is recovered from the characteristic polynomial.
    Pairs violating the residual bound mark the result as not converged.
    """
    A = as_cmatrix(H)
    try:
        if want_vectors:
            vals, vecs = np.linalg.eig(A)
        else:
            vals, vecs = np.linalg.eigvals(A), None
    except np.linalg.LinAlgError:
        warnings.warn("QR iteration failed; falling back to characteristic polynomial roots")
        try:
            vals = np.array(roots(char_poly(A)))
        except NonConvergence:
            raise
        vecs = None
        if want_vectors:
            vecs = np.column_stack([_inverse_iteration(A, lam) for lam in vals])
        ok = _residuals_ok(A, vals, vecs, tol) if vecs is not None else True
        return EigenDecomp(vals, vecs, ok)
    converged = True
    if vecs is not None:
        converged = _residuals_ok(A, vals, vecs, tol)
    return EigenDecomp(vals, vecs, converged)


def eigvals(H) -> np.ndarray:
    return eigen(H).eigenvalues


def _residuals_ok(A, vals, vecs, tol: Tolerances) -> bool:
    scale = max(np.linalg.norm(A, 2), 1.0)
    res = np.linalg.norm(A @ vecs - vecs * vals[None, :], axis=0)
    return bool(np.all(res <= tol.resid * scale))


def _inverse_iteration(A: np.ndarray, lam: complex, steps: int = 3) -> np.ndarray:
    n = A.shape[0]
    shift = lam + 1e-10 * max(1.0, abs(lam))
    v = np.ones(n, dtype=complex) / np.sqrt(n)
    lu = scipy.linalg.lu_factor(A - shift * np.eye(n))
    for _ in range(steps):
        v = scipy.linalg.lu_solve(lu, v)
        v /= np.linalg.norm(v)
    return v


def spectrum_is_real(H, tol: Tolerances = DEFAULT) -> bool:
    return bool(np.max(np.abs(eigvals(H).imag)) <= tol.real)


# ----------------------------------------------------------------------
# ranks and kernels


def numeric_rank(H, tol_rank: float = DEFAULT.rank) -> int:
    """Number of singular values above ``tol_rank * sigma_max``."""
    if tol_rank <= 0:
        raise ValueError("tol_rank must be positive")
    s = np.linalg.svd(as_cmatrix(H), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol_rank * s[0]))


def null_space(A: np.ndarray, threshold: float) -> np.ndarray:
    """Orthonormal basis (columns) for singular values <= ``threshold``."""
    _, s, vh = np.linalg.svd(A)
    k = int(np.sum(s > threshold))
    return vh[k:].conj().T


def kernel_staircase(H, eta: complex, tol_rank: float = DEFAULT.rank, scale: Optional[float] = None) -> list[int]:
    """Nullities ``[0, dim ker A, dim ker A^2, ...]`` of ``A = H - eta I``.

    Powers are never formed: ``ker A^k`` is the preimage of ``ker A^{k-1}``,
    obtained as the kernel of ``A`` followed by projection off the previous
    kernel.  Thresholds are ``tol_rank * scale`` with ``scale`` defaulting
    to ``max(||H||_2, 1)``; the sequence stops when it stabilises.
    """
    H = as_cmatrix(H)
    n = H.shape[0]
    A = H - eta * np.eye(n)
    if scale is None:
        scale = max(np.linalg.norm(H, 2), 1.0)
    thr = tol_rank * scale
    V = np.zeros((n, 0), dtype=complex)
    out = [0]
    for _ in range(n):
        P = np.eye(n) - V @ V.conj().T
        V = null_space(P @ A, thr)
        out.append(V.shape[1])
        if out[-1] == out[-2]:
            out.pop()
            break
    return out


def jordan_partition_from_nullities(nullities: Sequence[int]) -> list[int]:
    """Block sizes (descending) from kernel dimensions of successive powers.

    The number of blocks of size >= k is ``n_k - n_{k-1}`` (Weyr characteristic).
    """
    weyr = [nullities[k] - nullities[k - 1] for k in range(1, len(nullities))]
    sizes = []
    for k, count in enumerate(weyr):
        nxt = weyr[k + 1] if k + 1 < len(weyr) else 0
        sizes.extend([k + 1] * (count - nxt))
    return sorted(sizes, reverse=True)

"""Parametric Hamiltonian families and their registry.

Each family turns a parameter point (``{"rho": 0.28, "w": 0.6}``) into a
dense complex matrix.  Families whose characteristic polynomial is
polynomial in a parameter also provide an *exact* matrix builder, which
accepts rational parameter values or a :class:`~epcat.poly.UniPoly` for one
symbolic parameter and feeds the exact characteristic-polynomial path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .config import DEFAULT
from .exact import I, conj, to_exact
from .poly import NotPolynomialInParam, UniPoly


class OddDimension(ValueError):
    pass


class LambdaOutOfRange(ValueError):
    pass


ParamPoint = Mapping[str, float]


@dataclass(frozen=True)
class ModelFamily:
    """A named parametric matrix family.

    ``exact_builder`` returns a matrix with exact entries whose
    characteristic polynomial equals that of the float matrix; it may be a
    similarity-equivalent stand-in (see ``ha6``).  ``polynomial_params``
    lists parameters in which those exact entries are polynomial.
    """

    name: str
    dim: int
    param_names: tuple
    builder: Callable[[Mapping[str, float]], np.ndarray]
    exact_builder: Optional[Callable[[Mapping], list]] = None
    polynomial_params: frozenset = frozenset()
    symmetry_tags: frozenset = frozenset()
    description: str = ""
    options: tuple = ()

    @property
    def entry_kind(self) -> str:
        return "exact" if self.exact_builder is not None else "float"

    def check_point(self, point: ParamPoint) -> dict:
        missing = [p for p in self.param_names if p not in point]
        extra = [p for p in point if p not in self.param_names]
        if missing or extra:
            raise ValueError(
                f"family {self.name!r} takes parameters {list(self.param_names)}; "
                f"missing {missing}, unexpected {extra}"
            )
        out = {}
        for k in self.param_names:
            v = point[k]
            if isinstance(v, UniPoly):
                out[k] = v
                continue
            if isinstance(v, Fraction):
                out[k] = v
                continue
            v = float(v)
            if not math.isfinite(v):
                raise ValueError(f"parameter {k} must be finite")
            out[k] = v
        return out

    def build(self, point: ParamPoint) -> np.ndarray:
        pt = self.check_point(point)
        H = self.builder({k: float(v) for k, v in pt.items()})
        assert H.shape == (self.dim, self.dim)
        return H

    def build_exact(self, point: ParamPoint, free: Optional[str] = None, var: str = "w") -> list:
        """Exact matrix; ``free`` (if given) becomes the symbolic variable ``var``."""
        if self.exact_builder is None:
            raise NotPolynomialInParam(f"family {self.name!r} has no exact representation")
        pt = dict(point)
        if free is not None:
            if free not in self.polynomial_params:
                raise NotPolynomialInParam(f"family {self.name!r} is not polynomial in {free!r}")
            pt[free] = UniPoly((0, 1), var)
        pt = self.check_point(pt)
        exact = {k: (v if isinstance(v, UniPoly) else to_exact(v)) for k, v in pt.items()}
        return self.exact_builder(exact)


# ----------------------------------------------------------------------
# builders


def _tridiag(diag: Sequence, lower: Sequence, upper: Sequence, zero) -> list:
    n = len(diag)
    M = [[zero] * n for _ in range(n)]
    for k in range(n):
        M[k][k] = diag[k]
    for k in range(n - 1):
        M[k + 1][k] = lower[k]
        M[k][k + 1] = upper[k]
    return M


def build_lattice(v_diag: Sequence[complex]) -> np.ndarray:
    """Discrete Schroedinger lattice: diagonal ``v_diag``, hopping ``-1``."""
    n = len(v_diag)
    if n < 2:
        raise ValueError("lattice needs N >= 2")
    H = np.diag(np.asarray(v_diag, dtype=complex))
    H -= np.eye(n, k=1) + np.eye(n, k=-1)
    return H


def _latti_diag(N: int, rho, w, zero):
    K = N // 2
    d = [zero] * N
    d[0] = d[0] - I * rho
    d[N - 1] = d[N - 1] + I * rho
    d[K - 1] = d[K - 1] - I * w
    d[K] = d[K] + I * w
    return d


def _check_even(N: int, minimum: int = 4):
    if N % 2:
        raise OddDimension(f"dimension must be even, got {N}")
    if N < minimum:
        raise ValueError(f"dimension must be >= {minimum}, got {N}")


def build_latti(N: int, rho: float, w: float) -> np.ndarray:
    """Lattice with remote gain/loss ``rho`` at the ends and central ``w``."""
    _check_even(N)
    K = N // 2
    v = np.zeros(N, dtype=complex)
    v[0] -= 1j * rho
    v[-1] += 1j * rho
    v[K - 1] -= 1j * w
    v[K] += 1j * w
    return build_lattice(v)


def latti_exact(N: int, rho, w) -> list:
    _check_even(N)
    zero = Fraction(0)
    minus = [Fraction(-1)] * (N - 1)
    return _tridiag(_latti_diag(N, rho, w, zero), minus, minus, zero)


def build_mytoy(J: int, w: float) -> np.ndarray:
    """Free lattice of dimension ``2J+2`` with ``-iw, +iw`` on the two central sites."""
    if J < 1:
        raise ValueError("J must be >= 1")
    v = np.zeros(2 * J + 2, dtype=complex)
    v[J] = -1j * w
    v[J + 1] = 1j * w
    return build_lattice(v)


def build_h6(w: float) -> np.ndarray:
    """Six-site lattice with constant ``-iw`` on the left half and ``+iw`` on the right."""
    return build_lattice([-1j * w] * 3 + [1j * w] * 3)


def h6_exact(w) -> list:
    zero = Fraction(0)
    d = [zero - I * w] * 3 + [zero + I * w] * 3
    minus = [Fraction(-1)] * 5
    return _tridiag(d, minus, minus, zero)


# (c_k, weight) with coupling weight * sqrt(c_k (1 + lambda))
_HA6_COUPLINGS = ((5, 1), (2, 2), (1, 3), (2, 2), (5, 1))


def build_ha6(g: float, lam: float) -> np.ndarray:
    """Real asymmetric 6x6 tridiagonal model.

    Upper couplings are ``+a_k sqrt(1+lambda)``, lower ones the negatives,
    with ``a = (sqrt5, 2 sqrt2, 3, 2 sqrt2, sqrt5)``.
    """
    if lam < -1:
        raise LambdaOutOfRange(f"lambda must be >= -1, got {lam}")
    H = np.diag(np.array([-5 + g, -3, -1, 1, 3, 5 - g], dtype=float)).astype(complex)
    for k, (c, weight) in enumerate(_HA6_COUPLINGS):
        t = weight * math.sqrt(c + c * lam)
        H[k, k + 1] = t
        H[k + 1, k] = -t
    return H


def ha6_charpoly_matrix(g, lam) -> list:
    """Exact tridiagonal matrix with the same characteristic polynomial as ha6.

    A tridiagonal characteristic polynomial depends on the off-diagonal
    entries only through the products ``H[k,k+1] * H[k+1,k]``, here
    ``-weight^2 * c_k (1 + lambda)``; putting those products on the lower
    diagonal and ones above keeps every entry polynomial in ``lambda``.
    """
    if not isinstance(lam, UniPoly) and lam < -1:
        raise LambdaOutOfRange(f"lambda must be >= -1, got {lam}")
    zero = Fraction(0)
    d = [g - 5, Fraction(-3), Fraction(-1), Fraction(1), Fraction(3), 5 - g]
    d = [zero + x for x in d]
    products = [-(weight**2) * c * (1 + lam) for c, weight in _HA6_COUPLINGS]
    return _tridiag(d, products, [Fraction(1)] * 5, zero)


def build_jordan_sum(blocks: Sequence[tuple]) -> np.ndarray:
    """Direct sum of Jordan blocks ``J^(size)(eta)`` (ones on the superdiagonal)."""
    if not blocks:
        raise ValueError("need at least one block")
    n = sum(int(s) for s, _ in blocks)
    H = np.zeros((n, n), dtype=complex)
    o = 0
    for s, eta in blocks:
        s = int(s)
        if s < 1:
            raise ValueError("block sizes must be >= 1")
        for i in range(s):
            H[o + i, o + i] = eta
            if i + 1 < s:
                H[o + i, o + i + 1] = 1
        o += s
    return H


def jordan_exact(blocks: Sequence[tuple]) -> list:
    n = sum(int(s) for s, _ in blocks)
    zero = Fraction(0)
    M = [[zero] * n for _ in range(n)]
    o = 0
    for s, eta in blocks:
        e = to_exact(eta)
        for i in range(int(s)):
            M[o + i][o + i] = e
            if i + 1 < s:
                M[o + i][o + i + 1] = Fraction(1)
        o += int(s)
    return M


# ----------------------------------------------------------------------
# symmetries


def parity(N: int) -> np.ndarray:
    return np.fliplr(np.eye(N))


def check_pt_symmetry(H, tol: float = DEFAULT.poly) -> bool:
    """True iff ``P conj(H) P == H`` entrywise, ``P`` the antidiagonal identity."""
    H = np.asarray(H, dtype=complex)
    P = parity(H.shape[0])
    return bool(np.max(np.abs(P @ H.conj() @ P - H), initial=0.0) <= tol)


def swap_symmetry_map(N: int) -> np.ndarray:
    """Permutation ``U``: direct sum of two antidiagonal K x K identities.

    ``U H(rho, w) U`` carries the diagonal of ``H(w, rho)``, but on the open
    chain it also moves the central bond to the corner ``(0, N-1)``, so it
    is not a similarity between the two members of the family.
    """
    _check_even(N, minimum=2)
    K = N // 2
    U = np.zeros((N, N))
    U[:K, :K] = np.fliplr(np.eye(K))
    U[K:, K:] = np.fliplr(np.eye(K))
    return U


# ----------------------------------------------------------------------
# registry


def _latti_family(dim: int) -> ModelFamily:
    _check_even(dim)
    return ModelFamily(
        name="latti",
        dim=dim,
        param_names=("rho", "w"),
        builder=lambda p: build_latti(dim, p["rho"], p["w"]),
        exact_builder=lambda p: latti_exact(dim, p["rho"], p["w"]),
        polynomial_params=frozenset({"rho", "w"}),
        symmetry_tags=frozenset({"PT"}),
        description="two-parameter lattice: remote gain/loss rho, central gain/loss w",
        options=(("dim", dim),),
    )


def _mytoy_family(dim: int) -> ModelFamily:
    _check_even(dim)
    J = (dim - 2) // 2
    return ModelFamily(
        name="mytoy",
        dim=dim,
        param_names=("w",),
        builder=lambda p: build_mytoy(J, p["w"]),
        exact_builder=lambda p: latti_exact(dim, Fraction(0), p["w"]),
        polynomial_params=frozenset({"w"}),
        symmetry_tags=frozenset({"PT"}),
        description="rho = 0 slice of latti: +-iw on the two central sites",
        options=(("dim", dim),),
    )


def _h6_family(dim: Optional[int] = None) -> ModelFamily:
    if dim not in (None, 6):
        raise ValueError("h6 has fixed dimension 6")
    return ModelFamily(
        name="h6",
        dim=6,
        param_names=("w",),
        builder=lambda p: build_h6(p["w"]),
        exact_builder=lambda p: h6_exact(p["w"]),
        polynomial_params=frozenset({"w"}),
        symmetry_tags=frozenset({"PT"}),
        description="six-site lattice with constant -iw | +iw halves",
    )


def _ha6_family(dim: Optional[int] = None) -> ModelFamily:
    if dim not in (None, 6):
        raise ValueError("ha6 has fixed dimension 6")
    return ModelFamily(
        name="ha6",
        dim=6,
        param_names=("g", "lambda"),
        builder=lambda p: build_ha6(p["g"], p["lambda"]),
        exact_builder=lambda p: ha6_charpoly_matrix(p["g"], p["lambda"]),
        polynomial_params=frozenset({"g", "lambda"}),
        symmetry_tags=frozenset({"real-asymmetric", "hermitian-at-special-point"}),
        description="real asymmetric tridiagonal 6x6 with square-root couplings",
    )


def _jordan_family(blocks: Sequence[tuple]) -> ModelFamily:
    blocks = tuple((int(s), complex(e)) for s, e in blocks)
    n = sum(s for s, _ in blocks)
    return ModelFamily(
        name="jordan",
        dim=n,
        param_names=(),
        builder=lambda p: build_jordan_sum(blocks),
        exact_builder=lambda p: jordan_exact(blocks),
        description="direct sum of Jordan blocks",
        options=(("blocks", blocks),),
    )


FAMILIES = {
    "latti": ("two-parameter lattice H(rho, w), even dim >= 4", _latti_family),
    "mytoy": ("H(0, w) with dim = 2J + 2", _mytoy_family),
    "h6": ("six-site constant-interaction lattice H6(w)", _h6_family),
    "ha6": ("real asymmetric 6x6 model H(g, lambda)", _ha6_family),
    "jordan": ("direct sum of Jordan blocks, --blocks size:eta,...", _jordan_family),
}


def get_family(name: str, dim: Optional[int] = None, blocks: Optional[Sequence[tuple]] = None) -> ModelFamily:
    if name not in FAMILIES:
        raise KeyError(f"unknown model {name!r}; known: {sorted(FAMILIES)}")
    factory = FAMILIES[name][1]
    if name == "jordan":
        if not blocks:
            raise ValueError("jordan family needs blocks")
        return factory(blocks)
    if name in ("latti", "mytoy"):
        return factory(10 if dim is None else int(dim))
    return factory(dim)


def list_families() -> list[tuple[str, str]]:
    return [(k, v[0]) for k, v in FAMILIES.items()]

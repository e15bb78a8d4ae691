"""Eigenvalue branches along parameter sweeps and real-spectrum domains.

Branches are continued by optimal assignment between consecutive grid
points.  The all-real region of a two-parameter family is classified per
grid point and its boundary traced with marching squares.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment
from skimage.measure import find_contours

from .config import DEFAULT, Tolerances
from .exact import to_exact
from .linalg import char_poly, eigvals
from .models import ModelFamily, build_mytoy
from .poly import (
    NonConvergence,
    NotPolynomialInParam,
    UniPoly,
    chebyshev_U,
    count_real_roots,
    roots,
    symbolic_char_poly,
)


class WOutOfRange(ValueError):
    """The Chebyshev secular equation was asked for |w| > 1."""


def _point(fixed: Optional[dict], free: str, value: float) -> dict:
    p = dict(fixed or {})
    p[free] = value
    return p


def _check_grid(grid: Sequence[float], minimum: int = 1) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or g.size < minimum:
        raise ValueError(f"grid needs at least {minimum} point(s)")
    if np.any(np.diff(g) < 0):
        raise ValueError("grid must be sorted")
    return g


def _spectra(family: ModelFamily, points: list, workers: Optional[int], skip_invalid_builds: bool = False):
    """Eigenvalues at each point, or ``None`` where the solver (or builder) failed."""

    def one(pt):
        try:
            return eigvals(family.build(pt))
        except (NonConvergence, np.linalg.LinAlgError):
            return None
        except ValueError:
            if skip_invalid_builds:
                return None
            raise

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, points))
    return [one(pt) for pt in points]




# ----------------------------------------------------------------------
# branch sweeps


@dataclass
class MergerEvent:
    interval: tuple  # (lo, hi) in the swept parameter
    pair: tuple  # branch indices
    kind: str  # "complexify" (real pair -> conjugate pair) or "realify"

    @property
    def location(self) -> float:
        return 0.5 * (self.interval[0] + self.interval[1])


@dataclass
class BranchSet:
    """Continuity-matched eigenvalue branches; ``branches[k, i]`` is branch k at grid point i."""

    param: str
    param_grid: np.ndarray
    branches: np.ndarray
    reality_mask: np.ndarray
    merger_events: list = field(default_factory=list)
    invalid: list = field(default_factory=list)

    @property
    def n_branches(self) -> int:
        return self.branches.shape[0]

    def mergers_at(self, x: float, atol: float) -> list:
        return [e for e in self.merger_events if abs(e.location - x) <= atol]


def _match(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    """Permutation ``perm`` with ``cur[perm]`` aligned to ``prev`` (Hungarian method)."""
    cost = np.abs(prev[:, None] - cur[None, :])
    _, cols = linear_sum_assignment(cost)
    return cols


def _hysteresis_mask(im: np.ndarray, on: float, factor: float = 10.0) -> np.ndarray:
    """Per-branch reality flags: a real branch stays real until |Im| exceeds ``factor * on``."""
    mask = np.zeros(im.shape, dtype=bool)
    for k in range(im.shape[0]):
        state = abs(im[k, 0]) <= on
        for i in range(im.shape[1]):
            a = abs(im[k, i])
            state = a <= factor * on if state else a <= on
            mask[k, i] = state
    return mask


def _pair_up(idx: list, values: np.ndarray) -> list:
    """Pair branch indices whose values are closest to complex conjugates."""
    idx = list(idx)
    pairs = []
    while len(idx) >= 2:
        i = idx.pop(0)
        j = min(idx, key=lambda j: abs(values[j] - np.conj(values[i])))
        idx.remove(j)
        pairs.append(tuple(sorted((i, j))))
    return pairs


def _refine_count_change(family, fixed, free, a, b, tol, xtol, count):
    """Bisect ``[a, b]`` down to ``xtol`` on the number of real eigenvalues."""
    na = real_count(family, _point(fixed, free, a), tol, count)
    nb = real_count(family, _point(fixed, free, b), tol, count)
    if na == nb:
        return a, b
    while b - a > xtol:
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            break
        if real_count(family, _point(fixed, free, m), tol, count) == na:
            a = m
        else:
            b = m
    return a, b


def sweep(family: ModelFamily, fixed: Optional[dict], free_param: str, grid: Sequence[float],
          tol: Tolerances = DEFAULT, workers: Optional[int] = None, refine: bool = True,
          xtol: float = 1e-8) -> BranchSet:
    """Eigenvalue branches of ``family`` along ``free_param``.

    Points where the eigensolver fails are flagged in ``invalid`` and the
    branches are linearly interpolated across them.
    """
    g = _check_grid(grid)
    points = [_point(fixed, free_param, float(x)) for x in g]
    spectra = _spectra(family, points, workers)
    invalid = [i for i, s in enumerate(spectra) if s is None]
    valid = [i for i, s in enumerate(spectra) if s is not None]
    if not valid:
        raise NonConvergence(f"eigensolver failed at every point of the {free_param} grid")
    for i in invalid:
        warnings.warn(f"eigensolver failed at {free_param}={float(g[i])!r}; interpolating branches")

    n = family.dim
    br = np.full((n, g.size), np.nan + 0j)
    first = spectra[valid[0]]
    order = np.lexsort((first.imag, first.real))
    br[:, valid[0]] = first[order]
    last = valid[0]
    for i in valid[1:]:
        cur = spectra[i]
        br[:, i] = cur[_match(br[:, last], cur)]
        last = i
    for i in invalid:
        for k in range(n):
            br[k, i] = complex(np.interp(g[i], g[valid], br[k, valid].real),
                               np.interp(g[i], g[valid], br[k, valid].imag))

    count = _slice_counter(family, fixed, free_param)
    im = np.abs(br.imag)
    for i in valid:
        # inside the EP roundoff band the exact count says how many values are real
        H = family.build(points[i])
        norm = max(float(np.linalg.norm(H, 2)), 1e-300)
        band = 10.0 * (np.finfo(float).eps * norm) ** (1.0 / n) * norm ** (1.0 - 1.0 / n)
        if not np.any((im[:, i] > tol.real) & (im[:, i] <= band)):
            continue
        k = count(points[i])
        if k is not None:
            im[np.argsort(im[:, i], kind="stable")[:k], i] = 0.0
    mask = _hysteresis_mask(im, tol.real)
    events = []
    for i in range(g.size - 1):
        went_complex = [k for k in range(n) if mask[k, i] and not mask[k, i + 1]]
        went_real = [k for k in range(n) if not mask[k, i] and mask[k, i + 1]]
        if not went_complex and not went_real:
            continue
        a, b = float(g[i]), float(g[i + 1])
        if refine and i not in invalid and i + 1 not in invalid:
            a, b = _refine_count_change(family, fixed, free_param, a, b, tol, xtol, count)
        for pair in _pair_up(went_complex, br[:, i + 1]):
            events.append(MergerEvent((a, b), pair, "complexify"))
        for pair in _pair_up(went_real, br[:, i]):
            events.append(MergerEvent((a, b), pair, "realify"))
    return BranchSet(free_param, g, br, mask, events, invalid)


def max_jump_ratio(bs: BranchSet) -> float:
    """Largest single-step branch jump divided by the median jump."""
    steps = np.abs(np.diff(bs.branches, axis=1))
    med = float(np.median(steps))
    return float(np.max(steps)) / med if med > 0 else math.inf


# ----------------------------------------------------------------------
# real-spectrum intervals and domains


def _exact_real_count(family: ModelFamily, point: dict) -> Optional[int]:
    """Sturm count of real eigenvalues on the exact characteristic polynomial, or ``None``."""
    if family.exact_builder is None:
        return None
    p = char_poly(family.build_exact(point))
    if not p.is_real:
        return None
    return count_real_roots(p)


def _slice_counter(family: ModelFamily, fixed: Optional[dict], free: str) -> Callable:
    """Exact real-eigenvalue count along one parameter.

    The symbolic secular polynomial is built on first use and then reused.
    """
    cache: list = []

    def count(point):
        if not cache:
            try:
                secular = symbolic_char_poly(family, dict(fixed or {}), free)
                cache.append(secular if all(c.is_real for c in secular.coeffs) else None)
            except (NotPolynomialInParam, TypeError, ValueError):
                cache.append(False)
        if cache[0] is False:
            return _exact_real_count(family, point)
        if cache[0] is None:
            return None
        return count_real_roots(cache[0].at_param(to_exact(point[free])))

    return count


def real_count(family: ModelFamily, point: dict, tol: Tolerances = DEFAULT,
               exact: Optional[Callable] = None) -> int:
    """Number of real eigenvalues at ``point``, counted with multiplicity.

    Float eigenvalues decide unless some imaginary part lies between
    ``tol.real`` and the roundoff a backward-stable solver can produce at an
    EP of full order, ``(eps ||H||)^(1/n) ||H||^(1 - 1/n)``; such points are
    settled by an exact Sturm count when the family allows (``exact`` may
    supply a faster point -> count/None function).
    """
    H = family.build(point)
    im = np.abs(eigvals(H).imag)
    n = family.dim
    norm = max(float(np.linalg.norm(H, 2)), 1e-300)
    band = 10.0 * (np.finfo(float).eps * norm) ** (1.0 / n) * norm ** (1.0 - 1.0 / n)
    if np.any((im > tol.real) & (im <= band)):
        verdict = (exact or (lambda p: _exact_real_count(family, p)))(point)
        if verdict is not None:
            return int(verdict)
    return int(np.sum(im <= tol.real))


def is_all_real(family: ModelFamily, point: dict, tol: Tolerances = DEFAULT,
                exact: Optional[Callable] = None) -> bool:
    """Whole-spectrum reality at ``point``, with the exact fallback of :func:`real_count`."""
    return real_count(family, point, tol, exact) == family.dim


def physical_interval(family: ModelFamily, fixed: Optional[dict], free_param: str, range_: Sequence[float],
                      tol: Tolerances = DEFAULT, samples: int = 801, xtol: float = 1e-6) -> list:
    """Maximal sub-intervals of ``range_`` on which the whole spectrum is real.

    Sampling finds the runs; each inner endpoint is bisected to ``xtol``
    and reported on its real side.
    """
    step = xtol / 8
    lo, hi = float(range_[0]), float(range_[1])
    if not lo <= hi:
        raise ValueError("need lo <= hi")
    xs = np.linspace(lo, hi, max(int(samples), 2))
    check = _slice_counter(family, fixed, free_param)
    flags = [is_all_real(family, _point(fixed, free_param, float(x)), tol, check) for x in xs]

    def edge(real_x, other_x):
        a, b = real_x, other_x
        while abs(b - a) > step:
            m = 0.5 * (a + b)
            if is_all_real(family, _point(fixed, free_param, m), tol, check):
                a = m
            else:
                b = m
        return a

    out = []
    i = 0
    while i < len(xs):
        if not flags[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(xs) and flags[j + 1]:
            j += 1
        left = float(xs[i]) if i == 0 else edge(float(xs[i]), float(xs[i - 1]))
        right = float(xs[j]) if j == len(xs) - 1 else edge(float(xs[j]), float(xs[j + 1]))
        out.append((left, right))
        i = j + 1
    return out


@dataclass
class DomainMap:
    """All-real classification on a rectangular grid; ``all_real[i, j]`` is at ``(grid1[i], grid2[j])``."""

    params: tuple
    grid1: np.ndarray
    grid2: np.ndarray
    all_real: np.ndarray
    valid: np.ndarray
    boundary: list  # polylines, each an (M, 2) array of (p1, p2) points

    def contains(self, p1: float, p2: float) -> bool:
        i = int(np.argmin(np.abs(self.grid1 - p1)))
        j = int(np.argmin(np.abs(self.grid2 - p2)))
        return bool(self.valid[i, j] and self.all_real[i, j])


def domain_map(family: ModelFamily, param1: str, grid1: Sequence[float], param2: str, grid2: Sequence[float],
               fixed: Optional[dict] = None, tol: Tolerances = DEFAULT,
               workers: Optional[int] = None) -> DomainMap:
    """Reality map over ``grid1 x grid2`` plus its marching-squares boundary."""
    g1, g2 = _check_grid(grid1), _check_grid(grid2)
    if param1 == param2:
        raise ValueError("the two parameters must differ")
    points = [_point(_point(fixed, param1, float(a)), param2, float(b)) for a in g1 for b in g2]
    spectra = _spectra(family, points, workers, skip_invalid_builds=True)
    valid = np.array([s is not None for s in spectra]).reshape(g1.size, g2.size)
    real = np.array([s is not None and bool(np.max(np.abs(s.imag)) <= tol.real) for s in spectra])
    real = real.reshape(g1.size, g2.size)
    boundary = []
    if g1.size >= 2 and g2.size >= 2:
        for c in find_contours(real.astype(float), 0.5, mask=valid):
            p1 = np.interp(c[:, 0], np.arange(g1.size), g1)
            p2 = np.interp(c[:, 1], np.arange(g2.size), g2)
            boundary.append(np.column_stack([p1, p2]))
    return DomainMap((param1, param2), g1, g2, real, valid, boundary)


# ----------------------------------------------------------------------
# Chebyshev secular equation for the rho = 0 chain


@dataclass
class ChebSpectrum:
    J: int
    w: float
    energies: np.ndarray  # sorted, length 2J + 2
    branch_of: np.ndarray  # +1 / -1: sign of the cos(2 tau) factor that produced each energy
    principal: np.ndarray  # energies from the +sqrt(1 - w^2) branch alone
    residual: float  # max deviation from the sorted direct eigensolve
    matching_branch: str  # "both", "+", "-" or "none"


def _cheb_branch(J: int, c: float) -> np.ndarray:
    """Real roots x of ``U_{J+1}(x) - c U_J(x)`` as energies ``F = -2x``."""
    u1 = chebyshev_U(J + 1).to_numpy().real
    u0 = chebyshev_U(J).to_numpy().real
    coeffs = u1.copy()
    coeffs[: u0.size] -= c * u0
    xs = np.array(roots(UniPoly(tuple(coeffs), "x")))
    if xs.size != J + 1 or np.max(np.abs(xs.imag)) > 1e-8:
        raise NonConvergence(f"secular equation for J={J}, c={c!r} lost real roots")
    return np.sort(-2.0 * xs.real)


def cheb_spectrum(J: int, w: float, tol: float = 1e-9) -> ChebSpectrum:
    """Energies of ``mytoy(J, w)`` from the Chebyshev form of the secular equation.

    With ``w = sin 2tau`` the factor ``cos 2tau`` is ``+-sqrt(1 - w^2)``; one
    sign gives J+1 levels, the other the remaining J+1, so both are solved
    and tagged.  At ``|w| = 1`` both reduce to ``U_{J+1}(x) = 0``.
    """
    J = int(J)
    if J < 1:
        raise ValueError("J must be >= 1")
    w = float(w)
    if not math.isfinite(w) or abs(w) > 1:
        raise WOutOfRange(f"|w| must be <= 1, got {w!r}")
    c = math.sqrt(max(0.0, 1.0 - w * w))
    plus, minus = _cheb_branch(J, c), _cheb_branch(J, -c)
    energies = np.concatenate([plus, minus])
    tags = np.concatenate([np.ones(J + 1, int), -np.ones(J + 1, int)])
    order = np.argsort(energies, kind="stable")
    energies, tags = energies[order], tags[order]

    direct = eigvals(build_mytoy(J, w))
    ref = np.sort(direct.real)
    residual = float(np.max(np.abs(energies - ref)))

    def covered(part):
        return all(np.min(np.abs(ref - e)) <= max(tol, 10 * residual) for e in part)

    p_ok, m_ok = covered(plus), covered(minus)
    matching = {(True, True): "both", (True, False): "+", (False, True): "-"}.get((p_ok, m_ok), "none")
    return ChebSpectrum(J, w, energies, tags, plus, residual, matching)


def cheb_ep_energies(J: int) -> np.ndarray:
    """Closed-form EP energies ``-2 cos(k pi / (J+2))``, each twice."""
    k = np.arange(1, J + 2)
    e = -2.0 * np.cos(k * np.pi / (J + 2))
    return np.sort(np.concatenate([e, e]))

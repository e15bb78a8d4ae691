"""Exceptional points: localisation on a real parameter slice and Jordan structure.

Locations come from the discriminant of the exact characteristic
polynomial whenever the family is polynomial in the free parameter; the
real roots of its square-free part are isolated exactly, so confluent EPs
stay confluent instead of smearing into a cloud of float roots.  Families
without an exact path fall back to an eigenvalue-gap search.

Classification works on the float matrix.  Eigenvalues are clustered top
down (single linkage, splitting at the widest gap) and a cluster is
accepted when the kernel staircase of ``H - eta I`` at its centroid has
total dimension equal to the cluster size; the staircase also yields the
block sizes.
"""

from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.cluster.hierarchy import linkage, to_tree
from scipy.optimize import brentq, linear_sum_assignment, minimize_scalar
from scipy.spatial.distance import pdist

from .config import DEFAULT, Tolerances
from .exact import to_exact
from .linalg import as_cmatrix, char_poly, eigvals, jordan_partition_from_nullities, null_space
from .models import ModelFamily, build_jordan_sum
from .poly import (
    NotPolynomialInParam,
    discriminant_in_F,
    real_roots_of,
    roots,
    squarefree_decomposition,
    symbolic_char_poly,
)

log = logging.getLogger(__name__)


class AmbiguousClustering(RuntimeError):
    """No clustering of the spectrum is consistent with the kernel ranks."""


class IllConditionedChains(UserWarning):
    """Jordan chains were found but the transition matrix is too ill-conditioned."""


@dataclass
class EtaBlocks:
    eta: complex
    alg_mult: int
    sizes: list
    nullities: list = field(default_factory=list)

    @property
    def geo_mult(self) -> int:
        return len(self.sizes)


@dataclass
class JordanStructure:
    etas: list  # EtaBlocks, sorted by (Re, Im)

    @property
    def partition(self) -> list:
        return sorted((s for e in self.etas for s in e.sizes), reverse=True)

    @property
    def K(self) -> int:
        return sum(e.geo_mult for e in self.etas)

    @property
    def multiplicities(self) -> list:
        return [(e.eta, e.alg_mult) for e in self.etas]

    @property
    def blocks(self) -> list:
        return [(s, e.eta) for e in self.etas for s in e.sizes]

    @property
    def is_defective(self) -> bool:
        return any(s > 1 for s in self.partition)


@dataclass
class CanonicalForm:
    blocks: list  # (size, eta) in display order
    transition_matrix: Optional[np.ndarray] = None
    residual: Optional[float] = None

    def matrix(self) -> np.ndarray:
        return build_jordan_sum(self.blocks)


@dataclass
class EpRecord:
    family: str
    fixed: dict
    free_param: str
    location: float
    degenerate_eigenvalues: list  # (eta, alg_mult) with alg_mult >= 2
    partition: list
    K: int
    is_on_reality_boundary: bool
    blocks: list = field(default_factory=list)  # (size, eta)
    level_pairs: list = field(default_factory=list)
    status: str = "ok"

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "fixed": dict(self.fixed),
            "free_param": self.free_param,
            "location": self.location,
            "etas": [
                {"re": float(e.real), "im": float(e.imag), "alg_mult": int(m)}
                for e, m in self.degenerate_eigenvalues
            ],
            "partition": [int(s) for s in self.partition],
            "K": int(self.K),
            "on_reality_boundary": bool(self.is_on_reality_boundary),
            "status": self.status,
        }

    @classmethod
    def from_json(cls, d: dict) -> "EpRecord":
        return cls(
            family=d["family"],
            fixed=dict(d["fixed"]),
            free_param=d["free_param"],
            location=d["location"],
            degenerate_eigenvalues=[(complex(e["re"], e["im"]), e["alg_mult"]) for e in d["etas"]],
            partition=list(d["partition"]),
            K=d["K"],
            is_on_reality_boundary=d["on_reality_boundary"],
            status=d.get("status", "ok"),
        )


# ----------------------------------------------------------------------
# Jordan structure


def _rank_tol(gap: float, tol: Tolerances) -> float:
    return min(tol.rank * max(1.0, 1.0 / gap), tol.rank_cap) if gap > 0 else tol.rank_cap


def _staircase(A: np.ndarray, thr: float, limit: int) -> list:
    n = A.shape[0]
    V = np.zeros((n, 0), dtype=complex)
    out = [0]
    bases = [V]
    for _ in range(limit):
        P = np.eye(n) - V @ V.conj().T
        V = null_space(P @ A, thr)
        if V.shape[1] == out[-1]:
            break
        out.append(V.shape[1])
        bases.append(V)
    return out, bases


def _analyse_cluster(H: np.ndarray, eta: complex, size: int, gap: float, tol: Tolerances, scale: float):
    A = H - eta * np.eye(H.shape[0])
    thr = _rank_tol(gap, tol) * scale
    nullities, _ = _staircase(A, thr, size + 1)
    return nullities


def _gap(values: np.ndarray, members: np.ndarray, eta: complex) -> float:
    others = np.delete(values, members)
    return float(np.min(np.abs(others - eta))) if others.size else 1.0


def classify_ep(
    H,
    eta_candidates: Optional[Sequence[complex]] = None,
    tol: Tolerances = DEFAULT,
) -> JordanStructure:
    """Jordan structure of ``H``: eigenvalue clusters and their block sizes.

    With ``eta_candidates`` every eigenvalue is assigned to its nearest
    candidate; otherwise clusters are found automatically.  Raises
    :class:`AmbiguousClustering` if no consistent clustering exists.
    """
    H = as_cmatrix(H)
    n = H.shape[0]
    ev = eigvals(H)
    scale = max(np.linalg.norm(H, 2), 1.0)
    found = []

    if eta_candidates is not None:
        cands = np.asarray(list(eta_candidates), dtype=complex)
        if cands.size == 0:
            raise ValueError("empty eta_candidates")
        assign = np.argmin(np.abs(ev[:, None] - cands[None, :]), axis=1)
        for c in range(cands.size):
            members = np.flatnonzero(assign == c)
            if members.size == 0:
                continue
            eta = cands[c]
            nullities = _analyse_cluster(H, eta, members.size, _gap(ev, members, eta), tol, scale)
            if nullities[-1] != members.size:
                raise AmbiguousClustering(
                    f"candidate {eta} owns {members.size} eigenvalues but its generalized kernel has dimension {nullities[-1]}"
                )
            found.append((eta, members.size, nullities))
    elif n == 1:
        found.append((complex(ev[0]), 1, [0, 1]))
    else:
        tree = to_tree(linkage(pdist(np.c_[ev.real, ev.imag]), "single"))
        stack = [tree]
        while stack:
            node = stack.pop()
            members = np.asarray(node.pre_order())
            eta = complex(np.mean(ev[members]))
            nullities = _analyse_cluster(H, eta, members.size, _gap(ev, members, eta), tol, scale)
            if nullities[-1] == members.size:
                found.append((eta, members.size, nullities))
                continue
            if node.is_leaf():
                raise AmbiguousClustering(
                    f"eigenvalue {ev[members[0]]} is not resolvable at tol_rank={tol.rank}"
                )
            stack.extend([node.get_right(), node.get_left()])

    etas = [
        EtaBlocks(eta=eta, alg_mult=size, sizes=jordan_partition_from_nullities(nul), nullities=nul)
        for eta, size, nul in found
    ]
    etas.sort(key=lambda e: (round(e.eta.real, 12), round(e.eta.imag, 12)))
    return JordanStructure(etas)


def canonical_form(H, structure: Optional[JordanStructure] = None, tol: Tolerances = DEFAULT,
                   cond_cap: float = 1e12) -> CanonicalForm:
    """Jordan form ``Q^-1 H Q = B`` with ``Q`` assembled from Jordan chains.

    Block order: eigenvalues ascending (real part, then imaginary), larger
    blocks first.  When ``cond(Q)`` exceeds ``cond_cap`` an
    :class:`IllConditionedChains` warning is issued and ``Q`` is omitted.
    """
    H = as_cmatrix(H)
    n = H.shape[0]
    if structure is None:
        structure = classify_ep(H, tol=tol)
    ev = eigvals(H)
    scale = max(np.linalg.norm(H, 2), 1.0)
    columns = []
    blocks = []
    for e in structure.etas:
        A = H - e.eta * np.eye(n)
        members = np.flatnonzero(np.abs(ev - e.eta) <= np.sort(np.abs(ev - e.eta))[e.alg_mult - 1])
        thr = _rank_tol(_gap(ev, members, e.eta), tol) * scale
        _, bases = _staircase(A, thr, e.alg_mult + 1)
        sizes = e.sizes
        tops: list = []  # (size, vector)
        for s in range(max(sizes), 0, -1):
            count = sizes.count(s)
            if count == 0:
                continue
            Vs = bases[s] if s < len(bases) else bases[-1]
            known = [bases[s - 1]] + [np.linalg.matrix_power(A, t - s) @ v[:, None] for t, v in tops]
            W = np.hstack(known) if known else np.zeros((n, 0))
            if W.shape[1]:
                Qw, _ = np.linalg.qr(W)
                R = Vs - Qw @ (Qw.conj().T @ Vs)
            else:
                R = Vs
            U, sv, _ = np.linalg.svd(R, full_matrices=False)
            for k in range(count):
                tops.append((s, U[:, k]))
        for s, v in tops:
            chain = [np.linalg.matrix_power(A, s - 1 - k) @ v for k in range(s)]
            columns.extend(chain)
            blocks.append((s, e.eta))
    Q = np.column_stack(columns)
    B = build_jordan_sum(blocks)
    cond = np.linalg.cond(Q)
    if not np.isfinite(cond) or cond > cond_cap:
        warnings.warn(f"transition matrix condition {cond:.3g} exceeds {cond_cap:.1g}", IllConditionedChains)
        return CanonicalForm(blocks, None, None)
    residual = float(np.linalg.norm(np.linalg.solve(Q, H @ Q) - B, 2))
    return CanonicalForm(blocks, Q, residual)


# ----------------------------------------------------------------------
# localisation


def _point(fixed: dict, free: str, value: float) -> dict:
    p = dict(fixed)
    p[free] = value
    return p


def all_real(family: ModelFamily, point: dict, tol: Tolerances = DEFAULT) -> bool:
    return bool(np.max(np.abs(eigvals(family.build(point)).imag)) <= tol.real)


def level_pairs(H, structure: JordanStructure) -> list:
    """Indices ``j`` of the level pairs ``(2j, 2j+1)`` that merge in 2x2 blocks.

    Levels are counted in ascending order of real part.
    """
    ev = np.sort(eigvals(H).real)
    out = []
    for e in structure.etas:
        if 2 not in e.sizes:
            continue
        below = int(np.sum(ev < e.eta.real - 1e-6 * max(1.0, abs(e.eta))))
        out.append(below // 2)
    return sorted(out)


def _rational_root(d, x: Fraction, max_den: int = 10**6):
    r = x.limit_denominator(max_den)
    if abs(r - x) < Fraction(1, 10**12) and d(r) == 0:
        return r
    return None


def _exact_candidates(p, r: Fraction) -> list:
    cp = p.at_param(r)
    out = []
    for f, k in squarefree_decomposition(cp):
        if k >= 2:
            out.extend(roots(f))
    # simple eigenvalues are still needed as candidates
    return out


def _classify_at(family, fixed, free, x, tol, candidates=None):
    H = family.build(_point(fixed, free, x))
    if candidates is not None:
        ev = eigvals(H)
        cands = list(candidates)
        # simple eigenvalues keep their own candidate
        for lam in ev:
            if not cands or np.min(np.abs(np.asarray(cands) - lam)) > 1e-4 * max(1.0, abs(lam)):
                cands.append(complex(lam))
        try:
            return H, classify_ep(H, cands, tol)
        except AmbiguousClustering:
            pass
    return H, classify_ep(H, tol=tol)


def _on_boundary(family, fixed, free, x, tol, delta=1e-4) -> bool:
    try:
        left = all_real(family, _point(fixed, free, x - delta), tol)
        right = all_real(family, _point(fixed, free, x + delta), tol)
    except ValueError:
        return False
    return left != right


def _record(family, fixed, free, x, H, s: JordanStructure, tol, status="ok") -> EpRecord:
    return EpRecord(
        family=family.name,
        fixed=dict(fixed),
        free_param=free,
        location=float(x),
        degenerate_eigenvalues=[(e.eta, e.alg_mult) for e in s.etas if e.alg_mult >= 2],
        partition=s.partition,
        K=s.K,
        is_on_reality_boundary=_on_boundary(family, fixed, free, float(x), tol),
        blocks=s.blocks,
        level_pairs=level_pairs(H, s),
        status=status,
    )


def ep_candidate_locations(family: ModelFamily, fixed: dict, free: str, lo: float, hi: float,
                           width=Fraction(1, 2**60)) -> tuple:
    """Exact real discriminant roots in ``[lo, hi]`` plus the secular BiPoly."""
    p = symbolic_char_poly(family, fixed, free)
    d = discriminant_in_F(p)
    xs = real_roots_of(d, to_exact(lo), to_exact(hi), width)
    return p, d, xs


def find_eps(family: ModelFamily, fixed: dict, free_param: str, range_: Sequence[float],
             tol: Tolerances = DEFAULT, keep_diabolic: bool = False) -> list:
    """Exceptional points of ``family`` along ``free_param`` in ``range_``.

    Returns :class:`EpRecord` objects sorted by location.  Coalescing EPs
    at one parameter value come back as one record with the full partition.
    """
    lo, hi = float(range_[0]), float(range_[1])
    if not lo < hi:
        raise ValueError("need lo < hi")
    try:
        p, d, xs = ep_candidate_locations(family, fixed, free_param, lo, hi)
    except NotPolynomialInParam as exc:
        warnings.warn(f"{exc}; using eigenvalue-gap search")
        return find_eps_numeric(family, fixed, free_param, (lo, hi), tol, keep_diabolic=keep_diabolic)
    out = []
    for x in xs:
        r = _rational_root(d, x)
        cands = _exact_candidates(p, r) if r is not None else None
        loc = float(r if r is not None else x)
        status = "ok"
        try:
            H, s = _classify_at(family, fixed, free_param, loc, tol, cands)
        except AmbiguousClustering as exc:
            log.warning("classification failed at %s=%r: %s", free_param, loc, exc)
            H = family.build(_point(fixed, free_param, loc))
            s = JordanStructure([])
            status = "partial"
        if s.etas and not s.is_defective and not keep_diabolic:
            log.info("degenerate but diagonalizable point at %s=%r skipped", free_param, loc)
            continue
        out.append(_record(family, fixed, free_param, loc, H, s, tol, status) if s.etas else
                   EpRecord(family.name, dict(fixed), free_param, loc, [], [], 0, False, status=status))
    return sorted(out, key=lambda r: r.location)


def _signed_gap(family, fixed, free, x) -> tuple:
    ev = eigvals(family.build(_point(fixed, free, x)))
    diff = np.abs(ev[:, None] - ev[None, :])
    np.fill_diagonal(diff, np.inf)
    i, j = np.unravel_index(np.argmin(diff), diff.shape)
    sq = (ev[i] - ev[j]) ** 2
    return float(sq.real), float(diff[i, j])


def find_eps_numeric(family: ModelFamily, fixed: dict, free_param: str, range_: Sequence[float],
                     tol: Tolerances = DEFAULT, samples: int = 801, gap_cut: float = 1e-5,
                     keep_diabolic: bool = False) -> list:
    """Eigen-gap localisation for families without an exact path.

    For a real characteristic polynomial the squared difference of the
    closest pair is real and changes sign through an EP2 (real pair on one
    side, conjugate pair on the other), so Brent's method applies; other
    gap minima are polished by bounded minimisation of the gap itself.
    """
    lo, hi = float(range_[0]), float(range_[1])
    xs = np.linspace(lo, hi, samples)
    sg = [_signed_gap(family, fixed, free_param, x) for x in xs]
    signed = np.array([s for s, _ in sg])
    gaps = np.array([g for _, g in sg])
    locs = []
    for k in range(samples - 1):
        if signed[k] == 0:
            locs.append(xs[k])
        elif signed[k] * signed[k + 1] < 0:
            f = lambda x: _signed_gap(family, fixed, free_param, x)[0]
            try:
                locs.append(brentq(f, xs[k], xs[k + 1], xtol=tol.disc, rtol=1e-15, maxiter=200))
            except ValueError:
                continue
    for k in range(1, samples - 1):
        if gaps[k] <= gaps[k - 1] and gaps[k] <= gaps[k + 1] and signed[k - 1] * signed[k + 1] > 0:
            res = minimize_scalar(lambda x: _signed_gap(family, fixed, free_param, x)[1],
                                  bounds=(xs[k - 1], xs[k + 1]), method="bounded",
                                  options={"xatol": tol.disc})
            if res.fun < gap_cut:
                locs.append(float(res.x))
    locs.sort()
    merged = []
    for x in locs:
        if not merged or abs(x - merged[-1]) > 1e-8 * max(1.0, abs(x)):
            merged.append(x)
    out = []
    for x in merged:
        if not (lo <= x <= hi):
            continue
        try:
            H, s = _classify_at(family, fixed, free_param, x, tol)
        except AmbiguousClustering:
            out.append(EpRecord(family.name, dict(fixed), free_param, float(x), [], [], 0, False, status="partial"))
            continue
        if not s.is_defective and not keep_diabolic:
            continue
        out.append(_record(family, fixed, free_param, x, H, s, tol))
    return out


def pair_merger_locations(records: Sequence[EpRecord], after: Optional[float] = None) -> dict:
    """First location at which each level pair ``j`` merges.

    With ``after`` only records strictly beyond that parameter value count,
    e.g. a point inside the real-spectrum interval one is leaving.
    """
    out: dict = {}
    for r in sorted(records, key=lambda r: r.location):
        if after is not None and r.location <= after:
            continue
        for j in r.level_pairs:
            out.setdefault(j, r.location)
    return out


# ----------------------------------------------------------------------
# curves of EPs over a second parameter


@dataclass
class EpTrace:
    other_param: str
    grid: list
    points: list  # per grid value: list of EpRecord
    curves: list  # list of lists of (other value, location)


def trace_ep_curve(family: ModelFamily, free_param: str, other_param: str, grid: Sequence[float],
                   range_: Sequence[float], fixed: Optional[dict] = None, tol: Tolerances = DEFAULT,
                   workers: Optional[int] = None) -> EpTrace:
    """EP locations in ``free_param`` for every value of ``other_param`` on ``grid``.

    Consecutive grid values are linked by optimal assignment on the
    location difference; unmatched locations start new curves.
    """
    grid = [float(g) for g in grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be sorted")
    fixed = dict(fixed or {})

    def one(g):
        return find_eps(family, _point(fixed, other_param, g), free_param, range_, tol)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(one, grid))
    else:
        points = [one(g) for g in grid]

    curves: list = []
    active: list = []  # curve indices alive at the previous grid value
    for g, recs in zip(grid, points):
        locs = [r.location for r in recs]
        if not active:
            active = []
            for x in locs:
                curves.append([(g, x)])
                active.append(len(curves) - 1)
            continue
        prev = np.array([curves[c][-1][1] for c in active])
        cost = np.abs(prev[:, None] - np.array(locs)[None, :]) if locs else np.zeros((len(prev), 0))
        rows, cols = linear_sum_assignment(cost) if locs else ([], [])
        new_active = []
        used = set()
        for r_, c_ in zip(rows, cols):
            curves[active[r_]].append((g, locs[c_]))
            new_active.append(active[r_])
            used.add(c_)
        for k, x in enumerate(locs):
            if k not in used:
                curves.append([(g, x)])
                new_active.append(len(curves) - 1)
        active = new_active
    return EpTrace(other_param, grid, points, curves)


def pair_location(family: ModelFamily, fixed: dict, free_param: str, range_: Sequence[float],
                  pair: int, tol: Tolerances = DEFAULT) -> Optional[float]:
    recs = find_eps(family, fixed, free_param, range_, tol)
    return pair_merger_locations(recs).get(pair)


def locate_crossing(family: ModelFamily, free_param: str, other_param: str, bracket: Sequence[float],
                    range_: Sequence[float], pair_a: int, pair_b: int, fixed: Optional[dict] = None,
                    tol: Tolerances = DEFAULT, xtol: float = 1e-13) -> tuple:
    """Value of ``other_param`` where the EP2 curves of two level pairs cross.

    Returns ``(other value, free value)``.  Each side of the difference is
    evaluated through the exact discriminant, so the root is as sharp as
    Brent's method allows.
    """
    fixed = dict(fixed or {})

    def diff(g):
        pt = _point(fixed, other_param, g)
        locs = pair_merger_locations(find_eps(family, pt, free_param, range_, tol))
        return locs[pair_a] - locs[pair_b]

    g = brentq(diff, bracket[0], bracket[1], xtol=xtol, rtol=1e-15)
    pt = _point(fixed, other_param, g)
    locs = pair_merger_locations(find_eps(family, pt, free_param, range_, tol))
    return g, 0.5 * (locs[pair_a] + locs[pair_b])


# ----------------------------------------------------------------------
# classification at a full parameter point


def _point_candidates(family: ModelFamily, point: dict) -> Optional[list]:
    """Roots of the repeated factors of the exact characteristic polynomial."""
    if family.exact_builder is None:
        return None
    try:
        cp = char_poly(family.build_exact(point))
    except (NotPolynomialInParam, TypeError, ValueError):
        return None
    out = []
    for f, k in squarefree_decomposition(cp):
        if k >= 2:
            out.extend(roots(f))
    return out


def classify_point(family: ModelFamily, point: dict, tol: Tolerances = DEFAULT) -> tuple:
    """``(H, JordanStructure)`` at a full parameter point.

    Exact families seed the clustering with the repeated roots of their
    characteristic polynomial at the (rational) point.
    """
    H = family.build(point)
    cands = _point_candidates(family, point)
    if cands:
        ev = eigvals(H)
        cands = list(cands)
        for lam in ev:
            if np.min(np.abs(np.asarray(cands) - lam)) > 1e-4 * max(1.0, abs(lam)):
                cands.append(complex(lam))
        try:
            return H, classify_ep(H, cands, tol)
        except AmbiguousClustering:
            pass
    return H, classify_ep(H, tol=tol)


def point_on_boundary(family: ModelFamily, point: dict, tol: Tolerances = DEFAULT, delta: float = 1e-4) -> bool:
    """Whether spectral reality changes within ``delta`` of ``point`` along some parameter axis."""
    try:
        centre = all_real(family, point, tol)
        for name in family.param_names:
            for step in (-delta, delta):
                if all_real(family, _point(point, name, point[name] + step), tol) != centre:
                    return True
    except ValueError:
        return False
    return False


def classification_record(family: ModelFamily, point: dict, tol: Tolerances = DEFAULT) -> EpRecord:
    H, s = classify_point(family, point, tol)
    return EpRecord(
        family=family.name,
        fixed=dict(point),
        free_param=None,
        location=None,
        degenerate_eigenvalues=[(e.eta, e.alg_mult) for e in s.etas if e.alg_mult >= 2],
        partition=s.partition,
        K=s.K,
        is_on_reality_boundary=point_on_boundary(family, point, tol),
        blocks=s.blocks,
        level_pairs=level_pairs(H, s),
    )

"""Polynomials in one and two variables, exact or floating point.

Coefficients are stored in ascending order.  A polynomial is *exact* when
every coefficient is an ``int``, ``Fraction`` or :class:`GaussRat`; all
algebra (division, gcd, resultants, square-free decomposition, Sturm
chains) is then carried out without rounding.  Floating polynomials use
complex128 and only support evaluation and root finding.

A :class:`BiPoly` is kept as a polynomial in the spectral variable whose
coefficients are :class:`UniPoly` objects in the parameter, which is the
shape every caller actually needs (``det(F*I - H(w))``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT, Tolerances
from .exact import GaussRat, is_exact_scalar, make_complex, to_complex, to_exact


class NonConvergence(RuntimeError):
    """An iterative solver hit its iteration cap."""


class DegenerateInput(ValueError):
    """The polynomial has no dependence on the variable being eliminated."""


class NotPolynomialInParam(ValueError):
    """Matrix entries are not polynomial in the requested parameter."""


class NotQuadraticInParam(ValueError):
    """The secular polynomial is not a polynomial of degree <= 2 in w**2."""


def _is_zero(c) -> bool:
    if isinstance(c, UniPoly):
        return c.is_zero()
    return c == 0


def _norm_coeff(c):
    if isinstance(c, (bool, np.bool_)):
        raise TypeError("bool coefficient")
    if isinstance(c, int):
        return Fraction(c)
    if isinstance(c, (Fraction, GaussRat)):
        return c
    if isinstance(c, (float, complex, np.floating, np.complexfloating, np.integer)):
        return complex(c)
    raise TypeError(f"unsupported coefficient {c!r}")


@dataclass(frozen=True)
class UniPoly:
    """Univariate polynomial ``sum(coeffs[k] * var**k)``."""

    coeffs: tuple
    var: str = "F"

    def __post_init__(self):
        cs = [_norm_coeff(c) for c in self.coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    # -- construction -------------------------------------------------
    @classmethod
    def const(cls, c, var: str = "F") -> "UniPoly":
        return cls((c,), var)

    @classmethod
    def monomial(cls, k: int, c=1, var: str = "F") -> "UniPoly":
        return cls((0,) * k + (c,), var)

    @classmethod
    def from_roots(cls, roots: Iterable, var: str = "F") -> "UniPoly":
        p = cls((1,), var)
        for r in roots:
            p = p * cls((-r, 1), var)
        return p

    # -- basic properties --------------------------------------------
    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def lc(self):
        return self.coeffs[-1] if self.coeffs else Fraction(0)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, (Fraction, GaussRat)) for c in self.coeffs)

    @property
    def is_real(self) -> bool:
        if self.is_exact:
            return all(isinstance(c, Fraction) for c in self.coeffs)
        return all(abs(complex(c).imag) == 0 for c in self.coeffs)

    def coeff(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else Fraction(0)

    def is_even(self) -> bool:
        return all(c == 0 for c in self.coeffs[1::2])

    def to_numpy(self) -> np.ndarray:
        return np.array([to_complex(c) for c in self.coeffs], dtype=complex)

    def to_float(self) -> "UniPoly":
        return UniPoly(tuple(to_complex(c) for c in self.coeffs), self.var)

    # -- arithmetic -------------------------------------------------
    def _wrap(self, other) -> "UniPoly":
        if isinstance(other, UniPoly):
            return other
        return UniPoly((other,), self.var)

    def __add__(self, other):
        if isinstance(other, BiPoly):
            return NotImplemented
        o = self._wrap(other)
        n = max(len(self.coeffs), len(o.coeffs))
        return UniPoly(tuple(self.coeff(k) + o.coeff(k) for k in range(n)), self.var)

    __radd__ = __add__

    def __neg__(self):
        return UniPoly(tuple(-c for c in self.coeffs), self.var)

    def __sub__(self, other):
        return self + (-self._wrap(other))

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __mul__(self, other):
        if isinstance(other, BiPoly):
            return NotImplemented
        if not isinstance(other, UniPoly):
            return UniPoly(tuple(c * other for c in self.coeffs), self.var)
        if self.is_zero() or other.is_zero():
            return UniPoly((), self.var)
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a == 0:
                continue
            for j, b in enumerate(other.coeffs):
                out[i + j] = out[i + j] + a * b
        return UniPoly(tuple(out), self.var)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = UniPoly((1,), self.var)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __truediv__(self, scalar):
        if isinstance(scalar, UniPoly):
            q, r = self.divmod(scalar)
            if not r.is_zero():
                raise ArithmeticError("inexact polynomial division")
            return q
        if isinstance(scalar, int):
            scalar = Fraction(scalar)
        return UniPoly(tuple(c / scalar for c in self.coeffs), self.var)

    def __eq__(self, other):
        if isinstance(other, UniPoly):
            return self.coeffs == other.coeffs
        if is_exact_scalar(other) or isinstance(other, (float, complex)):
            return self.coeffs == UniPoly((other,), self.var).coeffs
        return NotImplemented

    def __hash__(self):
        return hash((self.coeffs, self.var))

    def divmod(self, d: "UniPoly"):
        """Euclidean division over the coefficient field."""
        if d.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        r = list(self.coeffs)
        q = [Fraction(0)] * max(len(r) - d.degree, 1)
        inv_lc = Fraction(1) / d.lc if isinstance(d.lc, Fraction) else None
        for k in range(len(r) - 1, d.degree - 1, -1):
            if r[k] == 0:
                continue
            f = r[k] * inv_lc if inv_lc is not None else r[k] / d.lc
            q[k - d.degree] = f
            for j, c in enumerate(d.coeffs):
                r[k - d.degree + j] = r[k - d.degree + j] - f * c
        return UniPoly(tuple(q), self.var), UniPoly(tuple(r[: d.degree]), self.var)

    def __mod__(self, d):
        return self.divmod(d)[1]

    def __floordiv__(self, d):
        return self.divmod(d)[0]

    def monic(self) -> "UniPoly":
        if self.is_zero():
            return self
        return self / self.lc

    def derivative(self) -> "UniPoly":
        return UniPoly(tuple(k * c for k, c in enumerate(self.coeffs) if k), self.var)

    def __call__(self, x):
        if isinstance(x, UniPoly):
            acc = UniPoly((), x.var)
        elif self.is_exact and is_exact_scalar(x):
            acc = Fraction(0)
        else:
            return self.eval_float(x)
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_float(self, x) -> complex:
        c = self.to_numpy()
        return complex(np.polynomial.polynomial.polyval(x, c)) if c.size else 0j

    def compose_square(self) -> "UniPoly":
        """``p(x**2)``."""
        out = []
        for c in self.coeffs:
            out.extend([c, Fraction(0)])
        return UniPoly(tuple(out[:-1]) if out else (), self.var)

    def even_part(self) -> "UniPoly":
        """``q`` with ``self(x) = q(x**2)``; only valid for even polynomials."""
        if not self.is_even():
            raise ValueError("polynomial is not even")
        return UniPoly(self.coeffs[::2], self.var)

    def real_part(self) -> "UniPoly":
        return UniPoly(tuple(c.re if isinstance(c, GaussRat) else c for c in self.coeffs), self.var)

    def imag_part(self) -> "UniPoly":
        return UniPoly(tuple(c.im if isinstance(c, GaussRat) else Fraction(0) for c in self.coeffs), self.var)

    def rename(self, var: str) -> "UniPoly":
        return UniPoly(self.coeffs, var)

    def __repr__(self):
        return f"UniPoly({self.pretty()})"

    def pretty(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coeffs[k]
            if c == 0:
                continue
            mon = "" if k == 0 else (self.var if k == 1 else f"{self.var}^{k}")
            if mon and c == 1:
                terms.append(mon)
            elif mon and c == -1:
                terms.append(f"-{mon}")
            else:
                cs = str(c) if not isinstance(c, GaussRat) else f"({c})"
                terms.append(f"{cs}*{mon}" if mon else cs)
        return " + ".join(terms).replace("+ -", "- ")


# ----------------------------------------------------------------------
# exact algorithms


def _primitive_ints(p: UniPoly) -> list[int]:
    """Integer coefficients of ``p`` with denominators cleared and content removed."""
    den = 1
    for c in p.coeffs:
        den = den * c.denominator // math.gcd(den, c.denominator)
    ints = [int(c * den) for c in p.coeffs]
    g = 0
    for c in ints:
        g = math.gcd(g, c)
    return [c // g for c in ints] if g > 1 else ints


def _int_prem(a: list[int], b: list[int]) -> list[int]:
    """Pseudo-remainder of integer coefficient lists (ascending)."""
    a = list(a)
    lb, db = b[-1], len(b) - 1
    while len(a) - 1 >= db and any(a):
        la, shift = a[-1], len(a) - 1 - db
        a = [lb * c for c in a]
        for k, c in enumerate(b):
            a[k + shift] -= la * c
        while a and a[-1] == 0:
            a.pop()
    return a


def poly_gcd(a: UniPoly, b: UniPoly) -> UniPoly:
    """Monic gcd of two exact polynomials.

    Rational inputs go through a primitive pseudo-remainder sequence over
    the integers, which keeps coefficient growth polynomial; Gaussian
    inputs use the plain Euclidean algorithm.
    """
    if a.is_real and b.is_real:
        if b.is_zero():
            return a.monic() if not a.is_zero() else a
        if a.is_zero():
            return b.monic()
        x, y = _primitive_ints(a), _primitive_ints(b)
        if len(x) < len(y):
            x, y = y, x
        while len(y) > 1:
            r = _int_prem(x, y)
            if not r:
                break
            x, y = y, _primitive_ints(UniPoly(tuple(Fraction(c) for c in r), a.var))
        else:
            return UniPoly((Fraction(1),), a.var)
        return UniPoly(tuple(Fraction(c) for c in y), a.var).monic()
    while not b.is_zero():
        a, b = b, a % b
    return a.monic() if not a.is_zero() else a


def squarefree_part(p: UniPoly) -> UniPoly:
    if p.degree < 1:
        return p.monic() if not p.is_zero() else p
    return (p // poly_gcd(p, p.derivative())).monic()


def squarefree_decomposition(p: UniPoly) -> list[tuple[UniPoly, int]]:
    """Yun's algorithm: ``p = lc * prod(f_k ** k)`` with square-free, coprime ``f_k``."""
    if p.degree < 1:
        return []
    dp = p.derivative()
    a = poly_gcd(p, dp)
    b = p // a
    c = dp // a
    out = []
    k = 1
    while b.degree >= 1:
        d = c - b.derivative()
        f = poly_gcd(b, d)
        if f.degree >= 1:
            out.append((f.monic(), k))
        b = b // f
        c = d // f
        k += 1
    return out


def bareiss_det(rows: Sequence[Sequence]):
    """Fraction-free determinant.

    Entries may be exact scalars or exact :class:`UniPoly` objects; every
    division performed is exact in the ring.
    """
    m = [list(r) for r in rows]
    n = len(m)
    if n == 0:
        return Fraction(1)
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if _is_zero(m[k][k]):
            swap = next((i for i in range(k + 1, n) if not _is_zero(m[i][k])), None)
            if swap is None:
                return m[k][k] * 0
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        pivot = m[k][k]
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[i][j] * pivot - m[i][k] * m[k][j]
                m[i][j] = num / prev
        prev = pivot
    det = m[n - 1][n - 1]
    return det if sign > 0 else -det


def sylvester_matrix(a: Sequence, b: Sequence) -> list[list]:
    """Sylvester matrix of two coefficient lists given in ascending order."""
    m, n = len(a) - 1, len(b) - 1
    zero = a[-1] * 0
    size = m + n
    rows = []
    for i in range(n):
        row = [zero] * size
        for k, c in enumerate(reversed(a)):
            row[i + k] = c
        rows.append(row)
    for i in range(m):
        row = [zero] * size
        for k, c in enumerate(reversed(b)):
            row[i + k] = c
        rows.append(row)
    return rows


def resultant(a: Sequence, b: Sequence):
    """Resultant of two exact coefficient lists (ascending, nonzero leading)."""
    if len(a) < 2 and len(b) < 2:
        return a[-1] * 0 + 1
    return bareiss_det(sylvester_matrix(a, b))


def discriminant(p: UniPoly):
    """Exact discriminant of a univariate polynomial of degree >= 1."""
    return _discriminant_coeffs(list(p.coeffs))


def _discriminant_coeffs(c: list):
    n = len(c) - 1
    if n < 1:
        raise DegenerateInput("discriminant of a constant")
    if n == 1:
        return c[-1] * 0 + 1
    dc = [k * c[k] for k in range(1, n + 1)]
    res = resultant(c, dc)
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    out = res / c[-1]
    return out if sign > 0 else -out


# ----------------------------------------------------------------------
# real root isolation


def sturm_chain(p: UniPoly) -> list[UniPoly]:
    chain = [p, p.derivative()]
    while chain[-1].degree > 0:
        r = -(chain[-2] % chain[-1])
        if r.is_zero():
            break
        chain.append(r / abs(r.lc))
    return chain


def _sign_changes(chain: list[UniPoly], x: Fraction) -> int:
    signs = []
    for q in chain:
        v = q(x)
        if v != 0:
            signs.append(v > 0)
    return sum(1 for s, t in zip(signs, signs[1:]) if s != t)


def real_roots_exact(p: UniPoly, lo, hi, width=Fraction(1, 2**52)) -> list[Fraction]:
    """Real roots of an exact real polynomial in ``[lo, hi]``.

    The polynomial is reduced to its square-free part, roots are isolated
    by Sturm counts and narrowed by sign bisection until the bracket is
    narrower than ``width * max(1, |x|)``.  Returned values are bracket
    midpoints, so each is within half that width of a true root.
    """
    if not p.is_exact or not p.is_real:
        raise TypeError("real_roots_exact needs an exact real polynomial")
    lo, hi = Fraction(lo), Fraction(hi)
    width = Fraction(width)
    if p.degree < 1 or hi < lo:
        return []
    q = squarefree_part(p)
    if q.degree < 1:
        return []
    chain = sturm_chain(q)
    found: list[Fraction] = []
    if q(lo) == 0:
        found.append(lo)
    # Sturm counts V(a) - V(b) are roots in (a, b]
    stack = [(lo, hi, _sign_changes(chain, lo), _sign_changes(chain, hi))]
    brackets = []
    while stack:
        a, b, va, vb = stack.pop()
        count = va - vb
        if count <= 0:
            continue
        if count == 1:
            brackets.append((a, b))
            continue
        mid = (a + b) / 2
        k = 3
        while q(mid) == 0:
            mid = a + (b - a) * (Fraction(1, 2) + Fraction(1, 2**k))
            k += 1
        vm = _sign_changes(chain, mid)
        stack.append((a, mid, va, vm))
        stack.append((mid, b, vm, vb))
    for a, b in brackets:
        if q(b) == 0:
            found.append(b)
            continue
        if q(a) == 0:
            # left end is itself a root: shrink by counts until it is not
            while True:
                mid = (a + b) / 2
                if _sign_changes(chain, a) - _sign_changes(chain, mid) == 0:
                    a = mid
                else:
                    b = mid
                if q(a) != 0:
                    break
                if q(b) == 0:
                    break
            if q(b) == 0:
                found.append(b)
                continue
        sa = q(a) > 0
        while b - a > width * max(1, abs(a), abs(b)):
            mid = (a + b) / 2
            vm = q(mid)
            if vm == 0:
                a = b = mid
                break
            if (vm > 0) == sa:
                a = mid
            else:
                b = mid
        found.append((a + b) / 2)
    return sorted(set(found))


def real_roots_of(p: UniPoly, lo, hi, width=Fraction(1, 2**52)) -> list[Fraction]:
    """Real roots of an exact polynomial that may have Gaussian coefficients.

    For complex coefficients a real root must annihilate both the real and
    the imaginary part, so the search runs on their gcd.
    """
    if p.is_real:
        return real_roots_exact(p, lo, hi, width)
    g = poly_gcd(p.real_part(), p.imag_part())
    if g.degree < 1:
        return []
    return real_roots_exact(g, lo, hi, width)


# ----------------------------------------------------------------------
# complex root finding


def _aberth(c: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    n = len(c) - 1
    c = c / c[-1]
    mags = np.abs(c[:-1])
    radius = abs(c[0]) ** (1.0 / n) if c[0] != 0 else 1.0
    upper = 2 * max(mags[k] ** (1.0 / (n - k)) for k in range(n))
    radius = min(max(radius, 1e-3 * upper), upper) or 1.0
    k = np.arange(n)
    z = radius * np.exp(2j * np.pi * (k + 0.25) / n) * (1 + 0.05 * np.cos(k))
    dc = c[1:] * np.arange(1, n + 1)
    done = np.zeros(n, dtype=bool)
    for _ in range(max_iter):
        pz = np.polynomial.polynomial.polyval(z, c)
        dz = np.polynomial.polynomial.polyval(z, dc)
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        s = inv.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dz != 0, pz / dz, pz)
            step = ratio / (1 - ratio * s)
        step = np.where(np.isfinite(step), step, 0.0)
        step[done] = 0.0
        z = z - step
        done |= np.abs(step) <= tol * np.maximum(1.0, np.abs(z))
        done |= pz == 0
        if done.all():
            return z
    raise NonConvergence(f"Aberth iteration did not converge in {max_iter} steps (degree {n})")


def _float_roots(c: np.ndarray, tol: float, max_iter: int) -> list[complex]:
    # strip exact zero roots
    nz = 0
    while nz < len(c) - 1 and c[nz] == 0:
        nz += 1
    c = c[nz:]
    out = [0j] * nz
    n = len(c) - 1
    if n == 1:
        out.append(complex(-c[0] / c[1]))
    elif n > 1:
        even = np.all(c[1::2] == 0)
        if even:
            s = _float_roots(c[::2], tol, max_iter)
            for r in s:
                root = np.sqrt(complex(r))
                out.extend([root, -root])
        else:
            out.extend(complex(r) for r in _aberth(c, tol, max_iter))
    return out


def roots(p: UniPoly, tol: float = 1e-15, max_iter: int = 2000) -> list[complex]:
    """All complex roots with multiplicity.

    Exact polynomials are split into square-free factors first, so repeated
    roots come back as exact repeats of one well-conditioned value; even
    polynomials are solved in ``s = x**2`` at half the degree.
    """
    if p.degree < 1:
        raise DegenerateInput("roots of a constant polynomial")
    if p.is_exact:
        out: list[complex] = []
        for f, k in squarefree_decomposition(p):
            rs = _float_roots(f.to_numpy(), tol, max_iter)
            out.extend(r for r in rs for _ in range(k))
        return sorted(out, key=lambda z: (z.real, z.imag))
    rs = _float_roots(p.to_numpy(), tol, max_iter)
    return sorted(rs, key=lambda z: (z.real, z.imag))


def cluster_roots(values: Sequence[complex], tol: float = DEFAULT.cluster) -> list[tuple[complex, int]]:
    """Group values whose chain distance is below ``tol * max(1, |r|)``.

    Returns ``(mean, multiplicity)`` pairs sorted by real then imaginary part.
    """
    vals = sorted((complex(v) for v in values), key=lambda z: (z.real, z.imag))
    parent = list(range(len(vals)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            if abs(vals[i] - vals[j]) < tol * max(1.0, abs(vals[i]), abs(vals[j])):
                parent[find(i)] = find(j)
    groups: dict[int, list[complex]] = {}
    for i, v in enumerate(vals):
        groups.setdefault(find(i), []).append(v)
    out = [(complex(np.mean(g)), len(g)) for g in groups.values()]
    return sorted(out, key=lambda t: (t[0].real, t[0].imag))


# ----------------------------------------------------------------------
# Chebyshev polynomials of the second kind


def chebyshev_U(k: int, var: str = "x") -> UniPoly:
    """``U_k`` with exact integer coefficients from the three-term recurrence."""
    if k < 0:
        raise ValueError("k must be >= 0")
    prev = UniPoly((1,), var)
    if k == 0:
        return prev
    cur = UniPoly((0, 2), var)
    two_x = UniPoly((0, 2), var)
    for _ in range(k - 1):
        prev, cur = cur, two_x * cur - prev
    return cur


# ----------------------------------------------------------------------
# bivariate polynomials


@dataclass(frozen=True)
class BiPoly:
    """``sum_i coeffs[i](param) * var**i`` with ``coeffs[i]`` a UniPoly in ``param``."""

    coeffs: tuple
    var: str = "F"
    param: str = "w"

    def __post_init__(self):
        cs = []
        for c in self.coeffs:
            if not isinstance(c, UniPoly):
                c = UniPoly((c,), self.param)
            cs.append(c.rename(self.param))
        while cs and cs[-1].is_zero():
            cs.pop()
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_table(cls, table: Sequence[Sequence], var: str = "F", param: str = "w") -> "BiPoly":
        """Build from ``table[i][j]`` = coefficient of ``var**i * param**j``."""
        return cls(tuple(UniPoly(tuple(row), param) for row in table), var, param)

    def table(self) -> list[list]:
        width = max((c.degree + 1 for c in self.coeffs), default=0)
        return [[c.coeff(j) for j in range(width)] for c in self.coeffs]

    @property
    def degree_f(self) -> int:
        return len(self.coeffs) - 1

    @property
    def degree_param(self) -> int:
        return max((c.degree for c in self.coeffs), default=-1)

    @property
    def is_exact(self) -> bool:
        return all(c.is_exact for c in self.coeffs)

    def is_even_f(self) -> bool:
        return all(c.is_zero() for c in self.coeffs[1::2])

    def at_param(self, value) -> UniPoly:
        """Specialise the parameter, leaving a polynomial in ``var``."""
        if self.is_exact and is_exact_scalar(value):
            return UniPoly(tuple(c(value) for c in self.coeffs), self.var)
        return UniPoly(tuple(c.eval_float(value) for c in self.coeffs), self.var)

    def at_var(self, value) -> UniPoly:
        """Specialise the spectral variable, leaving a polynomial in ``param``."""
        acc = UniPoly((), self.param)
        for c in reversed(self.coeffs):
            acc = acc * value + c
        return acc

    def __call__(self, f, p):
        return self.at_param(p).eval_float(f) if not (self.is_exact and is_exact_scalar(f) and is_exact_scalar(p)) else self.at_param(p)(f)

    def derivative_f(self) -> "BiPoly":
        return BiPoly(tuple(c * k for k, c in enumerate(self.coeffs) if k), self.var, self.param)

    def even_reduction(self) -> "BiPoly":
        """``Q`` with ``self(F, p) = Q(F**2, p)`` (raises when not even)."""
        if not self.is_even_f():
            raise ValueError("polynomial is not even in the spectral variable")
        return BiPoly(self.coeffs[::2], f"{self.var}^2", self.param)

    def pretty(self) -> str:
        terms = []
        for i in range(self.degree_f, -1, -1):
            c = self.coeffs[i]
            if c.is_zero():
                continue
            mon = "" if i == 0 else (self.var if i == 1 else f"{self.var}^{i}")
            inner = c.pretty()
            if mon:
                terms.append(f"({inner})*{mon}" if inner != "1" else mon)
            else:
                terms.append(f"({inner})")
        return " + ".join(terms) if terms else "0"


def discriminant_in_F(p: BiPoly) -> UniPoly:
    """Discriminant of ``p`` with respect to the spectral variable.

    Its roots in the parameter are exactly the values where ``p`` acquires
    a repeated root (or its leading coefficient vanishes).  Computed with
    fraction-free elimination over the polynomial ring in the parameter.
    Even polynomials use ``disc(Q(s^2)) = (-4)^m lc(Q) Q(0) disc(Q)^2``.
    """
    if not p.is_exact:
        return _float_discriminant_in_F(p)
    if p.degree_f < 1:
        raise DegenerateInput("polynomial is constant in the spectral variable")
    coeffs = list(p.coeffs)
    if p.is_even_f() and p.degree_f >= 2:
        q = coeffs[::2]
        m = len(q) - 1
        inner = _discriminant_coeffs(q)
        out = q[-1] * q[0] * inner * inner * Fraction((-4) ** m)
    else:
        out = _discriminant_coeffs(coeffs)
    if not isinstance(out, UniPoly):
        out = UniPoly((out,), p.param)
    return out.rename(p.param)


def _float_discriminant_in_F(p: BiPoly) -> UniPoly:
    # interpolate numerically at Chebyshev nodes; only used for float tables
    n = p.degree_f
    if n < 1:
        raise DegenerateInput("polynomial is constant in the spectral variable")
    deg = (2 * n - 1) * max(p.degree_param, 0)
    if deg == 0:
        val = _discriminant_coeffs([c.eval_float(0.0) for c in p.coeffs])
        return UniPoly((complex(val),), p.param)
    nodes = np.cos(np.pi * (np.arange(deg + 1) + 0.5) / (deg + 1))
    vals = []
    for x in nodes:
        cs = [c.eval_float(x) for c in p.coeffs]
        syl = np.array(sylvester_matrix(cs, [k * cs[k] for k in range(1, n + 1)]), dtype=complex)
        sign = -1 if (n * (n - 1) // 2) % 2 else 1
        vals.append(sign * np.linalg.det(syl) / cs[-1])
    coef = np.polynomial.polynomial.polyfit(nodes, np.array(vals), deg)
    return UniPoly(tuple(complex(c) for c in coef), p.param)


# ----------------------------------------------------------------------
# solving the secular equation for the parameter


def _quadratic_in_square(q: UniPoly) -> tuple:
    """Coefficients ``(c0, c1, c2)`` of ``q(w) = c0 + c1 w^2 + c2 w^4``."""
    if q.degree > 4 or any(q.coeff(k) != 0 for k in (1, 3)):
        raise NotQuadraticInParam(f"{q.pretty()} is not a polynomial of degree <= 2 in {q.var}^2")
    return q.coeff(0), q.coeff(2), q.coeff(4)


def invert_for_parameter(p: BiPoly, F_value) -> list[float]:
    """All real parameter values with ``p(F_value, w) = 0``.

    ``p`` must be polynomial of degree at most two in ``w**2`` once the
    spectral variable is fixed; the radicals are taken in closed form.
    """
    if any(c.degree > 4 or any(c.coeff(k) != 0 for k in (1, 3)) for c in p.coeffs):
        raise NotQuadraticInParam("parameter enters through odd powers or beyond w^4")
    exact_f = is_exact_scalar(F_value) and p.is_exact
    q = p.at_var(F_value if exact_f else complex(F_value))
    c0, c1, c2 = (to_complex(c).real for c in _quadratic_in_square(q))
    if c2 != 0:
        disc = c1 * c1 - 4 * c2 * c0
        if disc < 0:
            return []
        sq = math.sqrt(disc)
        squares = [(-c1 + sq) / (2 * c2), (-c1 - sq) / (2 * c2)]
    elif c1 != 0:
        squares = [-c0 / c1]
    else:
        return []
    out = set()
    for s in squares:
        if s >= 0:
            r = math.sqrt(s)
            out.update((r, -r))
    return sorted(out)


def _series_mul(a, b, order):
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(order + 1)]


def _series_div(a, b, order):
    out = []
    for k in range(order + 1):
        acc = a[k] - sum(out[i] * b[k - i] for i in range(k))
        out.append(acc / b[0])
    return out


def _series_sqrt(a, order, root0):
    out = [root0]
    for k in range(1, order + 1):
        acc = a[k] - sum(out[i] * out[k - i] for i in range(1, k))
        out.append(acc / (2 * root0))
    return out


def _exact_sqrt(x: Fraction):
    if x < 0:
        return None
    n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if n * n == x.numerator and d * d == x.denominator:
        return Fraction(n, d)
    return None


def parameter_series(p: BiPoly, center=0, order: int = 4, sign: int = -1) -> list:
    """Taylor coefficients of the branch ``w(F)`` solving ``p(F, w) = 0``.

    ``p`` must be linear in ``w**2`` (``p = A(F) + w**2 B(F)``), so that
    ``w = sign * sqrt(-A/B)``.  Coefficients are in powers of
    ``(F - center)``; they are exact when ``center`` is rational and the
    leading value of ``w**2`` is a rational square.
    """
    if any(c.degree > 2 or c.coeff(1) != 0 for c in p.coeffs):
        raise NotQuadraticInParam("series inversion needs p linear in w^2")
    a = UniPoly(tuple(c.coeff(0) for c in p.coeffs), p.var)
    b = UniPoly(tuple(c.coeff(2) for c in p.coeffs), p.var)
    center = to_exact(center)
    shift = UniPoly((center, 1), p.var)
    a_s, b_s = a(shift), b(shift)
    ac = [a_s.coeff(k) for k in range(order + 1)]
    bc = [b_s.coeff(k) for k in range(order + 1)]
    w2 = [-c for c in _series_div(ac, bc, order)]
    root0 = _exact_sqrt(w2[0]) if isinstance(w2[0], Fraction) else None
    if root0 is None:
        root0 = math.sqrt(float(w2[0]))
        w2 = [float(c) for c in w2]
    if root0 == 0:
        raise ValueError("w(F) is not analytic at this center (w = 0)")
    series = _series_sqrt(w2, order, root0)
    return [sign * c for c in series]


def symbolic_char_poly(family, fixed: dict, free: str, var: str = "F") -> BiPoly:
    """Exact ``det(F I - H)`` with ``free`` left symbolic.

    ``fixed`` pins every other parameter; float values are read through
    their decimal repr (``0.28 -> 7/25``).
    """
    from .linalg import char_poly_ring

    if free not in family.param_names:
        raise NotPolynomialInParam(f"{family.name!r} has no parameter {free!r}")
    M = family.build_exact(fixed, free=free, var=free)
    coeffs = char_poly_ring(M, var)
    wrapped = [c if isinstance(c, UniPoly) else UniPoly((c,), free) for c in coeffs]
    return BiPoly(tuple(wrapped), var, free)


def count_real_roots(p: UniPoly) -> int:
    """Number of real roots of an exact real polynomial, with multiplicity."""
    if not (p.is_exact and p.is_real):
        raise TypeError("count_real_roots needs an exact real polynomial")
    total = 0
    for f, k in squarefree_decomposition(p):
        chain = sturm_chain(f)
        # signs at -inf and +inf come from leading coefficients and degrees
        at_pos = [q.lc > 0 for q in chain]
        at_neg = [(q.lc > 0) == (q.degree % 2 == 0) for q in chain]

        def changes(signs):
            return sum(1 for s, t in zip(signs, signs[1:]) if s != t)

        total += k * (changes(at_neg) - changes(at_pos))
    return total

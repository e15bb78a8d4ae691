from __future__ import annotations

import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy as sp

from epcat.exact import I
from epcat.models import get_family
from epcat.poly import (
    BiPoly,
    DegenerateInput,
    NotQuadraticInParam,
    UniPoly,
    bareiss_det,
    chebyshev_U,
    cluster_roots,
    count_real_roots,
    discriminant,
    discriminant_in_F,
    invert_for_parameter,
    parameter_series,
    poly_gcd,
    real_roots_exact,
    real_roots_of,
    resultant,
    roots,
    squarefree_decomposition,
    squarefree_part,
    symbolic_char_poly,
)

x = sp.Symbol("x")


def to_sympy(p: UniPoly):
    return sp.Poly(list(reversed([sp.Rational(c.numerator, c.denominator) for c in p.coeffs])), x)


def rand_poly(rng, deg, lo=-5, hi=5):
    cs = [Fraction(rng.randint(lo, hi)) for _ in range(deg)] + [Fraction(rng.choice([-3, -1, 1, 2]))]
    return UniPoly(tuple(cs), "x")


def test_unipoly_trims_and_arithmetic():
    p = UniPoly((1, 2, 0, 0), "x")
    assert p.degree == 1
    q = UniPoly((Fraction(-1), Fraction(1)), "x")
    assert (p * q).coeffs == (-1, -1, 2)
    assert (p + q).coeffs == (0, 3)
    quo, rem = (p * q + 5).divmod(q)
    assert quo == p and rem.coeffs == (5,)
    assert p(Fraction(1, 2)) == 2
    assert UniPoly((1, 0, 1), "x")(UniPoly((0, 1), "x") + 1).coeffs == (2, 2, 1)


def test_gaussian_coefficients_stay_exact():
    p = UniPoly.from_roots([I, -I], "x")
    assert p.coeffs == (1, 0, 1)
    assert p.is_real
    q = UniPoly.from_roots([I, 2], "x")
    assert not q.is_real and q.is_exact
    assert q(I) == 0


@pytest.mark.parametrize("seed", range(6))
def test_gcd_and_squarefree_against_sympy(seed):
    rng = random.Random(seed)
    a, b = rand_poly(rng, 3), rand_poly(rng, 2)
    p = a * a * b
    g = poly_gcd(p, a * b)
    ref = sp.Poly(sp.gcd(to_sympy(p).as_expr(), to_sympy(a * b).as_expr()), x, domain="QQ").monic()
    assert sp.expand(to_sympy(g).as_expr() - ref.as_expr()) == 0
    ref = sp.Poly(sp.sqf_part(to_sympy(p).as_expr()), x, domain="QQ").monic()
    assert sp.expand(to_sympy(squarefree_part(p)).as_expr() - ref.as_expr()) == 0
    prod = UniPoly((1,), "x")
    for f, k in squarefree_decomposition(p):
        prod = prod * f**k
    assert prod == p.monic()


def test_bareiss_matches_cofactor_determinant():
    rng = random.Random(3)
    M = [[Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for _ in range(5)] for _ in range(5)]
    assert bareiss_det(M) == sp.Matrix(M).det()
    w = UniPoly((0, 1), "w")
    S = [[w + 1, Fraction(2)], [Fraction(3), w - 1]]
    assert bareiss_det(S) == w * w - 7


@pytest.mark.parametrize("seed", range(6))
def test_resultant_and_discriminant_against_sympy(seed):
    rng = random.Random(10 + seed)
    a, b = rand_poly(rng, 4), rand_poly(rng, 3)
    assert resultant(a.coeffs, b.coeffs) == sp.resultant(to_sympy(a).as_expr(), to_sympy(b).as_expr(), x)
    assert discriminant(a) == sp.discriminant(to_sympy(a).as_expr(), x)


def test_discriminant_in_F_even_shortcut_against_sympy():
    F, w = sp.symbols("F w")
    fam = get_family("latti", 6)
    p = symbolic_char_poly(fam, {"rho": Fraction(0)}, "w")
    expr = sum(sp.Rational(c.numerator, c.denominator) * F**i * w**j
               for i, row in enumerate(p.table()) for j, c in enumerate(row))
    d_ref = sp.Poly(sp.discriminant(expr, F), w)
    d = discriminant_in_F(p)
    assert [sp.Rational(c.numerator, c.denominator) for c in reversed(d.coeffs)] == d_ref.all_coeffs()


def test_discriminant_in_F_general_against_sympy():
    F, w = sp.symbols("F w")
    fam = get_family("ha6")
    p = symbolic_char_poly(fam, {"g": Fraction(1, 10)}, "lambda")
    expr = sum(sp.Rational(c.numerator, c.denominator) * F**i * w**j
               for i, row in enumerate(p.table()) for j, c in enumerate(row))
    d_ref = sp.Poly(sp.discriminant(expr, F), w)
    d = discriminant_in_F(p)
    assert [sp.Rational(c.numerator, c.denominator) for c in reversed(d.coeffs)] == d_ref.all_coeffs()


@pytest.mark.parametrize("seed", range(8))
def test_sturm_isolation_against_sympy(seed):
    rng = random.Random(100 + seed)
    rts = [Fraction(rng.randint(-20, 20), rng.randint(1, 7)) for _ in range(3)]
    p = UniPoly.from_roots(rts + [rts[0]], "x") * UniPoly((rng.randint(1, 5), 0, 1), "x")
    ref = sorted(set(float(r) for r in sp.real_roots(to_sympy(p).as_expr())))
    got = [float(r) for r in real_roots_exact(p, -10, 10)]
    ref = [r for r in ref if -10 <= r <= 10]
    assert len(got) == len(ref)
    assert np.allclose(got, ref, atol=1e-14)
    assert count_real_roots(p) == len(sp.real_roots(to_sympy(p).as_expr()))


def test_real_roots_with_irrational_values():
    p = UniPoly((Fraction(-2), 0, 1), "x")  # +-sqrt 2
    got = real_roots_exact(p, -2, 2, Fraction(1, 2**60))
    assert np.allclose([float(r) for r in got], [-np.sqrt(2), np.sqrt(2)], atol=1e-16)


def test_real_roots_of_gaussian_polynomial():
    # (x - 1/3)(x - i)(x + 2): only 1/3 and -2 are real
    p = UniPoly.from_roots([Fraction(1, 3), I, Fraction(-2)], "x")
    got = real_roots_of(p, -5, 5)
    assert len(got) == 2
    assert abs(got[0] + 2) <= Fraction(1, 2**52) and abs(got[1] - Fraction(1, 3)) <= Fraction(1, 2**52)


def test_roots_aberth_against_numpy():
    rng = np.random.default_rng(0)
    for deg in (3, 7, 12):
        c = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
        got = np.array(roots(UniPoly(tuple(c), "x")))
        ref = np.roots(c[::-1])
        for r in ref:
            assert np.min(np.abs(got - r)) < 1e-9


def test_roots_repeated_exact():
    p = UniPoly.from_roots([Fraction(1), Fraction(1), Fraction(1), Fraction(-2)], "x")
    rs = roots(p)
    assert rs.count(1 + 0j) == 3 and np.isclose(rs[0], -2)


def test_roots_constant_raises():
    with pytest.raises(DegenerateInput):
        roots(UniPoly((3,), "x"))


def test_cluster_roots():
    vals = [1.0, 1.0 + 1e-9, 2.0, 3.0, 3.0 - 1e-10]
    assert [(round(c.real, 6), m) for c, m in cluster_roots(vals)] == [(1.0, 2), (2.0, 1), (3.0, 2)]


@pytest.mark.parametrize("k", range(0, 10))
def test_chebyshev_U_against_sympy(k):
    assert to_sympy(chebyshev_U(k)) == sp.Poly(sp.chebyshevu(k, x), x)


def test_bipoly_table_roundtrip_and_specialisation():
    t = [[Fraction(-1), 0, Fraction(1)], [0], [Fraction(1)]]
    p = BiPoly.from_table(t)
    assert p.degree_f == 2 and p.degree_param == 2
    assert p.at_param(Fraction(2)).coeffs == (3, 0, 1)
    assert p.is_even_f()
    assert p.even_reduction().coeffs[1].coeffs == (1,)


def test_invert_for_parameter_on_secular_polynomial():
    p = symbolic_char_poly(get_family("latti", 10), {"rho": Fraction(0)}, "w")
    for F in (0.3, 0.8, 1.5):
        for w in invert_for_parameter(p, F):
            assert abs(p.at_param(w).eval_float(F)) < 1e-10


def test_invert_for_parameter_rejects_odd_powers():
    p = BiPoly.from_table([[0, 1], [1]])
    with pytest.raises(NotQuadraticInParam):
        invert_for_parameter(p, 0.5)


def test_parameter_series_against_mpmath_taylor():
    p = symbolic_char_poly(get_family("latti", 10), {"rho": Fraction(0)}, "w")
    A = [float(row[0]) for row in p.table()]
    B = [float(row[2]) if len(row) > 2 else 0.0 for row in p.table()]

    def w_of(F):
        a = sum(c * F**k for k, c in enumerate(A))
        b = sum(c * F**k for k, c in enumerate(B))
        return -mpmath.sqrt(-a / b)

    mpmath.mp.dps = 40
    ref = mpmath.taylor(w_of, 0, 4)
    got = parameter_series(p, 0, 4)
    assert got[0] == -1 and got[2] == Fraction(9, 2) and got[4] == Fraction(201, 8)
    for g, r in zip(got, ref):
        assert abs(float(g) - float(r)) < 1e-20 + 1e-12 * abs(float(r))

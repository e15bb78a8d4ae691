from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp

from epcat.exact import GaussRat
from epcat.linalg import (
    char_poly,
    eigen,
    eigvals,
    jordan_partition_from_nullities,
    kernel_staircase,
    numeric_rank,
    spectrum_is_real,
)
from epcat.models import build_jordan_sum, build_latti, latti_exact


def sympy_charpoly(M):
    lam = sp.Symbol("lam")
    S = sp.Matrix([[sp.Rational(c.numerator, c.denominator) if isinstance(c, Fraction)
                    else sp.Rational(c.re.numerator, c.re.denominator)
                    + sp.I * sp.Rational(c.im.numerator, c.im.denominator) for c in row] for row in M])
    return [sp.nsimplify(c) for c in reversed(S.charpoly(lam).all_coeffs())]


def as_sympy(c):
    if isinstance(c, GaussRat):
        return sp.Rational(c.re.numerator, c.re.denominator) + sp.I * sp.Rational(c.im.numerator, c.im.denominator)
    return sp.Rational(c.numerator, c.denominator)


@pytest.mark.parametrize("seed", range(4))
def test_exact_char_poly_against_sympy(seed):
    rng = random.Random(seed)
    n = 5
    M = [[Fraction(rng.randint(-3, 3), rng.randint(1, 4)) if rng.random() < 0.7
          else GaussRat(rng.randint(-2, 2), rng.randint(-2, 2)) for _ in range(n)] for _ in range(n)]
    got = [as_sympy(c) for c in char_poly(M).coeffs]
    ref = sympy_charpoly(M)
    assert [sp.simplify(a - b) for a, b in zip(got, ref)] == [0] * len(ref)


def test_latti_char_poly_is_real_and_exact():
    p = char_poly(latti_exact(6, Fraction(1, 3), Fraction(1, 2)))
    assert p.is_exact and p.is_real and p.degree == 6


def test_float_char_poly_against_numpy():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(7, 7)) + 1j * rng.normal(size=(7, 7))
    got = char_poly(A).to_numpy()
    ref = np.poly(A)[::-1]
    assert np.allclose(got, ref, atol=1e-9)


def test_char_poly_rejects_non_square():
    with pytest.raises(ValueError):
        char_poly(np.zeros((2, 3)))


def test_eigen_residuals_and_vectors():
    H = build_latti(10, 0.2, 0.4)
    d = eigen(H, want_vectors=True)
    assert d.converged
    res = np.linalg.norm(H @ d.right_vectors - d.right_vectors * d.eigenvalues, axis=0)
    assert np.all(res < 1e-12)


def test_spectrum_reality():
    assert spectrum_is_real(build_latti(10, 0.0, 0.5))
    assert not spectrum_is_real(build_latti(10, 0.0, 1.2))


def test_numeric_rank():
    A = np.diag([3.0, 1.0, 1e-12, 0.0])
    assert numeric_rank(A) == 2
    assert numeric_rank(np.zeros((3, 3))) == 0
    with pytest.raises(ValueError):
        numeric_rank(A, 0.0)


@pytest.mark.parametrize(
    "blocks,expected",
    [([(3, 0), (1, 0)], [0, 2, 3, 4]), ([(2, 1), (2, 1), (1, 1)], [0, 3, 5]), ([(4, 2)], [0, 1, 2, 3, 4])],
)
def test_kernel_staircase_on_jordan_sums(blocks, expected):
    H = build_jordan_sum(blocks)
    eta = blocks[0][1]
    assert kernel_staircase(H, eta) == expected


def test_staircase_survives_similarity():
    rng = np.random.default_rng(5)
    B = build_jordan_sum([(3, 0.5), (2, 0.5), (1, -1)])
    S = rng.normal(size=(6, 6))
    H = S @ B @ np.linalg.inv(S)
    assert jordan_partition_from_nullities(kernel_staircase(H, 0.5, tol_rank=1e-6)) == [3, 2]


def test_partition_from_nullities():
    assert jordan_partition_from_nullities([0, 2, 3, 4]) == [3, 1]
    assert jordan_partition_from_nullities([0, 5, 10]) == [2, 2, 2, 2, 2]
    assert jordan_partition_from_nullities([0, 1]) == [1]


def test_eigvals_of_jordan_block_are_near_eta():
    assert np.allclose(eigvals(build_jordan_sum([(1, 2.0), (1, -3.0)])), [2.0, -3.0])

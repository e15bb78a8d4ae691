from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from epcat.exact import to_complex
from epcat.linalg import char_poly, eigvals
from epcat.models import (
    LambdaOutOfRange,
    OddDimension,
    build_ha6,
    build_h6,
    build_jordan_sum,
    build_latti,
    build_mytoy,
    check_pt_symmetry,
    get_family,
    ha6_charpoly_matrix,
    latti_exact,
    list_families,
    parity,
    swap_symmetry_map,
)


def multiset_close(a, b, tol):
    a = np.sort_complex(np.round(np.asarray(a), 12))
    b = list(np.asarray(b))
    for z in a:
        k = int(np.argmin(np.abs(np.asarray(b) - z)))
        if abs(b[k] - z) > tol:
            return False
        b.pop(k)
    return True


def test_latti_structure():
    H = build_latti(6, 0.3, 0.7)
    assert H.shape == (6, 6)
    assert H[0, 0] == -0.3j and H[5, 5] == 0.3j
    assert H[2, 2] == -0.7j and H[3, 3] == 0.7j
    assert np.all(np.diag(H, 1) == -1) and np.all(np.diag(H, -1) == -1)


def test_latti_exact_matches_float():
    E = latti_exact(8, Fraction(1, 4), Fraction(3, 5))
    F = build_latti(8, 0.25, 0.6)
    assert np.allclose(np.array([[to_complex(c) for c in row] for row in E]), F)


def test_odd_dimension_rejected():
    with pytest.raises(OddDimension):
        build_latti(7, 0.0, 0.1)
    with pytest.raises(OddDimension):
        get_family("latti", 9)


@pytest.mark.parametrize("rho,w", [(0.0, 0.4), (0.3, 0.9), (-0.5, 1.3)])
def test_pt_symmetry(rho, w):
    assert check_pt_symmetry(build_latti(10, rho, w))
    assert check_pt_symmetry(build_h6(w))


def test_parity_is_antidiagonal():
    P = parity(4)
    assert np.array_equal(P @ P, np.eye(4)) and P[0, 3] == 1


def test_swap_map_exchanges_diagonals_but_moves_central_bond():
    for N in (4, 6, 10):
        U = swap_symmetry_map(N)
        assert np.array_equal(U @ U, np.eye(N))
        assert np.array_equal(np.sort(U, axis=1)[:, -1], np.ones(N))
        C = U @ build_latti(N, 0.3, 0.8) @ U.T
        T = build_latti(N, 0.8, 0.3)
        assert np.allclose(np.diag(C), np.diag(T))
        # the open chain is not invariant: the bond (K-1, K) lands on the corner (0, N-1)
        D = C - T
        K = N // 2
        expected = np.zeros((N, N))
        expected[0, N - 1] = expected[N - 1, 0] = -1
        expected[K - 1, K] = expected[K, K - 1] = 1
        assert np.allclose(D, expected)


def test_mytoy_is_rho_zero_slice():
    assert np.array_equal(build_mytoy(4, 0.3), build_latti(10, 0.0, 0.3))


def test_ha6_limits():
    D = build_ha6(0.0, -1.0)
    assert np.count_nonzero(D - np.diag(np.diag(D))) == 0
    assert np.allclose(np.diag(D).real, [-5, -3, -1, 1, 3, 5])
    with pytest.raises(LambdaOutOfRange):
        build_ha6(0.0, -1.5)


def test_ha6_exact_stand_in_has_same_char_poly():
    for g, lam in [(0.0, -0.5), (Fraction(1, 40), Fraction(-1, 4)), (Fraction(1, 5), Fraction(1, 3))]:
        p = char_poly(ha6_charpoly_matrix(Fraction(g), Fraction(lam))).to_numpy()
        ref = np.poly(build_ha6(float(g), float(lam)))[::-1]
        assert np.allclose(p, ref, atol=1e-10)


def test_ha6_g0_spectrum_is_scaled_ladder():
    # at g = 0 the spectrum is sqrt(-lambda) times the odd ladder
    ev = np.sort(eigvals(build_ha6(0.0, -0.36)).real)
    assert np.allclose(ev, 0.6 * np.array([-5, -3, -1, 1, 3, 5]), atol=1e-6)


def test_jordan_sum():
    H = build_jordan_sum([(2, 1.0), (1, 2.0 + 1j)])
    assert np.array_equal(H, np.array([[1, 1, 0], [0, 1, 0], [0, 0, 2 + 1j]]))
    with pytest.raises(ValueError):
        build_jordan_sum([])


def test_registry():
    names = [n for n, _ in list_families()]
    assert names == ["latti", "mytoy", "h6", "ha6", "jordan"]
    fam = get_family("mytoy", 6)
    assert fam.dim == 6 and fam.param_names == ("w",)
    with pytest.raises(KeyError):
        get_family("nope")
    with pytest.raises(ValueError):
        get_family("latti").build({"w": 0.1})
    with pytest.raises(ValueError):
        get_family("jordan")
    assert get_family("jordan", blocks=[(3, 0), (1, 2)]).dim == 4


def test_mirror_symmetries_of_mytoy_spectrum():
    for J in (2, 4):
        for w in (0.3, 0.8, 1.4):
            a = eigvals(build_mytoy(J, w))
            assert multiset_close(a, -a, 1e-10)
            assert multiset_close(a, eigvals(build_mytoy(J, -w)), 1e-10)

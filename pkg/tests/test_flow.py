from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

import epcat.flow as flow
from epcat.ep import find_eps
from epcat.flow import (
    WOutOfRange,
    cheb_ep_energies,
    cheb_spectrum,
    domain_map,
    is_all_real,
    max_jump_ratio,
    physical_interval,
    sweep,
)
from epcat.linalg import eigvals
from epcat.models import build_mytoy, get_family
from epcat.poly import NonConvergence

LATTI = get_family("latti", 10)


def test_sweep_branches_are_the_spectrum():
    grid = np.linspace(0, 1.2, 61)
    bs = sweep(LATTI, {"rho": 0.2}, "w", grid)
    assert bs.branches.shape == (10, 61)
    for i, w in enumerate(grid):
        ev = np.sort_complex(eigvals(LATTI.build({"rho": 0.2, "w": w})))
        assert np.allclose(np.sort_complex(bs.branches[:, i]), ev, atol=1e-9)


def test_sweep_matching_is_optimal_assignment():
    fam = get_family("latti", 4)
    bs = sweep(fam, {"rho": 0.1}, "w", np.linspace(0.5, 1.3, 9))
    for i in range(bs.param_grid.size - 1):
        a, b = bs.branches[:, i], bs.branches[:, i + 1]
        chosen = np.sum(np.abs(a - b))
        best = min(np.sum(np.abs(a - b[list(p)])) for p in itertools.permutations(range(4)))
        assert chosen <= best + 1e-12


def test_rho0_mergers_all_at_one():
    bs = sweep(LATTI, {"rho": 0.0}, "w", np.linspace(0, 1.2, 600))
    assert len(bs.merger_events) == 5
    assert sorted(e.pair for e in bs.merger_events) == [(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)]
    for e in bs.merger_events:
        assert e.kind == "complexify"
        assert abs(e.location - 1.0) <= 1e-8
        assert e.interval[1] - e.interval[0] <= 1e-8


def test_rho056_mergers_before_one_and_match_find_eps():
    bs = sweep(LATTI, {"rho": 0.56}, "w", np.linspace(0, 1.2, 300))
    locs = sorted({round(e.location, 7) for e in bs.merger_events})
    assert len(locs) == 3 and max(locs) < 1
    ref = [r.location for r in find_eps(LATTI, {"rho": 0.56}, "w", (0, 1.2))]
    for x in locs:
        assert min(abs(x - r) for r in ref) <= 1e-6


def test_ha6_g0_all_real_inside():
    bs = sweep(get_family("ha6"), {"g": 0.0}, "lambda", np.linspace(-1, 0, 402)[1:-1])
    assert bs.reality_mask.all() and not bs.merger_events


def test_branch_continuity_away_from_eps():
    bs = sweep(LATTI, {"rho": 0.0}, "w", np.linspace(0, 0.8, 400))
    assert max_jump_ratio(bs) < 10


def test_sweep_interpolates_over_failed_points(monkeypatch):
    real_eigvals = flow.eigvals

    def flaky(H):
        if abs(H[4, 4].imag + 0.5) < 1e-12:  # w = 0.5 on the central site
            raise NonConvergence("forced")
        return real_eigvals(H)

    monkeypatch.setattr(flow, "eigvals", flaky)
    grid = np.linspace(0, 1, 11)
    with pytest.warns(UserWarning, match="w=0.5"):
        bs = sweep(LATTI, {"rho": 0.0}, "w", grid, refine=False)
    assert bs.invalid == [5]
    assert np.all(np.isfinite(bs.branches))
    assert np.allclose(bs.branches[:, 5], 0.5 * (bs.branches[:, 4] + bs.branches[:, 6]))


def test_sweep_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        sweep(LATTI, {"rho": 0}, "w", [0.2, 0.1])


def test_single_point_sweep():
    bs = sweep(LATTI, {"rho": 0}, "w", [0.0])
    assert bs.branches.shape == (10, 1) and not bs.merger_events


def test_physical_interval_h6():
    (iv,) = physical_interval(get_family("h6"), {}, "w", (-1, 1))
    assert abs(iv[0] + 0.32215) < 1e-3 and abs(iv[1] - 0.32215) < 1e-3


@pytest.mark.parametrize("dim", [4, 6, 10, 14])
def test_physical_interval_mytoy(dim):
    (iv,) = physical_interval(get_family("mytoy", dim), {}, "w", (-2, 2))
    assert abs(iv[0] + 1) <= 1e-6 and abs(iv[1] - 1) <= 1e-6


def test_physical_interval_ha6_right_end():
    (iv,) = physical_interval(get_family("ha6"), {"g": 0.0}, "lambda", (-1, 0.5))
    assert iv[0] == -1.0
    assert -1e-6 <= iv[1] <= 0.0


def test_exact_reality_overrides_roundoff_near_high_order_ep():
    fam = get_family("ha6")
    pt = {"g": 0.0, "lambda": -1e-7}
    assert np.max(np.abs(eigvals(fam.build(pt)).imag)) > 1e-9
    assert is_all_real(fam, pt)


def test_domain_map_latti():
    dm = domain_map(LATTI, "rho", np.linspace(-0.7, 0.7, 29), "w", np.linspace(0, 1.3, 27))
    assert dm.contains(0.0, 0.5) and not dm.contains(0.0, 1.1)
    pts = np.vstack(dm.boundary)
    assert np.min(np.hypot(pts[:, 0], pts[:, 1] - 1.0)) < 0.06


def test_domain_map_symmetry_is_joint_sign_flip():
    g = np.linspace(-0.6, 0.6, 13)
    dm = domain_map(LATTI, "rho", g, "w", g)
    assert np.array_equal(dm.all_real, dm.all_real[::-1, ::-1])
    # flipping rho alone is not a symmetry of the open chain
    assert not np.array_equal(dm.all_real, dm.all_real[::-1, :])


def test_domain_map_single_cell_and_invalid_cells():
    dm = domain_map(LATTI, "rho", [0.0], "w", [0.5])
    assert dm.all_real.shape == (1, 1) and dm.all_real[0, 0] and dm.boundary == []
    dm = domain_map(get_family("ha6"), "g", np.linspace(0, 0.2, 5), "lambda", np.linspace(-1.2, 0, 7))
    assert not dm.valid[:, 0].any() and dm.valid[:, 1:].all()


@pytest.mark.parametrize("J", range(1, 9))
def test_cheb_matches_eigensolver(J):
    for w in (-0.9, -0.5, -0.1, 0.0, 0.1, 0.5, 0.9):
        cs = cheb_spectrum(J, w)
        ref = np.sort(eigvals(build_mytoy(J, w)).real)
        assert np.max(np.abs(cs.energies - ref)) <= 1e-9
        assert cs.matching_branch == "both"
        assert len(cs.energies) == 2 * J + 2


def test_cheb_limit_is_chebyshev_zeros():
    for J in range(1, 9):
        for w in (1.0, -1.0):
            assert np.max(np.abs(cheb_spectrum(J, w).energies - cheb_ep_energies(J))) <= 1e-9
    near = cheb_spectrum(4, 0.999).energies
    assert np.max(np.abs(near - np.repeat([-math.sqrt(3), -1, 0, 1, math.sqrt(3)], 2))) < 0.05


def test_cheb_out_of_range():
    with pytest.raises(WOutOfRange):
        cheb_spectrum(3, 1.2)
    with pytest.raises(ValueError):
        cheb_spectrum(0, 0.2)


def test_sweep_with_ep_on_a_grid_node():
    # rho = 0 is a grid node and the confluent EP itself; roundoff there must not fake a merger
    bs = sweep(LATTI, {"w": 1.0}, "rho", np.linspace(-0.5, 0.5, 401))
    assert len(bs.merger_events) == 5
    assert all(abs(e.location) <= 1e-8 for e in bs.merger_events)
    assert bs.reality_mask[:, 200].all()

import math
from fractions import Fraction as F

import pytest

from sleepscale.discretize import (
    EXACT,
    THINNED,
    DiscretizationParams,
    build_grid,
    build_pieces,
    check_discretized,
    check_well_ordered,
    compute_delta,
    exact_grid_size,
    exact_pieces_per_job,
    exact_subdivisions,
)
from sleepscale.model import (
    DegeneratePowerError,
    Instance,
    Job,
    PiecewiseLinearConvex,
    PowerLaw,
    Schedule,
    active_segment,
    critical_speed,
    evaluate_power,
)
from sleepscale.transform import build_transformed
from sleepscale.yds import run_yds

QUAD = PowerLaw(2, 1)
CUBE = PowerLaw(3, 1)


def transformed(jobs, power=QUAD):
    inst = Instance(tuple(jobs), power, 5)
    res = run_yds(inst.jobs)
    return build_transformed(inst, res, F(1) if power is QUAD else critical_speed(power))


class TestComputeDelta:
    def test_quadratic_exact(self):
        # s_crit = 1, P(1) = 2, P(2) = 5: min(1/4, (1/40) * 2/3) = 1/60
        assert compute_delta(QUAD, "0.1") == F(1, 60)

    def test_cap_binds_for_large_epsilon(self):
        assert compute_delta(QUAD, 100) == F(1, 4)

    def test_cубic_rationalized_close_and_below(self):
        # numeric oracle: s_crit = 2**(-1/3), P(sc) = 3/2, P(2 sc) = 5
        true = 0.1 / 4 * 1.5 / 3.5
        delta = compute_delta(CUBE, "0.1")
        assert delta.denominator <= 10 ** 6
        assert float(delta) <= true + 1e-15
        assert abs(float(delta) - true) < 2e-6

    def test_degenerate_power_flagged(self):
        flat = PiecewiseLinearConvex(((0, 1), (1, 2), (2, 3), (10, 11)))
        # P grows linearly with slope 1 and intercept 1: P(s)/s decreasing
        with pytest.raises((DegeneratePowerError, Exception)):
            compute_delta(flat, "0.1")

    def test_positive_epsilon_required(self):
        with pytest.raises(ValueError):
            compute_delta(QUAD, 0)

    @pytest.mark.parametrize("power", [QUAD, CUBE])
    @pytest.mark.parametrize("eps", ["0.5", "0.1", "0.01"])
    def test_speedup_keeps_power_within_budget(self, power, eps):
        # P((1+delta)^3 s) <= (1+eps) P(s) on [0, s_crit]
        delta = float(compute_delta(power, eps))
        sc = critical_speed(power)
        bound = 1 + float(F(eps))
        for i in range(1001):
            s = sc * i / 1000
            assert evaluate_power(power, (1 + delta) ** 3 * s) <= \
                bound * evaluate_power(power, s)


class TestExactConstants:
    def test_pieces_formula(self):
        assert exact_pieces_per_job(1, F(1, 4)) == 16

    def test_subdivision_formula(self):
        assert exact_subdivisions(1, F(1, 4)) == 16 * 16 * 5


class TestBuildGridExact:
    def test_ladder_top_hand_computation(self):
        # n=1, delta=1/4, s_crit=1, zone length 2: base length is 1/20 and
        # (5/4)**16 / 20 <= 2 < (5/4)**17 / 20
        t = transformed([Job("a", 0, 2, 1)])
        params = DiscretizationParams(F(1), F(1, 4), 16, exact_subdivisions(1, F(1, 4)), EXACT)
        grid = build_grid(t, params)
        (zone,) = grid.zones
        assert zone.ladder_top == 16

    def test_count_identity(self):
        t = transformed([Job("a", 0, 2, 1)])
        R = 4  # small R keeps the count tractable while exercising the ladder
        params = DiscretizationParams(F(1), F(1, 4), 16, R, EXACT)
        grid = build_grid(t, params)
        (zone,) = grid.zones
        expected_generated = 2 * R * (zone.ladder_top + 1)
        assert grid.stats["generated"] == expected_generated
        assert grid.stats["points"] == \
            grid.stats["wprime"] + expected_generated - grid.stats["duplicates"]
        assert len(grid.points) == grid.stats["points"]

    def test_exact_grid_size_matches_generation(self):
        t = transformed([Job("a", 0, 2, 1)])
        eps = F(1)
        size = exact_grid_size(t, eps)
        params = DiscretizationParams.exact(1, QUAD, eps)
        grid = build_grid(t, params)
        assert size == grid.stats["wprime"] + grid.stats["generated"]
        assert len(grid.points) <= size


class TestBuildGridThinned:
    def test_fast_zone_has_no_interior_points(self):
        t = transformed([Job("j1", 0, 2, 4), Job("j2", 0, 4, 1)])
        params = DiscretizationParams.thinned(QUAD, "0.1")
        grid = build_grid(t, params)
        fast_zone = next(z for z in grid.zones if z.fast)
        assert fast_zone.points == (fast_zone.start, fast_zone.end)

    def test_zone_of_base_length_gets_midpoint(self):
        # pieces of volume 1/8 at max block speed 5/4 give base length 1/10;
        # with R=2 the only interior point of a length-1/10 zone is its middle
        t = transformed([Job("a", 0, 3, 1), Job("b", F(1, 10), 3, 1)])
        params = DiscretizationParams(F(100), F(1, 4), 8, 2, THINNED)
        grid = build_grid(t, params)
        zone = grid.zones[0]
        assert (zone.start, zone.end) == (0, F(1, 10))
        assert zone.points == (0, F(1, 20), F(1, 10))

    def test_refining_subdivisions_nests(self):
        t = transformed([Job("a", 0, 4, 1), Job("b", 1, 6, 1)])
        base = DiscretizationParams.thinned(QUAD, "0.25", 8, 8)
        fine = DiscretizationParams.thinned(QUAD, "0.25", 8, 16)
        g1, g2 = build_grid(t, base), build_grid(t, fine)
        assert set(g1.points) <= set(g2.points)

    def test_wprime_always_included(self):
        t = transformed([Job("a", 0, 4, 1), Job("b", 1, 6, 1)])
        grid = build_grid(t, DiscretizationParams.thinned(QUAD, "0.1"))
        assert set(grid.wprime) <= set(grid.points)
        assert grid.points[0] == 0 and grid.points[-1] == 6

    def test_points_are_exact_rationals_sorted_unique(self):
        t = transformed([Job("a", 0, 4, 1)])
        grid = build_grid(t, DiscretizationParams.thinned(QUAD, "0.1"))
        assert all(isinstance(p, F) for p in grid.points)
        assert list(grid.points) == sorted(set(grid.points))


class TestBuildPieces:
    def test_exact_piece_count(self):
        t = transformed([Job("a", 0, 2, 1)])
        params = DiscretizationParams(F(1), F(1, 4), exact_pieces_per_job(1, F(1, 4)),
                                      4, EXACT)
        pieces = build_pieces(t, params)
        assert len(pieces) == 16
        assert sum(p.volume for p in pieces) == 1

    def test_dummy_is_single_piece(self):
        t = transformed([Job("j1", 0, 2, 4), Job("j2", 0, 4, 1)])
        pieces = build_pieces(t, DiscretizationParams.thinned(QUAD, "0.1", 8, 8))
        dummy_pieces = [p for p in pieces if p.job_id in t.dummy_map]
        assert len(dummy_pieces) == 1
        assert dummy_pieces[0].volume == 2

    def test_order_follows_release(self):
        t = transformed([Job("b", 1, 6, 1), Job("a", 0, 4, 1)])
        pieces = build_pieces(t, DiscretizationParams.thinned(QUAD, "0.1", 4, 8))
        jobs_in_order = [p.job_id for p in pieces]
        assert jobs_in_order == ["a"] * 4 + ["b"] * 4
        assert [p.order for p in pieces] == list(range(8))

    def test_volume_split_is_exact(self):
        t = transformed([Job("a", 0, 8, F(7, 3)), Job("b", 8, 20, 1)])
        pieces = build_pieces(t, DiscretizationParams.thinned(QUAD, "0.1", 8, 8))
        assert sum(p.volume for p in pieces if p.job_id == "a") == F(7, 3)


def tiny_grid_and_pieces():
    t = transformed([Job("a", 0, 4, 1)])
    params = DiscretizationParams.thinned(QUAD, "0.5", 2, 2)
    return build_grid(t, params), build_pieces(t, params)


class TestChecks:
    def test_clean_schedule_passes(self):
        grid, pieces = tiny_grid_and_pieces()
        u0, u1 = pieces
        pts = grid.points
        sch = Schedule((
            active_segment(pts[0], pts[1], u0.volume / (pts[1] - pts[0]), u0),
            active_segment(pts[1], pts[2], u1.volume / (pts[2] - pts[1]), u1),
            active_segment(pts[2], pts[-1], 0)))
        assert check_discretized(sch, grid).ok
        assert check_well_ordered(sch).ok

    def test_off_grid_endpoint_flagged(self):
        grid, pieces = tiny_grid_and_pieces()
        u0, u1 = pieces
        mid = F(1, 7)   # not a grid point
        sch = Schedule((
            active_segment(0, mid, u0.volume / mid, u0),
            active_segment(mid, 4, u1.volume / (4 - mid), u1)))
        rep = check_discretized(sch, grid)
        assert not rep.ok
        assert any("off-grid" in msg for msg in rep.issues)

    def test_preempted_piece_flagged(self):
        grid, pieces = tiny_grid_and_pieces()
        u0, u1 = pieces
        pts = grid.points
        sch = Schedule((
            active_segment(pts[0], pts[1], 1, u0),
            active_segment(pts[1], pts[2], 1, u1),
            active_segment(pts[2], pts[3], 1, u0),
            active_segment(pts[3], pts[-1], 0)))
        rep = check_discretized(sch, grid)
        assert any("preempted" in msg for msg in rep.issues)

    def test_zone_straddling_flagged(self):
        t = transformed([Job("a", 0, 4, 1), Job("b", 2, 8, 1)])
        params = DiscretizationParams.thinned(QUAD, "0.5", 2, 2)
        grid = build_grid(t, params)
        pieces = build_pieces(t, params)
        u0 = pieces[0]
        # a run across the zone boundary at 2, with both endpoints on-grid
        b = max(p for p in grid.points if 0 < p < 2)
        e = min(p for p in grid.points if 2 < p < 4)
        segs = [active_segment(b, e, u0.volume / (e - b), u0)]
        if b > 0:
            segs.insert(0, active_segment(0, b, 0))
        segs.append(active_segment(e, 8, 0))
        rep = check_discretized(Schedule(tuple(segs)), grid)
        assert any("zone boundary" in msg for msg in rep.issues)

    def test_well_ordered_violation(self):
        grid, pieces = tiny_grid_and_pieces()
        u0, u1 = pieces
        pts = grid.points
        # u1 runs before u0 although u1 follows u0 and could still run later
        sch = Schedule((
            active_segment(pts[0], pts[1], u1.volume / (pts[1] - pts[0]), u1),
            active_segment(pts[1], pts[2], u0.volume / (pts[2] - pts[1]), u0),
            active_segment(pts[2], pts[-1], 0)))
        rep = check_well_ordered(sch)
        assert not rep.ok

    def test_single_piece_trivially_well_ordered(self):
        t = transformed([Job("a", 0, 4, 1)])
        params = DiscretizationParams.thinned(QUAD, "0.5", 1, 2)
        grid = build_grid(t, params)
        (u0,) = build_pieces(t, params)
        sch = Schedule((active_segment(0, 4, F(1, 4), u0),))
        assert check_well_ordered(sch).ok

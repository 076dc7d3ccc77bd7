"""Dynamic program over well-ordered discretized schedules, plus the
end-to-end solve pipeline.

The table entry for (k, t1, t2) is the minimum energy spent inside
[t1, t2] by a well-ordered discretized schedule that processes every piece
at position >= k in the order whose deadline falls in (t1, t2], with the
machine active just before t1 and just after t2.  A gap with nothing owed
costs min(P(0) * length, C): stay idle or take one nap.  Otherwise the
first owed piece is placed on a guessed interval [b, e) and the two sides
are solved independently; guesses whose interior contains a release or
deadline, or whose right end equals the deadline of a later-ordered piece,
cannot belong to any well-ordered discretized schedule and are skipped.

Implementation notes.  Grid points are sorted, so the recursion runs on
integer point ids; ordering comparisons on ids agree exactly with the
underlying rationals.  Candidate pairs always live inside a single zone
(a contiguous id range), and all candidate values are assembled from
shared arrays -- gap costs, a per-(zone, volume) processing-cost matrix,
and cached arrays of already-solved right subproblems -- so the scalar
loop used for small zones and the vectorized scan used for large ones
produce bit-identical energies.  Every float is derived from the float
images of the exact grid points with a fixed expression shape, which keeps
results deterministic and comparable across grid refinements.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np

from .model import (
    ACTIVE,
    SLEEP,
    Instance,
    Schedule,
    Segment,
    active_segment,
    critical_speed,
    critical_speed_exact,
    evaluate_power_array,
    normalize,
    power_at_zero,
    schedule_energy,
    sleep_segment,
    to_fraction,
)
from .yds import run_yds
from .transform import TransformedInstance, back_transform, build_transformed
from .discretize import (
    EXACT,
    THINNED,
    DiscretizationParams,
    Piece,
    TimeGrid,
    build_grid,
    build_pieces,
)

INF = math.inf

# zones with at most this many candidate pairs are scanned with a plain
# loop; larger ones go through numpy (identical values either way)
SCALAR_PAIR_LIMIT = 1024


class GridTooCoarseError(RuntimeError):
    """Some piece cannot be placed on the grid; increase subdivisions."""


@dataclass(frozen=True)
class DpEntry:
    energy: float
    choice: Optional[tuple]   # ("base",) | ("place", k, b_id, e_id); None if infeasible


class DpContext:
    """Precomputed state shared by all subproblems of one solve."""

    def __init__(self, pieces: tuple, grid: TimeGrid, power, wakeup_cost):
        self.pieces = tuple(pieces)
        self.grid = grid
        self.power = power
        self.wakeup_cost = to_fraction(wakeup_cost)
        self.p0f = power_at_zero(power)
        self.cf = float(self.wakeup_cost)

        self.points = grid.points
        self.F = np.array([float(p) for p in self.points])
        self.pid: Dict[Fraction, int] = {p: i for i, p in enumerate(self.points)}

        # highest piece order whose deadline sits at each grid point (-1: none)
        self.maxorder = np.full(len(self.points), -1, dtype=np.int64)
        for p in self.pieces:
            i = self.pid[p.deadline]
            self.maxorder[i] = max(self.maxorder[i], p.order)
        self.deadline_orders = [(self.pid[d], mo) for d, mo in
                                {p.deadline: int(self.maxorder[self.pid[p.deadline]])
                                 for p in self.pieces}.items()]

        for p in self.pieces:
            if p.release not in self.pid or p.deadline not in self.pid:
                raise ValueError(f"piece {p.id} window is not on the grid")
        self.rel_id = [self.pid[p.release] for p in self.pieces]
        self.dl_id = [self.pid[p.deadline] for p in self.pieces]
        self.vol_f = [float(p.volume) for p in self.pieces]

        # zones are contiguous id ranges; adjacent zones share a boundary id
        self.zone_range: List[Tuple[int, int]] = [
            (self.pid[z.start], self.pid[z.end]) for z in grid.zones]
        window_zones: Dict[tuple, tuple] = {}
        self.piece_zones: List[tuple] = []
        for p in self.pieces:
            key = (p.release, p.deadline)
            if key not in window_zones:
                window_zones[key] = tuple(
                    zi for zi, z in enumerate(grid.zones)
                    if z.start >= p.release and z.end <= p.deadline)
            self.piece_zones.append(window_zones[key])

        self.memo: Dict[tuple, DpEntry] = {}
        self._proc_cache: Dict[tuple, np.ndarray] = {}
        self._end_cache: Dict[tuple, np.ndarray] = {}

    def proc_matrix(self, zi: int, k: int) -> np.ndarray:
        """Processing cost P(v/(e-b)) * (e-b) for every point pair of a zone."""
        key = (zi, self.pieces[k].volume)
        m = self._proc_cache.get(key)
        if m is None:
            zs, ze = self.zone_range[zi]
            f = self.F[zs:ze + 1]
            with np.errstate(all="ignore"):
                dur = f[None, :] - f[:, None]
                speed = self.vol_f[k] / dur
                m = np.where(dur > 0,
                             evaluate_power_array(self.power, speed) * dur, INF)
            self._proc_cache[key] = m
        return m


def dp_base(tau1, tau2, power, wakeup_cost) -> float:
    """Energy of a piece-free gap: min(P(0) * (tau2 - tau1), C)."""
    t1, t2 = to_fraction(tau1), to_fraction(tau2)
    if t2 < t1:
        raise ValueError("gap must have non-negative length")
    return min(power_at_zero(power) * (float(t2) - float(t1)),
               float(to_fraction(wakeup_cost)))


def _skip(ctx: DpContext, k: int, i1: int, i2: int) -> int:
    dl = ctx.dl_id
    n = len(dl)
    while k < n and not (i1 < dl[k] <= i2):
        k += 1
    return k


def _end_values(ctx: DpContext, k: int, zi: int, i2: int, hi: int) -> np.ndarray:
    """E(k, e, t2) for every zone point e <= hi, indexed relative to the
    zone's id range.  Shared by all subproblems placing piece k-1 in this
    zone against the same right boundary."""
    key = (k, zi, i2)
    arr = ctx._end_cache.get(key)
    if arr is None:
        zs, ze = ctx.zone_range[zi]
        arr = np.full(ze - zs + 1, INF)
        for j in range(min(hi, ze), zs - 1, -1):
            arr[j - zs] = _solve(ctx, k, j, i2)
        ctx._end_cache[key] = arr
    return arr


def _solve(ctx: DpContext, k: int, i1: int, i2: int) -> float:
    k = _skip(ctx, k, i1, i2)
    key = (k, i1, i2)
    hit = ctx.memo.get(key)
    if hit is not None:
        return hit.energy

    n = len(ctx.pieces)
    if k == n:
        val = min(ctx.p0f * (ctx.F[i2] - ctx.F[i1]), ctx.cf)
        ctx.memo[key] = DpEntry(val, ("base",))
        return val

    lo = max(i1, ctx.rel_id[k])
    hi = min(i2, ctx.dl_id[k])

    best = INF
    best_be = None
    for zi in ctx.piece_zones[k]:
        zs, ze = ctx.zone_range[zi]
        a = max(lo, zs)
        b_hi = min(hi, ze)
        if b_hi - a < 1:
            continue
        m = b_hi - a + 1

        # values of the two flanking subproblems, as aligned arrays:
        # gvec[r] = E(k+1, t1, point a+r),  vvec[c] = E(k+1, point a+1+c, t2)
        vfull = _end_values(ctx, k + 1, zi, i2, hi)
        vvec = vfull[a + 1 - zs:b_hi + 1 - zs]
        ban = ctx.maxorder[a + 1:b_hi + 1] > k
        if ban.any():
            vvec = np.where(ban, INF, vvec)

        # E(k+1, t1, b) is the plain idle-or-nap gap unless a still-owed
        # piece has its deadline inside the b range
        plain_gap = not any(i1 < d <= b_hi - 1 and mo > k
                            for d, mo in ctx.deadline_orders)
        if plain_gap:
            gvec = np.minimum(ctx.p0f * (ctx.F[a:b_hi] - ctx.F[i1]), ctx.cf)
        else:
            gvec = np.array([_solve(ctx, k + 1, i1, j) for j in range(a, b_hi)])

        proc = ctx.proc_matrix(zi, k)[a - zs:b_hi - zs, a + 1 - zs:b_hi + 1 - zs]

        if (m - 1) * (m - 1) <= SCALAR_PAIR_LIMIT:
            for r in range(m - 1):
                g = gvec[r]
                if g == INF:
                    continue
                row = proc[r]
                for c in range(r, m - 1):
                    val = (g + row[c]) + vvec[c]
                    if val < best:
                        best = val
                        best_be = (a + r, a + 1 + c)
        else:
            total = (gvec[:, None] + proc) + vvec[None, :]
            flat = int(np.argmin(total))
            val = float(total.flat[flat])
            if val < best:
                r, c = divmod(flat, m - 1)
                if a + 1 + c > a + r:
                    best = val
                    best_be = (a + r, a + 1 + c)

    if best_be is None:
        ctx.memo[key] = DpEntry(INF, None)
        return INF
    ctx.memo[key] = DpEntry(float(best), ("place", k, best_be[0], best_be[1]))
    return best


def dp_solve(ctx: DpContext, k: int, tau1, tau2) -> DpEntry:
    """Solve the subproblem for pieces at positions >= k inside [tau1, tau2].

    k counts from 0; k == len(ctx.pieces) is the piece-free base case.
    """
    t1, t2 = to_fraction(tau1), to_fraction(tau2)
    if t2 < t1:
        raise ValueError("tau1 must not exceed tau2")
    if t1 not in ctx.pid or t2 not in ctx.pid:
        raise ValueError("tau1 and tau2 must be grid points")
    i1, i2 = ctx.pid[t1], ctx.pid[t2]
    _solve(ctx, k, i1, i2)
    return ctx.memo[(_skip(ctx, k, i1, i2), i1, i2)]


def reconstruct(ctx: DpContext, tau1=None, tau2=None) -> Schedule:
    """Rebuild the optimal piece-level schedule from the memo table."""
    i1 = ctx.pid[to_fraction(tau1)] if tau1 is not None else 0
    i2 = ctx.pid[to_fraction(tau2)] if tau2 is not None else len(ctx.points) - 1
    if _solve(ctx, 0, i1, i2) == INF:
        raise GridTooCoarseError(
            "no placement exists for some piece; increase subdivisions")
    segments: List[Segment] = []

    def walk(k: int, a: int, b: int):
        if a == b:
            return
        k = _skip(ctx, k, a, b)
        _solve(ctx, k, a, b)   # gap values may have been batch-computed only
        entry = ctx.memo[(k, a, b)]
        assert entry.choice is not None, "finite value with missing choice"
        if entry.choice[0] == "base":
            pa, pb = ctx.points[a], ctx.points[b]
            if ctx.p0f * (ctx.F[b] - ctx.F[a]) <= ctx.cf:
                segments.append(active_segment(pa, pb, Fraction(0)))
            else:
                segments.append(sleep_segment(pa, pb))
            return
        _, kk, bi, ei = entry.choice
        piece = ctx.pieces[kk]
        pb, pe = ctx.points[bi], ctx.points[ei]
        walk(kk + 1, a, bi)
        segments.append(active_segment(pb, pe, piece.volume / (pe - pb), piece))
        walk(kk + 1, ei, b)

    walk(0, i1, i2)
    segments.sort(key=lambda s: s.start)
    return Schedule(tuple(segments))


def piece_schedule_to_jobs(sch: Schedule) -> Schedule:
    """Collapse piece work references to their owning job ids."""
    segs = []
    for s in sch.segments:
        work = s.work.job_id if isinstance(s.work, Piece) else s.work
        segs.append(Segment(s.start, s.end, s.state, s.speed, work))
    return Schedule(tuple(segs))


# ---------------------------------------------------------------------------
# End-to-end pipeline
# ---------------------------------------------------------------------------

@dataclass
class SolveReport:
    schedule: Schedule            # for the original instance
    energy: float                 # schedule_energy of `schedule`
    dp_energy: float              # memoized optimum for the transformed instance
    epsilon: Fraction
    params: DiscretizationParams
    piece_schedule: Schedule      # discretized schedule over pieces
    jprime_schedule: Schedule     # same, with job-level work references
    transformed: TransformedInstance
    grid: TimeGrid
    pieces: tuple
    memo_size: int
    wall_time: float
    instance: Instance


def _extend_left(sch: Schedule, p0f: float, cf: float) -> Schedule:
    """Prepend [0, start) when the original horizon begins before the
    earliest release.

    An initial nap or idle run merges with the extension (re-deciding
    idle-vs-sleep for the merged gap); otherwise the pad is decided alone."""
    start = sch.start
    if start == 0:
        return sch
    first = sch.segments[0]
    if first.state == SLEEP:
        return Schedule((sleep_segment(Fraction(0), first.end),) + sch.segments[1:])
    if first.work is None:
        merged = float(first.end)
        head = active_segment(Fraction(0), first.end, Fraction(0)) \
            if p0f * merged <= cf else sleep_segment(Fraction(0), first.end)
        return Schedule((head,) + sch.segments[1:])
    gap = float(start)
    lead = active_segment(Fraction(0), start, Fraction(0)) \
        if p0f * gap <= cf else sleep_segment(Fraction(0), start)
    return Schedule((lead,) + sch.segments)


def solve(inst: Instance, epsilon, mode: str = THINNED,
          pieces_per_job: int = 8, subdivisions: int = 32) -> SolveReport:
    """Full pipeline: normalize, YDS, transform, discretize, DP, splice.

    Exact mode uses the discretization constants that carry the
    (1+epsilon) guarantee and is only tractable when the resulting grid is
    trivial; thinned mode uses the given pieces-per-job and subdivision
    counts.
    """
    eps = to_fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    started = time.perf_counter()

    norm, record = normalize(inst)
    yds_res = run_yds(norm.jobs)
    s_crit = critical_speed_exact(norm.power)
    if s_crit is None:
        s_crit = critical_speed(norm.power)
    tr = build_transformed(norm, yds_res, s_crit)

    if mode == EXACT:
        params = DiscretizationParams.exact(tr.n_original, norm.power, eps)
    elif mode == THINNED:
        params = DiscretizationParams.thinned(norm.power, eps,
                                              pieces_per_job, subdivisions)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    grid = build_grid(tr, params)
    pieces = build_pieces(tr, params)
    ctx = DpContext(pieces, grid, norm.power, norm.wakeup_cost)

    t_lo, t_hi = grid.points[0], grid.points[-1]
    assert t_lo == 0, "normalized horizon must start at 0"
    dp_energy = dp_solve(ctx, 0, t_lo, t_hi).energy
    if not math.isfinite(dp_energy):
        raise GridTooCoarseError(
            "grid too coarse: some piece has no feasible placement; "
            "increase --subdivisions")

    piece_sch = reconstruct(ctx, t_lo, t_hi)
    jprime_sch = piece_schedule_to_jobs(piece_sch)
    spliced = back_transform(jprime_sch, tr)
    final = record.to_original(spliced)
    final = _extend_left(final, power_at_zero(inst.power), float(inst.wakeup_cost))

    return SolveReport(
        schedule=final,
        energy=schedule_energy(final, inst),
        dp_energy=dp_energy,
        epsilon=eps,
        params=params,
        piece_schedule=piece_sch,
        jprime_schedule=jprime_sch,
        transformed=tr,
        grid=grid,
        pieces=pieces,
        memo_size=len(ctx.memo),
        wall_time=time.perf_counter() - started,
        instance=inst,
    )

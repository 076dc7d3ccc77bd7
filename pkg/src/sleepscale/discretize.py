"""Discretization of the transformed instance: the accuracy parameter
delta, the rational time-point grid W, and the splitting of slow jobs into
equal pieces with a fixed total order.

The grid is built per zone (the span between two consecutive releases or
deadlines).  Zones equal to a fast interval get no interior points -- the
dummy job must fill them exactly.  Every other zone receives, from each of
its two endpoints, a geometric ladder of candidate block lengths, each
subdivided into R equal steps.  In exact mode the ladder ratio is (1+delta)
and the constants match the sizes needed for the (1+epsilon) guarantee; in
thinned mode the ladder is dyadic and R and the pieces-per-job count are
caller-chosen, trading the guarantee for tractable desk-scale grids.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .model import (
    ACTIVE,
    DegeneratePowerError,
    PowerFunction,
    Schedule,
    critical_speed,
    critical_speed_exact,
    evaluate_power,
    power_exact,
    to_fraction,
)
from .transform import TransformedInstance, rationalize_speed_up

DELTA_MAX_DENOMINATOR = 10 ** 6

EXACT = "exact"
THINNED = "thinned"


def _floor_to_denominator(x: Fraction, max_den: int) -> Fraction:
    if x.denominator <= max_den:
        return x
    floored = Fraction(math.floor(x * max_den), max_den)
    # rounding down only ever shrinks delta, which is the safe direction;
    # keep the exact value if flooring would collapse it to zero
    return floored if floored > 0 else x


def compute_delta(p: PowerFunction, epsilon) -> Fraction:
    """The speed-up budget delta = min(1/4, eps/4 * P(s_c)/(P(2 s_c)-P(s_c))).

    Computed exactly as a rational whenever the critical speed is rational,
    otherwise evaluated in floating point and rounded down to a rational
    with a bounded denominator.
    """
    eps = to_fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    sc_exact = critical_speed_exact(p)
    if sc_exact is not None:
        p1 = power_exact(p, sc_exact)
        p2 = power_exact(p, 2 * sc_exact)
        if p1 is not None and p2 is not None:
            if p2 == p1:
                raise DegeneratePowerError(
                    "P is constant above the critical speed")
            value = min(Fraction(1, 4), eps / 4 * p1 / (p2 - p1))
            return _floor_to_denominator(value, DELTA_MAX_DENOMINATOR)
    sc = critical_speed(p)
    p1 = evaluate_power(p, sc)
    p2 = evaluate_power(p, 2 * sc)
    if p2 <= p1:
        raise DegeneratePowerError("P is constant above the critical speed")
    value = min(0.25, float(eps) / 4 * p1 / (p2 - p1))
    floored = Fraction(math.floor(value * DELTA_MAX_DENOMINATOR),
                       DELTA_MAX_DENOMINATOR)
    return floored if floored > 0 else Fraction(value)


def exact_pieces_per_job(n: int, delta: Fraction) -> int:
    return 4 * n * n * math.ceil(1 / delta)


def exact_subdivisions(n: int, delta: Fraction) -> int:
    inv = math.ceil(1 / delta)
    return 16 * n ** 6 * inv * inv * (1 + inv)


@dataclass(frozen=True)
class DiscretizationParams:
    epsilon: Fraction
    delta: Fraction
    pieces_per_job: int
    subdivisions: int
    mode: str

    def __post_init__(self):
        object.__setattr__(self, "epsilon", to_fraction(self.epsilon))
        object.__setattr__(self, "delta", to_fraction(self.delta))
        if self.mode not in (EXACT, THINNED):
            raise ValueError(f"unknown mode {self.mode!r}")
        if not 0 < self.delta <= Fraction(1, 4):
            raise ValueError("delta must lie in (0, 1/4]")
        if self.pieces_per_job < 1 or self.subdivisions < 1:
            raise ValueError("pieces_per_job and subdivisions must be >= 1")

    @classmethod
    def exact(cls, n: int, power: PowerFunction, epsilon) -> "DiscretizationParams":
        delta = compute_delta(power, epsilon)
        return cls(to_fraction(epsilon), delta,
                   exact_pieces_per_job(n, delta),
                   exact_subdivisions(n, delta), EXACT)

    @classmethod
    def thinned(cls, power: PowerFunction, epsilon,
                pieces_per_job: int = 8, subdivisions: int = 32) -> "DiscretizationParams":
        delta = compute_delta(power, epsilon)
        return cls(to_fraction(epsilon), delta, pieces_per_job, subdivisions, THINNED)


@dataclass(frozen=True)
class Piece:
    """A non-preemptible fragment of a job, with the job's window and a
    fixed position in the global processing order."""

    id: str
    job_id: str
    index: int
    volume: Fraction
    release: Fraction
    deadline: Fraction
    order: int

    def __repr__(self):
        return f"Piece({self.id}, v={self.volume}, [{self.release},{self.deadline}))"


def build_pieces(t: TransformedInstance, params: DiscretizationParams) -> tuple:
    """Split slow jobs into `pieces_per_job` equal pieces; each dummy is a
    single piece.  Jobs are ordered by (release, deadline, id) and pieces
    inherit that order, so earlier pieces never have later releases."""
    pieces: List[Piece] = []
    jobs = sorted(t.instance.jobs, key=lambda j: (j.release, j.deadline, j.id))
    order = 0
    for job in jobs:
        if job.id in t.dummy_map:
            pieces.append(Piece(f"{job.id}#0", job.id, 0, job.volume,
                                job.release, job.deadline, order))
            order += 1
        else:
            p = params.pieces_per_job
            for k in range(p):
                pieces.append(Piece(f"{job.id}#{k}", job.id, k,
                                    job.volume / p, job.release, job.deadline, order))
                order += 1
    return tuple(pieces)


@dataclass(frozen=True)
class Zone:
    start: Fraction
    end: Fraction
    fast: bool
    ladder_top: int          # largest ladder index used; -1 when no points fit
    points: tuple            # sorted grid points in [start, end], endpoints included

    @property
    def length(self) -> Fraction:
        return self.end - self.start


@dataclass(frozen=True)
class TimeGrid:
    wprime: tuple
    zones: tuple
    points: tuple
    stats: dict

    def __post_init__(self):
        object.__setattr__(self, "_point_set", frozenset(self.points))

    def __contains__(self, t) -> bool:
        return to_fraction(t) in self._point_set

    @property
    def wprime_set(self) -> frozenset:
        return frozenset(self.wprime)

    def zone_containing(self, start: Fraction, end: Fraction) -> Optional[Zone]:
        """The zone whose closure contains [start, end], if any."""
        for z in self.zones:
            if z.start <= start and end <= z.end:
                return z
        return None


def _ladder(params: DiscretizationParams, base: Fraction, length: Fraction) -> List[Fraction]:
    """Candidate block lengths for one zone: base * ratio**j while <= length."""
    ratio = (1 + params.delta) if params.mode == EXACT else Fraction(2)
    out = []
    lam = base
    while lam <= length:
        out.append(lam)
        lam = lam * ratio
    return out


def build_grid(t: TransformedInstance, params: DiscretizationParams) -> TimeGrid:
    """Construct the time-point grid for a transformed instance."""
    jobs = t.instance.jobs
    wprime = sorted({p for j in jobs for p in (j.release, j.deadline)})
    fast_set = set(t.fast.intervals)

    s_up = rationalize_speed_up(t.s_crit)
    delta = params.delta
    inv = math.ceil(1 / delta)
    slow_vols = [j.volume for j in jobs if j.id not in t.dummy_map]
    # without slow pieces no interior point is ever a usable block boundary
    base = None
    if slow_vols:
        if params.mode == EXACT:
            base = Fraction(1) / (4 * t.n_original ** 2 * s_up * (1 + delta) * inv)
        else:
            base = (min(slow_vols) / params.pieces_per_job) / ((1 + delta) * s_up)

    zones: List[Zone] = []
    generated = 0
    all_points = set(wprime)
    for a, b in zip(wprime, wprime[1:]):
        is_fast = (a, b) in fast_set
        if not is_fast:
            for y, z in t.fast.intervals:
                assert not (a < z and y < b), \
                    f"zone [{a},{b}) straddles fast interval [{y},{z})"
        pts = {a, b}
        top = -1
        if not is_fast and base is not None:
            R = params.subdivisions
            for j, lam in enumerate(_ladder(params, base, b - a)):
                top = j
                step = lam / R
                for r in range(1, R + 1):
                    off = r * step
                    generated += 2
                    if off <= b - a:  # cannot overshoot; guard for safety
                        pts.add(a + off)
                        pts.add(b - off)
        zone_pts = tuple(sorted(pts))
        zones.append(Zone(a, b, is_fast, top, zone_pts))
        all_points.update(zone_pts)

    points = tuple(sorted(all_points))
    stats = {
        "wprime": len(wprime),
        "generated": generated,
        "points": len(points),
        "duplicates": generated + len(wprime) - len(points),
    }
    return TimeGrid(wprime=tuple(wprime), zones=tuple(zones),
                    points=points, stats=stats)


def exact_grid_size(t: TransformedInstance, epsilon) -> int:
    """Closed-form upper bound on |W| in exact mode, without building it.

    Used to decide whether an exact-mode solve is tractable.
    """
    power = t.instance.power
    delta = compute_delta(power, epsilon)
    n = t.n_original
    R = exact_subdivisions(n, delta)
    s_up = rationalize_speed_up(t.s_crit)
    inv = math.ceil(1 / delta)
    base = Fraction(1) / (4 * n * n * s_up * (1 + delta) * inv)
    fast_set = set(t.fast.intervals)
    wprime = sorted({p for j in t.instance.jobs for p in (j.release, j.deadline)})
    total = len(wprime)
    if all(j.id in t.dummy_map for j in t.instance.jobs):
        return total
    for a, b in zip(wprime, wprime[1:]):
        if (a, b) in fast_set:
            continue
        length = b - a
        if base > length:
            continue
        # largest j with base * (1+delta)**j <= length
        x = 0
        lam = base * (1 + delta)
        while lam <= length:
            x += 1
            lam *= (1 + delta)
        total += 2 * R * (x + 1)
    return total


# ---------------------------------------------------------------------------
# Schedule-level checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckReport:
    ok: bool
    issues: tuple

    def __bool__(self):
        return self.ok


def _piece_runs(sch: Schedule) -> dict:
    runs = {}
    for seg in sch.segments:
        if seg.state == ACTIVE and isinstance(seg.work, Piece):
            runs.setdefault(seg.work, []).append(seg)
    return runs


def check_discretized(sch: Schedule, grid: TimeGrid) -> CheckReport:
    """Check that every piece runs without preemption inside a single zone
    (i) with endpoints on the grid (ii)."""
    issues = []
    for piece, segs in sorted(_piece_runs(sch).items(), key=lambda kv: kv[0].order):
        segs = sorted(segs, key=lambda s: s.start)
        contiguous = all(x.end == y.start for x, y in zip(segs, segs[1:]))
        start, end = segs[0].start, segs[-1].end
        if not contiguous:
            issues.append(f"piece {piece.id} is preempted")
        elif grid.zone_containing(start, end) is None:
            issues.append(f"piece {piece.id} runs [{start},{end}) across a zone boundary")
        if start not in grid or end not in grid:
            issues.append(f"piece {piece.id} endpoints [{start},{end}) are off-grid")
    return CheckReport(ok=not issues, issues=tuple(issues))


def check_well_ordered(sch: Schedule) -> CheckReport:
    """Check the ordering rule: when a piece ends at t, every later-ordered
    piece whose deadline is >= t must run entirely after t."""
    issues = []
    runs = {}
    for piece, segs in _piece_runs(sch).items():
        segs = sorted(segs, key=lambda s: s.start)
        runs[piece] = (segs[0].start, segs[-1].end)
    ordered = sorted(runs, key=lambda p: p.order)
    for u in ordered:
        t = runs[u][1]
        for v in ordered:
            if v.order > u.order and v.deadline >= t and runs[v][0] < t:
                issues.append(
                    f"piece {v.id} (deadline {v.deadline}) starts at {runs[v][0]}, "
                    f"before piece {u.id} ends at {t}")
    return CheckReport(ok=not issues, issues=tuple(issues))

"""Core domain types for deadline scheduling on a single speed-scalable
processor equipped with a sleep state.

A job j has a release time r_j, a deadline d_j and a processing volume v_j,
and must be fully processed inside its window [r_j, d_j).  Running at speed
s draws power P(s), where P is convex, non-decreasing and P(0) > 0.  The
processor may also sleep (zero power); every sleep -> active transition
costs a fixed wake-up energy C.  By convention the processor is active
before time 0 and after the last deadline.

Times and volumes are exact rationals end to end; speeds and energies are
only converted to floating point at evaluation boundaries.  This keeps
time-grid membership tests and volume conservation checks exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

RationalLike = Union[int, str, float, Fraction]


def to_fraction(x: RationalLike) -> Fraction:
    """Convert a number to an exact Fraction.

    Strings may be decimal ("0.1") or ratio ("3/7") notation.  Floats are
    read through their shortest decimal repr, so to_fraction(0.1) == 1/10.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite value {x!r} is not a rational")
        return Fraction(str(x))
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot interpret {x!r} as a rational")


class NoCriticalSpeedError(ValueError):
    """P(s)/s is decreasing over the whole representable range."""


class DegeneratePowerError(ValueError):
    """P is constant above the critical speed, so speed-up ratios degenerate."""


# ---------------------------------------------------------------------------
# Power functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PowerLaw:
    """P(s) = (speed_scale * s)**alpha + beta with alpha > 1, beta > 0.

    speed_scale is used by instance normalization, which rescales volumes
    and compensates by stretching the speed axis.
    """

    alpha: float
    beta: Fraction
    speed_scale: Fraction = Fraction(1)

    def __post_init__(self):
        object.__setattr__(self, "beta", to_fraction(self.beta))
        object.__setattr__(self, "speed_scale", to_fraction(self.speed_scale))
        object.__setattr__(self, "alpha", float(self.alpha))
        if not self.alpha > 1:
            raise ValueError(f"alpha must be > 1, got {self.alpha}")
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.speed_scale > 0:
            raise ValueError("speed_scale must be positive")

    @property
    def integer_alpha(self) -> Optional[int]:
        a = int(self.alpha)
        return a if float(a) == self.alpha else None


@dataclass(frozen=True)
class PiecewiseLinearConvex:
    """Convex non-decreasing piecewise-linear power function.

    Breakpoints are (speed, power) pairs with strictly increasing speeds,
    the first at speed 0 with power > 0, and non-decreasing slopes.  Beyond
    the last breakpoint the final slope is extended.
    """

    points: tuple

    def __post_init__(self):
        pts = tuple((to_fraction(s), to_fraction(p)) for s, p in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("need at least two breakpoints")
        if pts[0][0] != 0:
            raise ValueError("first breakpoint must be at speed 0")
        if pts[0][1] <= 0:
            raise ValueError("P(0) must be positive")
        prev_slope = None
        for (s0, p0), (s1, p1) in zip(pts, pts[1:]):
            if s1 <= s0:
                raise ValueError("breakpoint speeds must be strictly increasing")
            slope = (p1 - p0) / (s1 - s0)
            if slope < 0:
                raise ValueError("power must be non-decreasing")
            if prev_slope is not None and slope < prev_slope:
                raise ValueError("slopes must be non-decreasing (convexity)")
            prev_slope = slope

    @property
    def slopes(self) -> tuple:
        return tuple((p1 - p0) / (s1 - s0)
                     for (s0, p0), (s1, p1) in zip(self.points, self.points[1:]))


PowerFunction = Union[PowerLaw, PiecewiseLinearConvex]


def _power_float(p: PowerFunction, s: float) -> float:
    """Scalar float evaluation of P(s).

    Integer exponents are expanded into multiplications so that the scalar
    and numpy evaluation paths produce bit-identical results.
    """
    if isinstance(p, PowerLaw):
        x = float(p.speed_scale) * s if p.speed_scale != 1 else s
        a = p.integer_alpha
        if a is not None:
            acc = x
            for _ in range(a - 1):
                acc = acc * x
            return acc + float(p.beta)
        return x ** p.alpha + float(p.beta)
    # piecewise linear: y0 + (s - x0) * slope on the active segment
    pts = p.points
    if s >= pts[-1][0]:
        x0, y0 = pts[-1]
        m = p.slopes[-1]
    else:
        lo, hi = 0, len(pts) - 1
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if float(pts[mid][0]) <= s:
                lo = mid
            else:
                hi = mid
        x0, y0 = pts[lo]
        m = p.slopes[lo]
    return float(y0) + (s - float(x0)) * float(m)


def evaluate_power(p: PowerFunction, s) -> float:
    """Return P(s) for a speed s >= 0 (rational or float)."""
    if isinstance(s, Fraction):
        if s < 0:
            raise ValueError(f"speed must be non-negative, got {s}")
        if isinstance(p, PowerLaw) and p.speed_scale != 1:
            return _power_float(PowerLaw(p.alpha, p.beta), float(p.speed_scale * s))
        return _power_float(p, float(s))
    sf = float(s)
    if sf < 0:
        raise ValueError(f"speed must be non-negative, got {s}")
    return _power_float(p, sf)


def evaluate_power_array(p: PowerFunction, s: np.ndarray) -> np.ndarray:
    """Vectorized P(s); mirrors _power_float operation for operation."""
    if isinstance(p, PowerLaw):
        x = s * float(p.speed_scale) if p.speed_scale != 1 else s
        a = p.integer_alpha
        if a is not None:
            acc = x.copy()
            for _ in range(a - 1):
                acc = acc * x
            return acc + float(p.beta)
        return x ** p.alpha + float(p.beta)
    pts = p.points
    xs = np.array([float(x) for x, _ in pts])
    ys = np.array([float(y) for _, y in pts])
    ms = np.array([float(m) for m in p.slopes])
    idx = np.searchsorted(xs, s, side="right") - 1
    idx = np.clip(idx, 0, len(ms) - 1)
    return ys[idx] + (s - xs[idx]) * ms[idx]


def power_exact(p: PowerFunction, s: Fraction) -> Optional[Fraction]:
    """Exact rational P(s) when representable, else None."""
    if isinstance(p, PowerLaw):
        a = p.integer_alpha
        if a is None:
            return None
        return (p.speed_scale * s) ** a + p.beta
    pts = p.points
    if s >= pts[-1][0]:
        x0, y0 = pts[-1]
        return y0 + (s - x0) * p.slopes[-1]
    for (x0, y0), (x1, _) in zip(pts, pts[1:]):
        if x0 <= s < x1:
            i = pts.index((x0, y0))
            return y0 + (s - x0) * p.slopes[i]
    raise AssertionError("unreachable: s below 0")


def power_at_zero(p: PowerFunction) -> float:
    return evaluate_power(p, Fraction(0))


def _integer_nth_root(n: int, k: int) -> Optional[int]:
    """Exact k-th root of a non-negative integer, or None."""
    if n < 0:
        return None
    if n in (0, 1):
        return n
    r = round(n ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand ** k == n:
            return cand
    return None


def critical_speed_exact(p: PowerFunction) -> Optional[Fraction]:
    """Exact rational critical speed when representable, else None.

    The critical speed is the smallest minimizer of P(s)/s.  For a power
    law it is (beta/(alpha-1))**(1/alpha) / speed_scale; for piecewise
    linear functions P(s)/s is monotone on every segment, so the minimum
    sits at a breakpoint.
    """
    if isinstance(p, PowerLaw):
        a = p.integer_alpha
        if a is None:
            return None
        target = p.beta / (a - 1)
        num = _integer_nth_root(target.numerator, a)
        den = _integer_nth_root(target.denominator, a)
        if num is None or den is None:
            return None
        return Fraction(num, den) / p.speed_scale
    pts = p.points
    # P/s decreasing on a segment iff its intercept at s=0 is positive
    last_x, last_y = pts[-1]
    if last_y - p.slopes[-1] * last_x > 0:
        raise NoCriticalSpeedError(
            "P(s)/s is decreasing beyond the last breakpoint; no critical speed")
    best = None
    for s, y in pts[1:]:
        ratio = y / s
        if best is None or ratio < best[0]:
            best = (ratio, s)
    assert best is not None
    return best[1]


def critical_speed(p: PowerFunction) -> float:
    """Smallest speed minimizing P(s)/s, as a float."""
    exact = critical_speed_exact(p)
    if exact is not None:
        return float(exact)
    if isinstance(p, PowerLaw):
        base = (float(p.beta) / (p.alpha - 1.0)) ** (1.0 / p.alpha)
        return base / float(p.speed_scale)
    raise AssertionError("piecewise critical speed is always exact")


def critical_speed_upper(p: PowerFunction, max_denominator: int = 10 ** 6) -> Fraction:
    """Rational upper bound on the critical speed (exact when representable).

    Grid construction and dummy volumes need a rational stand-in; rounding
    up keeps the grid at least as fine and dummy speeds at least critical.
    """
    exact = critical_speed_exact(p)
    if exact is not None:
        return exact
    s = critical_speed(p)
    return Fraction(math.ceil(s * max_denominator), max_denominator)


# ---------------------------------------------------------------------------
# Jobs, instances
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Job:
    id: str
    release: Fraction
    deadline: Fraction
    volume: Fraction

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "release", to_fraction(self.release))
        object.__setattr__(self, "deadline", to_fraction(self.deadline))
        object.__setattr__(self, "volume", to_fraction(self.volume))
        if not self.release < self.deadline:
            raise ValueError(f"job {self.id}: release must precede deadline")
        if not self.volume > 0:
            raise ValueError(f"job {self.id}: volume must be positive")

    @property
    def window(self) -> tuple:
        return (self.release, self.deadline)


@dataclass(frozen=True)
class Instance:
    jobs: tuple
    power: PowerFunction
    wakeup_cost: Fraction

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        object.__setattr__(self, "wakeup_cost", to_fraction(self.wakeup_cost))
        if not self.jobs:
            raise ValueError("instance needs at least one job")
        ids = [j.id for j in self.jobs]
        if len(set(ids)) != len(ids):
            raise ValueError("job ids must be unique")
        if not self.wakeup_cost > 0:
            raise ValueError("wake-up cost must be positive")

    @property
    def d_max(self) -> Fraction:
        return max(j.deadline for j in self.jobs)

    @property
    def r_min(self) -> Fraction:
        return min(j.release for j in self.jobs)

    @property
    def v_min(self) -> Fraction:
        return min(j.volume for j in self.jobs)

    def job_by_id(self, job_id: str) -> Job:
        for j in self.jobs:
            if j.id == job_id:
                return j
        raise KeyError(job_id)


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

ACTIVE = "active"
SLEEP = "sleep"


@dataclass(frozen=True)
class Segment:
    """A half-open stretch [start, end) of processor time.

    Active segments carry a speed and optionally the unit of work being
    processed (a job id, or a piece object at the discretized level).
    Sleep segments carry neither.
    """

    start: Fraction
    end: Fraction
    state: str
    speed: Union[Fraction, float] = Fraction(0)
    work: Optional[object] = None

    def __post_init__(self):
        object.__setattr__(self, "start", to_fraction(self.start))
        object.__setattr__(self, "end", to_fraction(self.end))
        if self.state not in (ACTIVE, SLEEP):
            raise ValueError(f"unknown segment state {self.state!r}")
        if not self.start < self.end:
            raise ValueError(f"segment [{self.start}, {self.end}) must have positive length")
        if self.state == SLEEP:
            if self.work is not None:
                raise ValueError("sleeping segments cannot process work")
            if self.speed != 0:
                raise ValueError("sleeping segments have speed 0")
        else:
            if isinstance(self.speed, (int, str, Fraction)):
                object.__setattr__(self, "speed", to_fraction(self.speed))
            if self.work is not None and not self.speed > 0:
                raise ValueError("processing requires positive speed")
            if (isinstance(self.speed, Fraction) and self.speed < 0) or (
                    isinstance(self.speed, float) and self.speed < 0):
                raise ValueError("speed must be non-negative")

    @property
    def duration(self) -> Fraction:
        return self.end - self.start


def active_segment(start, end, speed, work=None) -> Segment:
    return Segment(to_fraction(start), to_fraction(end), ACTIVE, speed, work)


def sleep_segment(start, end) -> Segment:
    return Segment(to_fraction(start), to_fraction(end), SLEEP)


def segment_tiling_issues(segments: Sequence[Segment]) -> list:
    """Gap/overlap defects in a segment list meant to tile an interval."""
    issues = []
    for a, b in zip(segments, segments[1:]):
        if b.start < a.end:
            issues.append(f"segments overlap at {b.start}: [{a.start},{a.end}) and [{b.start},{b.end})")
        elif b.start > a.end:
            issues.append(f"gap between {a.end} and {b.start}")
    return issues


@dataclass(frozen=True)
class Schedule:
    """Time-ordered segments tiling a contiguous horizon.

    The processor is considered active immediately before the first segment
    and immediately after the last one, so a trailing sleep segment still
    pays one wake-up.
    """

    segments: tuple

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise ValueError("schedule needs at least one segment")
        issues = segment_tiling_issues(segs)
        if issues:
            raise ValueError("; ".join(issues))

    @property
    def start(self) -> Fraction:
        return self.segments[0].start

    @property
    def end(self) -> Fraction:
        return self.segments[-1].end

    def work_segments(self, work) -> list:
        return [s for s in self.segments if s.state == ACTIVE and s.work == work]


def schedule_energy(sch: Schedule, inst: Instance) -> float:
    """Total energy: integral of P over active time plus C per wake-up.

    Wake-ups are counted per maximal sleeping run (consecutive sleep
    segments are a single nap), including a trailing run, since the
    processor is active again after the horizon.
    """
    p = inst.power
    total = 0.0
    sleeping = False
    wakeups = 0
    for seg in sch.segments:
        if seg.state == SLEEP:
            sleeping = True
            continue
        if sleeping:
            wakeups += 1
            sleeping = False
        total += evaluate_power(p, seg.speed) * float(seg.duration)
    if sleeping:
        wakeups += 1
    return total + wakeups * float(inst.wakeup_cost)


def count_wakeups(sch: Schedule) -> int:
    wakeups = 0
    sleeping = False
    for seg in sch.segments:
        if seg.state == SLEEP:
            sleeping = True
        else:
            if sleeping:
                wakeups += 1
            sleeping = False
    return wakeups + (1 if sleeping else 0)


# ---------------------------------------------------------------------------
# Feasibility checking
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeasibilityIssue:
    kind: str
    message: str
    job: Optional[str] = None


@dataclass(frozen=True)
class FeasibilityReport:
    ok: bool
    issues: tuple

    def __bool__(self) -> bool:
        return self.ok


VOLUME_RTOL = Fraction(1, 10 ** 9)


def check_feasible(sch: Schedule, inst: Instance,
                   work_of=None) -> FeasibilityReport:
    """Verify that a schedule is feasible for an instance.

    Checks that segments tile [0, d_max), that every job receives exactly
    its volume (exact comparison when all its speeds are rational, else
    relative tolerance 1e-9), and that work only happens inside the owning
    job's window.  `work_of` maps a segment's work reference to a job id
    (defaults to identity, for job-level schedules).
    """
    if work_of is None:
        work_of = lambda w: w
    issues = []
    for msg in segment_tiling_issues(sch.segments):
        issues.append(FeasibilityIssue("tiling", msg))
    if sch.start != 0:
        issues.append(FeasibilityIssue("tiling", f"schedule starts at {sch.start}, expected 0"))
    if sch.end != inst.d_max:
        issues.append(FeasibilityIssue(
            "tiling", f"schedule ends at {sch.end}, expected {inst.d_max}"))

    processed = {j.id: Fraction(0) for j in inst.jobs}
    processed_float = {j.id: 0.0 for j in inst.jobs}
    exact = {j.id: True for j in inst.jobs}
    for seg in sch.segments:
        if seg.state != ACTIVE or seg.work is None:
            continue
        job_id = work_of(seg.work)
        if job_id not in processed:
            issues.append(FeasibilityIssue(
                "unknown-job", f"segment [{seg.start},{seg.end}) references unknown job {job_id!r}"))
            continue
        job = inst.job_by_id(job_id)
        if not (seg.start >= job.release and seg.end <= job.deadline):
            issues.append(FeasibilityIssue(
                "window", f"job {job_id} runs in [{seg.start},{seg.end}) outside "
                          f"[{job.release},{job.deadline})", job_id))
        if isinstance(seg.speed, Fraction):
            processed[job_id] += seg.speed * seg.duration
            processed_float[job_id] += float(seg.speed) * float(seg.duration)
        else:
            exact[job_id] = False
            processed_float[job_id] += seg.speed * float(seg.duration)

    for job in inst.jobs:
        if exact[job.id]:
            diff = processed[job.id] - job.volume
            if diff != 0:
                what = "deficit" if diff < 0 else "surplus"
                issues.append(FeasibilityIssue(
                    "volume", f"{what} {abs(diff)} on job {job.id}", job.id))
        else:
            got = processed_float[job.id]
            want = float(job.volume)
            if abs(got - want) > float(VOLUME_RTOL) * max(1.0, abs(want)):
                what = "deficit" if got < want else "surplus"
                issues.append(FeasibilityIssue(
                    "volume", f"{what} {abs(got - want):.3e} on job {job.id}", job.id))

    return FeasibilityReport(ok=not issues, issues=tuple(issues))


# ---------------------------------------------------------------------------
# Normalization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalizationRecord:
    """Exact recipe for mapping schedules between the original instance and
    its normalized form (min release 0, minimum volume 1)."""

    time_shift: Fraction
    volume_scale: Fraction

    @property
    def identity(self) -> bool:
        return self.time_shift == 0 and self.volume_scale == 1

    def to_original(self, sch: Schedule) -> Schedule:
        if self.identity:
            return sch
        segs = []
        for s in sch.segments:
            if s.state == SLEEP:
                segs.append(sleep_segment(s.start + self.time_shift, s.end + self.time_shift))
            else:
                speed = s.speed * self.volume_scale if isinstance(s.speed, Fraction) \
                    else s.speed * float(self.volume_scale)
                segs.append(Segment(s.start + self.time_shift, s.end + self.time_shift,
                                    ACTIVE, speed, s.work))
        return Schedule(tuple(segs))

    def to_normalized(self, sch: Schedule) -> Schedule:
        if self.identity:
            return sch
        segs = []
        for s in sch.segments:
            if s.state == SLEEP:
                segs.append(sleep_segment(s.start - self.time_shift, s.end - self.time_shift))
            else:
                speed = s.speed / self.volume_scale if isinstance(s.speed, Fraction) \
                    else s.speed / float(self.volume_scale)
                segs.append(Segment(s.start - self.time_shift, s.end - self.time_shift,
                                    ACTIVE, speed, s.work))
        return Schedule(tuple(segs))


def _scale_power(p: PowerFunction, scale: Fraction) -> PowerFunction:
    """Reparameterize P to P'(s) = P(scale * s)."""
    if scale == 1:
        return p
    if isinstance(p, PowerLaw):
        return PowerLaw(p.alpha, p.beta, p.speed_scale * scale)
    return PiecewiseLinearConvex(tuple((s / scale, y) for s, y in p.points))


def normalize(inst: Instance) -> tuple:
    """Shift times so min release is 0 and rescale volumes so min volume is 1.

    The power function is wrapped as P'(s) = P(v_min * s), which makes the
    energy of corresponding schedules invariant under the mapping.  Returns
    (normalized instance, record); the record maps schedules back exactly.
    """
    shift = inst.r_min
    scale = inst.v_min
    record = NormalizationRecord(time_shift=shift, volume_scale=scale)
    if record.identity:
        return inst, record
    jobs = tuple(Job(j.id, j.release - shift, j.deadline - shift, j.volume / scale)
                 for j in inst.jobs)
    power = _scale_power(inst.power, scale)
    return Instance(jobs, power, inst.wakeup_cost), record

"""The YDS algorithm for pure speed scaling (no sleep state).

YDS repeatedly finds the interval of maximal density -- total volume of
fully contained jobs divided by interval length -- schedules those jobs
inside it at exactly that speed using earliest-deadline-first, then blacks
the interval out and recurses on the rest.  Round speeds never increase,
and each job runs at one uniform speed, which makes the schedule the
energy optimum for any convex power function when sleeping is not
available.

All arithmetic is exact: densities, speeds and segment endpoints are
Fractions, so the FAST/SLOW split at the critical speed is exact whenever
the critical speed itself is rational.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from .model import (
    ACTIVE,
    Job,
    Schedule,
    Segment,
    active_segment,
    to_fraction,
)


@dataclass(frozen=True)
class DensityInterval:
    """An interval together with its density and the jobs it contains."""

    start: Fraction
    end: Fraction
    density: Fraction
    contained_jobs: frozenset

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("density interval must have positive length")

    @property
    def length(self) -> Fraction:
        return self.end - self.start


@dataclass(frozen=True)
class YdsRound:
    """One YDS round.

    `interval` lives on the round's contracted timeline (blacked-out time
    removed), where its density is exact; `original_fragments` are the
    corresponding pieces of real time."""

    interval: DensityInterval
    original_fragments: tuple
    job_ids: tuple
    speed: Fraction


@dataclass
class YdsResult:
    schedule: Schedule
    rounds: tuple
    job_speed: dict


class _Timeline:
    """Original time minus a growing set of blacked-out intervals."""

    def __init__(self, start: Fraction, end: Fraction):
        self.start = start
        self.end = end
        self.blackouts: List[Tuple[Fraction, Fraction]] = []

    def add_blackouts(self, fragments: Iterable[Tuple[Fraction, Fraction]]):
        merged = sorted(self.blackouts + [f for f in fragments if f[0] < f[1]])
        out: List[Tuple[Fraction, Fraction]] = []
        for a, b in merged:
            if out and a <= out[-1][1]:
                out[-1] = (out[-1][0], max(out[-1][1], b))
            else:
                out.append((a, b))
        self.blackouts = out

    def live_intervals(self) -> List[Tuple[Fraction, Fraction]]:
        out = []
        cur = self.start
        for a, b in self.blackouts:
            if a > cur:
                out.append((cur, a))
            cur = max(cur, b)
        if cur < self.end:
            out.append((cur, self.end))
        return out

    def contract(self, t: Fraction) -> Fraction:
        removed = Fraction(0)
        for a, b in self.blackouts:
            if b <= t:
                removed += b - a
            elif a < t:
                removed += t - a
        return t - self.start - removed

    def expand_interval(self, c1: Fraction, c2: Fraction) -> List[Tuple[Fraction, Fraction]]:
        """Original-time fragments of the contracted interval [c1, c2)."""
        frags = []
        pos = Fraction(0)
        for a, b in self.live_intervals():
            length = b - a
            lo = max(c1, pos)
            hi = min(c2, pos + length)
            if lo < hi:
                frags.append((a + (lo - pos), a + (hi - pos)))
            pos += length
        total = sum((hi - lo for lo, hi in frags), Fraction(0))
        assert total == c2 - c1, "contracted interval exceeds live time"
        return frags


def _best_interval(windows: dict) -> Tuple[Fraction, Fraction, Fraction, frozenset]:
    """Max-density interval over all (release, deadline) candidate pairs.

    `windows` maps job id -> (start, end, volume) on a common timeline.
    Ties break to the leftmost start, then the shortest interval.
    """
    starts = sorted({w[0] for w in windows.values()})
    ends = sorted({w[1] for w in windows.values()})
    best = None
    for s in starts:
        for e in ends:
            if e <= s:
                continue
            contained = frozenset(
                jid for jid, (r, d, _) in windows.items() if r >= s and d <= e)
            if not contained:
                continue
            vol = sum(windows[jid][2] for jid in sorted(contained))
            dens = Fraction(vol, 1) / (e - s)
            key = (-dens, s, e - s)
            if best is None or key < best[0]:
                best = (key, (s, e, dens, contained))
    if best is None:
        raise ValueError("no candidate interval contains a job")
    return best[1]


def max_density_interval(jobs: Sequence[Job]) -> DensityInterval:
    """The maximum-density interval of a job set, on the plain timeline."""
    if not jobs:
        raise ValueError("need at least one job")
    windows = {j.id: (j.release, j.deadline, j.volume) for j in jobs}
    s, e, dens, contained = _best_interval(windows)
    return DensityInterval(start=s, end=e, density=dens, contained_jobs=contained)


def _edf(jobs: List[Job], windows: dict, speed: Fraction,
         a: Fraction, b: Fraction) -> List[Tuple[Fraction, Fraction, str]]:
    """Earliest-deadline-first at a fixed speed on [a, b).

    `windows` gives each job's (release, deadline) on this timeline; all
    windows lie inside [a, b) and total volume equals speed * (b - a).
    Returns (start, end, job id) runs covering [a, b).
    """
    remaining = {j.id: j.volume for j in jobs}
    releases = sorted({windows[j.id][0] for j in jobs})
    runs = []
    t = a
    while t < b:
        ready = [j for j in jobs if windows[j.id][0] <= t and remaining[j.id] > 0]
        if not ready:
            future = [r for r in releases if r > t]
            assert future, "idle tail inside a max-density interval"
            t = future[0]
            continue
        current = min(ready, key=lambda j: (windows[j.id][1], j.id))
        finish = t + remaining[current.id] / speed
        next_release = min((r for r in releases if r > t), default=b)
        run_end = min(finish, next_release, b)
        assert run_end > t
        runs.append((t, run_end, current.id))
        remaining[current.id] -= speed * (run_end - t)
        assert run_end <= windows[current.id][1], (
            f"EDF missed deadline of {current.id}")
        t = run_end
    assert all(v == 0 for v in remaining.values()), "round volume not exhausted"
    return runs


def run_yds(jobs: Sequence[Job]) -> YdsResult:
    """Run YDS to completion and return the schedule plus round records.

    The schedule tiles [min(0, earliest release), latest deadline) with
    idle time represented as active speed-0 segments (YDS has no sleep
    state).
    """
    if not jobs:
        raise ValueError("need at least one job")
    horizon_start = min(Fraction(0), min(j.release for j in jobs))
    horizon_end = max(j.deadline for j in jobs)
    timeline = _Timeline(horizon_start, horizon_end)
    pending = sorted(jobs, key=lambda j: j.id)
    rounds = []
    job_speed = {}
    segments: List[Segment] = []

    while pending:
        cwindows = {}
        for j in pending:
            cr, cd = timeline.contract(j.release), timeline.contract(j.deadline)
            assert cr < cd, f"job {j.id} has no live time left"
            cwindows[j.id] = (cr, cd, j.volume)
        s, e, dens, contained = _best_interval(cwindows)
        batch = [j for j in pending if j.id in contained]
        runs = _edf(batch, {j.id: cwindows[j.id][:2] for j in batch}, dens, s, e)
        for c1, c2, jid in runs:
            for o1, o2 in timeline.expand_interval(c1, c2):
                segments.append(active_segment(o1, o2, dens, jid))
        fragments = tuple(timeline.expand_interval(s, e))
        rounds.append(YdsRound(
            interval=DensityInterval(start=s, end=e, density=dens,
                                     contained_jobs=contained),
            original_fragments=fragments,
            job_ids=tuple(sorted(contained)),
            speed=dens,
        ))
        for j in batch:
            job_speed[j.id] = dens
        timeline.add_blackouts(fragments)
        pending = [j for j in pending if j.id not in contained]

    # fill the gaps with idle (active, speed 0) segments
    segments.sort(key=lambda seg: seg.start)
    filled: List[Segment] = []
    cur = horizon_start
    for seg in segments:
        if seg.start > cur:
            filled.append(active_segment(cur, seg.start, Fraction(0)))
        filled.append(seg)
        cur = seg.end
    if cur < horizon_end:
        filled.append(active_segment(cur, horizon_end, Fraction(0)))

    # merge contiguous runs of the same job at the same speed
    merged: List[Segment] = []
    for seg in filled:
        if (merged and merged[-1].end == seg.start and merged[-1].work == seg.work
                and merged[-1].speed == seg.speed):
            merged[-1] = Segment(merged[-1].start, seg.end, ACTIVE, seg.speed, seg.work)
        else:
            merged.append(seg)

    speeds = [r.speed for r in rounds]
    assert all(a >= b for a, b in zip(speeds, speeds[1:])), \
        "round speeds must be non-increasing"
    return YdsResult(schedule=Schedule(tuple(merged)), rounds=tuple(rounds),
                     job_speed=job_speed)


FAST_SLOW_ATOL = 1e-12


def partition_fast_slow(res: YdsResult,
                        s_crit: Union[Fraction, float]) -> Tuple[frozenset, frozenset]:
    """Split jobs into FAST (YDS speed >= critical) and SLOW (the rest).

    Rational critical speeds compare exactly; floats get a small absolute
    tolerance that favors FAST on a borderline tie.
    """
    fast, slow = set(), set()
    for jid, speed in res.job_speed.items():
        if isinstance(s_crit, Fraction):
            is_fast = speed >= s_crit
        else:
            is_fast = float(speed) >= s_crit - FAST_SLOW_ATOL
        (fast if is_fast else slow).add(jid)
    return frozenset(fast), frozenset(slow)

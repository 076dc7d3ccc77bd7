"""Instance transformation around the fast intervals of a YDS schedule.

Once YDS is run, the maximal intervals where it works at or above the
critical speed can be frozen: an optimal schedule exists that agrees with
YDS there.  Each such interval I_i = [y_i, z_i) is replaced by a single
dummy job that must fill it exactly, and the windows of the remaining slow
jobs are clipped so that no release or deadline lies strictly inside any
I_i.  A schedule for the transformed instance that runs every dummy
exactly on its interval converts back into a schedule for the original
instance by splicing the YDS segments back in, with no loss in the
approximation factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple, Union

from .model import ACTIVE, SLEEP, Instance, Job, Schedule, Segment, to_fraction
from .yds import FAST_SLOW_ATOL, YdsResult, partition_fast_slow

DUMMY_PREFIX = "dummy_"


@dataclass(frozen=True)
class FastIntervals:
    """Maximal intervals where YDS runs at or above the critical speed,
    plus their complement inside [horizon_start, d_max)."""

    intervals: tuple
    complement: tuple

    def locate(self, t: Fraction):
        """Index of the fast interval containing t, or None."""
        for i, (y, z) in enumerate(self.intervals):
            if y <= t < z:
                return i
        return None


@dataclass(frozen=True)
class TransformedInstance:
    instance: Instance
    fast: FastIntervals
    dummy_map: dict          # dummy id -> (y, z)
    yds_inside: dict         # dummy id -> YDS segments covering its interval
    clip_record: dict        # slow job id -> ((orig r, orig d), (new r, new d))
    n_original: int
    s_crit: Union[Fraction, float]

    @property
    def dummy_ids(self) -> frozenset:
        return frozenset(self.dummy_map)

    @property
    def slow_ids(self) -> frozenset:
        return frozenset(j.id for j in self.instance.jobs) - self.dummy_ids


def _speed_is_fast(speed: Fraction, s_crit: Union[Fraction, float]) -> bool:
    if isinstance(s_crit, Fraction):
        return speed >= s_crit
    return float(speed) >= s_crit - FAST_SLOW_ATOL


def rationalize_speed_up(s: Union[Fraction, float],
                         max_denominator: int = 10 ** 6) -> Fraction:
    if isinstance(s, Fraction):
        return s
    return Fraction(math.ceil(s * max_denominator), max_denominator)


def build_transformed(inst: Instance, yds: YdsResult,
                      s_crit: Union[Fraction, float]) -> TransformedInstance:
    """Build the transformed instance: dummies for fast intervals, clipped
    windows for slow jobs.

    Requires a normalized instance (earliest release 0, minimum volume 1);
    dummy volumes are max(1, |I_i| * s_crit), with an irrational critical
    speed rounded up to a nearby rational so volumes stay exact.
    """
    if inst.r_min != 0 or inst.v_min != 1:
        raise ValueError("instance must be normalized (min release 0, min volume 1)")

    fast_ids, slow_ids = partition_fast_slow(yds, s_crit)

    # maximal runs of YDS segments at fast speeds
    intervals: List[Tuple[Fraction, Fraction]] = []
    for seg in yds.schedule.segments:
        if seg.state != ACTIVE or not _speed_is_fast(to_fraction(seg.speed), s_crit):
            continue
        if intervals and intervals[-1][1] == seg.start:
            intervals[-1] = (intervals[-1][0], seg.end)
        else:
            intervals.append((seg.start, seg.end))

    horizon = (yds.schedule.start, yds.schedule.end)
    complement: List[Tuple[Fraction, Fraction]] = []
    cur = horizon[0]
    for y, z in intervals:
        if y > cur:
            complement.append((cur, y))
        cur = z
    if cur < horizon[1]:
        complement.append((cur, horizon[1]))
    fast = FastIntervals(intervals=tuple(intervals), complement=tuple(complement))

    for jid in fast_ids:
        job = inst.job_by_id(jid)
        owners = {i for i, (y, z) in enumerate(intervals)
                  if y <= job.release and job.deadline <= z}
        assert len(owners) == 1, f"fast job {jid} not inside exactly one fast interval"

    s_crit_vol = rationalize_speed_up(s_crit)
    jobs: List[Job] = []
    dummy_map = {}
    yds_inside = {}
    existing = {j.id for j in inst.jobs}
    for i, (y, z) in enumerate(intervals):
        did = f"{DUMMY_PREFIX}{i}"
        while did in existing:
            did += "_"
        existing.add(did)
        volume = max(Fraction(1), (z - y) * s_crit_vol)
        jobs.append(Job(did, y, z, volume))
        dummy_map[did] = (y, z)
        yds_inside[did] = tuple(s for s in yds.schedule.segments
                                if s.start >= y and s.end <= z)
        covered = sum((s.end - s.start for s in yds_inside[did]), Fraction(0))
        assert covered == z - y, "fast interval not fully covered by YDS segments"

    clip_record = {}
    for jid in sorted(slow_ids):
        job = inst.job_by_id(jid)
        r, d = job.release, job.deadline
        ir = fast.locate(r)
        if ir is not None:
            r = intervals[ir][1]
        idx = fast.locate(d)
        if idx is not None:
            d = intervals[idx][0]
        if not r < d:
            raise AssertionError(
                f"clipping emptied the window of slow job {jid}; upstream bug")
        clip_record[jid] = ((job.release, job.deadline), (r, d))
        jobs.append(Job(jid, r, d, job.volume))

    jobs.sort(key=lambda j: (j.release, j.deadline, j.id))
    return TransformedInstance(
        instance=Instance(tuple(jobs), inst.power, inst.wakeup_cost),
        fast=fast,
        dummy_map=dummy_map,
        yds_inside=yds_inside,
        clip_record=clip_record,
        n_original=len(inst.jobs),
        s_crit=s_crit,
    )


def _split_at(segments, cuts) -> List[Segment]:
    """Split segments at every cut point that falls strictly inside one."""
    out = []
    for seg in segments:
        inner = sorted(c for c in cuts if seg.start < c < seg.end)
        lo = seg.start
        for c in inner + [seg.end]:
            out.append(Segment(lo, c, seg.state, seg.speed, seg.work))
            lo = c
    return out


def back_transform(sprime: Schedule, t: TransformedInstance) -> Schedule:
    """Turn a schedule for the transformed instance into one for the
    original instance by splicing the stored YDS segments over each fast
    interval.

    Requires that the given schedule runs every dummy exactly on its
    interval; time outside the fast intervals is kept verbatim.
    """
    for did, (y, z) in t.dummy_map.items():
        runs = sorted(sprime.work_segments(did), key=lambda s: s.start)
        if not runs:
            raise ValueError(f"dummy {did} is never processed")
        covered = runs[0].start == y and runs[-1].end == z and \
            all(a.end == b.start for a, b in zip(runs, runs[1:]))
        if not covered:
            raise ValueError(
                f"dummy {did} must be processed exactly on [{y}, {z})")

    cuts = [p for y_z in t.dummy_map.values() for p in y_z]
    segments: List[Segment] = []
    for seg in _split_at(sprime.segments, cuts):
        idx = t.fast.locate(seg.start)
        if idx is None:
            segments.append(seg)
    for did in t.dummy_map:
        segments.extend(t.yds_inside[did])
    segments.sort(key=lambda s: s.start)
    return Schedule(tuple(segments))

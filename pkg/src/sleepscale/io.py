"""JSON formats for instances and schedules.

Rationals are written as plain integers when integral and as "p/q" strings
otherwise, so grid points survive round trips exactly.  On input, JSON
numbers are parsed from their decimal text (0.1 becomes exactly 1/10) and
strings may use either "p/q" or decimal notation.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import List, Optional, Tuple

from .model import (
    ACTIVE,
    SLEEP,
    Instance,
    Job,
    PiecewiseLinearConvex,
    PowerLaw,
    Schedule,
    Segment,
    count_wakeups,
    to_fraction,
)


class InstanceFormatError(ValueError):
    """Input document does not describe a valid instance or schedule."""


def encode_rational(x) -> object:
    f = to_fraction(x)
    if f.denominator == 1:
        return int(f)
    return f"{f.numerator}/{f.denominator}"


def _decode_rational(value, where: str) -> Fraction:
    if isinstance(value, bool):
        raise InstanceFormatError(f"{where}: expected a number, got a boolean")
    try:
        return to_fraction(value)
    except (ValueError, TypeError, ZeroDivisionError) as exc:
        raise InstanceFormatError(f"{where}: {exc}") from exc


def loads_json(text: str) -> object:
    # parse_float receives the raw decimal text, so conversion is exact
    return json.loads(text, parse_float=Fraction)


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise InstanceFormatError(f"{where}: missing field {key!r}")
    return doc[key]


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level: expected an object")
    jobs_doc = _require(doc, "jobs", "top level")
    if not isinstance(jobs_doc, list) or not jobs_doc:
        raise InstanceFormatError("jobs: expected a non-empty array")
    jobs = []
    for i, jd in enumerate(jobs_doc):
        where = f"jobs[{i}]"
        if not isinstance(jd, dict):
            raise InstanceFormatError(f"{where}: expected an object")
        try:
            jobs.append(Job(
                id=str(_require(jd, "id", where)),
                release=_decode_rational(_require(jd, "release", where), f"{where}.release"),
                deadline=_decode_rational(_require(jd, "deadline", where), f"{where}.deadline"),
                volume=_decode_rational(_require(jd, "volume", where), f"{where}.volume"),
            ))
        except ValueError as exc:
            if isinstance(exc, InstanceFormatError):
                raise
            raise InstanceFormatError(f"{where}: {exc}") from exc

    pd = _require(doc, "power", "top level")
    kind = _require(pd, "kind", "power")
    if kind == "power_law":
        power = PowerLaw(
            alpha=float(_require(pd, "alpha", "power")),
            beta=_decode_rational(_require(pd, "beta", "power"), "power.beta"),
        )
    elif kind == "piecewise":
        pts = _require(pd, "points", "power")
        if not isinstance(pts, list):
            raise InstanceFormatError("power.points: expected an array")
        points = tuple(
            (_decode_rational(s, f"power.points[{i}][0]"),
             _decode_rational(p, f"power.points[{i}][1]"))
            for i, (s, p) in enumerate(pts))
        power = PiecewiseLinearConvex(points)
    else:
        raise InstanceFormatError(f"power.kind: unknown kind {kind!r}")

    c = _decode_rational(_require(doc, "wakeup_cost", "top level"), "wakeup_cost")
    try:
        return Instance(tuple(jobs), power, c)
    except ValueError as exc:
        raise InstanceFormatError(str(exc)) from exc


def instance_to_dict(inst: Instance) -> dict:
    if isinstance(inst.power, PowerLaw):
        if inst.power.speed_scale != 1:
            raise ValueError("cannot serialize an internally rescaled power law")
        power = {"kind": "power_law", "alpha": inst.power.alpha,
                 "beta": encode_rational(inst.power.beta)}
    else:
        power = {"kind": "piecewise",
                 "points": [[encode_rational(s), encode_rational(p)]
                            for s, p in inst.power.points]}
    return {
        "jobs": [{"id": j.id,
                  "release": encode_rational(j.release),
                  "deadline": encode_rational(j.deadline),
                  "volume": encode_rational(j.volume)} for j in inst.jobs],
        "power": power,
        "wakeup_cost": encode_rational(inst.wakeup_cost),
    }


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return instance_from_dict(loads_json(fh.read()))


def save_instance(inst: Instance, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_canonical(instance_to_dict(inst)))


def dumps_canonical(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Schedules
# ---------------------------------------------------------------------------

def _segment_to_dict(seg: Segment, piece_index=None) -> dict:
    if seg.state == SLEEP:
        return {"start": encode_rational(seg.start), "end": encode_rational(seg.end),
                "state": "sleep", "speed": 0, "job": None, "piece": None}
    speed = encode_rational(seg.speed) if isinstance(seg.speed, Fraction) else seg.speed
    job = None
    piece = piece_index
    work = seg.work
    if work is not None:
        from .discretize import Piece as PieceType
        if isinstance(work, PieceType):
            job, piece = work.job_id, work.index
        else:
            job = str(work)
    return {"start": encode_rational(seg.start), "end": encode_rational(seg.end),
            "state": "active", "speed": speed, "job": job, "piece": piece}


def _segment_from_dict(sd: dict, where: str) -> Tuple[Segment, Optional[int]]:
    state = _require(sd, "state", where)
    start = _decode_rational(_require(sd, "start", where), f"{where}.start")
    end = _decode_rational(_require(sd, "end", where), f"{where}.end")
    try:
        if state == "sleep":
            return Segment(start, end, SLEEP), None
        if state != "active":
            raise InstanceFormatError(f"{where}.state: unknown state {state!r}")
        speed = _decode_rational(sd.get("speed", 0), f"{where}.speed")
        job = sd.get("job")
        return Segment(start, end, ACTIVE, speed,
                       None if job is None else str(job)), sd.get("piece")
    except ValueError as exc:
        if isinstance(exc, InstanceFormatError):
            raise
        raise InstanceFormatError(f"{where}: {exc}") from exc


def schedule_to_dict(sch: Schedule, energy: float, *, discretization=None) -> dict:
    doc = {
        "segments": [_segment_to_dict(s) for s in sch.segments],
        "energy": energy,
        "wakeups": count_wakeups(sch),
    }
    if discretization is not None:
        doc["discretization"] = discretization
    return doc


def report_to_dict(report) -> dict:
    """ScheduleFile for a solver report, including the piece-level schedule
    (in the normalized frame) so verification can re-check discretization."""
    disc = {
        "epsilon": encode_rational(report.epsilon),
        "mode": report.params.mode,
        "pieces_per_job": report.params.pieces_per_job,
        "subdivisions": report.params.subdivisions,
        "delta": encode_rational(report.params.delta),
        "piece_segments": [_segment_to_dict(s) for s in report.piece_schedule.segments],
    }
    return schedule_to_dict(report.schedule, report.energy, discretization=disc)


class ScheduleDocument:
    """Parsed ScheduleFile: raw segments plus declared totals."""

    def __init__(self, segments, declared_energy, declared_wakeups, discretization):
        self.segments = segments
        self.piece_refs = []
        self.declared_energy = declared_energy
        self.declared_wakeups = declared_wakeups
        self.discretization = discretization

    def schedule(self) -> Schedule:
        return Schedule(tuple(self.segments))


def schedule_from_dict(doc: dict) -> ScheduleDocument:
    if not isinstance(doc, dict):
        raise InstanceFormatError("top level: expected an object")
    segs_doc = _require(doc, "segments", "top level")
    if not isinstance(segs_doc, list) or not segs_doc:
        raise InstanceFormatError("segments: expected a non-empty array")
    segments = []
    refs = []
    for i, sd in enumerate(segs_doc):
        seg, piece = _segment_from_dict(sd, f"segments[{i}]")
        segments.append(seg)
        refs.append(piece)
    energy = _require(doc, "energy", "top level")
    if not isinstance(energy, (int, Fraction, float)):
        raise InstanceFormatError("energy: expected a number")
    out = ScheduleDocument(segments, float(energy), doc.get("wakeups"),
                           doc.get("discretization"))
    out.piece_refs = refs
    return out


def load_schedule(path: str) -> ScheduleDocument:
    with open(path, "r", encoding="utf-8") as fh:
        return schedule_from_dict(loads_json(fh.read()))


def schedule_to_csv(sch: Schedule) -> str:
    """Rows (t, speed, state) at every segment boundary."""
    lines = ["t,speed,state"]
    for seg in sch.segments:
        speed = float(seg.speed) if seg.state == ACTIVE else 0.0
        lines.append(f"{float(seg.start)},{speed},{seg.state}")
    lines.append(f"{float(sch.end)},0.0,end")
    return "\n".join(lines) + "\n"

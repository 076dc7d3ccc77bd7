"""Independent ground truth for certifying solver output.

Two flavors: closed-form optima for structured instances (a single job, or
jobs with pairwise disjoint windows), and exhaustive enumeration over the
discretized well-ordered schedule class for tiny piece sets.  Both are
deliberately brute-force -- their value is being trustworthy, not clever.

For the analytic oracles the optimum per job is attained at one of a few
extreme configurations: run the whole window at the uniform fill speed, or
run at the critical speed packed against either end of the window.  Gaps
between the chosen processing blocks each independently take
min(idle power * length, one wake-up).  Enumerating every combination of
per-job extremes and taking the cheapest covers all gap-merging effects.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .model import (
    Instance,
    Job,
    PowerFunction,
    Schedule,
    Segment,
    active_segment,
    critical_speed,
    critical_speed_exact,
    evaluate_power,
    power_at_zero,
    sleep_segment,
    to_fraction,
    _power_float,
)
from .discretize import Piece, TimeGrid

ANALYTIC = "analytic"
EXHAUSTIVE = "exhaustive"

CHAIN_MAX_JOBS = 10
EXHAUSTIVE_MAX_PIECES = 4
EXHAUSTIVE_MAX_POINTS = 14


class OracleScopeError(ValueError):
    """The instance is outside the oracle's guard rails."""


@dataclass(frozen=True)
class OracleResult:
    optimum: float
    witness: Optional[Schedule]
    method: str


def _rational_critical_speed(p: PowerFunction) -> Fraction:
    """Critical speed as an exact rational when possible, else the binary
    expansion of its float value.  Energy at the critical speed is a smooth
    minimum, so the float-level perturbation is second-order negligible."""
    exact = critical_speed_exact(p)
    if exact is not None:
        return exact
    return Fraction(critical_speed(p))


def _gap_cost(p0f: float, cf: float, length: Fraction) -> float:
    return min(p0f * float(length), cf)


def _fill_gaps(blocks: Sequence[Segment], horizon: Tuple[Fraction, Fraction],
               p0f: float, cf: float) -> Schedule:
    """Tile the horizon with the given blocks plus idle/sleep gap fills."""
    segs: List[Segment] = []
    cur = horizon[0]
    for b in sorted(blocks, key=lambda s: s.start):
        if b.start > cur:
            if p0f * float(b.start - cur) <= cf:
                segs.append(active_segment(cur, b.start, Fraction(0)))
            else:
                segs.append(sleep_segment(cur, b.start))
        segs.append(b)
        cur = b.end
    if cur < horizon[1]:
        if p0f * float(horizon[1] - cur) <= cf:
            segs.append(active_segment(cur, horizon[1], Fraction(0)))
        else:
            segs.append(sleep_segment(cur, horizon[1]))
    return Schedule(tuple(segs))


def _job_options(job: Job, s_crit: Fraction) -> List[Tuple[Fraction, Fraction, Fraction]]:
    """Candidate (start, end, speed) runs for one job: fill the window, or
    run at the critical speed packed left or right."""
    r, d, v = job.release, job.deadline, job.volume
    fill = v / (d - r)
    options = [(r, d, fill)]
    if fill < s_crit:
        length = v / s_crit
        if length < d - r:
            options.append((r, r + length, s_crit))
            options.append((d - length, d, s_crit))
    return options


def _evaluate_combo(combo, jobs, horizon, p0f, cf, power) -> float:
    proc = 0.0
    for (b, e, s) in combo:
        proc += evaluate_power(power, s) * float(e - b)
    cost = proc
    cur = horizon[0]
    for (b, e, _) in combo:
        if b > cur:
            cost += _gap_cost(p0f, cf, b - cur)
        cur = e
    if cur < horizon[1]:
        cost += _gap_cost(p0f, cf, horizon[1] - cur)
    return cost


def analytic_single_job(job: Job, power: PowerFunction, wakeup_cost) -> OracleResult:
    """Exact optimum for a one-job instance over the horizon [0, deadline)."""
    cf = float(to_fraction(wakeup_cost))
    p0f = power_at_zero(power)
    s_crit = _rational_critical_speed(power)
    horizon = (Fraction(0), job.deadline)

    best = None
    for b, e, s in _job_options(job, s_crit):
        cost = _evaluate_combo([(b, e, s)], [job], horizon, p0f, cf, power)
        if best is None or cost < best[0]:
            best = (cost, (b, e, s))
    cost, (b, e, s) = best
    witness = _fill_gaps([active_segment(b, e, s, job.id)], horizon, p0f, cf)
    return OracleResult(optimum=cost, witness=witness, method=ANALYTIC)


def analytic_disjoint_chain(jobs: Sequence[Job], power: PowerFunction,
                            wakeup_cost) -> OracleResult:
    """Exact optimum for jobs with pairwise disjoint windows.

    Enumerates every combination of per-job extremes (at most three each),
    so it is refused beyond CHAIN_MAX_JOBS jobs.
    """
    jobs = sorted(jobs, key=lambda j: j.release)
    if len(jobs) > CHAIN_MAX_JOBS:
        raise OracleScopeError(
            f"chain oracle is limited to {CHAIN_MAX_JOBS} jobs, got {len(jobs)}")
    for a, b in zip(jobs, jobs[1:]):
        if b.release < a.deadline:
            raise OracleScopeError(
                f"windows of {a.id} and {b.id} overlap; not a disjoint chain")
    cf = float(to_fraction(wakeup_cost))
    p0f = power_at_zero(power)
    s_crit = _rational_critical_speed(power)
    horizon = (Fraction(0), max(j.deadline for j in jobs))

    best = None
    for combo in itertools.product(*[_job_options(j, s_crit) for j in jobs]):
        cost = _evaluate_combo(combo, jobs, horizon, p0f, cf, power)
        if best is None or cost < best[0]:
            best = (cost, combo)
    cost, combo = best
    blocks = [active_segment(b, e, s, j.id) for j, (b, e, s) in zip(jobs, combo)]
    witness = _fill_gaps(blocks, horizon, p0f, cf)
    return OracleResult(optimum=cost, witness=witness, method=ANALYTIC)


# ---------------------------------------------------------------------------
# Exhaustive enumeration over the discretized well-ordered class
# ---------------------------------------------------------------------------

def exhaustive_discretized(pieces: Sequence[Piece], grid: TimeGrid,
                           power: PowerFunction, wakeup_cost) -> OracleResult:
    """Minimum energy over every well-ordered discretized schedule.

    Pieces are assigned, in order, to grid-point intervals inside a single
    zone of their window; assignments violating the ordering rule against
    an already-placed piece are pruned.  Gaps take min(idle, sleep).  The
    energy of a complete assignment is evaluated with the same recursive
    split and float conventions the dynamic program uses, so agreement can
    be checked with exact float equality.
    """
    pieces = sorted(pieces, key=lambda p: p.order)
    if len(pieces) > EXHAUSTIVE_MAX_PIECES:
        raise OracleScopeError(
            f"exhaustive oracle is limited to {EXHAUSTIVE_MAX_PIECES} pieces, "
            f"got {len(pieces)}")
    if len(grid.points) > EXHAUSTIVE_MAX_POINTS:
        raise OracleScopeError(
            f"exhaustive oracle is limited to {EXHAUSTIVE_MAX_POINTS} grid "
            f"points, got {len(grid.points)}")

    points = list(grid.points)
    wprime = sorted(grid.wprime)
    fpt = {p: float(p) for p in points}
    p0f = power_at_zero(power)
    cf = float(to_fraction(wakeup_cost))
    vol_f = [float(p.volume) for p in pieces]
    horizon = (points[0], points[-1])

    def zone_free(b: Fraction, e: Fraction) -> bool:
        return not any(b < w < e for w in wprime)

    candidates: List[List[Tuple[Fraction, Fraction]]] = []
    for p in pieces:
        opts = [(b, e)
                for i, b in enumerate(points) for e in points[i + 1:]
                if p.release <= b and e <= p.deadline and zone_free(b, e)]
        candidates.append(opts)

    n = len(pieces)
    best: List[Optional[Tuple[float, tuple]]] = [None]
    placement: List[Optional[Tuple[Fraction, Fraction]]] = [None] * n

    def fold(k: int, t1: Fraction, t2: Fraction) -> float:
        while k < n and not (t1 < pieces[k].deadline <= t2):
            k += 1
        if k == n:
            return min(p0f * (fpt[t2] - fpt[t1]), cf)
        b, e = placement[k]
        assert t1 <= b < e <= t2
        dur = fpt[e] - fpt[b]
        proc = _power_float(power, vol_f[k] / dur) * dur
        return (fold(k + 1, t1, b) + proc) + fold(k + 1, e, t2)

    def assign(k: int, proc_so_far: float):
        if best[0] is not None and proc_so_far >= best[0][0]:
            return
        if k == n:
            total = fold(0, horizon[0], horizon[1])
            if best[0] is None or total < best[0][0]:
                best[0] = (total, tuple(placement))
            return
        piece = pieces[k]
        for b, e in candidates[k]:
            ok = True
            for j in range(k):
                pb, pe = placement[j]
                if b < pe and pb < e:          # overlap
                    ok = False
                    break
                if piece.deadline >= pe and b < pe:   # ordering rule
                    ok = False
                    break
            if not ok:
                continue
            placement[k] = (b, e)
            dur = fpt[e] - fpt[b]
            proc = _power_float(power, vol_f[k] / dur) * dur
            assign(k + 1, proc_so_far + proc)
            placement[k] = None

    assign(0, 0.0)
    if best[0] is None:
        return OracleResult(optimum=math.inf, witness=None, method=EXHAUSTIVE)

    total, chosen = best[0]
    blocks = [active_segment(b, e, p.volume / (e - b), p)
              for p, (b, e) in zip(pieces, chosen)]
    witness = _fill_gaps(blocks, horizon, p0f, cf)
    return OracleResult(optimum=total, witness=witness, method=EXHAUSTIVE)

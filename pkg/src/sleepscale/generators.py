"""Seeded random instance generation for tests and the command line.

Profiles shape the speed demand v/(d - r) relative to the critical speed
of the default power function P(s) = s^2 + 1 (critical speed 1):

  slack -- long windows, demand well below critical: SLOW-heavy.
  tight -- demand at or above critical, so YDS runs every job fast.
  mixed -- a coin flip per job between the two.

All times and volumes land on a quarter-unit rational grid and the
earliest release is shifted to 0.
"""

from __future__ import annotations

import random
from fractions import Fraction

from .model import Instance, Job, PowerLaw

PROFILES = ("slack", "tight", "mixed")

_Q = Fraction(1, 4)


def generate_instance(n: int, seed: int, profile: str) -> Instance:
    if n < 1:
        raise ValueError("need at least one job")
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {PROFILES}")
    rng = random.Random(seed)

    jobs = []
    cursor = Fraction(0)
    for i in range(n):
        cursor += _Q * rng.randint(0, 8)
        length = _Q * rng.randint(4, 24)
        release = cursor
        deadline = release + length
        tight = profile == "tight" or (profile == "mixed" and rng.random() < 0.5)
        if tight:
            # demand at least the critical speed 1
            volume = length * Fraction(rng.randint(4, 8), 4)
        else:
            volume = length * Fraction(rng.randint(1, 2), 8)
        volume = max(volume, _Q)
        jobs.append(Job(f"j{i}", release, deadline, volume))
        if rng.random() < 0.5:
            cursor = deadline
        else:
            cursor = release + _Q * rng.randint(1, 8)

    shift = min(j.release for j in jobs)
    jobs = [Job(j.id, j.release - shift, j.deadline - shift, j.volume) for j in jobs]
    return Instance(tuple(jobs), PowerLaw(alpha=2, beta=1), Fraction(5))

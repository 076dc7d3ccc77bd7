"""Command-line front end.

Subcommands: solve, verify, compare, generate.  Exit codes form a small
contract for harnesses: 0 success, 1 input error, 2 grid too coarse,
3 verification or comparison failure.  Errors go to stderr with a
machine-parsable "sleepscale: error[kind]:" prefix.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .discretize import EXACT, THINNED, DiscretizationParams, build_grid, build_pieces
from .dp import GridTooCoarseError, solve
from .generators import PROFILES, generate_instance
from .io import (
    InstanceFormatError,
    ScheduleDocument,
    dumps_canonical,
    encode_rational,
    instance_to_dict,
    load_instance,
    load_schedule,
    report_to_dict,
    schedule_to_csv,
)
from .model import (
    ACTIVE,
    Instance,
    Schedule,
    Segment,
    check_feasible,
    critical_speed,
    critical_speed_exact,
    normalize,
    schedule_energy,
    to_fraction,
)
from .oracle import (
    OracleScopeError,
    analytic_disjoint_chain,
    analytic_single_job,
    exhaustive_discretized,
)
from .discretize import check_discretized, check_well_ordered
from .transform import build_transformed
from .yds import run_yds

ENERGY_RTOL = 1e-6


def _err(kind: str, message: str):
    print(f"sleepscale: error[{kind}]: {message}", file=sys.stderr)


def _write(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _epsilon(arg: str) -> Fraction:
    eps = to_fraction(arg)
    if eps <= 0:
        raise InstanceFormatError("--epsilon must be positive")
    return eps


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    report = solve(inst, _epsilon(args.epsilon), mode=args.mode,
                   pieces_per_job=args.pieces_per_job,
                   subdivisions=args.subdivisions)
    _write(dumps_canonical(report_to_dict(report)), args.out)
    if args.emit_csv:
        _write(schedule_to_csv(report.schedule), args.emit_csv)
    if args.trace:
        trace = {
            "transformed_jobs": instance_to_dict(report.transformed.instance)["jobs"],
            "fast_intervals": [[encode_rational(y), encode_rational(z)]
                               for y, z in report.transformed.fast.intervals],
            "grid_points": [encode_rational(p) for p in report.grid.points],
            "grid_stats": report.grid.stats,
            "pieces": [{"id": p.id, "job": p.job_id, "index": p.index,
                        "volume": encode_rational(p.volume),
                        "release": encode_rational(p.release),
                        "deadline": encode_rational(p.deadline)}
                       for p in report.pieces],
            "memo_entries": report.memo_size,
            "dp_energy": report.dp_energy,
            "wall_time": report.wall_time,
        }
        _write(dumps_canonical(trace), args.trace)
    print(f"energy {report.energy:.9g}  wall {report.wall_time:.3f}s  "
          f"grid {len(report.grid.points)}  pieces {len(report.pieces)}  "
          f"memo {report.memo_size}", file=sys.stderr)
    return 0


def _rebuild_piece_schedule(inst: Instance, doc: ScheduleDocument):
    """Rebuild the grid recorded in a schedule file and resolve its
    piece-level segments; returns (piece schedule, grid) or None."""
    disc = doc.discretization
    if not disc:
        return None
    eps = to_fraction(disc["epsilon"])
    norm, _ = normalize(inst)
    yds_res = run_yds(norm.jobs)
    s_crit = critical_speed_exact(norm.power)
    if s_crit is None:
        s_crit = critical_speed(norm.power)
    tr = build_transformed(norm, yds_res, s_crit)
    if disc["mode"] == EXACT:
        params = DiscretizationParams.exact(tr.n_original, norm.power, eps)
    else:
        params = DiscretizationParams.thinned(
            norm.power, eps, int(disc["pieces_per_job"]), int(disc["subdivisions"]))
    grid = build_grid(tr, params)
    pieces = {(p.job_id, p.index): p for p in build_pieces(tr, params)}

    from .io import schedule_from_dict
    sub = schedule_from_dict({"segments": disc["piece_segments"], "energy": 0.0})
    segments = []
    for seg, ref in zip(sub.segments, sub.piece_refs):
        if seg.state == ACTIVE and seg.work is not None:
            key = (seg.work, int(ref))
            if key not in pieces:
                raise InstanceFormatError(
                    f"piece segment references unknown piece {key}")
            seg = Segment(seg.start, seg.end, ACTIVE, seg.speed, pieces[key])
        segments.append(seg)
    return Schedule(tuple(segments)), grid, tr


def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    doc = load_schedule(args.schedule)
    failures = []

    from .model import segment_tiling_issues
    tiling = segment_tiling_issues(doc.segments)
    if tiling:
        for msg in tiling:
            failures.append(f"tiling: {msg}")
        sch = None
    else:
        sch = doc.schedule()

    if sch is not None:
        report = check_feasible(sch, inst)
        for issue in report.issues:
            failures.append(f"{issue.kind}: {issue.message}")
        recomputed = schedule_energy(sch, inst)
        if abs(recomputed - doc.declared_energy) > ENERGY_RTOL * max(1.0, abs(recomputed)):
            failures.append(
                f"energy: declared {doc.declared_energy!r} but segments give "
                f"{recomputed!r}")
        if doc.discretization:
            rebuilt = _rebuild_piece_schedule(inst, doc)
            if rebuilt is not None:
                piece_sch, grid, _ = rebuilt
                for msg in check_discretized(piece_sch, grid).issues:
                    failures.append(f"discretized: {msg}")
                for msg in check_well_ordered(piece_sch).issues:
                    failures.append(f"well-ordered: {msg}")

    if failures:
        for f in failures:
            print(f"violation: {f}")
        print(f"verdict: FAIL ({len(failures)} violation(s))")
        return 3
    print("verdict: ok")
    return 0


def cmd_compare(args) -> int:
    inst = load_instance(args.instance)
    eps = _epsilon(args.epsilon)
    report = solve(inst, eps, mode=args.mode,
                   pieces_per_job=args.pieces_per_job,
                   subdivisions=args.subdivisions)

    if args.oracle == "analytic":
        jobs = sorted(inst.jobs, key=lambda j: j.release)
        if len(jobs) == 1:
            oracle = analytic_single_job(jobs[0], inst.power, inst.wakeup_cost)
        else:
            oracle = analytic_disjoint_chain(jobs, inst.power, inst.wakeup_cost)
        solver_energy = report.energy
    else:
        oracle = exhaustive_discretized(report.pieces, report.grid,
                                        report.transformed.instance.power,
                                        report.transformed.instance.wakeup_cost)
        solver_energy = report.dp_energy

    ratio = solver_energy / oracle.optimum if oracle.optimum else float("inf")
    print(f"solver {solver_energy:.12g}")
    print(f"oracle {oracle.optimum:.12g} ({oracle.method})")
    print(f"ratio {ratio:.12g}")
    ok = ratio >= 1 - 1e-9
    if args.mode == EXACT and ratio > 1 + float(eps):
        ok = False
    return 0 if ok else 3


def cmd_generate(args) -> int:
    inst = generate_instance(args.jobs, args.seed, args.profile)
    _write(dumps_canonical(instance_to_dict(inst)), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sleepscale",
        description="Energy-minimal deadline scheduling with speed scaling "
                    "and a sleep state.")
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve an instance file")
    ps.add_argument("instance")
    ps.add_argument("--epsilon", default="0.1", help="approximation parameter")
    ps.add_argument("--mode", choices=[EXACT, THINNED], default=THINNED)
    ps.add_argument("--pieces-per-job", type=int, default=8)
    ps.add_argument("--subdivisions", type=int, default=32)
    ps.add_argument("--out", default=None, help="schedule file (stdout if omitted)")
    ps.add_argument("--emit-csv", default=None, help="write (t,speed,state) rows")
    ps.add_argument("--trace", default=None, help="dump grid/pieces/memo stats")
    ps.set_defaults(func=cmd_solve)

    pv = sub.add_parser("verify", help="check a schedule file against its instance")
    pv.add_argument("instance")
    pv.add_argument("schedule")
    pv.set_defaults(func=cmd_verify)

    pc = sub.add_parser("compare", help="solve and compare against an oracle")
    pc.add_argument("instance")
    pc.add_argument("--epsilon", default="0.1")
    pc.add_argument("--mode", choices=[EXACT, THINNED], default=THINNED)
    pc.add_argument("--pieces-per-job", type=int, default=8)
    pc.add_argument("--subdivisions", type=int, default=32)
    pc.add_argument("--oracle", choices=["analytic", "exhaustive"], default="analytic")
    pc.set_defaults(func=cmd_compare)

    pg = sub.add_parser("generate", help="emit a seeded random instance")
    pg.add_argument("--jobs", type=int, required=True)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--profile", choices=list(PROFILES), default="mixed")
    pg.add_argument("--out", default=None)
    pg.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GridTooCoarseError as exc:
        _err("grid", str(exc))
        return 2
    except json.JSONDecodeError as exc:
        _err("input", f"parse error at byte offset {exc.pos}: {exc.msg}")
        return 1
    except (InstanceFormatError, OracleScopeError) as exc:
        _err("input", str(exc))
        return 1
    except (FileNotFoundError, IsADirectoryError) as exc:
        _err("input", str(exc))
        return 1
    except ValueError as exc:
        _err("input", str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())

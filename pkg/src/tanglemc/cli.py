"""Batch front-end: every operation on files, reproducible seeds, JSON reports.

Exit codes: 0 success/valid/pass, 1 countermodel-found/check-fail, 2 input
error.  Reports are printed to stdout with a stable schema version; runs
with identical inputs and seed produce byte-identical reports.  The
environment variable ``TANGLEMC_SEED`` supplies the default seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import pathspace, story as story_mod
from .formula import Formula, ParseError, next_depth, parse, pretty, size, vars_of
from .frame import (
    Frame,
    FrameError,
    duplicate_reflexive,
    frame_from_dict,
    pullback_valuation,
)
from .logic import LOGICS, countermodel_search, soundness_suite
from .semantics import Model, truth_set, valid_on_frame
from .story import StoryError

SCHEMA_VERSION = 1


def _emit(report: dict) -> None:
    sys.stdout.write(json.dumps(report, indent=2, sort_keys=False) + "\n")


def _report(command: str, **fields) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command, **fields}


def _load_json(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _load_frame(args) -> tuple[Frame, dict]:
    data = _load_json(args.frame)
    return frame_from_dict(data, close_transitively=args.close_transitively)


def _load_story(path: str) -> story_mod.Story:
    return story_mod.validate_story(_load_json(path))


def _default_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int(os.environ.get("TANGLEMC_SEED", "0"))


def _cmd_parse(args) -> int:
    phi = parse(args.formula)
    _emit(_report(
        "parse",
        formula=args.formula,
        canonical=pretty(phi),
        size=size(phi),
        next_depth=next_depth(phi),
        variables=sorted(vars_of(phi)),
    ))
    return 0


def _cmd_check(args) -> int:
    frame, valuation = _load_frame(args)
    phi = parse(args.formula)
    ts = truth_set(Model(frame, valuation), phi)
    holds = None
    if args.world is not None:
        frame.index(args.world)
        holds = args.world in ts
    _emit(_report(
        "check",
        formula=pretty(phi),
        frame=args.frame,
        truth_set=sorted(ts, key=frame.index),
        world=args.world,
        holds=holds,
    ))
    return 0 if holds is None or holds else 1


def _cmd_validity(args) -> int:
    frame, _ = _load_frame(args)
    phi = parse(args.formula)
    seed = _default_seed(args)
    verdict = valid_on_frame(frame, phi, mode=args.mode, samples=args.samples, seed=seed)
    report = _report(
        "validity",
        formula=pretty(phi),
        frame=args.frame,
        mode=verdict.mode,
        seed=seed if verdict.mode == "sampled" else None,
        checked=verdict.checked,
        valid=verdict.valid,
    )
    if verdict.countermodel is not None:
        report["countermodel"] = {
            "valuation": {p: list(ws) for p, ws in verdict.countermodel.valuation.items()},
            "world": verdict.countermodel.world,
        }
    _emit(report)
    return 0 if verdict.valid else 1


def _cmd_axioms(args) -> int:
    seed = _default_seed(args)
    report = soundness_suite(
        args.logic, args.trials, seed, max_worlds=args.max_worlds,
        mode=args.mode, samples=args.samples,
    )
    _emit(_report("axioms", **report.to_dict()))
    return 0 if report.ok else 1


def _cmd_search(args) -> int:
    phi = parse(args.formula)
    seed = _default_seed(args)
    result = countermodel_search(
        phi, args.logic, max_worlds=args.max_worlds,
        max_duration=args.max_duration, seed=seed, samples=args.samples,
    )
    report = _report(
        "search",
        formula=pretty(phi),
        logic=args.logic,
        max_worlds=args.max_worlds,
        max_duration=args.max_duration,
        seed=seed,
        verdict=result.verdict,
        frames_checked=result.frames_checked,
        valuations_checked=result.valuations_checked,
    )
    if result.found:
        report["countermodel"] = {
            "frame": result.frame.to_dict(result.valuation),
            "world": result.world,
        }
        if result.story is not None:
            report["countermodel"]["story"] = result.story.to_dict()
    _emit(report)
    return 1 if result.found else 0


def _cmd_story_validate(args) -> int:
    try:
        st = _load_story(args.story)
    except StoryError as e:
        _emit(_report(
            "story-validate", story=args.story, valid=False,
            condition=e.condition, message=str(e),
        ))
        return 1
    _emit(_report(
        "story-validate", story=args.story, valid=True,
        duration=st.duration, immersive=st.immersive,
    ))
    return 0


def _cmd_story_class(args) -> int:
    st = _load_story(args.story)
    _emit(_report(
        "story-class", story=args.story,
        flags=sorted(story_mod.story_class(st)),
        immersive=st.immersive,
    ))
    return 0


def _cmd_oplus(args) -> int:
    if args.story is not None:
        st = _load_story(args.story)
        lifted, projections = story_mod.story_oplus(st)
        _emit(_report(
            "oplus", story=args.story, result=lifted.to_dict(),
            projections=[dict(sorted(p.items())) for p in projections],
        ))
        return 0
    frame, valuation = _load_frame(args)
    lifted, projection = duplicate_reflexive(frame)
    _emit(_report(
        "oplus", frame=args.frame,
        result=lifted.to_dict(pullback_valuation(projection, valuation)),
        projection=dict(sorted(projection.items())),
    ))
    return 0


def _cmd_pathspace_verify(args) -> int:
    if args.story is not None:
        st = _load_story(args.story)
        source = args.story
    else:
        frame, valuation = _load_frame(args)
        moment = story_mod.moment_from_frame(frame, valuation)
        st = story_mod.Story((moment,), (), immersive=True)
        source = args.frame
    assignment = pathspace.build_limit_assignment(st)
    report = pathspace.verify_lim_pmorphism(st, assignment, args.resolution)
    out = _report("pathspace-verify", input=source, **report.to_dict())
    if args.dump_paths:
        frames = [m.frame_view() for m in st.levels]
        out["paths"] = [
            pathspace.format_path(p)
            for f in frames
            for p in pathspace.enumerate_paths(f, args.resolution)
        ]
    _emit(out)
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="tanglemc",
        description="Model checking and countermodel search for tangled "
                    "derivative logics on finite dynamic Kripke frames.",
    )
    sub = top.add_subparsers(dest="command", required=True)

    def add_frame_opts(p):
        p.add_argument("--frame", required=True, help="frame JSON file")
        p.add_argument("--close-transitively", action="store_true",
                       help="replace the relation by its transitive closure")

    p = sub.add_parser("parse", help="parse a formula and print its canonical form")
    p.add_argument("--formula", required=True)
    p.set_defaults(fn=_cmd_parse)

    p = sub.add_parser("check", help="evaluate a formula's truth set on a model")
    add_frame_opts(p)
    p.add_argument("--formula", required=True)
    p.add_argument("--world", help="also report whether the formula holds there")
    p.set_defaults(fn=_cmd_check)

    p = sub.add_parser("validity", help="check validity over all or sampled valuations")
    add_frame_opts(p)
    p.add_argument("--formula", required=True)
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=_cmd_validity)

    p = sub.add_parser("axioms", help="run the soundness suite for a logic")
    p.add_argument("--logic", choices=sorted(LOGICS), required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--max-worlds", type=int, default=4)
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="sampled")
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=_cmd_axioms)

    p = sub.add_parser("search", help="search for a countermodel in a logic's frame class")
    p.add_argument("--logic", choices=sorted(LOGICS), required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--max-worlds", type=int, default=3)
    p.add_argument("--max-duration", type=int, default=0)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=_cmd_search)

    p = sub.add_parser("story-validate", help="check the five story conditions")
    p.add_argument("--story", required=True, help="story JSON file")
    p.set_defaults(fn=_cmd_story_validate)

    p = sub.add_parser("story-class", help="report which logics a story fits")
    p.add_argument("--story", required=True)
    p.set_defaults(fn=_cmd_story_class)

    p = sub.add_parser("oplus", help="duplicate reflexive worlds of a frame or story")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--frame")
    group.add_argument("--story")
    p.add_argument("--close-transitively", action="store_true")
    p.set_defaults(fn=_cmd_oplus)

    p = sub.add_parser(
        "pathspace-verify",
        help="verify the limit map conditions at a finite resolution",
    )
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--story")
    group.add_argument("--frame", help="frame treated as a single-level story "
                                       "(its map is replaced by the identity)")
    p.add_argument("--close-transitively", action="store_true")
    p.add_argument("--resolution", type=int, default=4)
    p.add_argument("--dump-paths", action="store_true")
    p.set_defaults(fn=_cmd_pathspace_verify)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, FrameError, StoryError, ValueError) as e:
        _emit(_report(args.command, error=str(e)))
        return 2
    except (OSError, json.JSONDecodeError) as e:
        _emit(_report(args.command, error=str(e)))
        return 2


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())

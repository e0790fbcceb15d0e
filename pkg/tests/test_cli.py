import json
import os
from pathlib import Path

import pytest

from tanglemc.cli import main
from tanglemc.frame import frame_from_dict
from tanglemc.semantics import Model, truth_set
from tanglemc.formula import parse

DEMOS = Path(__file__).resolve().parent.parent / "demos"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_parse_command(capsys):
    code, report = run(capsys, "parse", "--formula", "<d.>p -> T")
    assert code == 0
    assert report["schema_version"] == 1
    assert report["canonical"] == "p | <d>p -> T"
    assert report["variables"] == ["p"]


def test_parse_error_exits_2(capsys):
    code, report = run(capsys, "parse", "--formula", "<t>{}")
    assert code == 2
    assert "empty tangle" in report["error"]


def test_check_command_truth_set(capsys):
    code, report = run(
        capsys, "check", "--frame", str(DEMOS / "f1.frame.json"),
        "--formula", "<d>p",
    )
    assert code == 0
    assert report["truth_set"] == ["a", "b"]


def test_check_world_flag_controls_exit(capsys):
    code, report = run(
        capsys, "check", "--frame", str(DEMOS / "f3.frame.json"),
        "--formula", "<t>{O p} -> O <t>{p}", "--world", "q1",
    )
    assert code == 1 and report["holds"] is False
    code, report = run(
        capsys, "check", "--frame", str(DEMOS / "f3.frame.json"),
        "--formula", "<t>{O p} -> O <t>{p}", "--world", "o",
    )
    assert code == 0 and report["holds"] is True


def test_missing_file_exits_2(capsys):
    code, report = run(capsys, "check", "--frame", "no-such-file.json",
                       "--formula", "p")
    assert code == 2


def test_validity_exhaustive(capsys):
    code, report = run(
        capsys, "validity", "--frame", str(DEMOS / "f1.frame.json"),
        "--formula", "[d]p -> [d][d]p",
    )
    assert code == 0 and report["valid"] is True
    code, report = run(
        capsys, "validity", "--frame", str(DEMOS / "f3.frame.json"),
        "--formula", "<t>{O p} -> O <t>{p}",
    )
    assert code == 1 and report["countermodel"]["world"] == "q1"


def test_axioms_report_echoes_seed(capsys):
    code, report = run(capsys, "axioms", "--logic", "K4C", "--trials", "20",
                       "--seed", "9")
    assert code == 0
    assert report["seed"] == 9 and report["violations"] == []


def test_search_round_trips_through_check(capsys, tmp_path):
    code, report = run(
        capsys, "search", "--logic", "K4C",
        "--formula", "<t>{O p} -> O <t>{p}", "--max-worlds", "3",
    )
    assert code == 1
    cm = report["countermodel"]
    frame_file = tmp_path / "countermodel.json"
    frame_file.write_text(json.dumps(cm["frame"]))
    code2, report2 = run(
        capsys, "check", "--frame", str(frame_file),
        "--formula", "<t>{O p} -> O <t>{p}", "--world", cm["world"],
    )
    assert code2 == 1 and report2["holds"] is False


def test_search_none_within_bounds(capsys):
    code, report = run(
        capsys, "search", "--logic", "K4I",
        "--formula", "<t>{O p} -> O <t>{p}", "--max-worlds", "3",
    )
    assert code == 0 and report["verdict"] == "none-within-bounds"


def test_reports_are_byte_identical_for_same_seed(capsys):
    argv = ["axioms", "--logic", "K4DC", "--trials", "10", "--seed", "4"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    second = capsys.readouterr().out
    assert first == second


def test_seed_env_var_default(capsys, monkeypatch):
    monkeypatch.setenv("TANGLEMC_SEED", "33")
    code, report = run(capsys, "axioms", "--logic", "K4C", "--trials", "5")
    assert report["seed"] == 33


def test_story_validate_and_class(capsys):
    code, report = run(capsys, "story-validate", "--story",
                       str(DEMOS / "story_chain.story.json"))
    assert code == 0 and report["valid"] and report["duration"] == 2
    code, report = run(capsys, "story-class", "--story",
                       str(DEMOS / "story_chain.story.json"))
    assert code == 0 and report["flags"] == ["K4C", "K4DC", "K4DI", "K4I"]


def test_story_validate_rejects_with_condition(capsys, tmp_path):
    bad = {
        "levels": [
            {"worlds": ["x"], "rel": [["x", "x"]], "root": "x", "valuation": {}},
            {"worlds": ["y"], "rel": [["y", "y"]], "root": "y", "valuation": {}},
        ],
        "maps": [{"x": "y"}, {"y": "x"}],
    }
    f = tmp_path / "bad.story.json"
    f.write_text(json.dumps(bad))
    code, report = run(capsys, "story-validate", "--story", str(f))
    assert code == 1 and report["condition"] == "structure"


def test_oplus_frame_matches_demo_file(capsys):
    code, report = run(capsys, "oplus", "--frame", str(DEMOS / "f1.frame.json"))
    assert code == 0
    assert report["result"] == json.loads((DEMOS / "f1_oplus.frame.json").read_text())


def test_oplus_story(capsys):
    code, report = run(capsys, "oplus", "--story",
                       str(DEMOS / "story_chain.story.json"))
    assert code == 0
    assert len(report["result"]["levels"]) == 3


def test_pathspace_verify_frame_and_dump(capsys):
    code, report = run(
        capsys, "pathspace-verify", "--frame", str(DEMOS / "f1_oplus.frame.json"),
        "--resolution", "4", "--dump-paths",
    )
    assert code == 0 and report["violations"] == []
    assert ";a" in report["paths"]
    assert all(";" in line for line in report["paths"])


def test_pathspace_verify_story(capsys):
    code, report = run(
        capsys, "pathspace-verify", "--story", str(DEMOS / "story_chain.story.json"),
    )
    # the demo story has lone reflexive worlds, so the precondition trips
    assert code == 2 and "duplication" in report["error"]


def test_demo_frames_all_load(capsys):
    for name in ("f1", "f2", "f3", "f1_oplus", "wheel"):
        code, _ = run(capsys, "check", "--frame", str(DEMOS / f"{name}.frame.json"),
                      "--formula", "T")
        assert code == 0


def test_wheel_demo_is_monotone_and_rotates():
    data = json.loads((DEMOS / "wheel.frame.json").read_text())
    frame, val = frame_from_dict(data)
    flags = frame.classify()
    assert flags.transitive and flags.monotonic
    m = Model(frame, val)
    # the sectors are dense everywhere, so their perfect core absorbs the
    # whole wheel, while the spokes are nowhere dense in themselves
    assert truth_set(m, parse("<t>{p}")) == set(frame.worlds)
    spokes = Model(frame, {"s": {f"spoke{i}" for i in range(4)}})
    assert truth_set(spokes, parse("<t>{s}")) == frozenset()

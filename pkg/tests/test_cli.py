from __future__ import annotations

import json
import pathlib

import jsonschema
import pytest

from numinv.cli import main

SCHEMA = json.loads(
    (pathlib.Path(__file__).resolve().parent.parent / "docs" / "report_schema.json")
    .read_text()
)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_run_text_success(capsys, corpus_dir):
    code, out, _ = run_cli(
        capsys, "run", str(corpus_dir / "rate_limiter.mil"), "--technique", "PF"
    )
    assert code == 0
    assert "x_old in [-100000, 100000]" in out
    assert "inductive: yes" in out
    assert "wall" not in out  # text output is time-free and deterministic


def test_run_text_deterministic(capsys, corpus_dir):
    args = ("run", str(corpus_dir / "gopan_reps.mil"), "--technique", "G+PF",
            "--domain", "octagons")
    _, out1, _ = run_cli(capsys, *args)
    _, out2, _ = run_cli(capsys, *args)
    assert out1 == out2


def test_run_json_validates_against_schema(capsys, corpus_dir):
    for technique in ("S", "DIS"):
        code, out, _ = run_cli(
            capsys, "run", str(corpus_dir / "phase_split.mil"),
            "--technique", technique, "--format", "json",
        )
        assert code == 0
        data = json.loads(out)
        jsonschema.validate(data, SCHEMA)
        assert data["inductive"] is True
        assert data["stats"]["wall_time"] >= 0.0


def test_run_empty_program(capsys, corpus_dir):
    code, out, _ = run_cli(capsys, "run", str(corpus_dir / "empty.mil"))
    assert code == 0
    assert "entry" in out and "exit" in out


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.mil"
    bad.write_text("fn broken( {")
    code, _, err = run_cli(capsys, "run", str(bad))
    assert code == 1
    assert "error" in err


def test_missing_file_exit_code(capsys):
    code, _, _ = run_cli(capsys, "run", "/nonexistent.mil")
    assert code == 1


def test_bad_flag_exit_code(capsys, corpus_dir):
    with pytest.raises(SystemExit) as exc:
        main(["run", str(corpus_dir / "empty.mil"), "--technique", "XX"])
    capsys.readouterr()
    assert exc.value.code == 1


def test_events_file(tmp_path, capsys, corpus_dir):
    events = tmp_path / "events.jsonl"
    code, _, _ = run_cli(
        capsys, "run", str(corpus_dir / "rate_limiter.mil"),
        "--technique", "G+PF", "--events", str(events),
    )
    assert code == 0
    lines = [json.loads(l) for l in events.read_text().splitlines()]
    assert any(e["event"] == "path_added" for e in lines)


def test_dump_cfg(capsys, corpus_dir):
    code, out, _ = run_cli(
        capsys, "run", str(corpus_dir / "diamond.mil"), "--dump-cfg"
    )
    assert code == 0
    head, _, _rest = out.partition("\n}\n")
    data = json.loads(head + "\n}")
    assert "edges" in data and "cut_points" in data


def test_compare_text_and_csv(tmp_path, capsys, corpus_dir):
    csv = tmp_path / "table.csv"
    code, out, _ = run_cli(
        capsys, "compare",
        str(corpus_dir / "rate_limiter.mil"), str(corpus_dir / "phase_split.mil"),
        "--techniques", "S,PF,G+PF,DIS", "--csv", str(csv),
    )
    assert code == 0
    assert "PF/S" in out and "DIS/G+PF" in out
    rows = csv.read_text().splitlines()
    assert rows[0] == "pair,stronger,weaker,equal,incomparable"
    for row in rows[1:]:
        parts = row.split(",")
        assert abs(sum(float(x) for x in parts[1:]) - 100.0) < 0.1


def test_compare_self_is_all_equal(capsys, corpus_dir):
    code, out, _ = run_cli(
        capsys, "compare", str(corpus_dir / "count_to_100.mil"),
        "--techniques", "G,S", "--format", "json",
    )
    assert code == 0
    data = json.loads(out)
    g_vs_s = [p for p in data["pairs"] if p["pair"] == "G/S"][0]
    assert g_vs_s["equal"] == 100.0


def test_compare_parallel_matches_sequential(capsys, corpus_dir):
    args = ("compare", str(corpus_dir / "diamond.mil"),
            "--techniques", "S,PF", "--format", "json")
    _, seq, _ = run_cli(capsys, *args)
    _, par, _ = run_cli(capsys, *args, "--parallel")
    strip = lambda s: {p["pair"]: p for p in json.loads(s)["pairs"]}
    assert strip(seq) == strip(par)

import csv
import json
from pathlib import Path

import pytest

from dhshadow.cli import densify, main, parse_path, parse_sigma

DATA = Path(__file__).resolve().parent.parent / "data"
MODEL = str(DATA / "rank2_model.json")
RANK1_ZERO = str(DATA / "rank1_trivial.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(text.splitlines()))


def test_parsers():
    assert parse_path("0,0:1,2") == [0, 1 + 2j]
    assert parse_path("") == []
    assert densify([0, 1], 4) == [0, 0.25, 0.5, 0.75, 1]
    assert parse_sigma("t1=2,1;t2=1,2") == {"t1": (1, 0), "t2": (0, 1)}


def test_flow_trivial_is_zero(capsys):
    code, out, _ = run(capsys, "flow", "--input", RANK1_ZERO, "--path", "0,0:1,0", "--samples", "4")
    assert code == 0
    body = rows(out)[1:]
    assert len(body) == 5
    assert all(float(r[4]) == 0 and float(r[5]) == 0 and float(r[6]) == 0 for r in body)


def test_flow_empty_path(capsys):
    code, out, _ = run(capsys, "flow", "--input", MODEL)
    assert code == 0
    assert rows(out) == [["re_lambda", "im_lambda", "puncture", "kms_index", "p", "re_e", "im_e"]]


def test_flow_curves_meet_at_one(capsys):
    code, out, _ = run(capsys, "flow", "--input", MODEL, "--path", "0,0:1,0", "--samples", "10")
    last = [r for r in rows(out)[1:] if float(r[0]) == 1.0]
    e = {r[3]: complex(float(r[5]), float(r[6])) for r in last}
    # 0 and 2 agree modulo lambda Z at lambda = 1
    assert abs(e["1"] - e["0"] - 2) < 1e-12


def test_walls_output(tmp_path, capsys):
    code, _, _ = run(capsys, "walls", "--input", MODEL, "--output-dir", str(tmp_path),
                     "--samples", "60")
    assert code == 0
    delta = rows((tmp_path / "delta.csv").read_text())
    assert delta[0] == ["re", "im", "puncture", "i", "j", "n"]
    pts = [complex(float(r[0]), float(r[1])) for r in delta[1:]]
    for want in (1, -1, 1j, -1j):
        assert min(abs(z - want) for z in pts) < 1e-9
    walls = rows((tmp_path / "walls.csv").read_text())
    assert walls[0] == ["curve_id", "re", "im", "puncture", "i", "j", "m"]


def test_twistor_table(capsys):
    code, out, _ = run(capsys, "twistor", "--profile", "1,1,1", "--degree", "2")
    assert code == 0
    lines = out.splitlines()
    assert lines[3].split() == ["2", "1", "1", "2", "1", "1", "6"]
    code, out, _ = run(capsys, "twistor", "--profile", "1,1,1", "--degree", "2", "--json")
    data = json.loads(out)
    assert data["tables"][2]["entries"] == {"0": 1, "1": 1, "2": 2, "3": 1, "4": 1}


def test_twistor_default_profile_warns(capsys):
    code, out, _ = run(capsys, "twistor", "--rank", "2", "--punctures", "3", "--json")
    data = json.loads(out)
    assert code == 0 and data["profile"] == [4, 0, 6] and "warning" in data


def test_section_and_cover(capsys):
    code, out, _ = run(capsys, "section", "--input", MODEL, "--path", "0.5,0.5:1,0.5:1.2,0.2",
                       "--samples", "4", "--cover", "2", "--glue")
    assert code == 0
    assert "cocycle: PASS" in out and "glue: PASS" in out


def test_section_writes_files(tmp_path, capsys):
    code, _, _ = run(capsys, "section", "--input", MODEL, "--path", "0.5,0.5:1,0.5",
                     "--output-dir", str(tmp_path))
    assert code == 0
    header = rows((tmp_path / "section.csv").read_text())[0]
    assert header == ["sample_id", "re_lambda", "im_lambda", "puncture", "slot", "kms_index",
                      "rep_shift", "p", "re_e", "im_e"]
    assert isinstance(json.loads((tmp_path / "transitions.json").read_text()), list)


def test_section_through_collision_exits_4(capsys):
    code, _, err = run(capsys, "section", "--input", MODEL, "--path", "0,0:1.5,0")
    assert code == 4 and "collision point" in err


def test_orbit_and_betti(tmp_path, capsys):
    p = tmp_path / "res.json"
    p.write_text('{"lambda": [5, 0], "theta": {"t": [[0, 0], [1, 0], [2, 0]]}}')
    code, out, _ = run(capsys, "orbit", "--input", str(p), "--word", "U(t) H(t)^3",
                       "--length", "1", "--json")
    data = json.loads(out)
    assert code == 0
    assert data["normal_form"]["t"] == {"sigma": [1, 2, 3], "m": [0, 0, 0]}
    assert data["image"]["theta"]["t"] == [[0, 0], [1, 0], [2, 0]]
    code, out, _ = run(capsys, "betti", "--input", MODEL, "--lambda", "1,0.5", "--json")
    assert code == 0 and len(json.loads(out)["betti"]["t"]) == 2


def test_betti_local_system(tmp_path, capsys):
    p = tmp_path / "fls.json"
    p.write_text(json.dumps({"rank": 2, "punctures": [
        {"label": "t", "gamma": [[[2, 0], [1, 0]], [[0, 0], [3, 0]]],
         "flag": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]},
        {"label": "u", "gamma": [[[0.5, 0], [-1 / 6, 0]], [[0, 0], [1 / 3, 0]]],
         "flag": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}]}))
    code, out, _ = run(capsys, "betti", "--input", str(p), "--sigma", "t=2,1", "--json")
    data = json.loads(out)
    assert code == 0
    got = [complex(*z) for z in data["eigenvalues"]["t"]]
    assert abs(got[0] - 3) < 1e-9 and abs(got[1] - 2) < 1e-9
    # both loops are polynomials in one matrix, so its polynomials commute with everything
    assert data["commutant_dimension"] == 2


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"rank": 2,\n "punctures": 3}')
    code, _, err = run(capsys, "walls", "--input", str(bad))
    assert code == 2 and "line 1" in err
    dup = tmp_path / "dup.json"
    dup.write_text('{"rank": 2, "punctures": [{"label": "t", "spectrum": ['
                   '{"a": -0.5, "alpha": [1, 0]}, {"a": -0.5, "alpha": [1, 0]}]}]}')
    code, _, _ = run(capsys, "walls", "--input", str(dup))
    assert code == 3
    code, _, _ = run(capsys, "flow")
    assert code == 2
    code, _, _ = run(capsys, "check", "--suite", "nonsense")
    assert code == 2
    with pytest.raises(SystemExit) as info:
        main(["nonsense"])
    assert info.value.code == 2


def test_check_groupoid_and_determinism(capsys):
    code, first, _ = run(capsys, "check", "--suite", "groupoid", "--json", "--seed", "3")
    assert code == 0 and json.loads(first)["passed"]
    _, second, _ = run(capsys, "check", "--suite", "groupoid", "--json", "--seed", "3")
    assert first == second


def test_walls_json_is_deterministic(capsys):
    _, a, _ = run(capsys, "walls", "--input", MODEL, "--json", "--samples", "40")
    _, b, _ = run(capsys, "walls", "--input", MODEL, "--json", "--samples", "40")
    assert a == b and json.loads(a)["delta"]

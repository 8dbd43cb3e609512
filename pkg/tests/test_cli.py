from pathlib import Path

import pytest

from ibrdyn.cli import main

GOLDEN = Path(__file__).parent / "golden"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def c2_file(tmp_path):
    p = tmp_path / "c2.txt"
    p.write_text("# coordination\n2\n4 1\n3 2\n", encoding="utf-8")
    return str(p)


def test_rest_points_zeeman(capsys):
    code, out, _ = run(capsys, "rest-points", "--preset", "zeeman-Z", "--kind", "ibr")
    assert code == 0
    assert "(2 interior)" in out
    assert "0.5745" in out


def test_classify2_from_file(capsys, c2_file):
    code, out, _ = run(capsys, "classify2", "--game", c2_file)
    assert code == 0
    assert "label: C2" in out and "interior rest points: 0.5\n" in out


def test_reproduce_table3_matches_golden(tmp_path, capsys):
    code, _, _ = run(capsys, "reproduce", "table3", "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "table3.csv").read_bytes() == (GOLDEN / "table3.csv").read_bytes()
    assert (tmp_path / "table3.txt").read_text().startswith("Table 3")


@pytest.mark.parametrize("argv", [
    ["field", "--preset", "table5-A1", "--x0", "0.5,0.3,0.2", "--format", "csv"],
    ["integrate", "--preset", "rps-standard", "--x0", "0.5,0.3,0.2", "--horizon", "2", "--samples", "20"],
    ["simulate", "--preset", "rps-standard", "--agents", "200", "--seed", "4", "--horizon", "2", "--samples", "20"],
    ["phase", "--preset", "table5-C2", "--x0", "0.5,0.25,0.25", "--horizon", "5"],
    ["dominance", "--preset", "example3-A2", "--format", "csv"],
    ["orbit", "--preset", "table5-C2", "--x0", "0.5,0.25,0.25", "--format", "csv"],
])
def test_outputs_are_byte_identical(tmp_path, capsys, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, *argv, "--out", str(a))[0] == 0
    assert run(capsys, *argv, "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes() and a.stat().st_size > 0
    assert not list(tmp_path.glob(".*.tmp"))


def test_dominance_text(capsys):
    code, out, _ = run(capsys, "dominance", "--preset", "example3-A2")
    assert code == 0 and "elimination order: 3 by 2, 2 by 1" in out and "survivors: {1}" in out


def test_field_value(capsys):
    code, out, _ = run(capsys, "field", "--preset", "example2", "--x0", "0.4,0.6")
    assert code == 0 and "-0.048" in out


def test_simulate_replicates(capsys):
    code, out, _ = run(capsys, "simulate", "--preset", "rps-standard", "--agents", "50", "--replicates", "3",
                       "--horizon", "1", "--samples", "11")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "seed,N,sup_gap,t_at_sup" and [l.split(",")[0] for l in lines[1:]] == ["0", "1", "2"]


@pytest.mark.parametrize("argv", [
    ["field", "--preset", "no-such-game"],
    ["field", "--game", "/nonexistent/game.txt"],
    ["field", "--preset", "rps-standard", "--x0", "0.5,0.6,0.2"],
    ["field", "--preset", "rps-standard", "--x0", "a,b,c"],
    ["field", "--preset", "rps-standard", "--x0", "0.5,0.5"],
    ["field"],
    ["classify2", "--preset", "rps-standard"],
    ["phase", "--preset", "example3-A4", "--format", "csv"],
    ["reproduce", "table9"],
    ["integrate", "--preset", "rps-standard", "--horizon", "-1"],
    ["field", "--preset", "example3-A3?alpha=7"],
])
def test_input_errors_exit_2(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2 and err.startswith("error:")


def test_parse_error_names_line(capsys, tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("2\n1 2\n3\n", encoding="utf-8")
    code, _, err = run(capsys, "field", "--game", str(p))
    assert code == 2 and "line 3" in err


@pytest.mark.parametrize("argv", [
    ["field", "--game", "x", "--preset", "y"],
    ["field", "--preset", "rps-standard", "--unknown"],
    ["field", "--preset", "rps-standard", "--kind", "smith"],
])
def test_argparse_rejections_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2


def test_numerical_failure_exit_3(capsys, monkeypatch):
    import ibrdyn.cli as cli

    def boom(*a, **k):
        raise FloatingPointError("step size below minimum")

    monkeypatch.setattr(cli, "integrate", boom)
    code, _, err = run(capsys, "integrate", "--preset", "rps-standard")
    assert code == 3 and "numerical failure" in err

import json
import math

import pytest

from fqflats.constants import EXIT_FAILED, EXIT_OK, EXIT_USAGE
from fqflats.errors import InvalidParameters
from fqflats.main import build_parser, config_from_args, default_grid, main, parse_grid, run_verify

PLANE = ["--q", "3", "--d", "2", "--k", "0", "--h", "1"]


def records(text):
    return [json.loads(line) for line in text.splitlines() if line]


# ---------------------------------------------------------
# Argument handling
# ---------------------------------------------------------


def test_parse_grid():
    assert parse_grid("3:2:0:1, 5:3:0:2,") == ((3, 2, 0, 1), (5, 3, 0, 2))
    with pytest.raises(InvalidParameters):
        parse_grid("3:2:0")
    with pytest.raises(InvalidParameters):
        parse_grid(" , ")


def test_default_grid():
    grid = default_grid()
    assert (3, 2, 0, 1) in grid and (5, 4, 1, 3) in grid
    assert (9, 3, 0, 2) in grid
    assert all(d <= 3 for q, d, _, _ in grid if q == 9)
    assert len(grid) == 5 + 5 + 3


def test_config_from_args(monkeypatch):
    monkeypatch.delenv("FQFLATS_BUDGET", raising=False)
    args = build_parser().parse_args(["rich", *PLANE, "--t", "3", "--side", "A", "--seed", "7"])
    config = config_from_args(args)
    assert (config.q, config.d, config.k, config.h, config.seed) == (3, 2, 0, 1, 7)
    assert config.option("t") == 3 and config.option("side") == "A"
    assert config.option("missing", "x") == "x"


def test_negative_samples_is_a_usage_error(capsys):
    assert main(["mixing", *PLANE, "--samples", "-1"]) == EXIT_USAGE
    assert "InvalidParameters" in capsys.readouterr().err


# ---------------------------------------------------------
# Single-graph commands
# ---------------------------------------------------------


def test_count(capsys):
    assert main(["count", "--q", "3", "--d", "4", "--k", "1", "--h", "3"]) == EXIT_OK
    (record,) = records(capsys.readouterr().out)
    assert (record["n_kflats"], record["n_hflats"], record["x"], record["y"]) == (1080, 120, 117, 13)
    assert record["edges"] == 14040 and record["identity"] == "ok"
    assert record["threshold"] == 3 * 3**9
    assert record["threshold_exponent"] == 9


def test_count_without_incidence_hypothesis(capsys):
    assert main(["count", "--q", "5", "--d", "3", "--k", "1", "--h", "2"]) == EXIT_OK
    (record,) = records(capsys.readouterr().out)
    assert "threshold" not in record


@pytest.mark.parametrize(
    "argv",
    [
        ["count", "--q", "6", "--d", "2", "--k", "0", "--h", "1"],
        ["count", "--q", "4", "--d", "2", "--k", "0", "--h", "1"],
        ["count", "--q", "3", "--d", "2", "--k", "1", "--h", "1"],
        ["count", "--d", "2", "--k", "0", "--h", "1"],
    ],
)
def test_count_usage_errors(argv, capsys):
    assert main(argv) == EXIT_USAGE
    assert capsys.readouterr().err.startswith("error: ")


def test_spectrum(capsys):
    assert main(["spectrum", *PLANE]) == EXIT_OK
    (record,) = records(capsys.readouterr().out)
    assert record["lambda3"] == pytest.approx(1.7320508, abs=1e-7)
    assert record["lambda1"] == pytest.approx(math.sqrt(12))
    assert record["pass"] is True


def test_spectrum_jacobi(capsys):
    assert main(["spectrum", *PLANE, "--method", "jacobi"]) == EXIT_OK
    (record,) = records(capsys.readouterr().out)
    assert record["lambda3"] == pytest.approx(math.sqrt(3), abs=1e-7)


def test_mixing(capsys):
    assert main(["mixing", *PLANE, "--seed", "42", "--samples", "100"]) == EXIT_OK
    out = records(capsys.readouterr().out)
    assert len(out) == 100
    assert [r["sample"] for r in out] == list(range(100))
    assert all(r["pass"] for r in out)


def test_rich_both_sides(capsys):
    assert main(["rich", "--q", "3", "--d", "3", "--k", "0", "--h", "1", "--t", "2", "--samples", "10"]) == EXIT_OK
    out = records(capsys.readouterr().out)
    assert len(out) == 10 and all(r["side"] == "B" for r in out)
    assert main(["rich", *PLANE, "--side", "A", "--samples", "10"]) == EXIT_OK
    out = records(capsys.readouterr().out)
    assert all(r["side"] == "A" and r["status"] in ("PASS", "NOT-APPLICABLE") for r in out)


def test_enumerate(capsys):
    assert main(["enumerate", "--q", "3", "--d", "2", "--k", "1"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 12
    assert lines[0] == "3 2 1 | 1 0 | 0 0"


def test_enumerate_budget(capsys, monkeypatch):
    monkeypatch.setenv("FQFLATS_BUDGET", "10")
    assert main(["enumerate", "--q", "3", "--d", "2", "--k", "1"]) == EXIT_USAGE
    assert "TooLarge" in capsys.readouterr().err


def test_export(tmp_path):
    path = tmp_path / "gram.csv"
    assert main(["export", *PLANE, "--what", "gram", "-o", str(path)]) == EXIT_OK
    lines = path.read_text().splitlines()
    assert len(lines) == 10
    assert lines[1] == "4,1,1,1,1,1,1,1,1"

    path = tmp_path / "adjacency.csv"
    assert main(["export", *PLANE, "-o", str(path)]) == EXIT_OK
    assert len(path.read_text().splitlines()) == 37


def test_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["count", *PLANE, "-o", str(blocker / "report.jsonl")]) == EXIT_USAGE


# ---------------------------------------------------------
# Verification
# ---------------------------------------------------------

CHECKS = {
    "counts",
    "decomposition",
    "spectrum",
    "sharpness",
    "mixing",
    "incidence_bound",
    "richness_t2_B",
    "richness_t2_A",
    "richness_t3_B",
    "richness_t3_A",
    "oracles",
}


def test_verify_small_grid(capsys):
    code = main(["verify", "--grid", "3:2:0:1,3:3:0:2", "--samples", "20", "-q"])
    out = records(capsys.readouterr().out)
    assert code == EXIT_OK
    assert {r["check"] for r in out if r["params"]["d"] == 2} == CHECKS
    assert {r["status"] for r in out} <= {"PASS", "SKIPPED"}
    by_check = {(r["params"]["d"], r["check"]): r for r in out}
    assert by_check[(2, "richness_t3_A")]["status"] == "SKIPPED"
    assert by_check[(2, "sharpness")]["status"] == "PASS"
    assert (3, "sharpness") not in by_check


def test_verify_points_against_lines_in_space(capsys):
    assert main(["verify", "--grid", "3:3:0:1", "--samples", "10"]) == EXIT_OK
    out = {r["check"]: r for r in records(capsys.readouterr().out)}
    spectrum = out["spectrum"]
    assert spectrum["status"] == "PASS"
    assert spectrum["strict"] is False
    assert spectrum["lambda3"] == pytest.approx(math.sqrt(12))
    assert spectrum["ratio"] > 1


def test_verify_without_samples(capsys):
    assert main(["verify", *PLANE, "--samples", "0"]) == EXIT_OK
    out = {r["check"]: r for r in records(capsys.readouterr().out)}
    assert out["counts"]["status"] == "PASS"
    assert out["spectrum"]["status"] == "PASS"
    assert out["mixing"]["status"] == "SKIPPED"
    assert out["oracles"]["status"] == "SKIPPED"


def test_verify_detects_tampering(capsys):
    assert main(["verify", *PLANE, "--samples", "5", "--tamper", "1"]) == EXIT_FAILED
    out = {r["check"]: r for r in records(capsys.readouterr().out)}
    assert out["counts"]["status"] == "FAIL"
    assert out["decomposition"]["status"] == "FAIL"


def test_verify_skips_oversized_graphs(capsys, monkeypatch):
    monkeypatch.setenv("FQFLATS_BUDGET", "5")
    assert main(["verify", *PLANE]) == EXIT_OK
    (record,) = records(capsys.readouterr().out)
    assert (record["check"], record["status"]) == ("graph", "SKIPPED")


def test_verify_is_deterministic(tmp_path):
    outputs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        argv = ["verify", "--grid", "3:2:0:1,5:2:0:1", "--samples", "15", "--format", "csv", "-o", str(path)]
        assert main(argv) == EXIT_OK
        outputs.append(path.read_bytes())
    assert outputs[0] == outputs[1]
    assert b"\r" not in outputs[0]
    assert outputs[0].startswith(b"q,d,k,h,")


def test_seed_changes_samples(capsys):
    main(["mixing", *PLANE, "--samples", "5", "--seed", "1"])
    first = capsys.readouterr().out
    main(["mixing", *PLANE, "--samples", "5", "--seed", "2"])
    assert capsys.readouterr().out != first


@pytest.mark.parametrize("raw", ["abc", "1,2,3,4", "0"])
def test_bad_budget_variable(raw, capsys, monkeypatch):
    monkeypatch.setenv("FQFLATS_BUDGET", raw)
    assert main(["spectrum", *PLANE]) == EXIT_USAGE
    assert "FQFLATS_BUDGET" in capsys.readouterr().err


@pytest.mark.slow
def test_run_verify_lines_in_f3_4():
    config = config_from_args(build_parser().parse_args(["verify", "--grid", "3:4:1:3", "--samples", "10"]))
    out, failed = run_verify(config)
    assert not failed
    decomposition = next(r for r in out if r["check"] == "decomposition")
    assert decomposition["status"] == "PASS"
    assert [c["degree"] for c in decomposition["classes"]] == [143, 936]

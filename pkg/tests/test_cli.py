import csv
import io
import json
import math
import subprocess
import sys

import pytest

from curvewidth.cli import main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_volumes_rows(capsys):
    code, out, _ = run(["volumes", "--radii", "1", str(math.pi / 2), "--samples", "20000"], capsys)
    assert code == 0
    rows = [json.loads(line) for line in out.splitlines()]
    get = {(r["space"], r["r"]): r for r in rows}
    assert get[("euclidean", 1.0)]["exact"] == pytest.approx(math.pi, rel=1e-15)
    assert get[("spherical", math.pi / 2)]["exact"] == pytest.approx(2 * math.pi, rel=1e-15)
    for r in rows:
        assert r["global_upper"] >= r["exact"]
        assert r["quadrature"] == pytest.approx(r["exact"], rel=1e-10)
        assert abs(r["mc"] - r["exact"]) <= 4 * r["mc_stderr"]
        assert r["seed"] == 0


def test_volumes_csv(capsys):
    code, out, _ = run(["volumes", "--space", "hyperbolic", "--format", "csv", "--radii", "0.5",
                        "--samples", "1000"], capsys)
    assert code == 0
    assert out.startswith("space,dim,r,exact,quadrature,mc,mc_stderr,global_upper,seed\r\n")
    rows = list(csv.reader(io.StringIO(out, newline="")))
    assert rows[1][:3] == ["hyperbolic", "2", "0.5"]


def test_verify_json_lines_and_summary(capsys):
    code, out, err = run(["verify", "sumtwoangles", "--trials", "500"], capsys)
    assert code == 0
    reps = [json.loads(line) for line in out.splitlines()]
    assert [r["space"] for r in reps] == ["euclidean", "spherical", "hyperbolic"]
    assert all(r["passed"] and r["seed"] == 0 for r in reps)
    assert "PASS" in err and "FAIL" not in err


def test_verify_csv_summary(capsys):
    code, out, _ = run(["verify", "anglemonotone", "--space", "euclidean", "--trials", "200",
                        "--format", "csv"], capsys)
    assert code == 0
    rows = list(csv.reader(io.StringIO(out, newline="")))
    assert rows[0][0] == "check_name" and rows[1][0] == "angle_monotone"


def test_bad_check_name_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "nope"])
    assert exc.value.code == 2


def test_bad_threads_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["volumes", "--threads", "0"])
    assert exc.value.code == 2


def test_domain_error_exit_code(capsys):
    code, _, err = run(["verify", "ballboundary", "--space", "spherical", "--eta", "0.5"], capsys)
    assert code == 3 and "domain error" in err


def test_not_applicable_single_check(capsys):
    code, _, _ = run(["verify", "ballconvexhull", "--space", "hyperbolic"], capsys)
    assert code == 3


def test_unwritable_output(capsys, tmp_path):
    code, _, err = run(["volumes", "--radii", "0.5", "--out", str(tmp_path / "no" / "such.jsonl")],
                       capsys)
    assert code == 2 and "cannot write" in err


def test_budget_caps_samples(capsys):
    code, out, _ = run(["volumes", "--space", "euclidean", "--radii", "1", "--samples", "50000",
                        "--budget-evals", "100"], capsys)
    row = json.loads(out)
    # with 100 samples the standard error is large
    assert row["mc_stderr"] > 0.1


def test_stability_banner_and_fit(capsys, tmp_path):
    path = tmp_path / "st.jsonl"
    code, _, err = run(["stability", "--space", "euclidean", "--samples", "20000", "--out", str(path)],
                       capsys)
    assert code == 0
    assert "ILLUSTRATIVE MODE" in err
    fit, rep = (json.loads(line) for line in path.read_text().splitlines())
    assert fit["kind"] == "scaling_fit" and abs(fit["slope"] - 2 / 3) <= 0.05
    assert rep["parameters"]["mode"] == "illustrative"


def test_stability_csv(capsys):
    code, out, _ = run(["stability", "--space", "hyperbolic", "--format", "csv", "--samples", "10000"],
                       capsys)
    assert code == 0
    lines = out.split("\r\n")
    assert lines[0].startswith("# hyperbolic") and lines[1] == "eps,deficit"


def _cli(args, threads):
    return subprocess.run([sys.executable, "-m", "curvewidth.cli", *args, "--threads", str(threads)],
                          capture_output=True, check=False).stdout


@pytest.mark.parametrize("args", [
    ["verify", "twopointparallel", "--space", "hyperbolic", "--samples", "5000"],
    ["volumes", "--samples", "70000"],
    ["stability", "--space", "spherical", "--samples", "20000"],
])
def test_byte_identical_across_runs_and_threads(args):
    a = _cli(args, 1)
    assert a
    assert _cli(args, 1) == a
    assert _cli(args, 3) == a

import json
import subprocess
import sys
from pathlib import Path

import pytest

from groupsde.cli import main

SPECS = Path(__file__).resolve().parents[1] / "specs"
Z4 = str(SPECS / "z4.json")


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, out


def report(capsys, *argv):
    code, out = run(capsys, *argv)
    return code, json.loads(out)


def test_analyze_z4(capsys):
    code, doc = report(capsys, "analyze", "--group", Z4, "--measure", SPECS / "z4_uniform_1_3.json")
    assert code == 0
    assert doc["K_mu"] == [0, 2]
    assert doc["cosets"] == [[0, 2], [1, 3]]
    assert doc["extremal_count"] == 2
    assert doc["status"] == "VERIFIED" and doc["reason"] is None
    assert doc["solution_table"]["1"] == {"1": "1/2", "3": "1/2"}
    assert doc["mu"] == {"1": "1/2", "3": "1/2"}


def test_analyze_point_mass(capsys):
    code, doc = report(capsys, "analyze", "--group", Z4, "--measure", SPECS / "z4_point_2.json")
    assert code == 0
    assert doc["K_mu"] == [0] and len(doc["cosets"]) == 4


def test_analyze_named_and_file_automorphism(capsys):
    for aut in ("neg", SPECS / "z4_neg.json"):
        code, doc = report(
            capsys, "analyze", "--group", Z4, "--automorphism", aut, "--measure", SPECS / "z4_uniform_1_3.json"
        )
        assert code == 0 and doc["automorphism"]["map"] == [0, 3, 2, 1]


def test_analyze_bad_measure(capsys):
    code, doc = report(capsys, "analyze", "--group", Z4, "--measure", SPECS / "z4_bad_sum.json")
    assert code != 0
    assert doc["status"] == "ERROR" and doc["reason"] == "invalid_measure"
    assert "3/2" in doc["message"]


def test_analyze_missing_file(capsys):
    code, doc = report(capsys, "analyze", "--group", "/nonexistent.json", "--measure", SPECS / "z4_point_2.json")
    assert code != 0 and doc["reason"] == "spec_unreadable"


def test_analyze_z_must_be_in_support(capsys):
    code, doc = report(capsys, "analyze", "--group", Z4, "--measure", SPECS / "z4_point_2.json", "--z", 1)
    assert code != 0 and doc["reason"] == "usage"


def test_analyze_byte_identical(capsys):
    args = ("analyze", "--group", SPECS / "s3.json", "--automorphism", "aut2", "--measure", SPECS / "s3_mixed.json")
    assert run(capsys, *args) == run(capsys, *args)


def test_solve_haar_window(capsys):
    code, doc = report(
        capsys, "solve", "--group", Z4, "--measure", SPECS / "z4_uniform_1_3.json", "--k-window=-4:4"
    )
    assert code == 0 and doc["status"] == "PASS"
    assert sorted(doc["verdicts"], key=int) == [str(k) for k in range(-4, 5)]
    assert all(doc["verdicts"].values())


def test_solve_two_coset_mixture(capsys):
    code, doc = report(
        capsys, "solve", "--group", Z4, "--measure", SPECS / "z4_uniform_1_3.json",
        "--lambda", SPECS / "z4_two_cosets.json",
    )
    assert code == 0
    assert doc["lambda0_cosets"] == [[0, 2], [1, 3]] and not doc["extremal"]


def test_solve_not_invariant(capsys):
    code, doc = report(
        capsys, "solve", "--group", Z4, "--measure", SPECS / "z4_uniform_1_3.json",
        "--lambda", SPECS / "z4_not_invariant.json",
    )
    assert code != 0
    assert doc["reason"] == "not_invariant" and doc["witness"] == 2


def test_solve_csv(capsys, tmp_path):
    out = tmp_path / "table.csv"
    code, _ = run(
        capsys, "solve", "--group", Z4, "--measure", SPECS / "z4_uniform_1_3.json",
        "--k-window", "0:1", "--format", "csv", "--out", out,
    )
    assert code == 0
    assert out.read_text() == "k,element,weight\n0,0,1/2\n0,2,1/2\n1,1,1/2\n1,3,1/2\n"


def test_extremals(capsys):
    code, doc = report(capsys, "extremals", "--group", Z4, "--measure", SPECS / "z4_uniform_1_3.json")
    assert code == 0
    assert [e["lambda0"] for e in doc["extremals"]] == [{"0": "1/2", "2": "1/2"}, {"1": "1/2", "3": "1/2"}]
    assert doc["midpoints"][0]["coset_count"] == 2


def test_corpus_filter(capsys):
    code, doc = report(capsys, "corpus", "--filter", "Z3", "--measures", 3)
    assert code == 0
    assert doc["models"] == 6 and doc["failed"] == 0


def test_corpus_injected_failure(capsys):
    code, doc = report(capsys, "corpus", "--filter", "Z4", "--measures", 3, "--inject-failure")
    assert code != 0
    assert doc["failed"] == 1 and doc["reason"] == "invariant_failed"
    assert doc["failures"][0]["checks"] == ["correspondence"]


def test_corpus_empty_filter(capsys):
    code, doc = report(capsys, "corpus", "--filter", "nothing")
    assert code != 0 and "no models selected" in doc["message"]


def test_corpus_workers_do_not_change_report(capsys):
    serial = run(capsys, "corpus", "--filter", "S3", "--measures", 2)
    parallel = run(capsys, "corpus", "--filter", "S3", "--measures", 2, "--workers", 2)
    assert serial == parallel


def test_torus_stationary_small_sample_flagged(capsys):
    code, doc = report(capsys, "torus-remark", "--samples", 100)
    assert code != 0
    assert doc["reason"] == "insufficient_samples"
    assert not doc["stationarity"]["mc_margin_ok"]
    assert "Monte-Carlo margin" in doc["warning"]


def test_torus_stationary_defaults_with_csv(capsys, tmp_path):
    side = tmp_path / "spec.csv"
    code, doc = report(capsys, "torus-remark", "--csv", side)
    assert code == 0 and doc["status"] == "PASS"
    assert doc["invariance"]["all_witnessed"] and doc["invariance"]["subgroups"] == 31
    lines = side.read_text().splitlines()
    assert lines[0] == "n1,n2,re,im" and len(lines) == 122


def test_torus_t1_zero_noise(capsys, tmp_path):
    out = tmp_path / "traj.csv"
    code, _ = run(capsys, "torus-t1", "--noise", "0", "--samples", 5, "--burn-in", 0, "--format", "csv", "--out", out)
    assert code == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "k,eta" and all(r.endswith(",0.0") for r in rows[1:])


@pytest.mark.parametrize("noise,orbit", [("0.7", 10), ("1/3", 3), ("0,1/2", 2)])
def test_torus_t1_rational_noise_stays_on_grid(capsys, noise, orbit):
    # 0.7 is not a binary float, so raw values drift; the grid count must not
    code, doc = report(capsys, "torus-t1", f"--noise={noise}", "--samples", 20000)
    assert code == 0 and doc["grid_distinct_values"] == orbit
    assert doc["grid_offset"] < 1e-6


def test_torus_t1_default(capsys):
    code, doc = report(capsys, "torus-t1")
    assert code == 0 and doc["ks_to_uniform"] < 0.02


def test_bad_arguments_exit_nonzero():
    with pytest.raises(SystemExit) as info:
        main(["torus-remark", "--samples", "-5"])
    assert info.value.code != 0
    with pytest.raises(SystemExit):
        main(["solve", "--group", Z4, "--measure", Z4, "--k-window", "3:1"])


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "groupsde.cli", "analyze", "--group", Z4, "--measure", str(SPECS / "z4_point_2.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["K_mu"] == [0]

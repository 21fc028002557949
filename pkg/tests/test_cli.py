"""End-to-end command-line checks run in-process through ``main``."""

from __future__ import annotations

import json

import numpy as np
import pytest

from kyle_stability.cli import main
from kyle_stability.reports import loads_report

from conftest import (
    EIG_EQ_N3,
    EIG_SECOND_N3,
    EQ_BETA_N3,
    SECOND_FP_N3,
)


def _run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_equilibrium_json_digits(capsys):
    code, out, _ = _run(capsys, ["equilibrium", "--n", "3"])
    assert code == 0
    report = loads_report(out)
    assert report["schema"] == "kyle-stability/1"
    assert report["command"] == "equilibrium"
    assert report["inputs"]["n"] == 3
    beta = np.asarray(report["result"]["beta"])
    assert np.max(np.abs(beta - EQ_BETA_N3)) <= 1e-12
    assert report["result"]["recursion_check"]["ok"] is True


def test_equilibrium_rejects_bad_round_count(capsys):
    code, out, err = _run(capsys, ["equilibrium", "--n", "0"])
    assert code == 2
    assert out == ""
    assert "error" in err


def test_iterate_converges_near_attractor(capsys):
    start = ",".join(repr(float(x) + 1e-4) for x in SECOND_FP_N3)
    code, out, _ = _run(
        capsys, ["iterate", "--n", "3", "--start", start, "--expect-converge"]
    )
    assert code == 0
    report = loads_report(out)
    limit = np.asarray(report["result"]["limit"])
    assert np.max(np.abs(limit - SECOND_FP_N3)) <= 1e-8
    assert report["result"]["verdict"] == "converged"


def test_iterate_exit_four_when_not_converged(capsys):
    code, out, _ = _run(
        capsys,
        [
            "iterate",
            "--n",
            "3",
            "--start",
            "2,2,2",
            "--max-iter",
            "2",
            "--expect-converge",
        ],
    )
    assert code == 4
    report = loads_report(out)
    assert report["result"]["verdict"] in ("max_iter", "diverged")


def test_iterate_exit_three_on_domain_exit(capsys):
    code, out, _ = _run(capsys, ["iterate", "--n", "3", "--start", "0,0,0"])
    assert code == 3
    report = loads_report(out)
    assert report["result"]["verdict"] == "left_domain"
    assert report["result"]["limit"] is None


def test_perturb_last_coordinate_returns(capsys):
    code, out, _ = _run(
        capsys,
        ["perturb", "--n", "4", "--coord", "last", "--delta", "1e-3", "--expect-converge"],
    )
    assert code == 0
    report = loads_report(out)
    rows = report["result"]
    assert len(rows) == 1
    assert rows[0]["coord"] == 4
    assert rows[0]["verdict"] == "converged-to-equilibrium"
    assert rows[0]["returned"] is True


def test_perturb_battery_exit_four(capsys):
    code, out, _ = _run(
        capsys, ["perturb", "--n", "4", "--battery", "--expect-converge"]
    )
    assert code == 4
    report = loads_report(out)
    returned = {row["coord"]: row["returned"] for row in report["result"]}
    assert returned == {1: False, 2: False, 3: True, 4: True}


def test_jacobian_default_point_matches_closed_form(capsys):
    code, out, _ = _run(capsys, ["jacobian", "--n", "2"])
    assert code == 0
    fd = np.asarray(loads_report(out)["result"]["jacobian"])
    code, out, _ = _run(capsys, ["jacobian", "--n", "2", "--closed-form"])
    assert code == 0
    closed = np.asarray(loads_report(out)["result"]["jacobian"])
    assert np.max(np.abs(fd - closed)) <= 1e-7


def test_jacobian_out_of_domain_exit_three(capsys):
    code, out, err = _run(capsys, ["jacobian", "--n", "2", "--point", "0,0"])
    assert code == 3
    assert "error" in err


def test_jacobian_closed_form_maker_rejected(capsys):
    code, _, err = _run(
        capsys, ["jacobian", "--n", "2", "--operator", "maker", "--closed-form"]
    )
    assert code == 2
    assert "insider" in err


def test_stability_rejects_non_fixed_point(capsys):
    code, _, err = _run(capsys, ["stability", "--n", "2", "--point", "1,1"])
    assert code == 2
    assert "error" in err


def test_stability_equilibrium_classification(capsys):
    code, out, _ = _run(capsys, ["stability", "--n", "3"])
    assert code == 0
    result = loads_report(out)["result"]
    assert result["classification"] == "repellent"
    assert abs(result["spectral_radius"] - 2.160954) <= 1e-4


def test_simulate_json_and_csv(capsys):
    argv = ["simulate", "--n", "3", "--paths", "5000", "--seed", "7"]
    code, out, _ = _run(capsys, argv)
    assert code == 0
    result = loads_report(out)["result"]
    assert result["n_paths"] == 5000
    assert np.isfinite(result["mean_profit"])
    assert "terminal_variance_check" in result
    code, out, _ = _run(capsys, argv + ["--format", "csv"])
    assert code == 0
    header = out.splitlines()[0]
    assert "mean_profit" in header
    assert "terminal_variance_check.ok" in header


def test_simulate_scaled_strategy_drops_check(capsys):
    code, out, _ = _run(
        capsys,
        ["simulate", "--n", "3", "--paths", "5000", "--seed", "7", "--strategy-scale", "0.5"],
    )
    assert code == 0
    result = loads_report(out)["result"]
    assert "terminal_variance_check" not in result


def test_tables_eigenvalues_reference(capsys):
    code, out, _ = _run(capsys, ["tables", "--which", "eigenvalues", "--n", "3"])
    assert code == 0
    result = loads_report(out)["result"]
    got_eq = np.asarray(result["equilibrium"]["eigenvalues"], dtype=complex)
    got_second = np.asarray(result["second_fixed_point"]["eigenvalues"], dtype=complex)
    assert np.max(np.abs(got_eq - EIG_EQ_N3)) <= 1e-4
    assert np.max(np.abs(got_second - EIG_SECOND_N3)) <= 1e-4


def test_tables_key_results_csv(capsys):
    code, out, _ = _run(capsys, ["tables", "--which", "key-results", "--format", "csv"])
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 9
    assert "n_periods" in lines[0]
    assert "classification" in lines[0]
    assert "spectral_radius" in lines[0]


def test_tables_perturbation_limit(capsys):
    code, out, _ = _run(
        capsys, ["tables", "--which", "perturbation-limit", "--expect-converge"]
    )
    assert code == 0
    result = loads_report(out)["result"]
    assert result["verdict"] == "converged"
    assert np.max(np.abs(np.asarray(result["limit"]) - SECOND_FP_N3)) <= 1e-10


def test_out_flag_writes_file(tmp_path, capsys):
    target = tmp_path / "report.json"
    code, out, _ = _run(
        capsys, ["equilibrium", "--n", "2", "--out", str(target)]
    )
    assert code == 0
    assert out == ""
    report = loads_report(target.read_text(encoding="utf-8"))
    assert report["command"] == "equilibrium"
    assert len(report["result"]["beta"]) == 2


def test_unknown_flag_exits_two(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["equilibrium", "--bogus"])
    assert excinfo.value.code == 2


def test_json_is_strict_with_nonfinite_payload(capsys):
    # A left-domain trace embeds inf iterates; the JSON must stay strict.
    code, out, _ = _run(capsys, ["iterate", "--n", "3", "--start", "0,0,0"])
    assert code == 3
    json.loads(out)
    assert "Infinity" not in out

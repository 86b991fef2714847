import json
from pathlib import Path

import pytest

from parkdyn.cli import main
from parkdyn.microsim import ScenarioConfig
from parkdyn.network import DurationDistribution, load_network


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert (
        main(
            [
                "net", "build", "--rows", "4", "--cols", "4", "--total-spots", "80",
                "--lot-capacity", "15", "--out", str(root / "net.json"),
            ]
        )
        == 0
    )
    sc = ScenarioConfig(
        parker_count=150,
        passer_count=600,
        captive_spots=25,
        alpha_off=-1.0,
        beta=0.3,
        duration=DurationDistribution("uniform", 0.0, 0.5),
        horizon=0.5,
    )
    (root / "scenario.json").write_text(json.dumps(sc.to_dict()))
    rc = main(
        [
            "micro", "run", "--net", str(root / "net.json"), "--config",
            str(root / "scenario.json"), "--seeds", "0,1,2,3,4", "--out", str(root / "runs"),
        ]
    )
    assert rc == 0
    rc = main(
        ["calibrate", "--runs", str(root / "runs"), "--out", str(root / "calibration.json")]
    )
    assert rc == 0
    return root


def test_net_build_and_check(workdir):
    net = load_network(workdir / "net.json")
    assert net.total_parking_capacity == 80
    assert main(["net", "check", "--net", str(workdir / "net.json")]) == 0


def test_net_check_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"nodes": [], "links": [{"id": "x"}]}')
    assert main(["net", "check", "--net", str(bad)]) == 1


def test_micro_outputs_exist(workdir):
    for seed in range(5):
        d = workdir / "runs" / f"seed_{seed}"
        for name in ("events.csv", "nfd.csv", "metrics.json", "series.csv"):
            assert (d / name).exists()
    meta = json.loads((workdir / "runs" / "run_meta.json").read_text())
    assert "written_at" in meta


def test_micro_rerun_byte_identical(workdir, tmp_path):
    rc = main(
        [
            "micro", "run", "--net", str(workdir / "net.json"), "--config",
            str(workdir / "scenario.json"), "--seeds", "1", "--out", str(tmp_path / "again"),
        ]
    )
    assert rc == 0
    a = (workdir / "runs" / "seed_1" / "events.csv").read_bytes()
    b = (tmp_path / "again" / "seed_1" / "events.csv").read_bytes()
    assert a == b


def test_theory_sweep_outputs(workdir):
    out = workdir / "theory"
    rc = main(
        ["theory", "sweep", "--vc", "10,30", "--k-step", "1.0", "--brute-step", "0.05",
         "--out", str(out)]
    )
    assert rc == 0
    header = (out / "envelopes.csv").read_text().splitlines()[0]
    assert header == "v_c,K,Vmax_formula,Vmin_formula,Vmax_brute,Vmin_brute"
    report = json.loads((out / "brute_check.json").read_text())
    assert all(v["max_branch_discontinuity"] <= 1e-9 for v in report.values())


def test_calibration_file_contents(workdir):
    report = json.loads((workdir / "calibration.json").read_text())
    # the three estimands of the calibration pipeline
    assert set(report["nfd"]) == {"v0", "n0", "w"}
    assert report["l_m_on"] > 0 and report["l_m_off"] > 0 and report["l_m_pass"] > 0
    assert report["distance_model"]["kind"] == "exp-distance"


def test_estimators_fit_command(workdir):
    out = workdir / "dist_fit.json"
    rc = main(
        ["estimators", "fit", "--runs", str(workdir / "runs"), "--kind", "exp-distance",
         "--out", str(out)]
    )
    assert rc == 0
    fit = json.loads(out.read_text())
    assert fit["params"]["a"] > 0


def test_macro_run_columns(workdir):
    out = workdir / "macro_run.csv"
    rc = main(
        ["macro", "run", "--net", str(workdir / "net.json"), "--config",
         str(workdir / "scenario.json"), "--calibration", str(workdir / "calibration.json"),
         "--out", str(out)]
    )
    assert rc == 0
    header = out.read_text().splitlines()[0].split(",")
    assert header == ["t", "n_m_on", "n_m_off", "n_m_pass", "n_c", "n_on", "n_off",
                      "v", "O_on", "o_c", "q_off_on", "q_out_on", "q_out_off"]


def test_validate_command(workdir):
    out = workdir / "validation.json"
    rc = main(
        ["validate", "--net", str(workdir / "net.json"), "--config",
         str(workdir / "scenario.json"), "--calibration", str(workdir / "calibration.json"),
         "--runs", str(workdir / "runs"), "--out", str(out)]
    )
    assert rc == 0
    metrics = json.loads(out.read_text())
    assert set(metrics) == {"n_on", "n_off", "n_active", "v"}


def test_mpc_run_command(workdir):
    out = workdir / "mpc"
    rc = main(
        ["mpc", "run", "--net", str(workdir / "net.json"), "--config",
         str(workdir / "scenario.json"), "--calibration", str(workdir / "calibration.json"),
         "--seeds", "0", "--starts", "2", "--budget", "20", "--out", str(out)]
    )
    assert rc == 0
    assert (out / "mpc_log.csv").exists()
    assert (out / "prediction_vs_plant.csv").exists()


def test_compare_requires_calibration(workdir, tmp_path):
    rc = main(
        ["compare", "--modes", "no-price", "--net", str(workdir / "net.json"),
         "--config", str(workdir / "scenario.json"), "--calibration",
         str(tmp_path / "missing.json"), "--seeds", "0", "--out", str(tmp_path / "cmp")]
    )
    assert rc == 1


def test_compare_emits_rows(workdir):
    out = workdir / "cmp"
    rc = main(
        ["compare", "--modes", "no-price,full-static", "--net", str(workdir / "net.json"),
         "--config", str(workdir / "scenario.json"), "--calibration",
         str(workdir / "calibration.json"), "--seeds", "0,1", "--starts", "2",
         "--budget", "20", "--out", str(out)]
    )
    assert rc == 0
    lines = (out / "comparison.csv").read_text().splitlines()
    assert len(lines) == 1 + 4  # header + 2 modes x 2 seeds
    assert lines[0].startswith("mode,seed,deadweight_veh_hr")


def test_unknown_compare_mode_rejected(workdir, tmp_path):
    rc = main(
        ["compare", "--modes", "surge", "--net", str(workdir / "net.json"),
         "--config", str(workdir / "scenario.json"), "--calibration",
         str(workdir / "calibration.json"), "--seeds", "0", "--out", str(tmp_path / "x")]
    )
    assert rc == 1

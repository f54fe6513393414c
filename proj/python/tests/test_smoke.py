import json

import pytest

import retrialq

ONE_RATE = {
    "rates": {k: 0.5 for k in ("lambda_minus", "lambda_e", "lambda_e_plus", "lambda_r", "lambda_r_plus")},
    "service": {"kind": "exponential", "rate": 2.0},
    "seek": {"kind": "exponential", "rate": 3.0},
}
PROBLEM = {"lambda_plus": 2.0, "lambda_minus": 1.0, "M": 4, "mu": 1.5, "N": 3, "alpha": 3.0,
           "ex_bound": 20.0, "ordering": True}


def test_version():
    assert retrialq.__version__ == "0.3.0"


def test_one_rate_report():
    r = retrialq.analyze(ONE_RATE, pmf_max=8)
    assert r["stable"]
    assert r["pi0"] == pytest.approx(0.708333333, abs=1e-9)
    assert r["TH_S"] == pytest.approx(0.5, abs=1e-12)
    assert r["P_idle"] == pytest.approx(0.75, abs=1e-12)


def test_unstable_and_bad_input():
    heavy = json.loads(json.dumps(ONE_RATE))
    for k in heavy["rates"]:
        heavy["rates"][k] = 1.6
    assert retrialq.stability_margin(heavy) < 0
    assert not retrialq.analyze(heavy)["stable"]
    with pytest.raises(retrialq.UnstableModel):
        retrialq.departure_orbit_pmf(heavy, 4)
    with pytest.raises(retrialq.ConfigError):
        retrialq.analyze({"rates": {}})
    with pytest.raises(ValueError):
        retrialq.analyze("{not json")


def test_pgf_matches_truncated_chain():
    pgf = retrialq.departure_orbit_pmf(ONE_RATE, 40)
    chain = retrialq.truncated_chain(ONE_RATE, 200)
    assert max(abs(a - b) for a, b in zip(pgf, chain)) < 1e-8


def test_simulation_covers_closed_form():
    est = retrialq.simulate(ONE_RATE, departures=50_000, reps=5, seed=3)
    th = est["departure_rate"]
    assert abs(th["mean"] - 0.5) <= 3 * th["half_width"]
    again = retrialq.simulate(ONE_RATE, departures=50_000, reps=5, seed=3)
    assert est == again


def test_optimize_and_evaluate():
    sol = retrialq.optimize(PROBLEM, restarts=4, seed=2)
    assert sol["feasible"]
    e = retrialq.evaluate(PROBLEM, sol["q"])
    assert e["feasible"]
    assert e["TH"] == pytest.approx(sol["TH"], abs=1e-6)
    assert retrialq.evaluate(PROBLEM, [0.0547, 0.0287, 0.1719, 0.033])["TH"] == pytest.approx(0.3082, abs=5e-4)


def test_cli_in_process(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps(ONE_RATE))
    code, out, err = retrialq.run_cli("analyze", path)
    assert code == 0
    assert json.loads(out)["manifest"]["command"] == "analyze"
    assert retrialq.run_cli("nonsense")[0] == 64

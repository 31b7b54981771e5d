"""One labelled test per acceptance check; the terminal summary prints PASS/FAIL per label."""

import json
import math
import time

import numpy as np
import pytest

from osctest.criteria import INCONCLUSIVE, OSCILLATORY, PRECONDITION_FAILED, evaluate_all, prepare
from osctest.cli import main
from osctest.kernels import autonomous_lambda, build_kernel_delay, eval_a
from osctest.piecewise import PiecewiseCellFunction, affine, constant
from osctest.problem import DelayProblem, Term, validate
from osctest.quadrature import Grid
from osctest.simulator import integrate_delay, residual_check

acc = pytest.mark.acceptance

P05 = 0.5 * math.exp(-0.5)
P1 = 1 / math.e
TABLE = {
    P05: {1: 0.738403, 2: 0.663183, 10: 0.606725, 18: 0.606531},
    P1: {1: 0.692201, 2: 0.587744, 10: 0.430949, 50: 0.381994, 100: 0.375068, 1000: 0.368613},
}


def _run_cli(argv, tmp_path_factory, name):
    out = tmp_path_factory.mktemp(name) / "report.json"
    start = time.perf_counter()
    code = main(argv + ["--report", str(out)])
    elapsed = time.perf_counter() - start
    doc = json.loads(out.read_text())
    return code, doc, elapsed


def _find(doc, cid, r=None):
    [c] = [c for c in doc["criteria"] if c["id"] == cid and c["r"] == r]
    return c


# -- 1. autonomous table -------------------------------------------------


@acc("AC1 autonomous table, p = 0.5e^-0.5, six decimals")
def test_ac1_half():
    start = time.perf_counter()
    for r, want in TABLE[P05].items():
        assert round(1 / autonomous_lambda(P05, r), 6) == want, r
    assert time.perf_counter() - start < 0.1


@acc("AC1 autonomous table, p = 1/e, six decimals")
def test_ac1_critical():
    start = time.perf_counter()
    for r, want in TABLE[P1].items():
        assert round(1 / autonomous_lambda(P1, r), 6) == want, r
    assert time.perf_counter() - start < 0.1


# -- 2. generic pipeline -------------------------------------------------


@acc("AC2 generic kernel pipeline reproduces r = 1, 2, 10 within 1e-4 in < 10 s")
def test_ac2_generic_pipeline():
    start = time.perf_counter()
    prob = DelayProblem((Term(constant(P05), affine(-1.0, 1.0)),))
    grid = Grid(np.linspace(0.0, 30.0, 30001), 1e-3)
    tables = build_kernel_delay(prob, grid, 10)
    for r in (1, 2, 10):
        assert 1 / eval_a(tables, r, 25.0, 24.0) == pytest.approx(TABLE[P05][r], abs=1e-4), r
    assert time.perf_counter() - start < 10


# -- 3. two-delay worked example -----------------------------------------


@pytest.fixture(scope="module")
def ex31_run(tmp_path_factory):
    return _run_cli(["check", "ex31", "--r-max", "1", "--step", "1e-3", "--period", "2"], tmp_path_factory, "ex31")


@acc("AC3 ex31 THM_2_4 r=1 estimate 1.22696 +- 1e-3")
def test_ac3_estimate(ex31_run):
    _, doc, _ = ex31_run
    assert _find(doc, "THM_2_4", 1)["estimate"] == pytest.approx(1.22696, abs=1e-3)


@acc("AC3 ex31 THM_2_4 r=1 verdict OSCILLATORY, exit 0")
def test_ac3_verdict(ex31_run):
    code, doc, _ = ex31_run
    assert code == 0
    assert _find(doc, "THM_2_4", 1)["verdict"] == OSCILLATORY
    assert doc["problem"]["window"][1] - doc["problem"]["window"][0] >= 10 * 2


@acc("AC3 ex31 LADDE_1_8 value 2.1/(2.2e) +- 1e-6")
def test_ac3_ladde(ex31_run):
    _, doc, _ = ex31_run
    assert _find(doc, "LADDE_1_8")["estimate"] == pytest.approx(2.1 / (2.2 * math.e), abs=1e-6)


@acc("AC3 ex31 HUNT_YORKE_1_10 within 1e-9 of 1/e, INCONCLUSIVE")
def test_ac3_hunt_yorke(ex31_run):
    _, doc, _ = ex31_run
    c = _find(doc, "HUNT_YORKE_1_10")
    assert abs(c["estimate"] - 1 / math.e) < 1e-9
    assert c["verdict"] == INCONCLUSIVE


@acc("AC3 ex31 check runtime < 30 s")
def test_ac3_runtime(ex31_run):
    assert ex31_run[2] < 30


# -- 4. advanced worked example ------------------------------------------


@pytest.fixture(scope="module")
def ex32_run(tmp_path_factory):
    return _run_cli(["check", "ex32", "--r-max", "2", "--step", "1e-3"], tmp_path_factory, "ex32")


@acc("AC4 ex32 THM_2_4A f_1 = 0.777403 +- 1e-3")
def test_ac4_f1(ex32_run):
    _, doc, _ = ex32_run
    assert _find(doc, "THM_2_4A", 1)["estimate"] == pytest.approx(0.777403, abs=1e-3)


@acc("AC4 ex32 THM_2_4A INCONCLUSIVE at r=1")
def test_ac4_r1_verdict(ex32_run):
    _, doc, _ = ex32_run
    assert _find(doc, "THM_2_4A", 1)["verdict"] == INCONCLUSIVE


@acc("AC4 ex32 THM_2_4A f_2 = 1.558893 +- 1e-3")
def test_ac4_f2(ex32_run):
    _, doc, _ = ex32_run
    assert _find(doc, "THM_2_4A", 2)["estimate"] == pytest.approx(1.558893, abs=1e-3)


@acc("AC4 ex32 THM_2_4A OSCILLATORY at r=2")
def test_ac4_r2_verdict(ex32_run):
    code, doc, _ = ex32_run
    assert code == 0
    assert _find(doc, "THM_2_4A", 2)["verdict"] == OSCILLATORY


@acc("AC4 ex32 LADAS_ADV_1_9 = 0.35 +- 1e-9, INCONCLUSIVE")
def test_ac4_ladas(ex32_run):
    c = _find(ex32_run[1], "LADAS_ADV_1_9")
    assert c["estimate"] == pytest.approx(0.35, abs=1e-9)
    assert c["verdict"] == INCONCLUSIVE


@acc("AC4 ex32 ZHOU_1_11 = 0.3675 +- 1e-9, INCONCLUSIVE")
def test_ac4_zhou(ex32_run):
    c = _find(ex32_run[1], "ZHOU_1_11")
    assert c["estimate"] == pytest.approx(0.3675, abs=1e-9)
    assert c["verdict"] == INCONCLUSIVE


@acc("AC4 ex32 check runtime < 60 s")
def test_ac4_runtime(ex32_run):
    assert ex32_run[2] < 60


# -- 5. recurring constant delay -----------------------------------------


@acc("AC5 ex22 validation flags the lim tau = inf violation (exit 2)")
def test_ac5_validation(load_fixture, capsys):
    pf = load_fixture("ex22")
    rep = validate(pf.problem, pf.window, 1e-3)
    assert not rep.ok
    assert [c.name for c in rep.failures] == ["lim tau_1(t) = inf"]
    assert main(["check", "ex22"]) == 2
    assert "lim tau_1(t) = inf" in capsys.readouterr().err


@acc("AC5 ex22 integral of p over [g(t), t] = 1.6 +- 1e-9 at t = 2k + 0.8")
def test_ac5_raw_integral(load_fixture):
    pf = load_fixture("ex22")
    ctx = prepare(pf.problem, pf.window, h=1e-3, r_max=1, period_hint=pf.period_hint)
    t = np.array([2 * k + 0.8 for k in range(2, 10)])
    vals = ctx.sum_p(t) - ctx.sum_p(ctx.envelope(t))
    np.testing.assert_allclose(vals, 1.6, atol=1e-9)


@acc("AC5 ex22 corrected candidate residual <= 1e-10 on smooth pieces")
def test_ac5_residual(load_fixture, capsys):
    pf = load_fixture("ex22")
    cand = PiecewiseCellFunction.from_dict(pf.raw["candidate"])
    assert residual_check(pf.problem, cand, pf.history, np.linspace(0.0, 20.0, 20001)) <= 1e-10
    assert main(["simulate", "ex22", "--report", "-"]) == 0
    assert json.loads(capsys.readouterr().out)["max_residual"] <= 1e-10


# -- 7. never a false positive -------------------------------------------


@pytest.mark.parametrize(
    "p",
    [
        pytest.param(0.1 / math.e, marks=acc("AC7 no false positive up to r = 100, p = 0.1/e")),
        pytest.param(P05, marks=acc("AC7 no false positive up to r = 100, p = 0.5e^-0.5")),
        pytest.param(P1, marks=acc("AC7 no false positive up to r = 100, p = 1/e")),
    ],
)
def test_ac7_guard(p):
    prob = DelayProblem((Term(constant(p), affine(-1.0, 1.0)),))
    ctx = prepare(prob, (105.0, 115.0), h=1e-2, r_max=100, period_hint=None)
    assert ctx.grid.start == 0.0 and ctx.grid.end == 115.0
    reps = evaluate_all(ctx)
    assert {rep.r for rep in reps if rep.id == "THM_2_4"} == set(range(1, 101))
    fired = [(rep.id, rep.r) for rep in reps if rep.verdict == OSCILLATORY]
    assert fired == []
    assert all(rep.verdict in (INCONCLUSIVE, PRECONDITION_FAILED) for rep in reps)


# -- 8. simulation -------------------------------------------------------


@acc("AC8 critical autonomous trajectory tracks e^-t within 1e-5 on [0, 10]")
def test_ac8_critical(tmp_path, capsys):
    assert main(["simulate", "ex21_alpha1", "--horizon", "10", "--csv", str(tmp_path), "--report", "-"]) == 0
    capsys.readouterr()
    data = np.loadtxt(tmp_path / "trajectory.csv", delimiter=",", skiprows=1)
    assert data[0, 0] == 0.0 and data[-1, 0] == 10.0
    assert np.max(np.abs(data[:, 1] - np.exp(-data[:, 0]))) < 1e-5


@acc("AC8 ex31 trajectory from constant history changes sign by T = 100")
def test_ac8_ex31_sign_change(capsys):
    assert main(["simulate", "ex31", "--horizon", "100", "--report", "-"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["sign_changes"] >= 1
    assert min(doc["locations"]) < 100


@acc("AC8 decay bound x(t) a_r(t,s) <= x(s)(1 + 10h) on positive stretches")
def test_ac8_decay_bound(load_fixture):
    h = 1e-3
    for name, horizon in (("ex21_alpha05", 20.0), ("ex21_alpha1", 20.0), ("ex31", 30.0)):
        pf = load_fixture(name)
        traj = integrate_delay(pf.problem, pf.history, horizon, h)
        neg = np.flatnonzero(traj.x <= 0)
        stop = neg[0] if neg.size else traj.x.size
        t, x = traj.t[:stop], traj.x[:stop]
        assert t.size > 1000
        tables = build_kernel_delay(pf.problem, Grid(traj.t, h), 5)
        for r in range(1, 6):
            for i in range(0, t.size, 250):
                later = slice(i, t.size, 97)
                bound = x[i] * (1 + 10 * h)
                assert np.all(x[later] * eval_a(tables, r, t[later], t[i]) <= bound), (name, r, t[i])

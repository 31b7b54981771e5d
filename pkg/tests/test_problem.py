import json
import math

import pytest

from osctest.piecewise import Cell, PiecewiseCellFunction, affine, constant
from osctest.problem import (
    AdvancedProblem,
    DelayProblem,
    ProblemFormatError,
    Term,
    load_problem,
    parse_problem,
    validate_advanced,
    validate_delay,
)


def test_v_shaped_delay_example_is_valid(load_fixture):
    pf = load_fixture("ex31")
    rep = validate_delay(pf.problem, pf.window, 1e-3)
    assert rep.ok, rep.failures
    assert rep.bounded_deviation
    # t - tau_2 peaks at t = 2k + 2: 2k + 2 - (2k - 1.1)
    assert rep.max_deviation == pytest.approx(3.1)


def test_recurring_constant_delay_fails_limit_check(load_fixture):
    pf = load_fixture("ex22")
    rep = validate_delay(pf.problem, pf.window, 1e-3)
    assert not rep.ok
    [fail] = rep.failures
    assert fail.name == "lim tau_1(t) = inf"
    assert "cell 0" in fail.witness


def test_negative_coefficient_fails_at_first_node():
    prob = DelayProblem((Term(constant(-1.0), affine(-1.0, 1.0)),))
    rep = validate_delay(prob, (0.0, 5.0), 1e-2)
    [fail] = rep.failures
    assert fail.name == "p_1 >= 0"
    assert fail.witness.startswith("p_1(0)")


def test_argument_ahead_of_t_fails_delay_check():
    prob = DelayProblem((Term(constant(1.0), affine(0.5, 1.0)),))
    assert "tau_1(t) <= t" in [c.name for c in validate_delay(prob, (0.0, 5.0), 1e-2).failures]


def test_advanced_example_bound(load_fixture):
    pf = load_fixture("ex32")
    rep = validate_advanced(pf.problem, pf.window, 1e-3)
    assert rep.ok
    # sigma_2 - t peaks at the corner t = 2k + 2: 4(2k+2) - 6k - 1.9 - (2k+2) = 4.1
    assert rep.advance_bound == pytest.approx(4.1)


def test_unbounded_advance_is_flagged():
    prob = AdvancedProblem((Term(constant(1.0), affine(0.0, 2.0)),))
    rep = validate_advanced(prob, (0.0, 5.0), 1e-2)
    assert not rep.ok
    assert math.isinf(rep.advance_bound)


def test_advanced_argument_behind_t_fails():
    prob = AdvancedProblem((Term(constant(1.0), affine(-0.5, 1.0)),))
    assert "sigma_1(t) >= t" in [c.name for c in validate_advanced(prob, (0.0, 5.0), 1e-2).failures]


def test_start_is_latest_t0():
    prob = DelayProblem((Term(constant(1.0, 0.0), affine(-1.0, 1.0, 2.0)),))
    assert prob.start == 2.0


def test_parse_errors_carry_field_paths():
    with pytest.raises(ProblemFormatError, match="type"):
        parse_problem({"type": "neutral", "terms": []})
    with pytest.raises(ProblemFormatError, match=r"terms\[0\]: expected an object"):
        parse_problem({"type": "delay", "terms": [{"p": {}}]})
    with pytest.raises(ProblemFormatError, match=r"terms\[0\]\.p: missing field 't0'"):
        parse_problem({"type": "delay", "terms": [{"p": {"cells": []}, "arg": {}}]})
    with pytest.raises(ProblemFormatError, match="window"):
        parse_problem(
            {
                "type": "delay",
                "terms": [{"p": constant(1.0).to_dict(), "arg": affine(-1.0, 1.0).to_dict()}],
                "window": [3, 1],
            }
        )


def test_json_syntax_error_reports_line(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "type": "delay",\n  "terms": [\n}\n')
    with pytest.raises(ProblemFormatError, match="line 4"):
        load_problem(bad)


def test_round_trip(tmp_path, load_fixture):
    pf = load_fixture("ex31")
    doc = pf.problem.to_dict()
    doc["window"] = list(pf.window)
    path = tmp_path / "p.json"
    path.write_text(json.dumps(doc))
    again = load_problem(path)
    assert again.problem == pf.problem
    assert again.window == pf.window


def test_history_parsed(load_fixture):
    pf = load_fixture("ex21_alpha1")
    assert pf.history(-1.0) == pytest.approx(math.e)
    assert pf.history.form == "exp"


def test_periodic_limit_check_uses_drift():
    # tau = t - 1 written as a period-1 pattern with c2 carrying the drift
    tau = PiecewiseCellFunction(0.0, 1.0, (Cell(0.0, 1.0, -1.0, 1.0, 0.0),))
    prob = DelayProblem((Term(constant(0.3), tau),))
    assert validate_delay(prob, (0.0, 5.0), 1e-2).ok
    stuck = PiecewiseCellFunction(0.0, 1.0, (Cell(0.0, 1.0, -1.0, 0.0, 0.0),))
    assert not validate_delay(DelayProblem((Term(constant(0.3), stuck),)), (0.0, 5.0), 1e-2).ok

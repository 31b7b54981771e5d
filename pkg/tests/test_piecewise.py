import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from osctest.piecewise import Cell, DomainError, PiecewiseCellFunction, affine, constant

TAU1 = PiecewiseCellFunction(1.0, 2.0, (Cell(1, 2, 1, -1, 4), Cell(2, 3, -7, 3, -4)))
SIGMA1 = PiecewiseCellFunction(1.0, 2.0, (Cell(1, 2, -2, 4, -6), Cell(2, 3, 10, -2, 6)))


@pytest.mark.parametrize("k", [0, 1, 5, 40])
def test_v_shaped_delay_on_falling_cell(k):
    assert TAU1(2 * k + 1.5) == pytest.approx(2 * k - 0.5, abs=1e-12)


@pytest.mark.parametrize("k", [0, 3, 17])
def test_advanced_argument_on_rising_cell(k):
    assert SIGMA1(2 * k + 1.25) == pytest.approx(2 * k + 3, abs=1e-12)


def test_constant_everywhere():
    f = constant(2.0)
    assert f(0.0) == 2.0
    assert f(1e6) == 2.0
    np.testing.assert_array_equal(f(np.linspace(0, 50, 7)), 2.0)


def test_below_start_is_domain_error():
    with pytest.raises(DomainError, match="below"):
        TAU1(0.5)


def test_cell_boundary_uses_right_cell_and_left_limit_uses_left_cell():
    step = PiecewiseCellFunction(0.0, 2.0, (Cell(0, 1, -1.0), Cell(1, 2, 0.0, 1.0)))
    assert step(2.0) == -1.0
    assert step.left_limit(2.0) == pytest.approx(2.0)
    assert step(1.0) == 1.0
    assert step.left_limit(1.0) == -1.0


def test_left_limit_equals_value_where_continuous():
    t = np.array([1.3, 2.4, 5.9])
    np.testing.assert_allclose(TAU1.left_limit(t), TAU1(t))


def test_exp_form_and_derivative():
    f = PiecewiseCellFunction(0.0, None, (Cell(0.0, math.inf, 0.0, -0.5),), form="exp")
    assert f(2.0) == pytest.approx(math.exp(-1.0))
    assert f.derivative(2.0) == pytest.approx(-0.5 * math.exp(-1.0))
    assert TAU1.derivative(2.5) == 3.0


def test_pieces_cover_interval():
    pcs = list(TAU1.pieces(1.0, 7.0))
    assert pcs[0].start == 1.0 and pcs[-1].end == 7.0
    for a, b in zip(pcs[:-1], pcs[1:]):
        assert a.end == pytest.approx(b.start)


def test_breakpoints():
    np.testing.assert_allclose(TAU1.breakpoints(1.5, 6.0), [1.5, 2, 3, 4, 5, 6])


@pytest.mark.parametrize(
    "cells,msg",
    [
        ((Cell(0, 1), Cell(1.5, 2)), "gap"),
        ((Cell(0, 1), Cell(0.5, 2)), "gap or overlap"),
        ((Cell(0, 0),), "empty"),
        ((Cell(0, 1.5),), "cover"),
        ((Cell(0.5, 2),), "t0"),
    ],
)
def test_cells_must_partition_the_period(cells, msg):
    with pytest.raises(ValueError, match=msg):
        PiecewiseCellFunction(0.0, 2.0, cells)


def test_aperiodic_needs_unbounded_last_cell():
    with pytest.raises(ValueError, match="unbounded"):
        PiecewiseCellFunction(0.0, None, (Cell(0, 3),))


def test_round_trip_dict():
    d = TAU1.to_dict()
    assert PiecewiseCellFunction.from_dict(d) == TAU1
    a = affine(-1.0, 1.0)
    assert PiecewiseCellFunction.from_dict(a.to_dict()) == a


def test_from_dict_reports_field_path():
    with pytest.raises(ValueError, match=r"terms\[0\]\.arg\.cells\[1\]: missing field 'u'"):
        PiecewiseCellFunction.from_dict(
            {"t0": 0, "period": 2, "cells": [{"l": 0, "u": 1}, {"l": 1}]}, "terms[0].arg"
        )


def test_growth_per_period():
    assert TAU1.growth_per_period(0) == pytest.approx(2.0)
    assert TAU1.growth_per_period(1) == pytest.approx(2.0)
    assert affine(-1.0, 1.0).growth_per_period(0, slope_offset=1.0) == 0.0


cells_st = st.lists(
    st.tuples(st.floats(0.1, 2.0), st.floats(-3, 3), st.floats(-2, 2), st.floats(-3, 3)), min_size=1, max_size=4
)


@given(cells_st, st.floats(0.0, 40.0))
def test_periodic_extension_shifts_by_c2(rows, t):
    widths = [w for w, *_ in rows]
    P = sum(widths)
    edges = np.concatenate([[0.0], np.cumsum(widths)])
    edges[-1] = P
    cells = tuple(Cell(edges[i], edges[i + 1], c0, c1, c2) for i, (_, c0, c1, c2) in enumerate(rows))
    f = PiecewiseCellFunction(0.0, P, cells)
    # one period later the same cell applies with k + 1
    k = math.floor(t / P)
    red = t - k * P
    assume(np.min(np.abs(edges - red)) > 1e-9 * max(1.0, t))
    i = int(np.searchsorted(edges, red, side="right") - 1)
    i = min(i, len(cells) - 1)
    c = cells[i]
    expect = c.c0 + c.c1 * t + c.c2 * k
    assert f(t) == pytest.approx(expect, abs=1e-9 * max(1.0, abs(expect)))

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ovbound import bate, grid
from ovbound.errors import InputError


def test_nine_cell_hand_table():
    # sorted beta* = 0.1 .. 0.9, position 1 + p (n - 1) = 1 + 8 p
    d = bate.from_bias_values(np.arange(1, 10) / 10, beta_int=1.0)
    got = [d.beta_star_quantiles[p] for p in bate.LEVELS]
    assert got == pytest.approx([0.12, 0.14, 0.5, 0.86, 0.88], abs=1e-12)
    assert d.bounding_set == pytest.approx((0.12, 0.88))
    assert not d.contains_zero


def test_empty_is_an_error():
    with pytest.raises(InputError):
        bate.quantiles([])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=40), st.floats(-3, 3))
def test_translation_equivariance(nu, shift):
    a = bate.from_bias_values(nu, beta_int=0.0)
    b = bate.from_bias_values(nu, beta_int=shift)
    for p in bate.LEVELS:
        assert b.beta_star_quantiles[p] == pytest.approx(a.beta_star_quantiles[p] + shift, abs=1e-9)
        assert b.nu_quantiles[p] == a.nu_quantiles[p]


def test_quantiles_are_monotone(rng):
    q = bate.quantiles(rng.normal(size=101))
    vals = [q[p] for p in bate.LEVELS]
    assert vals == sorted(vals)


def test_analogue_box1(analogue):
    f = grid.run(analogue, grid.BoundedBox.parse("0.01:0.99:R:0.61", 0.01, analogue.r2_int))
    d = bate.distribution(f, analogue)
    assert d.n == 3564
    # three-decimal table for the first model
    bias = [round(d.nu_quantiles[p], 3) for p in bate.LEVELS]
    bstar = [round(d.beta_star_quantiles[p], 3) for p in bate.LEVELS]
    assert bias == [0.0, 0.0, 0.009, 0.033, 0.038]
    assert bstar == [-0.021, -0.016, 0.008, 0.017, 0.017]
    assert d.contains_zero


def test_strict_drops_flagged(analogue):
    f = grid.run(analogue, grid.BoundedBox.parse("0.01:0.99:R:0.61", 0.01, analogue.r2_int))
    f.ambiguous[0, :3] = True
    rep = bate.bounding_report(f, analogue)
    assert rep["strict"].n == rep["default"].n - 3 and rep["strict"].excluded_flagged == 3


def test_case3_uses_only_box_cells():
    import json

    from conftest import FIXTURES
    from ovbound.model_inputs import RegressionSummary

    raw = json.loads((FIXTURES / "synthetic_summaries.json").read_text())["summaries"]["draw7"]
    s = RegressionSummary.from_dict(raw)
    box = grid.BoundedBox.parse("0.01:0.99:R:1", 0.01, s.r2_int)
    f = grid.run(s, box)
    assert f.case_used is grid.Case.CASE3
    d = bate.distribution(f, s)
    assert d.n == box.shape[0] * box.shape[1]
    assert np.array_equal(np.sort(d.nu_values), np.sort(f.selected[f.in_box]))


def test_sweep_quantiles_are_deterministic(analogue):
    box = grid.BoundedBox.parse("0.01:0.99:R:0.61", 0.01, analogue.r2_int)
    a = bate.step_size_sweep(analogue, box, [0.05, 0.02])
    b = bate.step_size_sweep(analogue, box, [0.05, 0.02])
    assert [r.beta_star_quantiles for r in a] == [r.beta_star_quantiles for r in b]
    assert all(r.runtime > 0 for r in a)
    assert [r.cells for r in a] == [20 * 8, 50 * 18]


def test_quantile_table_layout():
    d = bate.from_bias_values([0.1, 0.2, 0.3], 1.0)
    rows = bate.quantile_table(d, "box 1")
    assert [r[0] for r in rows] == ["box 1: Bias", "box 1: BATE"] and len(rows[0]) == 6

import numpy as np
import pytest

import oracles
from ovbound import delta_star as DS
from ovbound.delta_star import Degeneracy, DeltaStarProfile, Slope
from ovbound.errors import DomainError, PoleError
from ovbound.model_inputs import RegressionSummary


def _summary(rng, bt, bs):
    sx = rng.uniform(0.5, 5.0)
    tau = sx * rng.uniform(0.05, 1.0)
    r2s = rng.uniform(0.0, 0.5)
    r2i = r2s + rng.uniform(0.0, 0.45)
    return RegressionSummary(bs, r2s, bt, r2i, rng.uniform(0.5, 5.0), sx, tau)


def test_constants_for_analogue(analogue):
    p = DS.profile(analogue)
    assert p.degenerate is Degeneracy.NONE and p.usable
    assert p.slope is Slope.NEGATIVE
    assert round(DS.evaluate(p, 0.61), 2) == 0.37


def test_beta_tilde_zero():
    s = RegressionSummary(0.5, 0.1, 0.0, 0.3, 1.0, 1.0, 0.8)
    p = DS.profile(s)
    assert p.degenerate is Degeneracy.BETA_TILDE_ZERO and not p.usable
    assert DS.zero_effect_consistency(s, 0.5).refused
    assert DS.report(p, 0.5).refused


def test_constant_profile():
    p = DeltaStarProfile.from_constants(2.0, 1.0, 0.0, 0.3)
    assert p.slope is Slope.CONSTANT
    assert DS.evaluate(p, 0.7) == 0.0
    r = DS.report(p, 0.7)
    assert r.delta_star == 0.0 and r.slope is Slope.CONSTANT


def test_figure_two_parameter_sets():
    up = DeltaStarProfile.from_constants(-2.0, 2.0, 1.5, 0.256)
    down = DeltaStarProfile.from_constants(4.0, 2.0, 3.0, 0.256)
    assert DS.evaluate(up, 0.256) == pytest.approx(0.75)
    assert DS.evaluate(down, 0.756) == pytest.approx(0.75)
    # f' = -A C / (.)^2: A C < 0 rises, A C > 0 falls
    assert up.slope is Slope.POSITIVE
    assert down.slope is Slope.NEGATIVE
    assert DS.evaluate(up, 0.5) > DS.evaluate(up, 0.256)
    assert DS.evaluate(down, 0.5) < DS.evaluate(down, 0.256)


def test_domain_and_pole():
    p = DeltaStarProfile.from_constants(1.0, -0.2, 1.0, 0.3)     # R* = 0.5
    assert p.r_star == pytest.approx(0.5) and p.discontinuity_in_domain and not p.usable
    with pytest.raises(DomainError):
        DS.evaluate(p, 0.2)
    with pytest.raises(PoleError):
        DS.evaluate(p, 0.5)
    rep = DS.report(p, 0.7)
    assert rep.refused and rep.discont and "avoided" in rep.message


def test_pole_blow_up():
    p = DeltaStarProfile.from_constants(1.0, -0.2, 1.0, 0.3)
    for sign in (-1, 1):
        near = abs(DS.evaluate(p, 0.5 + sign * 1e-4))
        far = abs(DS.evaluate(p, 0.5 + sign * 1e-2))
        assert near > far


def test_monotone_and_matches_slope(rng):
    checked = 0
    for _ in range(300):
        s = oracles.random_summary(rng)
        p = DS.profile(s)
        if not p.usable or p.slope is Slope.CONSTANT:
            continue
        xs = np.linspace(s.r2_int, 1.0, 1000)
        ys = np.array([DS.evaluate(p, x) for x in xs])
        d = np.diff(ys)
        if p.slope is Slope.NEGATIVE:
            assert (d <= 0).all()
        else:
            assert (d >= 0).all()
        checked += 1
    assert checked > 100


def test_consistency_residual(rng):
    for _ in range(500):
        s = oracles.random_summary(rng)
        p = DS.profile(s)
        if p.degenerate is not Degeneracy.NONE:
            continue
        r = rng.uniform(s.r2_int, 1.0)
        if p.r_star is not None and abs(r - p.r_star) < 1e-6:
            continue
        rep = DS.zero_effect_consistency(s, r)
        assert rep.ok, rep


def test_prop7_family(rng):
    for _ in range(2000):
        bt = rng.uniform(0.01, 2.0)
        bs = bt + rng.uniform(0.01, 2.0)
        sign = rng.choice([-1.0, 1.0])
        p = DS.profile(_summary(rng, sign * bt, sign * bs))
        assert p.slope is Slope.NEGATIVE


def _prop8(s):
    k = s.sigma2_x / s.tau_x
    rhs = k * s.beta_short**2 + (s.sigma2_y / s.tau_x) * (s.r2_int - s.r2_short)
    bt = s.beta_int
    if bt > k * s.beta_short:
        return (bt > 0 and bt * bt < rhs) or (bt < 0 and bt * bt > rhs)
    if bt < k * s.beta_short:
        return (bt > 0 and bt * bt > rhs) or (bt < 0 and bt * bt < rhs)
    return False


def test_prop8_family(rng):
    hits = 0
    for _ in range(20000):
        s = _summary(rng, rng.uniform(-3, 3), rng.uniform(-3, 3))
        if _prop8(s):
            hits += 1
            assert DS.profile(s).slope is Slope.POSITIVE
    assert hits > 1000


def test_prop8_worked_examples(rng):
    s = _summary(rng, 1.0, -1.5)
    assert DS.profile(s).slope is Slope.POSITIVE
    s = _summary(rng, -1.0, 1.5)
    assert DS.profile(s).slope is Slope.POSITIVE

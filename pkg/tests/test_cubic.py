import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ovbound import cubic
from ovbound.cubic import CubicCoefficients, RootKind
from ovbound.errors import DegenerateCubicError, DomainError
from ovbound.model_inputs import RegressionSummary

SYN = RegressionSummary(0.5, 0.2, 0.3, 0.4, 2.0, 1.5, 1.0)


def _solve(a, b, c, d):
    return cubic.solve_cubic(CubicCoefficients.from_raw(a, b, c, d))


def test_three_distinct_roots():
    rs = _solve(1, -6, 11, -6)
    assert rs.kind is RootKind.THREE_REAL
    assert np.allclose(rs.roots, [1, 2, 3], atol=1e-12)


def test_one_real_root():
    rs = _solve(1, 0, -1, -2)
    assert rs.kind is RootKind.UNIQUE_REAL
    assert rs.roots[0] == pytest.approx(1.5213797068045676, rel=1e-14)
    assert rs.disc == pytest.approx(104.0)


@pytest.mark.parametrize("coef,root", [((1, 0, 0, 0), 0.0), ((1, 3, 3, 1), -1.0), ((2, -12, 24, -16), 2.0)])
def test_triple_root(coef, root):
    rs = _solve(*coef)
    assert np.allclose(rs.roots, root, atol=1e-6)
    assert not cubic.multiplicity_guard(CubicCoefficients.from_raw(*coef))


def test_double_root_flagged():
    co = CubicCoefficients.from_raw(1, -4, 5, -2)          # (x - 1)^2 (x - 2)
    rs = cubic.solve_cubic(co)
    assert rs.kind is RootKind.THREE_REAL
    assert np.allclose(rs.roots, [1, 1, 2], atol=1e-7)


def test_synthetic_summary_by_hand():
    # delta = 2, rmax = 0.6: a = 0.5, b = 0, c = 0.4 - 0.4 - 0.06, d = 2 * 0.2 * 2 * 0.2 * 1.5
    co = cubic.coefficients(SYN, 2.0, 0.6)
    assert (co.a, co.b) == pytest.approx((0.5, 0.0))
    assert co.c == pytest.approx(-0.06)
    assert co.d == pytest.approx(0.24)
    p, q = cubic.depressed(co.a, co.b, co.c, co.d)
    assert (p, q) == pytest.approx((-0.12, 0.48))
    rs = cubic.solve_cubic(co)
    assert rs.kind is RootKind.UNIQUE_REAL
    ref = [r.real for r in np.roots([0.5, 0.0, -0.06, 0.24]) if abs(r.imag) < 1e-9]
    assert rs.roots[0] == pytest.approx(ref[0], rel=1e-12)


def test_rmax_below_r2_int_rejected():
    with pytest.raises(DomainError):
        cubic.coefficients(SYN, 0.5, 0.3)


def test_degenerate_at_delta_one():
    with pytest.raises(DegenerateCubicError):
        cubic.solve_cubic(cubic.coefficients(SYN, 1.0, 0.6))


def _fuzz(rng, n, scale):
    coef = rng.normal(size=(4, n)) * 10.0 ** rng.uniform(-scale, scale, size=(4, n))
    return coef


@pytest.mark.parametrize("scale", [0, 3, 6])
def test_fuzz_residuals(rng, scale):
    a, b, c, d = _fuzz(rng, 20000, scale)
    kind, roots, _ = cubic.solve_cubic_arrays(a, b, c, d)
    m = np.maximum.reduce([abs(a), abs(b), abs(c), abs(d)])
    f = ((a[:, None] * roots + b[:, None]) * roots + c[:, None]) * roots + d[:, None]
    res = np.abs(f) / (m[:, None] * np.maximum(1, np.abs(roots)) ** 3)
    assert np.nanmax(res) <= cubic.RESIDUAL_TOL
    # unique-root rows carry exactly one root
    assert np.all(np.isnan(roots[kind == cubic.UNIQUE][:, 1:]))


def test_classification_matches_sign_change_count(rng):
    a, b, c, d = _fuzz(rng, 20000, 2)
    kind, _, _ = cubic.solve_cubic_arrays(a, b, c, d)
    p, q = cubic.depressed(a, b, c, d)
    disc = 27 * q * q + 4 * p**3
    clear = np.abs(disc) > cubic.DISC_REL_TOL * np.maximum(q * q, np.abs(p) ** 3)
    count = oracles.count_real_roots(a, b, c, d)
    assert np.all((kind == cubic.UNIQUE)[clear] == (count == 1)[clear])


def _bounded(s, delta, r, k):
    roots = cubic.solve_cubic(cubic.coefficients(s, delta, r)).roots
    return np.sort(sorted(roots, key=abs)[:k])


def test_delta_one_limit_converges_linearly(rng):
    for _ in range(20):
        s = oracles.random_summary(rng)
        r = rng.uniform(s.r2_int, 1.0)
        q = np.sort(cubic.solve_quadratic(s, r).roots)
        scale = np.maximum(1.0, np.abs(q))
        for side in (-1, 1):
            e6 = np.max(np.abs(_bounded(s, 1 + side * 1e-6, r, len(q)) - q) / scale)
            e7 = np.max(np.abs(_bounded(s, 1 + side * 1e-7, r, len(q)) - q) / scale)
            # the gap to the quadratic roots is first order in (delta - 1)
            assert e7 <= 0.2 * e6 + 1e-9


def test_quadratic_discriminant_nonnegative(rng):
    for _ in range(2000):
        s = oracles.random_summary(rng)
        r = rng.uniform(s.r2_int, 1.0)
        qc = cubic.quadratic_coefficients(s, r)
        assert qc.discriminant >= -1e-12 * max(qc.c1**2, abs(4 * qc.d1 * qc.b1))


def test_quadratic_branches_solve_quadratic(rng):
    s = oracles.random_summary(rng)
    qc = cubic.quadratic_coefficients(s, 0.5 * (1 + s.r2_int))
    nu1, nu2, D = cubic.quadratic_branches(s, 0.5 * (1 + s.r2_int))
    for nu in (nu1, nu2):
        assert abs(qc.b1 * nu * nu + qc.c1 * nu + qc.d1) <= 1e-10 * max(abs(qc.b1), abs(qc.c1), abs(qc.d1)) * max(1, nu * nu)
    assert nu1 == pytest.approx((-qc.c1 + np.sqrt(D)) / (2 * qc.b1), rel=1e-9, abs=1e-12)


def test_linear_case_when_betas_equal():
    s = RegressionSummary(0.3, 0.2, 0.3, 0.4, 2.0, 1.5, 1.0)
    rs = cubic.solve_quadratic(s, 0.7)
    assert rs.kind is RootKind.DEGENERATE and rs.roots == (0.0,)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50, allow_nan=False), min_size=3, max_size=3),
       st.floats(0.1, 10.0))
def test_recovers_constructed_roots(rs, lead):
    r1, r2, r3 = sorted(rs)
    # a (x - r1)(x - r2)(x - r3)
    b = -lead * (r1 + r2 + r3)
    c = lead * (r1 * r2 + r1 * r3 + r2 * r3)
    d = -lead * r1 * r2 * r3
    got = _solve(lead, b, c, d)
    scale = max(1.0, abs(r1), abs(r3))
    tol = 1e-5 * scale
    if r3 - r1 <= 1e-3 * scale:
        # a near-triple cluster moves by cbrt(coefficient rounding) when b, c, d are formed
        tol += scale * np.cbrt(64 * np.finfo(float).eps)
    for root in got.roots:
        assert min(abs(root - r) for r in (r1, r2, r3)) <= tol
    if min(r2 - r1, r3 - r2) > 1e-3 * scale:
        assert got.kind is RootKind.THREE_REAL
        assert np.allclose(got.roots, [r1, r2, r3], atol=1e-7 * scale)

import pytest

import oracles
from ovbound import cubic
from ovbound.identified_sets import identified_sets
from ovbound.model_inputs import RegressionSummary


def test_analogue_row(analogue):
    ids = identified_sets(analogue, 0.61)
    assert round(ids.discriminant_d, 2) == 20.32
    assert ids.set1[0] == analogue.beta_int and ids.set2[1] == analogue.beta_int
    assert not ids.set1_contains_zero and ids.set2_contains_zero
    assert ids.conclusions_differ


def test_sets_are_hulls_of_beta_tilde_and_bate(rng):
    for _ in range(200):
        s = oracles.random_summary(rng)
        r = rng.uniform(s.r2_int, 1.0)
        ids = identified_sets(s, r)
        assert ids.discriminant_d >= 0
        for nu, iv in ((ids.nu1, ids.set1), (ids.nu2, ids.set2)):
            assert iv[0] <= iv[1]
            assert {iv[0], iv[1]} == {min(s.beta_int, s.beta_int - nu), max(s.beta_int, s.beta_int - nu)}
            qc = cubic.quadratic_coefficients(s, r)
            assert abs(qc.b1 * nu * nu + qc.c1 * nu + qc.d1) <= 1e-9 * max(abs(qc.c1), abs(qc.d1), abs(qc.b1)) * max(1, nu * nu)


def test_linear_case_reports_one_set():
    s = RegressionSummary(0.3, 0.2, 0.3, 0.4, 2.0, 1.5, 1.0)
    ids = identified_sets(s, 0.6)
    assert ids.set2 is None and ids.note
    assert ids.set1 == (0.3, 0.3)


def test_to_dict_roundtrips_fields(analogue):
    d = identified_sets(analogue, 0.53).to_dict()
    assert set(d) >= {"D", "set1", "set2", "nu1", "nu2", "conclusions_differ"}
    assert d["rmax"] == pytest.approx(0.53)

"""Equal-selection (delta = 1) identified sets.

At delta = 1 the bias solves a quadratic with two real roots, so two
intervals ``[beta_int, beta_int - nu_i]`` come out.  Both are always
reported; nothing here picks one.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import cubic
from .errors import DegenerateCubicError
from .model_inputs import RegressionSummary


def _hull(a: float, b: float) -> tuple[float, float]:
    return (min(a, b), max(a, b))


def _has_zero(iv) -> bool:
    return iv[0] <= 0.0 <= iv[1]


@dataclass(frozen=True)
class IdentifiedSets:
    rmax: float
    discriminant_d: float
    nu1: float
    nu2: float | None
    set1: tuple[float, float]
    set2: tuple[float, float] | None
    set1_contains_zero: bool
    set2_contains_zero: bool | None
    conclusions_differ: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "rmax": self.rmax,
            "D": self.discriminant_d,
            "nu1": self.nu1,
            "nu2": self.nu2,
            "set1": list(self.set1),
            "set2": None if self.set2 is None else list(self.set2),
            "set1_contains_zero": self.set1_contains_zero,
            "set2_contains_zero": self.set2_contains_zero,
            "conclusions_differ": self.conclusions_differ,
            "note": self.note,
        }


def identified_sets(s: RegressionSummary, rmax: float) -> IdentifiedSets:
    bt = s.beta_int
    try:
        nu1, nu2, D = cubic.quadratic_branches(s, rmax)
    except DegenerateCubicError:
        rs = cubic.solve_quadratic(s, rmax)
        nu = rs.roots[0]
        iv = _hull(bt, bt - nu)
        return IdentifiedSets(
            rmax=rmax, discriminant_d=rs.disc, nu1=nu, nu2=None,
            set1=iv, set2=None,
            set1_contains_zero=_has_zero(iv), set2_contains_zero=None,
            conclusions_differ=False,
            note="beta_short equals beta_int: the delta = 1 equation is linear, one set only",
        )
    s1, s2 = _hull(bt, bt - nu1), _hull(bt, bt - nu2)
    z1, z2 = _has_zero(s1), _has_zero(s2)
    return IdentifiedSets(
        rmax=rmax, discriminant_d=D, nu1=nu1, nu2=nu2,
        set1=s1, set2=s2,
        set1_contains_zero=z1, set2_contains_zero=z2,
        conclusions_differ=z1 != z2,
    )

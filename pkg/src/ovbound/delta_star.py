"""The delta* diagnostic.

Setting the bias equal to ``beta_int`` (zero true effect) in the cubic and
solving for delta gives a rational function of R_max::

    delta = f(R_max) = C / (A (R_max - r2_int) + B)

with

    A = beta_int sy (sx - tau) + sy sx (beta_short - beta_int)
    B = beta_int^3 (sx tau - tau^2) + beta_int^2 sx tau (beta_short - beta_int)
    C = beta_int sy tau (r2_int - r2_short) + beta_int sx tau (beta_short - beta_int)^2
        + beta_int^3 (sx tau - tau^2) + 2 beta_int^2 sx tau (beta_short - beta_int)

(sy = sigma2_y, sx = sigma2_x, tau = tau_x).  ``f' = -A C / (A (R_max - r2_int) + B)^2``
so the slope sign is fixed by ``sign(A C)``.  A pole at ``R* = r2_int - B / A``
inside ``[r2_int, 1]`` makes delta* unusable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from . import cubic
from .errors import DomainError, PoleError
from .model_inputs import RegressionSummary

POLE_TOL = 1e-9
CONSISTENCY_TOL = 1e-8


class Slope(str, enum.Enum):
    NEGATIVE = "Negative"
    POSITIVE = "Positive"
    CONSTANT = "Constant"


class Degeneracy(str, enum.Enum):
    NONE = "None"
    BETA_TILDE_ZERO = "BetaTildeZero"
    A_ZERO = "AZero"


@dataclass(frozen=True)
class DeltaStarProfile:
    A: float
    B: float
    C: float
    r2_int: float
    r_star: float | None
    discontinuity_in_domain: bool
    slope: Slope
    degenerate: Degeneracy

    @property
    def usable(self) -> bool:
        return self.degenerate is Degeneracy.NONE and not self.discontinuity_in_domain

    @classmethod
    def from_constants(cls, A: float, B: float, C: float, r2_int: float,
                       degenerate: Degeneracy = Degeneracy.NONE) -> "DeltaStarProfile":
        if A == 0 and degenerate is Degeneracy.NONE:
            degenerate = Degeneracy.A_ZERO
        r_star = None if degenerate is Degeneracy.A_ZERO else r2_int - B / A
        disc = r_star is not None and r2_int <= r_star <= 1.0
        if degenerate is not Degeneracy.NONE or C == 0:
            slope = Slope.CONSTANT
        else:
            slope = Slope.NEGATIVE if A * C > 0 else Slope.POSITIVE
        return cls(A, B, C, r2_int, r_star, disc, slope, degenerate)

    def to_dict(self) -> dict:
        return {
            "A": self.A, "B": self.B, "C": self.C, "r2_int": self.r2_int,
            "r_star": self.r_star,
            "discontinuity_in_domain": self.discontinuity_in_domain,
            "slope": self.slope.value,
            "degenerate": self.degenerate.value,
            "usable": self.usable,
        }


def constants(s: RegressionSummary) -> tuple[float, float, float]:
    bt, bs = s.beta_int, s.beta_short
    sy, sx, tau = s.sigma2_y, s.sigma2_x, s.tau_x
    gap = bs - bt
    k = sx * tau - tau * tau
    A = bt * sy * (sx - tau) + sy * sx * gap
    B = bt**3 * k + bt**2 * sx * tau * gap
    C = bt * sy * tau * (s.r2_int - s.r2_short) + bt * sx * tau * gap**2 + bt**3 * k + 2 * bt**2 * sx * tau * gap
    return A, B, C


def profile(s: RegressionSummary) -> DeltaStarProfile:
    A, B, C = constants(s)
    if s.beta_int == 0 or abs(s.beta_int) <= 1e-14 * abs(s.beta_short):
        deg = Degeneracy.BETA_TILDE_ZERO
    elif abs(A) <= 1e-12 * s.sigma2_y * max(s.sigma2_x, s.tau_x) * max(abs(s.beta_int), abs(s.beta_short), 1.0):
        deg = Degeneracy.A_ZERO
    else:
        deg = Degeneracy.NONE
    return DeltaStarProfile.from_constants(A, B, C, s.r2_int, deg)


def evaluate(prof: DeltaStarProfile, rmax: float) -> float:
    if not prof.r2_int - 1e-12 <= rmax <= 1.0 + 1e-12:
        raise DomainError(f"R_max {rmax} outside [{prof.r2_int}, 1]")
    if prof.r_star is not None and abs(rmax - prof.r_star) <= POLE_TOL:
        raise PoleError(f"R_max {rmax} is at the pole R* = {prof.r_star}")
    denom = prof.A * (rmax - prof.r2_int) + prof.B
    if denom == 0:
        if prof.C == 0:
            return 0.0
        raise PoleError(f"delta* is undefined at R_max {rmax} (zero denominator)")
    return prof.C / denom


@dataclass(frozen=True)
class ConsistencyReport:
    rmax: float
    delta_star: float | None
    residual: float | None
    scale: float | None
    ok: bool | None
    refused: bool = False
    reason: str = ""

    @property
    def relative(self) -> float | None:
        if self.residual is None or not self.scale:
            return self.residual
        return self.residual / self.scale


def zero_effect_consistency(s: RegressionSummary, rmax: float) -> ConsistencyReport:
    """Check that nu = beta_int solves the cubic at (delta*, rmax).

    ``scale`` is the sum of the absolute values of the four cubic terms, the
    natural yardstick for rounding in their sum.
    """
    prof = profile(s)
    if prof.degenerate is Degeneracy.BETA_TILDE_ZERO:
        return ConsistencyReport(rmax, None, None, None, None, refused=True,
                                 reason="beta_int is zero: delta* is identically zero")
    ds = evaluate(prof, rmax)
    co = cubic.coefficients(s, ds, rmax)
    nu = s.beta_int
    terms = (co.a * nu**3, co.b * nu**2, co.c * nu, co.d)
    residual = abs(math.fsum(terms))
    scale = sum(abs(t) for t in terms)
    return ConsistencyReport(rmax, ds, residual, scale, residual <= CONSISTENCY_TOL * scale)


AVOID_MESSAGE = (
    "R* lies inside [R_int, 1]: delta* is discontinuous on the domain and "
    "extremely sensitive to R_max there; the use of delta* should be avoided"
)


@dataclass(frozen=True)
class DeltaStarReport:
    rmax: float
    discont: bool
    slope: Slope
    delta_star: float | None
    refused: bool
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "rmax": self.rmax,
            "Discont": self.discont,
            "Slope": self.slope.value,
            "delta_star": self.delta_star,
            "refused": self.refused,
            "message": self.message,
        }

    def row(self) -> tuple:
        return (
            self.rmax,
            "" if self.delta_star is None else self.delta_star,
            "TRUE" if self.discont else "FALSE",
            self.slope.value,
        )


def report(prof: DeltaStarProfile, rmax: float) -> DeltaStarReport:
    if prof.discontinuity_in_domain:
        return DeltaStarReport(rmax, True, prof.slope, None, True, AVOID_MESSAGE)
    if prof.degenerate is Degeneracy.BETA_TILDE_ZERO:
        return DeltaStarReport(rmax, False, prof.slope, None, True,
                               "beta_int is zero: delta* = 0 for every R_max, nothing to report")
    if prof.degenerate is Degeneracy.A_ZERO:
        return DeltaStarReport(rmax, False, prof.slope, None, True,
                               "A is zero: delta* does not vary with R_max")
    try:
        value = evaluate(prof, rmax)
    except (DomainError, PoleError) as exc:
        return DeltaStarReport(rmax, prof.discontinuity_in_domain, prof.slope, None, True, str(exc))
    return DeltaStarReport(rmax, False, prof.slope, value, False)


def curve(prof: DeltaStarProfile, rmax_low: float | None = None, n: int = 200):
    """Sample f on [rmax_low, 1] (default lower end r2_int + 0.01) for plotting.

    Points within ``POLE_TOL`` of the pole come back as NaN.
    """
    import numpy as np

    lo = prof.r2_int + 0.01 if rmax_low is None else rmax_low
    xs = np.linspace(lo, 1.0, n)
    denom = prof.A * (xs - prof.r2_int) + prof.B
    with np.errstate(divide="ignore", invalid="ignore"):
        ys = prof.C / denom
    if prof.r_star is not None:
        ys[np.abs(xs - prof.r_star) <= POLE_TOL] = np.nan
    return xs, ys

"""Empirical distributions of the bias and the bias-adjusted treatment effect.

Quantiles use linear interpolation between order statistics at position
``1 + p (n - 1)`` (numpy's default ``linear`` method).  The bounding set is
the interval between the 2.5% and 97.5% quantiles of ``beta_star`` over the
cells of the box; it describes spread over (delta, R_max), not sampling
uncertainty.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import grid
from .errors import InputError
from .grid import BiasField, BoundedBox
from .model_inputs import RegressionSummary

LEVELS = (0.025, 0.05, 0.5, 0.95, 0.975)
QUANTILE_RULE = "linear interpolation at order-statistic position 1 + p(n-1)"
BOUNDING_SET_LABEL = "bounding set (2.5%-97.5% quantiles over the (delta, R_max) box)"


def quantiles(values, levels=LEVELS) -> dict[float, float]:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InputError("cannot take quantiles of an empty sample")
    qs = np.quantile(values, levels, method="linear")
    return {float(p): float(v) for p, v in zip(levels, qs)}


@dataclass(frozen=True)
class BateDistribution:
    nu_values: np.ndarray = field(repr=False)
    beta_star_values: np.ndarray = field(repr=False)
    nu_quantiles: dict
    beta_star_quantiles: dict
    bounding_set: tuple[float, float]
    contains_zero: bool
    excluded_flagged: int = 0

    @property
    def n(self) -> int:
        return int(self.nu_values.size)


def from_bias_values(nu_values, beta_int: float, excluded_flagged: int = 0) -> BateDistribution:
    nu = np.asarray(nu_values, dtype=float).reshape(-1)
    if nu.size == 0:
        raise InputError("bias field is empty")
    bstar = beta_int - nu
    bq = quantiles(bstar)
    lo, hi = bq[0.025], bq[0.975]
    return BateDistribution(
        nu_values=nu,
        beta_star_values=bstar,
        nu_quantiles=quantiles(nu),
        beta_star_quantiles=bq,
        bounding_set=(lo, hi),
        contains_zero=lo <= 0.0 <= hi,
        excluded_flagged=excluded_flagged,
    )


def distribution(field: BiasField, s: RegressionSummary, strict: bool = False) -> BateDistribution:
    """Distribution over the cells of the requested box.

    Cells added by a box extension never count.  With ``strict`` the cells
    flagged ambiguous or multiplicity-hazard are dropped as well.
    """
    if np.isnan(field.selected[field.in_box]).any():
        raise InputError("bias field is not fully resolved")
    mask = field.in_box.copy()
    dropped = 0
    if strict:
        bad = field.flagged & mask
        dropped = int(bad.sum())
        mask &= ~bad
    return from_bias_values(field.selected[mask], s.beta_int, excluded_flagged=dropped)


def bounding_report(field: BiasField, s: RegressionSummary, strict: bool = False) -> dict:
    """Default distribution plus the strict one whenever flagged cells exist."""
    out = {"default": distribution(field, s)}
    if strict or (field.flagged & field.in_box).any():
        if (field.flagged & field.in_box).all():
            out["strict"] = None
        else:
            out["strict"] = distribution(field, s, strict=True)
    return out


@dataclass(frozen=True)
class SweepRow:
    step_e: float
    runtime: float
    cells: int
    beta_star_quantiles: dict


def step_size_sweep(s: RegressionSummary, box: BoundedBox, steps) -> list[SweepRow]:
    rows = []
    for e in steps:
        b = box.with_step(float(e))
        t0 = time.perf_counter()
        f = grid.run(s, b)
        dist = distribution(f, s)
        elapsed = time.perf_counter() - t0
        rows.append(SweepRow(float(e), elapsed, dist.n, dist.beta_star_quantiles))
    return rows


def quantile_table(dist: BateDistribution, label: str = "") -> list[tuple]:
    """Two rows in the layout ``label, 2.5%, 5%, 50%, 95%, 97.5%``."""
    prefix = f"{label}: " if label else ""
    return [
        (prefix + "Bias", *(dist.nu_quantiles[p] for p in LEVELS)),
        (prefix + "BATE", *(dist.beta_star_quantiles[p] for p in LEVELS)),
    ]

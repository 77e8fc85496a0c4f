"""Root selection over a lattice of (delta, R_max) points.

A box is classified cell by cell into the unique-real-root region (URR) and
the three-real-root region (NURR).  URR cells keep their only real root.
NURR cells are resolved in layers: each layer is every unresolved NURR cell
with an already-resolved 8-neighbour, and each such cell keeps the real root
closest to the selection at its nearest resolved neighbour.  Layers only read
cells resolved before them, so the result does not depend on the order in
which cells inside a layer are visited.

When the box holds no URR cell at all it is widened along delta until one
appears; only the original cells feed the reported distributions.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import cubic
from .cubic import RootKind, RootSet
from .errors import DomainError, InputError, NoAnchorError
from .model_inputs import RegressionSummary

log = logging.getLogger(__name__)

DEFAULT_STEP = 0.01
DELTA_CAP = 100.0
EXTENSION_INCREMENT = 0.5
DELTA_ONE_SHIFT = 1e-9
TIE_TOL = 1e-12
LIPSCHITZ_SAFETY = 10.0
CONTINUITY_FLOOR = 1e-8     # jumps below this (relative) are rounding, never warned

# neighbour offsets in selection priority: Euclidean distance, then index
_NEIGHBOURS = ((-1, 0), (0, -1), (0, 1), (1, 0), (-1, -1), (-1, 1), (1, -1), (1, 1))


class Region(str, enum.Enum):
    URR = "URR"
    NURR = "NURR"


class Case(str, enum.Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"
    CASE3 = "Case3"


def _axis(low: float, high: float, step: float) -> np.ndarray:
    n = int(math.floor((high - low) / step + 1e-9)) + 1
    return low + step * np.arange(n)


@dataclass(frozen=True)
class BoundedBox:
    delta_low: float
    delta_high: float
    rmax_low: float
    rmax_high: float
    step_e: float = DEFAULT_STEP

    def __post_init__(self):
        for name in ("delta_low", "delta_high", "rmax_low", "rmax_high", "step_e"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"box {name} must be finite")
        if not self.delta_low < self.delta_high:
            raise InputError("box needs delta_low < delta_high")
        if not self.rmax_low < self.rmax_high:
            raise InputError("box needs rmax_low < rmax_high")
        if self.rmax_high > 1.0:
            raise InputError("rmax_high cannot exceed 1")
        if not self.step_e > 0:
            raise InputError("step_e must be positive")
        if len(self.deltas()) < 2 or len(self.rmaxes()) < 2:
            raise InputError("box must contain at least a 2 x 2 lattice at this step size")

    @classmethod
    def parse(cls, text: str, step_e: float = DEFAULT_STEP, r2_int: float | None = None) -> "BoundedBox":
        """Parse ``dlo:dhi:rlo:rhi``; ``rlo`` may be ``R`` for the intermediate R-squared."""
        parts = text.split(":")
        if len(parts) != 4:
            raise InputError(f"box {text!r} must look like dlo:dhi:rlo:rhi")
        vals = []
        for k, part in enumerate(parts):
            part = part.strip()
            if k == 2 and part.lower() in ("r", "rtilde", "r2_int"):
                if r2_int is None:
                    raise InputError("box uses R for rmax_low but no summary is available")
                vals.append(r2_int)
                continue
            try:
                vals.append(float(part))
            except ValueError:
                raise InputError(f"box {text!r}: cannot parse {part!r}") from None
        return cls(*vals, step_e=step_e)

    def with_step(self, step_e: float) -> "BoundedBox":
        return BoundedBox(self.delta_low, self.delta_high, self.rmax_low, self.rmax_high, step_e)

    def deltas(self) -> np.ndarray:
        return _axis(self.delta_low, self.delta_high, self.step_e)

    def rmaxes(self) -> np.ndarray:
        return _axis(self.rmax_low, self.rmax_high, self.step_e)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.deltas()), len(self.rmaxes())

    def check_against(self, s: RegressionSummary):
        if self.rmax_low < s.r2_int - 1e-12:
            raise DomainError(
                f"box rmax_low {self.rmax_low} is below the intermediate R-squared {s.r2_int}"
            )

    def to_dict(self) -> dict:
        return {
            "delta_low": self.delta_low,
            "delta_high": self.delta_high,
            "rmax_low": self.rmax_low,
            "rmax_high": self.rmax_high,
            "step_e": self.step_e,
        }


@dataclass
class Classification:
    """Per-cell roots on a lattice; index ``[i, j]`` is (delta_i, rmax_j)."""

    deltas: np.ndarray
    rmaxes: np.ndarray
    urr: np.ndarray
    roots: np.ndarray           # (nd, nr, 3), ascending, NaN padded
    disc: np.ndarray
    shifted: np.ndarray         # delta moved off the singular line delta = 1
    multiplicity_ok: np.ndarray

    @property
    def shape(self):
        return self.urr.shape

    def region(self, i, j) -> Region:
        return Region.URR if self.urr[i, j] else Region.NURR

    def rootset(self, i, j) -> RootSet:
        r = self.roots[i, j]
        if self.urr[i, j]:
            return RootSet(RootKind.UNIQUE_REAL, (r[0],), float(self.disc[i, j]))
        return RootSet(RootKind.THREE_REAL, tuple(r), float(self.disc[i, j]))


def _lattice_deltas(deltas: np.ndarray):
    deltas = deltas.copy()
    shifted = np.abs(deltas - 1.0) <= DELTA_ONE_SHIFT
    deltas[shifted] = 1.0 + DELTA_ONE_SHIFT
    return deltas, shifted


def classify_lattice(s: RegressionSummary, deltas, rmaxes) -> Classification:
    deltas, shifted = _lattice_deltas(np.asarray(deltas, dtype=float))
    rmaxes = np.asarray(rmaxes, dtype=float)
    if rmaxes.min() < s.r2_int - 1e-12:
        raise DomainError("R_max below intermediate R-squared")
    rmaxes = np.maximum(rmaxes, s.r2_int)
    D, R = np.meshgrid(deltas, rmaxes, indexing="ij")
    a, b, c, d = cubic.coefficient_arrays(s, D, R)
    kind, roots, disc = cubic.solve_cubic_arrays(a, b, c, d)
    mult = cubic.multiplicity_ok_arrays(a, b, c, d)
    return Classification(
        deltas=deltas,
        rmaxes=rmaxes,
        urr=kind == cubic.UNIQUE,
        roots=roots,
        disc=disc,
        shifted=np.broadcast_to(shifted[:, None], kind.shape).copy(),
        multiplicity_ok=mult,
    )


def classify(s: RegressionSummary, box: BoundedBox) -> Classification:
    box.check_against(s)
    return classify_lattice(s, box.deltas(), box.rmaxes())


@dataclass(frozen=True)
class Extension:
    delta_low: float
    delta_high: float
    iterations: int
    offset: int         # lattice index of the original box's first delta

    def to_dict(self) -> dict:
        return {
            "delta_low": self.delta_low,
            "delta_high": self.delta_high,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class GridCell:
    i: int
    j: int
    delta: float
    rmax: float
    region: Region
    roots: RootSet
    selected: float
    source: tuple[int, int] | None      # None for a unique root
    multiplicity_ok: bool
    ambiguous: bool
    layer: int


@dataclass
class BiasField:
    """Resolved lattice.  Arrays may cover an extended box; ``in_box`` marks
    the cells of the box that was asked for."""

    box: BoundedBox
    grid: Classification
    selected: np.ndarray
    anchor: np.ndarray          # (nd, nr, 2) index of the anchor cell, -1 for URR
    layer: np.ndarray           # 0 for URR, k for the k-th NURR layer
    ambiguous: np.ndarray
    in_box: np.ndarray
    case_used: Case
    extension_applied: Extension | None = None
    continuity_warnings: list = field(default_factory=list)

    @property
    def shape(self):
        return self.selected.shape

    @property
    def deltas(self):
        return self.grid.deltas

    @property
    def rmaxes(self):
        return self.grid.rmaxes

    @property
    def urr(self):
        return self.grid.urr

    @property
    def flagged(self) -> np.ndarray:
        """Cells whose selection rests on an ambiguous or multiple-root step."""
        return self.ambiguous | ~self.grid.multiplicity_ok

    def cell(self, i: int, j: int) -> GridCell:
        g = self.grid
        src = None if self.anchor[i, j, 0] < 0 else (int(self.anchor[i, j, 0]), int(self.anchor[i, j, 1]))
        return GridCell(
            i=i, j=j,
            delta=float(g.deltas[i]), rmax=float(g.rmaxes[j]),
            region=g.region(i, j), roots=g.rootset(i, j),
            selected=float(self.selected[i, j]), source=src,
            multiplicity_ok=bool(g.multiplicity_ok[i, j]),
            ambiguous=bool(self.ambiguous[i, j]),
            layer=int(self.layer[i, j]),
        )

    def box_slice(self):
        """Index slices of the original box inside the (possibly extended) arrays."""
        off = self.extension_applied.offset if self.extension_applied else 0
        nd, _ = self.box.shape
        return slice(off, off + nd), slice(None)

    def in_box_values(self) -> np.ndarray:
        return self.selected[self.in_box]

    def counts(self) -> dict:
        ib = self.in_box
        return {
            "cells": int(ib.sum()),
            "urr": int((self.urr & ib).sum()),
            "nurr": int((~self.urr & ib).sum()),
            "ambiguous": int((self.ambiguous & ib).sum()),
            "multiplicity_hazard": int((~self.grid.multiplicity_ok & ib).sum()),
            "delta_shifted": int((self.grid.shifted & ib).sum()),
            "continuity_warnings": len(self.continuity_warnings),
            "layers": int(self.layer[ib].max()) if ib.any() else 0,
        }


def _propagate(g: Classification):
    """Layered nearest-root continuation from URR into NURR."""
    nd, nr = g.shape
    resolved = g.urr.copy()
    selected = np.where(g.urr, g.roots[..., 0], np.nan)
    anchor = np.full((nd, nr, 2), -1, dtype=int)
    layer = np.zeros((nd, nr), dtype=int)
    ambiguous = np.zeros((nd, nr), dtype=bool)
    ii, jj = np.meshgrid(np.arange(nd), np.arange(nr), indexing="ij")

    k = 0
    while not resolved.all():
        k += 1
        pad_res = np.zeros((nd + 2, nr + 2), dtype=bool)
        pad_res[1:-1, 1:-1] = resolved
        pad_sel = np.full((nd + 2, nr + 2), np.nan)
        pad_sel[1:-1, 1:-1] = selected

        found = np.zeros((nd, nr), dtype=bool)
        anchor_val = np.full((nd, nr), np.nan)
        anc = np.full((nd, nr, 2), -1, dtype=int)
        for di, dj in _NEIGHBOURS:
            nb_res = pad_res[1 + di:nd + 1 + di, 1 + dj:nr + 1 + dj]
            take = nb_res & ~found & ~resolved
            if take.any():
                anchor_val[take] = pad_sel[1 + di:nd + 1 + di, 1 + dj:nr + 1 + dj][take]
                anc[take, 0] = ii[take] + di
                anc[take, 1] = jj[take] + dj
                found |= take
        if not found.any():
            raise NoAnchorError(
                "some three-root cells are not connected to any unique-root cell; "
                "change the box"
            )

        cand = g.roots[found]                       # (m, 3)
        target = anchor_val[found][:, None]
        dist = np.abs(cand - target)
        order = np.argsort(dist, axis=1, kind="stable")
        rows = np.arange(cand.shape[0])
        best = cand[rows, order[:, 0]]
        second = cand[rows, order[:, 1]]
        gap = dist[rows, order[:, 1]] - dist[rows, order[:, 0]]
        tie = gap <= TIE_TOL * np.maximum(1.0, np.abs(target[:, 0]))
        pick = np.where(tie & (np.abs(second) < np.abs(best)), second, best)

        selected[found] = pick
        ambiguous[found] = tie
        anchor[found] = anc[found]
        layer[found] = k
        resolved |= found
    return selected, anchor, layer, ambiguous


def _continuity_check(g: Classification, selected: np.ndarray, step: float) -> list:
    """Adjacent simple-root cells whose selections jump more than a Lipschitz bound."""
    slopes = []
    for axis in (0, 1):
        diff = np.abs(np.diff(selected, axis=axis)) / step
        both_urr = g.urr[1:, :] & g.urr[:-1, :] if axis == 0 else g.urr[:, 1:] & g.urr[:, :-1]
        if both_urr.any():
            slopes.append(diff[both_urr].max())
    if not slopes:
        return []
    scale = max(1.0, float(np.nanmax(np.abs(selected))))
    bound = max(LIPSCHITZ_SAFETY * max(slopes) * step, CONTINUITY_FLOOR * scale)
    ok = g.multiplicity_ok
    warnings = []
    for axis in (0, 1):
        diff = np.abs(np.diff(selected, axis=axis))
        both = (ok[1:, :] & ok[:-1, :]) if axis == 0 else (ok[:, 1:] & ok[:, :-1])
        bad = np.argwhere((diff > bound) & both)
        for i, j in bad:
            other = (i + 1, j) if axis == 0 else (i, j + 1)
            warnings.append(((int(i), int(j)), (int(other[0]), int(other[1])), float(diff[i, j])))
    if warnings:
        worst = max(warnings, key=lambda w: w[2])
        log.warning("continuity: %d neighbour pairs jump past the bound %.3g (largest %.3g at %s-%s)",
                    len(warnings), bound, worst[2], worst[0], worst[1])
    return warnings


def _extend(s: RegressionSummary, box: BoundedBox):
    """Widen along delta, alternating sides, until a URR cell appears."""
    e = box.step_e
    steps = max(1, int(round(EXTENSION_INCREMENT / e)))
    lo_n = hi_n = 0
    rmaxes = box.rmaxes()
    base = box.deltas()
    it = 0
    side = 0
    while True:
        lo_ok = box.delta_low - (lo_n + steps) * e > -DELTA_CAP
        hi_ok = box.delta_high + (hi_n + steps) * e < DELTA_CAP
        if not (lo_ok or hi_ok):
            raise NoAnchorError(
                f"no unique-real-root cell found with delta in (-{DELTA_CAP}, {DELTA_CAP}); "
                "choose a different box"
            )
        if side == 0 and lo_ok or not hi_ok:
            lo_n += steps
        else:
            hi_n += steps
        side ^= 1
        it += 1
        deltas = np.concatenate([
            base[0] - e * np.arange(lo_n, 0, -1),
            base,
            base[-1] + e * np.arange(1, hi_n + 1),
        ])
        g = classify_lattice(s, deltas, rmaxes)
        if g.urr.any():
            ext = Extension(float(deltas[0]), float(deltas[-1]), it, lo_n)
            return g, ext


def run(s: RegressionSummary, box: BoundedBox) -> BiasField:
    g = classify(s, box)
    extension = None
    if g.urr.all():
        case = Case.CASE1
    elif g.urr.any():
        case = Case.CASE2
    else:
        case = Case.CASE3
        g, extension = _extend(s, box)

    selected, anchor, layer, ambiguous = _propagate(g)
    in_box = np.zeros(g.shape, dtype=bool)
    off = extension.offset if extension else 0
    in_box[off:off + box.shape[0], :] = True
    warnings = _continuity_check(g, selected, box.step_e)
    return BiasField(
        box=box,
        grid=g,
        selected=selected,
        anchor=anchor,
        layer=layer,
        ambiguous=ambiguous,
        in_box=in_box,
        case_used=case,
        extension_applied=extension,
        continuity_warnings=warnings,
    )


def root_at(field: BiasField, s: RegressionSummary, delta: float, rmax: float) -> float:
    """Selected bias at an off-lattice point.

    Solves the cubic at (delta, rmax) and keeps the real root closest to the
    selection at the nearest lattice cell.
    """
    i = int(np.argmin(np.abs(field.deltas - delta)))
    j = int(np.argmin(np.abs(field.rmaxes - rmax)))
    ref = field.selected[i, j]
    if abs(delta - 1.0) <= DELTA_ONE_SHIFT:
        roots = cubic.solve_quadratic(s, rmax).roots
    else:
        roots = cubic.solve_cubic(cubic.coefficients(s, delta, rmax)).roots
    return float(min(roots, key=lambda r: (abs(r - ref), abs(r))))


def field_rows(field: BiasField):
    """Long-format rows: delta, rmax, region, root1..3, selected, flags."""
    g = field.grid
    nd, nr = field.shape
    for i in range(nd):
        for j in range(nr):
            flags = []
            if not field.in_box[i, j]:
                flags.append("extension")
            if field.ambiguous[i, j]:
                flags.append("ambiguous")
            if not g.multiplicity_ok[i, j]:
                flags.append("multiplicity")
            if g.shifted[i, j]:
                flags.append("delta_shifted")
            r = g.roots[i, j]
            yield (
                float(g.deltas[i]),
                float(g.rmaxes[j]),
                g.region(i, j).value,
                float(r[0]),
                None if np.isnan(r[1]) else float(r[1]),
                None if np.isnan(r[2]) else float(r[2]),
                float(field.selected[i, j]),
                ";".join(flags),
            )

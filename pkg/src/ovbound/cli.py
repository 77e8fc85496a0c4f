"""Command-line entry point.

Every option can come from a JSON config file (``--config``) or a flag;
flags win.  Exit codes: 0 success, 1 computation error, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import __version__, bate, delta_star, grid, identified_sets, model_inputs, output
from .errors import InputError, OvboundError
from .grid import BoundedBox
from .model_inputs import RegressionSummary

DEFAULT_OUT = "ovbound_out"
DEFAULT_STEPS = ("1/10", "1/20", "1/50", "1/100")
FORMATS = ("csv", "json")
Q_HEADER = ["label", "q2.5", "q5", "q50", "q95", "q97.5"]


@dataclass
class RunConfig:
    input: str | None = None
    outcome: str | None = None
    treatment: str | None = None
    controls: list[str] | None = None
    summary_json: str | None = None
    summary: dict | None = None
    boxes: list[str] = field(default_factory=list)
    step: float = grid.DEFAULT_STEP
    rmax: list[float] = field(default_factory=list)
    out_dir: str = DEFAULT_OUT
    formats: tuple[str, ...] = FORMATS
    strict: bool = False
    seed: int | None = None
    steps: list[float] = field(default_factory=list)
    dgp: dict | None = None
    plots: bool = True
    timing: bool = True

    @property
    def out(self) -> Path:
        return Path(self.out_dir)


# -- configuration ----------------------------------------------------------

_CONFIG_KEYS = set(RunConfig.__dataclass_fields__) | {"format", "dgp_json"}


def _parse_number(text) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    try:
        return float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"cannot parse number {text!r}") from None


def _parse_formats(value) -> tuple[str, ...]:
    items = value.split(",") if isinstance(value, str) else list(value)
    fmts = tuple(dict.fromkeys(v.strip().lower() for v in items if v.strip()))
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise InputError(f"format must be a subset of {FORMATS}, got {value!r}")
    return fmts


def _load_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputError(f"{path}: file not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None


def _box_text(b) -> str:
    if isinstance(b, str):
        return b
    if isinstance(b, dict):
        try:
            return f"{b['delta_low']}:{b['delta_high']}:{b['rmax_low']}:{b['rmax_high']}"
        except KeyError as exc:
            raise InputError(f"box is missing {exc.args[0]!r}") from None
    raise InputError(f"cannot read box {b!r}")


def build_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if getattr(args, "config", None):
        raw = _load_json(args.config)
        if not isinstance(raw, dict):
            raise InputError(f"{args.config}: config must be a JSON object")
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise InputError(f"{args.config}: unknown config keys {sorted(unknown)}")
    flags = {
        "input": args.input, "outcome": args.outcome, "treatment": args.treatment,
        "controls": args.controls, "summary_json": args.summary_json,
        "boxes": args.box, "step": args.step, "rmax": args.rmax,
        "out_dir": args.out_dir, "format": args.format,
        "strict": True if args.strict else None, "seed": args.seed,
        "steps": args.steps, "dgp_json": getattr(args, "dgp", None),
        "plots": False if args.no_plots else None,
        "timing": False if args.no_timing else None,
    }
    merged = dict(raw)
    merged.update({k: v for k, v in flags.items() if v is not None})

    cfg = RunConfig()
    for key in ("input", "outcome", "treatment", "summary_json", "summary", "out_dir", "dgp"):
        if merged.get(key) is not None:
            setattr(cfg, key, merged[key])
    if merged.get("controls") is not None:
        c = merged["controls"]
        cfg.controls = [x.strip() for x in c.split(",") if x.strip()] if isinstance(c, str) else list(c)
    if merged.get("boxes") is not None:
        cfg.boxes = [_box_text(b) for b in merged["boxes"]]
    if merged.get("step") is not None:
        cfg.step = _parse_number(merged["step"])
    if merged.get("rmax") is not None:
        cfg.rmax = [_parse_number(r) for r in merged["rmax"]]
    if merged.get("format") is not None:
        cfg.formats = _parse_formats(merged["format"])
    elif merged.get("formats") is not None:
        cfg.formats = _parse_formats(merged["formats"])
    for key in ("strict", "plots", "timing"):
        if merged.get(key) is not None:
            setattr(cfg, key, bool(merged[key]))
    if merged.get("seed") is not None:
        try:
            cfg.seed = int(merged["seed"])
        except (TypeError, ValueError):
            raise InputError(f"seed must be an integer, got {merged['seed']!r}") from None
    if merged.get("steps") is not None:
        st = merged["steps"]
        items = st.split(",") if isinstance(st, str) else st
        cfg.steps = [_parse_number(x) for x in items]
    if merged.get("dgp_json") is not None:
        cfg.dgp = _load_json(merged["dgp_json"])
    return cfg


# -- inputs -----------------------------------------------------------------


def _threads() -> int | None:
    raw = os.environ.get("OVBOUND_THREADS")
    if raw is None or raw.strip() == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"OVBOUND_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise InputError(f"OVBOUND_THREADS must be a positive integer, got {raw!r}")
    return n


def load_dataset(cfg: RunConfig):
    if not cfg.input:
        raise InputError("--input is required")
    if not cfg.outcome or not cfg.treatment:
        raise InputError("--outcome and --treatment are required with --input")
    return model_inputs.read_csv(cfg.input, cfg.outcome, cfg.treatment, cfg.controls)


def load_summary(cfg: RunConfig) -> RegressionSummary:
    modes = [m for m in ("input", "summary_json", "summary") if getattr(cfg, m) is not None]
    if len(modes) != 1:
        raise InputError("give exactly one input: --input CSV, --summary-json, or an inline summary")
    if cfg.input is not None:
        return model_inputs.summarize(load_dataset(cfg))
    raw = _load_json(cfg.summary_json) if cfg.summary_json is not None else cfg.summary
    if not isinstance(raw, dict):
        raise InputError("summary must be a JSON object")
    return RegressionSummary.from_dict(raw)


def parse_boxes(cfg: RunConfig, s: RegressionSummary) -> list[BoundedBox]:
    if not cfg.boxes:
        raise InputError("at least one --box is required")
    boxes = [BoundedBox.parse(b, cfg.step, s.r2_int) for b in cfg.boxes]
    for b in boxes:
        b.check_against(s)
    return boxes


def _require_rmax(cfg: RunConfig) -> list[float]:
    if not cfg.rmax:
        raise InputError("at least one --rmax is required")
    return cfg.rmax


# -- commands ---------------------------------------------------------------


def _summary_row(s: RegressionSummary) -> tuple:
    return (s.beta_short, s.se_short, s.r2_short, s.beta_int, s.se_int, s.r2_int)


def cmd_fit(cfg: RunConfig) -> RegressionSummary:
    s = model_inputs.summarize(load_dataset(cfg))
    if "json" in cfg.formats:
        output.write_json(cfg.out / "summary.json", s.to_dict())
    if "csv" in cfg.formats:
        d = s.to_dict()
        output.write_csv(cfg.out / "summary.csv", list(d), [list(d.values())])
    header = ["beta_short", "se", "R2_short", "beta_int", "se", "R2_int"]
    print(output.table(header, [_summary_row(s)]), end="")
    return s


def _run_box(s: RegressionSummary, box: BoundedBox, strict: bool):
    t0 = time.perf_counter()
    f = grid.run(s, box)
    rep = bate.bounding_report(f, s, strict)
    return f, rep, time.perf_counter() - t0


def _quantile_rows(rep: dict) -> list[tuple]:
    rows = bate.quantile_table(rep["default"])
    if rep.get("strict") is not None:
        rows += bate.quantile_table(rep["strict"], "strict")
    return rows


def _dist_dict(dist) -> dict | None:
    if dist is None:
        return None
    return {
        "cells": dist.n,
        "excluded_flagged": dist.excluded_flagged,
        "bias_quantiles": {str(k): v for k, v in dist.nu_quantiles.items()},
        "bate_quantiles": {str(k): v for k, v in dist.beta_star_quantiles.items()},
        "bounding_set": list(dist.bounding_set),
        "bounding_set_contains_zero": dist.contains_zero,
    }


def cmd_bounds(cfg: RunConfig) -> list[dict]:
    s = load_summary(cfg)
    boxes = parse_boxes(cfg, s)
    workers = _threads() or min(len(boxes), os.cpu_count() or 1)
    if workers > 1 and len(boxes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda b: _run_box(s, b, cfg.strict), boxes))
    else:
        results = [_run_box(s, b, cfg.strict) for b in boxes]

    output.write_json(cfg.out / "summary.json", s.to_dict())
    manifests = []
    for k, (box, (f, rep, elapsed)) in enumerate(zip(boxes, results), start=1):
        d = cfg.out / f"box{k}"
        qrows = _quantile_rows(rep)
        manifest = {
            "box": box.to_dict(),
            "case": f.case_used.value,
            "extension": f.extension_applied.to_dict() if f.extension_applied else None,
            "counts": f.counts(),
            "quantile_rule": bate.QUANTILE_RULE,
            "interval_label": bate.BOUNDING_SET_LABEL,
            "default": _dist_dict(rep["default"]),
            "strict": _dist_dict(rep.get("strict")),
            "continuity_warnings": [list(w) if isinstance(w, tuple) else w for w in f.continuity_warnings],
        }
        if cfg.timing:
            manifest["runtime_seconds"] = elapsed
        if "csv" in cfg.formats:
            output.write_csv(d / "quantiles.csv", Q_HEADER, qrows)
            output.write_csv(d / "field.csv",
                             ["delta", "rmax", "region", "root1", "root2", "root3", "selected", "flags"],
                             grid.field_rows(f))
        if "json" in cfg.formats:
            output.write_json(d / "quantiles.json", {r[0]: dict(zip(Q_HEADER[1:], r[1:])) for r in qrows})
        output.write_json(d / "manifest.json", manifest)
        if cfg.plots:
            from . import plots

            plots.region_map(f, d / "region.png", f"box {k}: {f.case_used.value}")
            plots.bias_contour(f, d / "contour.png", f"box {k}")
        print(f"box {k}  {box.delta_low:g}<delta<{box.delta_high:g}  "
              f"{box.rmax_low:.3f}<R_max<{box.rmax_high:g}  {f.case_used.value}")
        print(output.table(Q_HEADER, qrows), end="")
        lo, hi = rep["default"].bounding_set
        print(f"{bate.BOUNDING_SET_LABEL}: {output.interval((lo, hi))}\n")
        manifests.append(manifest)
    return manifests


def cmd_delta_star(cfg: RunConfig) -> dict:
    s = load_summary(cfg)
    rmaxes = _require_rmax(cfg)
    prof = delta_star.profile(s)
    reports = [delta_star.report(prof, r) for r in rmaxes]
    checks = []
    for r in rmaxes:
        try:
            c = delta_star.zero_effect_consistency(s, r)
        except OvboundError as exc:
            checks.append({"rmax": r, "refused": True, "reason": str(exc)})
            continue
        checks.append({"rmax": r, "residual": c.residual, "scale": c.scale, "ok": c.ok,
                       "refused": c.refused, "reason": c.reason})
    result = {"profile": prof.to_dict(), "reports": [r.to_dict() for r in reports], "consistency": checks}
    header = ["rmax", "delta_star", "Discont", "Slope"]
    if "csv" in cfg.formats:
        output.write_csv(cfg.out / "delta_star.csv", header + ["message"],
                         [(*r.row(), r.message) for r in reports])
    if "json" in cfg.formats:
        output.write_json(cfg.out / "delta_star.json", result)
    if cfg.plots and prof.degenerate is delta_star.Degeneracy.NONE:
        from . import plots

        plots.delta_star_curve(prof, cfg.out / "delta_star.png", [(r.rmax, r.delta_star) for r in reports])
    print(output.table(header, [r.row() for r in reports]), end="")
    for r in reports:
        if r.refused and r.message:
            print(f"R_max {r.rmax:g}: {r.message}")
    return result


def cmd_id_sets(cfg: RunConfig) -> list[dict]:
    s = load_summary(cfg)
    rmaxes = _require_rmax(cfg)
    prof = delta_star.profile(s)
    rows, human, out = [], [], []
    for r in rmaxes:
        ids = identified_sets.identified_sets(s, r)
        ds = delta_star.report(prof, r)
        rec = ids.to_dict()
        rec["delta_star"] = ds.to_dict()
        out.append(rec)
        s2 = ids.set2 or (None, None)
        rows.append((r, ids.discriminant_d, ids.set1[0], ids.set1[1], s2[0], s2[1],
                     ids.set1_contains_zero, ids.set2_contains_zero, ids.conclusions_differ,
                     ds.delta_star, ds.discont, ds.slope.value))
        human.append((r, ids.discriminant_d, output.interval(ids.set1), output.interval(ids.set2),
                      "" if ds.delta_star is None else ds.delta_star,
                      "TRUE" if ds.discont else "FALSE", ds.slope.value))
    if "csv" in cfg.formats:
        output.write_csv(cfg.out / "id_sets.csv",
                         ["rmax", "D", "set1_low", "set1_high", "set2_low", "set2_high",
                          "set1_contains_zero", "set2_contains_zero", "conclusions_differ",
                          "delta_star", "Discont", "Slope"], rows)
    if "json" in cfg.formats:
        output.write_json(cfg.out / "id_sets.json", out)
    print(output.table(["rmax", "D", "ID set 1", "ID set 2", "delta*", "Discont", "Slope"], human), end="")
    return out


def cmd_simulate(cfg: RunConfig):
    if cfg.dgp is None:
        raise InputError("simulate needs a DGP specification (--dgp FILE or 'dgp' in the config)")
    spec_raw = dict(cfg.dgp)
    if cfg.seed is not None:
        spec_raw["seed"] = cfg.seed
    spec = model_inputs.DgpSpec.from_dict(spec_raw)
    data, truth = model_inputs.simulate_dgp(spec)
    output.write_dataset(cfg.out / "data.csv", data)
    output.write_json(cfg.out / "truth.json", {"spec": spec_raw, **truth.to_dict()})
    print(f"wrote {data.n} rows to {cfg.out / 'data.csv'}; true beta {truth.beta:.3f}, "
          f"delta {truth.delta:.3f}, R_max {truth.rmax:.3f}")
    return data, truth


def cmd_sweep(cfg: RunConfig) -> list[tuple]:
    s = load_summary(cfg)
    boxes = parse_boxes(cfg, s)
    steps = cfg.steps or [_parse_number(x) for x in DEFAULT_STEPS]
    header = ["box", "step_e", "cells"] + (["runtime_seconds"] if cfg.timing else []) + Q_HEADER[1:]
    rows, human = [], []
    for k, box in enumerate(boxes, start=1):
        for sw in bate.step_size_sweep(s, box, steps):
            q = [sw.beta_star_quantiles[p] for p in bate.LEVELS]
            timing = [sw.runtime] if cfg.timing else []
            rows.append((k, sw.step_e, sw.cells, *timing, *q))
            human.append((str(k), sw.step_e, str(sw.cells), *timing, *q))
    if "csv" in cfg.formats:
        output.write_csv(cfg.out / "sweep.csv", header, rows)
    if "json" in cfg.formats:
        output.write_json(cfg.out / "sweep.json", [dict(zip(header, r)) for r in rows])
    print(output.table(header, human), end="")
    return rows


COMMANDS = {
    "fit": cmd_fit,
    "bounds": cmd_bounds,
    "delta-star": cmd_delta_star,
    "id-sets": cmd_id_sets,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


# -- argument parsing -------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--input", help="CSV with a header row")
    p.add_argument("--outcome", help="outcome column name")
    p.add_argument("--treatment", help="treatment column name")
    p.add_argument("--controls", help="comma-separated control columns (default: all others)")
    p.add_argument("--summary-json", help="regression summary JSON instead of raw data")
    p.add_argument("--box", action="append", metavar="DLO:DHI:RLO:RHI",
                   help="bounded (delta, R_max) box; RLO may be R for the intermediate R-squared")
    p.add_argument("--step", help="lattice step e (default 0.01; fractions like 1/50 accepted)")
    p.add_argument("--rmax", action="append", help="R_max value for delta* and identified sets")
    p.add_argument("--out-dir", help=f"output directory (default {DEFAULT_OUT})")
    p.add_argument("--format", help="csv, json or csv,json (default both)")
    p.add_argument("--strict", action="store_true", help="also report distributions without flagged cells")
    p.add_argument("--seed", type=int, help="random seed (simulate)")
    p.add_argument("--steps", help="comma-separated step sizes for sweep")
    p.add_argument("--dgp", help="DGP specification JSON (simulate)")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    p.add_argument("--no-timing", action="store_true", help="omit wall-clock fields from outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ovbound",
        description="Bounds on treatment effects under omitted-variable bias.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "fit": "run the short, intermediate and auxiliary regressions",
        "bounds": "bias and BATE distributions over bounded boxes",
        "delta-star": "the delta* diagnostic at given R_max values",
        "id-sets": "equal-selection identified sets at given R_max values",
        "simulate": "draw a synthetic dataset from a DGP specification",
        "sweep": "quantile stability across lattice step sizes",
    }
    for name, text in helps.items():
        _common(sub.add_parser(name, help=text, description=text))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        COMMANDS[args.command](cfg)
    except OvboundError as exc:
        print(f"ovbound: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"ovbound: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

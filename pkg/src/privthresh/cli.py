"""Command-line driver: sweeps, bound evaluation and the privacy audit.

Exit codes: 0 success, 1 runtime failure (or failed audit), 2 usage/config error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

from . import bounds
from .env import Instance, Setting, make_instance, privatized_view
from .harness import ExperimentConfig, FixedBudgetSetting, FixedConfidenceSetting, monte_carlo
from .fixed_confidence import DEFAULT_MAX_ROUNDS
from .privacy import dp_ratio_audit

log = logging.getLogger("privthresh")

FB_HEADER = ["axis_value", "estimate", "stderr", "ub_theorem1", "lb_theorem2", "n_trials", "seed"]
FC_HEADER = ["axis_value", "correct_rate", "stderr", "mean_T", "median_T", "p95_T",
             "ub_499", "lb_theorem4", "n_trials", "seed"]
STOPPED_WARN_RATE = 0.01
ENV_SEED = "PRIVTHRESH_SEED"
ENV_WORKERS = "PRIVTHRESH_WORKERS"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SweepSpec:
    base: ExperimentConfig
    axis: str
    values: tuple
    output_path: Optional[str] = None


def _require(d: dict, key: str, where: str):
    if not isinstance(d, dict) or key not in d:
        raise ConfigError(f"missing required field '{where}{key}'")
    return d[key]


def load_config(path: str, expect: str) -> SweepSpec:
    """Read a JSON experiment config; ``expect`` is 'fb' or 'fc'."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw, expect)


def parse_config(raw: dict, expect: str) -> SweepSpec:
    inst_raw = _require(raw, "instance", "")
    for key in ("means", "threshold"):
        _require(inst_raw, key, "instance.")
    try:
        instance = Instance.from_dict(inst_raw)
    except (ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"invalid instance: {exc}") from exc
    eps = float(_require(raw, "eps", ""))
    if not math.isfinite(eps) or eps < 0:
        raise ConfigError(f"eps must be finite and >= 0, got {eps}")
    st = _require(raw, "setting", "")
    kind = _require(st, "kind", "setting.")
    if kind != expect:
        raise ConfigError(f"setting.kind is '{kind}' but this command runs '{expect}'")
    K = instance.n_arms
    if kind == "fb":
        setting = FixedBudgetSetting(int(_require(st, "T", "setting.")))
    else:
        setting = FixedConfidenceSetting(float(_require(st, "delta", "setting.")),
                                         int(st.get("max_rounds", DEFAULT_MAX_ROUNDS)),
                                         float(st.get("radius_multiplier", 1.0)))
    seed = int(os.environ.get(ENV_SEED, raw.get("master_seed", 0)))
    workers = int(os.environ.get(ENV_WORKERS, raw.get("workers", 1)))
    try:
        base = ExperimentConfig(instance, eps, setting, int(_require(raw, "n_trials", "")), seed, workers)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    sweep = raw.get("sweep")
    if sweep is None:
        axis = "T" if kind == "fb" else "delta"
        values = (setting.T if kind == "fb" else setting.delta,)
    else:
        axis = _require(sweep, "axis", "sweep.")
        values = tuple(_require(sweep, "values", "sweep."))
        if axis not in ("T", "eps", "delta") or (axis, kind) in (("T", "fc"), ("delta", "fb")):
            raise ConfigError(f"sweep axis '{axis}' does not apply to setting '{kind}'")
        if not values:
            raise ConfigError("sweep.values must be non-empty")
        diffs = [b - a for a, b in zip(values, values[1:])]
        if not (all(d > 0 for d in diffs) or all(d < 0 for d in diffs)):
            raise ConfigError("sweep.values must be strictly monotone")

    for v in values:
        cfg = base.with_axis(axis, v)
        if kind == "fb":
            T = cfg.setting.T
            if T < K:
                raise ConfigError(f"T={T} < K={K}: the budget must cover one pull per arm "
                                  f"(the loss guarantee needs T >= 2K)")
            if T < 2 * K:
                log.warning("T=%d < 2K=%d: the loss guarantee requires T >= 2K", T, 2 * K)
        else:
            if not 0.0 < cfg.setting.delta < 1.0:
                raise ConfigError(f"delta must lie in the open interval (0, 1), got {cfg.setting.delta}")
            if cfg.setting.max_rounds < K:
                raise ConfigError("setting.max_rounds must be >= K")
        if not math.isfinite(cfg.eps) or cfg.eps < 0:
            raise ConfigError(f"eps must be finite and >= 0, got {cfg.eps}")
    return SweepSpec(base, axis, values, raw.get("output_path"))


def _bound(report, formula_id: str, variant: Optional[str] = None):
    for b in report.bound_values:
        if b.formula_id == formula_id and (variant is None or b.variant == variant):
            return b.value
    return None


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def run_sweep(spec: SweepSpec) -> list:
    return [monte_carlo(spec.base.with_axis(spec.axis, v), axis_value=v) for v in spec.values]


def fb_rows(spec: SweepSpec, reports) -> tuple[list[str], list[list]]:
    rows = [[r.axis_value, r.estimate, r.stderr, _bound(r, "fb_upper"),
             _bound(r, "fb_lower", "theorem"), r.n_trials, r.master_seed] for r in reports]
    return FB_HEADER, rows


def fc_rows(spec: SweepSpec, reports) -> tuple[list[str], list[list]]:
    header = list(FC_HEADER)
    rows = []
    for r in reports:
        s = r.stopping_time_stats
        rows.append([r.axis_value, r.estimate, r.stderr, s["mean"], s["median"], s["p95"],
                     _bound(r, "fc_upper"), _bound(r, "fc_lower"), r.n_trials, r.master_seed])
    capped = [r for r in reports if 1.0 - r.stopped_rate > STOPPED_WARN_RATE]
    if capped:
        for r in capped:
            log.warning("max_rounds exhausted in %.1f%% of trials at %s=%s",
                        100 * (1.0 - r.stopped_rate), spec.axis, r.axis_value)
        header.append("stopped_rate")
        for row, r in zip(rows, reports):
            row.append(r.stopped_rate)
    return header, rows


def write_csv(header, rows, path: Optional[str]) -> None:
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    finally:
        if path:
            fh.close()


def _write_reports(reports, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as fh:
            json.dump([r.to_dict() for r in reports], fh, indent=2)


def cmd_fixed_budget(args) -> int:
    spec = load_config(args.config, "fb")
    reports = run_sweep(spec)
    header, rows = fb_rows(spec, reports)
    write_csv(header, rows, args.output or spec.output_path)
    _write_reports(reports, args.report)
    return 0


def cmd_fixed_confidence(args) -> int:
    spec = load_config(args.config, "fc")
    reports = run_sweep(spec)
    header, rows = fc_rows(spec, reports)
    write_csv(header, rows, args.output or spec.output_path)
    _write_reports(reports, args.report)
    return 0


def evaluate_bounds(*, eps: float, h_eps: Optional[float] = None, instance: Optional[Instance] = None,
                    K: Optional[int] = None, T: Optional[int] = None,
                    delta: Optional[float] = None) -> list:
    """All four bound families at the given inputs, with their variants."""
    if not math.isfinite(eps) or eps < 0:
        raise ConfigError(f"eps must be finite and >= 0, got {eps}")
    if instance is not None:
        h_fb = privatized_view(instance, eps, Setting.FIXED_BUDGET).h_eps
        h_fc = privatized_view(instance, eps, Setting.FIXED_CONFIDENCE).h_eps
        K = instance.n_arms if K is None else K
    elif h_eps is not None:
        h_fb = h_fc = h_eps
    else:
        raise ConfigError("give either --h-eps or an instance (--means/--threshold)")
    if K is None:
        raise ConfigError("K is required with --h-eps")
    out = []
    try:
        if T is not None:
            if T >= 2 * K:
                out.append(bounds.fb_upper_bound(h_fb, K, T))
                out.append(bounds.fb_upper_bound(h_fb, K, T, variant="appendix"))
            else:
                raise ConfigError(f"T={T} < 2K={2 * K}: the fixed-budget upper bound is undefined")
            out.append(bounds.fb_lower_bound(h_fb, eps, T))
            out.append(bounds.fb_lower_bound(h_fb, eps, T, variant="proof"))
        if delta is not None:
            out.append(bounds.fc_upper_bound(h_fc, K, delta))
            out.append(bounds.fc_lower_bound(h_fc, eps, delta))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return out


def cmd_bounds(args) -> int:
    instance = None
    if args.means is not None:
        if args.threshold is None:
            raise ConfigError("--threshold is required with --means")
        try:
            instance = make_instance(args.means, args.threshold, args.tolerance)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    values = evaluate_bounds(eps=args.eps, h_eps=args.h_eps, instance=instance,
                             K=args.K, T=args.T, delta=args.delta)
    json.dump({"eps": args.eps, "bounds": [b.to_dict() for b in values]}, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def cmd_audit(args) -> int:
    if not math.isfinite(args.eps) or args.eps < 0:
        raise ConfigError(f"eps must be finite and >= 0, got {args.eps}")
    if not 0.0 < args.grid_step <= 1.0:
        raise ConfigError("--grid-step must lie in (0, 1]")
    report = dp_ratio_audit(args.eps, args.grid_step)
    json.dump(report.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="privthresh", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    for name, fn in (("fixed-budget", cmd_fixed_budget), ("fixed-confidence", cmd_fixed_confidence)):
        sp = sub.add_parser(name, help=f"Monte Carlo sweep of the {name} algorithm")
        sp.add_argument("config", help="JSON experiment config")
        sp.add_argument("-o", "--output", help="CSV path (default: stdout)")
        sp.add_argument("--report", help="also write full JSON reports here")
        sp.set_defaults(func=fn)

    sp = sub.add_parser("bounds", help="evaluate the upper and lower bounds")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--h-eps", type=float, help="privatized complexity H_eps")
    sp.add_argument("--means", type=float, nargs="+")
    sp.add_argument("--threshold", type=float)
    sp.add_argument("--tolerance", type=float, default=0.0)
    sp.add_argument("--K", type=int)
    sp.add_argument("--T", type=int)
    sp.add_argument("--delta", type=float)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("audit", help="analytic eps-DP audit of the mechanism")
    sp.add_argument("--eps", type=float, required=True)
    sp.add_argument("--grid-step", type=float, default=0.01)
    sp.set_defaults(func=cmd_audit)
    return p


def _configure_logging(verbose: bool) -> None:
    pkg = logging.getLogger("privthresh")
    for h in list(pkg.handlers):
        pkg.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
    pkg.addHandler(handler)
    pkg.setLevel(logging.DEBUG if verbose else logging.WARNING)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

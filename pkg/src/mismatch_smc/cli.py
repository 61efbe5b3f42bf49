"""Command-line front end: ``mismatch-smc run | compare | presets``.

Exit status: 0 on success, 1 when a ``run`` diverged, 2 on a bad invocation or
configuration (diagnostics name the offending field).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

from .config import PRESETS, apply_overrides, config_to_dict, load_config, preset
from .controllers import ControllerKind
from .errors import ConfigError, MismatchSmcError
from .simulation import ScenarioConfig, TrajectoryRecord, compute_metrics, simulate

__all__ = ["main", "build_parser", "run_one", "metrics_document", "comparison_rows", "format_table"]

OUT_ENV = "MISMATCH_SMC_OUT"
EXIT_OK, EXIT_DIVERGED, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mismatch-smc",
        description="Sliding-mode control of a plant with a mismatched disturbance: "
        "simulate SMC, ISMC, SMC-BNDO and SMC-SLDO and score them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_args(p: argparse.ArgumentParser) -> None:
        src = p.add_mutually_exclusive_group()
        src.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario (default scenario1)")
        src.add_argument("--config", metavar="PATH", help="JSON scenario document")
        p.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_ENV} or the working directory)")
        p.add_argument("--dt", type=float, help="sampling period [s]")
        p.add_argument("--duration", type=float, help="simulated time [s]")
        p.add_argument("--k", type=float, help="switching gain")
        p.add_argument("--lambda", dest="lam", type=float, help="sliding-surface slope")
        p.add_argument("--boundary-layer", type=float, help="saturation width replacing sgn(s)")
        p.add_argument("--name", help="output file prefix (default: scenario name)")
        p.add_argument("--plot", action="store_true", help="also write SVG plots")

    run = sub.add_parser("run", help="simulate one controller")
    scenario_args(run)
    run.add_argument("--controller", choices=[c.value for c in ControllerKind])

    cmp_ = sub.add_parser("compare", help="simulate all four controllers on one scenario")
    scenario_args(cmp_)
    cmp_.add_argument("--jobs", type=int, default=1, help="parallel worker processes (default 1)")

    sub.add_parser("presets", help="list built-in scenarios and their parameters")
    return parser


def _scenario(args: argparse.Namespace, controller: str | None = None) -> ScenarioConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = preset(args.preset or "scenario1")
    return apply_overrides(
        cfg,
        controller=controller,
        dt=args.dt,
        duration=args.duration,
        k=args.k,
        lam=args.lam,
        boundary_layer=args.boundary_layer,
        name=args.name,
    )


def _out_dir(args: argparse.Namespace) -> str:
    path = args.out or os.environ.get(OUT_ENV) or os.getcwd()
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise ConfigError("out", f"cannot create output directory {path!r}: {exc.strerror}") from None
    return path


def metrics_document(cfg: ScenarioConfig, tr: TrajectoryRecord, elapsed: float) -> dict:
    events = list(cfg.disturbance.event_times)
    doc = {
        "name": cfg.name,
        "controller": str(cfg.controller),
        "diverged": tr.diverged,
        "reason": tr.reason,
        "samples": len(tr),
        "t_end": float(tr["t"][-1]) if len(tr) else 0.0,
        "elapsed_s": round(elapsed, 4),
        "events": events,
        "settle_band": cfg.settle_band,
        "chattering_window": None if cfg.chattering_window is None else list(cfg.chattering_window),
        "metrics": None,
    }
    if tr.nfs_final is not None:
        doc["nfs_initial"] = tr.nfs_initial.flat()
        doc["nfs_final"] = tr.nfs_final.flat()
    if not tr.diverged:
        doc["metrics"] = compute_metrics(tr, events, cfg.settle_band, cfg.chattering_window).to_dict()
    return doc


def run_one(cfg: ScenarioConfig) -> tuple[TrajectoryRecord, dict]:
    t0 = time.perf_counter()
    tr = simulate(cfg)
    return tr, metrics_document(cfg, tr, time.perf_counter() - t0)


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _scenario(args, args.controller)
    out = _out_dir(args)
    tr, doc = run_one(cfg)
    doc["config"] = config_to_dict(cfg)
    csv_path = os.path.join(out, f"{cfg.name}_trajectory.csv")
    tr.to_csv(csv_path)
    with open(os.path.join(out, f"{cfg.name}_metrics.json"), "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    if args.plot:
        from .plotting import write_trajectory_plots

        write_trajectory_plots(tr, out, cfg.name)
    if tr.diverged:
        print(f"{cfg.name} [{cfg.controller}] diverged: {tr.reason} ({len(tr)} samples kept in {csv_path})",
              file=sys.stderr)
        return EXIT_DIVERGED
    m = doc["metrics"]
    print(f"{cfg.name} [{cfg.controller}] mean|x1|={m['mean_abs_x1']:.5g} "
          f"overshoot={m['overshoot']:.4g} chattering={m['chattering_index']:.4g} -> {csv_path}")
    return EXIT_OK


def comparison_rows(docs: Sequence[dict]) -> tuple[list[str], list[list[str]]]:
    events = docs[0]["events"] if docs else []
    header = ["controller", "status", "mean_abs_x1"]
    header += [f"settle_after_{e:g}s" for e in events]
    header += ["overshoot", "chattering_index", "rms_estimation_error"]
    rows = []
    for d in docs:
        m = d["metrics"]
        if m is None:
            rows.append([d["controller"], "diverged"] + [""] * (len(header) - 2))
            continue
        # Events after the last sample were never reached, which is not the same as unsettled.
        settle = [
            "n/a" if e > d["t_end"] else ("not settled" if s is None else f"{s:.3f}")
            for e, s in zip(d["events"], m["settling_times"])
        ]
        rows.append([
            d["controller"],
            "ok",
            f"{m['mean_abs_x1']:.6g}",
            *settle,
            f"{m['overshoot']:.6g}",
            f"{m['chattering_index']:.6g}",
            f"{m['rms_estimation_error']:.6g}",
        ])
    return header, rows


def format_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    return "\n".join(lines) + "\n"


def _cmd_compare(args: argparse.Namespace) -> int:
    base = _scenario(args)
    out = _out_dir(args)
    cfgs = [apply_overrides(base, controller=k.value) for k in ControllerKind]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(run_one, cfgs))
    else:
        results = [run_one(c) for c in cfgs]
    docs = [doc for _, doc in results]
    for doc in docs:
        if doc["diverged"]:
            print(f"warning: {doc['controller']} diverged: {doc['reason']}", file=sys.stderr)

    header, rows = comparison_rows(docs)
    with open(os.path.join(out, f"{base.name}_compare.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    table = format_table(header, rows)
    with open(os.path.join(out, f"{base.name}_compare.txt"), "w") as fh:
        fh.write(table)
    if args.plot:
        from .plotting import write_comparison_plots

        write_comparison_plots({str(c.controller): tr for c, (tr, _) in zip(cfgs, results)}, out, base.name)
    print(table, end="")
    return EXIT_OK


def _cmd_presets(args: argparse.Namespace) -> int:
    for name in sorted(PRESETS):
        cfg = PRESETS[name]()
        d = config_to_dict(cfg)
        print(name)
        rows = [
            ("controller", d["controller"]),
            ("lambda", f"{cfg.gains.lam:g}"),
            ("k", f"{cfg.gains.k:g}"),
            ("observer_gain", ", ".join(f"{v:g}" for v in cfg.observer_gain)),
            ("filter_bandwidth", f"{cfg.filter_bandwidth:g}"),
            ("nfs rules", f"{cfg.nfs.rules1} x {cfg.nfs.rules2}"),
            ("alpha1, alpha2", f"{cfg.nfs.alpha1:g}, {cfg.nfs.alpha2:g}"),
            ("x0", ", ".join(f"{v:g}" for v in cfg.x0)),
            ("dt", f"{cfg.dt:g}"),
            ("duration", f"{cfg.duration:g}"),
            ("integrator", cfg.integrator),
            ("disturbance", "; ".join(_describe_segment(s) for s in d["disturbance"]["segments"])),
        ]
        width = max(len(k) for k, _ in rows)
        for k, v in rows:
            print(f"  {k.ljust(width)}  {v}")
    return EXIT_OK


def _describe_segment(seg: dict) -> str:
    if seg["kind"] == "step":
        return f"t>={seg['start']:g}: {seg['level']:g}"
    if seg["kind"] == "multisine":
        sines = " + ".join(f"sin({w:g}t)" for w in seg["frequencies"])
        return f"t>={seg['start']:g}: {seg['amplitude']:g}({sines})"
    return f"t>={seg['start']:g}: 0"


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"run": _cmd_run, "compare": _cmd_compare, "presets": _cmd_presets}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"mismatch-smc: configuration error at {exc.path or '<root>'}: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except MismatchSmcError as exc:
        print(f"mismatch-smc: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end.

Subcommands: kernel (eval | scan | correlation), sample, palm, experiment.
Exit codes: 0 success, 1 a statistical verdict failed, 2 configuration or
precondition error, 3 numerical error. Outputs are canonical JSON with
repr-formatted floats, so fixed (config, seed) reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import json
import sys

from .config import (load_config, model_from_config, model_to_json,
                     pairs_from_config, points_from_config,
                     schedule_from_config, window_from_config)
from .errors import ConfigError, NumericalError, PalmDppError
from .experiments import (blaschke_divergence, det_identity_sweep,
                          moduli_law_check, order_separation, resolve_threads,
                          rigidity_variance, rn_verify)
from .kernelspace import christ_bound_scan, k_correlation, kernel_eval
from .palm import PalmAnchor, palm_downdate
from .sampler import batch_sample


def fmt_float(x) -> str:
    """Shortest round-trip decimal; integral values print without '.0'."""
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def _parse_point(text: str) -> complex:
    try:
        re_s, im_s = text.split(",")
        return complex(float(re_s), float(im_s))
    except ValueError as exc:
        raise ConfigError(f"expected a point 're,im', got {text!r}") from exc


def _parse_anchor(text: str) -> tuple:
    parts = text.split(",") if text else []
    if len(parts) % 2 != 0:
        raise ConfigError("anchor must be re,im[,re,im...]")
    vals = [float(v) for v in parts]
    return tuple(complex(a, b) for a, b in zip(vals[::2], vals[1::2]))


def _write_json(payload: dict, out_path=None):
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="palmdpp",
        description="Finite-rank determinantal point processes: kernels, "
                    "Palm conditioning, exact sampling, experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, replicas=False):
        sp.add_argument("--config", required=True, help="JSON run config")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--threads", type=int, default=None)
        if replicas:
            sp.add_argument("--replicas", type=int, default=None)

    kern = sub.add_parser("kernel", help="evaluate kernels")
    ksub = kern.add_subparsers(dest="kernel_command", required=True)
    keval = ksub.add_parser("eval")
    common(keval)
    keval.add_argument("--at", nargs=2, required=True, metavar="re,im",
                       help="two points")
    kscan = ksub.add_parser("scan")
    common(kscan)
    kscan.add_argument("--rmax", type=float, default=None)
    kcorr = ksub.add_parser("correlation")
    common(kcorr)
    kcorr.add_argument("--points", nargs="+", required=True, metavar="re,im")

    samp = sub.add_parser("sample", help="write configurations as JSONL")
    common(samp, replicas=True)
    samp.add_argument("--csv", default=None)

    palm = sub.add_parser("palm", help="emit a conditioned model as JSON")
    common(palm)
    palm.add_argument("--anchor", required=True, help="re,im[,re,im...]")

    exp = sub.add_parser("experiment", help="run a named experiment")
    exp.add_argument("name", choices=["rn-verify", "rigidity", "blaschke",
                                      "moduli", "detcheck", "order-sep"])
    common(exp, replicas=True)
    exp.add_argument("--csv", default=None)
    return parser


def _cfg_seed(args, cfg, default=0):
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be nonnegative")
        return args.seed
    return cfg.get("seed", default)


def _cfg_replicas(args, cfg, default):
    v = args.replicas if getattr(args, "replicas", None) is not None \
        else cfg.get("replicas", default)
    if v < 1:
        raise ConfigError("replicas must be >= 1")
    return v


def _cmd_kernel(args) -> int:
    cfg = load_config(args.config)
    model = model_from_config(cfg)
    if args.kernel_command == "eval":
        z, w = (_parse_point(t) for t in args.at)
        val = kernel_eval(model, z, w)
        sys.stdout.write(f"{fmt_float(val.real)} {fmt_float(val.imag)}\n")
        return 0
    if args.kernel_command == "scan":
        out = christ_bound_scan(model, r_max=args.rmax)
        _write_json(out, args.out)
        return 0
    pts = [_parse_point(t) for t in args.points]
    val = k_correlation(model, pts)
    sys.stdout.write(f"{fmt_float(val)}\n")
    return 0


def _cmd_sample(args) -> int:
    cfg = load_config(args.config)
    model = model_from_config(cfg)
    anchor = points_from_config(cfg.get("anchor"))
    seed = _cfg_seed(args, cfg)
    replicas = _cfg_replicas(args, cfg, 1)
    out = args.out or (cfg.get("output") or {}).get("path")
    csv = args.csv or (cfg.get("output") or {}).get("csv")
    if out is None:
        raise ConfigError("sample needs --out (or output.path in the config)")
    batch_sample(model, anchor or None, replicas, seed, out_path=out,
                 csv_path=csv, threads=resolve_threads(args.threads))
    return 0


def _cmd_palm(args) -> int:
    cfg = load_config(args.config)
    model = model_from_config(cfg)
    anchor = _parse_anchor(args.anchor)
    down = palm_downdate(model, PalmAnchor(anchor)) if anchor else model
    _write_json(model_to_json(down), args.out)
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    seed = _cfg_seed(args, cfg)
    threads = resolve_threads(args.threads)
    thresholds = cfg.get("thresholds", {})
    zthr = thresholds.get("z", 3.0)
    pthr = thresholds.get("p_value", 1e-3)
    exp_cfg = cfg.get("experiment", {})
    name = args.name

    if name == "rn-verify":
        model = model_from_config(cfg)
        report = rn_verify(
            model,
            points_from_config(cfg.get("anchor")),
            points_from_config(cfg.get("anchor_q")),
            replicas=_cfg_replicas(args, cfg, 100_000),
            schedule=schedule_from_config(cfg),
            seed=seed, threads=threads, z_threshold=zthr,
            stability=exp_cfg.get("stability", True),
            stability_fraction=exp_cfg.get("stability_fraction", 8),
            collect_rows=bool(args.csv))
    elif name == "rigidity":
        model = model_from_config(cfg)
        report = rigidity_variance(
            model, epsilons=exp_cfg.get("epsilons", [0.5, 0.1, 0.02]),
            r0=exp_cfg.get("r0", 1.0),
            replicas=_cfg_replicas(args, cfg, 2000),
            seed=seed, threads=threads, z_threshold=zthr)
    elif name == "blaschke":
        report = blaschke_divergence(
            k_values=exp_cfg.get("k_values", [100, 1000, 10000]),
            replicas=_cfg_replicas(args, cfg, 20000),
            seed=seed, z_threshold=zthr)
    elif name == "moduli":
        report = moduli_law_check(
            rank=exp_cfg.get("moduli_rank", 8),
            replicas=_cfg_replicas(args, cfg, 10000),
            seed=seed, threads=threads, p_threshold=pthr)
    elif name == "detcheck":
        model = model_from_config(cfg)
        report = det_identity_sweep(
            model, pairs=pairs_from_config(cfg),
            replicas=_cfg_replicas(args, cfg, 100_000),
            seed=seed, threads=threads, z_threshold=zthr)
    else:
        model = model_from_config(cfg)
        report = order_separation(
            model,
            points_from_config(cfg.get("anchor")),
            points_from_config(cfg.get("anchor_q")),
            window=window_from_config(cfg),
            replicas=_cfg_replicas(args, cfg, 200),
            seed=seed, threads=threads)

    out = args.out or (cfg.get("output") or {}).get("path")
    _write_json(report.to_dict(), out)
    if args.csv:
        _write_report_csv(report, args.csv)
    sys.stderr.write(f"{report.name}: "
                     f"{'pass' if report.passed else 'FAIL'} "
                     f"({report.runtime_seconds:.1f}s)\n")
    return 0 if report.passed else 1


def _write_report_csv(report, path):
    import csv as _csv
    rows = report.extras.get("_per_replica")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        if rows is not None:
            names = rows["stat_names"]
            writer.writerow(["pass", "replica"] + names + ["weight"])
            for i, r in enumerate(rows["direct"]):
                writer.writerow(["direct", i] + [repr(float(v)) for v in r]
                                + [""])
            for i, r in enumerate(rows["weighted"]):
                writer.writerow(["weighted", i]
                                + [repr(float(v)) for v in r]
                                + [repr(float(rows["weights"][i]))])
            return
        writer.writerow(["check", "passed", "metric", "value"])
        for v in report.verdicts:
            metric = "z" if "z" in v else ("p_value" if "p_value" in v else "")
            writer.writerow([v["check"], int(v["passed"]), metric,
                             repr(v.get(metric, ""))])


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "kernel":
            return _cmd_kernel(args)
        if args.command == "sample":
            return _cmd_sample(args)
        if args.command == "palm":
            return _cmd_palm(args)
        return _cmd_experiment(args)
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except OSError as exc:
        sys.stderr.write(f"i/o error: {exc}\n")
        return 2
    except NumericalError as exc:
        sys.stderr.write(f"numerical error: {exc}\n")
        return 3
    except PalmDppError as exc:  # pragma: no cover - safety net
        sys.stderr.write(f"error: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())

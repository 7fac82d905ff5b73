"""Command-line entry point.

Subcommands: drive, weld, occupation, c1, verify, martingale.
Exit codes: 0 success, 1 verification failure, 2 usage error, 3 runtime failure.
Options come from defaults, then an optional ``--config`` key=value file, then flags.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .drivers import SamplerError, extend_driver, sample_brownian_driver, sample_rho_driver
from .greens import martingale_check
from .harness import (DEFAULT_ETA, VerifyConfig, check_rect, estimate_c1_lifetime, estimate_c1_occupation,
                      occupation_samples, verify_theorem)
from .loewner import DrivingPath, Incomplete, rect_occupation, welding_curve, zero_path
from .montecarlo import Checkpoint, CheckpointError, Interrupted, Runner, canonical_json
from .rng import RngSpec

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

# options that change how a run executes but never what it computes
NON_RESULT_KEYS = ("workers", "checkpoint", "out", "config", "stop_after_chunks", "command")


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _rect(text):
    vals = _floats(text)
    if len(vals) != 4:
        raise argparse.ArgumentTypeError("rect needs x1,x2,y1,y2")
    return vals


def _add_common(p, *, seed=True):
    p.add_argument("--config", help="key=value file; flags override it")
    p.add_argument("--kappa", type=float)
    if seed:
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--stream", type=int, default=0)
    p.add_argument("--out", help="output file or directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--checkpoint", help="checkpoint file for resumable runs")
    p.add_argument("--stop-after-chunks", type=int, default=None, help=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bsle", description="Backward SLE simulation and verification")
    ap.add_argument("--version", action="version", version=f"bsle {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("drive", help="sample driving functions to CSV")
    _add_common(p)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--rho", type=float, nargs=2, metavar=("RHO_PLUS", "RHO_MINUS"))
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--y", type=float, default=-1.0)
    p.add_argument("--extend", type=float, default=None, help="extend rho drivers up to this time")

    p = sub.add_parser("weld", help="welding curve swallowing times")
    _add_common(p)
    p.add_argument("--driver", choices=("brownian", "zero", "file"), default="brownian")
    p.add_argument("--input", help="DrivingPath CSV for --driver file")
    p.add_argument("--step", type=float, default=0.001)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--mesh-n", type=int, default=200)
    p.add_argument("--r-min", type=float, default=1e-3)
    p.add_argument("--r-max", type=float, default=4.0)

    p = sub.add_parser("occupation", help="rectangle occupation times")
    _add_common(p)
    p.add_argument("--rect", type=_rect, default=[0.5, 1.5, -1.5, -0.5])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--driver", choices=("brownian", "zero"), default="brownian")
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    p.add_argument("--step", type=float, default=0.01, help="grid step for --driver zero")
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--chunk", type=int, default=1000)

    p = sub.add_parser("c1", help="estimate C1 by one route")
    _add_common(p)
    p.add_argument("--route", choices=("lifetime", "occupation"), required=False)
    p.add_argument("--n", type=int, default=10_000, help="paths (occupation) or paths per node (lifetime)")
    p.add_argument("--nodes", type=int, default=16)
    p.add_argument("--rect", type=_rect, default=[0.5, 1.5, -1.5, -0.5])
    p.add_argument("--eta", type=float, default=DEFAULT_ETA)
    p.add_argument("--step", type=float, default=2.0 ** -8, help="reduced-diffusion step")
    p.add_argument("--tail-tol", type=float, default=1e-7)
    p.add_argument("--chunk", type=int, default=1000)

    p = sub.add_parser("verify", help="run the verification suite")
    _add_common(p)
    p.add_argument("--kappas", type=_floats, default=None, help="comma-separated (default: --kappa or 2,4)")
    p.add_argument("--preset", choices=("full", "quick"), default="full")
    p.add_argument("--parts", default=None, help="comma-separated subset of checks")
    p.add_argument("--chunk", type=int, default=1000)

    p = sub.add_parser("martingale", help="local martingale check")
    _add_common(p)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--y", type=float, default=-1.0)
    p.add_argument("--times", type=_floats, default=[0.01, 0.02])
    p.add_argument("--cap", type=float, default=10.0)
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--step", type=float, default=1e-4)
    p.add_argument("--chunk", type=int, default=1000)
    return ap


def read_config(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for no, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{no}: expected key=value")
            k, v = line.split("=", 1)
            out[k.strip().replace("-", "_")] = v.strip()
    return out


def parse(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        sub = ap._subparsers._group_actions[0].choices[args.command]
        try:
            cfg = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        known = {a.dest: a for a in sub._actions}
        defaults = {}
        for k, v in cfg.items():
            if k not in known or k in ("config", "help"):
                raise UsageError(f"unknown config key {k!r}")
            act = known[k]
            try:
                if act.nargs in (2, "+"):
                    defaults[k] = [act.type(t) if act.type else t for t in v.replace(",", " ").split()]
                else:
                    defaults[k] = act.type(v) if act.type else v
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"bad value for config key {k!r}: {exc}") from None
        sub.set_defaults(**defaults)
        args = ap.parse_args(argv)
    return args


def run_config(args) -> dict:
    """The options that determine the result, as a JSON-ready dict."""
    return {k: v for k, v in sorted(vars(args).items()) if k not in NON_RESULT_KEYS} | {"command": args.command}


def _header(args) -> dict:
    return {"tool": "bsle", "version": __version__, "config": run_config(args)}


def _header_lines(args):
    h = _header(args)
    return [f"bsle {h['version']}", "config " + canonical_json(h["config"])]


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=True) + "\n"


def _csv_text(header_lines, columns, rows) -> str:
    buf = io.StringIO()
    for h in header_lines:
        buf.write(f"# {h}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _require_kappa(args):
    if args.kappa is None:
        raise UsageError("--kappa is required")
    if not 0 < args.kappa <= 4:
        raise UsageError("--kappa must lie in (0, 4]")


def _runner(args, run_key_extra=""):
    if args.workers < 1:
        raise UsageError("--workers must be >= 1")
    ck = None
    if args.checkpoint:
        key = hashlib.sha256((canonical_json(_header(args)) + run_key_extra).encode()).hexdigest()
        ck = Checkpoint.open(args.checkpoint, key)
    return Runner(workers=args.workers, chunk=getattr(args, "chunk", 1000), checkpoint=ck,
                  stop_after_chunks=args.stop_after_chunks)


# ---------------------------------------------------------------- commands -

def cmd_drive(args) -> int:
    _require_kappa(args)
    if args.n < 1 or not args.step > 0:
        raise UsageError("need --n >= 1 and --step > 0")
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    head = _header_lines(args)
    for i in range(args.n):
        rng = RngSpec(args.seed, args.stream + i)
        if args.rho is None:
            path = sample_brownian_driver(args.kappa, args.step, args.t_max, rng)
            path.to_csv(os.path.join(out, f"driver_{i:05d}.csv"), head)
            continue
        res = sample_rho_driver(args.kappa, args.rho[0], args.rho[1], args.x, args.y, args.step, rng)
        path = res.driver
        if args.extend is not None:
            path = extend_driver(res, args.step, args.extend, rng)
        path.to_csv(os.path.join(out, f"driver_{i:05d}.csv"), head)
        _write(os.path.join(out, f"driver_{i:05d}.json"), _json_text(_header(args) | res.sidecar()))
    return EXIT_OK


def _driver_for(args):
    if args.driver == "zero":
        return zero_path(args.step, args.t_max)
    if args.driver == "file":
        if not args.input:
            raise UsageError("--driver file needs --input")
        return DrivingPath.from_csv(args.input)
    _require_kappa(args)
    return sample_brownian_driver(args.kappa, args.step, args.t_max, RngSpec(args.seed, args.stream))


def cmd_weld(args) -> int:
    rec = welding_curve(_driver_for(args), r_min=args.r_min, r_max=args.r_max, n=args.mesh_n)
    rows = [("pos", x, t) for x, t in zip(rec.mesh_pos, rec.tau_pos)]
    rows += [("neg", y, t) for y, t in zip(rec.mesh_neg, rec.tau_neg)]
    _write(args.out, _csv_text(_header_lines(args) + [f"unswallowed {rec.unswallowed}"],
                               ["side", "point", "tau"], rows))
    return EXIT_OK


def cmd_occupation(args) -> int:
    try:
        rect = check_rect(args.rect)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.driver == "zero":
        t_max = args.horizon or 64.0 * max(rect[1], -rect[2]) ** 2 / 4.0
        occ = rect_occupation(zero_path(args.step, t_max), rect)
        censored = isinstance(occ, Incomplete)
        val = occ.lower if censored else occ
        _write(args.out, _csv_text(_header_lines(args), ["path_index", "seed_stream", "value", "censored_flag"],
                                   [(0, args.stream, float(val), int(censored))]))
        return EXIT_OK
    _require_kappa(args)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    rng = RngSpec(args.seed, args.stream)
    runner = _runner(args)
    vals = runner.samples(lambda a, b: occupation_samples(args.kappa, rect, rng, a, b, eta=args.eta,
                                                         horizon=args.horizon), args.n)
    rows = [(i, args.stream + i, float(v), int(c)) for i, (v, c) in enumerate(vals)]
    _write(args.out, _csv_text(_header_lines(args), ["path_index", "seed_stream", "value", "censored_flag"],
                               rows))
    return EXIT_OK


def cmd_c1(args) -> int:
    _require_kappa(args)
    if args.route is None:
        raise UsageError("--route is required")
    rng = RngSpec(args.seed, args.stream)
    runner = _runner(args)
    if args.route == "lifetime":
        res = estimate_c1_lifetime(args.kappa, args.nodes, args.n, rng, step=args.step, tail_tol=args.tail_tol,
                                   runner=runner)
    else:
        try:
            rect = check_rect(args.rect)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        res = estimate_c1_occupation(args.kappa, rect, args.n, rng, eta=args.eta, runner=runner)
    _write(args.out, _json_text(_header(args) | {"result": res.to_dict()}))
    return EXIT_OK


def verify_config(args) -> VerifyConfig:
    cfg = VerifyConfig.quick() if args.preset == "quick" else VerifyConfig()
    if args.parts:
        cfg.parts = tuple(p for p in args.parts.split(",") if p)
        bad = set(cfg.parts) - set(VerifyConfig().parts)
        if bad:
            raise UsageError(f"unknown parts: {','.join(sorted(bad))}")
    return cfg


def cmd_verify(args) -> int:
    kappas = args.kappas or ([args.kappa] if args.kappa is not None else [2.0, 4.0])
    for k in kappas:
        if not 0 < k <= 4:
            raise UsageError("kappa values must lie in (0, 4]")
    cfg = verify_config(args)
    runner = _runner(args, canonical_json(cfg.to_dict()))
    rng = RngSpec(args.seed, args.stream)
    reports = []
    for k in kappas:
        parts = cfg.parts if k == 4.0 else tuple(p for p in cfg.parts if p != "histogram")
        sub = VerifyConfig(**(cfg.__dict__ | {"parts": parts}))
        reports.append(verify_theorem(k, sub, rng, runner=runner))
    doc = _header(args) | {"verify_config": cfg.to_dict(), "reports": reports,
                           "passed": all(r["passed"] for r in reports)}
    _write(args.out, _json_text(doc))
    return EXIT_OK if doc["passed"] else EXIT_FAIL


def cmd_martingale(args) -> int:
    _require_kappa(args)
    rng = RngSpec(args.seed, args.stream)
    try:
        res = martingale_check(args.kappa, args.x, args.y, args.times, args.cap, args.n, rng, step=args.step,
                               runner=_runner(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = _header(args) | {"result": res.to_dict(), "passed": res.passes()}
    _write(args.out, _json_text(doc))
    return EXIT_OK if doc["passed"] else EXIT_FAIL


COMMANDS = {"drive": cmd_drive, "weld": cmd_weld, "occupation": cmd_occupation, "c1": cmd_c1,
            "verify": cmd_verify, "martingale": cmd_martingale}


def main(argv=None) -> int:
    try:
        args = parse(argv)
    except UsageError as exc:
        print(f"bsle: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"bsle {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CheckpointError as exc:
        print(f"bsle {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Interrupted as exc:
        print(f"bsle {args.command}: interrupted: {exc}; rerun with the same --checkpoint to resume",
              file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"bsle {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SamplerError, RuntimeError, OSError) as exc:
        print(f"bsle {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

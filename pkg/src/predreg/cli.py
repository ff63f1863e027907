"""Command-line surface: simulate, estimate, test, mc.

Every command is a thin adapter over the library; outputs equal direct
library calls on identical inputs. A JSON run manifest is written next to
every output so runs can be replayed bit-identically.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import re
import sys

import numpy as np

from . import __version__
from .dgp import (
    DgpSpec,
    InnovationLaw,
    LinearFilter,
    PersistenceRule,
    RegressionFunction,
    Sample,
    read_sample_csv,
    simulate,
    write_sample_csv,
)
from .errors import (
    BadInput,
    DegenerateVariance,
    NoLocalMass,
    PredregError,
    RhoOutOfRange,
)
from .estimate import BandwidthRule, point_inference
from .hypotests import predictability_test
from .kernels import get_kernel
from .montecarlo import STUDIES, ExperimentConfig

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_DEGENERATE = 3


# --------------------------------------------------------------------------
# helpers
# --------------------------------------------------------------------------


def _parse_floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise BadInput(f"expected comma-separated numbers, got {text!r}") from exc


def _default_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    env = os.environ.get("PREDREG_SEED")
    if env is not None:
        return int(env)
    return 0


def _persistence_from_args(args) -> PersistenceRule:
    if args.rho is not None:
        return PersistenceRule("stationary", rho=args.rho)
    rule = args.rho_rule or "unit"
    if rule == "stat":
        raise BadInput("--rho-rule stat needs --rho instead")
    if rule == "mi":
        if args.rho_c is None or args.rho_a is None:
            raise BadInput("--rho-rule mi needs --rho-c and --rho-a")
        return PersistenceRule("mildly_integrated", c=args.rho_c, a=args.rho_a)
    if rule == "lur":
        if args.rho_c is None:
            raise BadInput("--rho-rule lur needs --rho-c")
        return PersistenceRule("local_to_unity", c=args.rho_c)
    return PersistenceRule("unit_root")


def _m_from_args(args) -> RegressionFunction:
    kind = args.m
    kwargs = {"kind": kind}
    if kind == "constant":
        kwargs["theta"] = args.m_param if args.m_param is not None else 0.0
    elif kind == "linear":
        kwargs["slope"] = args.m_param if args.m_param is not None else 1.0
    elif kind == "logistic":
        kwargs["scale"] = args.m_param if args.m_param is not None else 1.0
    elif kind == "sine":
        kwargs["freq"] = args.m_param if args.m_param is not None else 1.0
    return RegressionFunction(**kwargs)


def _law_from_args(name: str, df) -> InnovationLaw:
    if name == "student_t":
        return InnovationLaw("student_t", df=df if df is not None else 5)
    return InnovationLaw(name)


def _bandwidth_from_args(args):
    if getattr(args, "h", None) is not None:
        return float(args.h)
    if getattr(args, "h_rule", None) == "data":
        return BandwidthRule("data_driven", c_h=args.h_ch, gamma=args.h_gamma)
    return BandwidthRule("deterministic", c_h=args.h_ch, gamma=args.h_gamma)


def _write_manifest(path, command, argv, seed, outputs, started):
    manifest = {
        "command": command,
        "argv": list(argv),
        "master_seed": seed,
        "tool_version": __version__,
        "started": started,
        "finished": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": [str(p) for p in outputs],
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _read_series(path) -> Sample:
    """Read either a `t,x,y` sample file or a bare `y,x` pair file."""
    with open(path, newline="") as fh:
        header = fh.readline().strip().lower().split(",")
    header = [c.strip() for c in header]
    if header[:3] == ["t", "x", "y"]:
        return read_sample_csv(path)
    if header[:2] == ["y", "x"]:
        ys, xs = [], []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                ys.append(float(row["y"]))
                xs.append(float(row["x"]))
        if not ys:
            raise BadInput(f"{path}: no data rows")
        # dummy leading pair so that all (x, y) rows enter the estimation sums
        return Sample(
            x=np.concatenate(([0.0], xs)),
            y=np.concatenate(([np.nan], ys)),
            seed=-1,
            spec_digest="external",
        )
    raise BadInput(f"{path}: expected header 't,x,y' or 'y,x', got {header}")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_simulate(args, argv) -> int:
    started = _now()
    seed = _default_seed(args)
    spec = DgpSpec(
        m=_m_from_args(args),
        persistence=_persistence_from_args(args),
        filter=LinearFilter(tuple(_parse_floats(args.filter))),
        eps_law=_law_from_args(args.eps_law, args.eps_df),
        u_law=_law_from_args(args.u_law, args.u_df),
        sigma_u=args.sigma_u,
        n=args.n,
    )
    sample = simulate(spec, seed)
    write_sample_csv(sample, args.out)
    _write_manifest(args.out + ".manifest.json", "simulate", argv, seed,
                    [args.out], started)
    print(f"wrote {args.out} (n={spec.n}, seed={seed}, spec={spec.digest()})")
    return EXIT_OK


def cmd_estimate(args, argv) -> int:
    started = _now()
    sample = _read_series(args.infile)
    points = _parse_floats(args.points)
    if not points:
        raise BadInput("--points must name at least one spatial point")
    kernel = get_kernel(args.kernel)
    bw = _bandwidth_from_args(args)

    rows = []
    n_failed = 0
    for x in points:
        try:
            inf = point_inference(sample, kernel, x, bw, alpha=args.alpha)
            rows.append([repr(x), repr(inf.m_hat), repr(inf.s_n), repr(inf.ci_lo),
                         repr(inf.ci_hi), repr(inf.signal), repr(inf.h_used),
                         inf.n, "ok"])
        except NoLocalMass:
            rows.append([repr(x), "", "", "", "", "", "", sample.n, "no_local_mass"])
            n_failed += 1
        except DegenerateVariance:
            rows.append([repr(x), "", "", "", "", "", "", sample.n, "degenerate_variance"])
            n_failed += 1

    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "m_hat", "s_n", "ci_lo", "ci_hi", "signal", "h", "n", "status"])
        w.writerows(rows)
    _write_manifest(args.out + ".manifest.json", "estimate", argv,
                    _default_seed(args), [args.out], started)
    if n_failed == len(points):
        print("all points failed", file=sys.stderr)
        return EXIT_DEGENERATE
    print(f"wrote {args.out} ({len(points) - n_failed}/{len(points)} points ok)")
    return EXIT_OK


def cmd_test(args, argv) -> int:
    started = _now()
    sample = _read_series(args.infile)
    points = _parse_floats(args.points)
    kernel = get_kernel(args.kernel)
    bw = _bandwidth_from_args(args)
    result = predictability_test(sample, kernel, points, bw, alpha=args.alpha)
    payload = result.to_json(indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(payload + "\n")
        _write_manifest(args.out + ".manifest.json", "test", argv,
                        _default_seed(args), [args.out], started)
    else:
        print(payload)
    verdict_sum = "reject" if result.reject_sum else "fail to reject"
    verdict_max = "reject" if result.reject_max else "fail to reject"
    print(f"F_sum={result.f_sum:.4f} (crit {result.crit_sum:.4f}): {verdict_sum}; "
          f"F_max={result.f_max:.4f} (crit {result.crit_max:.4f}): {verdict_max} "
          f"at alpha={result.alpha:g}")
    return EXIT_OK


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text)


def cmd_mc(args, argv) -> int:
    started = _now()
    with open(args.config) as fh:
        raw = json.load(fh)
    if args.workers is not None:
        raw["workers"] = args.workers
    if "master_seed" not in raw:
        raw["master_seed"] = _default_seed(args)
    config = ExperimentConfig.from_dict(raw)
    report = STUDIES[args.study](config)

    out = args.out
    paths = [out + ".csv", out + ".json"]
    report.write_csv(paths[0])
    report.write_json(paths[1])
    if args.plot_data:
        by_metric = {}
        for r in report.records:
            by_metric.setdefault(r.metric, []).append(r)
        for metric, records in by_metric.items():
            p = f"{out}_plot_{_slug(metric)}.csv"
            with open(p, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["rule", "n", "estimate", "mc_se"])
                for r in records:
                    w.writerow([r.rule, r.n, repr(r.estimate), repr(r.mc_se)])
            paths.append(p)
    _write_manifest(out + ".manifest.json", f"mc {args.study}", argv,
                    config.master_seed, paths, started)
    print(f"wrote {', '.join(paths)} ({len(report.records)} records, "
          f"{report.wall_time_s:.1f}s)")
    return EXIT_OK


def cmd_replay(args, argv) -> int:
    with open(args.manifest) as fh:
        manifest = json.load(fh)
    return main(manifest["argv"])


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def _add_bandwidth_flags(p):
    p.add_argument("--h", type=float, default=None, help="fixed bandwidth")
    p.add_argument("--h-rule", choices=["det", "data"], default="det",
                   help="bandwidth rule when --h is absent")
    p.add_argument("--h-ch", type=float, default=1.0, help="bandwidth constant c_h")
    p.add_argument("--h-gamma", type=float, default=0.4, help="bandwidth exponent")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="predreg",
        description="Nonparametric predictive regression: simulation, "
                    "estimation, testing and Monte Carlo studies.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a sample path to CSV")
    p.add_argument("--rho", type=float, default=None, help="fixed AR parameter")
    p.add_argument("--rho-rule", choices=["stat", "mi", "lur", "unit"], default=None)
    p.add_argument("--rho-c", type=float, default=None)
    p.add_argument("--rho-a", type=float, default=None)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", choices=["zero", "constant", "linear", "logistic", "sine"],
                   default="zero")
    p.add_argument("--m-param", type=float, default=None,
                   help="theta / slope / scale / freq for the chosen m")
    p.add_argument("--sigma-u", type=float, default=1.0)
    p.add_argument("--eps-law", choices=["gaussian", "laplace", "student_t"],
                   default="gaussian")
    p.add_argument("--eps-df", type=int, default=None)
    p.add_argument("--u-law", choices=["gaussian", "laplace", "student_t"],
                   default="gaussian")
    p.add_argument("--u-df", type=int, default=None)
    p.add_argument("--filter", default="1", help="comma-separated MA coefficients")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("estimate", help="pointwise estimates and intervals from a CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--points", required=True, help="comma-separated spatial points")
    p.add_argument("--kernel", default="epanechnikov")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=None)
    _add_bandwidth_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_estimate)

    p = sub.add_parser("test", help="non-predictability test on a series")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--points", required=True)
    p.add_argument("--kernel", default="epanechnikov")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=None)
    _add_bandwidth_flags(p)
    p.add_argument("--out", default=None, help="JSON output path (stdout if absent)")
    p.set_defaults(fn=cmd_test)

    p = sub.add_parser("mc", help="Monte Carlo studies")
    p.add_argument("study", choices=sorted(STUDIES))
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", required=True, help="output path prefix")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--plot-data", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_mc)

    p = sub.add_parser("replay", help="re-run a command from its manifest")
    p.add_argument("manifest")
    p.set_defaults(fn=cmd_replay)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args, argv)
    except (NoLocalMass, DegenerateVariance) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (BadInput, RhoOutOfRange, FileNotFoundError, json.JSONDecodeError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PredregError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

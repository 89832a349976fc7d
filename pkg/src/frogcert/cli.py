"""Command-line front end.

Exit codes: 0 success (negative certificates included), 1 oracle failure,
2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys

import numpy as np

from . import __version__, laws
from .analytic import REGIONS, BoundParams, total_bound
from .blocks import block_stats, certify
from .oracles import ball_bound_oracle, hit_oracle, phi_oracle
from .parallel import map_chunks, worker_count
from .sim import (
    SimConfig,
    estimate_island_weight,
    frog_model,
)
from .tree import TreeParams

log = logging.getLogger("frogcert")


class InputError(ValueError):
    pass


# ---------------------------------------------------------------- output

def _clean(x):
    """JSON-safe copy with every non-finite float replaced by None."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return repr(x) if math.isfinite(x) else ""


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) if not isinstance(v, str) else v for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def _require(args, *names):
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise InputError(f"missing required option(s): {', '.join('--' + n for n in missing)}")


def cmd_bound(args) -> int:
    _require(args, "d", "mu", "m")
    if args.mode == "closed-form":
        lam = 1 / math.sqrt(args.d) if args.lam is None else args.lam
        if not math.isclose(lam, 1 / math.sqrt(args.d), rel_tol=1e-12) or args.beta != 1:
            raise InputError("closed-form mode needs lambda = 1/sqrt(d) and beta = 1")
    p = BoundParams(args.d, args.mu, args.m, args.lam, args.beta, args.c_hit)
    rep = total_bound(p, mode=args.mode)
    for r in REGIONS:
        print(f"{r:>5}  {rep.region_sums[r]:.12g}", file=sys.stderr)
    print(f"total  {rep.total:.12g}\nalpha  {rep.alpha:.12g}", file=sys.stderr)
    out = rep.to_dict()
    out["mode"] = args.mode
    _emit(_dumps(out), args.out)
    return 0


def cmd_certify(args) -> int:
    _require(args, "method")
    if args.method not in ("two-point", "infinite-mean", "two-type"):
        raise InputError(f"unknown method {args.method!r}")
    cert = certify(args.method, args.d, args.mu, args.m, args.lam, args.n_max)
    text = _dumps(cert.to_dict())
    _emit(text, args.out)
    if args.out not in (None, "-"):
        state = "certified" if cert.transient_certified else "not certified"
        print(f"{args.method}: {state}, alpha={cert.alpha}", file=sys.stderr)
    return 0


def _law_from(args):
    if args.law is not None:
        if isinstance(args.law, dict):
            return laws.from_dict(args.law)
        return laws.parse(args.law)
    if args.N is not None:
        return laws.TwoPoint(args.N, args.mu)
    return None


def _sim_config(args, default_law) -> SimConfig:
    law = _law_from(args) or default_law
    params = TreeParams(args.d, args.mode)
    return SimConfig(params, law, args.lam, args.R_record, args.R_kill, args.tmax,
                     args.seed, args.replicas, args.max_population)


def _island(args) -> tuple[str, dict]:
    cfg = _sim_config(args, laws.TwoPoint(16, 1.0))
    est = estimate_island_weight(cfg, conditional=args.conditional, workers=args.workers)
    biases = est.biases if est.biases is not None else [None] * len(est.weights)
    rows = []
    for r, (n, w, b) in enumerate(zip(est.counts.tolist(), est.weights.tolist(), biases)):
        rows.append([r, cfg.seed, n, w, b, None, ""])
    rows.append(["mean", cfg.seed, float(est.counts.mean()), est.mean, est.bias_bound,
                 est.stderr, "1" if est.truncated else "0"])
    text = _csv(["replica", "seed", "n_walkers", "weight", "bias_bound", "stderr", "truncated"],
                rows)
    plot = {"kind": "island", "mean": est.mean, "stderr": est.stderr,
            "bias_bound": est.bias_bound, "upper": est.upper,
            "weight_quantiles": dict(zip(["q50", "q90", "q99", "max"],
                                         np.quantile(est.weights, [0.5, 0.9, 0.99, 1.0])
                                         .tolist() if len(est.weights) else []))}
    return text, plot


FROG_FIELDS = ["root_visits", "sites_visited", "max_level", "min_level", "awakened",
               "truncated", "capped", "steps"]


def _frog(args) -> tuple[str, dict]:
    cfg = _sim_config(args, laws.constant(1))

    def run(part):
        return [frog_model(cfg, r, root_walker=True) for r in part]

    stats = [s for part in map_chunks(run, cfg.replicas, args.workers, 16) for s in part]
    rows = [[r, cfg.seed] + [getattr(s, f) for f in FROG_FIELDS] for r, s in enumerate(stats)]
    arr = np.array([[float(getattr(s, f)) for f in FROG_FIELDS] for s in stats])
    n = len(stats)
    rows.append(["mean", cfg.seed] + arr.mean(axis=0).tolist())
    if n > 1:
        rows.append(["stderr", cfg.seed] + (arr.std(axis=0, ddof=1) / math.sqrt(n)).tolist())
    text = _csv(["replica", "seed"] + FROG_FIELDS, rows)
    rv = arr[:, 0].astype(int)
    hist = np.bincount(rv) if n else np.zeros(0, dtype=int)
    plot = {"kind": "frog", "root_visits_hist": hist.tolist(),
            "median_root_visits": float(np.median(rv)) if n else 0.0}
    return text, plot


def _blocks(args) -> tuple[str, dict]:
    cfg = _sim_config(args, laws.TwoPoint(16, 1.0))
    variant = args.variant.replace("-", "_")
    st = block_stats(cfg, args.nmax, variant, root_walker=args.root_walker,
                     workers=args.workers)
    rows = []
    for r in range(st.weights.shape[0]):
        for n in range(st.weights.shape[1]):
            b = st.bias[r, n]
            rows.append([r, n, st.weights[r, n], None if np.isnan(b) else b, None, None])
    mean, se = st.mean, st.stderr
    alpha = st.alpha_ref
    bias_mean = []
    for n in range(st.weights.shape[1]):
        col = st.bias[:, n]
        bias_mean.append(None if np.isnan(col).any() else float(col.mean()))
    for n in range(st.weights.shape[1]):
        rows.append(["mean", n, mean[n], bias_mean[n], se[n],
                     None if alpha is None else alpha**n])
    text = _csv(["replica", "n", "weight", "bias_bound", "stderr", "alpha_n"], rows)
    plot = {"kind": "blocks", "n": list(range(st.weights.shape[1])),
            "mean_weight": mean.tolist(), "stderr": se.tolist(), "bias_bound": bias_mean,
            "alpha": alpha,
            "alpha_n": None if alpha is None else [alpha**n for n in range(len(mean))],
            "truncated_replicas": int(st.truncated.sum())}
    return text, plot


def cmd_simulate(args) -> int:
    text, plot = {"island": _island, "frog": _frog, "blocks": _blocks}[args.what](args)
    _emit(text, args.out)
    if args.plot_data:
        _emit(_dumps(plot), args.plot_data)
    return 0


def cmd_oracle(args) -> int:
    if args.which == "phi":
        if args.R > 10:
            raise InputError("oracle phi: R must be <= 10")
        res = phi_oracle(args.d, args.R)
    elif args.which == "hit":
        if not 1 <= args.k <= 12:
            raise InputError("oracle hit: k must lie in [1, 12]")
        res = hit_oracle(args.d, args.k, args.replicas, args.seed, args.workers)
    else:
        if not 1 <= args.m <= 6:
            raise InputError("oracle ball-bound: m must lie in [1, 6]")
        res = ball_bound_oracle(args.d, args.m, args.mu, args.R)
    _emit(_dumps(res.to_dict()), args.out)
    return 0 if res.passed else 1


# ---------------------------------------------------------------- parser

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _sim_args(p):
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--mode", choices=["regular", "d-ary"], default="regular")
    p.add_argument("--law", default=None, help="e.g. twopoint:1024:5, const:1, plusone:twopoint:4:1")
    p.add_argument("--N", type=int, default=None, help="shorthand for a two-point law")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.add_argument("--R-record", dest="R_record", type=_positive_int, default=10)
    p.add_argument("--R-kill", dest="R_kill", type=_positive_int, default=30)
    p.add_argument("--tmax", type=_positive_int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--replicas", type=_positive_int, default=1000)
    p.add_argument("--max-population", dest="max_population", type=_positive_int,
                   default=200_000)
    p.add_argument("--plot-data", dest="plot_data", default=None,
                   help="write pre-binned plot series (JSON) here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frogcert", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"frogcert {__version__}")
    ap.add_argument("--config", default=None, help="JSON file of option values")
    ap.add_argument("--workers", type=_positive_int, default=None,
                    help="worker threads (default: FROGCERT_THREADS or 1)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", help="six region sums, total and alpha")
    b.add_argument("--d", type=int, default=None, help="required")
    b.add_argument("--mu", type=float, default=None, help="required")
    b.add_argument("--m", type=int, default=None, help="required")
    b.add_argument("--lambda", dest="lam", type=float, default=None)
    b.add_argument("--beta", type=float, default=1.0)
    b.add_argument("--c-hit", dest="c_hit", type=float, default=1.0)
    b.add_argument("--mode", choices=["numeric", "closed-form"], default="numeric")
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bound)

    c = sub.add_parser("certify", help="emit a transience certificate")
    c.add_argument("--method", choices=["two-point", "infinite-mean", "two-type"],
                   default=None, help="required")
    c.add_argument("--d", type=int, default=2)
    c.add_argument("--mu", type=float, default=1.0)
    c.add_argument("--m", type=int, default=None, help="fix m instead of scanning")
    c.add_argument("--lambda", dest="lam", type=float, default=None)
    c.add_argument("--n-max", dest="n_max", type=_positive_int, default=20)
    c.add_argument("--out", default=None)
    c.set_defaults(func=cmd_certify)

    s = sub.add_parser("simulate", help="Monte Carlo runs, one CSV row per replica")
    ssub = s.add_subparsers(dest="what", required=True)
    si = ssub.add_parser("island")
    _sim_args(si)
    si.add_argument("--conditional", action="store_true",
                    help="launch N walkers every replica and scale by mu/N")
    sf = ssub.add_parser("frog")
    _sim_args(sf)
    sb = ssub.add_parser("blocks")
    _sim_args(sb)
    sb.add_argument("--nmax", type=_positive_int, default=4)
    sb.add_argument("--variant", choices=["plain", "two-type"], default="plain")
    sb.add_argument("--root-walker", dest="root_walker", action="store_true")
    for p in (si, sf, sb):
        p.add_argument("--out", default=None)
        p.add_argument("--workers", type=_positive_int, default=argparse.SUPPRESS)
        p.set_defaults(func=cmd_simulate)

    o = sub.add_parser("oracle", help="brute-force cross-checks")
    osub = o.add_subparsers(dest="which", required=True)
    op = osub.add_parser("phi")
    op.add_argument("--d", type=int, default=2)
    op.add_argument("--R", type=int, default=8)
    oh = osub.add_parser("hit")
    oh.add_argument("--d", type=int, default=2)
    oh.add_argument("--k", type=int, default=3)
    oh.add_argument("--replicas", type=_positive_int, default=100_000)
    oh.add_argument("--seed", type=int, default=0)
    ob = osub.add_parser("ball-bound")
    ob.add_argument("--d", type=int, default=2)
    ob.add_argument("--m", type=int, default=2)
    ob.add_argument("--mu", type=float, default=1.0)
    ob.add_argument("--R", type=int, default=None)
    for p in (op, oh, ob):
        p.add_argument("--out", default=None)
        p.add_argument("--workers", type=_positive_int, default=argparse.SUPPRESS)
        p.set_defaults(func=cmd_oracle)
    return ap


def _apply_config(args, argv, parser) -> argparse.Namespace:
    """Fill options from the --config file; flags given explicitly still win."""
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise InputError("config must be a JSON object")
    known = set(vars(args)) - {"func", "config", "command", "what", "which", "verbose"}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise InputError(f"unknown config fields: {', '.join(unknown)}")
    path = [a for a in (args.command, getattr(args, "what", None),
                        getattr(args, "which", None)) if a]
    defaults = vars(parser.parse_args(path))
    for k, v in cfg.items():
        if getattr(args, k) == defaults[k]:
            setattr(args, k, v)
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.config:
            args = _apply_config(args, argv, parser)
        args.workers = worker_count(args.workers)
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"frogcert: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command line entry point: ``ewlr run | sweep-b | verify | gen-data | comparator``."""

import argparse
import ast
import configparser
import json
import os
import sys

import numpy as np

from . import harness
from .data_io import load_data, write_libsvm
from .predictors import PREDICTORS


def _value(text):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def read_config(path):
    """Flat ``key = value`` file (``#`` comments); values are Python literals or bare strings."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    with open(path, encoding="utf-8") as fh:
        cp.read_string("[config]\n" + fh.read())
    return {k: _value(v) for k, v in cp["config"].items()}


def _options(pairs):
    out = {}
    for p in pairs or ():
        k, sep, v = p.partition("=")
        if not sep:
            raise SystemExit(f"--set expects key=value, got {p!r}")
        out[k.strip()] = _value(v.strip())
    return out


def _resolve(args, keys):
    """Config file values, then explicit flags on top."""
    conf = read_config(args.config) if getattr(args, "config", None) else {}
    opts = dict(conf.pop("options", {}) or {})
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            conf[k] = v
    opts.update(_options(getattr(args, "set", None)))
    return conf, opts


def cmd_run(args):
    conf, opts = _resolve(args, ["data", "predictor", "B", "n", "seed", "repeats", "out", "R",
                                 "normalize", "permute"])
    cfg = harness.RunConfig(options=opts, **conf)
    harness.write_config(cfg, cfg.out)
    finals = []
    for seed, ds, logs in harness.run_config(cfg):
        rep = harness.regret_report(logs, ds, cfg.B, cache_dir=os.path.join(cfg.out, "cache"))
        summary = {"seed": seed, "predictor": cfg.predictor, "B": float(cfg.B),
                   "comparator_loss": rep.comparator_loss, "regret": rep.regret}
        harness.emit_outputs(logs, os.path.join(cfg.out, f"seed-{seed}"), summary,
                             plot=not args.no_plot)
        finals.append(logs[-1].avg_loss if logs else float("nan"))
        print(f"seed={seed} n={len(logs)} avg_loss={summary.get('avg_loss', finals[-1]):.6f} "
              f"regret={rep.regret:.6f}")
    if len(finals) > 1:
        q25, med, q75 = np.percentile(finals, [25, 50, 75])
        harness.write_table_csv([{"median": float(med), "q25": float(q25), "q75": float(q75),
                                  "values": [float(v) for v in finals]}],
                                os.path.join(cfg.out, "aggregate.csv"),
                                ["median", "q25", "q75", "values"])
        print(f"median avg_loss={med:.6f} IQR=[{q25:.6f}, {q75:.6f}]")
    return 0


def cmd_sweep(args):
    conf, opts = _resolve(args, ["data", "predictor", "n", "seed", "repeats", "out", "normalize"])
    grid = [float(b) for b in str(args.grid).split(",") if b.strip()]
    cfg = harness.RunConfig(B=grid[0] if grid else 1.0, options=opts, **conf)
    harness.write_config({**vars(cfg), "grid": grid}, cfg.out)
    data = load_data(cfg.data, seed=cfg.seed, normalize=cfg.normalize)
    seeds = [cfg.seed + r for r in range(cfg.repeats)]
    rows = harness.sweep_B(data, cfg.predictor, grid, seeds, cfg.n, opts)
    harness.emit_sweep(rows, cfg.out, plot=not args.no_plot)
    for r in rows:
        print(f"B={r['B']:g} median={r['median']:.6f} q25={r['q25']:.6f} q75={r['q75']:.6f}")
    return 0


def cmd_verify(args):
    seeds = [int(s) for s in str(args.seeds).split(",")]
    reports = [harness.verify_lemmas(s) for s in seeds]
    ok = True
    for rep in reports:
        for c in rep["checks"]:
            if args.suite != "all" and not c["name"].startswith(args.suite):
                continue
            ok &= c["passed"]
            if args.verbose or not c["passed"]:
                flag = "PASS" if c["passed"] else "FAIL"
                print(f"{flag} seed={rep['seed']} {c['name']} value={c['value']:.6g} "
                      f"bound={c['bound']:.6g}")
    if args.out:
        os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(reports, fh, indent=2)
    print("all checks passed" if ok else "some checks FAILED")
    return 0 if ok else 1


def cmd_gen(args):
    data = load_data(args.data, seed=args.seed)
    write_libsvm(data, args.out)
    print(f"wrote {data.n} examples (d={data.d}) to {args.out}")
    return 0


def cmd_comparator(args):
    data = load_data(args.data, seed=args.seed, n=args.n, normalize=args.normalize)
    if args.n is not None:
        data = data.head(args.n)
    rep = harness.comparator_loss(data, args.B, cache_dir=args.cache)
    print(json.dumps({"comparator_loss": rep.comparator_loss,
                      "theta": rep.comparator_theta.tolist(), "converged": rep.converged,
                      "iterations": rep.iterations}))
    return 0 if rep.converged else 1


def build_parser():
    p = argparse.ArgumentParser(prog="ewlr", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_B=True):
        sp.add_argument("--config", help="key=value configuration file")
        sp.add_argument("--data", help="LIBSVM path or gen:hazan:... / gen:gaussian:...")
        sp.add_argument("--predictor", choices=sorted(PREDICTORS))
        if with_B:
            sp.add_argument("--B", type=float)
        sp.add_argument("--n", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--repeats", type=int)
        sp.add_argument("--out")
        sp.add_argument("--normalize", action="store_true", default=None)
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="predictor/schedule override, e.g. --set alpha=0.01")
        sp.add_argument("--no-plot", action="store_true")

    r = sub.add_parser("run", help="online run(s) with per-round CSV")
    common(r)
    r.add_argument("--R", type=float)
    r.add_argument("--permute", action="store_true", default=None)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep-b", help="average loss versus prior scale")
    common(s, with_B=False)
    s.add_argument("--grid", required=True, help="comma-separated B values")
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="numeric lemma checks")
    v.add_argument("--suite", default="all", help="'all' or a check-name prefix")
    v.add_argument("--seeds", default="0,1,2")
    v.add_argument("--out", help="write the JSON report here")
    v.add_argument("--verbose", action="store_true")
    v.set_defaults(func=cmd_verify)

    g = sub.add_parser("gen-data", help="write a synthetic dataset as LIBSVM")
    g.add_argument("--data", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("comparator", help="best bounded-norm fixed predictor in hindsight")
    c.add_argument("--data", required=True)
    c.add_argument("--B", type=float, required=True)
    c.add_argument("--n", type=int)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--normalize", action="store_true")
    c.add_argument("--cache")
    c.set_defaults(func=cmd_comparator)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

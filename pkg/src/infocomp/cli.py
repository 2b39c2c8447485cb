"""Command-line entry point: ``infocomp <subcommand>``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness, prototree, wire
from .sharedrand import SharedSeed


def _json_arg(text: str):
    """Inline JSON or a path to a JSON file."""
    p = Path(text)
    if p.exists():
        return harness.load_json(p)
    return json.loads(text)


def _seed(text: str) -> str:
    return SharedSeed.from_hex(text).hex


def _emit(result: harness.CampaignResult, out: str | None) -> None:
    if out:
        result.write(out)
        print(f"wrote {out} and {harness.summary_path(out)}", file=sys.stderr)
    else:
        harness.write_csv(sys.stdout, result.columns, result.rows)
    print(json.dumps(result.summary, indent=2, sort_keys=True), file=sys.stderr)


def cmd_sample(args) -> int:
    if args.instance:
        obj = harness.load_json(args.instance)
    else:
        if args.p is None or args.q is None:
            raise SystemExit("sample needs --p and --q (or --instance)")
        obj = {"P": _json_arg(args.p), "Q": _json_arg(args.q)}
    P, Q = harness.load_pq(obj)
    cfg = harness.ExperimentConfig("sample", args.eps, args.trials, args.seed, out=args.out)
    _emit(harness.sample_campaign(P, Q, cfg), args.out)
    return 0


def cmd_cpj(args) -> int:
    cfg = harness.ExperimentConfig("cpj", args.eps, args.trials, args.seed, args.instance)
    _emit(harness.run_campaign(cfg), args.out)
    return 0


def _protocol_cfg(args, engine: str) -> harness.ExperimentConfig:
    n_list = tuple(int(v) for v in args.n_list.split(",")) if getattr(args, "n_list", None) else (1, 4, 16)
    return harness.ExperimentConfig(engine, args.eps, args.trials, args.seed, args.protocol, args.mu,
                                    None, n_list)


def cmd_compress(args) -> int:
    _emit(harness.run_campaign(_protocol_cfg(args, "compress")), args.out)
    return 0


def cmd_amortize(args) -> int:
    result = harness.run_campaign(_protocol_cfg(args, "amortize"))
    if args.out:
        result.write(args.out)
    else:
        for n, row in result.summary["per_n"].items():
            print(f"{n},{row['mean_bits_per_copy']:.4f},{row['match_rate']:.4f}")
    print(json.dumps(result.summary, indent=2, sort_keys=True), file=sys.stderr)
    return 0


def cmd_info(args) -> int:
    pi, mu = harness.load_protocol(harness.load_json(args.protocol),
                                   None if args.mu is None else harness.load_json(args.mu))
    report = {"IC": prototree.internal_info_cost(pi, mu),
              "external_IC": prototree.external_info_cost(pi, mu),
              "CC": prototree.comm_complexity(pi),
              "expected_divergence": prototree.expected_divergence(pi, mu),
              "rounds": pi.depth}
    print(json.dumps(report, indent=2))
    return 0


def _params(items) -> dict:
    out = {}
    for item in items or []:
        key, _, val = item.partition("=")
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = val
    return out


def cmd_gen(args) -> int:
    obj = harness.gen_instance(args.kind, _params(args.param), args.seed)
    text = json.dumps(obj, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text)
    return 0


def cmd_serve(args) -> int:
    spec = wire.load_spec(args.engine)
    own = _json_arg(args.input)
    res = wire.serve(spec, args.role, own, SharedSeed.from_hex(args.seed), args.listen, args.connect,
                     args.timeout)
    report = {"role": res.role, "output": res.output, "bits_sent": res.bits_sent,
              "frame_bits_sent": res.frame_bits_sent, "frame_bits_received": res.frame_bits_received}
    text = json.dumps(report, default=_plain)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return 0


def _plain(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(repr(v))


def cmd_selftest(args) -> int:
    report = harness.selftest(mutate=args.mutate)
    for name, res in report["checks"].items():
        detail = ", ".join(f"{k}={v}" for k, v in res.items() if k != "ok")
        print(f"{'PASS' if res['ok'] else 'FAIL'} {name}: {detail}")
    print("selftest", "passed" if report["passed"] else "FAILED")
    return 0 if report["passed"] else 1


def _global_flags(parser, defaults: bool) -> None:
    d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
    parser.add_argument("--seed", type=_seed, default=d("0" * 32), help="shared seed, 32 hex chars")
    parser.add_argument("--out", default=d(None), help="output path (CSV; summary goes next to it)")
    parser.add_argument("--eps", type=float, default=d(0.01))
    parser.add_argument("--trials", type=int, default=d(10**4))


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand; the copy
    # on each subcommand suppresses its defaults so it cannot clobber them
    ap = argparse.ArgumentParser(prog="infocomp", description="Interactive compression experiments.")
    _global_flags(ap, defaults=True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, defaults=False)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", parents=[common], help="one-shot sampler campaign")
    p.add_argument("--p", help="P as JSON (inline or file)")
    p.add_argument("--q", help="Q as JSON (inline or file)")
    p.add_argument("--instance", help="uniform-subset style file with P and Q")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("cpj", parents=[common], help="CPJ path-sampling campaign")
    p.add_argument("--instance", required=True)
    p.set_defaults(func=cmd_cpj)

    for name, func, helptext in (("compress", cmd_compress, "protocol compression campaign"),
                                 ("amortize", cmd_amortize, "per-copy bits for n parallel copies"),
                                 ("info", cmd_info, "exact information costs of a protocol")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--protocol", required=True)
        p.add_argument("--mu", help="prior file (defaults to the protocol file's 'mu')")
        if name == "amortize":
            p.add_argument("--n-list", default="1,4,16")
        p.set_defaults(func=func)

    p = sub.add_parser("gen", parents=[common], help="generate an instance")
    p.add_argument("--kind", required=True, choices=harness.KINDS)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("serve", parents=[common], help="run one endpoint over TCP")
    p.add_argument("--role", required=True, choices=("A", "B"))
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--listen", metavar="HOST:PORT")
    grp.add_argument("--connect", metavar="HOST:PORT")
    p.add_argument("--engine", required=True, help="engine spec JSON file")
    p.add_argument("--input", required=True, help="this role's own input (JSON or file)")
    p.add_argument("--timeout", type=float, default=60.0)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("selftest", parents=[common], help="exact-identity suite")
    p.add_argument("--mutate", choices=("dist_a", "sqrt_coef"), default=None)
    p.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.trials < 1:
        raise SystemExit("--trials must be at least 1")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"infocomp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

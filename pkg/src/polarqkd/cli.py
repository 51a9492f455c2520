"""Command-line front end: rate sweeps, process simulation, codec utilities,
and golden-fixture regeneration.

Exit codes: 0 success, 2 configuration or argument error, 3 protocol abort,
4 decode-failure budget exceeded.
"""

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import fer, goldens, rates
from .codec import PolarCode, systematic_decode, systematic_encode
from .protocol import (ConfigError, InsufficientKeyError, PeSampleError,
                       bsc_transmit, load_config, run_process)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3
EXIT_DECODE_BUDGET = 4

OUT_DIR_ENV = "POLARQKD_OUT_DIR"


def _float_list(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from exc


def _int_list(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad int list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polarqkd",
        description="Polar-coded QKD simulator and key-rate tables")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="write the analytic key-rate comparison CSV")
    p.add_argument("--n-exp", type=int, default=16,
                   help="log2 of the block length (default 16)")
    p.add_argument("--E", type=_float_list, default=[0.04, 0.03, 0.02, 0.01],
                   metavar="LIST", help="comma-separated design thresholds")
    p.add_argument("--e-min", type=float, default=0.0)
    p.add_argument("--e-max", type=float, default=0.12)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--f-ec", type=float, default=1.1)
    p.add_argument("--pe-budget", type=int, default=5000)
    p.add_argument("--beta-mode", choices=("paper-rounded", "exact"),
                   default="paper-rounded")
    p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("simulate", help="run the M-round protocol process")
    p.add_argument("config", help="JSON config path")
    p.add_argument("--seed", type=int, default=None,
                   help="override master_seed from the config")
    p.add_argument("--transcript", help="write per-round transcripts to this path")
    p.add_argument("--max-decode-failures", type=int, default=None,
                   help="fail with exit code 4 above this many decode failures")

    p = sub.add_parser("codec-roundtrip",
                       help="systematic encode/decode round-trip check")
    p.add_argument("--n-exp", type=int, default=10)
    p.add_argument("--E", type=float, default=0.04)
    p.add_argument("--e", type=float, default=0.0)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)

    p = sub.add_parser("codec-fer", help="Monte Carlo frame-error-rate table")
    p.add_argument("--n-exp-list", type=_int_list, default=[8, 10, 12],
                   metavar="LIST")
    p.add_argument("--e-list", type=_float_list, default=[0.005, 0.01, 0.02],
                   metavar="LIST")
    p.add_argument("--E", type=float, default=0.04)
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", help="output path (default: stdout)")

    p = sub.add_parser("fixtures", help="regenerate golden fixture files")
    p.add_argument("--out-dir", default=None,
                   help=f"directory to write into (default: ${OUT_DIR_ENV})")
    return parser


def _resolve_out(path, default_name):
    """--out wins; otherwise the env out-dir with a default name; else None
    meaning stdout."""
    if path:
        return path
    env = os.environ.get(OUT_DIR_ENV)
    if env:
        return os.path.join(env, default_name)
    return None


def _emit(text: str, path) -> int:
    if path is None:
        sys.stdout.write(text)
        return EXIT_OK
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        print(f"error: cannot write {path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def _cmd_rates(args) -> int:
    if args.steps < 1:
        print("error: --steps must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.steps == 1:
        grid = [args.e_min]
    else:
        grid = np.linspace(args.e_min, args.e_max, args.steps)
    try:
        curve = rates.sweep(grid, args.E, 1 << args.n_exp, f_ec=args.f_ec,
                            pe_budget=args.pe_budget, beta_mode=args.beta_mode)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    meta = (f"# N={curve.block_len} beta={curve.beta:.6g} "
            f"beta_mode={curve.beta_mode} p={curve.p:.6g} f_ec={curve.f_ec:g} "
            f"pe_budget={curve.pe_budget}\n")
    return _emit(meta + curve.to_csv(),
                 _resolve_out(args.out, f"rates_n{args.n_exp}.csv"))


def _cmd_simulate(args) -> int:
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config = dataclasses.replace(config, master_seed=args.seed)
        report = run_process(config)
    except (ConfigError, InsufficientKeyError, PeSampleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sys.stdout.write(report.format_table())
    sys.stdout.write(report.summary_line() + "\n")
    if args.transcript:
        payload = [t.to_json_dict() for t in report.transcripts]
        code = _emit(json.dumps(payload, sort_keys=True, indent=1) + "\n",
                     args.transcript)
        if code != EXIT_OK:
            return code
    if report.aborted:
        print(f"process aborted at round {report.abort_round}", file=sys.stderr)
        return EXIT_ABORT
    if (args.max_decode_failures is not None
            and report.decode_failures > args.max_decode_failures):
        print(f"decode failures {report.decode_failures} exceed budget "
              f"{args.max_decode_failures}", file=sys.stderr)
        return EXIT_DECODE_BUDGET
    return EXIT_OK


def _cmd_codec_roundtrip(args) -> int:
    try:
        code = PolarCode.from_design(args.E, 1 << args.n_exp)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rng = np.random.default_rng(args.seed)
    failures = 0
    for _ in range(args.trials):
        data = rng.integers(0, 2, code.K, dtype=np.uint8)
        sent = systematic_encode(data, code)
        received = bsc_transmit(sent, args.e, rng) if args.e > 0 else sent
        decoded = systematic_decode(received, max(args.e, 1e-3), code)
        failures += int(not np.array_equal(decoded, data))
    print(f"N={code.N} K={code.K} e={args.e:g} trials={args.trials} "
          f"failures={failures}")
    return EXIT_OK


def _cmd_codec_fer(args) -> int:
    if args.trials <= 0:
        print("error: --trials must be positive", file=sys.stderr)
        return EXIT_CONFIG
    cells = fer.fer_table(args.n_exp_list, args.e_list, args.E, args.trials,
                          args.seed)
    return _emit(fer.fer_csv(cells), _resolve_out(args.out, "fer.csv"))


def _cmd_fixtures(args) -> int:
    out_dir = args.out_dir or os.environ.get(OUT_DIR_ENV)
    if not out_dir:
        print(f"error: pass --out-dir or set ${OUT_DIR_ENV}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(out_dir, exist_ok=True)
    for name, content in goldens.build_golden_set().items():
        with open(os.path.join(out_dir, name), "w", encoding="utf-8") as fh:
            fh.write(content)
        print(f"wrote {name}")
    return EXIT_OK


_HANDLERS = {
    "rates": _cmd_rates,
    "simulate": _cmd_simulate,
    "codec-roundtrip": _cmd_codec_roundtrip,
    "codec-fer": _cmd_codec_fer,
    "fixtures": _cmd_fixtures,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _HANDLERS[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())

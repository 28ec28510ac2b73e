"""Command-line entry point: ``streamfec <subcommand> ...``.

Exit codes: 0 success, 1 certification failure (or inadmissible trace),
2 malformed input, 3 an internal enumeration cap was exceeded.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import bounds, channels, simkit
from .config import FAMILIES, ConfigError, build_code, channel_params
from .decoding import LayeredCode
from .equalrate import CapExceeded, CertificationFailure, CodeConstructionError, certify_channel
from .field import FieldError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[int]:
    """``40:110`` (inclusive), ``1,3,5`` or a single integer."""
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            if len(parts) == 2:
                a, b = parts
                step = 1
            elif len(parts) == 3:
                a, b, step = parts
            else:
                raise ValueError
            if step <= 0:
                raise ValueError
            return list(range(a, b + 1, step))
        return [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"bad range {text!r}; use A:B, A:B:STEP or a comma list") from None


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def _code_spec(args) -> dict:
    if getattr(args, "config", None):
        spec = _load_json(args.config)
        if not isinstance(spec, dict):
            raise ConfigError("code config must be a JSON object")
        if "code" in spec:
            spec = spec["code"]
    else:
        if not args.family:
            raise UsageError("give --config or --family")
        spec = {"family": args.family}
    for k in ("N", "B", "W", "T", "M", "seed", "backend", "rate"):
        v = getattr(args, k, None)
        if v is not None:
            spec[k] = v
    if getattr(args, "certify_build", False):
        spec["certify"] = True
    return spec


def _add_code_args(p):
    p.add_argument("--config", help="JSON code spec")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--N", type=int)
    p.add_argument("--B", type=int)
    p.add_argument("--W", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--rate", help="code rate as a fraction, for smds")
    p.add_argument("--backend", choices=("random-smds", "block-mds"))
    p.add_argument("--seed", type=int)


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_build(args) -> int:
    code = build_code(_code_spec(args))
    _emit(json.dumps(code.to_json()) + "\n", args.out)
    print(f"rate {code.rate}", file=sys.stderr)
    return EXIT_OK


def cmd_certify(args) -> int:
    if args.code_json:
        code = LayeredCode.from_json(_load_json(args.code_json))
    else:
        code = build_code(_code_spec(args))
    cert = certify_channel(code, N=args.N_test, B=args.B_test, decoder=args.decoder,
                           cap=args.cap, sample=not args.exhaustive)
    out = cert.to_json()
    out["rate"] = str(code.rate)
    out["design"] = code.design
    _emit(json.dumps(out) + "\n", args.out)
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_tradeoff(args) -> int:
    R = bounds.as_fraction(args.R)
    pts = bounds.table1_points(R, args.T, args.W)
    _emit(bounds.tradeoff_csv(pts), args.out)
    return EXIT_OK


def cmd_capacity(args) -> int:
    _emit(bounds.capacity_csv(args.M, args.T, parse_range(args.B)), args.out)
    return EXIT_OK


def cmd_distance(args) -> int:
    code = build_code(_code_spec(args))
    j = code.memory if args.j is None else args.j
    rep = bounds.prop4_check(code, j, method=args.method)
    _emit(json.dumps(rep.to_json()) + "\n", args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    obj = _load_json(args.config)
    if args.length is not None:
        obj["length"] = args.length
    if args.seed is not None:
        obj["seed"] = args.seed
    if args.timing:
        obj["timing"] = True
    try:
        cfg = simkit.SimConfig.from_json(obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad simulation config: {exc}") from exc
    _emit(simkit.sweep_csv(simkit.sweep(cfg)), args.out)
    return EXIT_OK


def _trace_from_args(args):
    if args.trace:
        return channels.read_trace(args.trace)
    if args.channel:
        ch = _load_json(args.channel) if not args.channel.lstrip().startswith("{") else json.loads(args.channel)
        params = channel_params(ch)
        if args.length is None:
            raise UsageError("--length is required when sampling a channel")
        if isinstance(params, channels.FritchmanParams):
            return channels.sample_fritchman(params, args.length, args.seed)
        return channels.sample_ge(params, args.length, args.seed)
    raise UsageError("give --trace or --channel")


def cmd_histogram(args) -> int:
    tr = _trace_from_args(args)
    _emit(simkit.histogram_csv(channels.burst_histogram(tr)), args.out)
    return EXIT_OK


def cmd_patterns(args) -> int:
    tr = channels.read_trace(args.trace)
    ok, bad = channels.validate_trace(tr, args.N, args.B, args.W)
    _emit(json.dumps({"admissible": ok, "first_violating_window": bad, "N": args.N, "B": args.B,
                      "W": args.W, "length": tr.length}) + "\n", args.out)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="streamfec", description="Low-delay streaming erasure codes")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("build", help="construct a code and write its JSON")
    _add_code_args(p)
    p.add_argument("--certify", dest="certify_build", action="store_true",
                   help="retry seeds until the code certifies")
    p.add_argument("--out")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("certify", help="check every admissible single-window pattern")
    _add_code_args(p)
    p.add_argument("--code-json", help="certify a previously built code")
    p.add_argument("--test-N", dest="N_test", type=int, help="override N for the pattern family")
    p.add_argument("--test-B", dest="B_test", type=int, help="override B for the pattern family")
    p.add_argument("--decoder", choices=("staged", "oracle"), default="staged")
    p.add_argument("--cap", type=int, default=10**6)
    p.add_argument("--exhaustive", action="store_true", help="fail with exit 3 instead of sampling over the cap")
    p.add_argument("--out")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("tradeoff", help="(N, B) points per code family")
    p.add_argument("--R", required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--W", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("capacity", help="burst capacity over a range of B")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--B", required=True, help="A:B range (inclusive) or comma list")
    p.add_argument("--out")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("distance", help="column distance and span of a small code")
    _add_code_args(p)
    p.add_argument("--j", type=int)
    p.add_argument("--method", choices=("rank", "enumerate"), default="rank")
    p.add_argument("--out")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("simulate", help="run a simulation sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--length", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--timing", action="store_true", help="fill the runtime_ms column")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("histogram", help="burst-length histogram of a trace")
    p.add_argument("--trace")
    p.add_argument("--channel", help="channel JSON (file or inline) to sample instead")
    p.add_argument("--length", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("patterns", help="check a trace file against C(N, B, W)")
    p.add_argument("--trace", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--W", type=int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_patterns)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except CapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except CertificationFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ConfigError, UsageError, CodeConstructionError, FieldError, channels.TraceFormatError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

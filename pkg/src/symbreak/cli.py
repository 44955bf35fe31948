"""Command-line entry point.

Subcommands:
  codes list / codes check <label>   registry inspection and validation
  decode                             decode one syndrome file
  ler                                Monte Carlo LER run from a JSON config
  sweep                              parameter sweep, CSV output
  bench                              mean/p99 decode-time comparison
  trace                              one decoded shot's split trace as JSON

Exit codes: 0 success, 1 usage/config error, 2 invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from symbreak import codes as codes_mod
from symbreak import gf2
from symbreak.codes import CodeConstructionError, build_code, load_registry
from symbreak.harness import (
    DECODER_NAMES,
    ExperimentSpec,
    run_experiment,
    sweep as run_sweep,
    write_csv,
)
from symbreak.noise import NoiseModel

USAGE_ERROR = 1
INVARIANT_ERROR = 2


def _registry(args):
    return load_registry(args.registry) if args.registry else load_registry()


def _weight_summary(values) -> str:
    vals = sorted(set(values))
    if not vals:
        return "0"
    if len(vals) == 1:
        return str(vals[0])
    return f"{vals[0]}-{vals[-1]}"


def cmd_codes(args) -> int:
    reg = _registry(args)
    if args.codes_cmd == "list":
        for label in sorted(reg):
            entry = reg[label]
            d = entry.get("claimed_distance")
            triple = f"[[{entry['n']},{entry['k']}{',' + str(d) if d else ''}]]"
            print(f"{label:16s} {entry['family']:3s} {triple}")
        return 0
    label = args.label
    try:
        code = build_code(label, reg)
    except KeyError as exc:
        print(exc, file=sys.stderr)
        return USAGE_ERROR
    except CodeConstructionError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return INVARIANT_ERROR
    if not gf2.commutes(code.hz, code.hx):
        print("invariant violation: hz @ hx^T != 0", file=sys.stderr)
        return INVARIANT_ERROR
    row_w = _weight_summary(len(s) for s in code.hx.row_support)
    col_w = _weight_summary(len(s) for s in code.hx.col_support)
    print(f"n={code.n} k={code.k} row_w={row_w} col_w={col_w}")
    if args.full:
        lx, lz = code.logical_x, code.logical_z
        pairing_ok = all(
            lz[i].dot(lx[j]) == (1 if i == j else 0)
            for i in range(code.k) for j in range(code.k)
        )
        if not pairing_ok:
            print("invariant violation: symplectic pairing", file=sys.stderr)
            return INVARIANT_ERROR
        print(f"logicals={code.k} pairing=identity")
    return 0


def _read_syndrome(path: Path, expected_len: int) -> gf2.BinVector:
    text = path.read_text().strip()
    if text.startswith("["):
        bits = json.loads(text)
    else:
        bits = [int(ch) for ch in text if ch in "01"]
    if len(bits) != expected_len:
        raise ValueError(f"syndrome has {len(bits)} bits, expected {expected_len}")
    return gf2.BinVector(expected_len, tuple(i for i, b in enumerate(bits) if b))


def cmd_decode(args) -> int:
    reg = _registry(args)
    code = build_code(args.code, reg)
    h = code.parity_matrix(args.type)
    try:
        syndrome = _read_syndrome(Path(args.syndrome), h.rows)
    except (OSError, ValueError) as exc:
        print(exc, file=sys.stderr)
        return USAGE_ERROR
    from symbreak.bp import BpConfig, prior_from_error_rate
    from symbreak.decoder import SymBreakConfig, decode

    prior = np.full(code.n, prior_from_error_rate(args.p))
    cfg = SymBreakConfig(bp=BpConfig(prior_llr=prior))
    out = decode(code, syndrome, cfg, error_type=args.type)
    print("".join(str(b) for b in out.estimate.to_dense()))
    print(f"stop_reason={out.stop_reason} converged={out.converged} "
          f"splits={len(out.splits)} iters={out.bp_iterations_total}")
    return 0


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    with open(p) as fh:
        return json.load(fh)


def _spec_from_config(cfg: dict, args) -> ExperimentSpec:
    spec = ExperimentSpec.from_dict(cfg)
    if args.shots is not None:
        spec.shots = args.shots
    if args.seed is not None:
        spec.seed = args.seed
    if args.decoder is not None:
        spec.decoder = args.decoder
    if args.threads is not None:
        spec.threads = args.threads
    return spec


def cmd_ler(args) -> int:
    cfg = _load_config(args.config)
    spec = _spec_from_config(cfg, args)
    result = run_experiment(spec)
    print(f"code={result.code} decoder={result.decoder} p={result.p} shots={result.shots}")
    print(f"failures={result.failures} ler={result.ler:.4e} "
          f"ci95=[{result.ci_low:.4e}, {result.ci_high:.4e}]")
    print(f"mean_time={result.mean_time*1e6:.1f}us p99={result.p99_time*1e6:.1f}us")
    if args.out:
        write_csv([result], args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    spec = _spec_from_config(cfg, args)
    values = [float(v) if args.axis == "p" else int(v) for v in args.values.split(",")]
    results = run_sweep(spec, args.axis, values)
    for r in results:
        print(f"{args.axis}={r.p if args.axis == 'p' else ''} ler={r.ler:.4e} "
              f"[{r.ci_low:.3e},{r.ci_high:.3e}] failures={r.failures}")
    if args.out:
        write_csv(results, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    cfg = _load_config(args.config)
    decoders = cfg.pop("decoders", ["bp", "bp_osd0", "symbreak"])
    results = []
    for dec in decoders:
        spec = _spec_from_config(dict(cfg, decoder=dec), args)
        r = run_experiment(spec)
        results.append(r)
        print(f"{dec:10s} mean={r.mean_time*1e6:8.1f}us p99={r.p99_time*1e6:8.1f}us "
              f"ler={r.ler:.3e}")
    if args.out:
        write_csv(results, args.out)
        print(f"wrote {args.out}")
    return 0


def cmd_trace(args) -> int:
    from symbreak.bp import BpConfig, prior_from_error_rate
    from symbreak.decoder import SymBreakConfig, decode
    from symbreak.harness import _ShotKit
    from symbreak.noise import sample_error, shot_rng

    reg = _registry(args)
    code = build_code(args.code, reg)
    noise = NoiseModel.depolarizing(args.p)
    rng = shot_rng(args.seed if args.seed is not None else 0, args.shot)
    ex, ez = sample_error(noise, code.n, rng)
    kit = _ShotKit(code, "X")
    syndrome = kit.syndrome(list(ex.support))
    prior = np.full(code.n, prior_from_error_rate(max(noise.marginal("X"), 1e-12)))
    cfg = SymBreakConfig(bp=BpConfig(prior_llr=prior))
    out = decode(code, syndrome, cfg, error_type="X")
    trace = out.to_trace()
    trace["code"] = code.label
    trace["error_support"] = list(ex.support)
    trace["syndrome_support"] = list(syndrome.support)
    text = json.dumps(trace, indent=2)
    if args.trace_out:
        Path(args.trace_out).write_text(text + "\n")
        print(f"wrote {args.trace_out}")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="symbreak",
                                 description="Quantum LDPC decoding toolkit")
    ap.add_argument("--registry", help="path to a code registry JSON "
                    "(default: bundled, or $SYMBREAK_REGISTRY)")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p_codes = sub.add_parser("codes", help="registry inspection")
    codes_sub = p_codes.add_subparsers(dest="codes_cmd", required=True)
    codes_sub.add_parser("list", help="list registry labels")
    p_check = codes_sub.add_parser("check", help="validate one instance")
    p_check.add_argument("label")
    p_check.add_argument("--full", action="store_true",
                         help="also verify logical operator pairing")

    p_dec = sub.add_parser("decode", help="decode one syndrome file")
    p_dec.add_argument("--code", required=True)
    p_dec.add_argument("--syndrome", required=True,
                       help="file of ASCII 0/1 bits (or a JSON list)")
    p_dec.add_argument("--type", choices=("X", "Z"), default="X")
    p_dec.add_argument("--p", type=float, default=0.003,
                       help="physical error rate for the priors")

    for name, fn_help in (("ler", "Monte Carlo LER run"),
                          ("sweep", "parameter sweep"),
                          ("bench", "decoder timing comparison")):
        p = sub.add_parser(name, help=fn_help)
        p.add_argument("--config", required=True, help="experiment JSON")
        p.add_argument("--shots", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--decoder", choices=DECODER_NAMES)
        p.add_argument("--threads", type=int)
        p.add_argument("--out", help="CSV output path")
        if name == "sweep":
            p.add_argument("--axis", required=True, choices=("p", "max_iters", "max_splits"))
            p.add_argument("--values", required=True, help="comma-separated values")

    p_tr = sub.add_parser("trace", help="decode one shot, dump the split trace")
    p_tr.add_argument("--code", required=True)
    p_tr.add_argument("--p", type=float, default=0.003)
    p_tr.add_argument("--seed", type=int)
    p_tr.add_argument("--shot", type=int, default=0)
    p_tr.add_argument("--trace-out", help="JSON output path (default: stdout)")
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        if args.cmd == "codes":
            return cmd_codes(args)
        if args.cmd == "decode":
            return cmd_decode(args)
        if args.cmd == "ler":
            return cmd_ler(args)
        if args.cmd == "sweep":
            return cmd_sweep(args)
        if args.cmd == "bench":
            return cmd_bench(args)
        if args.cmd == "trace":
            return cmd_trace(args)
    except FileNotFoundError as exc:
        print(exc, file=sys.stderr)
        return USAGE_ERROR
    except CodeConstructionError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return INVARIANT_ERROR
    except (KeyError, ValueError) as exc:
        print(exc, file=sys.stderr)
        return USAGE_ERROR
    return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())

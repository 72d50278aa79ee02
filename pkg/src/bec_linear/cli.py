"""Command line entry point: ``bec-linear {run, validate-kernels, mellin-check}``.

Exit codes: 0 ok, 2 configuration/contract error, 3 numerical failure,
4 invariant violation (including failed kernel certification).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import certify, mellin, scenario
from .errors import BecLinearError, InvariantViolation

log = logging.getLogger("bec_linear")

MELLIN_POINTS = 10
MELLIN_BETA = 1.2
MELLIN_SEED = 20240101
FUNCTIONAL_TOL = 1e-6


def _write_json(path: Path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2) + "\n")


def cmd_run(args) -> int:
    cfg = scenario.load_config(args.config, args.override)
    out = Path(args.out or cfg.outputs)
    res = scenario.execute(cfg)
    for p in scenario.write_outputs(res, cfg, out):
        log.info("wrote %s", p)
    s = res.summary
    print(f"Cstar = {s['Cstar']:.10g}  pc_limit_ratio = {s['pc_limit_ratio']:.10g}  "
          f"energy residual = {s['energy_residual']:.3e}")
    if s["nonlinear"] is not None:
        print(f"nonlinear horizon: {s['nonlinear']['classification']}  T* = {s['nonlinear']['Tstar']}")
    return 0


def cmd_validate_kernels(args) -> int:
    cfg = scenario.load_config(args.config, args.override)
    out = Path(args.out or cfg.outputs)
    report = certify.kernel_report(cfg.convention)
    _write_json(out / "kernel_report.json", report)
    for r in report["regions"]:
        print(f"{'ok  ' if r['pass'] else 'FAIL'} {r['region']}: C_fit = {r['C_fit']:.6g}")
    print(f"M_fit = {report['M_fit']:.6g}  Mtilde_fit = {report['Mtilde_fit']:.6g}")
    print(f"detailed-balance residual = {report['detailed_balance_residual']:.3e}")
    print(f"branch agreement = {report['branch_agreement']:.3e}")
    if not report["pass"]:
        raise InvariantViolation("kernel certification failed:\n  " + "\n  ".join(report["failures"]))
    return 0


def mellin_report(points: int = MELLIN_POINTS, beta: float = MELLIN_BETA,
                  seed: int = MELLIN_SEED) -> dict:
    rng = np.random.default_rng(seed)
    sweep = []
    for _ in range(points):
        s = complex(rng.uniform(1.55, beta + 0.95), rng.uniform(-2.0, 2.0))
        sweep.append({"s": [s.real, s.imag], "residual": mellin.functional_residual(s, beta)})
    w2 = mellin.symbol_W(2.0)
    w1 = mellin.symbol_W(1.0)
    return {
        "W_at_2": [w2.real, w2.imag],
        "W_at_1": [w1.real, w1.imag],
        "W_at_1_error": abs(w1 - (4 * math.log(2) - math.pi)),
        "beta": beta,
        "functional_equation": sweep,
        "max_residual": max(p["residual"] for p in sweep),
    }


def cmd_mellin_check(args) -> int:
    report = mellin_report(args.points, args.beta, args.seed)
    out = Path(args.out or "out")
    _write_json(out / "mellin_report.json", report)
    print(f"W(2) = {report['W_at_2'][0]:.3e}   |W(1) - (4 ln 2 - pi)| = {report['W_at_1_error']:.3e}")
    print(f"max functional-equation residual over {args.points} points = {report['max_residual']:.3e}")
    if report["max_residual"] >= FUNCTIONAL_TOL:
        raise InvariantViolation("functional equation residual above tolerance")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bec-linear", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="flat TOML scenario file")
        sp.add_argument("--out", type=Path, help="output directory (default: the config's outputs)")
        sp.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; repeatable")

    sp = sub.add_parser("run", help="evolve a scenario and write series, states and summary")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("validate-kernels", help="certify the kernel bounds; writes kernel_report.json")
    common(sp)
    sp.set_defaults(func=cmd_validate_kernels)

    sp = sub.add_parser("mellin-check", help="W(s) checks and a functional-equation sweep for B(s)")
    sp.add_argument("--out", type=Path)
    sp.add_argument("--points", type=int, default=MELLIN_POINTS)
    sp.add_argument("--beta", type=float, default=MELLIN_BETA)
    sp.add_argument("--seed", type=int, default=MELLIN_SEED)
    sp.set_defaults(func=cmd_mellin_check)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BecLinearError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())

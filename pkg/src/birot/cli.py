"""Command line entry point: ``birot run | verify | probe``.

Exit codes of ``run``:

    0  completed
    1  unexpected failure
    2  invalid configuration
    3  CFL violation
    4  kernel quadrature did not converge
    5  truncation check failed (data too close to the outer edge)
    6  initial data outside the admissible class
    7  vorticity nonzero on an axis

Failures also write ``error.json`` to the output directory, or next to the
config file when the config itself is invalid. The number of
compute threads is read from ``BIROT_NUM_THREADS``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .config import ConfigError, load_config
from .diagnostics import HypothesisError
from .fields import AxisValueError, TruncationError
from .kernel import KernelConvergenceError
from .transport import CFLError

EXIT_CODES = (
    (ConfigError, 2),
    (CFLError, 3),
    (KernelConvergenceError, 4),
    (TruncationError, 5),
    (HypothesisError, 6),
    (AxisValueError, 7),
)


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1


def _write_error(out_dir, exc, code) -> dict:
    rec = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, KernelConvergenceError):
        rec["last_values"] = list(exc.last_values)
    if isinstance(exc, CFLError):
        rec["speed"] = exc.speed
        rec["limit"] = exc.limit
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "error.json"), "w") as fh:
            json.dump(rec, fh, indent=2)
    return rec


def cmd_run(args) -> int:
    # until the config names an output directory, errors are recorded next to the config file
    out_dir = os.path.dirname(os.path.abspath(args.config))
    try:
        cfg = load_config(args.config)
        out_dir = cfg.output_dir
        from .runner import run_scenario

        def progress(k, n, state):
            if not args.quiet and (k == n or k % max(1, n // 10) == 0):
                print(f"step {k}/{n}  t = {state.time:.4g}  L = {state.length_L:.6g}", flush=True)

        result = run_scenario(cfg, progress)
    except (OSError, ValueError, RuntimeError) as exc:
        code = exit_code_for(exc)
        rec = _write_error(out_dir, exc, code)
        print(json.dumps(rec), file=sys.stderr)
        return code
    last = result.series[-1]
    print(f"done: {len(result.series)} records, w_sup = {last.w_sup:.6g}, "
          f"ratio_prop_vel = {last.ratio_prop_vel:.6g}, output in {cfg.output_dir}")
    if not result.final.reliable:
        print(f"warning: {result.final.clip_fraction:.2%} of particle steps were clipped at an axis; "
              "treat this run as unreliable", file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    from . import verify

    if args.oracle_points != 48:
        # documented degradation mode: a coarser oracle is compared at the 8% gate
        gate = 0.05 if args.oracle_points >= 48 else 0.08
        patched = lambda: verify.route_agreement(args.oracle_points, gate)  # noqa: E731
        patched.__name__ = "route_agreement"
        suites = {k: tuple(patched if c is verify.route_agreement else c for c in v)
                  for k, v in verify.SUITES.items()}
    else:
        suites = verify.SUITES
    failed = 0
    for check in suites[args.suite]:
        res = check()
        print(res.line(), flush=True)
        failed += not res.passed
    return 1 if failed else 0


def cmd_probe(args) -> int:
    from .transport import probe_velocity, read_checkpoint

    state = read_checkpoint(args.checkpoint)
    u_r, u_s = probe_velocity(state, args.r, args.s)
    print(f"u_r = {u_r:.17g}")
    print(f"u_s = {u_s:.17g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="birot", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario from a config file")
    p.add_argument("config")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run an acceptance suite")
    p.add_argument("suite", choices=["kernel", "lorentz", "routes", "conservation", "estimates", "all"])
    p.add_argument("--oracle-points", type=int, default=48,
                   help="per-dimension resolution of the R^4 oracle (default 48)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("probe", help="velocity at a point from a checkpoint")
    p.add_argument("checkpoint")
    p.add_argument("r", type=float)
    p.add_argument("s", type=float)
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""``wpcn`` command line: single runs, the two sweeps and the self-check suite.

Exit status is 0 on success, 2 on invalid input and 1 when a verification
check fails.
"""

import argparse
import os
import sys
from pathlib import Path

from . import experiments as ex
from .protocol import Mode, run, write_summary_csv
from .verification import run_suite

SEED_ENV = "WPCN_SEED"


class UsageError(ValueError):
    pass


def _seed(args, required: bool):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    if required:
        return 1
    return None


def _mapping(args) -> dict:
    return ex.load_config(args.config) if args.config else {}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> int:
    mapping = _mapping(args)
    sim_keys = {"M", "mode", "gamma_0", "seed"}
    unknown = set(mapping) - sim_keys - ex._CONFIG_KEYS
    if unknown:
        raise UsageError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    cfg = ex.network_from_mapping(mapping)
    if args.seed is None and "seed" in mapping and os.environ.get(SEED_ENV) is None:
        args.seed = ex._num("seed", mapping["seed"], int)
    seed = _seed(args, required=True)
    M = args.epochs if args.epochs is not None else ex._num("M", mapping.get("M", 100_000), int)
    if M < 1:
        raise UsageError("epochs must be at least 1")
    mode = Mode.parse(args.mode or mapping.get("mode", "pf"))
    gamma = ex._num("gamma_0", mapping["gamma_0"]) if "gamma_0" in mapping else None
    res = run(cfg, M, seed=seed, mode=mode, gamma_0=gamma)
    out = _out_dir(args)
    res.write_trace_csv(out / "trace.csv")
    write_summary_csv(out / "summary.csv", [res])
    row = res.summary_row()
    print(", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    return 0


def _sweep(args, default, runner, stem) -> int:
    spec = ex.spec_from_mapping(_mapping(args), default)
    changes = {}
    seed = _seed(args, required=False)
    if seed is not None:
        changes["seeds"] = (seed,)
    if args.epochs is not None:
        changes["M"] = args.epochs
    if args.mode is not None:
        changes["modes"] = (args.mode,)
    if changes:
        kw = {f: getattr(spec, f) for f in ("name", "sweep", "values", "modes", "base", "M",
                                             "seeds", "K_values", "fixed_p_c", "gamma_0")}
        kw.update(changes)
        spec = ex.ExperimentSpec(**kw)
    out = _out_dir(args)
    csv_path = out / f"{stem}.csv"
    runner(spec, csv_path)
    n = ex.emit_plot(csv_path, out / f"{stem}.svg")
    print(f"wrote {csv_path} and {out / (stem + '.svg')} ({n} curves)")
    return 0


def cmd_fig1(args) -> int:
    return _sweep(args, ex.fig1_spec(), ex.run_fig1_experiment, "fig1")


def cmd_fig2(args) -> int:
    return _sweep(args, ex.fig2_spec(), ex.run_fig2_experiment, "fig2")


def cmd_oracle(args) -> int:
    seed = _seed(args, required=False)
    results = run_suite(quick=args.quick, seed=0 if seed is None else seed)
    lines = [r.line() for r in results]
    print("\n".join(lines))
    if args.out:
        (_out_dir(args) / "oracle_report.txt").write_text("\n".join(lines) + "\n")
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat 'key = value' config file")
    common.add_argument("--seed", type=int, help=f"channel seed (fallback: ${SEED_ENV})")
    common.add_argument("--epochs", type=int, help="epochs per run")
    common.add_argument("--out", default=".", help="output directory (default: .)")
    common.add_argument("--mode", choices=["pf", "maxsum"], help="protocol")

    p = argparse.ArgumentParser(prog="wpcn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="one run: trace.csv and summary.csv")
    sub.add_parser("fig1", parents=[common], help="circuit-power sweep: fig1.csv and fig1.svg")
    sub.add_parser("fig2", parents=[common], help="average-power sweep: fig2.csv and fig2.svg")
    o = sub.add_parser("oracle", parents=[common], help="run the numerical self-checks")
    o.add_argument("--quick", action="store_true", help="about ten times fewer samples")
    return p


_COMMANDS = {"simulate": cmd_simulate, "fig1": cmd_fig1, "fig2": cmd_fig2, "oracle": cmd_oracle}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as err:
        print(f"wpcn {args.command}: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point (``spingates``).

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .errors import NumericError, SpinGatesError
from .gates import GATE_NAMES, custom_gate, named_gate
from .io import read_matrix
from .noise import OuParams
from .runs import (STATE_NAMES, cmd_decompose, cmd_evaluate, cmd_noise_stats, cmd_optimize,
                   cmd_population_trace, cmd_sweep)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2


def _vec(v) -> str:
    return "(" + ", ".join(f"{x:+.6f}" for x in v) + ")"


def _global_flags(top_level: bool) -> argparse.ArgumentParser:
    # sub-commands accept the flags too but must not reset values given before the command
    def default(value):
        return value if top_level else argparse.SUPPRESS

    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--seed", type=int, default=default(None), help="master seed (overrides the config)")
    flags.add_argument("--out-dir", type=Path, default=default(Path(".")), help="directory for output files")
    flags.add_argument("--threads", type=int, default=default(1), help="worker threads for noise ensembles")
    flags.add_argument("--plot", action="store_true", default=default(False),
                       help="also render PNG figures next to the tables")
    return flags


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags(False)
    parser = argparse.ArgumentParser(prog="spingates", parents=[_global_flags(True)],
                                     description="Noise-robust pulse optimization for an electron-nuclear spin pair.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", parents=[common], help="optimize one gate at one duration")
    p.add_argument("config", type=Path)

    p = sub.add_parser("sweep", parents=[common], help="optimize over a grid of durations / Larmor frequencies")
    p.add_argument("config", type=Path)

    p = sub.add_parser("evaluate", parents=[common], help="fresh-seed FoM statistics of a waveform file")
    p.add_argument("waveform", type=Path)
    p.add_argument("--gate", required=True, choices=GATE_NAMES)
    p.add_argument("--control", choices=("up", "down"), default=None)
    p.add_argument("--matrix", type=Path, default=None, help="target matrix file for --gate custom")
    p.add_argument("-n", type=int, default=5000, help="realizations per evaluation")
    p.add_argument("-m", type=int, default=1, help="number of independent evaluations")
    p.add_argument("--config", type=Path, default=None, help="system and noise parameters")
    p.add_argument("--sigma", type=float, default=None, help="override the noise strength (rad/us)")
    p.add_argument("--fom", choices=("average", "combined"), default="average")

    p = sub.add_parser("decompose", parents=[common], help="Weyl point and SWAP factorization of a matrix")
    p.add_argument("matrix", type=Path)

    p = sub.add_parser("trace", parents=[common], help="noise-free reduced populations of a waveform")
    p.add_argument("waveform", type=Path)
    p.add_argument("--state", required=True, choices=STATE_NAMES)
    p.add_argument("--config", type=Path, default=None)
    p.add_argument("--output", type=Path, default=None, help="output table (default <out-dir>/<waveform>_trace_<state>.tsv)")

    p = sub.add_parser("noise-stats", parents=[common], help="OU ensemble diagnostics")
    p.add_argument("config", type=Path)
    return parser


def _config(args, path=None) -> RunConfig:
    config = load_config(path) if path is not None else RunConfig()
    if args.seed is not None:
        config = config.with_seed(args.seed)
    return config


def _print_progress(entry):
    print(f"  superiteration {entry.index}: best FoM {entry.fom_best:.6e} "
          f"({entry.n_evals} evaluations, {entry.stop_reason})", flush=True)


def _run(args) -> int:
    if args.threads < 1:
        raise SpinGatesError("--threads must be >= 1")
    if args.command == "optimize":
        config = _config(args, args.config)
        rec = cmd_optimize(config, args.out_dir, args.threads, args.plot, progress=_print_progress,
                           base_dir=args.config.parent)
        print(f"{rec.gate} t_f={rec.t_f:g} us: FoM search {rec.fom_search:.6e}, "
              f"eval {rec.fom_eval_mean:.6e} +- {rec.fom_eval_std:.2e} (sem {rec.fom_eval_sem:.2e}), "
              f"F_av {rec.fidelity_mean:.6f}")
        print(f"waveform: {rec.waveform_path}\nrecord:   {rec.record_path}")
        return EXIT_OK
    if args.command == "sweep":
        config = _config(args, args.config)

        def report(rec):
            if rec.ok:
                print(f"t_f={rec.t_f:g} us omega_i={rec.omega_i:.6g} rad/us: FoM {rec.fom_eval_mean:.6e} "
                      f"+- {rec.fom_eval_std:.2e}", flush=True)
            else:
                print(f"t_f={rec.t_f:g} us omega_i={rec.omega_i:.6g} rad/us: failed ({rec.error})", flush=True)

        records = cmd_sweep(config, args.out_dir, args.threads, args.plot, report, base_dir=args.config.parent)
        print(f"table: {Path(args.out_dir) / (config.gate_name + '_sweep.tsv')}")
        return EXIT_OK if all(r.ok for r in records) else EXIT_NUMERIC
    if args.command == "evaluate":
        config = _config(args, args.config)
        ou = config.ou if args.sigma is None else OuParams(args.sigma, config.ou.t_c)
        if args.gate == "custom":
            if args.matrix is None:
                raise SpinGatesError("--gate custom needs --matrix")
            gate = custom_gate(read_matrix(args.matrix))
        else:
            gate = named_gate(args.gate, args.control)
        res = cmd_evaluate(args.waveform, gate, args.n, args.m, config.params, ou,
                           config.optimizer.master_seed, args.fom)
        print(f"FoM_{args.fom} = {res.mean:.6e} +- {res.std:.2e} (std over {args.m}, sem {res.sem:.2e}); "
              f"F_av = {res.fidelity_mean:.6f}")
        return EXIT_OK
    if args.command == "decompose":
        d = cmd_decompose(args.matrix)
        c = d.weyl
        print(f"weyl (c1, c2, c3) = ({c.c1:.10f}, {c.c2:.10f}, {c.c3:.10f})")
        print(f"1 - F_nl (SWAP class) = {d.infidelity_swap:.6e}")
        print(f"1 - F_nl (CNOT class) = {d.infidelity_cnot:.6e}")
        print(f"cost C (U^dag SWAP)   = {d.cost:.6e}")
        print(f"n1 = {_vec(d.n1)}\nn2 = {_vec(d.n2)}")
        return EXIT_OK
    if args.command == "trace":
        config = _config(args, args.config)
        out = args.output or Path(args.out_dir) / f"{args.waveform.stem}_trace_{args.state}.tsv"
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        t_ns, p_e, p_n = cmd_population_trace(args.waveform, args.state, config.params, out, args.plot)
        print(f"{len(t_ns)} samples written to {out}; final p_e_up={p_e[-1]:.6f} p_n_up={p_n[-1]:.6f}")
        return EXIT_OK
    if args.command == "noise-stats":
        config = _config(args, args.config)
        s = cmd_noise_stats(config, args.out_dir, args.plot)
        print(f"sigma = {s.sigma:.6g} rad/us, t_c = {s.t_c:.6g} us")
        print(f"variance {s.variance:.6g} +- {s.variance_se:.2g} (expected {s.sigma ** 2:.6g})")
        worst = np.max(np.abs(s.coherence - s.coherence_theory) / np.maximum(s.coherence_se, 1e-300))
        print(f"free-induction decay: max deviation {worst:.2f} standard errors")
        return EXIT_OK
    raise SpinGatesError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except NumericError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SpinGatesError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: cycle, complete, sweep, scaling, oracle, stats.  All
randomness is controlled solely by --seed; exit code is 0 on success and
2 on spec validation failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import complete as km
from . import cycle as ring
from . import oracle as oc
from . import sweep as sw
from .configs import InitialSpec, config_stats, sample
from .games import classify, make_params


def _params_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--S", type=float, required=True, help="sucker payoff")
    p.add_argument("--T", type=float, required=True, help="temptation payoff")


def _write(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _cmd_cycle(args) -> int:
    params = make_params(args.S, args.T)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    if args.init is not None:
        state = ring.CycleState.from_string(args.init)
        if args.n is not None and state.n != args.n:
            raise ValueError("--init length disagrees with --n")
    else:
        state = sample(InitialSpec(args.n, args.pc), rng)
    trace = [] if args.trace else None
    report = ring.run_to_absorption(state, params, args.gens, rng, trace=trace)
    if args.trace:
        _write(args.trace, "".join(f"{g} {bits}\n" for g, bits in trace))
    region = classify(params)
    print(f"n={state.n} S={args.S} T={args.T} zone={region.zone.value} "
          f"quadrant={region.quadrant.value}")
    print(f"outcome={report.outcome.value} generations={report.generations} "
          f"coop_fraction={report.final_coop_fraction:.6g}")
    return 0


def _cmd_complete(args) -> int:
    params = make_params(args.S, args.T)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    delta0 = int(round(args.theta0 * args.n))
    trace = [] if args.trace else None
    report = km.run_complete(delta0, args.n, params, args.gens, rng,
                             band_epsilon=args.band_epsilon, trace=trace)
    if args.trace:
        lines = ["generation,delta\n"]
        lines += [f"{g},{d}\n" for g, d in trace]
        _write(args.trace, "".join(lines))
    cp = km.critical_point(args.n, params)
    star = f" delta_star={cp.delta_star:.6g}" if cp else ""
    print(f"n={args.n} S={args.S} T={args.T} delta0={delta0}{star}")
    band = ("" if report.band_entry_generation is None
            else f" band_entry={report.band_entry_generation}")
    print(f"outcome={report.outcome.value} generations={report.generations} "
          f"coop_fraction={report.final_coop_fraction:.6g}{band}")
    return 0


def _cmd_sweep(args) -> int:
    spec = sw.SweepSpec(
        topology=args.topology, n=args.n,
        s_range=(args.s_min, args.s_max), s_steps=args.s_steps,
        t_range=(args.t_min, args.t_max), t_steps=args.t_steps,
        coop_p=args.pc, theta0=args.theta0, init_bits=args.init,
        generations=args.gens, reps=args.reps, seed=args.seed,
        include_borders=args.include_borders)
    cells = sw.run_sweep(spec, workers=args.workers)
    _write(args.out, sw.format_csv(cells))
    if args.pgm:
        sw.emit_pgm(cells, spec, args.pgm)
    return 0


def _cmd_scaling(args) -> int:
    n_list = [int(x) for x in args.n_list.split(",")]
    region = classify(make_params(args.S, args.T))
    if region.zone.value in ("AB", "BD"):
        raise ValueError("scaling needs a point with well-defined absorption; "
                         f"({args.S}, {args.T}) lies on a coexistence border")
    rows = sw.run_scaling(args.S, args.T, n_list, args.reps, args.seed,
                          coop_p=args.pc, topology=args.topology,
                          theta0=args.theta0)
    _write(args.out, sw.format_scaling_csv(rows))
    fit = sw.fit_scaling(rows)
    print(f"R2(log)={fit.r2_log:.4f} R2(linear)={fit.r2_linear:.4f} "
          f"AIC(log)={fit.aic_log:.2f} AIC(linear)={fit.aic_linear:.2f}")
    return 0


def _cmd_oracle(args) -> int:
    params = make_params(args.S, args.T)
    if args.topology == "cycle":
        solve = oc.solve_absorption(args.n, params)
        def label(s: int) -> str:
            return format(s, f"0{args.n}b")[::-1]  # vertex 0 first
        states = range(1 << args.n)
    else:
        solve = oc.solve_complete(args.n, params)
        label = str
        states = range(args.n + 1)
    lines = ["state,class,absorb_probs,expected_time"]
    for s in states:
        cls = solve.class_of.get(s, -1)
        probs = ";".join(f"{p:.10g}" for p in solve.absorption_probs(s))
        lines.append(f"{label(s)},{cls},{probs},{solve.expected_time(s):.10g}")
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def _cmd_stats(args) -> int:
    lengths = ([int(x) for x in args.lengths.split(",")]
               if args.lengths else [])
    header = ("rep,longest_c_run,longest_d_run,longest_alternating,"
              "longest_nonbarrier" + "".join(f",r_{ln}" for ln in lengths))
    lines = [header]
    for rep in range(args.reps):
        rng = np.random.default_rng(np.random.SeedSequence((args.seed, rep)))
        state = sample(InitialSpec(args.n, args.pc), rng)
        st = config_stats(state, lengths)
        row = (f"{rep},{st.longest_c_run},{st.longest_d_run},"
               f"{st.longest_alternating},{st.longest_nonbarrier}")
        row += "".join(f",{st.window_counts[ln]}" for ln in lengths)
        lines.append(row)
    _write(args.out, "\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(
        prog="imidyn",
        description="Synchronous proportional-imitation dynamics on rings "
                    "and complete graphs")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cycle", help="run one ring trajectory to absorption")
    _params_args(p)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--pc", type=float, default=0.5,
                   help="initial cooperation probability")
    p.add_argument("--init", help="explicit initial bitstring")
    p.add_argument("--gens", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", help="write 'generation bitstring' lines here")
    p.set_defaults(func=_cmd_cycle)

    p = sub.add_parser("complete", help="run one complete-graph trajectory")
    _params_args(p)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--theta0", type=float, default=0.5,
                   help="initial cooperator fraction")
    p.add_argument("--gens", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--band-epsilon", type=float, default=None,
                   help="record entry into delta* +- n^(1/2+eps)")
    p.add_argument("--trace", help="write generation,delta CSV here")
    p.set_defaults(func=_cmd_complete)

    p = sub.add_parser("sweep", help="grid sweep over the (S, T) square")
    p.add_argument("--topology", choices=("cycle", "complete"),
                   default="cycle")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--s-min", type=float, default=-1.0)
    p.add_argument("--s-max", type=float, default=1.0)
    p.add_argument("--s-steps", type=int, default=20)
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=2.0)
    p.add_argument("--t-steps", type=int, default=20)
    p.add_argument("--pc", type=float, default=0.5)
    p.add_argument("--theta0", type=float, default=0.5)
    p.add_argument("--init", help="explicit initial bitstring (ring only)")
    p.add_argument("--gens", type=int, default=10000)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--include-borders", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="-", help="CSV output path or -")
    p.add_argument("--pgm", help="also write a grayscale PGM here")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("scaling", help="absorption time versus ring size")
    _params_args(p)
    p.add_argument("--topology", choices=("cycle", "complete"),
                   default="cycle")
    p.add_argument("--n-list", default="64,128,256,512,1024,2048,4096")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--pc", type=float, default=0.5)
    p.add_argument("--theta0", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_scaling)

    p = sub.add_parser("oracle", help="exact absorption solve (small n)")
    _params_args(p)
    p.add_argument("--topology", choices=("cycle", "complete"),
                   default="cycle")
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("stats", help="initial-configuration statistics")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--pc", type=float, default=0.5)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--lengths", help="comma-separated window lengths")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=_cmd_stats)

    return top


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

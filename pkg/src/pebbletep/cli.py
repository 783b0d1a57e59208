"""Command-line front end.

Exit status: 0 on success, 1 when a verification fails, 2 on usage or input
errors, 3 when a budget is exceeded.
"""
import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import budget
from .analyze.census import entropy_census, parse_threshold
from .analyze.checks import Verdict, check_bitwise_independence, check_syntactic_read_once, check_thrifty
from .analyze.extract import check_state_determined, extract_bintbp_pebbling
from .bench import CRITERIA, run_bench
from .bp import (DETERMINISTIC, accepts_batch, bp_to_dict, export_dot, loads_bp, outputs_batch, run_deterministic_batch,
                 size)
from .compile import (compile_black_to_dtbp, compile_fractional_to_bintbp, compile_group_sft, compile_wbw_to_ntbp,
                      cyclic_group)
from .exceptions import AnalysisError, BudgetExceeded, InvalidSequence, PebbleTepError
from .pebbling import (BLACK, FRACTIONAL_BW, WHOLE_BW, generate_black_strategy, generate_fractional_strategy,
                       generate_ro_wbw_strategy, is_read_once, loads_sequence, optimal_strategy, sequence_to_dict,
                       timeline_tsv, validate_sequence)
from .tree import (TepInstance, evaluate_batch, hard_input, hard_inputs_matrix, instance_from_dict, instance_to_dict,
                   random_instances_matrix, sample_hard_tuples)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
PROPERTIES = ("thrifty", "read-once", "bitwise", "state-determined", "extraction", "correct")


class VerifyFailed(Exception):
    pass


# -- io helpers ------------------------------------------------------------------

def _read(path):
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _write(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _json(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _load_instances(path):
    data = json.loads(_read(path))
    items = data if isinstance(data, list) else data.get("instances", [data])
    return [instance_from_dict(d) for d in items]


def _chunked(fn, X, jobs):
    """Apply a row-wise function in ``jobs`` ordered chunks."""
    if jobs <= 1 or len(X) < 2 * jobs:
        return fn(X)
    parts = np.array_split(X, jobs)
    with ThreadPoolExecutor(jobs) as pool:
        return np.concatenate(list(pool.map(fn, parts)))


# -- subcommands -----------------------------------------------------------------

def cmd_gen(args):
    rng = np.random.default_rng(args.seed)
    if args.hard:
        tuples = sample_hard_tuples(args.h, args.k, args.count, rng)
        insts = [hard_input(args.h, args.k, t) for t in tuples.tolist()]
    else:
        X = random_instances_matrix(args.h, args.k, args.variant, args.count, rng)
        insts = [TepInstance.from_vector(args.h, args.k, row, args.variant) for row in X]
    _write(_json({"seed": args.seed, "instances": [instance_to_dict(i) for i in insts]}), args.out)


_VARIANTS = {"black": BLACK, "wbw": WHOLE_BW, "fractional": FRACTIONAL_BW}


def cmd_pebble(args):
    if args.validate:
        seq = loads_sequence(_read(args.validate))
        peak = validate_sequence(seq)
        report = {"valid": True, "peak": str(peak), "read_once": is_read_once(seq)}
        _write(_json(report), args.out)
        if args.read_once and not report["read_once"]:
            raise VerifyFailed("strategy is not read-once")
        return
    if args.h is None:
        raise argparse.ArgumentTypeError("--h is required unless --validate is given")
    variant = _VARIANTS[args.variant]
    d = args.denominator or (2 if variant == FRACTIONAL_BW else 1)
    if args.optimal:
        seq = optimal_strategy(args.h, variant, d)
    elif variant == BLACK:
        seq = generate_black_strategy(args.h)
    elif variant == WHOLE_BW:
        seq = generate_ro_wbw_strategy(args.h)
    else:
        seq = generate_fractional_strategy(args.h, d)
    peak = validate_sequence(seq)
    if args.read_once and not is_read_once(seq):
        raise VerifyFailed("generated strategy is not read-once")
    print(f"peak {peak}", file=sys.stderr)
    _write(timeline_tsv(seq) if args.timeline else _json(sequence_to_dict(seq)), args.out)


def cmd_compile(args):
    if args.sft:
        if args.h is None:
            raise argparse.ArgumentTypeError("--sft needs --h")
        bp = compile_group_sft(args.h, args.k, cyclic_group(args.k), fixed=not args.free_root)
    else:
        if not args.strategy:
            raise argparse.ArgumentTypeError("--strategy is required unless --sft is given")
        seq = loads_sequence(_read(args.strategy))
        target = args.target
        if target == "auto":
            target = {BLACK: "dtbp", WHOLE_BW: "ntbp", FRACTIONAL_BW: "bintbp"}[seq.variant]
        if target == "ntbp":
            bp = compile_wbw_to_ntbp(seq, args.k, keep_guess_states=args.keep_guess_states)
        elif target == "dtbp":
            bp = compile_black_to_dtbp(seq, args.k)
        else:
            bp = compile_fractional_to_bintbp(seq, args.k, keep_guess_states=args.keep_guess_states)
    print(f"size {size(bp)}", file=sys.stderr)
    _write(export_dot(bp) if args.dot else _json(bp_to_dict(bp)), args.out)


def cmd_run(args):
    bp = loads_bp(_read(args.bp))
    insts = _load_instances(args.instances)
    X = np.array([i.to_vector() for i in insts], dtype=np.int64).reshape(len(insts), -1)
    lines = []
    if bp.problem == "BT":
        acc = _chunked(lambda A: accepts_batch(bp, A), X, args.jobs)
        truth = evaluate_batch(X, bp.h, bp.k)[:, 1] if len(X) else []
        lines.append("index\taccept\troot")
        lines += [f"{n}\t{int(a)}\t{int(t)}" for n, (a, t) in enumerate(zip(acc, truth))]
    elif bp.variant == DETERMINISTIC:
        vals = _chunked(lambda A: run_deterministic_batch(bp, A), X, args.jobs)
        lines.append("index\toutput")
        lines += [f"{n}\t{int(v)}" for n, v in enumerate(vals)]
    else:
        masks = _chunked(lambda A: outputs_batch(bp, A), X, args.jobs)
        lines.append("index\toutputs")
        lines += [f"{n}\t{','.join(str(v) for v in range(bp.outputs) if m >> v & 1)}" for n, m in enumerate(masks)]
    _write("\n".join(lines) + "\n", args.out)


def _verify_one(bp, prop, args):
    if prop == "thrifty":
        inputs = "E"
        if bp.k ** (2 ** bp.h - 2) > args.exhaustive_cap:
            rng = np.random.default_rng(args.seed)
            inputs = hard_inputs_matrix(bp.h, bp.k, sample_hard_tuples(bp.h, bp.k, args.samples, rng))
        return check_thrifty(bp, inputs)
    if prop == "read-once":
        return check_syntactic_read_once(bp)
    if prop == "bitwise":
        return check_bitwise_independence(bp, search=args.search_encoding)
    if prop == "state-determined":
        ok, witnesses, configs = check_state_determined(bp)
        return Verdict("state-determined", ok, [], {"states": len(configs), "witnesses": witnesses})
    if prop == "extraction":
        sweep = "E" if bp.k ** (2 ** bp.h - 2) <= args.exhaustive_cap else "sample"
        ext = extract_bintbp_pebbling(bp, sweep, n_samples=args.samples, seed=args.seed)
        d = ext.to_dict()
        d.pop("states")
        return Verdict("extraction", ext.ok, [], d)
    if prop == "correct":
        rng = np.random.default_rng(args.seed)
        X = random_instances_matrix(bp.h, bp.k, bp.problem, args.samples, rng)
        truth = evaluate_batch(X, bp.h, bp.k)[:, 1]
        got = (_chunked(lambda A: accepts_batch(bp, A), X, args.jobs) if bp.problem == "BT"
               else _chunked(lambda A: outputs_batch(bp, A), X, args.jobs))
        want = truth == 1 if bp.problem == "BT" else (1 << truth)
        bad = np.flatnonzero(got != want)
        witnesses = [instance_to_dict(TepInstance.from_vector(bp.h, bp.k, X[n], bp.problem)) for n in bad[:5]]
        return Verdict("correct", bad.size == 0, [], {"samples": args.samples, "disagreements": int(bad.size),
                                                      "witnesses": witnesses})
    raise argparse.ArgumentTypeError(f"unknown property {prop!r}")


def _write_witnesses(verdict, directory):
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for n, v in enumerate(verdict.violations):
        if v.instance is not None:
            (d / f"{verdict.prop}-{n}.json").write_text(_json(instance_to_dict(v.instance)))
    for n, w in enumerate(verdict.info.get("witnesses", [])):
        (d / f"{verdict.prop}-info-{n}.json").write_text(_json(w))


def cmd_verify(args):
    bp = loads_bp(_read(args.bp))
    props = list(PROPERTIES[:3]) if "all" in args.property else args.property
    verdicts = [_verify_one(bp, p, args) for p in props]
    _write(_json({"seed": args.seed, "verdicts": [v.to_dict() for v in verdicts]}), args.out)
    failed = [v for v in verdicts if not v.ok]
    if args.witness_dir:
        for v in failed:
            _write_witnesses(v, args.witness_dir)
    if failed:
        raise VerifyFailed("failed: " + ", ".join(v.prop for v in failed))


def cmd_census(args):
    bp = loads_bp(_read(args.bp))
    threshold = parse_threshold(args.threshold, bp.h)
    rep = entropy_census(bp, threshold, mode=args.mode, n_samples=args.samples, seed=args.seed)
    if args.format == "table":
        d = rep.to_dict()
        rows = [(k, d[k]) for k in ("mode", "threshold", "size", "total_inputs", "walked_inputs", "exhaustive",
                                    "covered", "max_bucket", "implied_bound", "certified_bound", "seed")]
        _write("".join(f"{k:<16}{v}\n" for k, v in rows), args.out)
    else:
        _write(_json(rep.to_dict()), args.out)
    if not (rep.covered and rep.partition_ok):
        raise VerifyFailed("some input never reaches the threshold")


def cmd_bench(args):
    results = run_bench(args.criteria)
    if args.format == "json":
        _write(_json([r.to_dict() for r in results]), args.out)
    else:
        text = "".join(r.line() + "\n" + "".join(f"    {d}\n" for d in r.details) for r in results)
        _write(text, args.out)
    if not all(r.ok for r in results):
        raise VerifyFailed("some criteria failed")


# -- parser ----------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="pebbletep", description=__doc__.splitlines()[0])
    p.add_argument("--budget", type=int, help=f"state/instance cap (default ${budget.ENV_VAR} or "
                                              f"{budget.DEFAULT_BUDGET})")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=True, jobs=False):
        sp.add_argument("--out", "-o", help="output file (default stdout)")
        if seed:
            sp.add_argument("--seed", type=int, default=0)
        if jobs:
            sp.add_argument("--jobs", type=int, default=1)

    g = sub.add_parser("gen", help="write random instances")
    g.add_argument("--h", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--variant", choices=("BT", "FT"), default="BT")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--hard", action="store_true", help="sample from the hard family E")
    common(g)
    g.set_defaults(fn=cmd_gen)

    pb = sub.add_parser("pebble", help="generate, search or validate a pebbling strategy")
    pb.add_argument("--h", type=int)
    pb.add_argument("--variant", choices=tuple(_VARIANTS), default="wbw")
    pb.add_argument("--denominator", type=int, choices=(1, 2))
    pb.add_argument("--read-once", action="store_true", help="fail unless the strategy is read-once")
    pb.add_argument("--optimal", action="store_true", help="exact search for a peak-optimal strategy")
    pb.add_argument("--validate", metavar="FILE", help="validate an existing strategy file")
    pb.add_argument("--timeline", action="store_true", help="emit a per-step TSV timeline")
    common(pb, seed=False)
    pb.set_defaults(fn=cmd_pebble)

    c = sub.add_parser("compile", help="compile a strategy into a branching program")
    c.add_argument("--strategy", metavar="FILE", help="strategy JSON ('-' for stdin)")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--target", choices=("auto", "ntbp", "dtbp", "bintbp"), default="auto")
    c.add_argument("--keep-guess-states", action="store_true")
    c.add_argument("--sft", action="store_true", help="layered program for iterated cyclic-group products")
    c.add_argument("--free-root", action="store_true", help="with --sft, also query the root function")
    c.add_argument("--h", type=int)
    c.add_argument("--dot", action="store_true", help="emit Graphviz DOT instead of JSON")
    common(c, seed=False)
    c.set_defaults(fn=cmd_compile)

    r = sub.add_parser("run", help="run a branching program on instances")
    r.add_argument("--bp", required=True)
    r.add_argument("--instances", required=True)
    common(r, seed=False, jobs=True)
    r.set_defaults(fn=cmd_run)

    v = sub.add_parser("verify", help="check structural properties of a branching program")
    v.add_argument("--bp", default="-", help="program JSON (default stdin)")
    v.add_argument("--property", action="append", choices=PROPERTIES + ("all",), required=True)
    v.add_argument("--samples", type=int, default=100_000)
    v.add_argument("--exhaustive-cap", type=int, default=1 << 20,
                   help="sweep all of E when it has at most this many inputs")
    v.add_argument("--search-encoding", action="store_true")
    v.add_argument("--witness-dir")
    common(v, jobs=True)
    v.set_defaults(fn=cmd_verify)

    cs = sub.add_parser("census", help="entropy census over the hard inputs")
    cs.add_argument("--bp", required=True)
    cs.add_argument("--threshold", required=True, help="expression in h, e.g. 'h/2' or 'ceil(h/2)'")
    cs.add_argument("--mode", choices=("auto", "whole", "fractional"), default="auto")
    cs.add_argument("--samples", type=int, default=100_000)
    cs.add_argument("--format", choices=("json", "table"), default="json")
    common(cs)
    cs.set_defaults(fn=cmd_census)

    b = sub.add_parser("bench", help="run the fixed acceptance grid")
    b.add_argument("--criteria", type=int, nargs="*", choices=sorted(CRITERIA))
    b.add_argument("--format", choices=("table", "json"), default="table")
    common(b, seed=False)
    b.set_defaults(fn=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.budget is not None and args.budget <= 0:
        parser.error("--budget must be positive")
    try:
        with budget.budget_override(args.budget):
            args.fn(args)
    except (VerifyFailed, InvalidSequence, AnalysisError) as exc:
        print(f"pebbletep: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except BudgetExceeded as exc:
        print(f"pebbletep: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (PebbleTepError, argparse.ArgumentTypeError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"pebbletep: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

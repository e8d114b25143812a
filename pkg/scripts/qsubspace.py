import argparse
import sys
from pathlib import Path

import numpy as np

sys.path.append(str(Path(__file__).resolve().parents[1] / "utils"))
from cdc import EXHAUSTIVE, ByCopies, Sampled, read_code, read_indices, stats, verify, write_code, write_indices
from combiner import (
    BEST_PER_CODEWORD,
    LITERAL,
    CombineSpec,
    bound_names,
    bound_triple,
    bound_value,
    build_series_base,
    combine,
    corollary_943,
    iterate_series,
    load_series_base,
    select_special_space,
    series_size_formula,
)
from errors import FieldTooLarge, InvalidPrime, InvalidSpec, MissingBase, QSubspaceError, UnknownBound
from gf_core import field_of_order
from mrd import expurgate6, expurgate7, gabidulin, lift, lifted_mrd, monomial_clique, write_polys
from qsubspace_batch import (
    RunConfig,
    load_environment,
    render_combine_audit,
    render_pipeline_line,
    render_stats,
    render_verify_report,
    run_config,
)
from search import exact_augment, greedy_augment
from subspace_linalg import Subspace

USAGE_ERRORS = (InvalidSpec, UnknownBound, InvalidPrime, FieldTooLarge)


def _write_text(path: str | None, text: str) -> None:
    if path:
        with open(path, "w") as f:
            f.write(text)


def _canonical(code, clique=None, polys=None):
    """Sort a code for output and carry clique indices and polynomial rows along."""
    order = code.canonical_order()
    position = np.empty(len(order), dtype=np.int64)
    position[order] = np.arange(len(order))
    clique = None if clique is None else sorted(int(position[i]) for i in clique)
    polys = None if polys is None else np.asarray(polys)[order]
    return code.subcode(order.tolist()), clique, polys


def _sprime_index(value: str, code, clique=()) -> int:
    if value == "auto":
        return select_special_space(code, clique)
    try:
        return int(value)
    except ValueError:
        raise InvalidSpec(f"--sprime expects 'auto' or a codeword index, got {value!r}") from None


def cmd_construct(args, config: RunConfig) -> int:
    field = field_of_order(args.q)
    clique = polys = None
    if args.kind == "lifted-mrd":
        if None in (args.v, args.k, args.d):
            raise InvalidSpec("lifted-mrd needs --v, --k and --d")
        if args.k <= args.v - args.k and args.d % 2 == 0:
            rank_code = gabidulin(field, args.k, args.v - args.k, args.d // 2, config.cap)
            code, clique, polys = lift(rank_code), monomial_clique(rank_code), rank_code.polys
        else:
            code = lifted_mrd(field, args.v, args.k, args.d, config.cap)
    else:
        exp = expurgate6(args.q) if args.kind == "expurgate6" else expurgate7(args.q)
        code, clique, polys = exp.code, exp.clique, exp.polys
        print(f"removed={exp.removed_count}", file=sys.stderr)

    code, clique, polys = _canonical(code, clique, polys)
    write_code(args.out, code)
    if args.clique and clique is not None:
        write_indices(args.clique, clique)
    if args.poly and polys is not None:
        write_polys(args.poly, polys)
    summary = f"n={len(code)} v={code.v} k={code.k} q={field.q}"
    if clique is not None:
        summary += f" clique={len(clique)}"
    print(summary)
    return 0


def cmd_augment(args, config: RunConfig) -> int:
    code = read_code(args.input)
    if args.mode == "greedy":
        result = greedy_augment(code, restarts=args.restarts, seed=config.seed, cap=config.cap, workers=config.threads)
    else:
        force = []
        if args.force_special and code.v == 2 * code.k:
            special = np.zeros((code.k, code.v), dtype=np.int64)
            special[:, code.k :] = np.eye(code.k, dtype=np.int64)
            special_space = Subspace(code.field, code.v, special)
            if special_space not in code:
                force = [special_space]
        result = exact_augment(code, force, time_budget=config.budget, cap=config.cap, workers=config.threads)
        if not result.optimal:
            print(f"Warning: budget of {config.budget:g}s exhausted, clique may not be maximum", file=sys.stderr)
    write_code(args.out, result.code, comments=[result.audit_line()])
    print(f"# {result.audit_line()}")
    print(f"n={len(result.code)}")
    return 0


def _parse_mode(text: str, seed: int):
    if text == EXHAUSTIVE:
        return EXHAUSTIVE
    if text.startswith("sampled:"):
        try:
            return Sampled(int(text.split(":", 1)[1]), seed)
        except ValueError:
            pass
    raise InvalidSpec(f"--mode expects 'exhaustive' or 'sampled:N', got {text!r}")


def cmd_verify(args, config: RunConfig) -> int:
    code = read_code(args.input)
    report = verify(code, args.threshold, _parse_mode(args.mode, config.seed), workers=config.threads)
    text = render_verify_report(report, code.field.q, code.v)
    _write_text(args.report, text)
    sys.stdout.write(text)
    return 0 if report.passed else 1


def cmd_combine(args, config: RunConfig) -> int:
    c1, c2 = read_code(args.c1), read_code(args.c2)
    clique1 = read_indices(args.clique1)
    clique2 = read_indices(args.clique2) if args.clique2 else None
    s_index = _sprime_index(args.sprime, c2, clique2 or ())
    report = combine(CombineSpec(c1, clique1, c2, c2[s_index], args.strategy), clique2=clique2)
    write_code(args.out, report.output)
    _write_text(args.audit, render_combine_audit(report, [f"sprime={s_index}"]))
    if args.lifted_clique and report.lifted_clique is not None:
        write_indices(args.lifted_clique, report.lifted_clique)
    print(f"lambda={report.lambda_} predicted={report.predicted} actual={report.actual}")
    return 0


def _series_base(args, config: RunConfig):
    if args.base:
        if not args.clique:
            raise InvalidSpec("--base needs --clique")
        s_index = None if args.sprime == "auto" else _sprime_index(args.sprime, None)
        return load_series_base(args.base, args.clique, s_index, config.budget)
    if args.q != 2:
        raise MissingBase(f"no (6,4;3) base code for q={args.q}; pass --base and --clique")
    base = build_series_base(args.q, config.budget, config.cap, config.threads)
    if not base.optimal:
        print("Warning: base search hit its budget", file=sys.stderr)
    return base


def cmd_series(args, config: RunConfig) -> int:
    base = _series_base(args, config)
    q = base.code.field.q
    print(f"t=0 n={len(base.code)} clique={len(base.clique)}")
    print(f"  sprime={base.s_prime_index} anchored={len(base.anchored)} reserves={len(base.reserves)}", file=sys.stderr)
    code, failed = base.code, False
    for step, report in enumerate(iterate_series(args.t, base), start=1):
        code = report.output
        line = f"t={step} n={report.actual} predicted={report.predicted} clique={len(report.lifted_clique or ())}"
        if (base.code.v, base.code.k) == (6, 3):
            line += f" formula={series_size_formula(step, q, len(base.code), len(base.clique))}"
        if args.verify_pairs is not None:
            mode = ByCopies(report.provenance, args.verify_pairs, config.seed)
            verified = verify(report.output, 1, mode, workers=config.threads)
            failed = failed or not verified.passed
            line += f" verified={str(verified.passed).lower()} pairs={verified.pairs_checked} seed={verified.seed}"
        print(line)
        print(f"  step {step} done", file=sys.stderr)
    if args.out:
        write_code(args.out, code)
    return 1 if failed else 0


def cmd_corollary(args, config: RunConfig) -> int:
    base = _series_base(args, config) if args.base or args.q == 2 else None
    report = corollary_943(args.q, base, config.budget)
    verified = verify(report.output, 1, workers=config.threads)
    if args.out:
        write_code(args.out, report.output)
    _write_text(args.audit, render_combine_audit(report))
    sys.stdout.write(render_pipeline_line(report, verified))
    return 0 if verified.passed and report.predicted == report.actual else 1


def cmd_bounds(args, config: RunConfig) -> int:
    v, d, k = bound_triple(args.name, args.t)
    print(f"{bound_value(args.name, args.q, args.t)} v={v} d={d} k={k}")
    return 0


def cmd_stats(args, config: RunConfig) -> int:
    code = read_code(args.input)
    clique = read_indices(args.clique) if args.clique else None
    sys.stdout.write(render_stats(stats(code, clique, workers=config.threads)))
    return 0


def cmd_convert(args, config: RunConfig) -> int:
    code = read_code(args.input, require_sorted=False).sorted()
    write_code(args.out, code)
    print(f"n={len(code)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, help="worker threads (default: $QSUBSPACE_THREADS or cpu count)")
    common.add_argument("--cap", type=int, help="enumeration cap (default: $QSUBSPACE_CAP or 10^7)")
    common.add_argument("--budget", type=float, help="exact search seconds (default: $QSUBSPACE_BUDGET or 300)")
    common.add_argument("--seed", type=int, help="rng seed (default: 0xC0DE)")

    parser = argparse.ArgumentParser(description="Construct and verify constant dimension codes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common], help="build a lifted MRD or expurgated code")
    p.add_argument("--kind", choices=["lifted-mrd", "expurgate6", "expurgate7"], required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--v", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--clique", help="write the monomial clique indices here")
    p.add_argument("--poly", help="write the .poly sidecar here")
    p.set_defaults(handler=cmd_construct)

    p = sub.add_parser("augment", parents=[common], help="add compatible k-spaces by clique search")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mode", choices=["greedy", "exact"], default="exact")
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--force-special", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_augment)

    p = sub.add_parser("verify", parents=[common], help="check pairwise intersections")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--threshold", type=int, default=1)
    p.add_argument("--mode", default=EXHAUSTIVE, help="exhaustive | sampled:N")
    p.add_argument("--report")
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser("combine", parents=[common], help="combine C1 and C2 along S'")
    p.add_argument("--c1", required=True)
    p.add_argument("--clique1", required=True)
    p.add_argument("--c2", required=True)
    p.add_argument("--clique2")
    p.add_argument("--sprime", default="auto")
    p.add_argument("--strategy", choices=[LITERAL, BEST_PER_CODEWORD], default=LITERAL)
    p.add_argument("--out", required=True)
    p.add_argument("--audit")
    p.add_argument("--lifted-clique")
    p.set_defaults(handler=cmd_combine)

    for name, handler in (("series", cmd_series), ("corollary", cmd_corollary)):
        p = sub.add_parser(name, parents=[common])
        if name == "series":
            p.add_argument("--t", type=int, required=True)
            p.add_argument(
                "--verify-pairs", type=int, help="verify each step: every pair inside a copy plus N cross-copy samples"
            )
        p.add_argument("--q", type=int, required=True)
        p.add_argument("--base")
        p.add_argument("--clique")
        p.add_argument("--sprime", default="auto")
        p.add_argument("--out")
        if name == "corollary":
            p.add_argument("--audit")
        p.set_defaults(handler=handler)

    p = sub.add_parser("bounds", parents=[common], help="evaluate a catalogued lower bound")
    p.add_argument("--name", required=True, help=", ".join(bound_names()))
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--t", type=int)
    p.set_defaults(handler=cmd_bounds)

    p = sub.add_parser("stats", parents=[common])
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--clique")
    p.set_defaults(handler=cmd_stats)

    p = sub.add_parser("convert", parents=[common])
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_convert)
    return parser


def main(argv: list[str] | None = None) -> int:
    load_environment()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    options = {
        key: value
        for key, value in vars(args).items()
        if key not in ("command", "handler", "threads", "cap", "budget", "seed")
    }
    try:
        config = run_config(args.command, args.threads, args.cap, args.budget, args.seed, options)
        print(config.describe(), file=sys.stderr)
        return args.handler(args, config)
    except USAGE_ERRORS as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return 2
    except QSubspaceError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error[{type(e).__name__}]: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

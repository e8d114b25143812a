from __future__ import annotations

import sys
from pathlib import Path

sys.path.append(str(Path(__file__).resolve().parents[1] / "utils"))

from cdc import CROSS_PAIRS, ByCopies, verify, write_code, write_indices
from combiner import build_series_base, iterate_series, load_series_base, series_size_formula
from errors import QSubspaceError
from qsubspace_batch import BatchResult, bootstrap, results_dir, run_config

CONFIG_FILE = "series-config.json"


def main() -> None:
    config = bootstrap(CONFIG_FILE)
    q = int(config.get("q", 2))
    t_max = int(config.get("t", 1))
    cross_pairs = int(config.get("cross_pairs", CROSS_PAIRS))
    run = run_config("series", config.get("threads"), budget=config.get("budget"), seed=config.get("seed"))
    print(run.describe(), file=sys.stderr)

    try:
        if config.get("base"):
            base = load_series_base(config["base"], config["clique"], config.get("sprime"), run.budget)
        else:
            base = build_series_base(q, run.budget, workers=run.threads)
    except QSubspaceError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        sys.exit(1)
    q = base.code.field.q
    output_dir = results_dir(config.get("output_folder", "results/series"), f"q{q}")
    print(f"t=0 n={len(base.code)} clique={len(base.clique)} anchored={len(base.anchored)} reserves={len(base.reserves)}")

    result = BatchResult()
    for step, report in enumerate(iterate_series(t_max, base), start=1):
        expected = report.predicted
        if (base.code.v, base.code.k) == (6, 3):
            expected = series_size_formula(step, q, len(base.code), len(base.clique))
        write_code(output_dir / f"series-q{q}-t{step}.cdc", report.output)
        write_indices(output_dir / f"series-q{q}-t{step}.clique", report.lifted_clique or ())
        ok = report.actual == expected
        line = f"t={step} n={report.actual} expected={expected} clique={len(report.lifted_clique or ())}"
        if config.get("verify", True):
            mode = ByCopies(report.provenance, cross_pairs, run.seed)
            verified = verify(report.output, 1, mode, workers=run.threads)
            ok = ok and verified.passed
            line += f" mode={verified.mode} pairs={verified.pairs_checked} seed={verified.seed}"
        print(f"{line} ok={str(ok).lower()}")
        (result.processed if ok else result.failed).append(str(step))

    print(f"Done. passed={len(result.processed)} failed={len(result.failed)}")
    if result.failed:
        sys.exit(1)


if __name__ == "__main__":
    main()

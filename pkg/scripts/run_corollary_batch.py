from __future__ import annotations

import sys
from pathlib import Path
from typing import Any

sys.path.append(str(Path(__file__).resolve().parents[1] / "utils"))

from cdc import verify, write_code
from combiner import build_series_base, corollary_943, load_series_base
from errors import QSubspaceError
from qsubspace_batch import BatchResult, bootstrap, render_combine_audit, render_pipeline_line, results_dir, run_config

CONFIG_FILE = "corollary-config.json"


def load_base(q: int, config: dict[str, Any], budget: float):
    imported = config.get("bases", {}).get(str(q))
    if imported:
        return load_series_base(imported["code"], imported["clique"], imported.get("sprime"), budget)
    return build_series_base(q, budget)


def main() -> None:
    config = bootstrap(CONFIG_FILE)
    q_values = config.get("q_values") or []
    if not q_values:
        print(f"'q_values' is required in {CONFIG_FILE}", file=sys.stderr)
        sys.exit(1)

    run = run_config("corollary", config.get("threads"), budget=config.get("budget"))
    print(run.describe(), file=sys.stderr)

    result = BatchResult()
    for q in q_values:
        print(f"q={q}: building base")
        try:
            base = load_base(q, config, run.budget)
            report = corollary_943(q, base, run.budget)
        except QSubspaceError as e:
            print(f"q={q}: error[{e.code}]: {e}", file=sys.stderr)
            result.failed.append(str(q))
            continue
        output_dir = results_dir(config.get("output_folder", "results/corollary"), f"q{q}")
        verified = verify(report.output, 1, workers=run.threads)
        write_code(output_dir / f"corollary-q{q}.cdc", report.output)
        (output_dir / f"corollary-q{q}.audit").write_text(render_combine_audit(report))
        print(f"q={q}: {render_pipeline_line(report, verified)}", end="")
        if verified.passed and report.predicted == report.actual:
            result.processed.append(str(q))
        else:
            result.failed.append(str(q))

    print(f"Done. passed={len(result.processed)} failed={len(result.failed)}")
    if result.failed:
        sys.exit(1)


if __name__ == "__main__":
    main()

from __future__ import annotations

import sys
from pathlib import Path

sys.path.append(str(Path(__file__).resolve().parents[1] / "utils"))

from combiner import BOUNDS, SERIES, bound_triple, bound_value
from errors import QSubspaceError
from qsubspace_batch import bootstrap, results_dir

CONFIG_FILE = "bounds-config.json"


def table_rows(names: list[str], q_values: list[int], t_values: list[int]) -> list[str]:
    rows = ["name\tt\tv\td\tk\t" + "\t".join(f"q={q}" for q in q_values)]
    for name in names:
        for t in t_values if name == SERIES else [None]:
            v, d, k = bound_triple(name, t)
            values = "\t".join(str(bound_value(name, q, t)) for q in q_values)
            rows.append(f"{name}\t{'-' if t is None else t}\t{v}\t{d}\t{k}\t{values}")
    return rows


def main() -> None:
    config = bootstrap(CONFIG_FILE)
    names = config.get("names") or [*BOUNDS, SERIES]
    q_values = [int(q) for q in config.get("q_values", [2, 3, 4, 5])]
    t_values = [int(t) for t in config.get("t_values", [1, 2])]

    try:
        rows = table_rows(names, q_values, t_values)
    except QSubspaceError as e:
        print(f"error[{e.code}]: {e}", file=sys.stderr)
        sys.exit(1)

    output_dir = results_dir(config.get("output_folder", "results/bounds"))
    path = output_dir / config.get("output_filename", "bounds.tsv")
    path.write_text("\n".join(rows) + "\n")
    for row in rows:
        print(row)
    print(f"Wrote {path}")


if __name__ == "__main__":
    main()

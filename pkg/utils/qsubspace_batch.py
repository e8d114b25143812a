from __future__ import annotations

import json
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping

from dotenv import load_dotenv

from cdc import DEFAULT_SEED, CodeStats, VerifyReport
from combiner import CombineReport, bounds_for
from errors import InvalidSpec
from search import DEFAULT_BUDGET
from subspace_linalg import DEFAULT_CAP

PROJECT_DIR = Path(__file__).resolve().parent.parent
_ENV_REF = re.compile(r"\$\{(\w+)(?::-([^}]*))?\}")

THREADS_ENV = "QSUBSPACE_THREADS"
CAP_ENV = "QSUBSPACE_CAP"
BUDGET_ENV = "QSUBSPACE_BUDGET"


def load_environment() -> None:
    load_dotenv(PROJECT_DIR / ".env")


def require_env(name: str) -> str:
    value = os.environ.get(name)
    if not value:
        print(f"Error: environment variable {name} is not set", file=sys.stderr)
        sys.exit(1)
    return value


def expand_config(value: Any) -> Any:
    """Substitute ${NAME} and ${NAME:-fallback} inside config strings; unset names without a
    fallback stop the run."""
    match value:
        case str():
            return _ENV_REF.sub(_env_value, value)
        case dict():
            return {key: expand_config(item) for key, item in value.items()}
        case list():
            return [expand_config(item) for item in value]
        case _:
            return value


def _env_value(ref: re.Match[str]) -> str:
    name, fallback = ref.group(1), ref.group(2)
    if fallback is not None and not os.environ.get(name):
        return fallback
    return require_env(name)


def bootstrap(config_file: str) -> dict[str, Any]:
    load_environment()
    config_path = Path(config_file)
    if not config_path.is_absolute():
        config_path = PROJECT_DIR / "configs" / config_file
    if not config_path.exists():
        print(f"Error: {config_file} not found at {config_path}", file=sys.stderr)
        sys.exit(1)
    with open(config_path) as f:
        return expand_config(json.load(f))


def results_dir(folder: str, run: str | None = None) -> Path:
    """Results folder under the project root (absolute folders are kept), with an optional
    per-run subfolder; created on demand."""
    base = Path(folder)
    if not base.is_absolute():
        base = PROJECT_DIR / base
    target = base / run if run else base
    target.mkdir(parents=True, exist_ok=True)
    return target


@dataclass(frozen=True)
class RunConfig:
    command: str
    threads: int
    cap: int
    budget: float
    seed: int
    options: tuple[tuple[str, str], ...] = field(default_factory=tuple)

    def describe(self) -> str:
        parts = [
            f"command={self.command}",
            f"threads={self.threads}",
            f"cap={self.cap}",
            f"budget={self.budget:g}",
            f"seed={self.seed}",
        ]
        parts += [f"{key}={value}" for key, value in self.options]
        return "# config: " + " ".join(parts)


@dataclass
class BatchResult:
    processed: list[str] = field(default_factory=list)
    failed: list[str] = field(default_factory=list)


def _from_env(name: str, cast: type, default: Any) -> Any:
    raw = os.environ.get(name)
    if raw is None or raw == "":
        return default
    try:
        value = cast(raw)
    except ValueError:
        raise InvalidSpec(f"{name}={raw!r} is not a valid {cast.__name__}") from None
    if value <= 0:
        raise InvalidSpec(f"{name} must be positive, got {raw}")
    return value


def run_config(
    command: str,
    threads: int | None = None,
    cap: int | None = None,
    budget: float | None = None,
    seed: int | None = None,
    options: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Flag values win over QSUBSPACE_* environment variables, which win over built-in defaults."""
    return RunConfig(
        command=command,
        threads=threads or _from_env(THREADS_ENV, int, os.cpu_count() or 1),
        cap=cap or _from_env(CAP_ENV, int, DEFAULT_CAP),
        budget=budget or _from_env(BUDGET_ENV, float, DEFAULT_BUDGET),
        seed=DEFAULT_SEED if seed is None else seed,
        options=tuple((key, str(value)) for key, value in (options or {}).items() if value is not None),
    )


def _histogram(histogram: Mapping[int, int]) -> str:
    if not histogram:
        return "histogram -"
    return "histogram " + " ".join(f"{d}:{c}" for d, c in sorted(histogram.items()))


def bound_lines(q: int, v: int, d: int, k: int, n: int) -> list[str]:
    return [
        f"bound {b.name} {b.polynomial}={b.value(q)} n={n} gap={n - b.value(q)}" for b in bounds_for(v, d, k)
    ]


def render_verify_report(report: VerifyReport, q: int | None = None, v: int | None = None) -> str:
    lines = [
        f"n={report.n} k={report.k} mode={report.mode} threshold={report.threshold}",
        f"pairs={report.pairs_checked}",
        f"min_distance={report.min_distance} max_intersection={report.max_intersection_dim}",
        _histogram(report.distance_histogram),
    ]
    if report.seed is not None:
        lines.append(f"seed={report.seed}")
    pair = report.violating_pair
    lines.append("violation=none" if pair is None else f"violation={pair[0]},{pair[1]}")
    if q is not None and v is not None:
        lines += bound_lines(q, v, 2 * report.k - 2 * report.threshold, report.k, report.n)
    return "\n".join(lines) + "\n"


def render_combine_audit(report: CombineReport, comments: Iterable[str] = ()) -> str:
    spec = report.spec
    lines = [
        f"# combine q={spec.c1.field.q} k={spec.c1.k} v1={spec.c1.v} v2={spec.c2.v} "
        f"n1={len(spec.c1)} clique1={len(spec.clique1)} n2={len(spec.c2)} strategy={spec.strategy}",
        *(f"# {line}" for line in comments),
        f"# w0={report.w0_index} planted={','.join(map(str, report.planted)) or '-'}",
    ]
    lines += [f"copy U={u} type={report.copy_types[u]} size={size}" for u, size in sorted(report.per_copy_sizes.items())]
    lines.append(f"lambda={report.lambda_} predicted={report.predicted} actual={report.actual}")
    return "\n".join(lines) + "\n"


def render_pipeline_line(report: CombineReport, verified: VerifyReport) -> str:
    return f"predicted={report.predicted} actual={report.actual} min_distance={verified.min_distance}\n"


def render_stats(stats: CodeStats) -> str:
    lines = [
        f"n={stats.n} q={stats.q} v={stats.v} k={stats.k}",
        _histogram(stats.distance_histogram),
        f"min_distance={stats.min_distance}",
        f"clique={stats.clique_size}" + ("" if stats.clique_cap is None else f" cap={stats.clique_cap}"),
    ]
    lines += bound_lines(stats.q, stats.v, stats.min_distance, stats.k, stats.n)
    return "\n".join(lines) + "\n"

"""Experiment runner, parallel domain decomposition, and result files.

Report CSVs mirror the sweep-table layout (six fractional digits, LF
endings); JSON keeps full float precision. Wall times are recorded in
every report but never asserted anywhere: they are machine-bound.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .benchmarks import BenchmarkSpec, make_benchmark
from .core import Bounds, ConfigurationError, Objective, child_seed
from .engine import RunResult, VSConfig, run
from .local_search import DEConfig

_TAIL_COLUMNS = ("time_s", "seed", "kind", "status")


@dataclass(frozen=True)
class ExperimentSpec:
    """A benchmark sweep: which config fields vary, over which cells.

    When `checkpoints` is set the spec is a single long run sampled at
    those trace generations instead of a grid sweep.
    """

    name: str
    benchmark: str
    sweep_fields: tuple = ()
    cells: tuple = ((),)
    base: dict = field(default_factory=dict)
    de: dict = field(default_factory=dict)
    benchmark_params: dict = field(default_factory=dict)
    repeat: int = 1
    seed_base: int = 0
    out_format: str = "csv"
    out_path: Optional[str] = None
    checkpoints: Optional[tuple] = None

    def __post_init__(self):
        if self.repeat < 1:
            raise ConfigurationError("repeat must be >= 1")
        if self.out_format not in ("csv", "json"):
            raise ConfigurationError("out_format must be 'csv' or 'json'")
        for cell in self.cells:
            if len(cell) != len(self.sweep_fields):
                raise ConfigurationError(
                    f"cell {cell!r} does not match sweep fields {self.sweep_fields!r}"
                )


@dataclass
class ReportRow:
    """One result line: swept values, best coordinates, value, timing, seed."""

    sweep: dict
    point: Optional[tuple]
    value: float
    time_s: float
    seed: int
    kind: str = "run"
    status: str = "ok"


def builtin_specs() -> dict:
    """The shipped sweep definitions, keyed by CLI name."""
    return {
        "rosenbrock-table2": ExperimentSpec(
            name="rosenbrock-table2",
            benchmark="rosenbrock",
            sweep_fields=("n_individuals", "n_generations"),
            cells=((5, 50), (10, 75), (30, 100), (60, 200), (100, 300), (400, 1200)),
            base={"n_viral_individuals": 150, "n_viral_generations": 75},
        ),
        "rosenbrock-table3": ExperimentSpec(
            name="rosenbrock-table3",
            benchmark="rosenbrock",
            sweep_fields=("n_viral_individuals", "n_viral_generations"),
            cells=(
                (5, 50),
                (10, 75),
                (30, 100),
                (60, 200),
                (100, 300),
                (400, 500),
                (400, 1200),
            ),
            base={"n_individuals": 40, "n_generations": 100},
        ),
        "schaffer-table3": ExperimentSpec(
            name="schaffer-table3",
            benchmark="schaffer",
            sweep_fields=("n_individuals", "n_generations"),
            cells=(
                (10, 50),
                (50, 75),
                (100, 100),
                (400, 150),
                (1000, 200),
                (1500, 300),
            ),
            base={"n_viral_individuals": 150, "n_viral_generations": 75},
        ),
        "twowell-table4": ExperimentSpec(
            name="twowell-table4",
            benchmark="two_well",
            benchmark_params={"tau": 500.0},
            base={
                "n_individuals": 100,
                "n_generations": 3000,
                "n_viral_individuals": 150,
                "n_viral_generations": 100,
                "time_varying": True,
            },
            checkpoints=tuple(range(300, 3000, 300)) + (2999,),
        ),
        "shekel-table5": ExperimentSpec(
            name="shekel-table5",
            benchmark="shekel",
            sweep_fields=("n_individuals", "n_generations"),
            cells=(
                (5, 50),
                (10, 75),
                (30, 100),
                (60, 200),
                (100, 300),
                (400, 1200),
                (800, 1500),
                (1000, 2000),
                (2000, 3000),
                (5000, 5000),
            ),
            base={"n_viral_individuals": 300, "n_viral_generations": 75},
        ),
    }


def _coord_names(arity: int) -> list:
    return ["x", "y"] if arity == 2 else [f"x{j + 1}" for j in range(arity)]


def _value_name(bench: BenchmarkSpec) -> str:
    if bench.known_optimum is not None and bench.known_optimum.kind == "max":
        return "val"
    return "z"


def _display_value(bench: BenchmarkSpec, value: float) -> float:
    # the engine minimizes; flip the sign back for maximization problems
    if bench.known_optimum is not None and bench.known_optimum.kind == "max":
        return -value
    return value


def _median_row(rows: list) -> ReportRow:
    ok = [r for r in rows if r.status == "ok"]
    pool = ok if ok else rows
    ranked = sorted(range(len(pool)), key=lambda i: (pool[i].value, i))
    chosen = pool[ranked[(len(ranked) - 1) // 2]]
    return replace_row(chosen, kind="median")


def replace_row(row: ReportRow, **changes) -> ReportRow:
    data = dict(
        sweep=dict(row.sweep),
        point=row.point,
        value=row.value,
        time_s=row.time_s,
        seed=row.seed,
        kind=row.kind,
        status=row.status,
    )
    data.update(changes)
    return ReportRow(**data)


def run_experiment(spec: ExperimentSpec) -> list:
    """Execute every (cell, repeat) run; one row per run plus a median row
    per cell. A failed run becomes an error row instead of aborting the
    sweep. Writes `spec.out_path` when set."""
    bench = make_benchmark(spec.benchmark, **spec.benchmark_params)
    rows = []
    flat = 0
    for cell in spec.cells:
        cell_rows = []
        for _ in range(spec.repeat):
            seed = child_seed(spec.seed_base, flat)
            flat += 1
            overrides = dict(spec.base)
            overrides.update(zip(spec.sweep_fields, cell))
            overrides["seed"] = seed
            sweep = dict(zip(spec.sweep_fields, cell))
            try:
                cfg = VSConfig(**overrides)
                result = run(bench.objective, bench.bounds, cfg, DEConfig(**spec.de))
                if spec.checkpoints is not None:
                    cell_rows.extend(
                        _checkpoint_rows(bench, result, spec.checkpoints, seed)
                    )
                else:
                    cell_rows.append(
                        ReportRow(
                            sweep=sweep,
                            point=None
                            if result.best_point is None
                            else tuple(float(v) for v in result.best_point),
                            value=_display_value(bench, result.best_value),
                            time_s=result.wall_time_ms / 1e3,
                            seed=seed,
                        )
                    )
            except Exception as exc:  # noqa: BLE001 - sweep must survive one bad cell
                cell_rows.append(
                    ReportRow(
                        sweep=sweep,
                        point=None,
                        value=float("nan"),
                        time_s=0.0,
                        seed=seed,
                        status=f"error: {exc}",
                    )
                )
        rows.extend(cell_rows)
        if spec.checkpoints is None:
            rows.append(_median_row(cell_rows))
    if spec.out_path is not None:
        write_rows(rows, spec.out_path, spec.out_format, arity=bench.arity,
                   value_name=_value_name(bench))
    return rows


def _checkpoint_rows(bench, result: RunResult, checkpoints, seed: int) -> list:
    rows = []
    by_generation = {row.generation: row for row in result.trace}
    for t in checkpoints:
        trace_row = by_generation.get(t)
        if trace_row is None:
            rows.append(
                ReportRow(
                    sweep={"t": t},
                    point=None,
                    value=float("nan"),
                    time_s=result.wall_time_ms / 1e3,
                    seed=seed,
                    status=f"error: no trace row for generation {t}",
                )
            )
            continue
        point = trace_row.best_point
        rows.append(
            ReportRow(
                sweep={"t": t},
                point=None if point is None else tuple(float(v) for v in point),
                value=_display_value(bench, trace_row.fobj_global),
                time_s=trace_row.elapsed_ms / 1e3,
                seed=seed,
            )
        )
    return rows


def _header(rows: list, arity: int, value_name: str) -> list:
    sweep_names = list(rows[0].sweep) if rows else []
    return sweep_names + _coord_names(arity) + [value_name, *_TAIL_COLUMNS]


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.6f}"


def write_rows(rows: list, path: str, fmt: str = "csv", arity: int = 2,
               value_name: str = "z") -> None:
    if fmt == "json":
        payload = []
        for r in rows:
            payload.append(
                {
                    "sweep": {k: v for k, v in r.sweep.items()},
                    "point": None if r.point is None else list(r.point),
                    "value": r.value,
                    "time_s": r.time_s,
                    "seed": r.seed,
                    "kind": r.kind,
                    "status": r.status,
                }
            )
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump({"rows": payload}, fh, indent=2)
            fh.write("\n")
        return
    coords = _coord_names(arity)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_header(rows, arity, value_name))
        for r in rows:
            point = r.point if r.point is not None else (float("nan"),) * arity
            writer.writerow(
                [_fmt(v) for v in r.sweep.values()]
                + [_fmt(c) for c in point[: len(coords)]]
                + [_fmt(r.value), _fmt(r.time_s), str(r.seed), r.kind, r.status]
            )


def read_rows_json(path: str) -> list:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [
        ReportRow(
            sweep=entry["sweep"],
            point=None if entry["point"] is None else tuple(entry["point"]),
            value=entry["value"],
            time_s=entry["time_s"],
            seed=entry["seed"],
            kind=entry["kind"],
            status=entry["status"],
        )
        for entry in payload["rows"]
    ]


def read_rows_csv(path: str) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        time_at = header.index("time_s")
        value_at = time_at - 1
        coord_start = value_at
        for j, name in enumerate(header[:value_at]):
            if name == "x" or name == "x1":
                coord_start = j
                break
        rows = []
        for record in reader:
            sweep = {
                name: _parse_number(record[j]) for j, name in enumerate(header[:coord_start])
            }
            point = tuple(float(record[j]) for j in range(coord_start, value_at))
            rows.append(
                ReportRow(
                    sweep=sweep,
                    point=point,
                    value=float(record[value_at]),
                    time_s=float(record[time_at]),
                    seed=int(record[time_at + 1]),
                    kind=record[time_at + 2],
                    status=record[time_at + 3],
                )
            )
    return rows


def _parse_number(text: str):
    try:
        return int(text)
    except ValueError:
        return float(text)


def split_bounds(b: Bounds, m: int) -> list:
    """Partition the box into `m` boxes by repeatedly halving the widest
    box along its longest axis (ties to the lowest index)."""
    if m < 1:
        raise ConfigurationError("m must be >= 1")
    boxes = [b]
    while len(boxes) < m:
        widths = [box.span.max() for box in boxes]
        i = int(np.argmax(widths))
        box = boxes[i]
        axis = int(np.argmax(box.span))
        mid = 0.5 * (box.lb[axis] + box.ub[axis])
        left_ub = box.ub.copy()
        left_ub[axis] = mid
        right_lb = box.lb.copy()
        right_lb[axis] = mid
        boxes[i : i + 1] = [Bounds(box.lb, left_ub), Bounds(right_lb, box.ub)]
    return boxes


def parallel_run(
    objective: Objective,
    b: Bounds,
    cfg: VSConfig,
    de_cfg: Optional[DEConfig] = None,
    m: int = 1,
) -> RunResult:
    """Split the box into `m` sub-boxes, run an independent engine per box
    (population split evenly, child seeds per worker), and keep the best
    worker's result. Traces are merged, tagged with the worker index.

    With m=1 this is exactly `run` with the same seed.
    """
    if m < 1:
        raise ConfigurationError("m must be >= 1")
    if m > cfg.n_individuals:
        raise ConfigurationError(
            f"m={m} workers need at least one scout each, but "
            f"n_individuals={cfg.n_individuals}"
        )
    if m == 1:
        return run(objective, b, cfg, de_cfg)

    t0 = time.perf_counter()
    boxes = split_bounds(b, m)
    share, extra = divmod(cfg.n_individuals, m)
    worker_cfgs = [
        replace(
            cfg,
            n_individuals=share + (1 if w < extra else 0),
            seed=child_seed(cfg.seed, w),
        )
        for w in range(m)
    ]

    def _one(w: int) -> RunResult:
        return run(objective, boxes[w], worker_cfgs[w], de_cfg)

    with ThreadPoolExecutor(max_workers=m) as pool:
        results = list(pool.map(_one, range(m)))

    best_w = min(range(m), key=lambda w: (results[w].best_value, w))
    trace = []
    for w, res in enumerate(results):
        for row in res.trace:
            trace.append(replace(row, worker=w))
    return RunResult(
        best_point=None
        if results[best_w].best_point is None
        else results[best_w].best_point.copy(),
        best_value=results[best_w].best_value,
        trace=trace,
        epidemic_count=sum(res.epidemic_count for res in results),
        wall_time_ms=(time.perf_counter() - t0) * 1e3,
        config_echo=cfg,
    )


def trace_export(result: RunResult, path: str) -> None:
    """Write the per-generation incumbent trace as a plottable CSV."""
    if not result.trace:
        raise ValueError("cannot export an empty trace")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["generation", "fobj_global", "epidemics", "elapsed_ms"])
        for row in result.trace:
            writer.writerow(
                [
                    row.generation,
                    f"{row.fobj_global:.12g}",
                    row.epidemics_so_far,
                    f"{row.elapsed_ms:.3f}",
                ]
            )

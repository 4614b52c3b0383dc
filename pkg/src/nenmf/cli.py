"""Benchmark command line: generate problems, run factorizations, compare traces.

Subcommands:

* ``generate``: write synthetic problem instances, one directory per seed.
* ``run``: factorize each seed's instance under a time budget and write one
  trace CSV per seed plus ``summary.json``/``summary.csv`` and a full
  ``runspec.json`` snapshot.
* ``compare``: recompute per-method statistics from two or more run
  directories and report medians and speedup ratios.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import statistics
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .compression import (
    gaussian_sketch_pair,
    power_iteration_pair,
    save_sketch,
    subspace_iteration_pair,
)
from .errors import ComparisonValidityError, ConfigError, NenmfError
from .factorize import OuterConfig, factorize_compressed, factorize_vanilla, init_factors
from .nnls import InnerSolverConfig
from .synthetic import generate_problem, load_instance, save_instance
from .tracing import (
    IterationClock,
    MonotonicClock,
    TraceRecorder,
    iterations_to_target,
    read_trace_csv,
    time_to_target,
    write_trace_csv,
)

METHODS = ("vanilla", "gaussian", "power", "subspace")

# sub-stream labels for per-seed derived seeds
_PROBLEM_STREAM = 0
_INIT_STREAM = 1
_SKETCH_STREAM = 2

_BOOL_KEYS = {"serial", "dump_sketch"}


@dataclass(frozen=True)
class RunSpec:
    """Fully resolved benchmark configuration."""

    n: int
    m: int
    p: int
    snr_db: float
    method: str
    nu: int
    q: int
    max_inner: int
    budget_s: float
    seeds: tuple[int, ...]
    out: str
    trace_every: int = 1
    serial: bool = False
    max_outer: int = 0
    rre_target: float = 0.0
    grad_tol: float = 1e-4
    clock: str = "real"
    targets: tuple[float, ...] = (0.05,)
    instances: str | None = None
    dump_sketch: bool = False
    base_seed: int | None = None
    num_seeds: int | None = None

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if self.method != "vanilla":
            if self.nu < self.p:
                raise ConfigError(
                    f"target rank nu={self.nu} must be >= factor rank p={self.p}"
                )
            if self.nu > min(self.n, self.m):
                raise ConfigError(
                    f"target rank nu={self.nu} exceeds min(n, m) = {min(self.n, self.m)}"
                )
            if self.method in ("power", "subspace") and self.q < 1:
                raise ConfigError(f"q must be >= 1 for method {self.method}")
        if self.p < 1 or self.p > min(self.n, self.m):
            raise ConfigError(f"factor rank p={self.p} incompatible with {self.n}x{self.m}")
        if not (self.budget_s > 0 or self.max_outer >= 1):
            raise ConfigError("need --budget-s > 0 or --max-outer >= 1")
        if self.clock not in ("real", "iteration"):
            raise ConfigError(f"unknown clock {self.clock!r}")
        for t in self.targets:
            if not t > 0:
                raise ConfigError(f"time-to-target thresholds must be positive, got {t}")


def derive_seed(base: int, stream: int) -> int:
    """Deterministic 64-bit sub-seed for one stream of a benchmark seed."""
    ss = np.random.SeedSequence(entropy=base, spawn_key=(stream,))
    return int(ss.generate_state(1, np.uint64)[0])


def _instance_dir(root: Path, seed: int) -> Path:
    return root / f"instance_{seed}"


def _obtain_instance(spec: RunSpec, seed: int):
    if spec.instances:
        candidate = _instance_dir(Path(spec.instances), seed)
        if candidate.is_dir():
            inst = load_instance(candidate)
            if inst.X.shape != (spec.n, spec.m) or inst.G_true.shape[1] != spec.p:
                raise ConfigError(
                    f"{candidate}: stored instance {inst.X.shape} rank "
                    f"{inst.G_true.shape[1]} does not match requested "
                    f"{spec.n}x{spec.m} rank {spec.p}"
                )
            return inst
    return generate_problem(spec.n, spec.m, spec.p, spec.snr_db, seed)


def _build_sketch(spec: RunSpec, X, seed: int):
    sketch_seed = derive_seed(seed, _SKETCH_STREAM)
    if spec.method == "gaussian":
        return gaussian_sketch_pair(spec.n, spec.m, spec.nu, sketch_seed)
    if spec.method == "power":
        return power_iteration_pair(X, spec.nu, spec.q, sketch_seed)
    return subspace_iteration_pair(X, spec.nu, spec.q, sketch_seed)


def _run_one_seed(spec: RunSpec, seed: int) -> dict:
    instance = _obtain_instance(spec, seed)
    init = init_factors(spec.n, spec.m, spec.p, derive_seed(seed, _INIT_STREAM))
    cfg = OuterConfig(
        inner=InnerSolverConfig(max_iter=spec.max_inner, grad_tol=spec.grad_tol),
        time_budget_seconds=spec.budget_s,
        max_outer_iterations=spec.max_outer,
        rre_target=spec.rre_target,
        trace_every=spec.trace_every,
    )
    recorder = TraceRecorder(method=spec.method, config={"seed": seed})

    sketch = None
    sketch_build_s = 0.0
    if spec.method != "vanilla":
        build_start = time.perf_counter()
        sketch = _build_sketch(spec, instance.X, seed)
        sketch_build_s = time.perf_counter() - build_start

    if spec.clock == "iteration":
        clock = IterationClock()
    else:
        # sketch construction is part of the compressed method's cost
        clock = MonotonicClock(offset=sketch_build_s)

    if sketch is None:
        factorize_vanilla(instance.X, init, cfg, observer=recorder, clock=clock)
    else:
        factorize_compressed(instance.X, sketch, init, cfg, observer=recorder, clock=clock)

    return {
        "seed": seed,
        "records": recorder.records,
        "sketch_build_s": sketch_build_s,
        "sketch": sketch,
        "realized_snr_db": instance.snr_db_realized,
    }


def _median(values) -> float | None:
    values = [v for v in values if v is not None]
    return statistics.median(values) if values else None


def _seed_stats(spec: RunSpec, seed: int, records, sketch_build_s: float) -> dict:
    final = records[-1]
    return {
        "seed": seed,
        "status": "ok",
        "error": None,
        "final_rre": final.rre,
        "final_objective": final.objective,
        "outer_iterations": final.outer_iter,
        "solver_elapsed_s": final.solver_elapsed_s,
        "wall_elapsed_s": final.wall_elapsed_s,
        "sketch_build_s": sketch_build_s,
        "time_to_target": {
            str(t): time_to_target(records, t) for t in spec.targets
        },
        "iterations_to_target": {
            str(t): iterations_to_target(records, t) for t in spec.targets
        },
    }


def _write_summary(spec: RunSpec, out: Path, per_seed: list[dict], workers: int) -> dict:
    ok = [s for s in per_seed if s["status"] == "ok"]
    medians = {
        "final_rre": _median([s["final_rre"] for s in ok]),
        "solver_elapsed_s": _median([s["solver_elapsed_s"] for s in ok]),
        "sketch_build_s": _median([s["sketch_build_s"] for s in ok]),
        "time_to_target": {
            str(t): _median([s["time_to_target"][str(t)] for s in ok]) for t in spec.targets
        },
        "iterations_to_target": {
            str(t): _median([s["iterations_to_target"][str(t)] for s in ok])
            for t in spec.targets
        },
    }
    summary = {
        "method": spec.method,
        "n": spec.n,
        "m": spec.m,
        "p": spec.p,
        "nu": spec.nu,
        "q": spec.q,
        "snr_db": spec.snr_db,
        "budget_s": spec.budget_s,
        "max_inner": spec.max_inner,
        "clock": spec.clock,
        "targets": list(spec.targets),
        "parallelism": workers,
        "seeds": list(spec.seeds),
        "per_seed": per_seed,
        "medians": medians,
        "failed_seeds": [s["seed"] for s in per_seed if s["status"] != "ok"],
    }
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=2) + "\n")

    ttt_cols = [f"time_to_target@{t}" for t in spec.targets]
    itt_cols = [f"iterations_to_target@{t}" for t in spec.targets]
    lines = [
        ",".join(
            ["seed", "status", "final_rre", "outer_iterations", "solver_elapsed_s",
             "wall_elapsed_s", "sketch_build_s"] + ttt_cols + itt_cols
        )
    ]
    for s in per_seed:
        if s["status"] == "ok":
            row = [
                str(s["seed"]), "ok",
                format(s["final_rre"], ".17g"),
                str(s["outer_iterations"]),
                format(s["solver_elapsed_s"], ".17g"),
                format(s["wall_elapsed_s"], ".17g"),
                format(s["sketch_build_s"], ".17g"),
            ]
            for t in spec.targets:
                v = s["time_to_target"][str(t)]
                row.append("" if v is None else format(v, ".17g"))
            for t in spec.targets:
                v = s["iterations_to_target"][str(t)]
                row.append("" if v is None else str(v))
        else:
            row = [str(s["seed"]), "failed"] + [""] * (5 + 2 * len(spec.targets))
        lines.append(",".join(row))
    (out / "summary.csv").write_text("\n".join(lines) + "\n")
    return summary


def _write_runspec(spec: RunSpec, out: Path, workers: int) -> None:
    snapshot = asdict(spec)
    snapshot["seeds"] = list(spec.seeds)
    snapshot["targets"] = list(spec.targets)
    snapshot["parallelism"] = workers
    (out / "runspec.json").write_text(json.dumps(snapshot, sort_keys=True, indent=2) + "\n")


def cmd_generate(spec: RunSpec) -> int:
    spec.validate()
    out = Path(spec.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        for seed in spec.seeds:
            instance = generate_problem(spec.n, spec.m, spec.p, spec.snr_db, seed)
            save_instance(instance, _instance_dir(out, seed))
            print(f"generated instance seed={seed} -> {_instance_dir(out, seed)}",
                  file=sys.stderr)
    except OSError as exc:
        print(f"error: cannot write instances under {out}: {exc}", file=sys.stderr)
        return 1
    return 0


def cmd_run(spec: RunSpec) -> int:
    spec.validate()
    out = Path(spec.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: cannot create output directory {out}: {exc}", file=sys.stderr)
        return 1

    workers = 1 if spec.serial else min(len(spec.seeds), os.cpu_count() or 1)
    _write_runspec(spec, out, workers)

    results: dict[int, dict] = {}
    errors: dict[int, Exception] = {}

    def run_seed(seed: int):
        return _run_one_seed(spec, seed)

    if workers == 1:
        for seed in spec.seeds:
            try:
                results[seed] = run_seed(seed)
            except NenmfError as exc:
                errors[seed] = exc
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(run_seed, seed): seed for seed in spec.seeds}
            for fut in concurrent.futures.as_completed(futures):
                seed = futures[fut]
                try:
                    results[seed] = fut.result()
                except NenmfError as exc:
                    errors[seed] = exc

    per_seed = []
    for seed in spec.seeds:
        if seed in errors:
            exc = errors[seed]
            print(f"seed {seed} failed: {exc}", file=sys.stderr)
            per_seed.append({
                "seed": seed, "status": "failed", "error": str(exc),
                "final_rre": None, "final_objective": None, "outer_iterations": None,
                "solver_elapsed_s": None, "wall_elapsed_s": None, "sketch_build_s": None,
                "time_to_target": {str(t): None for t in spec.targets},
                "iterations_to_target": {str(t): None for t in spec.targets},
            })
            continue
        res = results[seed]
        trace_path = out / f"trace_{spec.method}_seed{seed}.csv"
        write_trace_csv(res["records"], trace_path)
        if spec.dump_sketch and res["sketch"] is not None:
            save_sketch(res["sketch"], out / f"sketch_seed{seed}")
        stats = _seed_stats(spec, seed, res["records"], res["sketch_build_s"])
        per_seed.append(stats)
        print(
            f"seed {seed}: final RRE {stats['final_rre']:.6g} after "
            f"{stats['outer_iterations']} iterations "
            f"({stats['solver_elapsed_s']:.3g} s solver clock)",
            file=sys.stderr,
        )

    _write_summary(spec, out, per_seed, workers)
    if errors and len(errors) == len(spec.seeds):
        print("error: every seed failed", file=sys.stderr)
        return 1
    return 0


def _load_run_dir(directory: Path) -> dict:
    runspec_path = directory / "runspec.json"
    if not runspec_path.is_file():
        raise ComparisonValidityError(f"{directory}: missing runspec.json")
    runspec = json.loads(runspec_path.read_text())
    traces = {}
    for seed in runspec["seeds"]:
        trace_path = directory / f"trace_{runspec['method']}_seed{seed}.csv"
        if trace_path.is_file():
            traces[seed] = read_trace_csv(trace_path)
    if not traces:
        raise ComparisonValidityError(f"{directory}: no trace CSVs found")
    return {"dir": directory, "runspec": runspec, "traces": traces}


def _compare_rows(dirs: list[Path], target_rre: float) -> list[dict]:
    runs = [_load_run_dir(d) for d in dirs]
    if len(runs) < 2:
        raise ComparisonValidityError("need at least two trace sets to compare")
    reference = runs[0]["runspec"]
    for run in runs[1:]:
        spec = run["runspec"]
        for key in ("n", "m", "p", "snr_db"):
            if spec[key] != reference[key]:
                raise ComparisonValidityError(
                    f"{run['dir']}: {key}={spec[key]} does not match "
                    f"{reference[key]} from {runs[0]['dir']}"
                )
        if sorted(spec["seeds"]) != sorted(reference["seeds"]):
            raise ComparisonValidityError(
                f"{run['dir']}: seed set differs from {runs[0]['dir']}"
            )

    rows = []
    for run in runs:
        finals, ttts, itts = [], [], []
        for records in run["traces"].values():
            finals.append(records[-1].rre)
            ttts.append(time_to_target(records, target_rre))
            itts.append(iterations_to_target(records, target_rre))
        reached = sum(1 for v in ttts if v is not None)
        rows.append({
            "dir": str(run["dir"]),
            "method": run["runspec"]["method"],
            "seeds": len(run["traces"]),
            "reached_target": reached,
            "final_rre_median": _median(finals),
            "final_rre_min": min(finals),
            "final_rre_max": max(finals),
            "time_to_target_median": _median(ttts),
            "time_to_target_min": min((v for v in ttts if v is not None), default=None),
            "time_to_target_max": max((v for v in ttts if v is not None), default=None),
            "iterations_to_target_median": _median(itts),
        })
    base = rows[0]["time_to_target_median"]
    for row in rows:
        own = row["time_to_target_median"]
        if base is None or own is None:
            row["speedup_vs_first"] = None
        elif own == 0.0:
            # both hit the target at clock zero, or this method did instantly
            row["speedup_vs_first"] = 1.0 if base == 0.0 else float("inf")
        else:
            row["speedup_vs_first"] = base / own
    return rows


_COMPARE_COLUMNS = (
    "method", "seeds", "reached_target", "final_rre_median", "final_rre_min",
    "final_rre_max", "time_to_target_median", "time_to_target_min",
    "time_to_target_max", "iterations_to_target_median", "speedup_vs_first",
)


def cmd_compare(dirs: list[str], target_rre: float, out: str | None) -> int:
    try:
        rows = _compare_rows([Path(d) for d in dirs], target_rre)
    except ComparisonValidityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    def fmt(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)

    widths = {c: max(len(c), *(len(fmt(r[c])) for r in rows)) for c in _COMPARE_COLUMNS}
    header = "  ".join(c.ljust(widths[c]) for c in _COMPARE_COLUMNS)
    print(f"target RRE: {target_rre}")
    print(header)
    print("-" * len(header))
    for row in rows:
        print("  ".join(fmt(row[c]).ljust(widths[c]) for c in _COMPARE_COLUMNS))

    if out:
        lines = [",".join(("dir",) + _COMPARE_COLUMNS)]
        for row in rows:
            cells = [row["dir"]]
            for c in _COMPARE_COLUMNS:
                v = row[c]
                cells.append("" if v is None else (format(v, ".17g") if isinstance(v, float) else str(v)))
            lines.append(",".join(cells))
        Path(out).write_text("\n".join(lines) + "\n")
    return 0


def _parse_seed_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from exc


def _parse_target_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.replace(",", " ").split())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad target list {text!r}") from exc


def _add_common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="optional key=value config file; flags win on conflict")
    sub.add_argument("--n", type=int, default=500)
    sub.add_argument("--m", type=int, default=500)
    sub.add_argument("--p", type=int, default=15)
    sub.add_argument("--snr-db", type=float, default=30.0)
    sub.add_argument("--seeds", type=_parse_seed_list, default=None,
                     help="explicit comma-separated seed list")
    sub.add_argument("--base-seed", type=int, default=0)
    sub.add_argument("--num-seeds", type=int, default=1)
    sub.add_argument("--out", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nenmf-bench",
        description="Benchmark accelerated NMF with and without randomized compression.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("generate", help="write synthetic problem instances")
    _add_common_flags(gen)

    run = subs.add_parser("run", help="run one method across seeds and trace convergence")
    _add_common_flags(run)
    run.add_argument("--method", choices=METHODS, default="vanilla")
    run.add_argument("--nu", type=int, default=25)
    run.add_argument("--q", type=int, default=4)
    run.add_argument("--max-inner", type=int, default=500)
    run.add_argument("--budget-s", type=float, default=15.0)
    run.add_argument("--max-outer", type=int, default=0,
                     help="outer iteration cap; 0 disables")
    run.add_argument("--rre-target", type=float, default=0.0,
                     help="stop once the full-data RRE reaches this value; 0 disables")
    run.add_argument("--grad-tol", type=float, default=1e-4)
    run.add_argument("--trace-every", type=int, default=1)
    run.add_argument("--serial", action="store_true",
                     help="run seeds sequentially (for timing-sensitive benchmarks)")
    run.add_argument("--clock", choices=("real", "iteration"), default="real",
                     help="'iteration' substitutes a deterministic clock for wall time")
    run.add_argument("--target-rre", type=_parse_target_list, default=(0.05,),
                     dest="targets", help="comma-separated time-to-target thresholds")
    run.add_argument("--instances", default=None,
                     help="directory of pregenerated instances (from 'generate')")
    run.add_argument("--dump-sketch", action="store_true",
                     help="serialize the sketch pair of each seed for debugging")

    comp = subs.add_parser("compare", help="compare two or more run directories")
    comp.add_argument("dirs", nargs="+")
    comp.add_argument("--target-rre", type=float, default=0.05)
    comp.add_argument("--out", default=None, help="optional CSV output path")
    return parser


def _apply_config_file(argv: list[str]) -> list[str]:
    """Expand ``--config FILE`` into leading flags so explicit flags override."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        return argv
    path = Path(argv[idx + 1])
    injected: list[str] = []
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        flag = "--" + key.replace("_", "-")
        if key in _BOOL_KEYS:
            if value.lower() in ("1", "true", "yes", "on"):
                injected.append(flag)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise ConfigError(f"{path}:{line_no}: bad boolean {value!r}")
        elif key == "target_rre":
            injected.extend(["--target-rre", value])
        else:
            injected.extend([flag, value])
    return argv[:1] + injected + argv[1:]


def _spec_from_args(args: argparse.Namespace) -> RunSpec:
    if args.seeds is not None:
        seeds = tuple(args.seeds)
        base_seed, num_seeds = None, None
    else:
        if args.num_seeds < 1:
            raise ConfigError(f"--num-seeds must be >= 1, got {args.num_seeds}")
        base_seed, num_seeds = args.base_seed, args.num_seeds
        seeds = tuple(base_seed + i for i in range(num_seeds))
    return RunSpec(
        n=args.n,
        m=args.m,
        p=args.p,
        snr_db=args.snr_db,
        method=getattr(args, "method", "vanilla"),
        nu=getattr(args, "nu", 25),
        q=getattr(args, "q", 4),
        max_inner=getattr(args, "max_inner", 500),
        budget_s=getattr(args, "budget_s", 15.0),
        seeds=seeds,
        out=args.out,
        trace_every=getattr(args, "trace_every", 1),
        serial=getattr(args, "serial", False),
        max_outer=getattr(args, "max_outer", 0),
        rre_target=getattr(args, "rre_target", 0.0),
        grad_tol=getattr(args, "grad_tol", 1e-4),
        clock=getattr(args, "clock", "real"),
        targets=tuple(getattr(args, "targets", (0.05,))),
        instances=getattr(args, "instances", None),
        dump_sketch=getattr(args, "dump_sketch", False),
        base_seed=base_seed,
        num_seeds=num_seeds,
    )


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_file(argv) if argv else argv
        args = parser.parse_args(argv)
        if args.command == "compare":
            return cmd_compare(args.dirs, args.target_rre, args.out)
        spec = _spec_from_args(args)
        if args.command == "generate":
            return cmd_generate(spec)
        return cmd_run(spec)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

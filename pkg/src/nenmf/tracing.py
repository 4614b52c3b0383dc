"""Convergence records, the relative reconstruction error, and solver clocks.

The solver clock measures algorithm time only: the factorization loops pause
it while evaluating full-size metrics and invoking observers, so traces of
cheap and expensive methods stay comparable. Wall time (including metric
evaluation) is recorded alongside.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol

import numpy as np

from .errors import DimensionError, ZeroMatrixError
from .matrix import as_matrix, frobenius_norm

TRACE_CSV_HEADER = ("outer_iter", "solver_elapsed_s", "wall_elapsed_s", "rre", "objective")


@dataclass(frozen=True)
class TraceRecord:
    """One observed outer iteration."""

    outer_iter: int
    solver_elapsed_s: float
    wall_elapsed_s: float
    rre: float
    objective: float


@dataclass
class ConvergenceTrace:
    """Ordered records of one run plus the method label and config snapshot."""

    method: str = ""
    records: list[TraceRecord] = field(default_factory=list)
    config: dict = field(default_factory=dict)


def rre(X, G, F) -> float:
    """Relative reconstruction error ``||X - G @ F||_F / ||X||_F``."""
    X = as_matrix(X, "X")
    G = as_matrix(G, "G")
    F = as_matrix(F, "F")
    if G.shape[1] != F.shape[0] or X.shape != (G.shape[0], F.shape[1]):
        raise DimensionError(
            f"incompatible shapes: X {X.shape}, G {G.shape}, F {F.shape}"
        )
    norm_x = frobenius_norm(X)
    if norm_x == 0.0:
        raise ZeroMatrixError("relative error is undefined for zero X")
    return frobenius_norm(X - G @ F) / norm_x


def _records_of(trace) -> list[TraceRecord]:
    if isinstance(trace, ConvergenceTrace):
        return trace.records
    return list(trace)


def time_to_target(trace, target_rre: float) -> float | None:
    """Smallest solver-clock time at which the trace reached ``target_rre``.

    Returns None when no record meets the target.
    """
    if not target_rre > 0:
        raise ValueError(f"target_rre must be positive, got {target_rre}")
    hits = [r.solver_elapsed_s for r in _records_of(trace) if r.rre <= target_rre]
    return min(hits) if hits else None


def iterations_to_target(trace, target_rre: float) -> int | None:
    """Smallest outer iteration index at which the trace reached ``target_rre``."""
    if not target_rre > 0:
        raise ValueError(f"target_rre must be positive, got {target_rre}")
    hits = [r.outer_iter for r in _records_of(trace) if r.rre <= target_rre]
    return min(hits) if hits else None


def write_trace_csv(records: Iterable[TraceRecord], path) -> None:
    """Write records with 17 significant digits, enough to round-trip floats."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.outer_iter,
                    format(r.solver_elapsed_s, ".17g"),
                    format(r.wall_elapsed_s, ".17g"),
                    format(r.rre, ".17g"),
                    format(r.objective, ".17g"),
                ]
            )


def read_trace_csv(path) -> list[TraceRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != TRACE_CSV_HEADER:
            raise ValueError(f"{path}: unexpected trace header {header!r}")
        out = []
        for row in reader:
            out.append(
                TraceRecord(
                    outer_iter=int(row[0]),
                    solver_elapsed_s=float(row[1]),
                    wall_elapsed_s=float(row[2]),
                    rre=float(row[3]),
                    objective=float(row[4]),
                )
            )
    return out


class SolverClock(Protocol):
    """Stopwatch interface consumed by the factorization loops.

    ``elapsed`` is algorithm-only time (pauses excluded), ``wall_elapsed``
    includes pauses, and ``tick`` marks one completed outer iteration.
    """

    def elapsed(self) -> float: ...

    def wall_elapsed(self) -> float: ...

    def pause(self) -> None: ...

    def resume(self) -> None: ...

    def tick(self) -> None: ...


class MonotonicClock:
    """Pausable wall stopwatch over ``time.perf_counter``.

    ``offset`` preloads already-spent time, e.g. sketch construction charged
    to a compressed run; it counts toward both the solver and wall readings.
    """

    def __init__(self, offset: float = 0.0):
        self._offset = float(offset)
        self._accum = float(offset)
        self._created = time.perf_counter()
        self._anchor = self._created
        self._running = True

    def elapsed(self) -> float:
        if self._running:
            return self._accum + (time.perf_counter() - self._anchor)
        return self._accum

    def wall_elapsed(self) -> float:
        return self._offset + (time.perf_counter() - self._created)

    def pause(self) -> None:
        if self._running:
            self._accum += time.perf_counter() - self._anchor
            self._running = False

    def resume(self) -> None:
        if not self._running:
            self._anchor = time.perf_counter()
            self._running = True

    def tick(self) -> None:
        pass


class IterationClock:
    """Deterministic clock advancing ``step`` per completed outer iteration.

    Substitutes for physical time in reproducibility tests, where wall-clock
    readings would make otherwise identical runs differ.
    """

    def __init__(self, step: float = 1.0, offset: float = 0.0):
        self._step = float(step)
        self._count = 0
        self._offset = float(offset)

    def elapsed(self) -> float:
        return self._offset + self._step * self._count

    def wall_elapsed(self) -> float:
        return self.elapsed()

    def pause(self) -> None:
        pass

    def resume(self) -> None:
        pass

    def tick(self) -> None:
        self._count += 1


class TraceRecorder:
    """Observer that accumulates records into a :class:`ConvergenceTrace`."""

    def __init__(self, method: str = "", config: dict | None = None):
        self.trace = ConvergenceTrace(method=method, config=dict(config or {}))

    @property
    def records(self) -> list[TraceRecord]:
        return self.trace.records

    def __call__(self, record: TraceRecord, G: np.ndarray, F: np.ndarray) -> None:
        records = self.trace.records
        if records and record.outer_iter <= records[-1].outer_iter:
            raise ValueError(
                f"iteration indices must increase: {record.outer_iter} after "
                f"{records[-1].outer_iter}"
            )
        records.append(record)

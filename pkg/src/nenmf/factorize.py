"""Outer alternating loops: vanilla and sketch-compressed factorization.

Both variants alternate nonnegative least-squares half-steps, G first and
then F, with each half-step warm-started from the current factor. The
compressed variant precomputes ``X_L = L @ X`` and ``X_R = X @ R`` once and
then solves the small surrogate subproblems

    G: min_{G >= 0} ||X_R - G @ (F @ R)||_F
    F: min_{F >= 0} ||X_L - (L @ G) @ F||_F

while metrics (RRE, objective) are always evaluated against the full X with
the solver clock paused. With identity sketches the compressed loop performs
exactly the vanilla iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .compression import SketchPair, compress_problem
from .errors import DimensionError, NumericalFailureError, ZeroMatrixError
from .matrix import DenseMatrix, as_matrix, check_seed, frobenius_norm, open_uniform
from .nnls import InnerSolverConfig, solve_nnls
from .tracing import MonotonicClock, SolverClock, TraceRecord

Observer = Callable[[TraceRecord, np.ndarray, np.ndarray], None]


@dataclass(frozen=True, eq=False)
class FactorPair:
    """Current factors G (n, p) and F (p, m), entrywise nonnegative."""

    G: DenseMatrix
    F: DenseMatrix
    p: int

    def __post_init__(self):
        if self.G.ndim != 2 or self.F.ndim != 2:
            raise DimensionError("factors must be 2-D")
        if self.G.shape[1] != self.p or self.F.shape[0] != self.p:
            raise DimensionError(
                f"factor shapes {self.G.shape}, {self.F.shape} do not match rank {self.p}"
            )
        if self.G.min() < 0.0 or self.F.min() < 0.0:
            raise ValueError("factors must be entrywise nonnegative")


@dataclass(frozen=True)
class OuterConfig:
    """Outer-loop stopping rules and trace cadence.

    A zero ``time_budget_seconds``, ``max_outer_iterations`` or ``rre_target``
    disables that stopping rule; at least one of the first two must be active.
    Metrics and observer callbacks run every ``trace_every`` iterations.
    """

    inner: InnerSolverConfig = InnerSolverConfig()
    time_budget_seconds: float = 15.0
    max_outer_iterations: int = 0
    rre_target: float = 0.0
    trace_every: int = 1

    def __post_init__(self):
        if self.time_budget_seconds < 0 or self.max_outer_iterations < 0:
            raise ValueError("stopping limits must be nonnegative")
        if not (self.time_budget_seconds > 0 or self.max_outer_iterations >= 1):
            raise ValueError("need a positive time budget or an iteration cap")
        if self.rre_target < 0:
            raise ValueError(f"rre_target must be >= 0, got {self.rre_target}")
        if self.trace_every < 1:
            raise ValueError(f"trace_every must be >= 1, got {self.trace_every}")


def init_factors(n: int, m: int, p: int, seed: int) -> FactorPair:
    """Seeded strictly positive factors with i.i.d. uniform (0, 1) entries."""
    if p < 1:
        raise DimensionError(f"rank must be >= 1, got {p}")
    if p > min(n, m):
        raise DimensionError(f"rank {p} exceeds min(n, m) = {min(n, m)}")
    rng = np.random.default_rng(check_seed(seed))
    G = open_uniform(rng, n, p)
    F = open_uniform(rng, p, m)
    return FactorPair(G=G, F=F, p=p)


class _VanillaSteps:
    def __init__(self, X: DenseMatrix):
        self.X = np.ascontiguousarray(X)
        self.Xt = np.ascontiguousarray(X.T)

    def g_inputs(self, F):
        return np.ascontiguousarray(F.T), self.Xt

    def f_inputs(self, G):
        return np.ascontiguousarray(G), self.X


class _CompressedSteps:
    def __init__(self, X: DenseMatrix, sketch: SketchPair):
        compressed = compress_problem(X, sketch)
        self.X_L = np.ascontiguousarray(compressed.X_L)
        self.X_Rt = np.ascontiguousarray(compressed.X_R.T)
        self.L = sketch.L
        self.R = sketch.R

    def g_inputs(self, F):
        return np.ascontiguousarray((F @ self.R).T), self.X_Rt

    def f_inputs(self, G):
        return np.ascontiguousarray(self.L @ G), self.X_L


def _run_outer(X, init, cfg, observer, clock, make_steps) -> FactorPair:
    X = as_matrix(X, "X")
    n, m = X.shape
    if init.G.shape != (n, init.p) or init.F.shape != (init.p, m):
        raise DimensionError(
            f"init shapes {init.G.shape}, {init.F.shape} do not match data {n}x{m}"
        )
    norm_x = frobenius_norm(X)
    if norm_x == 0.0:
        raise ZeroMatrixError("cannot factorize the zero matrix")

    if clock is None:
        clock = MonotonicClock()

    steps = make_steps(X)  # compressed preamble work stays on the solver clock
    G = np.ascontiguousarray(as_matrix(init.G, "G"))
    F = np.ascontiguousarray(as_matrix(init.F, "F"))

    last_traced = -1

    def emit(t: int) -> float:
        nonlocal last_traced
        clock.pause()
        objective = frobenius_norm(X - G @ F)
        value = objective / norm_x
        record = TraceRecord(
            outer_iter=t,
            solver_elapsed_s=clock.elapsed(),
            wall_elapsed_s=clock.wall_elapsed(),
            rre=value,
            objective=objective,
        )
        if observer is not None:
            observer(record, G, F)
        last_traced = t
        clock.resume()
        return value

    current = emit(0)
    t = 0
    done = cfg.rre_target > 0 and current <= cfg.rre_target
    while not done:
        if cfg.max_outer_iterations > 0 and t >= cfg.max_outer_iterations:
            break
        if cfg.time_budget_seconds > 0 and clock.elapsed() >= cfg.time_budget_seconds:
            break
        t += 1
        half = "G"
        try:
            A, B = steps.g_inputs(F)
            G = np.ascontiguousarray(solve_nnls(A, B, np.ascontiguousarray(G.T), cfg.inner).T)
            half = "F"
            A, B = steps.f_inputs(G)
            F = solve_nnls(A, B, F, cfg.inner)
        except NumericalFailureError as exc:
            raise NumericalFailureError(
                f"outer iteration {t} ({half} update): {exc}",
                iteration=exc.iteration,
                outer_iteration=t,
            ) from exc
        clock.tick()
        if t % cfg.trace_every == 0:
            current = emit(t)
            if cfg.rre_target > 0 and current <= cfg.rre_target:
                break
    if last_traced != t:
        emit(t)
    return FactorPair(G=G, F=F, p=init.p)


def factorize_vanilla(
    X,
    init: FactorPair,
    cfg: OuterConfig = OuterConfig(),
    observer: Observer | None = None,
    clock: SolverClock | None = None,
) -> FactorPair:
    """Alternating factorization on the full data."""
    return _run_outer(X, init, cfg, observer, clock, _VanillaSteps)


def factorize_compressed(
    X,
    sketch: SketchPair,
    init: FactorPair,
    cfg: OuterConfig = OuterConfig(),
    observer: Observer | None = None,
    clock: SolverClock | None = None,
) -> FactorPair:
    """Alternating factorization on sketch-compressed surrogates.

    Reported RRE and objective are still evaluated against the full X; pass a
    clock with a preloaded offset to charge sketch construction time to this
    run.
    """
    return _run_outer(
        X, init, cfg, observer, clock, lambda data: _CompressedSteps(data, sketch)
    )

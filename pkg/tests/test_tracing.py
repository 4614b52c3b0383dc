import time

import numpy as np
import pytest

from nenmf.errors import DimensionError, ZeroMatrixError
from nenmf.matrix import gaussian_matrix, uniform_matrix
from nenmf.tracing import (
    ConvergenceTrace,
    IterationClock,
    MonotonicClock,
    TraceRecord,
    TraceRecorder,
    iterations_to_target,
    read_trace_csv,
    rre,
    time_to_target,
    write_trace_csv,
)


def record(outer_iter, solver, rre_value):
    return TraceRecord(
        outer_iter=outer_iter,
        solver_elapsed_s=solver,
        wall_elapsed_s=solver * 1.5,
        rre=rre_value,
        objective=rre_value * 10.0,
    )


class TestRre:
    def test_exact_fit(self):
        G = uniform_matrix(10, 3, 1)
        F = uniform_matrix(3, 12, 2)
        assert rre(G @ F, G, F) == 0.0

    def test_zero_factor_gives_one(self):
        X = uniform_matrix(8, 8, 3)
        assert rre(X, np.zeros((8, 2)), np.zeros((2, 8))) == 1.0

    def test_scale_invariance(self):
        X = uniform_matrix(15, 15, 4)
        G = uniform_matrix(15, 4, 5)
        F = uniform_matrix(4, 15, 6)
        base = rre(X, G, F)
        for c in (0.5, 3.0, 1e4):
            assert rre(X, c * G, F / c) == pytest.approx(base, rel=1e-12)

    def test_zero_data_rejected(self):
        with pytest.raises(ZeroMatrixError):
            rre(np.zeros((4, 4)), np.ones((4, 2)), np.ones((2, 4)))

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            rre(np.ones((4, 4)), np.ones((4, 2)), np.ones((3, 4)))


class TestTimeToTarget:
    def test_first_record_already_meets_target(self):
        trace = ConvergenceTrace(records=[record(0, 0.05, 0.01), record(1, 0.2, 0.5)])
        assert time_to_target(trace, 0.02) == 0.05

    def test_unreachable_target(self):
        trace = ConvergenceTrace(records=[record(0, 0.1, 0.5)])
        assert time_to_target(trace, 0.4) is None

    def test_definition_on_small_trace(self):
        trace = ConvergenceTrace(records=[record(1, 0.1, 0.5), record(2, 0.2, 0.04)])
        assert time_to_target(trace, 0.05) == 0.2

    def test_monotone_in_target(self):
        trace = ConvergenceTrace(
            records=[record(i, 0.1 * (i + 1), 1.0 / (i + 1)) for i in range(10)]
        )
        targets = [0.12, 0.2, 0.3, 0.6, 1.0]
        times = [time_to_target(trace, t) for t in targets]
        assert all(b <= a for a, b in zip(times, times[1:]))

    def test_iterations_to_target(self):
        trace = ConvergenceTrace(records=[record(1, 0.1, 0.5), record(2, 0.2, 0.04)])
        assert iterations_to_target(trace, 0.05) == 2
        assert iterations_to_target(trace, 0.01) is None

    def test_positive_target_required(self):
        with pytest.raises(ValueError):
            time_to_target(ConvergenceTrace(), 0.0)


class TestTraceCsv:
    def test_round_trip_full_precision(self, tmp_path):
        rng = np.random.default_rng(7)
        records = [
            TraceRecord(
                outer_iter=i,
                solver_elapsed_s=float(rng.random() * i),
                wall_elapsed_s=float(rng.random() * i + i),
                rre=float(rng.random()),
                objective=float(rng.random() * 100),
            )
            for i in range(12)
        ]
        path = tmp_path / "trace.csv"
        write_trace_csv(records, path)
        assert read_trace_csv(path) == records

    def test_header_written(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv([record(0, 0.0, 1.0)], path)
        first = path.read_text().splitlines()[0]
        assert first == "outer_iter,solver_elapsed_s,wall_elapsed_s,rre,objective"

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError):
            read_trace_csv(path)


class TestClocks:
    def test_monotonic_pause_excludes_interval(self):
        clock = MonotonicClock()
        clock.pause()
        frozen = clock.elapsed()
        time.sleep(0.05)
        assert clock.elapsed() == frozen
        assert clock.wall_elapsed() >= frozen + 0.05
        clock.resume()
        time.sleep(0.01)
        assert clock.elapsed() > frozen
        assert clock.elapsed() <= clock.wall_elapsed()

    def test_monotonic_offset_preloaded(self):
        clock = MonotonicClock(offset=2.5)
        assert clock.elapsed() >= 2.5
        assert clock.wall_elapsed() >= 2.5

    def test_iteration_clock_counts_ticks(self):
        clock = IterationClock(step=0.5)
        assert clock.elapsed() == 0.0
        clock.tick()
        clock.tick()
        assert clock.elapsed() == 1.0
        assert clock.wall_elapsed() == 1.0
        clock.pause()
        clock.resume()
        assert clock.elapsed() == 1.0


class TestTraceRecorder:
    def test_appends_in_order(self):
        rec = TraceRecorder(method="x", config={"p": 3})
        rec(record(0, 0.0, 1.0), None, None)
        rec(record(1, 0.1, 0.5), None, None)
        assert [r.outer_iter for r in rec.records] == [0, 1]
        assert rec.trace.method == "x"
        assert rec.trace.config == {"p": 3}

    def test_rejects_non_increasing_indices(self):
        rec = TraceRecorder()
        rec(record(2, 0.1, 0.5), None, None)
        with pytest.raises(ValueError):
            rec(record(2, 0.2, 0.4), None, None)

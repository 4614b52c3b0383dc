"""Randomized sketch operators (L, R) and data compression.

Three constructions are provided for a target rank ``nu``:

* ``gaussian``: scaled Gaussian projections ``L = Omega_L / sqrt(nu)`` and
  ``R = Omega_R / sqrt(nu)`` with no orthonormalization.
* ``power_iteration``: alternating multiplication by X and X.T applied to a
  Gaussian start, orthonormalized once at the very end. Cheap but unstable
  for large iteration counts, where trailing directions underflow.
* ``subspace_iteration``: the stabilized variant that re-orthonormalizes
  after every multiplication.

For the orthonormal schemes, L has orthonormal rows spanning an approximation
of the column space of X (``L @ L.T = I``) and R has orthonormal columns
spanning an approximation of the row space (``R.T @ R = I``), so that
``X_L = L @ X`` and ``X_R = X @ R`` are the compressed data blocks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, NumericalCollapseError, ZeroMatrixError
from .matrix import (
    DenseMatrix,
    as_matrix,
    check_seed,
    read_nmfb,
    write_nmfb,
)

GAUSSIAN = "gaussian"
POWER_ITERATION = "power_iteration"
SUBSPACE_ITERATION = "subspace_iteration"
SCHEMES = (GAUSSIAN, POWER_ITERATION, SUBSPACE_ITERATION)


@dataclass(frozen=True, eq=False)
class SketchPair:
    """Compression operators with their construction provenance.

    L is (nu, n) and left-compresses; R is (m, nu) and right-compresses.
    ``q`` is the iteration count (0 for the plain Gaussian scheme).
    """

    L: DenseMatrix
    R: DenseMatrix
    nu: int
    scheme: str
    q: int
    seed: int


@dataclass(frozen=True, eq=False)
class CompressedProblem:
    """Precompressed data blocks ``X_L = L @ X`` (nu, m) and ``X_R = X @ R`` (n, nu)."""

    X_L: DenseMatrix
    X_R: DenseMatrix


def _check_sketch_dims(n: int, m: int, nu: int) -> None:
    if nu < 1:
        raise DimensionError(f"target rank must be >= 1, got {nu}")
    if n < 1 or m < 1:
        raise DimensionError(f"data dimensions must be positive, got {n}x{m}")


def gaussian_sketch_pair(n: int, m: int, nu: int, seed: int) -> SketchPair:
    """Scaled Gaussian sketch pair: ``L = Omega_L / sqrt(nu)``, similarly R.

    Both factors are drawn from one seeded stream, L side first. The 1/sqrt(nu)
    scaling normalizes the expected energy of the projection; it does not
    change the minimizers of the compressed subproblems.
    """
    _check_sketch_dims(n, m, nu)
    rng = np.random.default_rng(check_seed(seed))
    scale = 1.0 / np.sqrt(nu)
    L = rng.standard_normal((nu, n)) * scale
    R = rng.standard_normal((m, nu)) * scale
    return SketchPair(L=L, R=R, nu=nu, scheme=GAUSSIAN, q=0, seed=seed)


def _orthonormal_columns(M: DenseMatrix, context: str) -> DenseMatrix:
    """Householder Q of M, tolerating benign rank deficiency.

    Unlike :func:`nenmf.matrix.orthonormal_basis` this never rejects inputs
    whose trailing QR diagonals are tiny: the returned Q is orthonormal
    regardless, and sketches of data whose rank is below the target rank are
    expected and harmless here. Only true collapse (non-finite values, or an
    input with no nonzero column at all) is surfaced.
    """
    if not np.isfinite(M).all():
        raise NumericalCollapseError(
            f"non-finite sketch iterate during {context}", iteration=-1
        )
    Q, R = np.linalg.qr(M, mode="reduced")
    if not np.abs(np.diag(R)).any():
        raise NumericalCollapseError(
            f"sketch iterate vanished during {context}", iteration=-1
        )
    return Q


def _check_iteration_inputs(X: DenseMatrix, nu: int, q: int) -> None:
    n, m = X.shape
    _check_sketch_dims(n, m, nu)
    if nu > min(n, m):
        raise DimensionError(f"target rank {nu} exceeds min(n, m) = {min(n, m)}")
    if q < 1:
        raise ValueError(f"iteration count must be >= 1, got {q}")
    if not X.any():
        raise ZeroMatrixError("cannot sketch the zero matrix")


def subspace_iteration_pair(X, nu: int, q: int, seed: int) -> SketchPair:
    """Randomized subspace iteration: re-orthonormalize after every product.

    Starting from seeded Gaussian draws, the column-space side alternates
    ``X.T @ Q`` and ``X @ Q`` with a QR step after each multiplication, and
    the row-space side mirrors it on the transpose. Returns
    ``L = Q_col.T`` (nu, n) and ``R = Q_row`` (m, nu), both orthonormal.
    """
    X = as_matrix(X, "X")
    _check_iteration_inputs(X, nu, q)
    rng = np.random.default_rng(check_seed(seed))
    omega_l = rng.standard_normal((X.shape[1], nu))
    omega_r = rng.standard_normal((nu, X.shape[0]))

    q_col = _orthonormal_columns(X @ omega_l, "subspace iteration start (L side)")
    q_row = _orthonormal_columns(X.T @ omega_r.T, "subspace iteration start (R side)")
    for k in range(1, q + 1):
        ctx = f"subspace iteration step {k}"
        q_col = _orthonormal_columns(X @ _orthonormal_columns(X.T @ q_col, ctx), ctx)
        q_row = _orthonormal_columns(X.T @ _orthonormal_columns(X @ q_row, ctx), ctx)
    L = np.ascontiguousarray(q_col.T)
    return SketchPair(L=L, R=q_row, nu=nu, scheme=SUBSPACE_ITERATION, q=q, seed=seed)


def power_iteration_pair(X, nu: int, q: int, seed: int) -> SketchPair:
    """Randomized power iteration: orthonormalize only once, at the end.

    Same alternating products as :func:`subspace_iteration_pair` and the same
    Gaussian draws per seed, but without intermediate QR steps. For large
    ``q`` the trailing singular directions of the iterate underflow and the
    captured subspace degrades, or the iterate stops being representable
    entirely; the latter raises :class:`NumericalCollapseError`.
    """
    X = as_matrix(X, "X")
    _check_iteration_inputs(X, nu, q)
    rng = np.random.default_rng(check_seed(seed))
    omega_l = rng.standard_normal((X.shape[1], nu))
    omega_r = rng.standard_normal((nu, X.shape[0]))

    Y = X @ omega_l
    Z = X.T @ omega_r.T
    for k in range(1, q + 1):
        Y = X @ (X.T @ Y)
        Z = X.T @ (X @ Z)
        if not (np.isfinite(Y).all() and np.isfinite(Z).all()):
            raise NumericalCollapseError(
                f"power iterate overflowed at step {k}", iteration=k
            )
    for name, it in (("L", Y), ("R", Z)):
        if (~it.any(axis=0)).any():
            raise NumericalCollapseError(
                f"power iterate lost rank: zero column on the {name} side after {q} steps",
                iteration=q,
            )
    L = np.ascontiguousarray(_orthonormal_columns(Y, "power iteration finish").T)
    R = _orthonormal_columns(Z, "power iteration finish")
    return SketchPair(L=L, R=R, nu=nu, scheme=POWER_ITERATION, q=q, seed=seed)


def compress_problem(X, sketch: SketchPair) -> CompressedProblem:
    """Form the compressed data blocks ``X_L = L @ X`` and ``X_R = X @ R``."""
    X = as_matrix(X, "X")
    n, m = X.shape
    if sketch.L.shape != (sketch.nu, n) or sketch.R.shape != (m, sketch.nu):
        raise DimensionError(
            f"sketch shapes L {sketch.L.shape}, R {sketch.R.shape} do not match "
            f"data {n}x{m} at target rank {sketch.nu}"
        )
    return CompressedProblem(X_L=sketch.L @ X, X_R=X @ sketch.R)


def save_sketch(sketch: SketchPair, directory) -> None:
    """Dump a sketch pair as NMFB matrices plus a JSON provenance header."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_nmfb(directory / "L.nmfb", sketch.L)
    write_nmfb(directory / "R.nmfb", sketch.R)
    meta = {"nu": sketch.nu, "scheme": sketch.scheme, "q": sketch.q, "seed": sketch.seed}
    (directory / "sketch.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def load_sketch(directory) -> SketchPair:
    directory = Path(directory)
    meta = json.loads((directory / "sketch.json").read_text())
    return SketchPair(
        L=read_nmfb(directory / "L.nmfb"),
        R=read_nmfb(directory / "R.nmfb"),
        nu=int(meta["nu"]),
        scheme=str(meta["scheme"]),
        q=int(meta["q"]),
        seed=int(meta["seed"]),
    )

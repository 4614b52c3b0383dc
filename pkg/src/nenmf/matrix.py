"""Dense matrix primitives: seeded sampling, QR bases, norms, matrix file IO.

Matrices are plain 2-D float64 numpy arrays throughout the package. Sampling
is deterministic per 64-bit seed (within one build of numpy), the orthonormal
basis is the reduced Householder QR provided by LAPACK, and the spectral norm
is estimated by power iteration on the Gram matrix.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import DimensionError, RankDeficiencyError, ZeroMatrixError

DenseMatrix = np.ndarray

# Relative floor on |R[j, j]| below which a QR input counts as rank deficient.
QR_RANK_RTOL = 1e-12

# Fixed start-vector seed so spectral_norm_sq is a pure function of its input.
_POWER_START_SEED = 0x9E3779B97F4A7C15

NMFB_MAGIC = b"NMFB"
NMFB_VERSION = 1
_NMFB_HEADER = struct.Struct("<4sIQQ")


def as_matrix(value, name: str = "matrix") -> DenseMatrix:
    """Coerce ``value`` to a 2-D float64 array, rejecting other shapes."""
    M = np.asarray(value, dtype=np.float64)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {M.shape}")
    return M


def require_finite(M: DenseMatrix, source: str) -> None:
    """Reject NaN/Inf entries in matrices entering from files or generators."""
    if not np.isfinite(M).all():
        raise ValueError(f"non-finite entries in matrix from {source}")


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def gaussian_matrix(rows: int, cols: int, seed: int) -> DenseMatrix:
    """Draw a ``rows x cols`` matrix of i.i.d. standard normal entries.

    Parameters
    ----------
    rows, cols : int
        Positive dimensions of the output.
    seed : int
        Unsigned 64-bit seed; the same seed reproduces the same matrix.

    Returns
    -------
    numpy.ndarray
        Fresh float64 array, deterministic per ``(rows, cols, seed)``.
    """
    if rows < 1 or cols < 1:
        raise DimensionError(f"dimensions must be positive, got {rows}x{cols}")
    rng = np.random.default_rng(check_seed(seed))
    return rng.standard_normal((rows, cols))


def open_uniform(rng: np.random.Generator, rows: int, cols: int) -> DenseMatrix:
    """Uniform draws on the open interval (0, 1); exact zeros are redrawn."""
    if rows < 1 or cols < 1:
        raise DimensionError(f"dimensions must be positive, got {rows}x{cols}")
    vals = rng.random((rows, cols))
    while True:
        zero = vals == 0.0
        if not zero.any():
            return vals
        vals[zero] = rng.random(int(zero.sum()))


def uniform_matrix(rows: int, cols: int, seed: int) -> DenseMatrix:
    """Seeded matrix of i.i.d. uniform draws on the open interval (0, 1)."""
    return open_uniform(np.random.default_rng(check_seed(seed)), rows, cols)


def orthonormal_basis(M) -> DenseMatrix:
    """Orthonormal basis of the column span of ``M`` via reduced Householder QR.

    Parameters
    ----------
    M : array-like, shape (rows, cols) with rows >= cols
        Full-column-rank input.

    Returns
    -------
    numpy.ndarray, shape (rows, cols)
        Q with ``Q.T @ Q = I`` to within 1e-10 and the same column span as M.

    Raises
    ------
    DimensionError
        If ``rows < cols``.
    RankDeficiencyError
        If any diagonal entry of R falls below ``QR_RANK_RTOL`` times the
        leading one; the exception carries the detected numerical rank.
    """
    M = as_matrix(M)
    rows, cols = M.shape
    if rows < cols:
        raise DimensionError(f"need rows >= cols for a column basis, got {rows}x{cols}")
    if cols == 0:
        raise DimensionError("matrix must have at least one column")
    Q, R = np.linalg.qr(M, mode="reduced")
    diag = np.abs(np.diag(R))
    lead = diag[0]
    if lead == 0.0:
        raise RankDeficiencyError("matrix is numerically zero", detected_rank=0)
    rank = int(np.count_nonzero(diag >= QR_RANK_RTOL * lead))
    if rank < cols:
        raise RankDeficiencyError(
            f"rank-deficient input: detected rank {rank} of {cols} columns",
            detected_rank=rank,
        )
    return Q


def _power_iteration_lambda_max(W: DenseMatrix, tol: float, max_iters: int) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration.

    Returns ``||W v|| / ||v||`` for the last test vector v, scaled by a 1.01
    safety factor when the relative-change tolerance was not met in time.
    """
    k = W.shape[0]
    rng = np.random.default_rng(_POWER_START_SEED)
    v = rng.standard_normal(k)
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iters):
        w = W @ v
        nw = float(np.linalg.norm(w))
        if nw == 0.0:
            # v happened to lie in the null space; restart from a fresh vector
            v = rng.standard_normal(k)
            v /= np.linalg.norm(v)
            continue
        converged = abs(nw - est) <= tol * nw
        est = nw
        v = w / nw
        if converged:
            return est
    return est * 1.01


def spectral_norm_sq(G, tol: float = 1e-9, max_iters: int = 100) -> float:
    """Estimate ``sigma_max(G)^2`` by power iteration on the Gram matrix.

    The iteration runs on the smaller of ``G.T @ G`` and ``G @ G.T`` from a
    fixed seeded start vector and stops when the relative change drops below
    ``tol``; if ``max_iters`` is exhausted first, the estimate is inflated by
    a 1.01 safety factor (overestimating is safe for step-size use).
    """
    G = as_matrix(G, "G")
    if not G.any():
        raise ZeroMatrixError("spectral norm of the zero matrix is not useful here")
    rows, cols = G.shape
    W = G.T @ G if cols <= rows else G @ G.T
    est = _power_iteration_lambda_max(W, tol, max_iters)
    if est == 0.0:
        raise ZeroMatrixError("Gram matrix underflowed to zero")
    return est


def frobenius_norm(M) -> float:
    """Frobenius norm, ``sqrt(sum of squared entries)``."""
    return float(np.linalg.norm(as_matrix(M)))


def write_nmfb(path, M) -> None:
    """Write ``M`` to ``path`` in the NMFB binary format.

    Layout: magic ``b"NMFB"``, u32 version (currently 1), u64 rows, u64 cols,
    then rows*cols float64 values, all little-endian, row-major.
    """
    M = as_matrix(M)
    require_finite(M, f"write_nmfb({path})")
    rows, cols = M.shape
    header = _NMFB_HEADER.pack(NMFB_MAGIC, NMFB_VERSION, rows, cols)
    payload = np.ascontiguousarray(M, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_nmfb(path) -> DenseMatrix:
    """Read a matrix written by :func:`write_nmfb`; bit-exact round trip."""
    raw = Path(path).read_bytes()
    if len(raw) < _NMFB_HEADER.size:
        raise ValueError(f"{path}: truncated NMFB file ({len(raw)} bytes)")
    magic, version, rows, cols = _NMFB_HEADER.unpack_from(raw)
    if magic != NMFB_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {NMFB_MAGIC!r}")
    if version != NMFB_VERSION:
        raise ValueError(f"{path}: unsupported NMFB version {version}")
    if rows < 1 or cols < 1:
        raise DimensionError(f"{path}: degenerate dimensions {rows}x{cols}")
    expected = _NMFB_HEADER.size + 8 * rows * cols
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<f8", offset=_NMFB_HEADER.size)
    M = np.array(data, dtype=np.float64).reshape(rows, cols)
    require_finite(M, str(path))
    return M


def write_csv_matrix(path, M) -> None:
    """Write one matrix row per line, comma separated, full float precision."""
    M = as_matrix(M)
    require_finite(M, f"write_csv_matrix({path})")
    np.savetxt(path, M, delimiter=",", fmt="%.17g")


def read_csv_matrix(path) -> DenseMatrix:
    M = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    if M.size == 0:
        raise DimensionError(f"{path}: empty matrix")
    require_finite(M, str(path))
    return M

"""Synthetic low-rank benchmark problems with additive Gaussian noise.

Ground-truth factors have i.i.d. uniform (0, 1) entries, so the clean product
concentrates well above the noise scale. Noise drawn at a target SNR is
rescaled after drawing so the realized ratio is exact, and it is not clipped:
the observed matrix may carry a small fraction of negative entries, which the
solvers accept.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError
from .matrix import (
    DenseMatrix,
    check_seed,
    frobenius_norm,
    open_uniform,
    read_nmfb,
    write_nmfb,
)

logger = logging.getLogger(__name__)

_INSTANCE_META = "instance.json"


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Observed matrix plus the ground truth it was built from."""

    X: DenseMatrix
    G_true: DenseMatrix
    F_true: DenseMatrix
    snr_db_target: float
    snr_db_realized: float
    seed: int


def generate_problem(n: int, m: int, p: int, snr_db: float, seed: int) -> ProblemInstance:
    """Generate a rank-``p`` nonnegative problem observed at ``snr_db``.

    ``snr_db`` is the Frobenius energy ratio in decibels between the clean
    product and the added Gaussian noise; pass ``math.inf`` to disable noise
    entirely. The drawn noise is rescaled so the realized SNR matches the
    target exactly (up to arithmetic).
    """
    if p < 1:
        raise DimensionError(f"rank must be >= 1, got {p}")
    if p > min(n, m):
        raise DimensionError(f"rank {p} exceeds min(n, m) = {min(n, m)}")
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ValueError(f"snr_db must be finite or +inf, got {snr_db}")

    rng = np.random.default_rng(check_seed(seed))
    G_true = open_uniform(rng, n, p)
    F_true = open_uniform(rng, p, m)
    X_clean = G_true @ F_true

    if snr_db == math.inf:
        return ProblemInstance(
            X=X_clean.copy(),
            G_true=G_true,
            F_true=F_true,
            snr_db_target=snr_db,
            snr_db_realized=math.inf,
            seed=seed,
        )

    noise = rng.standard_normal((n, m))
    clean_norm = frobenius_norm(X_clean)
    noise *= clean_norm * 10.0 ** (-snr_db / 20.0) / frobenius_norm(noise)
    X = X_clean + noise
    realized = 10.0 * math.log10((clean_norm / frobenius_norm(noise)) ** 2)
    negative_fraction = float((X < 0).mean())
    logger.debug(
        "generated %dx%d rank-%d instance, seed %d: realized SNR %.6f dB, "
        "negative entry fraction %.3g",
        n, m, p, seed, realized, negative_fraction,
    )
    return ProblemInstance(
        X=X,
        G_true=G_true,
        F_true=F_true,
        snr_db_target=float(snr_db),
        snr_db_realized=realized,
        seed=seed,
    )


def save_instance(instance: ProblemInstance, directory) -> None:
    """Serialize an instance as NMFB matrices plus a JSON metadata file."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_nmfb(directory / "X.nmfb", instance.X)
    write_nmfb(directory / "G_true.nmfb", instance.G_true)
    write_nmfb(directory / "F_true.nmfb", instance.F_true)
    meta = {
        "n": instance.X.shape[0],
        "m": instance.X.shape[1],
        "p": instance.G_true.shape[1],
        "snr_db_target": instance.snr_db_target,
        "snr_db_realized": instance.snr_db_realized,
        "seed": instance.seed,
    }
    (directory / _INSTANCE_META).write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n"
    )


def load_instance(directory) -> ProblemInstance:
    directory = Path(directory)
    meta = json.loads((directory / _INSTANCE_META).read_text())
    instance = ProblemInstance(
        X=read_nmfb(directory / "X.nmfb"),
        G_true=read_nmfb(directory / "G_true.nmfb"),
        F_true=read_nmfb(directory / "F_true.nmfb"),
        snr_db_target=float(meta["snr_db_target"]),
        snr_db_realized=float(meta["snr_db_realized"]),
        seed=int(meta["seed"]),
    )
    expected = (int(meta["n"]), int(meta["m"]))
    if instance.X.shape != expected:
        raise ValueError(
            f"{directory}: metadata says {expected}, X.nmfb is {instance.X.shape}"
        )
    return instance

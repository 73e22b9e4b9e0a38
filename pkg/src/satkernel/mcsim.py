"""Exact sampler for the free-boundary equidistant model at T = infinity.

The time-S marginal of Hermitian Brownian motion started from
diag(y_1, ..., y_N) is diag(y) + H with H a GUE-type increment: real Gaussian
diagonal of variance S, complex off-diagonal entries with real and imaginary
parts of variance S/2 each.  The eigenvalue law is the T -> infinity limit of
the conditioned non-intersecting path model, so the empirical density and
count variance cross-validate the analytic kernels.

Streams are counter-based: sample i draws from Philox keyed by
(seed, i), so results are reproducible bit-for-bit for any worker count.
"""

from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "SimConfig",
    "EmpiricalStats",
    "initial_points",
    "sample_rng",
    "sample_configuration",
    "run_samples",
    "estimate_variance",
    "write_samples",
    "read_samples",
]

_MAGIC = b"SATK"
_VERSION = 1


@dataclass(frozen=True)
class SimConfig:
    N: int
    a: float
    S: float
    Delta: float = 0.0
    samples: int = 1000
    seed: int = 0
    window: tuple[float, float] = (0.0, 1.0)  # (R, L)

    def __post_init__(self):
        if self.N < 1 or self.N % 2 == 0:
            raise ConfigurationError("N must be odd (equidistant 2n+1 construction)")
        if self.samples < 1:
            raise ConfigurationError("need samples >= 1")
        if self.a <= 0 or self.S <= 0:
            raise ConfigurationError("need a > 0, S > 0")
        if self.window[1] <= 0:
            raise ConfigurationError("window length must be positive")


@dataclass
class EmpiricalStats:
    mean_count: float
    var_count: float
    stderr_var: float
    stderr_mean: float
    density_edges: np.ndarray
    density_per_unit: np.ndarray  # total counts per unit length over all samples
    samples: int
    batches: int


def initial_points(cfg: SimConfig) -> np.ndarray:
    j = np.arange(1, cfg.N + 1)
    return cfg.Delta + cfg.a * (j - (cfg.N + 1) / 2.0)


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent, reproducible substream for one sample."""
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def sample_configuration(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """One draw of the N sorted eigenvalues of diag(y) + Hermitian increment."""
    N, S = cfg.N, cfg.S
    y = initial_points(cfg)
    diag = rng.standard_normal(N) * math.sqrt(S)
    m = N * (N - 1) // 2
    re = rng.standard_normal(m) * math.sqrt(S / 2.0)
    im = rng.standard_normal(m) * math.sqrt(S / 2.0)
    H = np.zeros((N, N), dtype=complex)
    iu = np.triu_indices(N, k=1)
    H[iu] = re + 1j * im
    H = H + H.conj().T
    H[np.diag_indices(N)] = y + diag
    vals = np.linalg.eigvalsh(H)
    return np.sort(vals)


def _count_chunk(args):
    cfg, lo, hi, edges = args
    R, L = cfg.window
    counts = np.empty(hi - lo, dtype=np.int64)
    hist = np.zeros(len(edges) - 1, dtype=np.int64)
    for i in range(lo, hi):
        lam = sample_configuration(cfg, sample_rng(cfg.seed, i))
        counts[i - lo] = np.count_nonzero((lam >= R) & (lam <= R + L))
        hist += np.histogram(lam, bins=edges)[0]
    return lo, counts, hist


def _worker_count(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("SATKERNEL_WORKERS")
        workers = int(env) if env else 1
    if workers < 1:
        raise ConfigurationError("worker count must be positive")
    return workers


def run_samples(cfg: SimConfig, edges: np.ndarray, workers: int | None = None):
    """Window counts and a pooled histogram for all samples (deterministic)."""
    workers = _worker_count(workers)
    chunks = []
    step = max(1, math.ceil(cfg.samples / max(workers * 4, 1)))
    for lo in range(0, cfg.samples, step):
        chunks.append((cfg, lo, min(lo + step, cfg.samples), edges))
    counts = np.empty(cfg.samples, dtype=np.int64)
    hist = np.zeros(len(edges) - 1, dtype=np.int64)
    if workers == 1:
        results = map(_count_chunk, chunks)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_count_chunk, chunks))
    for lo, c, h in results:
        counts[lo:lo + c.size] = c
        hist += h
    return counts, hist


def estimate_variance(cfg: SimConfig, workers: int | None = None,
                      density_window: tuple[float, float] | None = None,
                      bins_per_unit: int = 4) -> EmpiricalStats:
    """Empirical count variance in the window, with batch-means standard error.

    The window must sit well inside the bulk of the initial configuration.
    """
    R, L = cfg.window
    half_extent = cfg.a * (cfg.N - 1) / 2.0
    margin = 10.0 * max(cfg.a, math.sqrt(cfg.S))
    if abs(R) + L > half_extent - margin:
        raise ConfigurationError(
            f"window [{R}, {R + L}] too close to the spectral edge (bulk half-width {half_extent:g})")
    if density_window is None:
        density_window = (R, R + L)
    lo, hi = density_window
    nbins = max(1, int(round((hi - lo) * bins_per_unit)))
    edges = np.linspace(lo, hi, nbins + 1)
    counts, hist = run_samples(cfg, edges, workers)

    n = cfg.samples
    mean = float(np.mean(counts))
    var = float(np.var(counts, ddof=1)) if n > 1 else 0.0
    nb = 20 if n >= 40 else max(1, n // 2)
    batch = n // nb
    if batch >= 2 and nb >= 2:
        bm = np.array([np.var(counts[i * batch:(i + 1) * batch], ddof=1) for i in range(nb)])
        stderr_var = float(np.std(bm, ddof=1) / math.sqrt(nb))
    else:
        stderr_var = float("nan")
    stderr_mean = math.sqrt(var / n) if n > 0 else float("nan")
    width = edges[1] - edges[0]
    return EmpiricalStats(mean, var, stderr_var, stderr_mean, edges,
                          hist / width, n, nb)


def write_samples(cfg: SimConfig, path: str, workers: int | None = None) -> None:
    """Raw sorted samples to a little-endian binary column file.

    Header: magic 'SATK', uint32 version, uint64 N, uint64 samples; body:
    samples x N float64 eigenvalues, one sample per row, ascending.
    """
    workers = _worker_count(workers)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQQ", _VERSION, cfg.N, cfg.samples))
        for i in range(cfg.samples):
            lam = sample_configuration(cfg, sample_rng(cfg.seed, i))
            fh.write(lam.astype("<f8").tobytes())


def read_samples(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise DomainError("not a sample file (bad magic)")
        version, N, samples = struct.unpack("<IQQ", fh.read(20))
        if version != _VERSION:
            raise DomainError(f"unsupported sample-file version {version}")
        data = np.frombuffer(fh.read(), dtype="<f8")
    return data.reshape(samples, N)

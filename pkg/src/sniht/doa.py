"""Direction-of-arrival estimation on a uniform linear array.

Source localization is cast as joint-sparse recovery: the columns of an
overcomplete steering matrix sample the array manifold on an angle grid and
the support of the recovered signal matrix gives the source directions.
MUSIC serves as the subspace baseline.
"""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .core import L11, L21, L22
from .noise import complex_normal, rng_stream, sample_igcg_noise
from .solver import SolverConfig, select_peaks, sniht_solve

__all__ = [
    "MUSIC",
    "UlaManifold",
    "DoaGrid",
    "DoaScenario",
    "DoaEstimate",
    "DoaConfig",
    "steering_vector",
    "steering_matrix",
    "build_grid",
    "simulate_snapshots",
    "music_spectrum",
    "estimate_doas",
    "doa_histogram",
    "run_doa",
    "method_label",
    "write_histogram_csv",
    "write_per_csv",
]

MUSIC = "music"
ROLE_SOURCES, ROLE_NOISE = 10, 11


def steering_vector(theta_deg, m: int) -> np.ndarray:
    """Half-wavelength ULA response ``exp(-i pi k sin(theta))``, k = 0..m-1."""
    k = np.arange(m)
    return np.exp(-1j * np.pi * k * np.sin(np.deg2rad(theta_deg)))


def steering_matrix(angles_deg, m: int) -> np.ndarray:
    angles = np.asarray(angles_deg, dtype=np.float64).reshape(-1)
    k = np.arange(m)[:, None]
    return np.exp(-1j * np.pi * k * np.sin(np.deg2rad(angles))[None, :])


@dataclass(frozen=True)
class UlaManifold:
    m: int

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("a ULA needs at least two sensors")

    def __call__(self, theta_deg):
        return steering_vector(theta_deg, self.m)

    def matrix(self, angles_deg):
        return steering_matrix(angles_deg, self.m)


@dataclass(frozen=True)
class DoaGrid:
    angles: np.ndarray
    steering: np.ndarray

    @property
    def size(self) -> int:
        return self.angles.size

    def index_of(self, angles_deg) -> np.ndarray:
        """Grid indices of ``angles_deg``; raises if an angle is off-grid."""
        idx = []
        for a in np.atleast_1d(angles_deg):
            hit = np.flatnonzero(np.isclose(self.angles, a, rtol=0, atol=1e-9))
            if hit.size != 1:
                raise ValueError(f"angle {a} is not on the grid")
            idx.append(int(hit[0]))
        return np.array(idx, dtype=np.intp)


def build_grid(lo, hi, step_deg, m) -> DoaGrid:
    """Uniform grid ``lo, lo+step, ..., hi`` (degrees) and its steering matrix."""
    if not lo < hi or not step_deg > 0:
        raise ValueError("need lo < hi and a positive step")
    if lo < -90 or hi > 90:
        raise ValueError("grid angles must lie in [-90, 90]")
    n = (hi - lo) / step_deg
    if abs(n - round(n)) > 1e-9:
        raise ValueError(f"step {step_deg} does not divide the span [{lo}, {hi}]")
    angles = lo + step_deg * np.arange(round(n) + 1)
    return DoaGrid(angles, steering_matrix(angles, m))


@dataclass(frozen=True)
class DoaScenario:
    """Sources at ``doas`` (degrees) observed over ``q`` snapshots.

    With unit noise covariance the source power is ``10^(snr_db/10)``.
    """

    doas: tuple
    q: int
    snr_db: float
    lam: float = 0.1
    noiseless: bool = False

    def __post_init__(self):
        if len(set(self.doas)) != len(self.doas):
            raise ValueError("source DOAs must be distinct")

    @property
    def K(self) -> int:
        return len(self.doas)

    @property
    def source_power(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)


def simulate_snapshots(scenario: DoaScenario, manifold: UlaManifold, seed, trial=0) -> np.ndarray:
    """Snapshot matrix ``Y = A(theta) S + E`` of shape ``(m, q)``.

    Sources are independent circular Gaussian with power ``source_power``;
    noise rows (one per sensor) are IG-CG with identity covariance.
    """
    A = manifold.matrix(scenario.doas)
    S = complex_normal(rng_stream(seed, trial, ROLE_SOURCES), (scenario.K, scenario.q),
                       scenario.source_power)
    Y = A @ S
    if not scenario.noiseless:
        Y = Y + sample_igcg_noise(manifold.m, scenario.q, scenario.lam,
                                  rng_stream(seed, trial, ROLE_NOISE))
    return Y


def music_spectrum(Y, grid: DoaGrid, K: int) -> np.ndarray:
    """MUSIC pseudospectrum ``1 / ||E_n^H a(theta)||^2`` over the grid.

    ``E_n`` spans the eigenvectors of the ``m - K`` smallest eigenvalues of
    the sample covariance ``Y Y^H / q``.
    """
    Y = np.asarray(Y, dtype=np.complex128)
    m, q = Y.shape
    if not 0 <= K < m:
        raise ValueError(f"MUSIC needs 0 <= K < m, got K={K}, m={m}")
    R = (Y @ Y.conj().T) / q
    _, V = np.linalg.eigh(R)
    En = V[:, : m - K]
    proj = En.conj().T @ grid.steering
    energy = np.einsum("ij,ij->j", proj.real, proj.real) + np.einsum("ij,ij->j", proj.imag, proj.imag)
    return 1.0 / energy


def method_label(method) -> str:
    if method == MUSIC:
        return MUSIC
    return f"sniht_{method.p}_{method.q}"


@dataclass(frozen=True)
class DoaEstimate:
    method: object
    support: np.ndarray
    angles: np.ndarray


def estimate_doas(Y, grid: DoaGrid, K: int, method, max_iters=500) -> DoaEstimate:
    """Estimate ``K`` source directions with MUSIC or SNIHT(p,q).

    MUSIC picks the ``K`` largest peaks of its pseudospectrum; SNIHT recovers
    a K-rowsparse signal over the grid (peak-based initialization) and
    reports the angles of its support.
    """
    if method == MUSIC:
        support = select_peaks(music_spectrum(Y, grid, K), K)
    else:
        cfg = SolverConfig(K=K, norm=method, max_iters=max_iters, init_mode="peak")
        support = sniht_solve(Y, grid.steering, cfg).support
    return DoaEstimate(method, support, grid.angles[support])


def doa_histogram(supports, grid_size: int, K: int) -> np.ndarray:
    """Relative frequency of each grid index among all trial estimates.

    Counts are divided by ``L * K`` so a histogram of full-size estimates
    sums to one.
    """
    if not supports:
        raise ValueError("no estimates")
    counts = np.zeros(grid_size)
    for s in supports:
        np.add.at(counts, np.asarray(s, dtype=np.intp), 1.0)
    return counts / (len(supports) * K)


@dataclass(frozen=True)
class DoaConfig:
    m: int = 20
    doas: tuple = (0.0, 8.0)
    q: int = 50
    snr_db: tuple = (-10.0,)
    lam: float = 0.1
    grid_lo: float = -90.0
    grid_hi: float = 90.0
    grid_step: float = 2.0
    trials: int = 1000
    seed: int = 0
    methods: tuple = (L22, L11, L21, MUSIC)
    threads: int = 1
    max_iters: int = 500

    def __post_init__(self):
        if self.trials < 1 or self.threads < 1:
            raise ValueError("trials and threads must be at least 1")
        if len(self.doas) >= self.m:
            raise ValueError("need fewer sources than sensors")

    @property
    def K(self) -> int:
        return len(self.doas)


def _doa_job(args):
    cfg, grid, snr, trial = args
    scenario = DoaScenario(tuple(cfg.doas), cfg.q, snr, cfg.lam)
    Y = simulate_snapshots(scenario, UlaManifold(cfg.m), cfg.seed, trial)
    return [estimate_doas(Y, grid, cfg.K, mth, cfg.max_iters).support for mth in cfg.methods]


def _init_worker():
    global _BLAS_LIMIT
    _BLAS_LIMIT = threadpool_limits(1)


@dataclass
class DoaResult:
    snr_db: float
    method: object
    per: float
    histogram: np.ndarray
    supports: list


def run_doa(cfg: DoaConfig) -> tuple:
    """Monte Carlo DOA study. Returns ``(grid, results)``.

    ``results`` holds one :class:`DoaResult` per ``(snr_db, method)`` in
    config order. Every method sees the same snapshots in a given trial.
    """
    grid = build_grid(cfg.grid_lo, cfg.grid_hi, cfg.grid_step, cfg.m)
    truth = tuple(grid.index_of(cfg.doas).tolist())
    truth = tuple(sorted(truth))
    pool = ProcessPoolExecutor(cfg.threads, initializer=_init_worker) if cfg.threads > 1 else None
    results = []
    try:
        with threadpool_limits(1):
            for snr in cfg.snr_db:
                jobs = [(cfg, grid, float(snr), t) for t in range(cfg.trials)]
                outs = list(map(_doa_job, jobs) if pool is None else pool.map(_doa_job, jobs))
                for j, mth in enumerate(cfg.methods):
                    sup = [o[j] for o in outs]
                    hits = sum(tuple(s.tolist()) == truth for s in sup)
                    results.append(DoaResult(float(snr), mth, hits / cfg.trials,
                                             doa_histogram(sup, grid.size, cfg.K), sup))
    finally:
        if pool is not None:
            pool.shutdown()
    return grid, results


def _fmt(x):
    return repr(float(x))


def write_histogram_csv(path, grid: DoaGrid, results) -> None:
    """Wide table: ``snr_db, angle_deg`` then one relative-frequency column
    per method."""
    by_snr = {}
    for r in results:
        by_snr.setdefault(r.snr_db, []).append(r)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        methods = [method_label(r.method) for r in next(iter(by_snr.values()))]
        w.writerow(["snr_db", "angle_deg", *methods])
        for snr, rs in by_snr.items():
            for j, ang in enumerate(grid.angles):
                w.writerow([_fmt(snr), _fmt(ang), *(_fmt(r.histogram[j]) for r in rs)])


def write_per_csv(path, results, trials) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["snr_db", "method", "trials", "per"])
        for r in results:
            w.writerow([_fmt(r.snr_db), method_label(r.method), trials, _fmt(r.per)])

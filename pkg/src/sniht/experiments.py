"""Monte Carlo harness: problem generation, metrics, brute-force oracle, sweeps.

Trial ``l`` of a sweep draws its measurement matrix, support, signal phases
and noise from separate streams keyed by ``(seed, l, role)``. Every method
sees the same data for a given trial, and every sweep point reuses the same
draws (common random numbers), so curves are paired.
"""
from __future__ import annotations

import csv
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np
from threadpoolctl import threadpool_limits

from .core import MixedNormIndex, L11, L21, L22, row_norms_sq
from .noise import NoiseSpec, rng_stream, sample_noise
from .solver import SolverConfig, sniht_solve

__all__ = [
    "ROLE_MATRIX",
    "ROLE_SIGNAL",
    "ROLE_SUPPORT",
    "ROLE_NOISE",
    "Problem",
    "TrialResult",
    "ExperimentConfig",
    "SweepRow",
    "generate_problem",
    "mse",
    "mse_db",
    "per",
    "oracle_search",
    "run_trial",
    "run_sweep",
    "write_results_csv",
    "RESULT_COLUMNS",
    "OracleConfig",
    "OracleTrial",
    "run_oracle_comparison",
    "oracle_agreement",
]

ROLE_MATRIX, ROLE_SIGNAL, ROLE_SUPPORT, ROLE_NOISE = 0, 1, 2, 3
SWEEP_VARS = ("snr", "nu", "q")
ORACLE_BUDGET = 10**6


@dataclass(frozen=True)
class Problem:
    Y: np.ndarray
    Phi: np.ndarray
    S: np.ndarray
    support: np.ndarray


@dataclass(frozen=True)
class TrialResult:
    method: MixedNormIndex
    true_support: tuple
    est_support: tuple
    squared_error: float
    n_iter: int = 0

    @property
    def exact_recovery(self) -> bool:
        return self.est_support == self.true_support


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep of a Monte Carlo study.

    ``sweep_var`` names the swept quantity (``snr`` in dB, ``nu`` degrees of
    freedom, or ``q`` number of measurement vectors) and ``sweep_values`` its
    grid; the remaining settings come from the fixed fields.
    """

    m: int = 256
    p: int = 512
    K: int = 8
    q: int = 16
    trials: int = 200
    sweep_var: str = "snr"
    sweep_values: tuple = (10.0,)
    noise: NoiseSpec = NoiseSpec("gaussian", 10.0)
    methods: tuple = (L22, L11, L21)
    seed: int = 0
    threads: int = 1
    max_iters: int = 500
    rel_tol: float = 1e-6
    record_wall_time: bool = False

    def __post_init__(self):
        if self.K > self.p:
            raise ValueError("K must not exceed p")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.sweep_var not in SWEEP_VARS:
            raise ValueError(f"sweep_var must be one of {SWEEP_VARS}")
        if not self.sweep_values:
            raise ValueError("empty sweep")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")

    def point(self, value):
        """``(q, noise)`` in effect at one sweep value."""
        if self.sweep_var == "snr":
            return self.q, replace(self.noise, snr_db=float(value))
        if self.sweep_var == "nu":
            return self.q, replace(self.noise, nu=float(value))
        return int(value), self.noise


@dataclass(frozen=True)
class SweepRow:
    sweep_var: str
    sweep_value: float
    m: int
    p: int
    K: int
    q: int
    method: MixedNormIndex
    trials: int
    per: float
    mse: float
    mse_db: float
    mean_iters: float
    wall_ms: float | None = None
    results: list = field(default_factory=list, repr=False, compare=False)


def generate_problem(m, p, K, q, noise: NoiseSpec, seed, trial=0) -> Problem:
    """Random MMV instance ``Y = Phi S + E``.

    ``Phi`` has circular complex normal entries and unit-norm columns; the
    ``K`` nonzero rows of ``S`` (drawn without replacement) have entries of
    modulus ``noise.sigma_x`` and uniform phases.
    """
    g = rng_stream(seed, trial, ROLE_MATRIX).standard_normal((2, m, p))
    Phi = g[0] + 1j * g[1]
    Phi /= np.sqrt(row_norms_sq(Phi.T))[None, :]

    support = np.sort(rng_stream(seed, trial, ROLE_SUPPORT).choice(p, size=K, replace=False))
    phases = rng_stream(seed, trial, ROLE_SIGNAL).uniform(0.0, 2.0 * np.pi, size=(K, q))
    S = np.zeros((p, q), dtype=np.complex128)
    S[support] = noise.sigma_x * np.exp(1j * phases)

    E = sample_noise(noise, m, q, rng_stream(seed, trial, ROLE_NOISE))
    Y = Phi[:, support] @ S[support] + E
    return Problem(Y, Phi, S, support)


def mse(results, q) -> float:
    """``sum ||S_hat - S||^2 / (L q)`` over the trials in ``results``."""
    if not results:
        raise ValueError("mse of an empty result list")
    return math.fsum(r.squared_error for r in results) / (len(results) * q)


def mse_db(results, q) -> float:
    v = mse(results, q)
    return 10.0 * math.log10(v) if v > 0 else -math.inf


def per(results) -> float:
    """Fraction of trials whose estimated support equals the true support."""
    if not results:
        raise ValueError("per of an empty result list")
    return sum(r.exact_recovery for r in results) / len(results)


def oracle_search(Y, Phi, K, budget=ORACLE_BUDGET) -> np.ndarray:
    """Exhaustive least-squares support search.

    Tries every ``K``-subset of the columns of ``Phi`` and returns the one
    with the smallest least-squares residual ``min ||Y - Phi_G X||``; ties go
    to the lexicographically smallest subset.
    """
    Y = np.asarray(Y, dtype=np.complex128)
    Phi = np.asarray(Phi, dtype=np.complex128)
    p = Phi.shape[1]
    if K < 0 or K > p:
        raise ValueError(f"K={K} outside [0, {p}]")
    if comb(p, K) > budget:
        raise ValueError(f"C({p},{K}) = {comb(p, K)} subsets exceeds the oracle budget of {budget}")
    if K == 0:
        return np.zeros(0, dtype=np.intp)
    best, best_res = None, math.inf
    for subset in itertools.combinations(range(p), K):
        A = Phi[:, subset]
        X, *_ = np.linalg.lstsq(A, Y, rcond=None)
        R = Y - A @ X
        res = float(row_norms_sq(R).sum())
        if res < best_res:
            best, best_res = subset, res
    return np.array(best, dtype=np.intp)


def run_trial(problem: Problem, methods, K, max_iters=500, rel_tol=1e-6):
    """Run every method on one problem and return a list of TrialResult."""
    out = []
    truth = tuple(problem.support.tolist())
    for method in methods:
        cfg = SolverConfig(K=K, norm=method, max_iters=max_iters, rel_tol=rel_tol)
        st = sniht_solve(problem.Y, problem.Phi, cfg)
        err = float(row_norms_sq(st.S - problem.S).sum())
        out.append(TrialResult(method, truth, tuple(st.support.tolist()), err, st.n_iter))
    return out


def _trial_job(args):
    cfg, value, trial = args
    q, noise = cfg.point(value)
    problem = generate_problem(cfg.m, cfg.p, cfg.K, q, noise, cfg.seed, trial)
    t0 = time.perf_counter()
    res = run_trial(problem, cfg.methods, cfg.K, cfg.max_iters, cfg.rel_tol)
    return res, time.perf_counter() - t0


def _init_worker():
    # keep a reference so the limit lives as long as the worker
    global _BLAS_LIMIT
    _BLAS_LIMIT = threadpool_limits(1)


def run_sweep(cfg: ExperimentConfig, progress=None) -> list:
    """Run ``cfg.trials`` paired trials at every sweep value for every method.

    Trials may be spread over ``cfg.threads`` worker processes; results are
    always aggregated in trial order so the output does not depend on the
    degree of parallelism. ``progress`` is an optional callable receiving
    ``(sweep_value, done, total)``.
    """
    rows = []
    pool = None
    if cfg.threads > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.threads, initializer=_init_worker)
    try:
        with threadpool_limits(1):
            rows = _sweep(cfg, pool, progress)
    finally:
        if pool is not None:
            pool.shutdown()
    return rows


def _sweep(cfg, pool, progress):
    rows = []
    for value in cfg.sweep_values:
        jobs = [(cfg, value, t) for t in range(cfg.trials)]
        if pool is None:
            outputs = map(_trial_job, jobs)
        else:
            outputs = pool.map(_trial_job, jobs, chunksize=max(1, cfg.trials // (4 * cfg.threads)))
        per_method = {mth: [] for mth in cfg.methods}
        wall = 0.0
        for i, (res, dt) in enumerate(outputs):
            wall += dt
            for r in res:
                per_method[r.method].append(r)
            if progress is not None:
                progress(value, i + 1, cfg.trials)
        q, _ = cfg.point(value)
        for mth in cfg.methods:
            rs = per_method[mth]
            rows.append(SweepRow(
                sweep_var=cfg.sweep_var,
                sweep_value=float(value),
                m=cfg.m, p=cfg.p, K=cfg.K, q=q,
                method=mth,
                trials=len(rs),
                per=per(rs),
                mse=mse(rs, q),
                mse_db=mse_db(rs, q),
                mean_iters=sum(r.n_iter for r in rs) / len(rs),
                wall_ms=1e3 * wall if cfg.record_wall_time else None,
                results=rs,
            ))
    return rows


RESULT_COLUMNS = (
    "sweep_var", "sweep_value", "m", "p", "K", "q", "norm",
    "trials", "per", "mse", "mse_db", "mean_iters", "wall_ms",
)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_results_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for r in rows:
            w.writerow([
                r.sweep_var, _fmt(r.sweep_value), r.m, r.p, r.K, r.q, str(r.method),
                r.trials, _fmt(r.per), _fmt(r.mse), _fmt(r.mse_db), _fmt(r.mean_iters),
                _fmt(r.wall_ms),
            ])


@dataclass(frozen=True)
class OracleConfig:
    """Settings for comparing solver supports with :func:`oracle_search`."""

    m: int = 16
    p: int = 24
    K: int = 2
    q: int = 4
    trials: int = 100
    noise: NoiseSpec = NoiseSpec("gaussian", math.inf)
    methods: tuple = (L22, L11, L21)
    seed: int = 0
    threads: int = 1
    max_iters: int = 500
    rel_tol: float = 1e-6


@dataclass(frozen=True)
class OracleTrial:
    trial: int
    true_support: tuple
    oracle_support: tuple
    method_supports: tuple


def _oracle_job(args):
    cfg, trial = args
    pr = generate_problem(cfg.m, cfg.p, cfg.K, cfg.q, cfg.noise, cfg.seed, trial)
    ora = tuple(oracle_search(pr.Y, pr.Phi, cfg.K).tolist())
    sups = []
    for mth in cfg.methods:
        if cfg.K == 0:
            sups.append(())
            continue
        sc = SolverConfig(K=cfg.K, norm=mth, max_iters=cfg.max_iters, rel_tol=cfg.rel_tol)
        sups.append(tuple(sniht_solve(pr.Y, pr.Phi, sc).support.tolist()))
    return OracleTrial(trial, tuple(pr.support.tolist()), ora, tuple(sups))


def run_oracle_comparison(cfg: OracleConfig) -> list:
    """Per-trial oracle and solver supports, in trial order.

    Raises ValueError up front when the subset count exceeds the oracle
    budget. With ``K = 0`` every method trivially returns the empty support.
    """
    if comb(cfg.p, cfg.K) > ORACLE_BUDGET:
        raise ValueError(f"C({cfg.p},{cfg.K}) = {comb(cfg.p, cfg.K)} subsets exceeds the oracle budget")
    jobs = [(cfg, t) for t in range(cfg.trials)]
    pool = None
    if cfg.threads > 1:
        pool = ProcessPoolExecutor(max_workers=cfg.threads, initializer=_init_worker)
    try:
        with threadpool_limits(1):
            return list(map(_oracle_job, jobs) if pool is None else pool.map(_oracle_job, jobs))
    finally:
        if pool is not None:
            pool.shutdown()


def oracle_agreement(trials, methods) -> dict:
    """Fraction of trials in which each method's support equals the oracle's."""
    return {
        mth: sum(t.method_supports[j] == t.oracle_support for t in trials) / len(trials)
        for j, mth in enumerate(methods)
    }

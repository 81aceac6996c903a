"""Fast consistency checks behind ``sniht selftest``."""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import minimize_scalar

from .core import L11, L21, L22, mixed_norm
from .experiments import OracleConfig, generate_problem, oracle_agreement, run_oracle_comparison
from .noise import NoiseSpec, complex_normal, rng_stream
from .solver import SolverConfig, fp_line_minimize, line_objective, sniht_solve
from .transforms import apply_psi


def _noiseless_recovery():
    worst = 0.0
    for trial in range(5):
        pr = generate_problem(64, 128, 3, 4, NoiseSpec("gaussian", math.inf), seed=7, trial=trial)
        for norm in (L22, L11, L21):
            st = sniht_solve(pr.Y, pr.Phi, SolverConfig(K=3, norm=norm))
            if not np.array_equal(st.support, pr.support):
                return False, f"wrong support for ({norm}) in trial {trial}"
            worst = max(worst, np.linalg.norm(st.S - pr.S) / np.linalg.norm(pr.S))
    return worst < 1e-4, f"max relative error {worst:.1e}"


def _oracle():
    cfg = OracleConfig(trials=20, methods=(L22,), seed=3)
    trials = run_oracle_comparison(cfg)
    truth = sum(t.oracle_support == t.true_support for t in trials) / len(trials)
    agree = oracle_agreement(trials, cfg.methods)[L22]
    return truth == 1.0 and agree >= 0.95, f"oracle exact {truth:.2f}, SNIHT(2,2) agreement {agree:.2f}"


def _gradient():
    rng = rng_stream(11)
    worst = 0.0
    for norm in (L22, L11, L21):
        E = complex_normal(rng, (6, 3))
        D = complex_normal(rng, (6, 3))
        h = 1e-6
        f = lambda t: mixed_norm(E + t * D, norm.p, norm.q) ** norm.q
        fd = (f(h) - f(-h)) / (2 * h)
        an = 2 * np.vdot(D, apply_psi(E, norm)).real
        const = 1.0 if norm == L22 else 0.5
        worst = max(worst, abs(fd - const * an) / abs(fd))
    return worst < 1e-5, f"max relative deviation {worst:.1e}"


def _stepsize():
    rng = rng_stream(12)
    worst = 0.0
    for norm in (L11, L21):
        for _ in range(10):
            B = complex_normal(rng, (8, 4))
            E = 1.3 * B + complex_normal(rng, (8, 4))
            mu, _ = fp_line_minimize(E, B, norm)
            gs = minimize_scalar(lambda t: line_objective(E, B, t, norm), bracket=(0.0, 1.0),
                                 method="golden", tol=1e-12).x
            worst = max(worst, abs(mu - gs) / abs(gs))
    return worst < 1e-3, f"max relative deviation {worst:.1e}"


CHECKS = (
    ("noiseless recovery", _noiseless_recovery),
    ("oracle agreement", _oracle),
    ("gradient transforms", _gradient),
    ("fixed-point stepsize", _stepsize),
)


def run_selftest():
    """Yield ``(name, passed, detail)`` for every check."""
    for name, check in CHECKS:
        passed, detail = check()
        yield name, bool(passed), detail

"""Acceptance suite: the published reproductions and the numerical
properties every release must meet. Run with ``pytest tests/test_acceptance.py``;
a summary line per criterion is printed at the end of the session.

Study settings come from the shipped config files, so these tests exercise
the same code path as ``sniht simulate`` and ``sniht doa``.
"""
import re
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from oracles import central_difference, fidelity, line_minimizer
from sniht.cli import main
from sniht.config import load_config
from sniht.core import L11, L21, L22
from sniht.doa import MUSIC, run_doa
from sniht.experiments import oracle_agreement, run_oracle_comparison, run_sweep
from sniht.noise import rng_stream, sample_igcg_noise, sample_t_noise
from sniht.solver import fp_line_minimize
from sniht.transforms import apply_psi

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

pytestmark = pytest.mark.slow


def sweep(name, values, **overrides):
    cfg = load_config(CONFIGS / name, "simulate", threads=1)
    cfg = replace(cfg, sweep_values=tuple(values), **overrides)
    return {(r.sweep_value, r.method): r for r in run_sweep(cfg)}


def cplx(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture(scope="module")
def table1():
    return sweep("table1.cfg", (4.0, 8.0, 12.0))


@pytest.mark.criterion(1, "t3 noise PER vs SNR (256,512,8,16), L=200")
def test_table1(table1, record_property):
    pers = {f"{k[1]}@{k[0]:g}dB": r.per for k, r in table1.items()}
    for k, v in pers.items():
        record_property(k, v)
    assert table1[8.0, L11].per >= 0.95
    assert table1[12.0, L11].per >= 0.95
    assert 0.45 <= table1[8.0, L22].per <= 0.80
    assert table1[8.0, L21].per >= 0.85


@pytest.mark.criterion(2, "PER vs degrees of freedom at 10 dB, L=200")
def test_table2(record_property):
    res = sweep("table2.cfg", (1.0, 2.0))
    for (nu, m), r in res.items():
        record_property(f"{m}@nu={nu:g}", r.per)
    assert res[1.0, L11].per >= 0.98
    assert res[1.0, L22].per <= 0.05
    assert res[1.0, L21].per <= 0.10
    assert res[2.0, L21].per >= 0.90


@pytest.mark.criterion(3, "Gaussian efficiency gap in MSE at 10 dB, L=200")
def test_gaussian_gap(record_property):
    res = sweep("gaussian_snr.cfg", (10.0,))
    gap21 = res[10.0, L21].mse_db - res[10.0, L22].mse_db
    gap11 = res[10.0, L11].mse_db - res[10.0, L22].mse_db
    record_property("gap_2_1_dB", round(gap21, 3))
    record_property("gap_1_1_dB", round(gap11, 3))
    assert 0.0 <= gap21 <= 0.3
    assert 0.5 <= gap11 <= 1.7


@pytest.mark.criterion(4, "t3 snapshot sweep, SNIHT(1,1), L=200")
def test_snapshots(record_property):
    res = sweep("snapshots.cfg", (2, 6), methods=(L11,))
    record_property("q=2", res[2.0, L11].per)
    record_property("q=6", res[6.0, L11].per)
    assert res[2.0, L11].per <= 0.30
    assert res[6.0, L11].per >= 0.95


@pytest.mark.criterion(5, "DOA with IG-CG noise, m=20, q=50, L=300")
def test_doa(record_property):
    cfg = replace(load_config(CONFIGS / "doa.cfg", "doa", threads=1), trials=300, snr_db=(-10.0, -20.0))
    _, results = run_doa(cfg)
    per = {(r.snr_db, r.method): r.per for r in results}
    for (snr, m), v in per.items():
        record_property(f"{m}@{snr:g}dB", round(v, 3))
    assert per[-10.0, L11] >= 0.95
    assert per[-10.0, L21] >= 0.95
    assert 0.60 <= per[-10.0, MUSIC] <= 0.85
    assert 0.55 <= per[-20.0, L21] <= 0.85
    assert per[-20.0, MUSIC] <= 0.15


@pytest.mark.criterion(6, "fixed-point stepsize equals the line minimizer, 500 pairs per norm")
@pytest.mark.parametrize("norm", [L22, L11, L21], ids=str)
def test_stepsize_oracle(norm, record_property):
    rng = np.random.default_rng(600 + 10 * norm.p + norm.q)
    worst = 0.0
    for _ in range(500):
        m, q = rng.integers(2, 12), rng.integers(1, 6)
        B = cplx(rng, (m, q))
        E = rng.uniform(0.2, 2.0) * B + cplx(rng, (m, q))
        mu, iters = fp_line_minimize(E, B, norm)
        assert iters < 100_000
        ref = line_minimizer(E, B, norm.p, norm.q)
        worst = max(worst, abs(mu - ref) / abs(ref))
    record_property(f"worst_rel_{norm.p}{norm.q}", f"{worst:.1e}")
    assert worst <= 1e-3


@pytest.mark.criterion(7, "transforms are gradients: finite differences on 100 points each")
@pytest.mark.parametrize("norm", [L22, L11, L21], ids=str)
def test_gradient(norm, record_property):
    # (2,2) carries the factor 1, the l1-type fidelities 1/2
    const = 1.0 if norm == L22 else 0.5
    rng = np.random.default_rng(700 + 10 * norm.p + norm.q)
    worst = 0.0
    for _ in range(100):
        E, D = cplx(rng, (6, 3)), cplx(rng, (6, 3))
        fd = central_difference(lambda t: fidelity(E + t * D, norm.p, norm.q))
        an = const * 2 * np.vdot(D, apply_psi(E, norm)).real
        worst = max(worst, abs(fd - an) / abs(fd))
    record_property(f"worst_rel_{norm.p}{norm.q}", f"{worst:.1e}")
    assert worst <= 1e-5


@pytest.mark.criterion(8, "oracle equivalence on noiseless (16,24,2,4), 100 trials")
def test_oracle(record_property):
    cfg = load_config(CONFIGS / "oracle.cfg", "oracle", threads=1)
    assert (cfg.m, cfg.p, cfg.K, cfg.q, cfg.trials) == (16, 24, 2, 4, 100)
    trials = run_oracle_comparison(cfg)
    truth = sum(t.oracle_support == t.true_support for t in trials)
    agree = round(oracle_agreement(trials, cfg.methods)[L22] * len(trials))
    record_property("oracle_exact", f"{truth}/100")
    record_property("sniht_2_2_agrees", f"{agree}/100")
    assert truth == 100
    assert agree >= 95


@pytest.mark.criterion(9, "noise statistics: t median power and IG-CG covariance")
@pytest.mark.parametrize("nu", [1, 3, 5])
def test_t_median(nu, record_property):
    sigma = 1.7
    e = sample_t_noise(1000, 1000, nu, sigma, rng_stream(900, nu))
    med = float(np.median(np.abs(e) ** 2))
    record_property(f"median_ratio_nu{nu}", round(med / sigma**2, 4))
    assert med == pytest.approx(sigma**2, rel=0.02)


@pytest.mark.criterion(9, "noise statistics: t median power and IG-CG covariance")
def test_igcg_covariance(record_property):
    q = 4
    e = sample_igcg_noise(100_000, q, 0.1, rng_stream(901))
    C = e.T @ e.conj() / e.shape[0]
    dev = float(np.max(np.abs(C - np.eye(q))))
    record_property("igcg_max_cov_dev", round(dev, 4))
    assert dev <= 0.05


DETERMINISM = [
    # (config, subcommand, trials override or None, result files)
    ("smoke.cfg", "simulate", None, ["results.csv"]),
    ("oracle.cfg", "oracle", None, ["comparison.csv", "summary.csv"]),
    ("table1.cfg", "simulate", 2, ["results.csv"]),
    ("table2.cfg", "simulate", 2, ["results.csv"]),
    ("gaussian_snr.cfg", "simulate", 2, ["results.csv"]),
    ("snapshots.cfg", "simulate", 2, ["results.csv"]),
    ("doa.cfg", "doa", 5, ["histogram.csv", "per.csv"]),
]


@pytest.mark.criterion(10, "shipped configs give byte-identical results across runs and worker counts")
@pytest.mark.parametrize("name, command, trials, files", DETERMINISM, ids=[d[0] for d in DETERMINISM])
def test_determinism(name, command, trials, files, tmp_path):
    cfg = CONFIGS / name
    if trials is not None:
        # same pipeline, fewer trials per point to keep the suite fast
        text = re.sub(r"(?m)^trials\s*=.*$", f"trials = {trials}", cfg.read_text())
        cfg = tmp_path / name
        cfg.write_text(text)
    runs = []
    for i, threads in enumerate(("1", "1", "2")):
        out = tmp_path / f"run{i}"
        assert main([command, str(cfg), "-o", str(out), "--threads", threads]) == 0
        runs.append({f: (out / f).read_bytes() for f in files})
    assert runs[0] == runs[1] == runs[2]

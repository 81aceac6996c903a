"""Complex circular noise generators and SNR calibration.

Every generator takes an explicit ``numpy.random.Generator``; use
:func:`rng_stream` to derive reproducible, independent streams from a seed
and a key such as ``(trial, role)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NoiseSpec",
    "FAMILIES",
    "rng_stream",
    "scale_for_snr",
    "t_median_factor",
    "complex_normal",
    "sample_gaussian_noise",
    "sample_t_noise",
    "sample_igcg_noise",
    "sample_noise",
]

FAMILIES = ("gaussian", "student_t", "ig_cg")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise family and its parameters.

    ``nu`` is the degrees of freedom of ``student_t`` noise and ``lam`` the
    shape of the inverse-Gaussian texture of ``ig_cg`` noise. ``snr_db`` may be
    ``inf`` for noiseless data.
    """

    family: str = "gaussian"
    snr_db: float = math.inf
    nu: float | None = None
    lam: float | None = None
    sigma_x: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown noise family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "student_t" and not (self.nu is not None and self.nu > 0):
            raise ValueError("student_t noise needs nu > 0")
        if self.family == "ig_cg" and not (self.lam is not None and self.lam > 0):
            raise ValueError("ig_cg noise needs lam > 0")
        if not self.sigma_x > 0:
            raise ValueError("sigma_x must be positive")


def rng_stream(seed: int, *key: int) -> np.random.Generator:
    """An independent generator for ``(seed, *key)``.

    The same seed and key always give the same variates, regardless of the
    order in which streams are created or which process creates them.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def scale_for_snr(spec_or_snr, sigma_x=1.0) -> float:
    """Noise scale ``sigma`` giving ``10 log10(sigma_x^2 / sigma^2) = snr_db``."""
    if isinstance(spec_or_snr, NoiseSpec):
        snr_db, sigma_x = spec_or_snr.snr_db, spec_or_snr.sigma_x
    else:
        snr_db = float(spec_or_snr)
    return sigma_x * 10.0 ** (-snr_db / 20.0)


def t_median_factor(nu: float) -> float:
    """Median of the F(2, nu) distribution, ``(nu/2)(2^(2/nu) - 1)``."""
    return 0.5 * nu * math.expm1(2.0 * math.log(2.0) / nu)


def complex_normal(rng, shape, var=1.0) -> np.ndarray:
    """Circular complex normal entries with ``E|z|^2 = var``."""
    g = rng.standard_normal((2, *np.atleast_1d(shape)))
    return math.sqrt(var / 2.0) * (g[0] + 1j * g[1])


def sample_gaussian_noise(m, q, sigma, rng) -> np.ndarray:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return complex_normal(rng, (m, q), sigma**2)


def sample_t_noise(m, q, nu, sigma, rng) -> np.ndarray:
    """Complex circular t noise scaled so that ``median(|e|^2) = sigma^2``.

    ``|e|^2 / c^2`` follows an F(2, nu) law, so the scale ``c`` is set from
    the analytic median of that law.
    """
    if not nu > 0 or not sigma > 0:
        raise ValueError("nu and sigma must be positive")
    g = complex_normal(rng, (m, q))
    s = rng.chisquare(nu, size=(m, q))
    c = sigma / math.sqrt(t_median_factor(nu))
    return c * g * np.sqrt(nu / s)


def sample_igcg_noise(m, q, lam, rng, sigma=1.0) -> np.ndarray:
    """Rows ``sqrt(tau_i) * sigma * g_i`` with inverse-Gaussian texture.

    ``tau_i`` has mean 1 and shape ``lam`` (variance ``1/lam``), so every row
    has covariance ``sigma^2 I_q``. numpy's ``wald`` sampler implements the
    Michael-Schucany-Haas transformation.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    tau = rng.wald(1.0, lam, size=m)
    g = complex_normal(rng, (m, q), sigma**2)
    return np.sqrt(tau)[:, None] * g


def sample_noise(spec: NoiseSpec, m, q, rng) -> np.ndarray:
    """Noise matrix for ``spec`` with scale set from ``spec.snr_db``."""
    if math.isinf(spec.snr_db) and spec.snr_db > 0:
        return np.zeros((m, q), dtype=np.complex128)
    sigma = scale_for_snr(spec)
    if spec.family == "gaussian":
        return sample_gaussian_noise(m, q, sigma, rng)
    if spec.family == "student_t":
        return sample_t_noise(m, q, spec.nu, sigma, rng)
    return sample_igcg_noise(m, q, spec.lam, rng, sigma)

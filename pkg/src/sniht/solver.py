"""Simultaneous normalized iterative hard thresholding with mixed-norm fidelity.

``sniht_solve`` runs projected gradient descent on

    min_S ||Y - Phi S||_{p,q}^q   subject to   S having at most K nonzero rows

for ``(p,q)`` in ``{(2,2), (1,1), (2,1)}``. The gradient direction is
``Phi^H psi(Y - Phi S)``; the stepsize is the exact line minimizer for
``(2,2)`` and a single fixed-point (reweighted least squares) step for the two
robust norms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    L22,
    MixedNormIndex,
    RowSparseSignal,
    _top_k_rows,
    as_complex_matrix,
    mixed_norm,
    row_norms_sq,
    row_support,
)
from .transforms import apply_psi

__all__ = [
    "SolverConfig",
    "SolverState",
    "TraceRecord",
    "sniht_solve",
    "init_support",
    "select_peaks",
    "stepsize_l2",
    "stepsize_fp",
    "fp_map",
    "fp_line_minimize",
    "line_objective",
]

INIT_MODES = ("rownorm", "peak")


@dataclass(frozen=True)
class SolverConfig:
    K: int
    norm: MixedNormIndex = L22
    max_iters: int = 500
    rel_tol: float = 1e-6
    stepsize_floor: float = 1e-10
    init_mode: str = "rownorm"
    record_trace: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.rel_tol > 0 or not self.stepsize_floor > 0:
            raise ValueError("rel_tol and stepsize_floor must be positive")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"init_mode must be one of {INIT_MODES}")
        self.norm.require_supported()


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    objective: float
    mu: float
    support_change: int


@dataclass
class SolverState:
    """Result of :func:`sniht_solve`.

    ``residual`` is ``Y - Phi @ signal.matrix``; ``converged`` is False when
    the iteration cap stopped the run.
    """

    signal: RowSparseSignal
    mu: float
    n_iter: int
    residual: np.ndarray
    converged: bool
    trace: list = field(default_factory=list)

    @property
    def S(self) -> np.ndarray:
        return self.signal.matrix

    @property
    def support(self) -> np.ndarray:
        return self.signal.support


# ---------------------------------------------------------------------------
# line search


def line_objective(E, B, mu, norm: MixedNormIndex) -> float:
    """``||E - mu B||_{p,q}^q``, the objective minimized by the stepsize."""
    return mixed_norm(E - mu * B, norm.p, norm.q) ** norm.q


def fp_map(E, B, mu, norm: MixedNormIndex, delta=1e-10) -> float:
    """One evaluation of the fixed-point map whose fixed point minimizes
    :func:`line_objective` for the (1,1) and (2,1) norms.

    The weights are reciprocal residual moduli (entries for (1,1), rows for
    (2,1)) of ``E - mu B``, floored at ``delta``. Returns ``nan`` if the
    weighted energy of ``B`` vanishes.
    """
    R = E - mu * B
    cross = (B.conj() * E).real
    energy = B.real**2 + B.imag**2
    if (norm.p, norm.q) == (1, 1):
        w = 1.0 / np.maximum(np.abs(R), delta)
        num = np.sum(w * cross)
        den = np.sum(w * energy)
    elif (norm.p, norm.q) == (2, 1):
        w = 1.0 / np.maximum(np.sqrt(row_norms_sq(R)), delta)
        num = w @ cross.sum(axis=1)
        den = w @ energy.sum(axis=1)
    else:
        raise ValueError(f"fixed-point stepsize is defined for (1,1) and (2,1), not ({norm})")
    if not den > 0:
        return float("nan")
    return float(num / den)


def stepsize_fp(E, B, mu_prev, norm: MixedNormIndex, delta=1e-10) -> float:
    """One fixed-point step started from the previous stepsize.

    Non-positive outputs are clamped to ``delta``. If ``B`` carries no energy
    the previous stepsize is reused (or 1.0 when there is none).
    """
    if not np.any(E) and not np.any(E - mu_prev * B):
        return float(mu_prev)
    mu = fp_map(E, B, mu_prev, norm, delta)
    if np.isnan(mu):
        return float(mu_prev) if mu_prev > 0 else 1.0
    return mu if mu > 0 else float(delta)


def fp_line_minimize(E, B, norm: MixedNormIndex, mu0=None, delta=1e-12, tol=1e-13, max_iter=100_000):
    """Iterate :func:`fp_map` to convergence. Returns ``(mu, n_iterations)``.

    The (2,2) case has the closed form ``Re<B,E> / ||B||^2`` and is returned
    directly.
    """
    E = np.asarray(E, dtype=np.complex128)
    B = np.asarray(B, dtype=np.complex128)
    ls = float(np.vdot(B, E).real / np.vdot(B, B).real)
    if (norm.p, norm.q) == (2, 2):
        return ls, 0
    mu = ls if mu0 is None else float(mu0)
    for it in range(1, max_iter + 1):
        new = fp_map(E, B, mu, norm, delta)
        if abs(new - mu) <= tol * max(abs(mu), 1.0):
            return new, it
        mu = new
    return mu, max_iter


def stepsize_l2(G, Phi, gamma, mu_prev=0.0, delta=1e-10) -> float:
    """Exact line minimizer for the (2,2) objective along ``G`` restricted to
    the rows ``gamma``: ``||G_gamma||^2 / ||Phi_gamma G_gamma||^2``."""
    gamma = np.asarray(gamma, dtype=np.intp)
    Gg = G[gamma]
    num = float(row_norms_sq(Gg).sum())
    den = float(row_norms_sq(Phi[:, gamma] @ Gg).sum()) if gamma.size else 0.0
    if den < delta**2:
        return float(mu_prev) if mu_prev > 0 else 1.0
    return num / den


# ---------------------------------------------------------------------------
# initialization


def select_peaks(values, K: int) -> np.ndarray:
    """Indices of the ``K`` largest local maxima of a 1-D sequence.

    An entry is a peak when it is strictly larger than both neighbours; the
    first and last entries need only beat their single neighbour. When fewer
    than ``K`` peaks exist the remaining slots go to the largest non-peak
    entries. Returned indices are sorted ascending.
    """
    v = np.asarray(values, dtype=np.float64)
    n = v.size
    if K < 0 or K > n:
        raise ValueError(f"cannot select {K} peaks from {n} values")
    if n == 1:
        is_peak = np.ones(1, dtype=bool)
    else:
        left = np.concatenate(([True], v[1:] > v[:-1]))
        right = np.concatenate((v[:-1] > v[1:], [True]))
        is_peak = left & right
    peaks = np.flatnonzero(is_peak)
    chosen = peaks[np.argsort(-v[peaks], kind="stable")[:K]]
    if chosen.size < K:
        rest = np.flatnonzero(~is_peak)
        fill = rest[np.argsort(-v[rest], kind="stable")[: K - chosen.size]]
        chosen = np.concatenate((chosen, fill))
    return np.sort(chosen)


def init_support(Y, Phi, cfg: SolverConfig) -> np.ndarray:
    """Initial support from the row norms of ``Phi^H psi(Y)``.

    ``rownorm`` mode keeps the K largest rows; ``peak`` mode treats the row
    norms as a sequence over an ordered grid and keeps the K largest peaks.
    """
    C = Phi.conj().T @ apply_psi(Y, cfg.norm)
    norms = row_norms_sq(C)
    K = min(cfg.K, Phi.shape[1])
    if cfg.init_mode == "peak":
        chosen = select_peaks(norms, K)
    else:
        chosen = _top_k_rows(norms, K)
    return chosen[norms[chosen] > 0]


# ---------------------------------------------------------------------------
# main loop


def _validate(Y, Phi, cfg):
    Y = as_complex_matrix(Y, "Y")
    Phi = as_complex_matrix(Phi, "Phi")
    if Y.shape[0] != Phi.shape[0]:
        raise ValueError(f"Y has {Y.shape[0]} rows but Phi has {Phi.shape[0]}")
    if cfg.K > Phi.shape[1]:
        raise ValueError(f"K={cfg.K} exceeds the number of columns of Phi ({Phi.shape[1]})")
    return Y, Phi


def sniht_solve(Y, Phi, cfg: SolverConfig) -> SolverState:
    """Recover a K-rowsparse ``S`` with ``Y ~ Phi S``.

    Starting from ``S = 0`` and ``mu = 0``, each iteration forms the
    transformed residual ``psi(Y - Phi S)``, the direction
    ``G = Phi^H psi(...)``, a stepsize along ``G`` restricted to the current
    support, and the update ``S <- H_K(S + mu G)``. The loop stops once the
    support is unchanged and the relative change of ``S`` falls below
    ``cfg.rel_tol``, or after ``cfg.max_iters`` iterations.

    Parameters
    ----------
    Y : (m, q) complex array
    Phi : (m, p) complex array
    cfg : SolverConfig

    Returns
    -------
    SolverState
    """
    Y, Phi = _validate(Y, Phi, cfg)
    norm, K, delta = cfg.norm, cfg.K, cfg.stepsize_floor
    robust = (norm.p, norm.q) != (2, 2)
    PhiH = Phi.conj().T

    p, q = Phi.shape[1], Y.shape[1]
    S = np.zeros((p, q), dtype=np.complex128)
    gamma = init_support(Y, Phi, cfg)
    mu = 0.0
    E = Y.copy()
    trace = []
    converged = False
    n = 0
    while n < cfg.max_iters:
        G = PhiH @ apply_psi(E, norm)
        if robust:
            B = Phi[:, gamma] @ G[gamma]
            mu = stepsize_fp(E, B, mu, norm, delta)
        else:
            mu = stepsize_l2(G, Phi, gamma, mu, delta)

        U = S + mu * G
        keep = _top_k_rows(row_norms_sq(U), K)
        S_new = np.zeros_like(S)
        S_new[keep] = U[keep]
        gamma_new = row_support(S_new)

        n += 1
        diff = np.sqrt(row_norms_sq(S_new - S).sum())
        ref = max(np.sqrt(row_norms_sq(S).sum()), delta)
        same_support = np.array_equal(gamma_new, gamma)
        S, E = S_new, Y - Phi[:, gamma_new] @ S_new[gamma_new]
        if cfg.record_trace:
            trace.append(TraceRecord(
                iteration=n,
                objective=mixed_norm(E, norm.p, norm.q) ** norm.q,
                mu=mu,
                support_change=int(np.setxor1d(gamma, gamma_new).size),
            ))
        gamma = gamma_new
        if same_support and diff / ref < cfg.rel_tol:
            converged = True
            break

    return SolverState(
        signal=RowSparseSignal(S, gamma),
        mu=mu,
        n_iter=n,
        residual=E,
        converged=converged,
        trace=trace,
    )

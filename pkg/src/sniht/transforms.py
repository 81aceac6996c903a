"""Residual transforms: the gradient of ``||E||_{p,q}^q`` w.r.t. conj(E).

The transforms are used in their plain forms (identity, element-wise spatial
sign, row-wise spatial sign); positive constants in front of the gradient are
irrelevant because every update direction is rescaled by a line search.
"""
from __future__ import annotations

import numpy as np

from .core import MixedNormIndex, UnsupportedNormError, row_norms_sq

__all__ = ["spatial_sign_scalar", "spatial_sign_vector", "apply_psi"]


def spatial_sign_scalar(s):
    """``s / |s|``, and exactly zero at zero. Works element-wise on arrays."""
    s = np.asarray(s, dtype=np.complex128)
    mod = np.abs(s)
    out = np.zeros_like(s)
    nz = mod != 0
    np.divide(s, mod, out=out, where=nz)
    return out[()] if out.ndim == 0 else out


def spatial_sign_vector(s) -> np.ndarray:
    s = np.asarray(s, dtype=np.complex128)
    n = np.linalg.norm(s)
    if n == 0:
        return np.zeros_like(s)
    return s / n


def _row_sign(E):
    nrm = np.sqrt(row_norms_sq(E))
    out = np.zeros_like(E)
    nz = nrm != 0
    out[nz] = E[nz] / nrm[nz, None]
    return out


def apply_psi(E, idx: MixedNormIndex) -> np.ndarray:
    """Apply the residual transform selected by ``idx`` to ``E``.

    ``(2,2)`` returns ``E`` unchanged, ``(1,1)`` the element-wise spatial sign
    and ``(2,1)`` replaces each row by its vector spatial sign.
    """
    E = np.asarray(E, dtype=np.complex128)
    key = (idx.p, idx.q) if isinstance(idx, MixedNormIndex) else tuple(idx)
    if key == (2, 2):
        return E
    if key == (1, 1):
        return spatial_sign_scalar(E)
    if key == (2, 1):
        return _row_sign(E)
    raise UnsupportedNormError(f"no residual transform for the ({key[0]},{key[1]}) norm")

"""Complex matrix helpers and the row-sparsity operators used throughout.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Row indices are
0-based inside the library; files written for users (support lists, CSV
tables) use 1-based indices.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "MixedNormIndex",
    "L22",
    "L11",
    "L21",
    "UnsupportedNormError",
    "RowSparseSignal",
    "as_complex_matrix",
    "mixed_norm",
    "row_norms_sq",
    "row_support",
    "hard_threshold",
    "restrict",
    "columns",
    "rows",
    "read_complex_csv",
    "write_complex_csv",
    "format_support",
    "parse_support",
]


class UnsupportedNormError(ValueError):
    """Raised when a mixed-norm pair has no solver support, e.g. (1,2)."""


@dataclass(frozen=True, order=True)
class MixedNormIndex:
    """The pair ``(p, q)`` selecting the data-fidelity norm ``||.||_{p,q}^q``."""

    p: int
    q: int

    def __post_init__(self):
        if self.p not in (1, 2) or self.q not in (1, 2):
            raise ValueError(f"mixed norm indices must lie in {{1,2}}, got ({self.p},{self.q})")

    @property
    def supported(self) -> bool:
        return (self.p, self.q) in _SUPPORTED

    def require_supported(self) -> "MixedNormIndex":
        if not self.supported:
            raise UnsupportedNormError(f"the ({self.p},{self.q}) mixed norm is not supported")
        return self

    @classmethod
    def parse(cls, text: str) -> "MixedNormIndex":
        """Parse ``"2,1"``, ``"(2,1)"`` or ``"21"``."""
        s = text.strip().strip("()").replace(" ", "")
        if "," in s:
            a, b = s.split(",", 1)
        elif len(s) == 2:
            a, b = s[0], s[1]
        else:
            raise ValueError(f"cannot parse mixed norm index {text!r}")
        return cls(int(a), int(b))

    def __str__(self):
        return f"{self.p},{self.q}"


_SUPPORTED = {(2, 2), (1, 1), (2, 1)}
L22 = MixedNormIndex(2, 2)
L11 = MixedNormIndex(1, 1)
L21 = MixedNormIndex(2, 1)


def as_complex_matrix(a, name="matrix") -> np.ndarray:
    """Return ``a`` as a finite, nonempty 2-D complex128 array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class RowSparseSignal:
    """A ``p x q`` signal matrix together with its row-support.

    ``support`` is sorted ascending and always equals ``row_support(matrix)``.
    """

    matrix: np.ndarray
    support: np.ndarray

    @property
    def n_nonzero_rows(self) -> int:
        return int(self.support.size)


def mixed_norm(S, p=2, q=2) -> float:
    r"""Mixed :math:`\ell_{p,q}` norm, the :math:`\ell_q` norm of the row-wise
    :math:`\ell_p` norms of ``S``."""
    S = np.asarray(S)
    if S.size == 0:
        raise ValueError("mixed_norm of an empty matrix")
    if p not in (1, 2) or q not in (1, 2):
        raise ValueError("only p, q in {1, 2} are supported")
    if S.ndim == 1:
        S = S[:, None]
    a = np.abs(S)
    if p == 2:
        r = np.sqrt(np.einsum("ij,ij->i", a, a))
    else:
        r = a.sum(axis=1)
    if q == 2:
        return float(np.sqrt(r @ r))
    return float(r.sum())


def row_norms_sq(S) -> np.ndarray:
    """Squared Euclidean norm of every row of ``S``."""
    return np.einsum("ij,ij->i", S.real, S.real) + np.einsum("ij,ij->i", S.imag, S.imag)


def row_support(S) -> np.ndarray:
    """Indices of rows holding at least one exactly-nonzero entry."""
    S = np.asarray(S)
    return np.flatnonzero(np.any(S != 0, axis=1))


def _top_k_rows(norms, K):
    # stable sort on the negated norms: ties go to the lower row index
    return np.sort(np.argsort(-norms, kind="stable")[:K])


def hard_threshold(S, K: int) -> RowSparseSignal:
    """Keep the ``K`` rows of largest Euclidean norm and zero the rest.

    Ties are broken in favour of the smaller row index so the result is
    deterministic.
    """
    S = np.asarray(S, dtype=np.complex128)
    p = S.shape[0]
    if K < 0 or K > p:
        raise ValueError(f"sparsity level K={K} outside [0, {p}]")
    keep = _top_k_rows(row_norms_sq(S), K)
    out = np.zeros_like(S)
    out[keep] = S[keep]
    return RowSparseSignal(out, row_support(out))


def _check_index_set(gamma, n):
    idx = np.asarray(gamma, dtype=np.intp).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"index set {idx.tolist()} out of range for dimension {n}")
    return idx


def restrict(S, gamma) -> np.ndarray:
    """``S`` with every row outside ``gamma`` set to zero."""
    S = np.asarray(S)
    idx = _check_index_set(gamma, S.shape[0])
    out = np.zeros_like(S)
    out[idx] = S[idx]
    return out


def columns(A, gamma) -> np.ndarray:
    """The submatrix of ``A`` formed by the columns in ``gamma``."""
    A = np.asarray(A)
    return A[:, _check_index_set(gamma, A.shape[1])]


def rows(A, gamma) -> np.ndarray:
    """The submatrix of ``A`` formed by the rows in ``gamma``."""
    A = np.asarray(A)
    return A[_check_index_set(gamma, A.shape[0])]


# ---------------------------------------------------------------------------
# file formats


def read_complex_csv(path) -> np.ndarray:
    """Read a complex matrix stored as alternating ``re,im`` CSV columns."""
    try:
        raw = np.loadtxt(Path(path), delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"{path}: not a numeric CSV file ({exc})") from None
    if raw.size == 0 or raw.shape[1] % 2:
        raise ValueError(f"{path}: expected an even, nonzero number of columns, got {raw.shape[1]}")
    return as_complex_matrix(raw[:, 0::2] + 1j * raw[:, 1::2], name=str(path))


def write_complex_csv(path, A) -> None:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim == 1:
        A = A[:, None]
    raw = np.empty((A.shape[0], 2 * A.shape[1]))
    raw[:, 0::2] = A.real
    raw[:, 1::2] = A.imag
    np.savetxt(Path(path), raw, delimiter=",", fmt="%.17g")


def format_support(support) -> str:
    """1-based, ascending, space separated."""
    return " ".join(str(int(i) + 1) for i in sorted(np.asarray(support).tolist()))


def parse_support(text: str) -> np.ndarray:
    """Inverse of :func:`format_support`, returning 0-based indices."""
    return np.array(sorted(int(t) - 1 for t in text.split()), dtype=np.intp)

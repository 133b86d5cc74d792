"""Dense transform kernels: DFT matrices, truncated real transforms, SVD pseudo-inverse.

All transforms use the plain (unnormalized) forward convention: the forward
matrix has entries omega**(j*k) with omega = exp(-2*pi*i/n), and the inverse
carries the 1/n factor.  That normalization choice is load-bearing for the
frequency-domain model analysis and must not be swapped for an orthonormal one.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericalError, UnsupportedShapeError

# irft discards imaginary parts below this; anything larger means the input
# was not conjugate-symmetric the way pi_inverse guarantees.
_IMAG_RESIDUE_TOL = 1e-10

_dft_cache: dict[int, np.ndarray] = {}


def _cached_dft(n: int) -> np.ndarray:
    """Read-only forward DFT matrix, cached per size."""
    m = _dft_cache.get(n)
    if m is None:
        jk = np.outer(np.arange(n), np.arange(n))
        m = np.exp((-2j * np.pi / n) * jk)
        m.setflags(write=False)
        _dft_cache[n] = m
    return m


def dft_matrix(n: int) -> np.ndarray:
    """Forward DFT matrix of size n x n, entry (j, k) = exp(-2*pi*i*j*k/n)."""
    if n < 1:
        raise UnsupportedShapeError(f"transform size must be >= 1, got {n}")
    return _cached_dft(n).copy()


def dft(x: np.ndarray) -> np.ndarray:
    """Forward transform of a length-n vector (complex output, no 1/n factor)."""
    v = np.asarray(x)
    if v.ndim != 1 or v.size == 0:
        raise UnsupportedShapeError(f"dft expects a nonempty 1-d vector, got shape {v.shape}")
    return _cached_dft(v.size) @ v


def idft(y: np.ndarray) -> np.ndarray:
    """Inverse transform: (1/n) * conj(D_n) @ y."""
    v = np.asarray(y)
    if v.ndim != 1 or v.size == 0:
        raise UnsupportedShapeError(f"idft expects a nonempty 1-d vector, got shape {v.shape}")
    n = v.size
    return (np.conj(_cached_dft(n)) @ v) / n


def rft(x: np.ndarray) -> np.ndarray:
    """First n/2 + 1 components of the forward transform of a real vector.

    Only even lengths are supported; the remaining components are redundant
    by conjugate symmetry and are reconstructed by pi_inverse.
    """
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise UnsupportedShapeError(f"rft expects a nonempty 1-d real vector, got shape {v.shape}")
    if v.size % 2 != 0:
        raise UnsupportedShapeError(f"rft requires an even length, got {v.size}")
    return dft(v)[: v.size // 2 + 1]


def pi_project(y: np.ndarray) -> np.ndarray:
    """Keep components 0..n/2 of a length-n spectrum (n even)."""
    v = np.asarray(y, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise UnsupportedShapeError(f"pi_project expects a nonempty 1-d vector, got shape {v.shape}")
    if v.size % 2 != 0:
        raise UnsupportedShapeError(f"pi_project requires an even length, got {v.size}")
    return v[: v.size // 2 + 1].copy()


def pi_inverse(y: np.ndarray, n: int) -> np.ndarray:
    """Rebuild a full conjugate-symmetric spectrum of even length n.

    Components 0 and n/2 keep only their real part; components above n/2 are
    conjugate mirrors of those below.
    """
    v = np.asarray(y, dtype=np.complex128)
    if n < 2 or n % 2 != 0:
        raise UnsupportedShapeError(f"pi_inverse requires an even target length >= 2, got {n}")
    if v.ndim != 1 or v.size != n // 2 + 1:
        raise UnsupportedShapeError(
            f"pi_inverse for length {n} expects {n // 2 + 1} components, got shape {v.shape}"
        )
    out = np.empty(n, dtype=np.complex128)
    half = n // 2
    out[0] = v[0].real
    out[1:half] = v[1:half]
    out[half] = v[half].real
    out[half + 1 :] = np.conj(v[half - 1 : 0 : -1])
    return out


def irft(y: np.ndarray, n: int) -> np.ndarray:
    """Real inverse of a truncated spectrum: idft(pi_inverse(y, n)).

    The result is real by construction; an imaginary residue at or above
    1e-10 indicates a broken invariant and raises.
    """
    z = idft(pi_inverse(y, n))
    residue = float(np.max(np.abs(z.imag))) if n else 0.0
    if residue >= _IMAG_RESIDUE_TOL:
        raise NumericalError(
            f"irft produced imaginary residue {residue:.3e} (>= {_IMAG_RESIDUE_TOL:.0e}) at length {n}"
        )
    return z.real.copy()


def svd_pinv(m: np.ndarray, rel_cutoff: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD.

    Singular values at or below rel_cutoff times the largest singular value
    are treated as exactly zero, so rank-deficient input yields the
    minimum-norm inverse instead of an explosion.

    Parameters
    ----------
    m : ndarray, shape (r, c)
        Real matrix.
    rel_cutoff : float
        Relative singular-value threshold, must lie in (0, 1).
    """
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise UnsupportedShapeError(f"svd_pinv expects a nonempty 2-d matrix, got shape {a.shape}")
    if not 0.0 < rel_cutoff < 1.0:
        raise ValueError(f"rel_cutoff must be in (0, 1), got {rel_cutoff}")
    if not np.all(np.isfinite(a)):
        raise ValueError("svd_pinv input contains non-finite entries")
    try:
        u, s, vt = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed to converge for a {a.shape[0]}x{a.shape[1]} matrix") from exc
    s_inv = np.zeros_like(s)
    if s.size and s[0] > 0.0:
        keep = s > rel_cutoff * s[0]
        s_inv[keep] = 1.0 / s[keep]
    return (vt.T * s_inv) @ u.T


def lstsq_min_norm(a: np.ndarray, b: np.ndarray, rel_cutoff: float = 1e-12) -> np.ndarray:
    """Minimum-norm least-squares solution of a @ x = b via svd_pinv."""
    return svd_pinv(a, rel_cutoff=rel_cutoff) @ np.asarray(b, dtype=np.float64)

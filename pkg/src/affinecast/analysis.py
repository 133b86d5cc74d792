"""Reduction of every model in the zoo to canonical affine form, and back.

Two canonical forms cover the zoo:

  plain affine    x -> A x + b
  sigma-coupled   x -> A x + b * std(x)     (population std)

Models are treated as opaque functions and probed: a plain affine map is
pinned down by its value at zero and at the standard basis, and a
sigma-coupled map by its value at the all-ones vector (std zero) and at
scaled basis vectors chosen to have population std exactly one.

The frequency-domain core gets dedicated machinery: its composition of
truncated transforms collapses to a single real matrix, built here both by
composing the transform matrices and entry-by-entry from the weight matrix
(the seven-case table), and the reverse direction synthesizes a frequency
core for any target affine map whenever the context is long enough
(context >= horizon - 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import linalg
from .errors import ExpressivityError, NotAffineError, UnsupportedShapeError
from .models import FitsModel

_PROBE_SEED = 0x5EED
_SYNTH_CUTOFF = 1e-10  # rel_cutoff for the synthesis least-squares steps


@dataclass(frozen=True)
class AffineModel:
    """Canonical form A x + b, or A x + b*std(x) when sigma_coupled."""

    weight: np.ndarray  # (T, L)
    bias: np.ndarray  # (T,)
    sigma_coupled: bool = False

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2 or b.shape != (w.shape[0],):
            raise UnsupportedShapeError(
                f"weight {w.shape} and bias {b.shape} are not a matching affine pair"
            )
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    def apply(self, x: np.ndarray) -> np.ndarray:
        v = np.asarray(x, dtype=np.float64)
        if self.sigma_coupled:
            return self.weight @ v + self.bias * v.std()
        return self.weight @ v + self.bias


@dataclass(frozen=True)
class FitsAffineForm:
    """Affine form of a frequency core: the full length-(L+T) reconstruction
    map and the view truncated to the forecast rows."""

    full: AffineModel  # (L+T, L)
    truncated: AffineModel  # (T, L)


# ---------------------------------------------------------------------------
# structural matrices


def moving_average_matrix(context_len: int, kernel_size: int) -> np.ndarray:
    """Matrix form of the edge-replicated centered moving average."""
    length, k = context_len, kernel_size
    if length < 1:
        raise UnsupportedShapeError(f"context length must be >= 1, got {length}")
    if k < 1 or k % 2 == 0:
        raise UnsupportedShapeError(f"kernel_size must be odd and >= 1, got {k}")
    if k > 2 * length - 1:
        raise UnsupportedShapeError(
            f"kernel_size {k} too large for context length {length} (max {2 * length - 1})"
        )
    pad = (k - 1) // 2
    # replication: (length + k - 1) x length
    rep = np.zeros((length + 2 * pad, length))
    for i in range(pad):
        rep[i, 0] = 1.0
        rep[length + 2 * pad - 1 - i, length - 1] = 1.0
    rep[pad : pad + length, :] = np.eye(length)
    # sliding mean: length x (length + k - 1)
    win = np.zeros((length, length + 2 * pad))
    for i in range(length):
        win[i, i : i + k] = 1.0 / k
    return win @ rep


def mean_matrix(rows: int, context_len: int) -> np.ndarray:
    """Matrix sending x to its mean replicated `rows` times."""
    if rows < 1 or context_len < 1:
        raise UnsupportedShapeError(f"invalid shape ({rows}, {context_len})")
    return np.full((rows, context_len), 1.0 / context_len)


def last_column_matrix(rows: int, context_len: int) -> np.ndarray:
    """Matrix sending x to its last entry replicated `rows` times."""
    if rows < 1 or context_len < 1:
        raise UnsupportedShapeError(f"invalid shape ({rows}, {context_len})")
    m = np.zeros((rows, context_len))
    m[:, -1] = 1.0
    return m


# ---------------------------------------------------------------------------
# probing extractors


def extract_affine(
    f: Callable[[np.ndarray], np.ndarray], context_len: int, tol: float = 1e-8
) -> AffineModel:
    """Recover (A, b) from an opaque map assumed to be plain affine.

    b = f(0); column i of A = f(e_i) - b.  Three random probes then verify
    the recovered form; any deviation beyond tol (scaled by the probe norm)
    raises NotAffineError.
    """
    if context_len < 1:
        raise UnsupportedShapeError(f"context length must be >= 1, got {context_len}")
    b = np.asarray(f(np.zeros(context_len)), dtype=np.float64)
    if b.ndim != 1:
        raise UnsupportedShapeError(f"probed function returned shape {b.shape}, expected 1-d")
    a = np.empty((b.size, context_len))
    for i in range(context_len):
        e = np.zeros(context_len)
        e[i] = 1.0
        a[:, i] = np.asarray(f(e), dtype=np.float64) - b
    model = AffineModel(a, b, sigma_coupled=False)
    rng = np.random.default_rng(_PROBE_SEED)
    for _ in range(3):
        x = rng.standard_normal(context_len)
        dev = float(np.max(np.abs(np.asarray(f(x)) - model.apply(x))))
        if dev > tol * max(1.0, float(np.linalg.norm(x))):
            raise NotAffineError(
                f"probed function deviates from affine form by {dev:.3e} (tol {tol:.1e})"
            )
    return model


def extract_affine_sigma(
    f: Callable[[np.ndarray], np.ndarray], context_len: int, tol: float = 1e-8
) -> AffineModel:
    """Recover (A, b) from an opaque map assumed sigma-coupled affine.

    The all-ones probe has population std zero, so f(1) = A 1.  The scaled
    basis probes (L/sqrt(L-1)) e_i have population std exactly one, which
    separates the bias:

        sqrt(L-1) * b = (sqrt(L-1)/L) * sum_i f(probe_i) - f(1)

    and each weight column follows from its probe once b is known.  Three
    random probes verify the recovered form within tol.
    """
    length = context_len
    if length < 2:
        raise UnsupportedShapeError(f"sigma extraction needs context length >= 2, got {length}")
    f_ones = np.asarray(f(np.ones(length)), dtype=np.float64)
    if f_ones.ndim != 1:
        raise UnsupportedShapeError(f"probed function returned shape {f_ones.shape}, expected 1-d")
    scale = length / np.sqrt(length - 1.0)
    probes = np.empty((f_ones.size, length))
    for i in range(length):
        e = np.zeros(length)
        e[i] = scale
        probes[:, i] = np.asarray(f(e), dtype=np.float64)
    b = (probes.sum(axis=1) / scale - f_ones) / np.sqrt(length - 1.0)
    a = (probes - b[:, None]) / scale
    model = AffineModel(a, b, sigma_coupled=True)
    rng = np.random.default_rng(_PROBE_SEED)
    for _ in range(3):
        x = rng.standard_normal(length)
        dev = float(np.max(np.abs(np.asarray(f(x)) - model.apply(x))))
        if dev > tol * max(1.0, float(np.linalg.norm(x))):
            raise NotAffineError(
                f"probed function deviates from sigma-coupled affine form by {dev:.3e} "
                f"(tol {tol:.1e})"
            )
    return model


# ---------------------------------------------------------------------------
# frequency core <-> affine form


def tw_matrix(weight: np.ndarray, context_len: int, horizon: int) -> np.ndarray:
    """Entry-by-entry real-action matrix of a frequency-core weight.

    The returned (L+T) x L complex matrix V satisfies, for every spectrum Y
    of a real length-L vector:

        V @ Y == pi_inverse(W @ pi_project(Y), L+T)

    Entries reference W with column indices above L/2 treated as zero (the
    projection pads those away).  Seven cases cover the index grid; rows
    strictly between 0 and (L+T)/2 have exact zeros in columns above L/2.
    """
    length, t = context_len, horizon
    if length % 2 != 0 or t % 2 != 0 or length < 2 or t < 2:
        raise UnsupportedShapeError(f"need even L >= 2 and even T >= 2, got L={length}, T={t}")
    w = np.asarray(weight, dtype=np.complex128)
    rows_w, cols_w = (length + t) // 2 + 1, length // 2 + 1
    if w.shape != (rows_w, cols_w):
        raise UnsupportedShapeError(f"weight must be {rows_w}x{cols_w}, got {w.shape}")

    n = length + t
    half_n = n // 2
    half_l = length // 2

    def wz(i: int, j: int) -> complex:
        # zero-padded lookup: spectrum columns above L/2 do not exist in W
        return w[i, j] if j < cols_w else 0.0

    out = np.zeros((n, length), dtype=np.complex128)
    for i in range(n):
        for j in range(length):
            if i == 0 or i == half_n:
                if j == 0 or j == half_l:
                    out[i, j] = wz(i, j).real
                elif j < half_l:
                    out[i, j] = 0.5 * wz(i, j)
                else:
                    out[i, j] = 0.5 * np.conj(wz(i, length - j))
            elif i < half_n:
                out[i, j] = wz(i, j) if j <= half_l else 0.0
            else:
                if j == 0:
                    out[i, j] = np.conj(wz(n - i, j))
                else:
                    out[i, j] = np.conj(wz(n - i, length - j))
    return out


def affine_of_fits(core: FitsModel) -> FitsAffineForm:
    """Collapse a frequency core to its affine form.

    The weight acts column-wise: each truncated input spectrum column is
    mapped through the core weight, lifted back to a full conjugate-symmetric
    spectrum, and inverse-transformed at length L+T; the (L+T)/L output
    scaling is folded in.  The bias is the scaled real reconstruction of the
    core's bias spectrum.  Both the full (L+T) x L map and its last-T-rows
    truncation are returned.
    """
    length, t = core.context_len, core.horizon
    n = length + t
    scale = n / length
    fwd = linalg.dft_matrix(length)[: length // 2 + 1, :]  # truncated input transform
    mapped = core.weight @ fwd  # ((n/2)+1, L)
    full_a = np.empty((n, length))
    for j in range(length):
        full_a[:, j] = linalg.irft(mapped[:, j], n)
    full_a *= scale
    full_b = linalg.irft(core.bias, n) * scale
    full = AffineModel(full_a, full_b, sigma_coupled=False)
    truncated = AffineModel(full_a[length:], full_b[length:], sigma_coupled=False)
    return FitsAffineForm(full=full, truncated=truncated)


def fits_of_affine(target: AffineModel, context_len: int, horizon: int) -> FitsModel:
    """Synthesize a frequency core whose forecast equals a target affine map.

    Solvable exactly whenever context_len >= horizon - 2; shorter contexts
    leave the reachable set short of the full affine class and raise
    ExpressivityError.

    The weight is built column by column in the spectral domain.  Columns 0
    and L/2 of the target's spectral form are real and are lifted through a
    full real extension (free first-L samples set to zero); the interior
    columns are solved by least squares against the bottom-T rows of the
    inverse transform restricted to components 0..(L+T)/2, which has full row
    rank under the size condition.  The bias is the forward transform of the
    zero-padded target bias.
    """
    length, t = context_len, horizon
    if length % 2 != 0 or t % 2 != 0 or length < 2 or t < 2:
        raise UnsupportedShapeError(f"need even L >= 2 and even T >= 2, got L={length}, T={t}")
    if target.sigma_coupled:
        raise NotAffineError("synthesis target must be a plain affine model")
    if target.weight.shape != (t, length):
        raise UnsupportedShapeError(
            f"target weight must be {t}x{length}, got {target.weight.shape}"
        )
    if length < t - 2:
        raise ExpressivityError(
            f"affine targets are reachable only when context >= horizon - 2; "
            f"got context {length}, horizon {t}"
        )
    n = length + t
    half_n, half_l = n // 2, length // 2
    inv_scale = length / n  # undo the core's output scaling

    # spectral-domain image of the target weight: G = (L/n) * A @ inv(D_L)
    d_l = linalg.dft_matrix(length)
    inv_l = np.conj(d_l) / length
    g = (inv_scale * target.weight) @ inv_l  # (T, L) complex

    d_n = linalg.dft_matrix(n)
    weight = np.zeros((half_n + 1, half_l + 1), dtype=np.complex128)

    # columns 0 and L/2: real spectra, lift through a real length-n extension
    for j in (0, half_l):
        y_ext = np.zeros(n)
        y_ext[length:] = g[:, j].real
        col = d_n @ y_ext
        weight[:, j] = col[: half_n + 1]

    # interior columns: least squares against the bottom-T rows of the
    # inverse transform restricted to the first (n/2)+1 spectral components
    if half_l > 1:
        q = (np.conj(d_n) / n)[length:, : half_n + 1]  # (T, n/2+1)
        q_pinv_real = linalg.svd_pinv(
            np.concatenate([np.concatenate([q.real, -q.imag], axis=1),
                            np.concatenate([q.imag, q.real], axis=1)], axis=0),
            rel_cutoff=_SYNTH_CUTOFF,
        )
        for j in range(1, half_l):
            rhs = np.concatenate([g[:, j].real, g[:, j].imag])
            s_real = q_pinv_real @ rhs
            s = s_real[: half_n + 1] + 1j * s_real[half_n + 1 :]
            s[0] *= 2.0
            s[half_n] *= 2.0
            weight[:, j] = s

    bias_ext = np.zeros(n)
    bias_ext[length:] = target.bias
    bias = linalg.rft(bias_ext) * inv_scale
    return FitsModel(length, t, weight, bias)


# ---------------------------------------------------------------------------
# bias path of the frequency core


def irft_real_matrix(n: int) -> np.ndarray:
    """Unscaled real matrix of the inverse truncated transform.

    Maps the stacked real/imaginary parts of an (n/2 + 1)-component spectrum
    (n + 2 reals) to the length-n reconstruction; built column by column by
    probing irft on unit components.
    """
    if n < 2 or n % 2 != 0:
        raise UnsupportedShapeError(f"need an even length >= 2, got {n}")
    half = n // 2 + 1
    m = np.empty((n, 2 * half))
    for k in range(half):
        e = np.zeros(half, dtype=np.complex128)
        e[k] = 1.0
        m[:, k] = linalg.irft(e, n)
        m[:, half + k] = linalg.irft(1j * e, n)
    return m


def rft_real_matrix(context_len: int) -> np.ndarray:
    """Real matrix of the forward truncated transform: (L + 2) x L, rows are
    the stacked real/imaginary parts of the spectrum components."""
    length = context_len
    if length < 2 or length % 2 != 0:
        raise UnsupportedShapeError(f"need an even length >= 2, got {length}")
    fwd = linalg.dft_matrix(length)[: length // 2 + 1, :]
    return np.concatenate([fwd.real, fwd.imag], axis=0)


def fits_bias_operator(context_len: int, horizon: int) -> np.ndarray:
    """Real matrix mapping the stacked bias-spectrum parameters to the full
    length-(L+T) additive bias of a frequency core, output scaling included.

    Shape (L+T) x (L+T+2).  Columns for the imaginary parts of components 0
    and (L+T)/2 are exactly zero: those parameters never reach the output.
    """
    length, t = context_len, horizon
    if length % 2 != 0 or t % 2 != 0 or length < 2 or t < 2:
        raise UnsupportedShapeError(f"need even L >= 2 and even T >= 2, got L={length}, T={t}")
    n = length + t
    return irft_real_matrix(n) * (n / length)


def stack_complex(v: np.ndarray) -> np.ndarray:
    """Stack a complex vector's real parts over its imaginary parts."""
    z = np.asarray(v, dtype=np.complex128)
    return np.concatenate([z.real, z.imag])


# ---------------------------------------------------------------------------
# comparison


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two arrays, flattened."""
    x = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(b, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise UnsupportedShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
    nx, ny = float(np.linalg.norm(x)), float(np.linalg.norm(y))
    if nx == 0.0 or ny == 0.0:
        raise ValueError("cosine similarity is undefined for a zero array")
    return float(x @ y / (nx * ny))

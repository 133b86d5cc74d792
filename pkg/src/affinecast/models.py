"""Forecasting model zoo: linear cores, trend/seasonal split, frequency-domain
core, and the instance-statistics wrappers that turn them into the usual
named variants.

Population statistics are used everywhere: std divides by the window length,
never by length - 1.  A context window is mapped to a forecast as

    wrapper-normalize -> core -> wrapper-denormalize

and each wrapper stores nothing between calls; all statistics come from the
window itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from . import linalg
from .errors import UnsupportedShapeError

DEFAULT_EPS = 1e-5
DEFAULT_KERNEL = 25


# ---------------------------------------------------------------------------
# cores


@dataclass(frozen=True)
class LinearLayer:
    """Affine map x -> weight @ x + bias."""

    weight: np.ndarray  # (T, L)
    bias: np.ndarray  # (T,)

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=np.float64)
        b = np.asarray(self.bias, dtype=np.float64)
        if w.ndim != 2:
            raise UnsupportedShapeError(f"weight must be 2-d, got shape {w.shape}")
        if b.shape != (w.shape[0],):
            raise UnsupportedShapeError(
                f"bias shape {b.shape} does not match weight rows {w.shape[0]}"
            )
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)

    @property
    def context_len(self) -> int:
        return self.weight.shape[1]

    @property
    def horizon(self) -> int:
        return self.weight.shape[0]


@dataclass(frozen=True)
class DLinearModel:
    """Two linear heads on a moving-average trend/seasonal decomposition."""

    seasonal: LinearLayer
    trend: LinearLayer
    kernel_size: int = DEFAULT_KERNEL

    def __post_init__(self):
        if self.seasonal.weight.shape != self.trend.weight.shape:
            raise UnsupportedShapeError("seasonal and trend heads must share shapes")
        k, length = self.kernel_size, self.seasonal.context_len
        if k < 1 or k % 2 == 0:
            raise UnsupportedShapeError(f"kernel_size must be odd and >= 1, got {k}")
        if k > 2 * length - 1:
            raise UnsupportedShapeError(
                f"kernel_size {k} too large for context length {length} (max {2 * length - 1})"
            )

    @property
    def context_len(self) -> int:
        return self.seasonal.context_len

    @property
    def horizon(self) -> int:
        return self.seasonal.horizon


@dataclass(frozen=True)
class FitsModel:
    """Frequency-domain core: truncated spectrum -> complex linear map ->
    real inverse transform at length L + T, scaled by (L + T)/L; the forecast
    is the last T samples of that length-(L + T) reconstruction.

    weight is ((L+T)/2 + 1) x (L/2 + 1) complex, bias is ((L+T)/2 + 1,) complex.
    Imaginary parts of the bias at components 0 and (L+T)/2 are inert: the
    inverse transform drops them.
    """

    context_len: int
    horizon: int
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        length, t = self.context_len, self.horizon
        if length % 2 != 0 or t % 2 != 0 or length < 2 or t < 2:
            raise UnsupportedShapeError(
                f"frequency core needs even context and horizon >= 2, got L={length}, T={t}"
            )
        w = np.asarray(self.weight, dtype=np.complex128)
        b = np.asarray(self.bias, dtype=np.complex128)
        rows, cols = (length + t) // 2 + 1, length // 2 + 1
        if w.shape != (rows, cols):
            raise UnsupportedShapeError(f"weight must be {rows}x{cols}, got {w.shape}")
        if b.shape != (rows,):
            raise UnsupportedShapeError(f"bias must have shape ({rows},), got {b.shape}")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "bias", b)


Core = Union[LinearLayer, DLinearModel, FitsModel]


# ---------------------------------------------------------------------------
# normalization wrappers


@dataclass(frozen=True)
class NoNorm:
    """Pass-through wrapper."""


@dataclass(frozen=True)
class InstanceNorm:
    """Center and scale by the window's own mean and population std; the
    inverse restores them on the forecast."""

    eps: float = DEFAULT_EPS


@dataclass(frozen=True)
class RevIN:
    """Instance normalization with a learnable affine stage.

    The normalized context is mapped through (x' - beta)/alpha before the
    core, and the core output through alpha*y + beta before denormalization.
    alpha and beta are scalars by default; per-position vectors are accepted,
    in which case alpha_out/beta_out (length T) must be supplied whenever the
    horizon differs from the context length.
    """

    eps: float = DEFAULT_EPS
    alpha: float | np.ndarray = 1.0
    beta: float | np.ndarray = 0.0
    alpha_out: np.ndarray | None = None
    beta_out: np.ndarray | None = None


@dataclass(frozen=True)
class NowNorm:
    """Subtract the last context value, add it back to every forecast entry."""


Normalization = Union[NoNorm, InstanceNorm, RevIN, NowNorm]


@dataclass(frozen=True)
class ForecastModel:
    """A core plus the wrapper it is trained and evaluated under."""

    core: Core
    norm: Normalization = field(default_factory=NoNorm)

    @property
    def context_len(self) -> int:
        return self.core.context_len

    @property
    def horizon(self) -> int:
        return self.core.horizon


def nlinear(layer: LinearLayer) -> ForecastModel:
    """Linear core under last-value normalization."""
    return ForecastModel(layer, NowNorm())


def rlinear(layer: LinearLayer, eps: float = DEFAULT_EPS,
            alpha: float = 1.0, beta: float = 0.0) -> ForecastModel:
    """Linear core under reversible instance normalization."""
    return ForecastModel(layer, RevIN(eps=eps, alpha=alpha, beta=beta))


def fits_in(core: FitsModel, eps: float = DEFAULT_EPS) -> ForecastModel:
    """Frequency core under instance normalization."""
    return ForecastModel(core, InstanceNorm(eps=eps))


# ---------------------------------------------------------------------------
# trend filter


def moving_average_trend(x: np.ndarray, kernel_size: int) -> np.ndarray:
    """Centered moving average with edge replication.

    The window is padded with (kernel_size - 1)/2 copies of its first and
    last value, so the output has the input's length.
    """
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise UnsupportedShapeError(f"expected a nonempty 1-d window, got shape {v.shape}")
    k = kernel_size
    if k < 1 or k % 2 == 0:
        raise UnsupportedShapeError(f"kernel_size must be odd and >= 1, got {k}")
    if k > 2 * v.size - 1:
        raise UnsupportedShapeError(
            f"kernel_size {k} too large for length {v.size} (max {2 * v.size - 1})"
        )
    if k == 1:
        return v.copy()
    pad = (k - 1) // 2
    padded = np.concatenate([np.repeat(v[0], pad), v, np.repeat(v[-1], pad)])
    return np.convolve(padded, np.full(k, 1.0 / k), mode="valid")


def _trend_batch(xs: np.ndarray, kernel_size: int) -> np.ndarray:
    """moving_average_trend over the rows of a matrix, via padded cumsum."""
    if kernel_size == 1:
        return xs.copy()
    pad = (kernel_size - 1) // 2
    padded = np.concatenate(
        [np.repeat(xs[:, :1], pad, axis=1), xs, np.repeat(xs[:, -1:], pad, axis=1)], axis=1
    )
    csum = np.cumsum(padded, axis=1)
    csum = np.concatenate([np.zeros((xs.shape[0], 1)), csum], axis=1)
    return (csum[:, kernel_size:] - csum[:, :-kernel_size]) / kernel_size


# ---------------------------------------------------------------------------
# forward

def _pop_std(xs: np.ndarray) -> np.ndarray:
    # population convention, ddof = 0
    return xs.std(axis=1)


def _resolve_out_affine(norm: RevIN):
    a_out = norm.alpha if norm.alpha_out is None else norm.alpha_out
    b_out = norm.beta if norm.beta_out is None else norm.beta_out
    return a_out, b_out


def _norm_in_batch(norm: Normalization, xs: np.ndarray):
    """Apply the wrapper's input side; returns (core input, context dict)."""
    if isinstance(norm, NoNorm):
        return xs, {}
    if isinstance(norm, InstanceNorm):
        mu = xs.mean(axis=1, keepdims=True)
        scale = (_pop_std(xs) + norm.eps)[:, None]
        return (xs - mu) / scale, {"mu": mu, "scale": scale}
    if isinstance(norm, RevIN):
        mu = xs.mean(axis=1, keepdims=True)
        scale = (_pop_std(xs) + norm.eps)[:, None]
        x1 = (xs - mu) / scale
        z = (x1 - norm.beta) / norm.alpha
        return z, {"mu": mu, "scale": scale, "x1": x1, "z": z}
    if isinstance(norm, NowNorm):
        last = xs[:, -1:]
        return xs - last, {"last": last}
    raise TypeError(f"unknown normalization {type(norm).__name__}")


def _norm_out_batch(norm: Normalization, ys: np.ndarray, ctx: dict) -> np.ndarray:
    """Apply the wrapper's output side to the core forecast."""
    if isinstance(norm, NoNorm):
        return ys
    if isinstance(norm, InstanceNorm):
        return ys * ctx["scale"] + ctx["mu"]
    if isinstance(norm, RevIN):
        a_out, b_out = _resolve_out_affine(norm)
        try:
            lifted = a_out * ys + b_out
        except ValueError as exc:
            raise UnsupportedShapeError(
                "RevIN vector alpha/beta do not broadcast to the horizon; "
                "supply alpha_out/beta_out of horizon length"
            ) from exc
        return lifted * ctx["scale"] + ctx["mu"]
    if isinstance(norm, NowNorm):
        return ys + ctx["last"]
    raise TypeError(f"unknown normalization {type(norm).__name__}")


def _core_forward_batch(core: Core, zs: np.ndarray) -> np.ndarray:
    if isinstance(core, LinearLayer):
        return zs @ core.weight.T + core.bias
    if isinstance(core, DLinearModel):
        trend = _trend_batch(zs, core.kernel_size)
        seasonal = zs - trend
        return (
            seasonal @ core.seasonal.weight.T
            + trend @ core.trend.weight.T
            + core.seasonal.bias
            + core.trend.bias
        )
    if isinstance(core, FitsModel):
        length, t = core.context_len, core.horizon
        n = length + t
        half_in = length // 2 + 1
        fwd = linalg.dft_matrix(length)[:half_in, :]  # truncated forward transform
        spectra = zs @ fwd.T
        mapped = spectra @ core.weight.T + core.bias
        # inverse at length n, vectorized over rows
        full = np.empty((zs.shape[0], n), dtype=np.complex128)
        half_out = n // 2
        full[:, 0] = mapped[:, 0].real
        full[:, 1:half_out] = mapped[:, 1:half_out]
        full[:, half_out] = mapped[:, half_out].real
        full[:, half_out + 1 :] = np.conj(mapped[:, half_out - 1 : 0 : -1])
        inv = np.conj(linalg.dft_matrix(n)) / n
        recon = (full @ inv.T) * (n / length)
        return recon.real[:, length:]
    raise TypeError(f"unknown core {type(core).__name__}")


def forward_batch(model: ForecastModel, xs: np.ndarray) -> np.ndarray:
    """Forecast a batch of context windows.

    Parameters
    ----------
    xs : ndarray, shape (N, L)

    Returns
    -------
    ndarray, shape (N, T)
    """
    a = np.asarray(xs, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != model.context_len:
        raise UnsupportedShapeError(
            f"expected batch of shape (N, {model.context_len}), got {a.shape}"
        )
    if not np.all(np.isfinite(a)):
        raise ValueError("input contains non-finite values")
    zs, ctx = _norm_in_batch(model.norm, a)
    ys = _core_forward_batch(model.core, zs)
    return _norm_out_batch(model.norm, ys, ctx)


def forward(model: ForecastModel, x: np.ndarray) -> np.ndarray:
    """Forecast a single context window of length L; returns length T."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise UnsupportedShapeError(f"expected a 1-d window, got shape {v.shape}")
    return forward_batch(model, v[None, :])[0]


# ---------------------------------------------------------------------------
# initialization


_ARCH_NAMES = (
    "linear",
    "dlinear",
    "fits",
    "nlinear",
    "rlinear",
    "linear+in",
    "dlinear+in",
    "fits+in",
)


def init_model(
    arch: str,
    context_len: int,
    horizon: int,
    seed: int,
    kernel_size: int = DEFAULT_KERNEL,
    eps: float = DEFAULT_EPS,
) -> ForecastModel:
    """Seeded random model of the named architecture.

    Real weights and biases draw from uniform(-1/sqrt(L), 1/sqrt(L)); complex
    parameters draw real and imaginary parts independently from the same law.
    RevIN starts at alpha = 1, beta = 0.
    """
    name = arch.strip().lower()
    if name not in _ARCH_NAMES:
        raise ValueError(f"unknown architecture {arch!r}; expected one of {_ARCH_NAMES}")
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(context_len)

    def real_layer() -> LinearLayer:
        w = rng.uniform(-bound, bound, size=(horizon, context_len))
        b = rng.uniform(-bound, bound, size=horizon)
        return LinearLayer(w, b)

    def freq_core() -> FitsModel:
        rows = (context_len + horizon) // 2 + 1
        cols = context_len // 2 + 1
        w = rng.uniform(-bound, bound, size=(rows, cols)) + 1j * rng.uniform(
            -bound, bound, size=(rows, cols)
        )
        b = rng.uniform(-bound, bound, size=rows) + 1j * rng.uniform(-bound, bound, size=rows)
        return FitsModel(context_len, horizon, w, b)

    if name == "linear":
        return ForecastModel(real_layer())
    if name == "dlinear":
        return ForecastModel(DLinearModel(real_layer(), real_layer(), kernel_size))
    if name == "fits":
        return ForecastModel(freq_core())
    if name == "nlinear":
        return nlinear(real_layer())
    if name == "rlinear":
        return rlinear(real_layer(), eps=eps)
    if name == "linear+in":
        return ForecastModel(real_layer(), InstanceNorm(eps=eps))
    if name == "dlinear+in":
        return ForecastModel(DLinearModel(real_layer(), real_layer(), kernel_size), InstanceNorm(eps=eps))
    return fits_in(freq_core(), eps=eps)


# ---------------------------------------------------------------------------
# parameter access (used by training and checkpoints)


def model_params(model: ForecastModel) -> dict[str, np.ndarray]:
    """Trainable parameters as a flat name -> float64 array mapping.

    Complex tensors are split into .re/.im entries.  Scalar RevIN parameters
    appear as 0-d arrays.
    """
    core = model.core
    params: dict[str, np.ndarray] = {}
    if isinstance(core, LinearLayer):
        params["weight"] = core.weight.copy()
        params["bias"] = core.bias.copy()
    elif isinstance(core, DLinearModel):
        params["seasonal.weight"] = core.seasonal.weight.copy()
        params["seasonal.bias"] = core.seasonal.bias.copy()
        params["trend.weight"] = core.trend.weight.copy()
        params["trend.bias"] = core.trend.bias.copy()
    elif isinstance(core, FitsModel):
        params["weight.re"] = core.weight.real.copy()
        params["weight.im"] = core.weight.imag.copy()
        params["bias.re"] = core.bias.real.copy()
        params["bias.im"] = core.bias.imag.copy()
    else:
        raise TypeError(f"unknown core {type(core).__name__}")
    if isinstance(model.norm, RevIN):
        params["norm.alpha"] = np.asarray(model.norm.alpha, dtype=np.float64).copy()
        params["norm.beta"] = np.asarray(model.norm.beta, dtype=np.float64).copy()
        if model.norm.alpha_out is not None:
            params["norm.alpha_out"] = np.asarray(model.norm.alpha_out, dtype=np.float64).copy()
        if model.norm.beta_out is not None:
            params["norm.beta_out"] = np.asarray(model.norm.beta_out, dtype=np.float64).copy()
    return params


def model_with_params(model: ForecastModel, params: dict[str, np.ndarray]) -> ForecastModel:
    """Rebuild a model of the same architecture from a parameter mapping."""
    core = model.core
    if isinstance(core, LinearLayer):
        new_core: Core = LinearLayer(params["weight"], params["bias"])
    elif isinstance(core, DLinearModel):
        new_core = DLinearModel(
            LinearLayer(params["seasonal.weight"], params["seasonal.bias"]),
            LinearLayer(params["trend.weight"], params["trend.bias"]),
            core.kernel_size,
        )
    elif isinstance(core, FitsModel):
        new_core = FitsModel(
            core.context_len,
            core.horizon,
            params["weight.re"] + 1j * params["weight.im"],
            params["bias.re"] + 1j * params["bias.im"],
        )
    else:
        raise TypeError(f"unknown core {type(core).__name__}")
    norm = model.norm
    if isinstance(norm, RevIN):
        alpha = params["norm.alpha"]
        beta = params["norm.beta"]
        norm = replace(
            norm,
            alpha=float(alpha) if alpha.ndim == 0 else alpha,
            beta=float(beta) if beta.ndim == 0 else beta,
            alpha_out=params.get("norm.alpha_out", norm.alpha_out),
            beta_out=params.get("norm.beta_out", norm.beta_out),
        )
    return ForecastModel(new_core, norm)

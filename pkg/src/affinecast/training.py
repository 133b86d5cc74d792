"""Mini-batch Adam training with exact analytic gradients.

No autodiff: every architecture's backward pass is written out by hand.
Complex parameters of the frequency core are treated as independent real and
imaginary parts, and their chain rule runs through the real matrix
representations of the truncated transforms, so both the forward map and its
adjoint stay explicit dense linear algebra.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import analysis, models
from .errors import EmptyDataError, UnsupportedShapeError
from .models import (
    DLinearModel,
    FitsModel,
    ForecastModel,
    InstanceNorm,
    LinearLayer,
    NoNorm,
    NowNorm,
    RevIN,
    forward_batch,
    model_params,
    model_with_params,
)


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 5e-4
    batch_size: int = 128
    epochs: int = 50
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    early_stop: bool = True  # return the parameters from the best validation epoch


@dataclass
class TrainTrace:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    cosine_to_ref: list[float] | None = None
    best_epoch: int = -1


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean of squared elementwise differences."""
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise UnsupportedShapeError(f"shape mismatch: {p.shape} vs {t.shape}")
    if p.size == 0:
        raise EmptyDataError("mse of empty arrays is undefined")
    d = p - t
    return float(np.mean(d * d))


# ---------------------------------------------------------------------------
# backward passes

_fits_mats: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _fits_real_mats(length: int, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    key = (length, horizon)
    mats = _fits_mats.get(key)
    if mats is None:
        mats = (
            analysis.rft_real_matrix(length),  # (L+2, L)
            analysis.irft_real_matrix(length + horizon),  # (n, n+2)
        )
        _fits_mats[key] = mats
    return mats


_trend_mats: dict[tuple[int, int], np.ndarray] = {}


def _trend_matrix(length: int, kernel: int) -> np.ndarray:
    key = (length, kernel)
    m = _trend_mats.get(key)
    if m is None:
        m = analysis.moving_average_matrix(length, kernel)
        _trend_mats[key] = m
    return m


def _core_backward(core, zs: np.ndarray, upstream: np.ndarray):
    """Parameter gradients and input gradient of a core given upstream
    d(loss)/d(core output)."""
    grads: dict[str, np.ndarray] = {}
    if isinstance(core, LinearLayer):
        grads["weight"] = upstream.T @ zs
        grads["bias"] = upstream.sum(axis=0)
        gz = upstream @ core.weight
        return grads, gz
    if isinstance(core, DLinearModel):
        trend = models._trend_batch(zs, core.kernel_size)
        seasonal = zs - trend
        grads["seasonal.weight"] = upstream.T @ seasonal
        grads["seasonal.bias"] = upstream.sum(axis=0)
        grads["trend.weight"] = upstream.T @ trend
        grads["trend.bias"] = upstream.sum(axis=0)
        us = upstream @ core.seasonal.weight
        ut = upstream @ core.trend.weight
        gz = us + (ut - us) @ _trend_matrix(core.context_len, core.kernel_size)
        return grads, gz
    if isinstance(core, FitsModel):
        length, t = core.context_len, core.horizon
        n = length + t
        half_in, half_out = length // 2 + 1, n // 2 + 1
        rr, ri = _fits_real_mats(length, t)
        scale = n / length
        spec_stack = zs @ rr.T  # (N, L+2): stacked re/im of input spectra
        spectra = spec_stack[:, :half_in] + 1j * spec_stack[:, half_in:]
        u_full = np.zeros((zs.shape[0], n))
        u_full[:, length:] = upstream
        gq_stack = u_full @ (scale * ri)  # (N, n+2)
        gq = gq_stack[:, :half_out] + 1j * gq_stack[:, half_out:]
        gw = gq.T @ np.conj(spectra)  # packed d/dRe + i d/dIm
        grads["weight.re"] = gw.real
        grads["weight.im"] = gw.imag
        grads["bias.re"] = gq_stack[:, :half_out].sum(axis=0)
        grads["bias.im"] = gq_stack[:, half_out:].sum(axis=0)
        h = gq @ np.conj(core.weight)  # (N, L/2+1)
        gz = np.concatenate([h.real, h.imag], axis=1) @ rr
        return grads, gz
    raise TypeError(f"unknown core {type(core).__name__}")


def gradients(model: ForecastModel, xs: np.ndarray, ys: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradient of mean-squared loss over the batch w.r.t. every
    trainable parameter; keys match model_params."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise UnsupportedShapeError(f"bad batch shapes {x.shape}, {y.shape}")
    if x.shape[0] == 0:
        raise EmptyDataError("cannot take gradients on an empty batch")
    n_rows, horizon = y.shape
    norm = model.norm
    zs, ctx = models._norm_in_batch(norm, x)
    yc = models._core_forward_batch(model.core, zs)
    out = models._norm_out_batch(norm, yc, ctx)
    g_out = (2.0 / (n_rows * horizon)) * (out - y)

    grads: dict[str, np.ndarray] = {}
    if isinstance(norm, (NoNorm, NowNorm)):
        upstream = g_out
    elif isinstance(norm, InstanceNorm):
        upstream = g_out * ctx["scale"]
    elif isinstance(norm, RevIN):
        a_out, b_out = models._resolve_out_affine(norm)
        upstream = g_out * ctx["scale"] * a_out
    else:
        raise TypeError(f"unknown normalization {type(norm).__name__}")

    core_grads, gz = _core_backward(model.core, zs, upstream)
    grads.update(core_grads)

    if isinstance(norm, RevIN):
        scale = ctx["scale"]
        z = ctx["z"]
        scaled_g = g_out * scale
        alpha = np.asarray(norm.alpha, dtype=np.float64)
        beta = np.asarray(norm.beta, dtype=np.float64)
        # output-side partials
        ga_out = scaled_g * yc
        gb_out = scaled_g
        # input-side partials (through z = (x1 - beta)/alpha)
        ga_in = gz * (-z / norm.alpha)
        gb_in = gz * (-1.0 / norm.alpha)

        def reduce_to(ref: np.ndarray, contrib: np.ndarray) -> np.ndarray:
            # collapse a (N, d) contribution to the parameter's shape
            return np.asarray(contrib.sum()) if ref.ndim == 0 else contrib.sum(axis=0)

        # a parameter reused on the output side (no separate *_out) collects
        # both contributions; tied vectors only arise when horizon == context
        if norm.alpha_out is None:
            grads["norm.alpha"] = reduce_to(alpha, ga_out) + reduce_to(alpha, ga_in)
        else:
            grads["norm.alpha"] = reduce_to(alpha, ga_in)
            grads["norm.alpha_out"] = reduce_to(np.asarray(a_out), ga_out)
        if norm.beta_out is None:
            grads["norm.beta"] = reduce_to(beta, gb_out) + reduce_to(beta, gb_in)
        else:
            grads["norm.beta"] = reduce_to(beta, gb_in)
            grads["norm.beta_out"] = reduce_to(np.asarray(b_out), gb_out)
    return grads


# ---------------------------------------------------------------------------
# optimizer


class _Adam:
    def __init__(self, cfg: TrainConfig, params: dict[str, np.ndarray]):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.adam_beta1**self.t
        bc2 = 1.0 - c.adam_beta2**self.t
        out: dict[str, np.ndarray] = {}
        for k, p in params.items():
            g = grads[k]
            self.m[k] = c.adam_beta1 * self.m[k] + (1.0 - c.adam_beta1) * g
            self.v[k] = c.adam_beta2 * self.v[k] + (1.0 - c.adam_beta2) * (g * g)
            step = c.lr * (self.m[k] / bc1) / (np.sqrt(self.v[k] / bc2) + c.adam_eps)
            out[k] = p - step
        return out


def batched_mse(model: ForecastModel, xs: np.ndarray, ys: np.ndarray, chunk: int = 8192) -> float:
    total = 0.0
    for start in range(0, xs.shape[0], chunk):
        pred = forward_batch(model, xs[start : start + chunk])
        d = pred - ys[start : start + chunk]
        total += float(np.sum(d * d))
    return total / ys.size


def train(
    model: ForecastModel,
    dataset,
    cfg: TrainConfig,
    weight_ref: np.ndarray | None = None,
    extractor=None,
) -> tuple[ForecastModel, TrainTrace]:
    """Mini-batch Adam on the train split with per-epoch validation.

    dataset must expose .train and .val, each with X (N, L) and Y (N, T).
    When early_stop is set the returned model carries the parameters of the
    epoch with the lowest validation loss (ties resolved to the earliest
    epoch); otherwise the final parameters are returned.

    weight_ref plus extractor enable convergence tracking: after each epoch
    extractor(model) must return a weight matrix, and its cosine similarity
    to weight_ref is recorded.
    """
    xtr, ytr = np.asarray(dataset.train.X, dtype=np.float64), np.asarray(dataset.train.Y, dtype=np.float64)
    xva, yva = np.asarray(dataset.val.X, dtype=np.float64), np.asarray(dataset.val.Y, dtype=np.float64)
    if xtr.shape[0] == 0:
        raise EmptyDataError("training split is empty")
    if xva.shape[0] == 0:
        raise EmptyDataError("validation split is empty")
    if cfg.batch_size < 1 or cfg.epochs < 0 or cfg.lr < 0:
        raise ValueError("batch_size must be >= 1, epochs and lr must be >= 0")
    if (weight_ref is None) != (extractor is None):
        raise ValueError("weight_ref and extractor must be supplied together")

    params = model_params(model)
    opt = _Adam(cfg, params)
    rng = np.random.default_rng(cfg.seed)
    trace = TrainTrace(cosine_to_ref=[] if weight_ref is not None else None)
    best_val = np.inf
    best_params = {k: v.copy() for k, v in params.items()}
    current = model

    for epoch in range(cfg.epochs):
        order = rng.permutation(xtr.shape[0])
        for start in range(0, order.size, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]  # short final batch kept
            grads = gradients(current, xtr[idx], ytr[idx])
            params = opt.step(params, grads)
            current = model_with_params(model, params)
        train_loss = batched_mse(current, xtr, ytr)
        val_loss = batched_mse(current, xva, yva)
        trace.train_mse.append(train_loss)
        trace.val_mse.append(val_loss)
        if weight_ref is not None:
            trace.cosine_to_ref.append(
                analysis.cosine_similarity(extractor(current), weight_ref)
            )
        if val_loss < best_val:
            best_val = val_loss
            trace.best_epoch = epoch
            best_params = {k: v.copy() for k, v in params.items()}

    if cfg.early_stop and cfg.epochs > 0:
        return model_with_params(model, best_params), trace
    return current, trace


def write_trace_csv(trace: TrainTrace, path) -> None:
    """One row per epoch: epoch, train_mse, val_mse, cosine_to_ols."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_mse", "val_mse", "cosine_to_ols"])
        for i, (tr, va) in enumerate(zip(trace.train_mse, trace.val_mse)):
            cos = "" if trace.cosine_to_ref is None else repr(trace.cosine_to_ref[i])
            writer.writerow([i, repr(tr), repr(va), cos])


# ---------------------------------------------------------------------------
# bias-path parameterization demo


@dataclass(frozen=True)
class BiasLrDemo:
    naive_delta: np.ndarray  # displacement of a directly parameterized bias
    fits_delta: np.ndarray  # displacement of the frequency-parameterized bias

    @property
    def ratio(self) -> float:
        denom = float(np.linalg.norm(self.naive_delta))
        return float(np.linalg.norm(self.fits_delta)) / denom if denom else 0.0


def effective_bias_lr_demo(
    context_len: int,
    horizon: int,
    steps: int,
    lr: float = 1.0,
    seed: int = 0,
    gradient_sequence: np.ndarray | None = None,
) -> BiasLrDemo:
    """Push the same loss-gradient sequence through the two bias
    parameterizations under plain gradient descent.

    A directly parameterized bias moves by lr * g each step.  A bias living
    behind the frequency core's spectral parameters moves by lr * M M^T g,
    where M is the scaled bias-path operator, because the parameter gradient
    is M^T g and the output displacement is M times the parameter step.
    Returns both total displacements in output space.
    """
    n = context_len + horizon
    if gradient_sequence is None:
        gradient_sequence = np.random.default_rng(seed).standard_normal((steps, n))
    else:
        gradient_sequence = np.asarray(gradient_sequence, dtype=np.float64)
        if gradient_sequence.shape != (steps, n):
            raise UnsupportedShapeError(
                f"gradient_sequence must have shape ({steps}, {n}), got {gradient_sequence.shape}"
            )
    m = analysis.fits_bias_operator(context_len, horizon)
    naive = np.zeros(n)
    spectral = np.zeros(m.shape[1])
    for g in gradient_sequence:
        naive -= lr * g
        spectral -= lr * (m.T @ g)
    return BiasLrDemo(naive_delta=naive, fits_delta=m @ spectral)

"""Series ingestion, chronological splits, sliding windows, synthetic data.

Channels are treated independently throughout: windowing pools every
channel's windows into one design matrix (rows tagged with their channel),
which is how channel-independent models with shared weights are fit.
Normalization statistics always come from the training rows alone, with the
population std convention.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateDataError,
    EmptyDataError,
    IngestionError,
    UnsupportedShapeError,
)
from .solvers import DesignPair


@dataclass(frozen=True)
class RawSeries:
    """A named multichannel series: values has shape (rows, channels)."""

    name: str
    values: np.ndarray
    channel_names: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] == 0 or v.shape[1] == 0:
            raise UnsupportedShapeError(f"series values must be (rows, channels), got {v.shape}")
        if len(self.channel_names) != v.shape[1]:
            raise UnsupportedShapeError(
                f"{len(self.channel_names)} channel names for {v.shape[1]} channels"
            )
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    """Contiguous chronological row counts: train, then val, then test."""

    train: int
    val: int
    test: int

    def __post_init__(self):
        if min(self.train, self.val, self.test) < 1:
            raise UnsupportedShapeError(f"all split sizes must be >= 1, got {self}")

    @property
    def total(self) -> int:
        return self.train + self.val + self.test

    def bounds(self) -> tuple[tuple[int, int], tuple[int, int], tuple[int, int]]:
        a, b = self.train, self.train + self.val
        return (0, a), (a, b), (b, b + self.test)


@dataclass(frozen=True)
class NormStats:
    """Per-channel training-split mean and population std."""

    mean: np.ndarray
    std: np.ndarray


@dataclass(frozen=True)
class WindowPair:
    """Pooled design matrix for one split; channel_index tags each row."""

    X: np.ndarray  # (N, L)
    Y: np.ndarray  # (N, T)
    channel_index: np.ndarray  # (N,)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def channel(self, c: int) -> DesignPair:
        mask = self.channel_index == c
        return DesignPair(self.X[mask], self.Y[mask])

    def design(self) -> DesignPair:
        return DesignPair(self.X, self.Y)


@dataclass(frozen=True)
class WindowedDataset:
    context_len: int
    horizon: int
    train: WindowPair
    val: WindowPair
    test: WindowPair
    stats: NormStats | None = None


# ---------------------------------------------------------------------------
# named-dataset registry

# canonical chronological row counts (train, val, test) for the benchmark sets
DATASET_SPLITS: dict[str, SplitSpec] = {
    "ETTh1": SplitSpec(8545, 2881, 2881),
    "ETTh2": SplitSpec(8545, 2881, 2881),
    "ETTm1": SplitSpec(34465, 11521, 11521),
    "ETTm2": SplitSpec(34465, 11521, 11521),
    "ECL": SplitSpec(18317, 2633, 5261),
    "Weather": SplitSpec(36792, 5271, 10540),
    "Traffic": SplitSpec(12185, 1757, 3509),
    "Exchange": SplitSpec(5120, 665, 1422),
}


def default_split(rows: int) -> SplitSpec:
    """70/10/20 chronological split for unregistered datasets."""
    train = int(rows * 0.7)
    test = int(rows * 0.2)
    val = rows - train - test
    return SplitSpec(train, val, test)


def split_for(name: str, rows: int) -> SplitSpec:
    """Registered split when the name is known, else 70/10/20.

    A registered dataset whose file has a different row count keeps the
    registered boundaries (excess rows are ignored) but warns, since that
    usually means a truncated or variant file.
    """
    spec = DATASET_SPLITS.get(name)
    if spec is None:
        return default_split(rows)
    if rows < spec.total:
        raise UnsupportedShapeError(
            f"dataset {name} needs at least {spec.total} rows for its registered split, got {rows}"
        )
    if rows != spec.total:
        warnings.warn(
            f"dataset {name}: file has {rows} rows, registered split covers {spec.total}; "
            "extra rows are ignored",
            stacklevel=2,
        )
    return spec


# ---------------------------------------------------------------------------
# ingestion


def load_csv(path, name: str | None = None) -> RawSeries:
    """Load a delimited series file.

    Header row required.  A leading date/timestamp column is detected by its
    header (or a non-numeric first data value) and skipped; all remaining
    columns must parse as finite floats.  Errors name the offending row.
    """
    path = str(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestionError(f"{path}: file is empty, header row required") from None
        rows = [r for r in reader if r]
    if not rows:
        raise IngestionError(f"{path}: no data rows after the header")

    first_header = header[0].strip().lower()
    skip_first = first_header in {"date", "time", "timestamp", "datetime", ""}
    if not skip_first:
        try:
            float(rows[0][0])
        except ValueError:
            skip_first = True
    channel_names = tuple(h.strip() for h in (header[1:] if skip_first else header))
    if not channel_names:
        raise IngestionError(f"{path}: no numeric channels found")

    width = len(header)
    values = np.empty((len(rows), len(channel_names)))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise IngestionError(
                f"{path}: row {i + 2} has {len(row)} fields, expected {width}"
            )
        fields = row[1:] if skip_first else row
        for j, field in enumerate(fields):
            try:
                v = float(field)
            except ValueError:
                raise IngestionError(
                    f"{path}: row {i + 2}, column {channel_names[j]!r}: "
                    f"cannot parse {field!r} as a number"
                ) from None
            if not math.isfinite(v):
                raise IngestionError(
                    f"{path}: row {i + 2}, column {channel_names[j]!r}: non-finite value {field!r}"
                )
            values[i, j] = v
    return RawSeries(name or path, values, channel_names)


# ---------------------------------------------------------------------------
# normalization and windowing


def zscore_fit_apply(series: RawSeries, split: SplitSpec) -> tuple[RawSeries, NormStats]:
    """Standardize every channel by its training-split mean and population std."""
    if split.total > series.rows:
        raise UnsupportedShapeError(
            f"split needs {split.total} rows, series {series.name} has {series.rows}"
        )
    train = series.values[: split.train]
    mean = train.mean(axis=0)
    std = train.std(axis=0)  # population convention
    zero = np.nonzero(std == 0.0)[0]
    if zero.size:
        raise DegenerateDataError(
            f"channel {series.channel_names[zero[0]]!r} is constant on the training split"
        )
    normalized = (series.values - mean) / std
    return RawSeries(series.name, normalized, series.channel_names), NormStats(mean, std)


def make_windows(
    series: RawSeries,
    split: SplitSpec,
    context_len: int,
    horizon: int,
    stride: int = 1,
    stats: NormStats | None = None,
) -> WindowedDataset:
    """Slice each split into (context, target) window pairs, pooled over channels.

    Windows never cross a split boundary; each split must hold at least
    context_len + horizon rows.  With stride 1 a split of length S yields
    S - context_len - horizon + 1 windows per channel.
    """
    if context_len < 1 or horizon < 1 or stride < 1:
        raise UnsupportedShapeError(
            f"context_len, horizon, stride must be >= 1, got {context_len}, {horizon}, {stride}"
        )
    if split.total > series.rows:
        raise UnsupportedShapeError(
            f"split needs {split.total} rows, series {series.name} has {series.rows}"
        )
    need = context_len + horizon
    pairs = []
    for lo, hi in split.bounds():
        seg_len = hi - lo
        if seg_len < need:
            raise UnsupportedShapeError(
                f"split segment of {seg_len} rows cannot hold a window of "
                f"{context_len} + {horizon} rows"
            )
        xs, ys, tags = [], [], []
        starts = np.arange(0, seg_len - need + 1, stride)
        for c in range(series.channels):
            col = series.values[lo:hi, c]
            ctx_view = np.lib.stride_tricks.sliding_window_view(col, context_len)
            tgt_view = np.lib.stride_tricks.sliding_window_view(col, horizon)
            xs.append(ctx_view[starts])
            ys.append(tgt_view[starts + context_len])
            tags.append(np.full(starts.size, c, dtype=np.int64))
        pairs.append(
            WindowPair(
                np.ascontiguousarray(np.concatenate(xs)),
                np.ascontiguousarray(np.concatenate(ys)),
                np.concatenate(tags),
            )
        )
    return WindowedDataset(context_len, horizon, pairs[0], pairs[1], pairs[2], stats)


# ---------------------------------------------------------------------------
# synthetic generators


@dataclass(frozen=True)
class SyntheticAffine:
    """Design pair drawn from a known affine ground truth."""

    X: np.ndarray
    Y: np.ndarray
    weight: np.ndarray
    bias: np.ndarray

    def design_pair(self) -> DesignPair:
        return DesignPair(self.X, self.Y)


def synth_affine(
    context_len: int, horizon: int, n: int, noise_std: float, seed: int
) -> SyntheticAffine:
    """Gaussian contexts mapped through a random affine map plus noise."""
    if n < 1:
        raise EmptyDataError(f"need at least one sample, got {n}")
    rng = np.random.default_rng(seed)
    weight = rng.standard_normal((horizon, context_len))
    bias = rng.standard_normal(horizon)
    x = rng.standard_normal((n, context_len))
    y = x @ weight.T + bias
    if noise_std > 0:
        y = y + noise_std * rng.standard_normal(y.shape)
    return SyntheticAffine(x, y, weight, bias)


def synth_ar_series(
    length: int,
    channels: int,
    coeffs,
    seed: int,
    noise_std: float = 1.0,
    innovations: str = "gaussian",
    skew_scale: float = 0.75,
    name: str = "synthetic-ar",
) -> RawSeries:
    """Autoregressive series, one independent process per channel.

    coeffs are the AR lag coefficients (most recent lag first).  The
    companion-matrix spectral radius must be below one.  innovations may be
    "gaussian" or "lognormal"; the lognormal option draws centered
    exp(skew_scale * z) shocks, giving positively skewed bursts whose local
    variance and local level move together.
    """
    phi = np.asarray(coeffs, dtype=np.float64)
    if phi.ndim != 1 or phi.size == 0:
        raise UnsupportedShapeError("coeffs must be a nonempty 1-d sequence")
    if length < 1 or channels < 1:
        raise UnsupportedShapeError(f"need positive length and channels, got {length}, {channels}")
    p = phi.size
    companion = np.zeros((p, p))
    companion[0] = phi
    if p > 1:
        companion[1:, :-1] = np.eye(p - 1)
    radius = float(np.max(np.abs(np.linalg.eigvals(companion))))
    if radius >= 1.0:
        raise ValueError(f"AR coefficients are unstable: spectral radius {radius:.4f} >= 1")
    if innovations not in ("gaussian", "lognormal"):
        raise ValueError(f"unknown innovations kind {innovations!r}")

    rng = np.random.default_rng(seed)
    burn = 100 + 10 * p
    total = length + burn
    out = np.empty((length, channels))
    for c in range(channels):
        if innovations == "gaussian":
            shocks = rng.standard_normal(total)
        else:
            raw = np.exp(skew_scale * rng.standard_normal(total))
            shocks = raw - np.exp(0.5 * skew_scale**2)  # exact mean of the draw law
        shocks *= noise_std
        x = np.zeros(total)
        for t in range(total):
            acc = shocks[t]
            for k in range(min(p, t)):
                acc += phi[k] * x[t - 1 - k]
            x[t] = acc
        out[:, c] = x[burn:]
    names = tuple(f"ch{c}" for c in range(channels))
    return RawSeries(name, out, names)

"""Feature extraction from raw byte series.

Three extractors:

* bigram_histogram      - normalized frequency of all 65536 byte bigrams
* endianness_signatures - the four bigrams whose relative frequencies
                          discriminate byte order: 0xfffe, 0xfeff,
                          0x0001, 0x0100
* autocorrelation_feature - (f(1), ..., f(l)), each f(k) the Pearson
                          correlation between the byte series and itself
                          shifted by k; periodic instruction streams peak
                          at multiples of the instruction width in bytes

All extractors are pure functions of (bytes, parameters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, TextIO

import numpy as np

from .corpus import BinarySample, CorpusManifest, IsaLabel
from .errors import IsaTraitsError, LagTooLarge, SampleTooShort, WindowTooShort

BIGRAM_DIM = 256 * 256
SIGNATURE_BIGRAMS = (0xFFFE, 0xFEFF, 0x0001, 0x0100)

BIGRAMS = "bigrams"
ENDSIG = "endsig"
AUTOCORR = "autocorr"
FEATURE_NAMES = (BIGRAMS, ENDSIG, AUTOCORR)


@dataclass(frozen=True)
class FeatureVector:
    """One extractor's output for one sample. lag_param is set only for
    the autocorrelation feature."""

    feature_name: str
    values: np.ndarray
    lag_param: int | None = None

    def __len__(self) -> int:
        return int(self.values.size)


@dataclass(frozen=True)
class LaggedWindowPair:
    """Equal-length leading/trailing windows of a series under some lag."""

    x: np.ndarray
    y: np.ndarray
    n: int

    def __post_init__(self):
        if len(self.x) != self.n or len(self.y) != self.n:
            raise ValueError(f"window lengths {len(self.x)}/{len(self.y)} do not match n={self.n}")

    @classmethod
    def from_series(cls, series: np.ndarray, lag: int) -> "LaggedWindowPair":
        n = len(series) - lag
        return cls(series[:n], series[lag:], n)


def _bigram_counts(data: bytes) -> np.ndarray:
    arr = np.frombuffer(data, dtype=np.uint8)
    idx = (arr[:-1].astype(np.int32) << 8) | arr[1:]
    return np.bincount(idx, minlength=BIGRAM_DIM)


def bigram_histogram(sample: BinarySample) -> FeatureVector:
    """Overlapping adjacent byte pairs counted into bins 256*b0 + b1 and
    normalized by the bigram count, so values sum to 1."""
    if len(sample.data) < 2:
        raise SampleTooShort(f"bigram extraction needs >= 2 bytes, got {len(sample.data)}")
    counts = _bigram_counts(sample.data)
    values = counts.astype(np.float64) / (len(sample.data) - 1)
    return FeatureVector(BIGRAMS, values)


def endianness_signatures(sample: BinarySample) -> FeatureVector:
    """The four signature bins of bigram_histogram, in the fixed order
    (0xfffe, 0xfeff, 0x0001, 0x0100)."""
    if len(sample.data) < 2:
        raise SampleTooShort(f"bigram extraction needs >= 2 bytes, got {len(sample.data)}")
    counts = _bigram_counts(sample.data)
    values = counts[list(SIGNATURE_BIGRAMS)].astype(np.float64) / (len(sample.data) - 1)
    return FeatureVector(ENDSIG, values)


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    # Raw-moment form: r = (n*Sxy - Sx*Sy) / sqrt((n*Sxx - Sx^2)(n*Syy - Sy^2)).
    # Zero-variance windows make the denominator vanish; by convention that
    # yields 0.0 (no linear-relationship evidence) instead of an error.
    n = x.size
    sx = float(x.sum())
    sy = float(y.sum())
    sxx = float(x @ x)
    syy = float(y @ y)
    sxy = float(x @ y)
    dx = n * sxx - sx * sx
    dy = n * syy - sy * sy
    if dx <= 0.0 or dy <= 0.0:
        return 0.0
    r = (n * sxy - sx * sy) / math.sqrt(dx * dy)
    return min(1.0, max(-1.0, r))


def pearson_r(pair: LaggedWindowPair) -> float:
    """Pearson correlation of the two windows; 0.0 when either window has
    zero variance."""
    if pair.n < 2:
        raise WindowTooShort(f"pearson needs windows of >= 2 samples, got {pair.n}")
    x = np.asarray(pair.x, dtype=np.float64)
    y = np.asarray(pair.y, dtype=np.float64)
    return _pearson(x, y)


def _byte_series(sample: BinarySample) -> np.ndarray:
    return np.frombuffer(sample.data, dtype=np.uint8).astype(np.float64)


def autocorr_at_lag(sample: BinarySample, k: int) -> float:
    """f(k): correlation between the series and itself shifted by k bytes,
    both windows of length len(bytes) - k."""
    if k < 1:
        raise ValueError(f"lag must be >= 1, got {k}")
    n = len(sample.data)
    if k > n - 2:
        raise LagTooLarge(f"lag {k} needs a sample of > {k + 1} bytes, got {n}")
    series = _byte_series(sample)
    return _pearson(series[: n - k], series[k:])


def autocorrelation_feature(sample: BinarySample, l: int) -> FeatureVector:
    """The ordered vector (f(1), ..., f(l))."""
    if l < 1:
        raise ValueError(f"lag parameter must be >= 1, got {l}")
    n = len(sample.data)
    if n < l + 2:
        raise SampleTooShort(f"autocorrelation with lag {l} needs >= {l + 2} bytes, got {n}")
    series = _byte_series(sample)
    values = np.empty(l, dtype=np.float64)
    for k in range(1, l + 1):
        values[k - 1] = _pearson(series[: n - k], series[k:])
    return FeatureVector(AUTOCORR, values, lag_param=l)


def mean_curve_by_class(
    manifest: CorpusManifest,
    l: int,
    class_of: Callable[[IsaLabel], str | None],
) -> dict[str, np.ndarray]:
    """Element-wise mean autocorrelation vector per class.

    class_of maps an IsaLabel to a class name, or None to exclude the
    ISA. Classes with no members are omitted. Summation runs in manifest
    order so results are bit-for-bit reproducible.
    """
    sums: dict[str, np.ndarray] = {}
    counts: dict[str, int] = {}
    for ref in manifest.samples:
        klass = class_of(manifest.label_of(ref))
        if klass is None:
            continue
        try:
            vec = autocorrelation_feature(ref.load(), l)
        except IsaTraitsError as exc:
            raise type(exc)(f"{ref.source_path}: {exc}") from exc
        if klass not in sums:
            sums[klass] = np.zeros(l, dtype=np.float64)
            counts[klass] = 0
        sums[klass] += vec.values
        counts[klass] += 1
    return {klass: sums[klass] / counts[klass] for klass in sums}


def write_feature_csv(rows: Iterable[tuple[str, str, FeatureVector]], fh: TextIO) -> None:
    """Serialize (sample_path, isa, vector) rows as
    sample_path,isa,feature_name,v0,v1,... for external plotting."""
    for path, isa, vec in rows:
        cells = [path, isa, vec.feature_name]
        cells.extend(repr(float(v)) for v in vec.values)
        fh.write(",".join(cells) + "\n")

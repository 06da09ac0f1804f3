"""Loading, preprocessing, splitting and synthesizing datasets.

Three protocols are supported:

* one long 1D record (>= 12000 samples) cut into twelve standardized
  1000-sample segments, 6/2/4 for train/validation/test;
* a table of fixed-length 1D segments with class labels, min-max
  normalized globally and split 76/12/12;
* IDX image/label files (the MNIST family), scaled to [0, 1].
"""

import csv
import gzip
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, FormatError, InvalidArgumentError, ParseError

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class DatasetSplit:
    train: list
    validation: list
    test: list
    train_labels: list | None = None
    validation_labels: list | None = None
    test_labels: list | None = None
    source: str = ""
    preprocessing: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def labeled(self):
        return self.train_labels is not None


# -- plain signals -----------------------------------------------------------


def load_signal_csv(path):
    """Read a 1D signal stored one value per line or as a single comma-separated row."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            for token in line.split(","):
                token = token.strip()
                try:
                    values.append(float(token))
                except ValueError:
                    raise ParseError(f"cannot parse {token!r} as a number", lineno) from None
    if not values:
        raise DegenerateInputError(f"{path}: no values")
    return np.array(values)


def save_signal_csv(signal, path):
    with open(path, "w") as fh:
        fh.writelines(format(v, ".17g") + "\n" for v in np.asarray(signal, dtype=np.float64).ravel())


def standardize(segment):
    segment = np.asarray(segment, dtype=np.float64)
    std = segment.std()
    if std == 0:
        raise DegenerateInputError("segment has zero variance")
    return (segment - segment.mean()) / std


def physionet_protocol_split(signal, segment_length=1000, counts=(6, 2, 4)):
    """Cut the first 12 x 1000 samples into standardized train/validation/test segments."""
    signal = np.asarray(signal, dtype=np.float64).ravel()
    needed = segment_length * sum(counts)
    if signal.size < needed:
        raise InvalidArgumentError(f"need at least {needed} samples, got {signal.size}")
    segments = [standardize(s) for s in signal[:needed].reshape(sum(counts), segment_length)]
    a, b = counts[0], counts[0] + counts[1]
    return DatasetSplit(
        segments[:a], segments[a:b], segments[b:], source="signal", preprocessing="segment-standardized"
    )


def minmax_normalize(examples):
    """Scale every example by one global min and max into [0, 1]."""
    arrays = [np.asarray(e, dtype=np.float64) for e in examples]
    if not arrays:
        raise InvalidArgumentError("no examples to normalize")
    lo = min(a.min() for a in arrays)
    hi = max(a.max() for a in arrays)
    if hi == lo:
        raise DegenerateInputError("global max equals global min")
    return [(a - lo) / (hi - lo) for a in arrays]


# -- labeled 1D segments (UCI epilepsy layout) --------------------------------


def load_labeled_segments_csv(path):
    """Rows of ``[id,] v_1..v_L, label``; a non-numeric first column is dropped as an identifier.

    A header row (non-numeric last column) is skipped.
    """
    examples, labels = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                label = int(float(row[-1]))
            except ValueError:
                if lineno == 1:
                    continue
                raise ParseError(f"label {row[-1]!r} is not an integer", lineno) from None
            cells = row[:-1]
            try:
                float(cells[0])
            except ValueError:
                cells = cells[1:]
            try:
                examples.append(np.array([float(c) for c in cells]))
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            labels.append(label)
    if not examples:
        raise DegenerateInputError(f"{path}: no rows")
    if len({e.size for e in examples}) != 1:
        raise FormatError("rows have differing numbers of samples")
    return examples, labels


def merge_epilepsy_classes(labels):
    """Five classes to three: 1 -> 0 (seizure), {2, 3} -> 1 (tumor), {4, 5} -> 2 (eyes)."""
    mapping = {1: 0, 2: 1, 3: 1, 4: 2, 5: 2}
    try:
        return [mapping[int(y)] for y in labels]
    except KeyError as exc:
        raise InvalidArgumentError(f"unexpected class label {exc.args[0]}") from None


def fractional_split(examples, labels=None, fractions=(0.76, 0.12, 0.12), seed=0, source="", preprocessing=""):
    """Shuffle with ``seed`` and partition by ``fractions``; the test part takes the remainder."""
    n = len(examples)
    order = np.random.default_rng(seed).permutation(n)
    a = int(round(fractions[0] * n))
    b = a + int(round(fractions[1] * n))
    parts = order[:a], order[a:b], order[b:]
    pick = lambda seq, idx: [seq[i] for i in idx]  # noqa: E731
    split = DatasetSplit(*(pick(examples, p) for p in parts), source=source, preprocessing=preprocessing)
    if labels is not None:
        split.train_labels, split.validation_labels, split.test_labels = (pick(labels, p) for p in parts)
    return split


def epilepsy_protocol_split(path, seed=0):
    examples, labels = load_labeled_segments_csv(path)
    return fractional_split(
        minmax_normalize(examples),
        merge_epilepsy_classes(labels),
        seed=seed,
        source=str(path),
        preprocessing="global-minmax",
    )


# -- IDX ---------------------------------------------------------------------


def _read_idx(path, magic):
    opener = gzip.open if str(path).endswith(".gz") else open
    with opener(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4:
        raise FormatError(f"{path}: truncated header")
    (found,) = struct.unpack(">I", raw[:4])
    if found != magic:
        raise FormatError(f"{path}: magic 0x{found:08x}, expected 0x{magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    if len(raw) - header < size:
        raise FormatError(f"{path}: payload has {len(raw) - header} bytes, expected {size}")
    return np.frombuffer(raw, dtype=np.uint8, count=size, offset=header).reshape(dims)


def load_idx_images(images_path, labels_path):
    """List of ``(image, label)`` with images as float64 arrays scaled by 1/255.

    Gzipped files (``.gz`` suffix) are read transparently.
    """
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise InvalidArgumentError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    return [(img.astype(np.float64) / 255.0, int(y)) for img, y in zip(images, labels)]


def write_idx(path, array, magic):
    """Write a uint8 array as an IDX file (used for fixtures and exports)."""
    array = np.asarray(array, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(f">{array.ndim}I", *array.shape))
        fh.write(array.tobytes())


def image_protocol_split(pairs, n_train, n_validation, n_test, seed=0, source="idx"):
    """Take disjoint seeded subsets of labeled images for train/validation/test."""
    total = n_train + n_validation + n_test
    if total > len(pairs):
        raise InvalidArgumentError(f"requested {total} images, only {len(pairs)} available")
    order = np.random.default_rng(seed).permutation(len(pairs))[:total]
    chosen = [pairs[i] for i in order]
    parts = chosen[:n_train], chosen[n_train : n_train + n_validation], chosen[n_train + n_validation :]
    return DatasetSplit(
        *([img for img, _ in p] for p in parts),
        *([y for _, y in p] for p in parts),
        source=source,
        preprocessing="scaled-1/255",
    )


# -- synthetic ---------------------------------------------------------------


def pulse_template(period, pulse_width):
    """One period of the synthetic pulse: a Gaussian of std ``pulse_width`` centred at ``period // 2``."""
    t = np.arange(period)
    return np.exp(-0.5 * ((t - period // 2) / pulse_width) ** 2)


def synth_pulse_train(n, period, pulse_width, amplitude_jitter=0.0, noise_sigma=0.0, seed=0):
    """Gaussian pulses repeating every ``period`` samples, with amplitude jitter and white noise.

    Each period cell ``[j * period, (j + 1) * period)`` holds one pulse
    confined to that cell, so the noiseless, jitter-free signal is exactly
    periodic. A trailing partial cell keeps only the samples that fit.
    """
    if not (period > pulse_width >= 1) or n < 1:
        raise InvalidArgumentError("need n >= 1 and period > pulse_width >= 1")
    if amplitude_jitter < 0 or noise_sigma < 0:
        raise InvalidArgumentError("jitter and noise must be non-negative")
    rng = np.random.default_rng(seed)
    cells = -(-n // period)
    amplitudes = 1.0 + amplitude_jitter * rng.standard_normal(cells)
    signal = (amplitudes[:, None] * pulse_template(period, pulse_width)[None, :]).ravel()[:n]
    return signal + noise_sigma * rng.standard_normal(n)


def synth_pulse_split(seed=0, period=100, pulse_width=20, amplitude_jitter=0.2, noise_sigma=0.05):
    """Twelve-segment split of a synthetic 12000-sample pulse train."""
    signal = synth_pulse_train(12000, period, pulse_width, amplitude_jitter, noise_sigma, seed)
    split = physionet_protocol_split(signal)
    split.source = "synthetic-pulse-train"
    split.meta = {"period": period, "pulse_width": pulse_width}
    return split

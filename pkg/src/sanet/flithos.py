"""Compression/accuracy scoring of reconstruction models.

A model is charged one unit per kernel weight and ``rank + 1`` units per
non-zero activation (its position plus its amplitude). Dividing by the input
cardinality gives the inverse compression ratio; pairing that with the
reconstruction loss normalized by the all-zero reconstruction and taking the
Euclidean norm gives flithos. Lower is better on every axis.
"""

import csv
import io
import math
from dataclasses import astuple, dataclass, fields

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError

REPORT_FIELDS = ("n", "dim", "W", "A", "cr_inverse", "normalized_loss", "flithos")


def weight_count(kernels):
    """Total number of kernel samples."""
    return int(sum(np.asarray(k).size for k in kernels))


def activation_count(maps):
    """Number of entries that are exactly non-zero, summed over all maps."""
    return int(sum(np.count_nonzero(np.asarray(a)) for a in maps))


def inverse_compression_ratio(n, dim, weights, activations):
    if n < 1:
        raise InvalidArgumentError("input cardinality n must be >= 1")
    return (weights + (dim + 1) * activations) / n


def normalized_loss(x_hat, x, loss):
    """``loss(x_hat, x) / loss(0, x)``; 1 means no better than reconstructing zeros."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise InvalidArgumentError(f"shape mismatch: {x_hat.shape} vs {x.shape}")
    reference = loss(np.zeros_like(x), x)
    if reference == 0:
        raise DegenerateInputError("loss of the zero reconstruction is 0; input is all zeros")
    return loss(x_hat, x) / reference


def flithos(cr_inverse, normalized_loss):
    return math.hypot(cr_inverse, normalized_loss)


def mean_flithos(values):
    values = list(values)
    if not values:
        raise InvalidArgumentError("mean flithos of an empty collection")
    return math.fsum(values) / len(values)


@dataclass(frozen=True)
class FlithosReport:
    n: int
    dim: int
    W: int
    A: int
    cr_inverse: float
    normalized_loss: float
    flithos: float

    def as_row(self):
        return astuple(self)


def report(x, x_hat, kernels, maps, loss):
    """Score one example given its reconstruction, kernels and activation maps."""
    x = np.asarray(x, dtype=np.float64)
    W = weight_count(kernels)
    A = activation_count(maps)
    cr = inverse_compression_ratio(x.size, x.ndim, W, A)
    nl = normalized_loss(x_hat, x, loss)
    return FlithosReport(x.size, x.ndim, W, A, cr, nl, flithos(cr, nl))


def reports_to_csv(reports, extra=None):
    """Serialize reports as CSV with the header ``n,dim,W,A,cr_inverse,normalized_loss,flithos``.

    ``extra`` is an optional ordered mapping of column name to per-report
    values, prepended to each row (e.g. a split name or example index).
    """
    extra = extra or {}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([*extra, *REPORT_FIELDS])
    for i, r in enumerate(reports):
        row = [col[i] for col in extra.values()]
        row += [r.n, r.dim, r.W, r.A] + [format(v, ".17g") for v in (r.cr_inverse, r.normalized_loss, r.flithos)]
        writer.writerow(row)
    return buf.getvalue()


def reports_from_csv(text):
    """Inverse of :func:`reports_to_csv`; extra columns are ignored."""
    rows = csv.DictReader(io.StringIO(text))
    types = {f.name: f.type for f in fields(FlithosReport)}
    out = []
    for row in rows:
        out.append(FlithosReport(**{k: (int if types[k] in (int, "int") else float)(row[k]) for k in REPORT_FIELDS}))
    return out

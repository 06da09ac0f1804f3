"""Sparse activation functions.

Each function maps a similarity map ``s`` to an :class:`ActivationResult`
holding the activation map and the binary selection mask it was cut with.
The mask is what the backward pass routes gradients through, so for every
kind ``result.map == s * result.mask`` holds exactly.

Ties are always resolved toward the lowest linear (row-major) index.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, UnsupportedRankError
from .tensor import as_tensor

IDENTITY = "identity"
RELU = "relu"
TOPK_ABSOLUTES = "topk_absolutes"
EXTREMA_POOL_INDICES = "extrema_pool_indices"
EXTREMA = "extrema"

KINDS = (IDENTITY, RELU, TOPK_ABSOLUTES, EXTREMA_POOL_INDICES, EXTREMA)
SPARSE_KINDS = (TOPK_ABSOLUTES, EXTREMA_POOL_INDICES, EXTREMA)


@dataclass(frozen=True)
class ActivationResult:
    map: np.ndarray
    mask: np.ndarray


@dataclass(frozen=True)
class ActivationKind:
    """An activation tag plus its sparsity parameter.

    ``density`` is ``k`` for top-k absolutes, the pool extent for
    Extrema-Pool indices and the minimum extrema distance for Extrema. It is
    ``None`` for Identity and ReLU.
    """

    tag: str
    density: int | None = None
    border_tolerance: int = 0

    def __post_init__(self):
        if self.tag not in KINDS:
            raise InvalidArgumentError(f"unknown activation {self.tag!r}; expected one of {KINDS}")
        if self.tag in (IDENTITY, RELU):
            if self.density is not None:
                raise InvalidArgumentError(f"{self.tag} takes no density parameter")
        elif self.density is None or self.density < 1:
            raise InvalidArgumentError(f"{self.tag} needs a density >= 1, got {self.density}")
        if self.border_tolerance < 0:
            raise InvalidArgumentError("border_tolerance must be >= 0")
        if self.tag == EXTREMA and self.border_tolerance >= self.density:
            raise InvalidArgumentError(
                f"border_tolerance ({self.border_tolerance}) must be smaller than med ({self.density})"
            )

    @classmethod
    def for_extent(cls, tag, input_shape, extent, border_tolerance=0):
        """Build the kind whose density matches a kernel of ``extent`` samples per axis.

        Extrema's border tolerance is clipped to ``extent - 1`` so small kernels stay valid.
        """
        density = default_density(tag, input_shape, extent)
        tol = min(border_tolerance, extent - 1) if tag == EXTREMA else 0
        return cls(tag, density, tol)

    def __call__(self, s):
        return apply(self, s)


def apply_identity(s):
    s = as_tensor(s, "s")
    return ActivationResult(s.copy(), np.ones_like(s))


def apply_relu(s):
    s = as_tensor(s, "s")
    mask = (s > 0).astype(np.float64)
    return ActivationResult(s * mask, mask)


def apply_topk_absolutes(s, k):
    """Keep the ``k`` entries of largest magnitude, zero the rest."""
    s = as_tensor(s, "s")
    if not 1 <= k <= s.size:
        raise InvalidArgumentError(f"k must lie in [1, {s.size}], got {k}")
    order = np.argsort(-np.abs(s).ravel(), kind="stable")
    mask = np.zeros(s.size)
    mask[order[:k]] = 1.0
    mask = mask.reshape(s.shape)
    return ActivationResult(s * mask, mask)


def extrema_pool_indices(s, m):
    """Flat indices of the largest-magnitude entry in each ``m``-per-axis grid cell.

    Cells at the far edges may be smaller than ``m`` when the extent is not a
    multiple of ``m``.
    """
    s = as_tensor(s, "s")
    if not all(1 <= m <= n for n in s.shape):
        raise InvalidArgumentError(f"pool extent {m} out of range for shape {s.shape}")
    cells = [-(-n // m) for n in s.shape]
    # padded entries get -1 so they never win against a real |s| >= 0
    mag = np.pad(np.abs(s), [(0, c * m - n) for c, n in zip(cells, s.shape)], constant_values=-1.0)
    if s.ndim == 1:
        return np.arange(cells[0]) * m + mag.reshape(cells[0], m).argmax(axis=1)
    blocks = mag.reshape(cells[0], m, cells[1], m).transpose(0, 2, 1, 3).reshape(cells[0], cells[1], m * m)
    local = blocks.argmax(axis=2)
    rows = np.arange(cells[0])[:, None] * m + local // m
    cols = np.arange(cells[1])[None, :] * m + local % m
    return (rows * s.shape[1] + cols).ravel()


def apply_extrema_pool_indices(s, m):
    """Max-pool ``|s|`` over an ``m`` grid, then unpool the signed values at the argmax indices."""
    s = as_tensor(s, "s")
    mask = np.zeros(s.size)
    mask[extrema_pool_indices(s, m)] = 1.0
    mask = mask.reshape(s.shape)
    return ActivationResult(s * mask, mask)


def extrema_candidates(s):
    """Indices where the one-sample first difference changes sign.

    Peaks have a non-negative difference coming in and a negative one going
    out; valleys the reverse. Differences beyond either end are taken as 0.
    """
    d = np.diff(s)
    prev = np.concatenate(([0.0], d))
    nxt = np.concatenate((d, [0.0]))
    peaks = (prev >= 0) & (nxt < 0)
    valleys = (prev < 0) & (nxt >= 0)
    return np.flatnonzero(peaks | valleys)


def apply_extrema(s, med, border_tolerance=0):
    """Extrema detection with a minimum extrema distance.

    Candidates are visited in order of decreasing ``|s|``; a candidate is
    dropped when an already kept one lies closer than
    ``med - border_tolerance`` samples.
    """
    s = as_tensor(s, "s")
    if s.ndim != 1:
        raise UnsupportedRankError("extrema activation is only defined for 1D inputs")
    n = s.size
    if not 1 <= med < n:
        raise InvalidArgumentError(f"med must lie in [1, {n - 1}], got {med}")
    if not 0 <= border_tolerance < med:
        raise InvalidArgumentError(f"border_tolerance must lie in [0, {med - 1}], got {border_tolerance}")
    radius = med - border_tolerance
    candidates = extrema_candidates(s)
    order = candidates[np.argsort(-np.abs(s[candidates]), kind="stable")]
    blocked = np.zeros(n, dtype=bool)
    mask = np.zeros(n)
    for i in order:
        if blocked[i]:
            continue
        mask[i] = 1.0
        blocked[max(i - radius + 1, 0) : i + radius] = True
    return ActivationResult(s * mask, mask)


def default_density(tag, input_shape, extent):
    """Sparsity parameter giving roughly one activation per kernel-sized region.

    top-k uses ``floor(L / m) ** rank`` with ``L`` the per-axis extent
    (the smallest axis for non-square 2D inputs); the pooling and extrema
    kinds use ``m`` itself.
    """
    if extent < 1:
        raise InvalidArgumentError(f"kernel extent must be >= 1, got {extent}")
    if tag in (IDENTITY, RELU):
        return None
    if tag == TOPK_ABSOLUTES:
        shape = tuple(np.atleast_1d(input_shape))
        per_axis = min(shape) // extent
        if per_axis == 0:
            raise InvalidArgumentError(f"kernel extent {extent} larger than input extent {min(shape)}; k would be 0")
        return per_axis ** len(shape)
    if tag in (EXTREMA_POOL_INDICES, EXTREMA):
        return int(extent)
    raise InvalidArgumentError(f"unknown activation {tag!r}")


def apply(kind, s):
    """Dispatch ``s`` through the activation described by ``kind``."""
    if kind.tag == IDENTITY:
        return apply_identity(s)
    if kind.tag == RELU:
        return apply_relu(s)
    if kind.tag == TOPK_ABSOLUTES:
        return apply_topk_absolutes(s, kind.density)
    if kind.tag == EXTREMA_POOL_INDICES:
        return apply_extrema_pool_indices(s, kind.density)
    return apply_extrema(s, kind.density, kind.border_tolerance)

"""Dense 1D/2D float64 arrays and same-size cross-correlation with its adjoints.

Tensors are plain ``numpy.ndarray`` objects of dtype float64 and rank 1 or 2.
The forward primitive is cross-correlation (no kernel flip) with zero padding
chosen so the output keeps the input shape. For a kernel of extent ``m`` the
left pad is ``(m - 1) // 2`` and the right pad is ``m - 1 - (m - 1) // 2``, so
even extents pad one extra sample on the right.
"""

import numpy as np
from scipy import signal

from .errors import InvalidArgumentError, UnsupportedRankError


def as_tensor(values, name="tensor"):
    """Return ``values`` as a contiguous float64 array of rank 1 or 2."""
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim not in (1, 2):
        raise UnsupportedRankError(f"{name} must have rank 1 or 2, got rank {arr.ndim}")
    if arr.size == 0:
        raise InvalidArgumentError(f"{name} is empty")
    return arr


def pads(extent):
    """(left, right) zero padding that keeps the output extent for a kernel of ``extent``."""
    left = (extent - 1) // 2
    return left, extent - 1 - left


def _check_pair(x, w, xname, wname):
    x = as_tensor(x, xname)
    w = as_tensor(w, wname)
    if x.ndim != w.ndim:
        raise InvalidArgumentError(f"rank mismatch: {xname} has rank {x.ndim}, {wname} has rank {w.ndim}")
    if any(k > n for k, n in zip(w.shape, x.shape)):
        raise InvalidArgumentError(f"kernel shape {w.shape} exceeds input shape {x.shape}")
    return x, w


def _valid_xcorr(a, b):
    # out[t] = sum_j a[t + j] * b[j], only where b fits entirely inside a
    if a.ndim == 1:
        return np.correlate(a, b, mode="valid")
    return signal.correlate2d(a, b, mode="valid")


def conv_same(x, w):
    """Same-size cross-correlation ``out[t] = sum_j x[t + j - p] * w[j]``.

    Out-of-range reads of ``x`` are zero. ``p`` is the left pad from :func:`pads`.

    >>> conv_same([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 1.0])
    array([3., 6., 9., 7.])
    """
    x, w = _check_pair(x, w, "x", "w")
    padded = np.pad(x, [pads(m) for m in w.shape])
    return _valid_xcorr(padded, w)


def conv_same_adjoint_input(g, w):
    """Gradient of ``<g, conv_same(x, w)>`` with respect to ``x``.

    Equal to cross-correlating ``g`` with the flipped kernel under mirrored
    padding (the forward right pad goes on the left).
    """
    g, w = _check_pair(g, w, "g", "w")
    flipped = w[(slice(None, None, -1),) * w.ndim]
    padded = np.pad(g, [pads(m)[::-1] for m in w.shape])
    return _valid_xcorr(padded, flipped)


def conv_same_adjoint_kernel(g, x, kernel_shape):
    """Gradient of ``<g, conv_same(x, w)>`` with respect to ``w``, shaped ``kernel_shape``."""
    g = as_tensor(g, "g")
    x = as_tensor(x, "x")
    kernel_shape = tuple(int(k) for k in np.atleast_1d(kernel_shape))
    if g.shape != x.shape:
        raise InvalidArgumentError(f"shape mismatch: g {g.shape} vs x {x.shape}")
    if len(kernel_shape) != x.ndim:
        raise InvalidArgumentError(f"kernel shape {kernel_shape} does not match input rank {x.ndim}")
    if any(k < 1 or k > n for k, n in zip(kernel_shape, x.shape)):
        raise InvalidArgumentError(f"kernel shape {kernel_shape} invalid for input shape {x.shape}")
    padded = np.pad(x, [pads(m) for m in kernel_shape])
    return _valid_xcorr(padded, g)

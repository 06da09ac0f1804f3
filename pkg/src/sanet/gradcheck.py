"""Central finite-difference check of :func:`sanet.model.backward`.

A kernel coordinate is *stable* when nudging it by ``+-h`` leaves every
selection mask and the sign pattern of ``x_hat - x`` unchanged. Only there is
the loss smooth, so only there are analytic and numerical gradients compared.
"""

from dataclasses import dataclass

import numpy as np

from . import activations as act
from .model import backward, forward, init_model, mae

DEFAULT_STEP = 1e-6
# coordinates whose gradient is below this are compared in absolute terms;
# round-off in the difference quotient is ~1e-10 for O(1) losses
GRADIENT_FLOOR = 1e-4


@dataclass
class GradCheckResult:
    max_rel_error: float
    stable: int
    total: int

    @property
    def stable_fraction(self):
        return self.stable / self.total


def _signature(model, x):
    trace = forward(model, x)
    return mae(trace.x_hat, x), [m.copy() for m in trace.masks], np.sign(trace.x_hat - x)


def check_gradients(model, x, h=DEFAULT_STEP):
    """Compare analytic gradients to central differences at stable coordinates."""
    analytic = backward(model, forward(model, x))
    _, base_masks, base_sign = _signature(model, x)
    worst, stable, total = 0.0, 0, 0
    for i, w in enumerate(model.kernels):
        for idx in np.ndindex(w.shape):
            total += 1
            sides = []
            for delta in (h, -h):
                kernels = [k.copy() for k in model.kernels]
                kernels[i][idx] += delta
                sides.append(_signature(model.with_kernels(kernels), x))
            if not all(
                np.array_equal(sgn, base_sign) and all(np.array_equal(a, b) for a, b in zip(masks, base_masks))
                for _, masks, sgn in sides
            ):
                continue
            stable += 1
            numeric = (sides[0][0] - sides[1][0]) / (2 * h)
            a = analytic[i][idx]
            err = abs(a - numeric) / max(abs(a), abs(numeric), GRADIENT_FLOOR)
            worst = max(worst, err)
    return GradCheckResult(worst, stable, total)


def random_instances(tag, count, seed, rank=1):
    """Random (model, input) pairs: 1D n=32, q=2, m=5 or 2D 12x12, q=2, m=3."""
    rng = np.random.default_rng(seed)
    shape, extent = ((32,), 5) if rank == 1 else ((12, 12), 3)
    tol = 2 if tag == act.EXTREMA else 0
    for _ in range(count):
        model = init_model(2, extent, shape, tag, sigma=0.5, seed=int(rng.integers(2**31)), border_tolerance=tol)
        yield model, rng.standard_normal(shape)


def gradcheck_suite(seed=0, count=20, h=DEFAULT_STEP):
    """Run :func:`check_gradients` for every activation kind in 1D and (except Extrema) 2D.

    Returns ``{(tag, rank): GradCheckResult}`` with errors and stable counts
    pooled over ``count`` random instances.
    """
    out = {}
    for rank in (1, 2):
        for tag in act.KINDS:
            if rank == 2 and tag == act.EXTREMA:
                continue
            worst, stable, total = 0.0, 0, 0
            for model, x in random_instances(tag, count, seed, rank):
                r = check_gradients(model, x, h)
                worst, stable, total = max(worst, r.max_rel_error), stable + r.stable, total + r.total
            out[(tag, rank)] = GradCheckResult(worst, stable, total)
    return out

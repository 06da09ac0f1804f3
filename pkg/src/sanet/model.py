"""Sparsely activated network: tied kernels, forward/backward passes and Adam.

Each kernel ``w`` is used twice: the input is correlated with it to get a
similarity map ``s``, ``s`` is sparsified into ``alpha``, and ``alpha`` is
correlated with the same ``w`` to give a partial reconstruction. The
reconstruction is the sum of the partials. There is no bias.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import activations as act
from .errors import FormatError, InvalidArgumentError, ParseError
from .tensor import as_tensor, conv_same, conv_same_adjoint_input, conv_same_adjoint_kernel

ADAM_DEFAULTS = {"lr": 0.01, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8}


@dataclass
class SanModel:
    kernels: list
    activation: str
    densities: list
    border_tolerance: int = 0
    seed: int | None = None

    def __post_init__(self):
        if not self.kernels:
            raise InvalidArgumentError("a model needs at least one kernel")
        self.kernels = [as_tensor(k, "kernel") for k in self.kernels]
        if len({k.ndim for k in self.kernels}) != 1:
            raise InvalidArgumentError("all kernels must share one rank")
        if len(self.densities) != len(self.kernels):
            raise InvalidArgumentError("need one density per kernel")
        # validates tag/density/tolerance combinations eagerly
        self.kinds = [act.ActivationKind(self.activation, d, self.border_tolerance) for d in self.densities]

    @property
    def rank(self):
        return self.kernels[0].ndim

    @property
    def q(self):
        return len(self.kernels)

    def with_kernels(self, kernels):
        return replace(self, kernels=[np.array(k, dtype=np.float64) for k in kernels])


@dataclass
class ForwardTrace:
    x: np.ndarray
    similarities: list
    activations: list  # ActivationResult per kernel
    partials: list
    x_hat: np.ndarray

    @property
    def maps(self):
        return [a.map for a in self.activations]

    @property
    def masks(self):
        return [a.mask for a in self.activations]


@dataclass
class AdamState:
    first: list
    second: list
    step: int = 0
    lr: float = ADAM_DEFAULTS["lr"]
    beta1: float = ADAM_DEFAULTS["beta1"]
    beta2: float = ADAM_DEFAULTS["beta2"]
    eps: float = ADAM_DEFAULTS["eps"]

    @classmethod
    def for_model(cls, model, **hyper):
        return cls([np.zeros_like(k) for k in model.kernels], [np.zeros_like(k) for k in model.kernels], **hyper)


def init_model(q, extent, input_shape, activation=act.IDENTITY, *, mu=0.0, sigma=0.1, seed=0, border_tolerance=0):
    """Draw ``q`` kernels of ``extent`` samples per axis from N(mu, sigma**2).

    ``input_shape`` fixes the kernel rank and the default sparsity density of
    each kernel (see :func:`sanet.activations.default_density`).
    """
    input_shape = tuple(np.atleast_1d(input_shape))
    if q < 1 or extent < 1:
        raise InvalidArgumentError("q and extent must be >= 1")
    rng = np.random.default_rng(seed)
    shape = (extent,) * len(input_shape)
    kernels = [mu + sigma * rng.standard_normal(shape) for _ in range(q)]
    kind = act.ActivationKind.for_extent(activation, input_shape, extent, border_tolerance)
    return SanModel(kernels, activation, [kind.density] * q, kind.border_tolerance, seed)


def reconstruct(kernels, maps):
    """Sum of ``conv_same(alpha_i, w_i)``; the decoder half of :func:`forward`."""
    partials = [conv_same(a, w) for a, w in zip(maps, kernels)]
    return _sum_partials(partials), partials


def _sum_partials(partials):
    total = partials[0].copy()
    for r in partials[1:]:
        total += r
    return total


def forward(model, x):
    x = as_tensor(x, "x")
    if x.ndim != model.rank:
        raise InvalidArgumentError(f"input rank {x.ndim} does not match model rank {model.rank}")
    sims = [conv_same(x, w) for w in model.kernels]
    results = [kind(s) for kind, s in zip(model.kinds, sims)]
    x_hat, partials = reconstruct(model.kernels, [r.map for r in results])
    return ForwardTrace(x, sims, results, partials, x_hat)


def mae(x_hat, x):
    x_hat = np.asarray(x_hat, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x_hat.shape != x.shape:
        raise InvalidArgumentError(f"shape mismatch: {x_hat.shape} vs {x.shape}")
    return float(np.mean(np.abs(x_hat - x)))


def backward(model, trace):
    """Gradient of the MAE loss with respect to every kernel.

    Selection masks are held fixed, so gradients reach the encoder only
    through retained coordinates. ``sign(0)`` is taken as 0.
    """
    if len(trace.similarities) != model.q or any(
        s.shape != trace.x.shape for s in trace.similarities
    ) or trace.x.ndim != model.rank:
        raise InvalidArgumentError("trace does not belong to this model")
    g = np.sign(trace.x_hat - trace.x) / trace.x.size
    grads = []
    for w, result in zip(model.kernels, trace.activations):
        decoder = conv_same_adjoint_kernel(g, result.map, w.shape)
        upstream = result.mask * conv_same_adjoint_input(g, w)
        encoder = conv_same_adjoint_kernel(upstream, trace.x, w.shape)
        grads.append(decoder + encoder)
    return grads


def loss_and_gradients(model, xs):
    """Mean MAE and mean per-example kernel gradients over a batch."""
    total = [np.zeros_like(k) for k in model.kernels]
    losses = []
    for x in xs:
        trace = forward(model, x)
        losses.append(mae(trace.x_hat, trace.x))
        for acc, g in zip(total, backward(model, trace)):
            acc += g
    return float(np.mean(losses)), [t / len(xs) for t in total]


def adam_step(model, state, grads):
    """One bias-corrected Adam update without weight decay.

    Returns a new model and a new state; neither input is mutated.
    """
    if len(grads) != model.q or any(g.shape != k.shape for g, k in zip(grads, model.kernels)):
        raise InvalidArgumentError("gradient shapes do not match kernels")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    first = [b1 * m + (1 - b1) * g for m, g in zip(state.first, grads)]
    second = [b2 * v + (1 - b2) * g * g for v, g in zip(state.second, grads)]
    kernels = []
    for w, m, v in zip(model.kernels, first, second):
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        kernels.append(w - state.lr * m_hat / (np.sqrt(v_hat) + state.eps))
    return model.with_kernels(kernels), replace(state, first=first, second=second, step=t)


# -- checkpoint text format ---------------------------------------------------
#
#   rank = 1
#   q = 2
#   activation = extrema
#   extent = 5 5
#   density = 5 5
#   border_tolerance = 3
#   seed = 7
#   <kernel 0 values, row-major, space separated, 17 significant digits>
#   <kernel 1 values ...>

_HEADER_KEYS = ("rank", "q", "activation", "extent", "density", "border_tolerance", "seed")


def dumps_checkpoint(model):
    densities = " ".join("none" if d is None else str(d) for d in model.densities)
    lines = [
        f"rank = {model.rank}",
        f"q = {model.q}",
        f"activation = {model.activation}",
        "extent = " + " ".join(str(k.shape[0]) for k in model.kernels),
        f"density = {densities}",
        f"border_tolerance = {model.border_tolerance}",
        f"seed = {'none' if model.seed is None else model.seed}",
    ]
    for k in model.kernels:
        lines.append(" ".join(format(v, ".17g") for v in k.ravel()))
    return "\n".join(lines) + "\n"


def loads_checkpoint(text):
    lines = [ln for ln in text.splitlines() if ln.strip()]
    header = {}
    for lineno, line in enumerate(lines[: len(_HEADER_KEYS)], start=1):
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"expected 'key = value', got {line!r}", lineno)
        header[key.strip()] = value.strip()
    missing = [k for k in _HEADER_KEYS if k not in header]
    if missing:
        raise FormatError(f"checkpoint header missing keys: {missing}")
    rank, q = int(header["rank"]), int(header["q"])
    extents = [int(e) for e in header["extent"].split()]
    densities = [None if d == "none" else int(d) for d in header["density"].split()]
    body = lines[len(_HEADER_KEYS) :]
    if len(body) != q or len(extents) != q:
        raise FormatError(f"expected {q} kernels, found {len(body)} kernel lines and {len(extents)} extents")
    kernels = []
    for i, (line, m) in enumerate(zip(body, extents)):
        try:
            values = np.array([float(v) for v in line.split()])
        except ValueError as exc:
            raise ParseError(str(exc), len(_HEADER_KEYS) + i + 1) from None
        if values.size != m**rank:
            raise FormatError(f"kernel {i} has {values.size} values, expected {m**rank}")
        kernels.append(values.reshape((m,) * rank))
    seed = None if header["seed"] == "none" else int(header["seed"])
    return SanModel(kernels, header["activation"], densities, int(header["border_tolerance"]), seed)


def save_checkpoint(model, path):
    with open(path, "w") as fh:
        fh.write(dumps_checkpoint(model))


def load_checkpoint(path):
    with open(path) as fh:
        return loads_checkpoint(fh.read())

"""Training with flithos-based model selection, kernel-size sweeps and classifier evaluation."""

import configparser
import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from . import activations as act
from . import flithos as fl
from .errors import InvalidArgumentError
from .model import ADAM_DEFAULTS, AdamState, adam_step, forward, init_model, loss_and_gradients, mae

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 2
    q: int = 1
    kernel_sizes: list = field(default_factory=lambda: list(range(1, 251)))
    activations: list = field(default_factory=lambda: list(act.KINDS))
    seed: int = 0
    lr: float = ADAM_DEFAULTS["lr"]
    beta1: float = ADAM_DEFAULTS["beta1"]
    beta2: float = ADAM_DEFAULTS["beta2"]
    eps: float = ADAM_DEFAULTS["eps"]
    border_tolerance: int = 3
    mu: float = 0.0
    sigma: float = 0.1

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.q < 1:
            raise InvalidArgumentError("epochs, batch_size and q must all be >= 1")
        if not self.kernel_sizes or not self.activations:
            raise InvalidArgumentError("kernel_sizes and activations must be non-empty")
        for tag in self.activations:
            if tag not in act.KINDS:
                raise InvalidArgumentError(f"unknown activation {tag!r}")

    @property
    def adam(self):
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}


_LIST_KEYS = {"kernel_sizes": int, "activations": str}


def parse_config(text, **overrides):
    """Parse ``key = value`` lines into a :class:`TrainConfig`.

    Keys are the :class:`TrainConfig` field names; list fields take
    comma-separated values. ``#`` starts a comment.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise InvalidArgumentError(f"malformed config: {exc}") from None
    known = {f.name: f for f in fields(TrainConfig)}
    values = {}
    for key, raw in parser["config"].items():
        if key not in known:
            raise InvalidArgumentError(f"unknown config key {key!r}")
        try:
            if key in _LIST_KEYS:
                values[key] = [_LIST_KEYS[key](v.strip()) for v in raw.split(",") if v.strip()]
            else:
                values[key] = known[key].type(raw)
        except ValueError:
            raise InvalidArgumentError(f"bad value for {key}: {raw!r}") from None
    values.update({k: v for k, v in overrides.items() if v is not None})
    return TrainConfig(**values)


def load_config(path, **overrides):
    with open(path) as fh:
        return parse_config(fh.read(), **overrides)


# -- training ----------------------------------------------------------------


def evaluate(model, examples):
    """Per-example flithos reports of ``model`` on ``examples``."""
    reports = []
    for x in examples:
        trace = forward(model, x)
        reports.append(fl.report(x, trace.x_hat, model.kernels, trace.maps, mae))
    return reports


def mean_reports(reports):
    """(mean CR^-1, mean normalized loss, mean flithos)."""
    return (
        fl.mean_flithos(r.cr_inverse for r in reports),
        fl.mean_flithos(r.normalized_loss for r in reports),
        fl.mean_flithos(r.flithos for r in reports),
    )


@dataclass
class TrainResult:
    checkpoints: list  # model after each epoch
    validation_flithos: list
    train_mae: list  # index 0 is the untrained model
    selected_epoch: int  # 1-based

    @property
    def model(self):
        return self.checkpoints[self.selected_epoch - 1]


def select_epoch(validation_flithos):
    """1-based index of the lowest value; the earliest wins ties."""
    if not validation_flithos:
        raise InvalidArgumentError("no epochs to select from")
    return int(np.argmin(validation_flithos)) + 1


def train_san(config, split, activation, extent):
    """Train one SAN with mini-batch Adam and keep the epoch with the lowest validation flithos."""
    if not split.train or not split.validation:
        raise InvalidArgumentError("split needs non-empty train and validation parts")
    init_seed, shuffle_seed = np.random.SeedSequence(config.seed).spawn(2)
    model = init_model(
        config.q,
        extent,
        split.train[0].shape,
        activation,
        mu=config.mu,
        sigma=config.sigma,
        seed=int(init_seed.generate_state(1)[0]),
        border_tolerance=config.border_tolerance,
    )
    model.seed = config.seed
    state = AdamState.for_model(model, **config.adam)
    rng = np.random.default_rng(shuffle_seed)
    train = split.train
    history = [float(np.mean([mae(forward(model, x).x_hat, x) for x in train]))]
    checkpoints, val_phi = [], []
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train))
        losses = []
        for start in range(0, len(order), config.batch_size):
            batch = [train[i] for i in order[start : start + config.batch_size]]
            loss, grads = loss_and_gradients(model, batch)
            losses.append(loss * len(batch))
            model, state = adam_step(model, state, grads)
        history.append(float(np.sum(losses) / len(train)))
        checkpoints.append(model)
        val_phi.append(mean_reports(evaluate(model, split.validation))[2])
        log.debug("%s m=%d epoch %d: train mae %.4f, val flithos %.4f", activation, extent, epoch, history[-1], val_phi[-1])
    return TrainResult(checkpoints, val_phi, history, select_epoch(val_phi))


@dataclass
class SweepRecord:
    activation: str
    m: int
    selected_epoch: int
    validation_flithos: float
    cr_inverse: float
    normalized_loss: float
    flithos: float
    accuracy_delta: float | None = None
    test_reports: list = field(default_factory=list, repr=False)
    validation_history: list = field(default_factory=list, repr=False)
    model: object = field(default=None, repr=False)


def run_cell(config, split, activation, extent):
    result = train_san(config, split, activation, extent)
    reports = evaluate(result.model, split.test)
    cr, nl, phi = mean_reports(reports)
    return SweepRecord(
        activation,
        extent,
        result.selected_epoch,
        result.validation_flithos[result.selected_epoch - 1],
        cr,
        nl,
        phi,
        test_reports=reports,
        validation_history=result.validation_flithos,
        model=result.model,
    )


def _run_cell_packed(args):
    return run_cell(*args)


def sweep(config, split, workers=1):
    """Train every (activation, kernel size) pair from the same seed and score it on the test part."""
    cells = [(config, split, tag, m) for tag in config.activations for m in config.kernel_sizes]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_run_cell_packed, cells))
    return [run_cell(*c) for c in cells]


def best_per_activation(records):
    """For each activation the record with the lowest validation flithos (smallest m on ties)."""
    best = {}
    for r in records:
        cur = best.get(r.activation)
        if cur is None or (r.validation_flithos, r.m) < (cur.validation_flithos, cur.m):
            best[r.activation] = r
    return best


# -- downstream linear classifier --------------------------------------------


@dataclass
class LinearClassifier:
    weights: np.ndarray  # (classes, features)
    offsets: np.ndarray  # (classes,)

    def scores(self, inputs):
        return _flatten(inputs) @ self.weights.T + self.offsets

    def predict(self, inputs):
        return np.argmax(self.scores(inputs), axis=1)

    def accuracy(self, inputs, labels):
        return float(np.mean(self.predict(inputs) == np.asarray(labels)))


def _flatten(inputs):
    return np.stack([np.asarray(x, dtype=np.float64).ravel() for x in inputs])


def _softmax_grad(W, b, X, y):
    z = X @ W.T + b
    z -= z.max(axis=1, keepdims=True)
    p = np.exp(z)
    p /= p.sum(axis=1, keepdims=True)
    p[np.arange(len(y)), y] -= 1.0
    p /= len(y)
    return p.T @ X, p.sum(axis=0)


def train_linear_classifier(
    inputs, labels, epochs=5, batch_size=64, seed=0, n_classes=None, validation=None, adam=None
):
    """Softmax regression trained with mini-batch Adam on cross-entropy.

    When ``validation`` (inputs, labels) is given, the epoch with the best
    validation accuracy is returned (earliest on ties); otherwise the last.
    """
    if epochs < 1 or batch_size < 1:
        raise InvalidArgumentError("epochs and batch_size must be >= 1")
    X = _flatten(inputs)
    y = np.asarray(labels, dtype=np.int64)
    n_classes = int(n_classes if n_classes is not None else y.max() + 1)
    if y.min() < 0 or y.max() >= n_classes:
        raise InvalidArgumentError(f"labels must lie in [0, {n_classes})")
    hyper = {**ADAM_DEFAULTS, **(adam or {})}
    init_rng, shuffle_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    params = [0.01 * init_rng.standard_normal((n_classes, X.shape[1])), np.zeros(n_classes)]
    first = [np.zeros_like(p) for p in params]
    second = [np.zeros_like(p) for p in params]
    t = 0
    best, best_acc = None, -1.0
    for _ in range(epochs):
        order = shuffle_rng.permutation(len(y))
        for start in range(0, len(y), batch_size):
            idx = order[start : start + batch_size]
            grads = _softmax_grad(params[0], params[1], X[idx], y[idx])
            t += 1
            for j, g in enumerate(grads):
                first[j] = hyper["beta1"] * first[j] + (1 - hyper["beta1"]) * g
                second[j] = hyper["beta2"] * second[j] + (1 - hyper["beta2"]) * g * g
                m_hat = first[j] / (1 - hyper["beta1"] ** t)
                v_hat = second[j] / (1 - hyper["beta2"] ** t)
                params[j] = params[j] - hyper["lr"] * m_hat / (np.sqrt(v_hat) + hyper["eps"])
        clf = LinearClassifier(params[0].copy(), params[1].copy())
        if validation is None:
            best = clf
        else:
            acc = clf.accuracy(*validation)
            if acc > best_acc:
                best, best_acc = clf, acc
    return best


def reconstructions(model, examples):
    return [forward(model, x).x_hat for x in examples]


@dataclass
class ClassifierComparison:
    raw_accuracy: float
    reconstruction_accuracy: float

    @property
    def delta(self):
        """Accuracy change in percentage points."""
        return 100.0 * (self.reconstruction_accuracy - self.raw_accuracy)


def accuracy_delta(split, san_model, epochs=5, batch_size=64, seed=0):
    """Train the same classifier on raw inputs and on frozen-SAN reconstructions; compare test accuracy."""
    if not split.labeled:
        raise InvalidArgumentError("classifier evaluation needs a labeled split")
    n_classes = max(max(split.train_labels), max(split.validation_labels), max(split.test_labels)) + 1
    accs = []
    for view in (lambda xs: xs, lambda xs: reconstructions(san_model, xs)):
        clf = train_linear_classifier(
            view(split.train),
            split.train_labels,
            epochs,
            batch_size,
            seed,
            n_classes,
            validation=(view(split.validation), split.validation_labels),
        )
        accs.append(clf.accuracy(view(split.test), split.test_labels))
    return ClassifierComparison(*accs)


# -- tables ------------------------------------------------------------------


def fmt(value, places=2, signed=False):
    """Round half away from zero; ``fmt(0.325) == '0.33'``."""
    q = Decimal(1).scaleb(-places)
    d = Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP)
    return f"{d:+}" if signed else str(d)


def emit_table(records, format="markdown"):
    """Render records as a CSV or Markdown table grouped by activation, in sweep order."""
    if not records:
        raise InvalidArgumentError("no records to render")
    with_acc = any(r.accuracy_delta is not None for r in records)
    header = ["activation", "m", "CR^-1", "L~", "phi"] + (["A+-%"] if with_acc else [])
    order = list(dict.fromkeys(r.activation for r in records))
    rows = []
    for tag in order:
        for r in (r for r in records if r.activation == tag):
            row = [tag, str(r.m), fmt(r.cr_inverse), fmt(r.normalized_loss), fmt(r.flithos)]
            if with_acc:
                row.append("" if r.accuracy_delta is None else fmt(r.accuracy_delta, 1, signed=True))
            rows.append(row)
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    if format != "markdown":
        raise InvalidArgumentError(f"unknown table format {format!r}")
    widths = [max(len(c) for c in col) for col in zip(header, *rows)]
    line = lambda cells: "| " + " | ".join(c.rjust(w) for c, w in zip(cells, widths)) + " |"  # noqa: E731
    out = [line(header), "|" + "|".join("-" * (w + 2) for w in widths) + "|"]
    out += [line(r) for r in rows]
    return "\n".join(out) + "\n"


def template_similarity(kernel, template):
    """Peak normalized cross-correlation between a 1D kernel and a pattern template.

    Both are mean-centred, every lag with non-empty overlap is tried
    (zero-padded), and the largest absolute correlation is returned, so a
    sign-flipped or offset kernel still scores 1.
    """
    k = np.asarray(kernel, dtype=np.float64).ravel()
    t = np.asarray(template, dtype=np.float64).ravel()
    k = k - k.mean()
    t = t - t.mean()
    denom = np.linalg.norm(k) * np.linalg.norm(t)
    if denom == 0:
        return 0.0
    return float(np.max(np.abs(np.correlate(k, t, mode="full"))) / denom)

"""Acceptance criteria 1-8.

Each criterion is a plain function returning ``(passed, detail)``; the
pytest wrappers assert on it and record one PASS/FAIL/SKIP line, which
``conftest.py`` prints in the terminal summary. Running this file directly
(``python3 tests/test_acceptance.py``) prints the same lines without pytest.

Criterion 7 needs MNIST-format IDX files. Point ``SANET_MNIST_DIR`` at a
directory holding ``train-images-idx3-ubyte`` and ``train-labels-idx1-ubyte``
(optionally ``.gz``); without them the criterion is skipped.
"""

import itertools
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from oracles import extrema_oracle, pool_oracle, smooth_noise, topk_oracle  # noqa: E402

from sanet import activations as act  # noqa: E402
from sanet import data, harness  # noqa: E402
from sanet import flithos as fl  # noqa: E402
from sanet.gradcheck import gradcheck_suite  # noqa: E402
from sanet.model import SanModel, dumps_checkpoint, forward, init_model, loads_checkpoint, mae, reconstruct  # noqa: E402

RESULTS = []

# Best-kernel table of the published 1D experiments: dataset, then
# (m, CR^-1, L~, phi-bar) for Identity, ReLU, top-k, Extrema-Pool idx, Extrema.
BEST_KERNEL_ROWS = """
    apnea-ecg         1  2.00  0.03  2.00    19  0.70  0.53  0.87    74  0.10  0.37  0.39    51  0.09  0.47  0.48    72  0.10  0.31  0.32
    bidmc             1  2.00  0.04  2.00     4  0.82  0.50  0.96     5  0.41  0.64  0.76    10  0.21  0.24  0.32   113  0.13  0.30  0.32
    bpssrat           1  2.00  0.02  2.00     1  0.85  0.51  0.99    10  0.21  0.63  0.67     8  0.26  0.45  0.52     8  0.24  0.30  0.38
    cebsdb            1  2.00  0.01  2.00     3  0.95  0.51  1.07     5  0.41  0.62  0.74    12  0.18  0.21  0.28    71  0.09  0.45  0.46
    ctu-uhb-ctgdb     1  2.00  0.01  2.00     1  0.48  0.51  0.71     7  0.29  0.60  0.66     9  0.23  0.44  0.49    45  0.07  0.57  0.57
    drivedb           1  2.00  0.04  2.00    20  0.51  0.54  0.74    20  0.12  0.67  0.68    13  0.17  0.69  0.71    19  0.10  0.72  0.73
    emgdb             1  2.00  0.04  2.00     1  0.94  0.50  1.07     7  0.29  0.62  0.68     9  0.23  0.48  0.53     7  0.15  0.51  0.53
    mitdb             1  2.00  0.03  2.00    61  0.78  0.49  0.92     7  0.29  0.52  0.59    10  0.21  0.44  0.49   229  0.24  0.38  0.45
    noneeg            1  2.00  0.01  2.00     6  0.91  0.57  1.08     4  0.50  0.59  0.77    37  0.09  0.49  0.50    15  0.12  0.36  0.38
    prcp              1  2.00  0.03  2.00     1  1.00  0.51  1.12     5  0.41  0.59  0.71    23  0.11  0.41  0.42   105  0.12  0.42  0.44
    shhpsgdb          1  2.00  0.02  2.00     4  0.85  0.60  1.05     6  0.34  0.69  0.77     7  0.29  0.42  0.51    15  0.10  0.53  0.54
    slpdb             1  2.00  0.03  2.00     7  0.72  0.53  0.90     7  0.29  0.52  0.60   232  0.24  0.29  0.37   218  0.23  0.36  0.43
    sufhsdb           1  2.00  0.03  2.00    38  1.02  0.24  1.05     5  0.41  0.55  0.68    18  0.13  0.36  0.39    17  0.12  0.26  0.28
    voiced            1  2.00  0.01  2.00    41  0.95  0.26  0.98    36  0.09  0.56  0.57    70  0.10  0.41  0.43    67  0.10  0.41  0.43
    wrist             1  2.00  0.04  2.00    56  0.74  0.62  0.96     5  0.41  0.49  0.63     9  0.23  0.43  0.49   173  0.18  0.46  0.50
"""
TABLE_KINDS = ("identity", "relu", "topk_absolutes", "extrema_pool_indices", "extrema")

SWEEP_SEEDS = range(10)
SWEEP_SIZES = [1, 5, 10, 25, 50, 100]
PERIOD, PULSE_WIDTH = 100, 20


def table_rows():
    for line in BEST_KERNEL_ROWS.strip().splitlines():
        name, *values = line.split()
        nums = [float(v) for v in values]
        for j, kind in enumerate(TABLE_KINDS):
            yield name, kind, *nums[4 * j : 4 * j + 4]


# -- criteria ----------------------------------------------------------------


def criterion_1():
    rows = list(table_rows())
    worst = max(abs(fl.flithos(cr, nl) - phi) for _, _, _, cr, nl, phi in rows)
    bad = [(n, k) for n, k, _, cr, nl, phi in rows if abs(fl.flithos(cr, nl) - phi) > 0.015]
    return len(rows) == 75 and not bad, f"{len(rows)} rows, max |hypot - printed| = {worst:.4f}, violations {bad}"


def criterion_2():
    x = np.random.default_rng(0).standard_normal(1000)
    generic = init_model(1, 1, (1000,), act.IDENTITY, seed=0)
    trace = forward(generic, x)
    cr_generic = fl.report(x, trace.x_hat, generic.kernels, trace.maps, mae).cr_inverse
    unit = SanModel([np.array([1.0])], act.IDENTITY, [None])
    trace = forward(unit, x)
    rep = fl.report(x, trace.x_hat, unit.kernels, trace.maps, mae)
    ok = (
        cr_generic == 2.001
        and rep.cr_inverse == 2.001
        and rep.normalized_loss == 0.0
        and rep.flithos == 2.001
        and harness.fmt(rep.cr_inverse) == "2.00"
        and harness.fmt(rep.flithos) == "2.00"
    )
    return ok, f"CR^-1 {cr_generic!r} (random w), {rep.cr_inverse!r} (w=[1]); L~ {rep.normalized_loss}; phi {rep.flithos!r}"


def criterion_3():
    results = gradcheck_suite(seed=0, count=20)
    worst = max(r.max_rel_error for r in results.values())
    least_stable = min(r.stable_fraction for r in results.values())
    ok = len(results) == 9 and worst <= 1e-5 and least_stable >= 0.95
    return ok, f"{len(results)} (kind, rank) groups, max rel err {worst:.2e}, min stable fraction {least_stable:.3f}"


def criterion_4():
    rng = np.random.default_rng(2024)
    n = 128
    violations = 0
    for i in range(1000):
        s = smooth_noise(rng, n, 1 + i % 5) if i % 2 else rng.standard_normal(n)
        if i % 7 == 0:
            s = np.round(s * 2) / 2  # ties and plateaus
        m = 2 + i % 15
        k = act.default_density(act.TOPK_ABSOLUTES, (n,), m)
        top = act.apply_topk_absolutes(s, k)
        violations += int(top.mask.sum() != k or np.flatnonzero(top.mask).tolist() != topk_oracle(s, k))
        pool = act.apply_extrema_pool_indices(s, m)
        kept = np.flatnonzero(pool.mask).tolist()
        per_cell = [sum(1 for j in kept if j // m == c) for c in range(-(-n // m))]
        violations += int(any(c != 1 for c in per_cell) or kept != pool_oracle(s, m))
        tol = i % m
        radius = m - tol
        ext = np.flatnonzero(act.apply_extrema(s, m, tol).mask).tolist()
        violations += int(ext != extrema_oracle(s, m, tol))
        violations += sum(1 for a, b in itertools.combinations(ext, 2) if abs(a - b) < radius)
        for c in set(act.extrema_candidates(s).tolist()) - set(ext):
            violations += int(not any(abs(c - j) < radius and abs(s[j]) >= abs(s[c]) for j in ext))
    return violations == 0, f"1000 inputs (n={n}), {violations} violations"


_sweep_cache = {}


def pulse_sweeps():
    if not _sweep_cache:
        config = harness.TrainConfig(epochs=30, batch_size=2, q=1, kernel_sizes=SWEEP_SIZES)
        for seed in SWEEP_SEEDS:
            config.seed = seed
            split = data.synth_pulse_split(seed=seed, period=PERIOD, pulse_width=PULSE_WIDTH)
            _sweep_cache[seed] = harness.sweep(config, split)
    return _sweep_cache


def criterion_5():
    holds, summary = 0, []
    for seed, records in pulse_sweeps().items():
        best = harness.best_per_activation(records)
        phi = {tag: best[tag].flithos for tag in act.KINDS}
        sparse = [phi[t] for t in act.SPARSE_KINDS]
        ok = (
            phi[act.IDENTITY] > phi[act.RELU] > max(sparse)
            and max(sparse) < 1
            and abs(phi[act.IDENTITY] - 2) < 0.1
        )
        holds += ok
        summary.append("/".join(f"{phi[t]:.2f}" for t in act.KINDS))
    return holds >= 9, f"ordering holds on {holds}/10 seeds; phi (id/relu/topk/pool/ext): {', '.join(summary[:3])}, ..."


def criterion_6():
    template = data.pulse_template(PERIOD, PULSE_WIDTH)
    scores = []
    for records in pulse_sweeps().values():
        (rec,) = [r for r in records if r.activation == act.EXTREMA_POOL_INDICES and r.m == 100]
        scores.append(harness.template_similarity(rec.model.kernels[0], template))
    hits = sum(s >= 0.8 for s in scores)
    return hits >= 8, f"{hits}/10 seeds >= 0.8 (min {min(scores):.3f}, max {max(scores):.3f})"


def mnist_files():
    root = os.environ.get("SANET_MNIST_DIR")
    candidates = [Path(root)] if root else []
    candidates.append(Path(__file__).resolve().parent / "data" / "mnist")
    for base in candidates:
        for suffix in ("", ".gz"):
            images, labels = base / f"train-images-idx3-ubyte{suffix}", base / f"train-labels-idx1-ubyte{suffix}"
            if images.is_file() and labels.is_file():
                return images, labels
    return None


def image_protocol(pairs, n_train=1000, n_validation=200, n_test=500, seed=0):
    """q=2, m=3 Extrema-Pool SAN for 5 epochs at batch 64, then the classifier comparison."""
    split = data.image_protocol_split(pairs, n_train, n_validation, n_test, seed=seed)
    config = harness.TrainConfig(epochs=5, batch_size=64, q=2, kernel_sizes=[3],
                                 activations=[act.EXTREMA_POOL_INDICES], seed=seed)
    (record,) = harness.sweep(config, split)
    comparison = harness.accuracy_delta(split, record.model, epochs=5, batch_size=64, seed=seed)
    return record, comparison


def criterion_7():
    files = mnist_files()
    if files is None:
        return None, "MNIST IDX files not found (set SANET_MNIST_DIR); skipped"
    record, cmp = image_protocol(data.load_idx_images(*files))
    ok = 0.15 <= record.cr_inverse <= 0.6 and 0.3 <= record.normalized_loss <= 0.8 and abs(cmp.delta) <= 5
    return ok, (f"CR^-1 {record.cr_inverse:.3f}, L~ {record.normalized_loss:.3f}, "
                f"accuracy raw {100 * cmp.raw_accuracy:.1f}% -> {100 * cmp.reconstruction_accuracy:.1f}% "
                f"(delta {cmp.delta:+.1f})")


def criterion_8():
    rng = np.random.default_rng(8)
    checked, failures = 0, 0
    cases = [(tag, (200,), 7) for tag in act.KINDS] + [(tag, (16, 16), 3) for tag in act.KINDS if tag != act.EXTREMA]
    for tag, shape, m in cases:
        for q in (1, 2, 3):
            model = init_model(q, m, shape, tag, seed=int(rng.integers(1 << 31)), border_tolerance=2)
            x = rng.standard_normal(shape)
            trace = forward(model, x)
            total = trace.partials[0].copy()
            for r in trace.partials[1:]:
                total = total + r
            failures += int(total.tobytes() != trace.x_hat.tobytes())
            # recompute from a text checkpoint of w and 17-digit text copies of alpha
            restored = loads_checkpoint(dumps_checkpoint(model))
            maps = [np.array([float(format(v, ".17g")) for v in a.ravel()]).reshape(a.shape) for a in trace.maps]
            again, _ = reconstruct(restored.kernels, maps)
            failures += int(again.tobytes() != trace.x_hat.tobytes())
            checked += 1
    return failures == 0, f"{checked} forward passes, {failures} bit mismatches"


CRITERIA = {
    1: ("phi arithmetic vs published table", criterion_1),
    2: ("identity baseline closed form", criterion_2),
    3: ("gradient correctness", criterion_3),
    4: ("sparsity invariant suite", criterion_4),
    5: ("pulse-train sweep ordering", criterion_5),
    6: ("kernel interpretability proxy", criterion_6),
    7: ("MNIST desk scale", criterion_7),
    8: ("reconstruction decomposition", criterion_8),
}


def evaluate(number):
    title, fn = CRITERIA[number]
    start = time.perf_counter()
    passed, detail = fn()
    elapsed = time.perf_counter() - start
    status = "SKIP" if passed is None else ("PASS" if passed else "FAIL")
    line = f"criterion {number} [{status}] {title}: {detail} ({elapsed:.1f}s)"
    RESULTS.append(line)
    print(line)
    return passed, detail


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    passed, detail = evaluate(number)
    if passed is None:
        pytest.skip(detail)
    assert passed, detail


def test_image_protocol_runs_on_fixture():
    """Exercise criterion 7's pipeline on small synthetic digit-like images (no thresholds)."""
    rng = np.random.default_rng(0)
    pairs = []
    for i in range(160):
        label = i % 4
        img = rng.uniform(0, 0.2, (12, 12))
        img[2 + 2 * label : 5 + 2 * label, 3:9] += 0.8
        pairs.append((img, label))
    record, cmp = image_protocol(pairs, n_train=100, n_validation=20, n_test=40)
    assert math.isfinite(record.flithos) and 0 < record.cr_inverse < 2
    assert 0 <= cmp.raw_accuracy <= 1 and math.isfinite(cmp.delta)


if __name__ == "__main__":
    outcomes = [evaluate(n)[0] for n in sorted(CRITERIA)]
    sys.exit(0 if all(o is not False for o in outcomes) else 1)

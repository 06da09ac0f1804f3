"""
Does sparse reconstruction keep the class information?
======================================================

A two-kernel SAN with 3x3 kernels and Extrema-Pool activations is trained
on small images. A softmax classifier is then trained twice with the same
seed: once on the raw images and once on the frozen SAN's reconstructions.
The difference in test accuracy is the A+- column of the result tables.

With real MNIST files the same experiment runs as::

    sanet sweep --idx-images train-images-idx3-ubyte --idx-labels train-labels-idx1-ubyte \\
        --q 2 --kernel-sizes 3 --activations extrema_pool_indices --epochs 5 --batch-size 64 \\
        --with-classifier --out mnist-out
"""

import numpy as np

from sanet import data, harness

# Toy "digits": a bright bar whose row depends on the class, on noise.
rng = np.random.default_rng(0)
pairs = []
for i in range(600):
    label = i % 5
    img = rng.uniform(0, 0.3, (14, 14))
    img[2 + 2 * label : 4 + 2 * label, 3:11] += 0.7
    pairs.append((img, label))
split = data.image_protocol_split(pairs, 400, 100, 100, seed=0)

config = harness.TrainConfig(epochs=5, batch_size=64, q=2, kernel_sizes=[3],
                             activations=["extrema_pool_indices"])
(record,) = harness.sweep(config, split)
print(f"SAN: CR^-1={record.cr_inverse:.3f}  L~={record.normalized_loss:.3f}  phi={record.flithos:.3f}")

cmp = harness.accuracy_delta(split, record.model, epochs=5, batch_size=64)
print(f"raw accuracy {100 * cmp.raw_accuracy:.1f}%, "
      f"on reconstructions {100 * cmp.reconstruction_accuracy:.1f}%, delta {cmp.delta:+.1f} points")

"""
Scoring compression and reconstruction together
===============================================

The flithos score is the length of the vector (CR^-1, normalized loss).
A model that stores nothing and predicts zeros scores 1 on the loss axis;
one that copies the input through dense maps scores about 2 on the
compression axis. Good sparse models land well inside the unit circle.
"""

import numpy as np

from sanet import SanModel, forward, mae
from sanet import activations as act
from sanet import flithos as fl

x = np.random.default_rng(1).standard_normal(1000)

# The identity model: one unit kernel, no sparsity. Perfect reconstruction,
# but every sample is kept as an activation (plus its position).
identity = SanModel([np.array([1.0])], act.IDENTITY, [None])
trace = forward(identity, x)
rep = fl.report(x, trace.x_hat, identity.kernels, trace.maps, mae)
print(f"identity:    CR^-1={rep.cr_inverse:.3f}  L~={rep.normalized_loss:.3f}  phi={rep.flithos:.3f}")

# Keeping only the 100 largest samples of white noise loses most of the
# signal, yet the much smaller storage cost still wins on flithos.
topk = SanModel([np.array([1.0])], act.TOPK_ABSOLUTES, [100])
trace = forward(topk, x)
rep = fl.report(x, trace.x_hat, topk.kernels, trace.maps, mae)
print(f"top-100:     CR^-1={rep.cr_inverse:.3f}  L~={rep.normalized_loss:.3f}  phi={rep.flithos:.3f}")

# Storing nothing at all.
print(f"all zeros:   CR^-1={fl.inverse_compression_ratio(1000, 1, 1, 0):.3f}  "
      f"L~={fl.normalized_loss(np.zeros(1000), x, mae):.3f}")

# The published best-kernel numbers obey the same arithmetic; e.g. a model
# with CR^-1 0.10 and L~ 0.31 scores
print("phi(0.10, 0.31) =", round(fl.flithos(0.10, 0.31), 4))

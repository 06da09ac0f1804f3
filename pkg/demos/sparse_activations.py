"""
Five ways to sparsify a similarity map
======================================

A SAN correlates its input with a kernel, keeps a few coordinates of the
resulting similarity map and rebuilds the input from those alone. This
script runs one smooth random signal through every activation and shows
how many coordinates each one keeps.
"""

import numpy as np

from sanet import activations as act

rng = np.random.default_rng(0)

# A low-pass filtered noise signal stands in for a similarity map.
n, m = 400, 20
t = np.arange(-40, 41)
s = np.convolve(rng.standard_normal(n + t.size), np.exp(-0.5 * (t / 5.0) ** 2), mode="same")[40 : 40 + n]

# The sparse kinds get a density matched to a kernel of m samples:
# top-k keeps floor(n / m) values, pooling uses m-sample cells and
# extrema keep peaks at least m samples apart.
for tag in act.KINDS:
    kind = act.ActivationKind.for_extent(tag, (n,), m)
    result = kind(s)
    kept = np.flatnonzero(result.mask)
    print(f"{tag:22s} density={str(kind.density):5s} kept {kept.size:4d} of {n}")

# The mask is exactly what survives: the map is always s * mask.
res = act.apply_extrema(s, m)
assert np.array_equal(res.map, s * res.mask)

# Extrema and pooling pick similar places, but extrema never pick two
# neighbours on either side of a cell boundary.
pool = np.flatnonzero(act.apply_extrema_pool_indices(s, m).mask)
ext = np.flatnonzero(res.mask)
print("pool indices   ", pool[:10].tolist())
print("extrema indices", ext[:10].tolist())
print("smallest gap: pool", np.diff(pool).min(), " extrema", np.diff(ext).min())

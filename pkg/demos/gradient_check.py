"""
Checking the hand-written gradients
===================================

The backward pass treats each activation's selection as fixed and routes
the MAE gradient through both uses of a kernel: the similarity correlation
and the reconstruction correlation. Central finite differences confirm it
wherever a small nudge does not change what gets selected.
"""

from sanet.gradcheck import gradcheck_suite

results = gradcheck_suite(seed=0, count=5)
for (tag, rank), r in results.items():
    print(f"{tag:22s} {rank}D  max relative error {r.max_rel_error:.1e}  "
          f"stable coordinates {r.stable}/{r.total}")

#!/usr/bin/env python3
"""Compare decoders by compute budget (effective beam size).

The effective beam size is the per-step candidate budget: the beam width for
direct search and the single-stage online decoder, k1*k2 for the two-stage
variant. Larger beams keep improving the noisy-channel objective while plain
direct search saturates almost immediately.
"""

import sys, os

from ncdecode import ScalingConfig
from ncdecode.experiments import budget_curve, curve_to_csv

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))
from acceptance_worlds import controllability_setup  # noqa: E402

world, scorers, _, test = controllability_setup()
rows = budget_curve(
    test[:200], scorers, ScalingConfig(1.0, 0.6, 0.4),
    budgets=[1, 2, 4, 8, 16], max_len=6, length_normalize_final=False,
)
print(curve_to_csv(rows))
print("kind, budget -> mean combined score")
for row in rows:
    print("  %-12s %2d   %.4f" % (row["kind"], row["budget"], row["mean_combined"]))

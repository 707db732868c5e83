#!/usr/bin/env python3
"""Sweep the channel scaling factor and watch the factuality/fluency tradeoff.

Higher channel weight copies more from the grounding (LCS ratio and token-F1
rise); perplexity under the response LM rises with it, the fluency price of
heavier copying.
"""

import numpy as np

from ncdecode import BeamConfig, ScalingConfig, online_decode
from ncdecode.experiments import example_condition, lm_condition
from ncdecode.metrics import lcs_ratio, perplexity, token_f1

import sys, os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "tests"))
from acceptance_worlds import controllability_setup  # noqa: E402

world, (direct, channel, lm), _, test = controllability_setup()
test = test[:200]
cfg = BeamConfig(beam=4, max_len=6, length_normalize_final=True)

print("lambda1/lambda2   token-F1   LCS-ratio   PPL")
for lam1 in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
    scaling = ScalingConfig(1.0, lam1, 0.5)
    outs = [online_decode(direct, channel, lm, example_condition(ex), scaling, cfg)
            for ex in test]
    f1 = np.mean([token_f1(h.content, ex.document) for h, ex in zip(outs, test)])
    lcs = np.mean([lcs_ratio(h.content, ex.document) for h, ex in zip(outs, test)])
    ppl = perplexity(lm, [h.content for h in outs],
                     [lm_condition(ex) for ex in test])
    print("   %.1f / 0.5      %.3f      %.3f     %6.2f" % (lam1, f1, lcs, ppl))

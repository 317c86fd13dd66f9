"""Initialization certificates and the inequality suite.

A position vector is certified when every piece holds enough neurons, the
minimum gap clears a threshold, and the flank pair around each discontinuity
is asymmetric enough.  Uniform initializations with the prescribed neuron
budget are certified with high probability, and the whole stack of
supporting inequalities can be re-verified by Monte Carlo at any time.
"""

import numpy as np

import twoscale as ts
from twoscale.experiments import demo_target
from twoscale.oracles import format_report_table, lemma_suite

target = demo_target()
rng = np.random.default_rng(0)

_, u = ts.sample_init(40, rng)
report = ts.is_spread_good(u, target, D=1e-3, eta=4e-3)
print(f"one uniform draw with 40 neurons certified: {report.is_good}")
for witness in report.witnesses:
    print(f"  - {witness}")

freq, lo, hi = ts.estimate_good_probability(260, target, 0.5 / (6 * 261**2), 0.0, 5000, rng)
print(f"\nwith the prescribed budget (260 neurons, failure budget 0.5): "
      f"certified fraction {freq:.3f}, 95% interval [{lo:.3f}, {hi:.3f}]")

print("\ninequality suite on 150 random configurations:")
print(format_report_table(lemma_suite(np.random.default_rng(1), trials=150)))

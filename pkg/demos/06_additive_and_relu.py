"""Beyond one dimension: additive staircases and ReLU kinks.

The same regime separation shows up for additive multivariate targets (one
staircase per axis) and for continuous piecewise-affine targets fitted with
ReLU activations: a small inner/outer stepsize ratio covers every
discontinuity (or kink), ratio one does not.
"""

import numpy as np

import twoscale as ts
from twoscale.experiments import demo_axis_target, demo_relu_target

axis = demo_axis_target()
target2d = ts.AdditiveTarget((axis, axis))
act = ts.smooth_sigmoid(1e-2)
rng = np.random.default_rng(0)
state0 = ts.AdditiveNetworkState(0.0, rng.uniform(0, 3, (10, 2)), rng.random((10, 2)))

for label, eps, steps in (("two-timescale", 1e-2, 17_000), ("standard", 1.0, 1_000)):
    cfg = ts.SgdConfig(h=0.3, epsilon=eps, steps=steps, batch_size=1000, noise="none",
                       seed=0, eval_every=steps)
    rec = ts.train(state0, target2d, act, cfg)
    print(f"2d {label:14s}: worst per-axis alignment {np.max(rec.final_alignment):.4f}, "
          f"distance {np.sqrt(2 * rec.final_loss):.3f}")

relu_target = demo_relu_target()
relu_act = ts.relu()
state_relu = ts.NetworkState(np.concatenate(([0.0], rng.uniform(0, 3, 10))), rng.random(10))
for label, eps, steps in (("two-timescale", 1e-2, 17_000), ("standard", 1.0, 1_000)):
    cfg = ts.SgdConfig(h=0.3, epsilon=eps, steps=steps, batch_size=1000, noise="none",
                       seed=0, eval_every=steps)
    rec = ts.train(state_relu, relu_target, relu_act, cfg)
    print(f"relu {label:12s}: worst kink distance {np.max(rec.final_alignment):.4f}, "
          f"loss {rec.final_loss:.5f}")

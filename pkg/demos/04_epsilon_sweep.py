"""Where the two-timescale regime ends.

Sweeping the stepsize ratio from 2e-5 up to 1 (a few seeds per point, for
speed) shows recovery degrading, with the largest jump around 0.1: beyond it
all neurons chase the residual at once, spacing collapses somewhere, and one
of the discontinuities is left uncovered.
"""

from pathlib import Path

import numpy as np

import twoscale as ts
from twoscale.experiments import EPS_GRID, demo_target, sample_certified_init, sweep_schedule
from twoscale.svgplot import emit_svg

target = demo_target()
act = ts.smooth_sigmoid(4e-3)
seeds = range(5)

means, sds = [], []
for eps in EPS_GRID:
    h, steps = sweep_schedule(eps)
    finals = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        a0, u0 = sample_certified_init(20, target, rng)
        cfg = ts.SgdConfig(h=h, epsilon=eps, steps=steps, noise="uniform",
                           seed=1000 + seed, eval_every=steps)
        rec = ts.train(ts.NetworkState(a0, u0), target, act, cfg)
        finals.append(np.sqrt(2 * rec.final_loss))
    means.append(float(np.mean(finals)))
    sds.append(float(np.std(finals)))
    print(f"ratio {eps:8.0e}: final distance {means[-1]:.3f} +- {sds[-1]:.3f} "
          f"(stepsize {h:g}, {steps:,} steps)")

out = Path("twoscale-out/demos")
out.mkdir(parents=True, exist_ok=True)
emit_svg(
    np.array(means),
    dict(kind="bar", labels=[f"{e:g}" for e in EPS_GRID], errors=np.array(sds),
         title="final distance vs timescale ratio", x_label="timescale ratio",
         y_label="L2 distance"),
    out / "epsilon_sweep.svg",
)
print(f"\nwrote {out / 'epsilon_sweep.svg'}")

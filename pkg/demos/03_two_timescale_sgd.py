"""Two-timescale SGD against its idealized limit.

One-pass SGD with the inner stepsize a factor 2e-5 below the outer one
follows the reduced limit closely on the shared slow time scale: after a
short weight-fitting transient the loss curves agree, every discontinuity
acquires a neuron, and SGD plateaus just above the best-response floor.
"""

from pathlib import Path

import numpy as np

import twoscale as ts
from twoscale.experiments import REFERENCE_SEED, demo_target, sample_certified_init
from twoscale.svgplot import emit_svg

target = demo_target()
act = ts.smooth_sigmoid(4e-3)
rng = np.random.default_rng(REFERENCE_SEED)
a0, u0 = sample_certified_init(20, target, rng)

cfg = ts.SgdConfig(h=1e-3, epsilon=2e-5, steps=1_800_000, batch_size=1,
                   noise="uniform", seed=REFERENCE_SEED, eval_every=18_000)
print(f"running {cfg.steps:,} SGD steps (ratio {cfg.epsilon:g}, noise on) ...")
record = ts.train(ts.NetworkState(a0, u0), target, act, cfg)

tau_end = cfg.epsilon * cfg.h * cfg.steps
limit = ts.integrate_limit_reduced(
    u0, target, ts.FlowConfig(dt=tau_end / 2000, t_end=tau_end, record_every=40)
)

tau = record.times * cfg.epsilon * cfg.h
print(f"\nfinal alignment: {np.array2string(record.final_alignment, precision=5)}")
print(f"final loss {record.final_loss:.4f} vs best-response floor "
      f"{ts.loss(ts.best_fit(record.final_positions, act, target), record.final_positions, act, target):.4f}")

out = Path("twoscale-out/demos")
out.mkdir(parents=True, exist_ok=True)
emit_svg(
    [
        ("sgd", tau[1:], record.losses[1:]),
        ("reduced limit", limit.times[1:], limit.losses[1:] + 1e-16),
    ],
    dict(kind="line", title="SGD vs reduced limit on slow time", x_label="slow time",
         y_label="loss", logy=True),
    out / "sgd_vs_limit.svg",
)
print(f"wrote {out / 'sgd_vs_limit.svg'}")

"""The reduced limit: only the flanking neurons move.

In the limit of an infinitely fast outer layer and an infinitely sharp
non-linearity, the weights sit at their best response and the loss becomes a
sum of independent per-discontinuity terms.  Each discontinuity then pulls
its two flanking neurons toward itself until one of them lands on it, at
which point both freeze.  Every other neuron is conserved exactly.
"""

from pathlib import Path

import numpy as np

import twoscale as ts
from twoscale.experiments import demo_target, sample_certified_init
from twoscale.svgplot import emit_svg

target = demo_target()
rng = np.random.default_rng(0)
_, u0 = sample_certified_init(20, target, rng)

horizon = ts.recovery_horizon(1.0, delta_f=1.0)  # slow-time units
print(f"recovery horizon for unit jumps: {horizon:g}")

record = ts.integrate_limit_reduced(
    u0, target, ts.FlowConfig(dt=5e-4, t_end=horizon, record_every=200)
)

print("\nper-discontinuity distance of the nearest neuron:")
print(f"  start: {np.array2string(record.alignment[0], precision=4)}")
print(f"  end:   {np.array2string(record.final_alignment, precision=4)}")
print(f"loss: {record.losses[0]:.4f} -> {record.final_loss:.2e}")

moved = np.abs(record.final_positions - u0) > 0
print(f"{int(np.sum(moved))} of {u0.size} neurons moved (the flanks); "
      "the rest are bitwise conserved")

out = Path("twoscale-out/demos")
out.mkdir(parents=True, exist_ok=True)
emit_svg(
    [("reduced-limit loss", record.times[1:], record.losses[1:] + 1e-18)],
    dict(kind="line", title="loss under the reduced limit", x_label="slow time",
         y_label="loss", logy=True),
    out / "reduced_limit_loss.svg",
)
print(f"\nwrote {out / 'reduced_limit_loss.svg'}")

"""Exact losses and gradients for a staircase target.

The population loss of the shallow translation network against a staircase
target is available in closed form: a quadratic in the outer weights with a
Gram matrix whose sharp-window correction is diagonal and position
independent.  This script builds the six-piece demo staircase, prints the
pieces of that quadratic, and certifies the closed forms against slow
brute-force references.
"""

import numpy as np

import twoscale as ts
from twoscale.network import forward
from twoscale.oracles import fd_gradient, riemann_integral, sample_admissible_positions
from twoscale.experiments import demo_target

target = demo_target()
act = ts.smooth_sigmoid(4e-3)
rng = np.random.default_rng(0)

print("demo target pieces:")
for lo, hi, val in zip(target.breakpoints[:-1], target.breakpoints[1:], target.values):
    print(f"  [{lo:.2f}, {hi:.2f}) -> {val:g}")

u = sample_admissible_positions(rng, 8, target, act.eta, min_per_piece=1)
a = rng.uniform(-3, 3, 9)
print(f"\npositions: {np.array2string(np.sort(u), precision=3)}")

H = ts.hessian(u, act)
b = ts.linear_term(u, act, target)
c = 0.5 * target.integral(0.0, 1.0, power=2)
quadratic_form = 0.5 * a @ H @ a - b @ a + c
exact = ts.loss(a, u, act, target)
state = ts.NetworkState(a, u)
brute = 0.5 * riemann_integral(lambda x: (forward(state, act, x) - target(x)) ** 2, 0, 1, 2_000_000)
print(f"\nloss three ways (quadratic form / cell quadrature / 2M-point Riemann):")
print(f"  {quadratic_form:.12f} / {exact:.12f} / {brute:.12f}")

ga, gu = ts.population_gradient(state, act, target)
fa = fd_gradient(lambda aa: ts.loss(aa, u, act, target), a, 1e-6)
fu = fd_gradient(lambda uu: ts.loss(a, uu, act, target), u, 1e-7)
print(f"\ngradient residuals vs central differences:")
print(f"  weights   {np.max(np.abs(ga - fa)):.2e}")
print(f"  positions {np.max(np.abs(gu - fu)):.2e}")

a_star = ts.best_fit(u, act, target)
print(f"\nbest response solves the normal equations with residual "
      f"{np.linalg.norm(H @ a_star - b):.2e}")
print(f"loss at the best response: {ts.loss(a_star, u, act, target):.6f}")
print(f"smallest Gram eigenvalue {ts.min_eigenvalue(H):.4f} "
      f">= min gap / 8 = {ts.min_gap(u, act.eta) / 8:.4f}")

"""Numerical verification of the two analysis facts: the averaged-Jacobian
lower bound on the difference quotient, and the co-attraction of latent
neighborhoods under one optimizer step.

Run: python demos/04_gradient_bound_and_attraction.py
"""

import numpy as np

from divgan.autodiff import Var, backward
from divgan.nets import NetworkSpec, mlp_forward_vars, mlp_init, NetworkParams
from divgan.optim import AdamHyper, adam_init, adam_step
from divgan.theory import attraction_check, bound_suite, path_gradient_bound

rng = np.random.default_rng(0)
params = mlp_init(NetworkSpec(2, (32, 32), 2, hidden_activation="tanh"), seed=4)

# One pair in detail: the difference quotient never exceeds the averaged
# spectral norm of the Jacobian along the connecting segment.
rep = path_gradient_bound(params, rng.standard_normal(2), rng.standard_normal(2), n_quad=64)
print(f"difference quotient lhs = {rep.lhs:.6f}")
print(f"quadrature rhs          = {rep.rhs:.6f}")
print(f"slack (rhs - lhs)       = {rep.slack:.6f}, holds: {rep.holds}")

# The inequality is parameter-independent: an untrained net passes too.
out = bound_suite(params, n_pairs=100, rng=rng)
print(f"bound suite: {out['pairs']} pairs, {out['violations']} violations")

# Attraction: pull G(z1) toward a target with one real Adam step, then
# check that every probe satisfying the closeness condition moved too.
z1 = rng.standard_normal(2)
y_star = rng.standard_normal(2) * 2

gvars = [Var(p) for p in params.flat()]
outv, _ = mlp_forward_vars(gvars, params.spec, z1[None, :])
dist = (outv - Var(y_star[None, :])).square().sum().sqrt()
backward(dist)
new_flat, _ = adam_step(params.flat(), [v.grad for v in gvars],
                        adam_init(params.flat()), AdamHyper())
params_next = NetworkParams.from_flat(params.spec, new_flat)

rep = attraction_check(params, params_next, z1, y_star, probes=10_000, rng=rng)
s = rep.summary()
print(f"epsilon = {s['epsilon']:.3e}")
print(f"probes with the condition: {s['n_condition_holds']} / {s['n_probes']}")
print(f"counterexamples to 'condition implies attraction': {s['counterexamples']}")
print(f"sampled neighborhood-radius estimate: {s['radius_estimate']}")

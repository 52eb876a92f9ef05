"""Walk through the autodiff engine: build a small expression, read exact
gradients, and confirm them against central finite differences.

Run: python demos/01_autodiff_and_gradcheck.py
"""

import numpy as np

from divgan.autodiff import Var, evaluate_with_gradients, finite_diff_gradient, jacobian

# A scalar expression y = mean(tanh(x W + b)^2) and its exact gradients.
rng = np.random.default_rng(0)
x = rng.normal(size=(4, 3))
W = rng.normal(size=(3, 5))
b = np.zeros(5)

value, (gW, gb) = evaluate_with_gradients(
    lambda w, c: ((Var(x) @ w) + c).tanh().square().mean(), [W, b]
)
print(f"value = {value:.6f}")
print(f"dL/dW has shape {gW.shape}, dL/db has shape {gb.shape}")

# The finite-difference oracle never touches the graph machinery.
fd = finite_diff_gradient(
    lambda w: evaluate_with_gradients(
        lambda wv, c: ((Var(x) @ wv) + c).tanh().square().mean(), [w, b]
    )[0],
    W,
)
err = np.max(np.abs(fd - gW) / np.maximum(np.abs(fd), 1.0))
print(f"max relative error vs central differences: {err:.2e}")

# Jacobians come from seeded backward passes, one per output component.
A = np.array([[2.0, 0.0], [0.0, 1.0]])
J = jacobian(lambda z: z @ Var(A.T), np.array([[1.0, 1.0]]))
print("Jacobian of the linear map z -> Az:")
print(J)

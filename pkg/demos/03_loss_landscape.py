#!/usr/bin/env python3
# Evaluate the training objective and its pieces on a toy batch, and
# confirm the analytic code gradient against finite differences.
import numpy as np

from icshash import (
    LossConfig,
    assignment_for_labels,
    bce_distance,
    generate_centers,
    loss_gradient_wrt_codes,
    total_loss,
)

rng = np.random.default_rng(0)
center_set = generate_centers(16, 8, seed=0)
cfg = LossConfig(beta=0.1, gamma=0.05, lam=0.01)

# one two-label sample with a code halfway to its first center
labels = np.zeros(8, dtype=np.int8)
labels[[2, 5]] = 1
assignment = assignment_for_labels(center_set, labels)
code = 0.5 + 0.4 * (assignment.centers01[0] - 0.5)
weights = [np.array([0.7, 0.3])]

print("per-center distances:",
      [round(bce_distance(code, c01), 3) for c01 in assignment.centers01])
value, parts = total_loss(code[None, :], [assignment], weights, cfg)
print(f"total={value:.4f} parts={{ " +
      ", ".join(f"{k}: {v:.4f}" for k, v in parts.items()) + " }")

grad = loss_gradient_wrt_codes(code[None, :], [assignment], weights, cfg)[0]
step = 1e-6
fd = np.empty_like(grad)
for j in range(code.size):
    up, down = code.copy(), code.copy()
    up[j] += step
    down[j] -= step
    fd[j] = (
        total_loss(up[None, :], [assignment], weights, cfg)[0]
        - total_loss(down[None, :], [assignment], weights, cfg)[0]
    ) / (2 * step)
print(f"max |analytic - finite difference| = {np.abs(grad - fd).max():.2e}")

# moving the code toward its dominant center lowers the objective
closer = 0.5 + 0.49 * (assignment.centers01[0] - 0.5)
closer_value, _ = total_loss(closer[None, :], [assignment], weights, cfg)
print(f"code pulled toward dominant center: {value:.4f} -> {closer_value:.4f}")

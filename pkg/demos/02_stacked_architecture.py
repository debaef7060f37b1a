"""Inside the stacked denoiser: block outputs, residuals, joint gradients.

The stacked model chains denoiser blocks.  Block 1 produces a first
reconstruction x1 from the noisy input y.  Block 2 does not just see x1:
it also receives z = y - x1, an explicit estimate of whatever block 1
failed to remove, concatenated as [x1; z].  Training is joint, so block 1
receives gradient through both slots (and through the residual slot the
sign flips, because z moves opposite to x1).

Run: python demos/02_stacked_architecture.py
"""

import numpy as np

from xvden import build_stacked, stacked_forward

DIM = 6
model = build_stacked(dim=DIM, hidden=12, seed=3)
print(f"blocks: {len(model.blocks)}")
for i, block in enumerate(model.blocks, start=1):
    shape = " -> ".join(str(l.in_dim) for l in block.layers) + f" -> {block.out_dim}"
    acts = ", ".join(l.activation for l in block.layers)
    print(f"  block {i}: {shape}  ({acts})")
print(f"total parameters: {model.n_params}")

rng = np.random.default_rng(5)
y = rng.standard_normal(DIM)

x_hat, trace = stacked_forward(model, y)
print("\nnoisy input      :", np.round(y, 3))
print("block-1 output x1:", np.round(trace.x1, 3))
print("residual z = y-x1:", np.round(trace.z, 3))
print("final output     :", np.round(x_hat, 3))
print(f"\n||z|| = {np.linalg.norm(trace.z):.4f} is block 1's reconstruction error norm")

# Joint training: one loss at the end, gradients for every block.
target = rng.standard_normal(DIM)
grads, loss = model.backprop(y[None, :], target[None, :])
print(f"\nbatch loss: {loss:.5f}")
for i, block_grads in enumerate(grads, start=1):
    norms = [float(np.linalg.norm(dw)) for dw, _ in block_grads]
    print(f"  block {i} per-layer weight-gradient norms: {np.round(norms, 5)}")
print("both blocks receive gradient from the single shared loss")

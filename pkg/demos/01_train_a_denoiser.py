"""Train a plain denoising autoencoder on synthetic embedding pairs.

Walks through the smallest useful workflow: make (noisy, clean) pairs,
build the two-weight-layer network (wide tanh hidden layer, linear output),
run SGD with the decaying learning rate, and check that reconstruction
error actually drops below the do-nothing baseline.

Run: python demos/01_train_a_denoiser.py
"""

import numpy as np

from xvden import EmbeddingPair, TrainConfig, build_dae, mse, train

rng = np.random.default_rng(0)
DIM = 16

# Clean vectors cluster around per-speaker means; noisy versions add a
# shared corruption direction plus a little diffuse jitter.
noise_direction = rng.standard_normal(DIM)
noise_direction /= np.linalg.norm(noise_direction)

pairs = []
for speaker in range(30):
    mean = rng.normal(0.0, 0.5, DIM)
    for utt in range(12):
        clean = mean + 0.12 * rng.standard_normal(DIM)
        gain = 0.4 * np.linalg.norm(clean) * rng.uniform(0.3, 1.0)
        noisy = clean + gain * noise_direction + 0.02 * rng.standard_normal(DIM)
        pairs.append(EmbeddingPair(key=f"s{speaker}/u{utt}", noisy=noisy, clean=clean))

# Shuffle before splitting so held-out pairs share the speaker population.
order = rng.permutation(len(pairs))
train_pairs = [pairs[i] for i in order[:300]]
dev_pairs = [pairs[i] for i in order[300:]]

net = build_dae(dim=DIM, hidden=32, seed=7)
print(f"network: {DIM} -> 32 (tanh) -> {DIM} (linear), {net.n_params} parameters")

config = TrainConfig(initial_lr=0.05, decay=0.0001, epochs=300, batch_size=32, seed=1)
net, history = train(net, train_pairs, dev_pairs, config)

print("\nepoch    train MSE      dev MSE")
for epoch in range(0, config.epochs, 50):
    print(f"{epoch:5d}  {history.train_mse[epoch]:11.6f}  {history.dev_mse[epoch]:11.6f}")
print(f"final  {history.final_train_mse:11.6f}  {history.final_dev_mse:11.6f}")

from xvden.embeddings import PairBatch  # noqa: E402

dev = PairBatch.from_pairs(dev_pairs)
baseline = mse(dev.noisy, dev.clean)
denoised = mse(net.forward(dev.noisy), dev.clean)
print(f"\ndev MSE doing nothing: {baseline:.6f}")
print(f"dev MSE after denoising: {denoised:.6f}")
print(f"error removed: {100 * (1 - denoised / baseline):.1f}%")
assert denoised < baseline

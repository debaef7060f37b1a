"""The whole pipeline on the seeded benchmark corpus (a few minutes).

Generates the synthetic corpus (unseen noise held out for test), trains
the plain and stacked denoisers, trains PLDA on clean embeddings, and
evaluates four conditions: clean test vectors, corrupted test vectors,
and corrupted vectors passed through each denoiser.

Run: python demos/05_full_benchmark.py
"""

from xvden.benchmark import BenchmarkConfig, run_benchmark
from xvden.evaluation import DURATION_BUCKETS

result = run_benchmark(BenchmarkConfig())

print("overall EER by condition:")
order = ("clean", "stacked", "dae", "noisy")
for name in order:
    print(f"  {name:8s} {100 * result.reports[name].overall_eer:7.3f}%")

print("\nrelative improvement over the noisy baseline:")
for name in ("dae", "stacked"):
    print(f"  {name:8s} {result.improvement_over_noisy(name):6.1f}%")

print("\nper-bucket EER (%) where both trial classes exist:")
header = "  bucket      " + "".join(f"{name:>10s}" for name in order)
print(header)
for label, _, _ in DURATION_BUCKETS:
    cells = []
    for name in order:
        bucket = result.reports[name].buckets.get(label)
        cells.append(f"{100 * bucket.eer:10.3f}" if bucket else f"{'-':>10s}")
    print(f"  {label:<10s}" + "".join(cells))

dae = result.denoisers["dae"].history
stacked = result.denoisers["stacked"].history
print(f"\ndev MSE: dae {dae.final_dev_mse:.5f}, stacked {stacked.final_dev_mse:.5f}")
print("the stacked refinement should match or beat the plain denoiser")

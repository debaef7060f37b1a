"""Equal error rate mechanics: sweeps, DET points, buckets, improvements.

EER is the operating point where the false-acceptance and false-rejection
rates meet.  The sweep visits every distinct score as a threshold (ties
count as acceptances) and reads the crossing off the polyline by linear
interpolation, which keeps the estimate stable for small trial lists.

Run: python demos/04_eer_evaluation.py
"""

import numpy as np

from xvden import ScoreSet, Trial, compute_eer, det_points, relative_improvement
from xvden.evaluation import bucket_trials

rng = np.random.default_rng(4)

# A toy system: target scores sit higher than nontargets, with overlap.
targets = rng.normal(1.2, 1.0, 60)
nontargets = rng.normal(-0.5, 1.0, 200)
trials = [Trial(f"e{i}", f"t{i}", True, float(np.exp(rng.uniform(0, 2.7)))) for i in range(60)]
trials += [Trial(f"e{i}", f"n{i}", False, float(np.exp(rng.uniform(0, 2.7)))) for i in range(200)]
scores = ScoreSet(trials=trials, scores=np.concatenate([targets, nontargets]))

eer, threshold = compute_eer(scores)
print(f"EER = {100 * eer:.2f}% at threshold {threshold:.3f}")

pts = det_points(scores)
print(f"\nDET polyline has {len(pts)} operating points; a few of them:")
for far, frr in pts[:: max(1, len(pts) // 6)]:
    print(f"  FAR {far:6.3f}  FRR {frr:6.3f}")

print("\ntrials per duration bucket:")
for label, members in bucket_trials(trials).items():
    if members:
        print(f"  {label:>9s}: {len(members)}")

# Relative improvement over the reference duration-bucket rows for the
# stacked denoiser against the noisy baseline.
noisy_row = [15.94, 12.88, 10.5, 7.836, 8.889, 6.667, 5.131]
stacked_row = [13.04, 10.46, 8.011, 5.224, 5.333, 3.59, 2.502]
labels = ["s<2", "2-4", "4-6", "6-8", "8-10", "10-12", ">12"]
print("\nrelative EER improvement per duration bucket (protocol 1):")
for label, base, system in zip(labels, noisy_row, stacked_row):
    print(f"  {label:>6s}: {base:6.3f} -> {system:6.3f}  ({relative_improvement(base, system):5.2f}%)")

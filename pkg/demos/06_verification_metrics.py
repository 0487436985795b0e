"""
Verification metrics: ROC sweep, equal error rate, operating point
==================================================================

Verification reduces to thresholding a score. Sweep the threshold over
every observed score and you get the full trade-off curve between
catching genuine trials (TPR) and rejecting impostors (TNR). The equal
error rate is the point where the two error kinds balance.
"""

from pathlib import Path

import numpy as np

from snorebio import eer_from_roc, roc_points
from snorebio.recognizer import operating_point, write_roc_csv

# A tiny worked example first: three genuine and three impostor scores.
genuine = [0.9, 0.8, 0.3]
impostor = [0.7, 0.2, 0.1]
points = roc_points(genuine, impostor)
print("threshold sweep (accept iff score >= t):")
print("        t    tpr    fpr")
for p in points:
    print(f"  {p.threshold:7.1f}  {p.tpr:.3f}  {p.fpr:.3f}")
eer, threshold = eer_from_roc(points)
print(f"\nFNR meets FPR at t={threshold}: EER = {eer:.4f}")

# Now realistic score clouds. Genuine scores sit one standard deviation
# above the impostors; the overlap is what the EER measures.
rng = np.random.default_rng(0)
genuine = rng.standard_normal(400) + 1.2
impostor = rng.standard_normal(1200)
points = roc_points(genuine, impostor)
eer, threshold = eer_from_roc(points)
print(f"\n400 genuine vs 1200 impostor draws, unit-variance, mean gap 1.2")
print(f"EER {eer:.4f} at threshold {threshold:.4f}")

# At the EER threshold the two rates mirror each other. At a stricter
# threshold TNR rises and TPR pays for it.
for t in (threshold, threshold + 0.5, threshold + 1.0):
    tpr, tnr = operating_point(genuine, impostor, t)
    print(f"  threshold {t:6.3f}: tpr {tpr:.3f}  tnr {tnr:.3f}")

out = Path(__file__).resolve().parent / "out" / "06_metrics" / "roc.csv"
write_roc_csv(points, out)
print(f"\nwrote the full sweep to {out}")

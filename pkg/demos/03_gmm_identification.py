"""
Closed-set identification with per-subject mixtures
===================================================

Four utterances enroll each subject as a diagonal-covariance Gaussian
mixture over their cepstral frames; the fifth utterance is held out.
A test clip is attributed to whichever subject's mixture gives it the
highest per-frame average log-likelihood.
"""

from pathlib import Path

import numpy as np

from snorebio import (
    GmmFitConfig,
    MfccConfig,
    SyntheticSpec,
    extract_mfcc,
    fit_gmm,
    generate_synthetic_corpus,
    make_split,
    read_wav,
    score,
)

out_dir = Path(__file__).resolve().parent / "out" / "03_gmm"
spec = SyntheticSpec(n_subjects=5, utterances_per_subject=5, duration_s=1.0, seed=11)
manifest = generate_synthetic_corpus(spec, out_dir)
split = make_split(manifest)
mfcc = MfccConfig()


def frames_of(record):
    return extract_mfcc(read_wav(record.audio_path), mfcc).frames


# Enrollment: one K=5 mixture per subject on the stacked enrollment frames.
models = {}
for i, subject in enumerate(split.eligible_subjects):
    rows = np.vstack([frames_of(r) for r in split.enroll[subject]])
    models[subject] = fit_gmm(rows, GmmFitConfig(n_components=5, seed=i))
    print(f"enrolled {subject}: {rows.shape[0]} frames -> K=5 mixture")

# Identification: score every held-out utterance against every model.
subjects = list(split.eligible_subjects)
print("\nscore matrix (rows: true subject of the test clip)")
print("          " + "  ".join(f"{s:>7}" for s in subjects))
correct = 0
for subject in subjects:
    test = frames_of(split.test[subject])
    scores = [score(models[s], test) for s in subjects]
    picked = subjects[int(np.argmax(scores))]
    correct += picked == subject
    row = "  ".join(f"{v:7.2f}" for v in scores)
    print(f"  {subject}  {row}   -> {picked}")

print(f"\nidentification accuracy: {correct}/{len(subjects)}")

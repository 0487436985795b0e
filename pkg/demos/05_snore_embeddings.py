"""
Fixed-length snore embeddings from a classifier network
=======================================================

A small feed-forward network learns to classify development subjects
from 50-frame stacks of cepstra. Chop off its output layer and the last
hidden activation becomes a fixed-length identity vector: L2-normalize
per observation, accumulate over 15 observations, normalize again.
Enrollment averages four utterance embeddings into a subject embedding;
scoring is plain cosine similarity.
"""

from pathlib import Path

import numpy as np

from snorebio import (
    MfccConfig,
    SyntheticSpec,
    TrainConfig,
    cosine_similarity,
    extract_mfcc,
    generate_synthetic_corpus,
    make_split,
    read_wav,
    subject_embedding,
    train_network,
    utterance_embedding,
)

out_dir = Path(__file__).resolve().parent / "out" / "05_embeddings"
spec = SyntheticSpec(n_subjects=4, utterances_per_subject=5, duration_s=1.0, seed=21)
manifest = generate_synthetic_corpus(spec, out_dir)
split = make_split(manifest)
mfcc = MfccConfig()


def features_of(record):
    return extract_mfcc(read_wav(record.audio_path), mfcc)


# Scaled-down training budget so the demo runs in seconds; the library
# defaults (4 x 128 units, 80 epochs) are what evaluations use.
development = {s: [features_of(r) for r in recs] for s, recs in split.development.items() if recs}
config = TrainConfig(epochs=25, hidden_layers=2, hidden_units=32, train_stride=2, seed=0)
network = train_network(development, config)
losses = network.meta["epoch_losses"]
print(f"trained on {network.meta['n_examples']} stacked frames; "
      f"loss {losses[0]:.3f} -> {losses[-1]:.3f}, "
      f"train accuracy {network.meta['final_train_accuracy']:.2f}")

# Enroll: average of the four utterance embeddings, renormalized.
enrolled = {}
for subject in split.eligible_subjects:
    per_utt = [utterance_embedding(network, features_of(r)) for r in split.enroll[subject]]
    enrolled[subject] = subject_embedding(per_utt, subject_id=subject)

subjects = list(split.eligible_subjects)
print("\ncosine similarity, held-out clip (row) vs enrolled subject (column):")
print("          " + "  ".join(f"{s:>6}" for s in subjects))
correct = 0
for subject in subjects:
    probe = utterance_embedding(network, features_of(split.test[subject]))
    sims = [cosine_similarity(probe, enrolled[s]) for s in subjects]
    picked = subjects[int(np.argmax(sims))]
    correct += picked == subject
    print(f"  {subject}  " + "  ".join(f"{v:6.3f}" for v in sims) + f"   -> {picked}")

print(f"\nidentification accuracy: {correct}/{len(subjects)}")
print("every embedding is unit norm, so the similarity is bounded by [-1, 1]")

"""
The full pipeline, three backends side by side
==============================================

Synthesize a corpus, then run develop/enroll/evaluate for each backend
and compare the reports. This drives the same phase functions as the
`snorebio` command line:

    snorebio synth    --config run.toml
    snorebio train    --config run.toml --backend dnn
    snorebio enroll   --config run.toml --backend dnn
    snorebio evaluate --config run.toml --backend dnn
"""

import time
from dataclasses import replace
from pathlib import Path

from snorebio import RunConfig, SyntheticSpec, TrainConfig
from snorebio.pipeline import run_enroll, run_evaluate, run_synth, run_train

root = Path(__file__).resolve().parent / "out" / "07_full"

base = RunConfig(
    manifest=root / "corpus" / "manifest.csv",
    seed=0,
    out_dir=root,
    synth=SyntheticSpec(n_subjects=6, utterances_per_subject=5, duration_s=1.5, seed=4),
    # scaled-down network budget so the demo stays under a minute; the
    # library default is 4 x 128 units for 80 epochs
    train=TrainConfig(epochs=30, hidden_layers=2, hidden_units=64, train_stride=2, seed=0),
)

run_synth(base)
print(f"corpus under {root / 'corpus'}\n")

for backend in ("gmm", "gmm-ubm", "dnn"):
    config = replace(base, backend=backend, out_dir=root / backend)
    started = time.perf_counter()
    run_train(config)      # background model or network; no-op for plain gmm
    run_enroll(config)     # four utterances per subject -> registry.json
    print(f"--- {backend} " + "-" * (40 - len(backend)))
    run_evaluate(config)   # held-out fifth utterances; prints its summary
    print(f"({time.perf_counter() - started:.1f} s; artifacts in {config.out_dir})\n")

"""Command-line entry point.

    snorebio synth --config run.toml
    snorebio train --config run.toml --backend gmm-ubm
    snorebio enroll --config run.toml --backend gmm-ubm
    snorebio evaluate --config run.toml --backend gmm-ubm [--sweep-k]
    snorebio identify --config run.toml --wav clip.wav
    snorebio verify --config run.toml --wav clip.wav --claimed s07 --threshold 0.45
    snorebio dump-features --config run.toml --wav clip.wav --out feats.csv

Data goes to stdout, diagnostics to stderr; exit status is 0 iff the
command succeeded.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import SnoreBioError
from .pipeline import (
    load_run_config,
    run_dump_features,
    run_enroll,
    run_evaluate,
    run_identify,
    run_sweep_k,
    run_synth,
    run_train,
    run_verify,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="TOML run config")
    parser.add_argument("--backend", choices=("gmm", "gmm-ubm", "dnn"), help="override backend")
    parser.add_argument("--seed", type=int, help="override base seed")
    parser.add_argument("--threads", type=int, help="worker threads for enrollment")
    parser.add_argument("--out-dir", help="override artifact directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snorebio", description="Snore-based speaker recognition pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate the synthetic snore corpus")
    _add_common(p)

    p = sub.add_parser("train", help="fit the shared development model")
    _add_common(p)

    p = sub.add_parser("enroll", help="build the subject registry")
    _add_common(p)

    p = sub.add_parser("evaluate", help="score held-out utterances, write reports")
    _add_common(p)
    p.add_argument("--threshold", type=float, help="operating threshold (default: EER threshold)")
    p.add_argument("--sweep-k", action="store_true", help="sweep mixture sizes 5,10,15,20,25")

    p = sub.add_parser("identify", help="identify a single WAV")
    _add_common(p)
    p.add_argument("--wav", required=True, help="input WAV file")

    p = sub.add_parser("verify", help="verify a claimed identity for a WAV")
    _add_common(p)
    p.add_argument("--wav", required=True, help="input WAV file")
    p.add_argument("--claimed", required=True, help="claimed subject id")
    p.add_argument("--threshold", type=float, required=True, help="accept/reject threshold")

    p = sub.add_parser("dump-features", help="export per-frame features as CSV")
    _add_common(p)
    p.add_argument("--wav", required=True, help="input WAV file")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--spectrogram", action="store_true", help="dump the power spectrogram instead of cepstra")

    return parser


def _config_from_args(args) -> "RunConfig":
    out_dir = args.out_dir
    if out_dir is not None:
        # CLI-relative, not config-relative
        out_dir = str(Path(out_dir).absolute())
    return load_run_config(
        args.config,
        backend=args.backend,
        seed=args.seed,
        threads=args.threads,
        out_dir=out_dir,
        threshold=getattr(args, "threshold", None),
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        if args.command == "synth":
            manifest = run_synth(config)
            print(f"manifest              {manifest}")
        elif args.command == "train":
            model = run_train(config)
            print(f"shared_model          {model if model is not None else '(none for gmm backend)'}")
        elif args.command == "enroll":
            registry = run_enroll(config)
            print(f"registry              {registry}")
        elif args.command == "evaluate":
            if args.sweep_k:
                run_sweep_k(config)
            else:
                run_evaluate(config)
        elif args.command == "identify":
            run_identify(config, args.wav)
        elif args.command == "verify":
            # the accept/reject decision is data, not exit status
            run_verify(config, args.wav, args.claimed, args.threshold)
        elif args.command == "dump-features":
            out = run_dump_features(config, args.wav, args.out, spectrogram=args.spectrogram)
            print(f"features              {out}")
    except (SnoreBioError, OSError) as exc:
        print(f"snorebio: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

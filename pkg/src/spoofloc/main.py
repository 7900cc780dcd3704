#!/usr/bin/env python
"""
spoofloc command line.

    spoofloc synth    --out DIR                      synthetic partially-fake corpus
    spoofloc prepare  --manifest M --out DIR         before-training corpus expansion
    spoofloc train    --manifest M --outdir DIR      train, keep the best checkpoint by dev score
    spoofloc eval     --ref M --hyp H --report R     score hypotheses against references
    spoofloc detect   --checkpoint C --out H         write hypotheses for WAVs or a manifest
    spoofloc ablate   --manifest M --out R           toggle-grid ablation table
    spoofloc stats    --manifest M                   corpus composition

Every subcommand accepts --config, --set key=value, --seed, --print-config, --log and
--verbose. Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from spoofloc.augmentation.offline import load_noise_bank, prepare_corpus
from spoofloc.bench.synth import SignalSource, SynthSpec, corpus_stats, format_stats, generate
from spoofloc.data.audio import load_audio
from spoofloc.data.manifest import load_hypotheses, load_manifest, save_hypotheses
from spoofloc.data.types import UtteranceLabel
from spoofloc.errors import CheckpointError, ConfigError, InputValidationError
from spoofloc.evaluation.decoding import decode_sequence, reference_hypothesis
from spoofloc.evaluation.metrics import evaluate, save_report
from spoofloc.logs import configure_logging
from spoofloc.settings import SOURCE_DEFAULT, RunConfig, dump_config, parse_override, resolve_config
from spoofloc.training.ablation import ablation_run, format_ablation_table, save_ablation_report
from spoofloc.training.checkpoint import load_checkpoint
from spoofloc.training.dataset import load_corpus
from spoofloc.training.trainer import predict, train

logger = logging.getLogger("spoofloc.main")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


# =========================
# ARGUMENTS
# =========================

def _common_options(suppress: bool = False) -> argparse.ArgumentParser:
    """Shared options; subcommand copies use SUPPRESS so they never overwrite values given before the command."""
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("configuration")
    default = {"default": argparse.SUPPRESS} if suppress else {}
    group.add_argument("--config", type=Path, help="YAML config file", **default)
    group.add_argument("--set", dest="overrides", action="append", metavar="KEY=VALUE",
                       help="override one config value (repeatable)", **(default or {"default": []}))
    group.add_argument("--seed", type=int, help="seed for every random stream", **default)
    group.add_argument("--alpha", type=float, help="isolated-frame penalty weight", **default)
    group.add_argument("--epochs", type=int, **default)
    group.add_argument("--batch-size", type=int, **default)
    group.add_argument("--lr", type=float, help="learning rate", **default)
    group.add_argument("--print-config", action="store_true", help="print the resolved config and exit", **default)
    group.add_argument("--log", type=Path, help="write line-delimited JSON logs here", **default)
    group.add_argument("--verbose", action="store_true", **default)
    group.add_argument("--workers", type=int, help="worker processes for synth/prepare",
                       **(default or {"default": 1}))
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="spoofloc", description="Partially-fake audio region localization", parents=[_common_options()]
    )
    common = _common_options(suppress=True)
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)

    synth_parser = commands.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    synth_parser.add_argument("--out", type=Path, required=True)
    synth_parser.add_argument("--n-clips", type=int, default=100)
    synth_parser.add_argument("--duration", type=float, default=2.0, help="clip duration in seconds")
    synth_parser.add_argument("--fake-range", type=float, nargs=2, default=(0.2, 0.4), metavar=("LOW", "HIGH"))
    synth_parser.add_argument("--source", choices=[s.value for s in SignalSource], default="tone_mixture")
    synth_parser.add_argument("--user-wavs", type=Path)
    synth_parser.add_argument("--noise-files", type=int, default=4)

    prepare_parser = commands.add_parser("prepare", parents=[common], help="expand a corpus offline")
    prepare_parser.add_argument("--manifest", type=Path, required=True)
    prepare_parser.add_argument("--out", type=Path, required=True)
    prepare_parser.add_argument("--noise-dir", type=Path)
    prepare_parser.add_argument("--no-sources", action="store_true", help="write only the augmented copies")

    train_parser = commands.add_parser("train", parents=[common], help="train a tagger")
    train_parser.add_argument("--manifest", type=Path, required=True)
    train_parser.add_argument("--dev-manifest", type=Path)
    train_parser.add_argument("--outdir", type=Path, required=True)
    train_parser.add_argument("--noise-dir", type=Path)
    train_parser.add_argument("--cache-dir", type=Path, help="keep source-clip features here between runs")
    train_parser.add_argument("--device", default="cpu")

    evaluate_parser = commands.add_parser("eval", parents=[common], help="score a hypothesis file")
    evaluate_parser.add_argument("--ref", type=Path, required=True, help="reference manifest")
    evaluate_parser.add_argument("--hyp", type=Path, required=True, help="hypothesis file")
    evaluate_parser.add_argument("--report", type=Path, required=True)

    detect_parser = commands.add_parser("detect", parents=[common], help="localize manipulated regions")
    detect_parser.add_argument("--checkpoint", type=Path, required=True)
    source_group = detect_parser.add_mutually_exclusive_group(required=True)
    source_group.add_argument("--audio", type=Path, nargs="+")
    source_group.add_argument("--manifest", type=Path)
    detect_parser.add_argument("--out", type=Path, required=True)
    detect_parser.add_argument("--threshold", type=float)
    detect_parser.add_argument("--device", default="cpu")

    ablate_parser = commands.add_parser("ablate", parents=[common], help="run the ablation grid")
    ablate_parser.add_argument("--manifest", type=Path, required=True)
    ablate_parser.add_argument("--dev-manifest", type=Path)
    ablate_parser.add_argument("--test-manifest", type=Path)
    ablate_parser.add_argument("--seeds", type=int, nargs="+")
    ablate_parser.add_argument("--noise-dir", type=Path)
    ablate_parser.add_argument("--out", type=Path, required=True)
    ablate_parser.add_argument("--device", default="cpu")

    stats_parser = commands.add_parser("stats", parents=[common], help="print corpus composition")
    stats_parser.add_argument("--manifest", type=Path, required=True)

    return parser


def _overrides(args: argparse.Namespace) -> List[Tuple[str, Any]]:
    overrides = [parse_override(text) for text in args.overrides]
    shortcuts = {
        "loss.alpha": args.alpha,
        "train.epochs": args.epochs,
        "train.batch_size": args.batch_size,
        "train.learning_rate": args.lr,
    }
    overrides.extend((key, value) for key, value in shortcuts.items() if value is not None)
    if args.seed is not None:
        overrides.extend([("train.seed", args.seed), ("augmentation.rng_seed", args.seed)])
    return overrides


# =========================
# COMMANDS
# =========================

def _noise_bank(directory: Optional[Path]):
    return load_noise_bank(directory) if directory is not None else []


def _corpus(path: Optional[Path]):
    if path is None:
        return None
    return load_corpus(load_manifest(path), path.parent)


def cmd_synth(args: argparse.Namespace, config: RunConfig) -> int:
    try:
        spec = SynthSpec(
            n_clips=args.n_clips,
            clip_duration_s=args.duration,
            fake_fraction_range=tuple(args.fake_range),
            source=args.source,
            seed=config.train.seed,
            user_wav_dir=args.user_wavs,
            n_noise_files=args.noise_files,
        )
    except ValidationError as exc:
        raise ConfigError(f"invalid synth options: {exc}") from exc
    manifest = generate(spec, args.out, workers=args.workers, quiet=not args.verbose)
    print(f"✅ wrote {len(manifest)} clips to {args.out}")
    print(format_stats(corpus_stats(manifest)))
    return EXIT_OK


def cmd_prepare(args: argparse.Namespace, config: RunConfig) -> int:
    manifest = load_manifest(args.manifest)
    expanded = prepare_corpus(
        manifest,
        args.manifest.parent,
        args.out,
        config.augmentation,
        _noise_bank(args.noise_dir),
        seed=config.augmentation.rng_seed,
        workers=args.workers,
        include_sources=not args.no_sources,
    )
    print(f"✅ wrote {len(expanded)} clips to {args.out / 'manifest.jsonl'}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace, config: RunConfig) -> int:
    result = train(
        _corpus(args.manifest),
        config,
        dev_corpus=_corpus(args.dev_manifest),
        out_dir=args.outdir,
        noise_bank=_noise_bank(args.noise_dir),
        device=args.device,
        quiet=not args.verbose,
        cache_dir=args.cache_dir,
    )
    print(f"✅ best epoch {result.best_epoch} (dev score {result.best_dev_score}) -> {result.checkpoint_path}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace, config: RunConfig) -> int:
    manifest = load_manifest(args.ref, check_audio=False)
    refs = [reference_hypothesis(entry.clip_id, entry.annotations) for entry in manifest.entries]
    report = evaluate(refs, load_hypotheses(args.hyp), config.mel.hop_s, config.train.iso_min_frames)
    save_report(report, args.report)
    print(
        f"score={report.score:.4f} a_sentence={report.a_sentence:.4f} f1_segment={report.f1_segment:.4f} "
        f"iso_rate={report.iso_rate:.4f} ({report.n_isolated}/{report.n_audios})"
    )
    return EXIT_OK


def _touched(config: RunConfig, section: str) -> bool:
    """True when a file or flag set any field under ``section``."""
    prefix = f"{section}."
    return any(path.startswith(prefix) and source != SOURCE_DEFAULT for path, source in config.provenance.items())


def cmd_detect(args: argparse.Namespace, config: RunConfig) -> int:
    loaded = load_checkpoint(
        args.checkpoint,
        expected_model=config.model if _touched(config, "model") else None,
        expected_mel=config.mel if _touched(config, "mel") else None,
        map_location=args.device,
    )
    if args.audio:
        clips = [load_audio(path, clip_id=path.stem) for path in args.audio]
    else:
        clips = [clip for clip, _ in _corpus(args.manifest)]
    threshold = config.train.threshold if args.threshold is None else args.threshold
    frames = predict(loaded.model.to(args.device), clips, loaded.mel, threshold=threshold, device=args.device)
    hypotheses = [decode_sequence(sequence, threshold) for sequence in frames]
    save_hypotheses(hypotheses, args.out)
    n_fake = sum(1 for h in hypotheses if h.utterance_label is UtteranceLabel.FAKE)
    print(f"✅ {len(hypotheses)} hypotheses ({n_fake} fake) -> {args.out}")
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace, config: RunConfig) -> int:
    report = ablation_run(
        _corpus(args.manifest),
        config,
        dev_corpus=_corpus(args.dev_manifest),
        test_corpus=_corpus(args.test_manifest),
        seeds=args.seeds or [config.train.seed],
        noise_bank=_noise_bank(args.noise_dir),
        device=args.device,
        quiet=not args.verbose,
    )
    save_ablation_report(report, args.out)
    print(format_ablation_table(report))
    return EXIT_OK


def cmd_stats(args: argparse.Namespace, config: RunConfig) -> int:
    print(format_stats(corpus_stats(load_manifest(args.manifest, check_audio=False))))
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "prepare": cmd_prepare,
    "train": cmd_train,
    "eval": cmd_eval,
    "detect": cmd_detect,
    "ablate": cmd_ablate,
    "stats": cmd_stats,
}


# =========================
# ENTRY POINT
# =========================

def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(logging.DEBUG if args.verbose else logging.INFO, args.log)
        config = resolve_config(args.config, _overrides(args))
        if args.print_config:
            sys.stdout.write(dump_config(config))
            return EXIT_OK
        if args.command is None:
            raise ConfigError("no command given (see spoofloc --help)")
        return COMMANDS[args.command](args, config)
    except (InputValidationError, CheckpointError) as exc:
        logger.error("%s", exc)
        print(f"❌ {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:
        logger.exception("run failed")
        print(f"❌ {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def run():
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()

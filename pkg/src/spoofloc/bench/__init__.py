"""Synthetic benchmark corpora and corpus statistics."""

from spoofloc.bench.synth import (
    CorpusStats,
    SignalSource,
    SynthSpec,
    corpus_stats,
    format_stats,
    generate,
    synth_clip,
    write_noise_bank,
)

__all__ = [
    "CorpusStats",
    "SignalSource",
    "SynthSpec",
    "corpus_stats",
    "format_stats",
    "generate",
    "synth_clip",
    "write_noise_bank",
]

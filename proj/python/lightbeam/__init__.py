"""Python bindings for the LightBeam decoder."""

from ._lightbeam import (
    ConfigError,
    DecodeConfig,
    DecodeResult,
    EmptyBeamError,
    FormatError,
    Hypothesis,
    Lexicon,
    LightBeamError,
    MetricError,
    NGramModel,
    Scorer,
    ScorerError,
    ShapeError,
    StubScorer,
    TransitionTable,
    ValueError,
    Vocabulary,
    WerBreakdown,
    build_transition_table,
    decode,
    decode_log_probs,
    load_arpa,
    load_lexicon,
    load_vocab,
    log_softmax,
    parse_arpa,
    parse_lexicon,
    rtf,
    run_cli,
    score_sequence,
    wer,
)

__all__ = [name for name in dir() if not name.startswith("_")]

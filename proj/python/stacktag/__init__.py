"""Biomedical NER with stacked embeddings and a BiLSTM-CRF tagger."""

from ._stacktag import (
    EntityAnnotation,
    EntityMention,
    Model,
    StacktagError,
    TaggedSentence,
    Token,
    __version__,
    bpe_learn,
    bpe_segment,
    cli,
    crf_init_transitions,
    crf_log_partition,
    crf_nll,
    crf_viterbi,
    decode_bio,
    evaluate,
    format_percent,
    is_valid_bio,
    parse_entities,
    read_ann_mentions,
    read_conll,
    repair_bio,
    split_sentences_rule,
    to_bio,
    tokenize,
    write_brat,
    write_conll,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]

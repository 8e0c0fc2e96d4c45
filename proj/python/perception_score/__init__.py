"""Perception Score: a learned, uncertainty-weighted metric for generated text."""

from ._core import (
    CompatibilityError,
    Config,
    InputError,
    Model,
    NumericError,
    PerceptionError,
    adjusted_probability,
    bench,
    bleu,
    combine_losses,
    featurize_pair,
    load_jsonl,
    loss_confidence,
    loss_task,
    make_synthetic,
    pair_softmax,
    pearson,
    perturb,
    sample_weights,
    score,
    sigmoid,
    spearman,
    system_score,
    train,
)

__version__ = "0.1.0"

"""Argumentative revision quality prediction toolkit."""

import json as _json

from ._arq import (
    ArqError,
    ConfigError,
    ContractError,
    EmbedError,
    GenerationError,
    IndexError,
    LookupError,
    NumericError,
    ParseError,
    TransportError,
    ValidationError,
    align,
    cohen_kappa,
    encode_quality,
    hash_embed,
    label_pair,
    lcs_ratio,
    location_contexts,
    macro_prf,
    paired_ttest,
    render_cot_prompts,
    render_single_prompt,
    run_cli,
    segment_text,
)
from ._arq import evaluate as _evaluate

__version__ = "0.1.0"


def evaluate(corpus, annotations, **kwargs):
    """Run the offline cross-validated evaluation and return the parsed report."""
    return _json.loads(_evaluate(str(corpus), str(annotations), **kwargs))

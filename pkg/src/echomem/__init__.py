"""Associative-memory (Hopfield) classifier for short audio fragments."""

__version__ = "0.1.0"

from .hopfield import (  # noqa: E402
    DynamicsConfig,
    MatchKind,
    MatchOutcome,
    NetworkTrace,
    energy,
    hebbian_train,
    match_state,
    raw_outer_product,
    run_to_convergence,
    step,
)
from .modelio import load_model, save_model  # noqa: E402
from .pipeline import (  # noqa: E402
    FILTERED,
    SILENCE,
    UNID,
    ClassificationResult,
    TrainedModel,
    classify,
    classify_batch,
    train,
)
from .spectrum import (  # noqa: E402
    EncodingConfig,
    FrequencyBandMap,
    PowerSpectrum,
    band_reject_49_51,
    compute_spectrum,
    encode_pattern,
    is_silence,
)
from .wav import Waveform, load_wav, read_wav, write_wav  # noqa: E402

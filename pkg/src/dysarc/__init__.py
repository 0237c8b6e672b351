"""Dysfluency-aware WFST decoding of CTC phoneme posteriors.

Given a frame-level log-posterior matrix and a reference phoneme sequence,
the decoder produces the verbatim phonetic transcription and labels each
phoneme as normal, repetition, insertion, or deletion. The decoding graph
is the composition of a CTC topology with a reference transducer whose
return and skip arcs admit dysfluent transitions, intersected with the
emission and searched for its shortest path.
"""

from .decoder import PathSegment, Transcription, decode, segment_timestamps, transcription_report
from .detect import (
    DELETION,
    INSERTION,
    NORMAL,
    REPETITION,
    DetectionResult,
    DysfluencyAnnotation,
    detect_dysfluency,
    detection_report,
    summarize,
)
from .emission import EmissionMatrix, load_emission, write_emission
from .errors import (
    ConfigurationError,
    DysarcError,
    InputError,
    NoPathError,
    ResourceError,
    StructuralError,
)
from .fst import (
    EPSILON,
    EPSILON_LABEL,
    ONE,
    ZERO,
    Arc,
    Path,
    Wfst,
    combine,
    compose,
    enumerate_paths,
    extend,
    intersect,
    shortest_path,
    symbol_table,
)
from .graphs import (
    ReferenceFst,
    SeverityConfig,
    build_ctc_topology,
    build_emission_acceptor,
    build_reference_fst,
    decode_record,
    encode_record,
)
from .lexicon import ARPABET, Lexicon, default_lexicon, load_lexicon, save_lexicon
from .metrics import (
    EditAlignment,
    SimilarityMatrix,
    align,
    default_similarity,
    detection_accuracy,
    load_similarity,
    per,
    wper,
)
from .pronounce import PronouncingDictionary, demo_dictionary, text_to_phonemes
from .synth import (
    CorpusItem,
    GoldLabels,
    NoiseSpec,
    SyntheticSpec,
    inject_noise,
    noise_test,
    sweep_beta,
    synthesize_corpus,
    synthesize_emission,
)

__version__ = "0.1.0"

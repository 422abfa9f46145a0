"""Voice-deepfake forensics: TTS corpus preparation and bispectral detection."""

from .audio import AudioBuffer, decode_wav, encode_wav, read_wav, resample, write_wav
from .bispectrum import (
    BispectrumGrid,
    BispectrumParams,
    biphase_grid,
    estimate_bispectrum,
    grid_to_csv,
    magnitude_grid,
)
from .corpus import (
    AlignmentSpan,
    CorpusEntry,
    CorpusManifest,
    cut_by_alignment,
    filter_by_duration,
    pad_tail_silence,
    parse_manifest,
    split_train_val,
    trim_silence,
    write_manifest,
)
from .detect import (
    DBSCAN,
    NOISE,
    DbscanParams,
    DetectionReport,
    VoiceProfile,
    VoiceProfileDetector,
    classify,
    dbscan,
    evaluate,
    k_distance_curve,
)
from .errors import VoicetraceError
from .features import (
    BispectrumFeatureExtractor,
    FeatureStandardizer,
    FeatureVector,
    extract_features,
    features_from_signal,
    moment_stats,
    scatter_points,
)
from .synth import TriadSpec, gen_noise, gen_triad, surrogate_corpus
from .textnorm import german_cardinal, normalize_text

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer", "decode_wav", "encode_wav", "read_wav", "resample", "write_wav",
    "BispectrumGrid", "BispectrumParams", "estimate_bispectrum",
    "magnitude_grid", "biphase_grid", "grid_to_csv",
    "AlignmentSpan", "CorpusEntry", "CorpusManifest", "cut_by_alignment",
    "filter_by_duration", "pad_tail_silence", "parse_manifest", "split_train_val",
    "trim_silence", "write_manifest",
    "DBSCAN", "NOISE", "DbscanParams", "DetectionReport", "VoiceProfile",
    "VoiceProfileDetector", "classify", "dbscan", "evaluate", "k_distance_curve",
    "VoicetraceError",
    "BispectrumFeatureExtractor", "FeatureStandardizer", "FeatureVector",
    "extract_features", "features_from_signal", "moment_stats", "scatter_points",
    "TriadSpec", "gen_noise", "gen_triad", "surrogate_corpus",
    "german_cardinal", "normalize_text",
]

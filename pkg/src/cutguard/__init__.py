"""Interjection detection over per-frame embedding streams and memory gating for VOS models."""
from .calibrate import CalibrationResult, calibrate, calibrate_per_length
from .classifier import (ClassifierConfig, Verdict, classify_stream, format_config, load_config, parse_config,
                         preset, save_config)
from .dataset import SpliceSpec, SplicedSequence, SynthSpec, simulate_predictions, splice, standard_corpus, synth_corpus
from .distance import DistanceConfig, regularized_distance, stream_distances, window_stats
from .embed_io import BinaryMask, FrameEmbedding, RegionLabel, read_masks, read_sequence, write_masks, write_sequence
from .errors import CutguardError
from .evaluate import boundary_f, evaluate_sample, jaccard, report_tables
from .features import FrameFeatures, StreamFeaturizer, featurize_stream, mdrt
from .gate import MemoryBuffer, run_gate
from .pipeline import run_corpus, run_sample

__version__ = "0.1.0"

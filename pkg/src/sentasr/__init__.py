"""Speech sentiment classification on frozen ASR-encoder features."""

from .augment import SpecAugmentPolicy, apply_policy
from .encoder import EncoderConfig, encode, init_encoder
from .features import FeatureSequence, read_features, write_features
from .frontend import AudioBuffer, FrontendConfig, load_wav, log_mel
from .metrics import ConfusionMatrix, confusion, ua, wa
from .model import (AttentionMap, DecoderConfig, classify, decode,
                    decode_batch, init_params)
from .synthcorpus import (SentimentExample, SynthConfig, generate,
                          read_manifest, write_corpus)
from .train import TrainConfig, cross_entropy, evaluate, loso_cv
from .visualize import quantize_bins, render, word_attention

__version__ = "0.1.0"

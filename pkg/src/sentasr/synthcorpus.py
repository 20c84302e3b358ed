"""Synthetic corpus with planted, temporally localized class cues.

Each example is Gaussian noise plus a per-speaker offset vector plus one
class signature added over a random short span of frames, so the label is
recoverable only from that span. Class signatures are orthonormal and
fixed per (num_classes, dim), independent of the corpus seed, so separate
train and test generations stay mutually consistent. Word alignments of a
few frames each tile every utterance, with the cue span kept as its own
word to give the visualization a ground-truth target.
"""

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ManifestError
from .features import FeatureSequence, read_features, write_features

SWBD_PRIORS = (0.526, 0.304, 0.170)

_SIG_SEED = 0xC1A55
_SPK_SEED = 0x0FF5E7


@dataclass
class SynthConfig:
    num_examples: int = 1000
    num_classes: int = 3
    dim: int = 64
    min_len: int = 20
    max_len: int = 100
    cue_len: int = 5
    cue_scale: float = 1.0
    noise_sigma: float = 0.5
    num_speakers: int = 10
    speaker_scale: float = 0.25
    priors: tuple = None  # None = uniform
    frame_period: float = 0.08

    def __post_init__(self):
        if self.num_classes < 2 or self.num_classes > self.dim:
            raise ValueError("need 2 <= num_classes <= dim")
        if not 1 <= self.cue_len <= self.min_len or self.min_len > self.max_len:
            raise ValueError("need 1 <= cue_len <= min_len <= max_len")
        if self.num_speakers < 1 or self.num_examples < 1:
            raise ValueError("num_speakers and num_examples must be >= 1")
        if self.priors is not None:
            p = np.asarray(self.priors, dtype=np.float64)
            if p.shape != (self.num_classes,) or (p < 0).any() \
                    or abs(p.sum() - 1.0) > 1e-6:
                raise ValueError("priors must be num_classes non-negative "
                                 "values summing to 1")


@dataclass
class SentimentExample:
    features: FeatureSequence
    label: int
    speaker: int
    alignment: list = field(default=None)
    cue_span: tuple = field(default=None)


def class_signatures(num_classes, dim):
    """Fixed orthonormal signature per class, independent of corpus seed."""
    rng = np.random.default_rng(np.random.SeedSequence([_SIG_SEED, dim]))
    g = rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))  # pin sign convention
    return q[:, :num_classes].T.astype(np.float32)


def speaker_offset(speaker, dim, scale):
    rng = np.random.default_rng(np.random.SeedSequence([_SPK_SEED, speaker, dim]))
    return (scale * rng.standard_normal(dim)).astype(np.float32)


def _tile_words(t_len, cue_start, cue_end, rng):
    """Word spans of a few frames covering [0, t_len) with the cue span
    as its own word. Leftover tail shorter than 3 frames merges into the
    previous word."""
    spans = []

    def fill(lo, hi):
        pos = lo
        while pos < hi:
            w = int(rng.integers(3, 9))
            if hi - pos - w < 3:
                w = hi - pos
            spans.append([pos, min(pos + w, hi)])
            pos += w

    fill(0, cue_start)
    spans.append([cue_start, cue_end])
    cue_idx = len(spans) - 1
    fill(cue_end, t_len)
    alignment = [(f"w{i}", int(s), int(e)) for i, (s, e) in enumerate(spans)]
    return alignment, cue_idx


def generate(cfg, seed):
    """Deterministic corpus; per-example rng derived from (seed, index)."""
    sigs = class_signatures(cfg.num_classes, cfg.dim)
    offsets = [speaker_offset(s, cfg.dim, cfg.speaker_scale)
               for s in range(cfg.num_speakers)]
    priors = cfg.priors
    if priors is None:
        priors = np.full(cfg.num_classes, 1.0 / cfg.num_classes)
    examples = []
    for i in range(cfg.num_examples):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        label = int(rng.choice(cfg.num_classes, p=priors))
        t_len = int(rng.integers(cfg.min_len, cfg.max_len + 1))
        speaker = i % cfg.num_speakers
        vals = (cfg.noise_sigma * rng.standard_normal((t_len, cfg.dim))
                ).astype(np.float32)
        start = int(rng.integers(0, t_len - cfg.cue_len + 1))
        end = start + cfg.cue_len
        vals[start:end] += cfg.cue_scale * sigs[label]
        vals += offsets[speaker]
        alignment, _ = _tile_words(t_len, start, end, rng)
        examples.append(SentimentExample(
            features=FeatureSequence(values=vals, frame_period=cfg.frame_period),
            label=label, speaker=speaker,
            alignment=alignment, cue_span=(start, end)))
    return examples


def write_corpus(examples, out_dir):
    """Write feature files plus a tab-separated manifest; returns its path."""
    out_dir = Path(out_dir)
    feat_dir = out_dir / "features"
    feat_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for i, ex in enumerate(examples):
        rel = f"features/ex{i:05d}.asrf"
        write_features(ex.features, out_dir / rel)
        cue = ex.cue_span if ex.cue_span is not None else (-1, -1)
        align = ex.alignment if ex.alignment is not None else []
        align_json = json.dumps([[w, int(s), int(e)] for w, s, e in align],
                                separators=(",", ":"))
        lines.append(f"{rel}\tc{ex.label}\t{ex.speaker}\t{cue[0]}\t{cue[1]}\t"
                     f"{align_json}\n")
    manifest = out_dir / "manifest.tsv"
    manifest.write_text("".join(lines), encoding="utf-8")
    return manifest


def read_manifest(path):
    """Load a manifest and its feature files back into SentimentExamples."""
    path = Path(path)
    if not path.exists():
        raise ManifestError(f"manifest not found: {path}")
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln.strip()]
    if not lines:
        raise ManifestError(f"empty manifest: {path}")
    base = path.parent
    examples = []
    for lineno, line in enumerate(lines, start=1):
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 6:
            raise ManifestError(
                f"{path}:{lineno}: expected 6 tab-separated fields, "
                f"got {len(parts)}")
        rel, label_s, speaker_s, cs, ce, align_json = parts
        m = re.fullmatch(r"c(\d+)", label_s)
        if not m:
            raise ManifestError(
                f"{path}:{lineno}: unknown class name {label_s!r}")
        try:
            speaker = int(speaker_s)
            cue = (int(cs), int(ce))
            align_raw = json.loads(align_json)
        except (ValueError, json.JSONDecodeError) as e:
            raise ManifestError(f"{path}:{lineno}: {e}") from e
        feat_path = base / rel
        if not feat_path.exists():
            raise ManifestError(
                f"{path}:{lineno}: missing feature file {feat_path}")
        alignment = [(str(w), int(s), int(e)) for w, s, e in align_raw]
        examples.append(SentimentExample(
            features=read_features(feat_path),
            label=int(m.group(1)), speaker=speaker,
            alignment=alignment or None,
            cue_span=None if cue == (-1, -1) else cue))
    return examples

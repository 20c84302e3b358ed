"""Word-level attention weights, tercile binning, and heatmap rendering.

Frame-level attention rows are averaged over each word's aligned frames,
quantized into three per-utterance bins (2 = most attended), and rendered
as ANSI text or a small self-contained HTML snippet. Output bytes are
deterministic for fixed inputs.
"""

import math
import warnings

import numpy as np


def word_attention(amap, alignment, head=None):
    """Mean attention per word.

    amap: AttentionMap with weights (n_heads, T). alignment: list of
    (token, start_frame, end_frame) with half-open, non-overlapping spans
    inside [0, T]. head selects one row; None averages across heads.
    Words with empty spans get weight 0 and a warning.
    """
    w = np.asarray(amap.weights, dtype=np.float64)
    row = w.mean(axis=0) if head is None else w[head]
    t_len = row.shape[0]
    prev_end = 0
    weights = np.zeros(len(alignment), dtype=np.float64)
    for i, (token, start, end) in enumerate(alignment):
        if start < prev_end or start < 0 or end > t_len or end < start:
            raise ValueError(
                f"bad span for word {token!r}: [{start}, {end}) with T={t_len}")
        prev_end = end
        if end == start:
            warnings.warn(f"word {token!r} spans no frames; weight set to 0")
            continue
        weights[i] = row[start:end].mean()
    return weights


def quantize_bins(weights):
    """Tercile bins 0/1/2 of the per-utterance weight distribution.

    Ties break toward the lower bin, so all-equal weights land in bin 0.
    """
    w = np.asarray(weights, dtype=np.float64)
    n = w.shape[0]
    if n == 0:
        raise ValueError("need at least one word")
    s = np.sort(w)
    t1 = s[math.ceil(n / 3) - 1]
    t2 = s[math.ceil(2 * n / 3) - 1]
    return ((w > t1).astype(np.int64) + (w > t2)).astype(np.int64)


_ANSI = ("\x1b[48;5;254;30m", "\x1b[48;5;222;30m", "\x1b[48;5;208;30m")
_ANSI_RESET = "\x1b[0m"

_HTML_HEAD = ("<style>"
              ".att0{background:#f2f2f2}"
              ".att1{background:#ffd98a}"
              ".att2{background:#ff8c42}"
              "span{padding:2px 4px;margin:1px;display:inline-block}"
              "</style>\n")


def render(words, bins, fmt="ansi"):
    """Heatmap text: ANSI escape codes or an HTML snippet."""
    if len(words) != len(bins):
        raise ValueError(f"{len(words)} words vs {len(bins)} bins")
    if fmt not in ("ansi", "html"):
        raise ValueError(f"unknown format {fmt!r}")
    if not words:
        return ""
    if fmt == "ansi":
        return " ".join(f"{_ANSI[b]}{w}{_ANSI_RESET}"
                        for w, b in zip(words, bins))
    body = "".join(f'<span class="att{b}">{w}</span>'
                   for w, b in zip(words, bins))
    return _HTML_HEAD + body + "\n"

"""Multi-style demo decomposition.

The classifier integrates evidence over a whole span, so its output on
a mixed span stays confidently wrong rather than decaying smoothly;
cuts therefore cannot be read off a running probability curve alone.
Instead the cut is localized geometrically and verified by the
classifier: a style change moves the subject's on-screen box
discontinuously, so the largest foreground-feature frame-to-frame jumps
are taken as candidate cut points, and each candidate is scored by how
confidently the span classifier labels the two sides with two different
styles.  The best-scoring candidate becomes the cut when its weaker
side clears the confidence threshold; otherwise the video is one
segment.

Threshold semantics (default relative): the weaker side's peak
probability must reach threshold * the stronger side's.  The absolute
reading (weaker side's probability above threshold outright) is
available via mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .features import STRIDE, WINDOW, TooShortError
from .pipeline import ModelBundle
from .scene import DT, STYLES
from .stylenet import PROB_FLOOR, style_forward

MIN_SEGMENT_SECONDS = 2.0
N_CANDIDATES = 3   # discontinuity peaks scored per video
PEAK_SPACING = 4   # frames of non-max suppression between candidates


@dataclass
class ProbCurve:
    times: np.ndarray   # snippet end times (s), relative to video start
    probs: np.ndarray   # (K, 5) simplex rows


@dataclass
class Segment:
    start: float
    end: float
    style: str
    peak_prob: float


def _prefix_probs(emb: np.ndarray, bundle: ModelBundle) -> np.ndarray:
    out = np.zeros((emb.shape[0], len(STYLES)))
    for k in range(emb.shape[0]):
        _, probs, _, _ = style_forward(emb[:k + 1], bundle.style_params,
                                       bundle.style_cfg)
        out[k] = probs
    return out


def prob_curve(fg: np.ndarray, bg: np.ndarray, bundle: ModelBundle,
               start_frame: int = 0) -> ProbCurve:
    """Classifier probabilities over the growing prefix from start_frame."""
    if fg.shape[0] - start_frame < WINDOW:
        raise TooShortError(
            f"need at least {WINDOW} frames after frame {start_frame}")
    emb = bundle.embed(fg[start_frame:], bg[start_frame:])
    probs = _prefix_probs(emb, bundle)
    ends = start_frame + np.arange(emb.shape[0]) * STRIDE + WINDOW
    return ProbCurve(ends * DT, probs)


def _span_probs(emb: np.ndarray, bundle: ModelBundle,
                lo: int, hi: int) -> np.ndarray:
    _, probs, _, _ = style_forward(emb[lo:hi], bundle.span_classifier(),
                                   bundle.style_cfg)
    return probs


def _discontinuity(fg: np.ndarray) -> np.ndarray:
    """Per-frame-gap jump size of the std-normalized subject box; index
    t scores the gap between frames t and t + 1."""
    sd = fg.std(axis=0)
    sd[sd < 1e-9] = 1.0
    return np.linalg.norm(np.diff(fg / sd, axis=0), axis=1)


def _candidate_cuts(d: np.ndarray, lo: int, hi: int) -> list[int]:
    """Frame indices of the largest discontinuities in [lo, hi), each
    at least PEAK_SPACING frames from a stronger one."""
    if hi <= lo:
        return []
    peaks: list[int] = []
    for i in np.argsort(d[lo - 1:hi - 1])[::-1]:
        t = lo + int(i)
        if all(abs(t - q) > PEAK_SPACING for q in peaks):
            peaks.append(t)
        if len(peaks) >= N_CANDIDATES:
            break
    return peaks


def segment(fg: np.ndarray, bg: np.ndarray, bundle: ModelBundle,
            threshold: float = 0.6, mode: str = "relative",
            min_len: float = MIN_SEGMENT_SECONDS) -> list[Segment]:
    """Cut the video at a detected style change, or return it whole."""
    if mode not in ("relative", "absolute"):
        raise ValueError(f"unknown threshold mode {mode!r}")
    emb = bundle.embed(fg, bg)
    n = emb.shape[0]
    n_frames = fg.shape[0]
    duration = n_frames * DT
    full = _span_probs(emb, bundle, 0, n)
    whole = [Segment(0.0, duration, STYLES[int(np.argmax(full))],
                     float(np.max(full)))]
    min_part = max(1, int(round(min_len / DT)))
    if n < 4 or n_frames < 2 * min_part:
        return whole

    d = _discontinuity(fg)
    best = None
    for fcut in _candidate_cuts(d, min_part, n_frames - min_part):
        jc = min(max(int(round(fcut / STRIDE)), 2), n - 2)
        p1 = _span_probs(emb, bundle, 0, jc)
        p2 = _span_probs(emb, bundle, jc, n)
        if int(np.argmax(p1)) == int(np.argmax(p2)):
            continue
        weak, strong = sorted([float(p1.max()), float(p2.max())])
        if weak < (threshold * strong if mode == "relative" else threshold):
            continue
        score = (np.log(p1.max() + PROB_FLOOR)
                 + np.log(p2.max() + PROB_FLOOR)
                 + 0.5 * np.log(d[fcut - 1] + 1e-12))
        if best is None or score > best[0]:
            best = (score, fcut, p1, p2)
    if best is None:
        return whole
    _, fcut, p1, p2 = best
    return [Segment(0.0, fcut * DT, STYLES[int(np.argmax(p1))],
                    float(np.max(p1))),
            Segment(fcut * DT, duration, STYLES[int(np.argmax(p2))],
                    float(np.max(p2)))]

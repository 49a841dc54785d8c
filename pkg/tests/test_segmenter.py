import numpy as np
import pytest

from skymimic.dataset import build_video
from skymimic.features import TooShortError, autoencoder_init
from skymimic.geometry import Intrinsics
from skymimic.pipeline import ModelBundle
from skymimic.scene import DT, STYLES
from skymimic.segmenter import MIN_SEGMENT_SECONDS, prob_curve, segment
from skymimic.stylenet import VARIANTS, init_style_net


@pytest.fixture(scope="module")
def bundle():
    cfg = VARIANTS["fg+bg+att"]
    return ModelBundle(autoencoder_init("fg", 40),
                       autoencoder_init("bg", 41),
                       init_style_net(cfg, 42), cfg)


@pytest.fixture(scope="module")
def record():
    return build_video("seg0", "fly-by", "train", 50, Intrinsics())


def test_prob_curve_shape(bundle, record):
    curve = prob_curve(record.fg, record.bg, bundle)
    k = (record.n_frames - 8) // 4 + 1
    assert curve.probs.shape == (k, 5)
    assert np.allclose(curve.probs.sum(axis=1), 1.0)
    assert np.all(np.diff(curve.times) > 0)
    assert curve.times[0] == pytest.approx(8 * DT)


def test_prob_curve_too_short(bundle, record):
    with pytest.raises(TooShortError):
        prob_curve(record.fg[:5], record.bg[:5], bundle)


def test_segments_tile_video(bundle, record):
    segs = segment(record.fg, record.bg, bundle)
    assert segs
    assert segs[0].start == 0.0
    assert segs[-1].end == pytest.approx(record.n_frames * DT)
    for a, b in zip(segs, segs[1:]):
        assert a.end == pytest.approx(b.start)


def test_segments_respect_min_length(bundle, record):
    for segs in (segment(record.fg, record.bg, bundle),
                 segment(record.fg, record.bg, bundle, threshold=0.95)):
        for s in segs:
            assert s.end - s.start >= MIN_SEGMENT_SECONDS - 1e-9
            assert s.style in STYLES
            assert 0.0 < s.peak_prob <= 1.0


def test_segment_absolute_mode(bundle, record):
    segs = segment(record.fg, record.bg, bundle, threshold=0.05,
                   mode="absolute")
    assert segs[-1].end == pytest.approx(record.n_frames * DT)


def test_segment_rejects_bad_mode(bundle, record):
    with pytest.raises(ValueError):
        segment(record.fg, record.bg, bundle, mode="sideways")

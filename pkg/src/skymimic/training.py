"""End-to-end training drivers: corpus -> encoders -> style net ->
imitation net.  The CLI and the test suite both call these, so every
run with the same config and corpus produces identical artifacts."""

from __future__ import annotations

import numpy as np

from .config import ExperimentConfig
from .dataset import VideoRecord
from .features import train_autoencoder, window
from .geometry import Intrinsics
from .imitation import SnippetCorpus, train_imitation_net
from .pipeline import ModelBundle, snippet_action_labels
from .scene import STYLES, generate_style_trajectory, make_point_cloud, \
    random_script
from .stylenet import VARIANTS, train_ablation_variants, \
    train_segment_net, train_style_net
from .controller import LiveScene


def augmented(records: list[VideoRecord]) -> list[VideoRecord]:
    """Originals plus their horizontal mirrors."""
    return list(records) + [r.flipped() for r in records]


def snippet_batches(records: list[VideoRecord]):
    """All (fg, bg) training windows across a record list."""
    fg_rows, bg_rows = [], []
    for rec in records:
        for snip in window(rec.fg, rec.bg, rec.video_id):
            fg_rows.append(snip.fg)
            bg_rows.append(snip.bg)
    return np.stack(fg_rows), np.stack(bg_rows)


def train_encoders(records: list[VideoRecord], cfg: ExperimentConfig):
    fg_batch, bg_batch = snippet_batches(augmented(records))
    fg_p, _ = train_autoencoder(fg_batch, "fg", cfg.autoencoder_epochs,
                                seed=cfg.seed, lr=cfg.autoencoder_lr)
    bg_p, _ = train_autoencoder(bg_batch, "bg", cfg.autoencoder_epochs,
                                seed=cfg.seed + 1, lr=cfg.autoencoder_lr)
    return fg_p, bg_p


def style_examples(records: list[VideoRecord], fg_p, bg_p):
    """(embedding sequence, label index) pairs for the classifier."""
    from .features import embed_video
    return [(embed_video(r.fg, r.bg, fg_p, bg_p), STYLES.index(r.style))
            for r in records]


def train_val_split(examples, labels_every: int = 5):
    """Deterministic carve-out: every labels_every-th example is val."""
    train = [ex for i, ex in enumerate(examples) if i % labels_every]
    val = [ex for i, ex in enumerate(examples) if not i % labels_every]
    return train, val


def train_style_stage(records: list[VideoRecord], fg_p, bg_p,
                      cfg: ExperimentConfig, variants: bool = True):
    """Train the classifier (and optionally all ablation variants).

    Returns (params, config) of the full model plus, when variants is
    set, the {name: (params, config, test confusion)} table.
    """
    train_recs = [r for r in records if r.split == "train"]
    test_recs = [r for r in records if r.split == "test"]
    train_ex = style_examples(augmented(train_recs), fg_p, bg_p)
    test_ex = style_examples(test_recs, fg_p, bg_p)
    tr, val = train_val_split(train_ex)
    if variants:
        table = train_ablation_variants(tr, val, test_ex,
                                        epochs=cfg.style_epochs,
                                        seed=cfg.seed,
                                        lr=cfg.style_lr)
        params, net_cfg, _ = table["fg+bg+att"]
        return params, net_cfg, table
    net_cfg = VARIANTS["fg+bg+att"]
    params, _ = train_style_net(tr, val, net_cfg, epochs=cfg.style_epochs,
                                seed=cfg.seed, lr=cfg.style_lr)
    return params, net_cfg, None


def train_segment_stage(records: list[VideoRecord], fg_p, bg_p,
                        cfg: ExperimentConfig):
    """Train the crop-augmented classifier the segmenter scores spans
    with.  Returns (params, net config)."""
    train_recs = [r for r in records if r.split == "train"]
    train_ex = style_examples(augmented(train_recs), fg_p, bg_p)
    tr, val = train_val_split(train_ex)
    net_cfg = VARIANTS["fg+bg+att"]
    params, _ = train_segment_net(tr, val, net_cfg, epochs=cfg.seg_epochs,
                                  seed=cfg.seed, lr=cfg.style_lr,
                                  crop_prob=cfg.seg_crop_prob,
                                  min_crop=cfg.seg_min_crop)
    return params, net_cfg


def build_snippet_corpus(records: list[VideoRecord],
                         bundle: ModelBundle) -> SnippetCorpus:
    ids, styles, embs, acts, feats = [], [], [], [], []
    for rec in records:
        emb = bundle.embed(rec.fg, rec.bg)
        v, _, _ = bundle.style_feature(rec.fg, rec.bg)
        ids.append(rec.video_id)
        styles.append(rec.style)
        embs.append(emb)
        acts.append(snippet_action_labels(rec))
        feats.append(v)
    return SnippetCorpus(ids, styles, embs, acts, feats)


def train_imitation_stage(records: list[VideoRecord], bundle: ModelBundle,
                          cfg: ExperimentConfig, dual: bool = True):
    train_recs = [r for r in records if r.split == "train"]
    corpus = build_snippet_corpus(train_recs, bundle)
    params, log = train_imitation_net(
        corpus, epochs=cfg.imitation_epochs,
        steps_per_epoch=cfg.imitation_steps,
        seed=cfg.seed + 2, lr=cfg.imitation_lr, lam=cfg.loss_mix,
        dual=dual)
    return params, log


def make_live_scene(style: str, rng: np.random.Generator,
                    cfg: ExperimentConfig | None = None,
                    duration_range=(10.0, 14.0)):
    """A fresh recapture scene: new subject path, new world, and a
    drone start pose with valid initial geometry for the style."""
    cfg = cfg or ExperimentConfig()
    script = random_script(style, rng, duration_range, cfg.subject_height)
    frames = generate_style_trajectory(script)
    center = frames[0].subject.position[:2]
    cloud = make_point_cloud(rng, center=tuple(center))
    scene = LiveScene(script.subject, cloud, Intrinsics(focal=cfg.focal),
                      frames[0].camera, cfg.subject_height)
    return scene, script.duration

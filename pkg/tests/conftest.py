"""Shared fixtures.

The `pipeline` fixture trains the full stack once per session at the
shipped default settings; the acceptance tests all read from it so the
expensive training cost is paid a single time.
"""

import time
from types import SimpleNamespace

import pytest

from skymimic.config import ExperimentConfig
from skymimic.dataset import CorpusConfig, make_dataset
from skymimic.pipeline import ModelBundle
from skymimic.training import (train_encoders, train_imitation_stage,
                               train_segment_stage, train_style_stage)


@pytest.fixture(scope="session")
def pipeline(tmp_path_factory):
    cfg = ExperimentConfig()
    corpus_dir = tmp_path_factory.mktemp("corpus")
    corpus_cfg = CorpusConfig(seed=cfg.seed,
                              duration_range=(cfg.duration_min,
                                              cfg.duration_max),
                              subject_height=cfg.subject_height,
                              focal=cfg.focal)
    records = make_dataset(corpus_cfg, corpus_dir)
    train_recs = [r for r in records if r.split == "train"]

    t0 = time.perf_counter()
    fg_p, bg_p = train_encoders(train_recs, cfg)
    encoder_time = time.perf_counter() - t0

    t0 = time.perf_counter()
    params, net_cfg, variants = train_style_stage(records, fg_p, bg_p, cfg)
    style_time = time.perf_counter() - t0

    seg_params, _ = train_segment_stage(records, fg_p, bg_p, cfg)

    bundle = ModelBundle(fg_p, bg_p, params, net_cfg,
                         segment_params=seg_params)
    dual, _ = train_imitation_stage(records, bundle, cfg, dual=True)
    baseline, _ = train_imitation_stage(records, bundle, cfg, dual=False)
    bundle.imitation_params = dual

    return SimpleNamespace(cfg=cfg, corpus_dir=corpus_dir, records=records,
                           bundle=bundle, variants=variants,
                           baseline=baseline, encoder_time=encoder_time,
                           style_time=style_time)

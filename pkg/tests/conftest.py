"""Shared fixtures: bundled layouts and a small overfit model bundle.

The overfit bundle trains a tiny indic_to_indic-style stack (path decoder
plus corrector) on two words with zero-noise traces; several test modules and
the CLI/serve tests reuse it through its on-disk checkpoints.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

from swipeforge import correct as cor
from swipeforge import ctcdecode as ctc
from swipeforge import pipeline as pl
from swipeforge.geometry import KeyboardLayout, load_bundled_layout
from swipeforge.synth import SynthConfig, Trace, featurize, synthesize_trace


@pytest.fixture(scope="session")
def qwerty() -> KeyboardLayout:
    return load_bundled_layout("qwerty_en")


@pytest.fixture(scope="session")
def devanagari() -> KeyboardLayout:
    return load_bundled_layout("devanagari_hi")


@dataclass
class OverfitBundle:
    layout: KeyboardLayout
    words: list[str]
    synth_config: SynthConfig
    path_model: ctc.PathDecoderModel
    correct_model: cor.CorrectionModel
    vocab: cor.Vocabulary
    task: pl.TaskSpec
    model_dir: Path

    def trace_for(self, word: str) -> Trace:
        return synthesize_trace(self.layout, word, self.synth_config,
                                np.random.default_rng(0))


@pytest.fixture(scope="session")
def overfit_bundle(qwerty, tmp_path_factory) -> OverfitBundle:
    words = ["cat", "dog"]
    synth_cfg = SynthConfig(points_per_unit=15.0, endpoint_sigma=0.0, via_noise=False)
    dataset = []
    for w in words:
        fs = featurize(synthesize_trace(qwerty, w, synth_cfg, np.random.default_rng(0)), qwerty)
        dataset.extend([(fs, w)] * 20)
    path_cfg = ctc.PathDecoderConfig(alphabet=tuple(qwerty.chars), model_dim=24,
                                     heads=4, ff_dim=48, use_recurrent_stack=False,
                                     decoder_hidden=24, seed=0)
    path_model, _ = ctc.train_path_decoder(
        dataset, path_cfg, ctc.PathTrainingConfig(ctc_epochs=5, decoder_epochs=5, seed=0))

    alphabet = tuple(sorted({c for w in words for c in w}))
    correct_model = cor.CorrectionModel(cor.CorrectConfig(alphabet=alphabet, embed_dim=16, seed=0))
    pairs = cor.generate_corruptions(words, np.random.default_rng(1), per_word=3)
    vocab, _ = cor.train_correct(correct_model, words, pairs,
                                 cor.CorrectTrainingConfig(epochs=5, negatives=None, seed=1))
    correct_model.oov_threshold = cor.calibrate_threshold(correct_model, vocab, words)

    model_dir = tmp_path_factory.mktemp("overfit_models")
    path_model.save(model_dir / "path_decoder.json")
    correct_model.save(model_dir / "correct.json")
    (model_dir / "vocab.txt").write_text("\n".join(words) + "\n", encoding="utf-8")
    (model_dir / "serve_config.json").write_text(json.dumps({
        "task": pl.TASK_INDIC_TO_INDIC,
        "layout": "qwerty_en",
        "path_checkpoint": "path_decoder.json",
        "correct_checkpoint": "correct.json",
        "vocabulary": "vocab.txt",
        "k": 3,
    }), encoding="utf-8")

    task = pl.TaskSpec(task=pl.TASK_INDIC_TO_INDIC, layout=qwerty, path_model=path_model,
                       correct_model=correct_model, vocab=vocab, k=3)
    return OverfitBundle(layout=qwerty, words=words, synth_config=synth_cfg,
                         path_model=path_model, correct_model=correct_model,
                         vocab=vocab, task=task, model_dir=model_dir)

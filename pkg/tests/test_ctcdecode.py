import itertools
import math
from collections import defaultdict

import numpy as np
import pytest

from swipeforge import nncore as nn
from swipeforge.ctcdecode import (
    BLANK,
    CTCAlignmentError,
    ContractedSequence,
    EmissionSequence,
    OracleScaleError,
    PathDecoderConfig,
    PathDecoderModel,
    PathTrainingConfig,
    collapse,
    ctc_alignments,
    ctc_log_loss,
    decode_characters,
    decode_word,
    encode_path,
    greedy_aggregate,
    train_path_decoder,
)
from swipeforge.nncore import Tensor, grad_check
from swipeforge.synth import FeatureSequence


def uniform_emissions(t_len, alphabet):
    width = len(alphabet) + 1
    return EmissionSequence(probs=np.full((t_len, width), 1.0 / width), alphabet=alphabet)


def brute_force_prob(probs, alphabet, target):
    """Oracle: sum path products over an explicit frame-string enumeration."""
    width = len(alphabet) + 1
    symbols = list(alphabet) + [BLANK]
    total = 0.0
    for frames in itertools.product(range(width), repeat=len(probs)):
        if collapse("".join(symbols[i] for i in frames)) != target:
            continue
        p = 1.0
        for t, s in enumerate(frames):
            p *= probs[t, s]
        total += p
    return total


class TestAlignments:
    def test_no_room_for_blanks(self):
        assert ctc_alignments("ab", 2, ["a", "b"]) == {"ab"}

    def test_single_char_two_frames(self):
        got = ctc_alignments("a", 2, ["a", "b"])
        assert got == {"aa", "a" + BLANK, BLANK + "a"}

    def test_repeat_needs_separating_blank(self):
        assert ctc_alignments("aa", 2, ["a", "b"]) == set()
        assert ctc_alignments("aa", 3, ["a"]) == {"a" + BLANK + "a"}

    def test_scale_bounds_enforced(self):
        with pytest.raises(OracleScaleError):
            ctc_alignments("a", 9, ["a"])
        with pytest.raises(OracleScaleError):
            ctc_alignments("a", 3, list("abcdef"))

    def test_counts_match_collapse_enumeration(self):
        alphabet = ["a", "b"]
        t_len = 4
        by_label = defaultdict(int)
        for frames in itertools.product(list(alphabet) + [BLANK], repeat=t_len):
            by_label[collapse("".join(frames))] += 1
        for label, count in by_label.items():
            assert len(ctc_alignments(label, t_len, alphabet)) == count


class TestCtcLoss:
    def test_uniform_two_frame_single_char(self):
        loss = ctc_log_loss(uniform_emissions(2, ("a", "b")), "a")
        assert float(loss.data) == pytest.approx(math.log(3.0), abs=1e-12)

    def test_single_frame_direct_probability(self):
        em = EmissionSequence(probs=np.array([[0.7, 0.2, 0.1]]), alphabet=("a", "b"))
        assert float(ctc_log_loss(em, "a").data) == pytest.approx(-math.log(0.7), abs=1e-12)

    def test_impossible_repeat_raises(self):
        with pytest.raises(CTCAlignmentError):
            ctc_log_loss(uniform_emissions(2, ("a", "b")), "aa")

    def test_target_longer_than_frames_raises(self):
        with pytest.raises(CTCAlignmentError):
            ctc_log_loss(uniform_emissions(2, ("a", "b")), "aba")

    def test_empty_target_is_all_blank_path(self):
        em = EmissionSequence(probs=np.array([[0.5, 0.2, 0.3], [0.1, 0.1, 0.8]]),
                              alphabet=("a", "b"))
        assert float(ctc_log_loss(em, "").data) == pytest.approx(-math.log(0.3 * 0.8), abs=1e-12)

    def test_unknown_target_character(self):
        with pytest.raises(KeyError):
            ctc_log_loss(uniform_emissions(3, ("a", "b")), "ax")

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(0)
        alphabet = ("a", "b")
        for t_len in (1, 2, 3, 4, 5):
            probs = rng.dirichlet(np.ones(3), size=t_len)
            em = EmissionSequence(probs=probs, alphabet=alphabet)
            labels = {collapse("".join(f)) for f in
                      itertools.product(("a", "b", BLANK), repeat=t_len)}
            for label in labels:
                expect = brute_force_prob(probs, alphabet, label)
                got = math.exp(-float(ctc_log_loss(em, label).data))
                assert got == pytest.approx(expect, abs=1e-12)

    def test_loss_nonnegative_and_zero_only_for_certain_alignment(self):
        em = EmissionSequence(probs=np.array([[1.0, 0.0, 0.0]]), alphabet=("a", "b"))
        probs = Tensor(np.clip(em.probs, 1e-300, 1.0))
        loss = ctc_log_loss(probs, "a", alphabet=("a", "b"))
        assert float(loss.data) == pytest.approx(0.0, abs=1e-12)
        loss2 = ctc_log_loss(uniform_emissions(2, ("a", "b")), "b")
        assert float(loss2.data) > 0

    def test_normalization_over_all_labelings(self):
        rng = np.random.default_rng(1)
        for t_len in (2, 3, 4, 5):
            probs = rng.dirichlet(np.ones(3), size=t_len)
            em = EmissionSequence(probs=probs, alphabet=("a", "b"))
            labels = {collapse("".join(f)) for f in
                      itertools.product(("a", "b", BLANK), repeat=t_len)}
            total = sum(math.exp(-float(ctc_log_loss(em, label).data)) for label in labels)
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        logits = Tensor(rng.normal(size=(5, 4)))

        def f(lg):
            return ctc_log_loss(nn.softmax(lg, axis=-1), "abc", alphabet=("a", "b", "c"))

        assert grad_check(f, [logits], step=1e-5) < 1e-4


class TestGreedyAggregate:
    def test_spec_pattern(self):
        p = np.array([
            [0.6, 0.2, 0.2],
            [0.8, 0.1, 0.1],
            [0.1, 0.2, 0.7],
            [0.5, 0.3, 0.2],
            [0.2, 0.6, 0.2],
        ])
        con = greedy_aggregate(EmissionSequence(probs=p, alphabet=("a", "b")))
        assert con.chars == "aab"
        assert con.spans == [(0, 1), (3, 3), (4, 4)]
        assert np.allclose(con.vectors[0], p[:2].mean(axis=0))
        assert np.allclose(con.vectors[1], p[3])

    def test_all_blank_rows_contract_to_empty(self):
        p = np.array([[0.1, 0.2, 0.7]] * 4)
        con = greedy_aggregate(EmissionSequence(probs=p, alphabet=("a", "b")))
        assert len(con) == 0
        assert con.chars == ""

    def test_blank_run_separates_repeats(self):
        p = np.array([
            [0.9, 0.05, 0.05],
            [0.1, 0.1, 0.8],
            [0.9, 0.05, 0.05],
        ])
        con = greedy_aggregate(EmissionSequence(probs=p, alphabet=("a", "b")))
        assert con.chars == "aa"

    def test_output_vectors_keep_run_argmax_and_are_distributions(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            probs = rng.dirichlet(np.ones(4), size=rng.integers(1, 12))
            em = EmissionSequence(probs=probs, alphabet=("a", "b", "c"))
            con = greedy_aggregate(em)
            assert len(con) <= len(em)
            for vec, idx in zip(con.vectors, con.char_indices):
                assert int(vec.argmax()) == idx
                assert vec.min() >= 0 and abs(vec.sum() - 1) < 1e-9
            for (s0, e0), (s1, e1) in zip(con.spans, con.spans[1:]):
                assert e0 < s1


def tiny_features(t_len, alphabet_size, seed=0):
    rng = np.random.default_rng(seed)
    rows = np.zeros((t_len, 4 + alphabet_size))
    rows[:, :4] = rng.normal(size=(t_len, 4)) * 0.1
    for t in range(t_len):
        rows[t, 4 + rng.integers(alphabet_size)] = 1.0
    return FeatureSequence(rows=rows, char_count=alphabet_size)


class TestPathDecoderModel:
    def test_emission_rows_are_distributions(self):
        cfg = PathDecoderConfig(alphabet=("a", "b", "c"), model_dim=8, heads=2,
                                ff_dim=12, recurrent_hidden=4, decoder_hidden=4)
        model = PathDecoderModel(cfg)
        em = encode_path(model, tiny_features(6, 3))
        assert em.probs.shape == (6, 4)
        assert np.abs(em.probs.sum(axis=1) - 1.0).max() < 1e-6

    def test_zeroed_projection_gives_uniform_rows(self):
        cfg = PathDecoderConfig(alphabet=("a", "b", "c"), model_dim=8, heads=2,
                                ff_dim=12, use_recurrent_stack=False, decoder_hidden=4)
        model = PathDecoderModel(cfg)
        model.emission_proj.w.data[:] = 0.0
        model.emission_proj.b.data[:] = 0.0
        em = encode_path(model, tiny_features(5, 3))
        assert np.abs(em.probs - 0.25).max() < 1e-12

    def test_feature_width_mismatch(self):
        cfg = PathDecoderConfig(alphabet=("a", "b"), model_dim=8, heads=2, ff_dim=12)
        model = PathDecoderModel(cfg)
        with pytest.raises(ValueError):
            model.encode(np.zeros((4, 9)))

    def test_gradient_of_ctc_through_encoder(self):
        cfg = PathDecoderConfig(alphabet=("a", "b"), model_dim=6, heads=2, ff_dim=8,
                                use_recurrent_stack=True, recurrent_hidden=3,
                                decoder_hidden=3, dropout_rate=0.0, seed=1)
        model = PathDecoderModel(cfg)
        features = tiny_features(4, 2, seed=5)
        params = list(model.encoder_parameters().values())

        def f(*_):
            probs = model.encode(features)
            return ctc_log_loss(probs, "ab", alphabet=cfg.alphabet)

        assert grad_check(f, params, step=1e-5) < 1e-4

    def test_decode_characters_empty_and_length(self):
        cfg = PathDecoderConfig(alphabet=("a", "b"), model_dim=8, heads=2, ff_dim=12,
                                use_recurrent_stack=False, decoder_hidden=4)
        model = PathDecoderModel(cfg)
        empty = ContractedSequence(vectors=np.zeros((0, 3)), char_indices=[],
                                   spans=[], alphabet=("a", "b"))
        assert decode_characters(model, empty) == ""
        em = encode_path(model, tiny_features(7, 2))
        con = greedy_aggregate(em)
        assert len(decode_characters(model, con)) == len(con)

    def test_checkpoint_round_trip_preserves_decodes(self, tmp_path, overfit_bundle):
        model = overfit_bundle.path_model
        path = tmp_path / "pd.json"
        model.save(path)
        again = PathDecoderModel.load(path)
        for word in overfit_bundle.words:
            from swipeforge.synth import featurize
            fs = featurize(overfit_bundle.trace_for(word), overfit_bundle.layout)
            assert decode_word(again, fs) == decode_word(model, fs)


class TestTraining:
    def test_overfit_two_words_decodes_exactly(self, overfit_bundle):
        from swipeforge.synth import featurize
        for word in overfit_bundle.words:
            fs = featurize(overfit_bundle.trace_for(word), overfit_bundle.layout)
            assert decode_word(overfit_bundle.path_model, fs) == word
            assert decode_word(overfit_bundle.path_model, fs, use_decoder_head=False) == word

    def test_zero_epochs_returns_initialized_model(self):
        cfg = PathDecoderConfig(alphabet=("a", "b"), model_dim=8, heads=2, ff_dim=12,
                                use_recurrent_stack=False, decoder_hidden=4, seed=3)
        dataset = [(tiny_features(6, 2, seed=i), "ab") for i in range(3)]
        trained, report = train_path_decoder(
            dataset, cfg, PathTrainingConfig(ctc_epochs=0, decoder_epochs=0))
        fresh = PathDecoderModel(cfg)
        for (k, p), (_, q) in zip(trained.parameters().items(), fresh.parameters().items()):
            assert np.array_equal(p.data, q.data), k
        assert report.ctc_epoch_losses == []

    def test_empty_dataset_rejected(self):
        cfg = PathDecoderConfig(alphabet=("a", "b"))
        with pytest.raises(ValueError):
            train_path_decoder([], cfg)

    def test_stage1_loss_trend_on_overfit_fixture(self, overfit_bundle):
        # non-increasing up to a 5% transient allowance
        losses = None
        from swipeforge.synth import featurize
        dataset = []
        for w in overfit_bundle.words:
            fs = featurize(overfit_bundle.trace_for(w), overfit_bundle.layout)
            dataset.extend([(fs, w)] * 10)
        cfg = PathDecoderConfig(alphabet=tuple(overfit_bundle.layout.chars), model_dim=16,
                                heads=2, ff_dim=24, use_recurrent_stack=False,
                                decoder_hidden=8, seed=5)
        _, report = train_path_decoder(dataset, cfg,
                                       PathTrainingConfig(ctc_epochs=5, decoder_epochs=0))
        losses = report.ctc_epoch_losses
        for prev, cur in zip(losses, losses[1:]):
            assert cur <= prev * 1.05

    def test_decode_word_deterministic_and_empty_feature_handling(self, overfit_bundle):
        from swipeforge.synth import featurize
        fs = featurize(overfit_bundle.trace_for("cat"), overfit_bundle.layout)
        a = decode_word(overfit_bundle.path_model, fs)
        b = decode_word(overfit_bundle.path_model, fs)
        assert a == b
        empty = FeatureSequence(rows=np.zeros((0, 30)), char_count=26)
        assert decode_word(overfit_bundle.path_model, empty) == ""

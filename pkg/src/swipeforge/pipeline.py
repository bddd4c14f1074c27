"""End-to-end orchestration: splits, decoding tasks, metrics, and analyses.

Two task variants exist. ``english_to_indic`` runs path decode ->
transliteration beams -> per-beam correction; ``indic_to_indic`` drops the
transliteration stage and asks the corrector to rank vocabulary matches for
the decoded string directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import correct as cor
from . import ctcdecode as ctc
from . import translit as tl
from .geometry import KeyboardLayout, Point, key_center
from .synth import FeatureSequence, SynthConfig, Trace, featurize, synthesize_dataset

TASK_ENGLISH_TO_INDIC = "english_to_indic"
TASK_INDIC_TO_INDIC = "indic_to_indic"

ABLATION_SWITCHES = ("derivative_features", "attention", "correction", "dense_scorer")


class TaskConfigError(ValueError):
    pass


@dataclass
class TaskSpec:
    task: str
    layout: KeyboardLayout
    path_model: ctc.PathDecoderModel
    translit_model: tl.TranslitModel | None = None
    correct_model: cor.CorrectionModel | None = None
    vocab: cor.Vocabulary | None = None
    k: int = 3
    use_decoder_head: bool = True
    bypass_correction: bool = False
    correction_method: str = "dense"

    def __post_init__(self) -> None:
        if self.task not in (TASK_ENGLISH_TO_INDIC, TASK_INDIC_TO_INDIC):
            raise TaskConfigError(f"unknown task {self.task!r}")
        if self.task == TASK_ENGLISH_TO_INDIC and self.translit_model is None:
            raise TaskConfigError("english_to_indic requires a transliteration model")
        if self.task == TASK_INDIC_TO_INDIC and self.translit_model is not None:
            raise TaskConfigError("indic_to_indic must not carry a transliteration model")
        if not self.bypass_correction and (self.correct_model is None or self.vocab is None):
            raise TaskConfigError("correction stage needs a model and a vocabulary "
                                  "(or bypass_correction=True)")
        if self.k < 1:
            raise TaskConfigError("k must be >= 1")


@dataclass
class Candidate:
    word: str
    score: float
    score_kind: str              # "correction_score" | "translit_log_prob" | "path_decode"
    path_string: str
    translit: str | None = None
    translit_log_prob: float | None = None
    fallback: bool = False


@dataclass
class DecodeResult:
    path_string: str
    candidates: list[Candidate]


def split_dataset(records, seed: int):
    """Deterministic 70-20-10 split (floor/floor/remainder) of a record list.

    Shuffling uses numpy's PCG64 generator, which is specified and stable
    across platforms for a fixed seed.
    """
    records = list(records)
    if len(records) < 10:
        raise ValueError(f"need at least 10 records to split, got {len(records)}")
    order = np.random.default_rng(seed).permutation(len(records))
    n = len(records)
    n_train = (7 * n) // 10
    n_val = (2 * n) // 10
    shuffled = [records[i] for i in order]
    return (shuffled[:n_train],
            shuffled[n_train:n_train + n_val],
            shuffled[n_train + n_val:])


def _dedup_keep_order(candidates: list[Candidate]) -> list[Candidate]:
    seen: set[str] = set()
    out = []
    for c in candidates:
        if c.word not in seen:
            seen.add(c.word)
            out.append(c)
    return out


def run_pipeline(task: TaskSpec, trace: Trace) -> DecodeResult:
    """Decode one trace to ranked word candidates with stage provenance."""
    if trace.layout_name != task.layout.name:
        raise TaskConfigError(
            f"trace layout {trace.layout_name!r} does not match task layout {task.layout.name!r}")
    features = featurize(trace, task.layout)
    return run_pipeline_features(task, features)


def run_pipeline_features(task: TaskSpec, features: FeatureSequence) -> DecodeResult:
    path_string = ctc.decode_word(task.path_model, features,
                                  use_decoder_head=task.use_decoder_head)
    if not path_string:
        return DecodeResult(path_string="", candidates=[])

    if task.task == TASK_ENGLISH_TO_INDIC:
        beams = tl.beam_search(task.translit_model, path_string, k=task.k)
        candidates = []
        for word, log_prob in beams:
            if task.bypass_correction or not word:
                candidates.append(Candidate(
                    word=word, score=log_prob, score_kind="translit_log_prob",
                    path_string=path_string, translit=word, translit_log_prob=log_prob))
                continue
            result = cor.correct(task.correct_model, task.vocab, word,
                                 method=task.correction_method)
            candidates.append(Candidate(
                word=result.word, score=result.score, score_kind="correction_score",
                path_string=path_string, translit=word, translit_log_prob=log_prob,
                fallback=result.fallback))
        return DecodeResult(path_string=path_string,
                            candidates=_dedup_keep_order(candidates)[:task.k])

    if task.bypass_correction:
        return DecodeResult(path_string=path_string, candidates=[Candidate(
            word=path_string, score=0.0, score_kind="path_decode",
            path_string=path_string)])
    top = cor.correct(task.correct_model, task.vocab, path_string,
                      method=task.correction_method)
    if top.fallback:
        return DecodeResult(path_string=path_string, candidates=[Candidate(
            word=path_string, score=top.score, score_kind="correction_score",
            path_string=path_string, fallback=True)])
    ranked = cor.rank(task.correct_model, task.vocab, path_string, k=task.k,
                      method=task.correction_method)
    candidates = [Candidate(word=w, score=e, score_kind="correction_score",
                            path_string=path_string) for w, e in ranked]
    return DecodeResult(path_string=path_string,
                        candidates=_dedup_keep_order(candidates)[:task.k])


@dataclass
class EvalSample:
    trace: Trace
    gold: str                      # the final word the pipeline must produce
    gold_source: str | None = None  # latin source word (english_to_indic only)


@dataclass
class EvalItem:
    gold: str
    path_string: str
    top1: str | None
    hit_rank: int | None           # 1-based rank of the gold word, None if absent


@dataclass
class EvalReport:
    task: str
    dataset_size: int
    k: int
    ctc_accuracy_pre_head: float
    ctc_accuracy_post_head: float
    final_accuracy: dict[int, float]
    translit_accuracy: dict[int, float] | None = None
    length_bins: dict[int, tuple[int, float]] = field(default_factory=dict)
    skipped_samples: int = 0
    items: list[EvalItem] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            f"task\t{self.task}",
            f"dataset_size\t{self.dataset_size}",
            f"k\t{self.k}",
            f"ctc_accuracy_pre_head\t{self.ctc_accuracy_pre_head:.4f}",
            f"ctc_accuracy_post_head\t{self.ctc_accuracy_post_head:.4f}",
        ]
        if self.translit_accuracy is not None:
            for kk in sorted(self.translit_accuracy):
                lines.append(f"translit_accuracy_k{kk}\t{self.translit_accuracy[kk]:.4f}")
        for kk in sorted(self.final_accuracy):
            lines.append(f"final_accuracy_k{kk}\t{self.final_accuracy[kk]:.4f}")
        for length in sorted(self.length_bins):
            n, acc = self.length_bins[length]
            lines.append(f"length_{length}\t{n}\t{acc:.4f}")
        lines.append(f"skipped_samples\t{self.skipped_samples}")
        return "\n".join(lines) + "\n"


def evaluate(task: TaskSpec, samples, k: int | None = None,
             feature_fn=None) -> EvalReport:
    """k-best evaluation: a sample counts as correct at k when the gold word
    appears among the first k candidates.

    ``feature_fn`` overrides trace featurization (the derivative-feature
    ablation zeroes the dx/dy columns through it).
    """
    samples = list(samples)
    if not samples:
        raise ValueError("evaluation set is empty")
    if feature_fn is None:
        feature_fn = lambda trace: featurize(trace, task.layout)
    k = k or task.k
    ks = list(range(1, k + 1))
    ctc_pre = ctc_post = 0
    translit_hits = {kk: 0 for kk in ks} if task.task == TASK_ENGLISH_TO_INDIC else None
    final_hits = {kk: 0 for kk in ks}
    by_length: dict[int, list[int]] = {}
    skipped = 0
    items: list[EvalItem] = []

    for sample in samples:
        features = feature_fn(sample.trace)
        path_gold = sample.gold_source if task.task == TASK_ENGLISH_TO_INDIC else sample.gold
        pre = ctc.decode_word(task.path_model, features, use_decoder_head=False)
        post = ctc.decode_word(task.path_model, features, use_decoder_head=True)
        ctc_pre += (pre == path_gold)
        ctc_post += (post == path_gold)
        result = run_pipeline_features(task, features)
        if not result.candidates:
            skipped += 1
        if translit_hits is not None:
            translits = [c.translit for c in result.candidates if c.translit is not None]
            for kk in ks:
                translit_hits[kk] += (sample.gold in translits[:kk])
        words = [c.word for c in result.candidates]
        hit_rank = words.index(sample.gold) + 1 if sample.gold in words else None
        for kk in ks:
            final_hits[kk] += (hit_rank is not None and hit_rank <= kk)
        by_length.setdefault(len(sample.gold), []).append(
            1 if (hit_rank is not None and hit_rank <= k) else 0)
        items.append(EvalItem(gold=sample.gold, path_string=result.path_string,
                              top1=words[0] if words else None, hit_rank=hit_rank))

    n = len(samples)
    pct = lambda c: 100.0 * c / n
    return EvalReport(
        task=task.task,
        dataset_size=n,
        k=k,
        ctc_accuracy_pre_head=pct(ctc_pre),
        ctc_accuracy_post_head=pct(ctc_post),
        translit_accuracy={kk: pct(v) for kk, v in translit_hits.items()} if translit_hits else None,
        final_accuracy={kk: pct(v) for kk, v in final_hits.items()},
        length_bins={length: (len(v), 100.0 * sum(v) / len(v))
                     for length, v in sorted(by_length.items())},
        skipped_samples=skipped,
        items=items,
    )


def angle_subtended(p0: Point, p1: Point, p2: Point) -> float:
    """Interior angle at p1 between rays to p0 and p2, in degrees [0, 180]."""
    ax, ay = p0.x - p1.x, p0.y - p1.y
    bx, by = p2.x - p1.x, p2.y - p1.y
    na = math.hypot(ax, ay)
    nb = math.hypot(bx, by)
    if na == 0.0 or nb == 0.0:
        raise ValueError("angle undefined: coincident points")
    cos = max(-1.0, min(1.0, (ax * bx + ay * by) / (na * nb)))
    return math.degrees(math.acos(cos))


def trigrams(word: str) -> list[str]:
    return [word[i:i + 3] for i in range(len(word) - 2)]


@dataclass
class AnalysisTables:
    length_rows: list[tuple[int, int, float]]          # length, count, accuracy pct
    angle_rows: list[tuple[float, float, int, float]]  # bin lo, bin hi, trigram count, mean angle
    trigram_count: int
    skipped_trigrams: int

    def length_text(self) -> str:
        lines = ["word_length\tcount\taccuracy_pct"]
        lines += [f"{l}\t{n}\t{a:.4f}" for l, n, a in self.length_rows]
        return "\n".join(lines) + "\n"

    def angle_text(self) -> str:
        lines = ["error_rate_bin_lo\terror_rate_bin_hi\ttrigram_count\tmean_angle_deg"]
        lines += [f"{lo:.1f}\t{hi:.1f}\t{n}\t{ang:.4f}" for lo, hi, n, ang in self.angle_rows]
        return "\n".join(lines) + "\n"


def error_analysis(items: list[EvalItem], layout: KeyboardLayout) -> AnalysisTables:
    """Word-length accuracy bins and trigram error-rate vs subtended angle.

    Every gold-word trigram contributes the per-word hit/miss of the words
    containing it; trigram angles come from the key centers of its three
    characters. Trigrams with coincident adjacent keys have no angle and are
    skipped (counted).
    """
    by_length: dict[int, list[int]] = {}
    tri_outcomes: dict[str, list[int]] = {}
    for item in items:
        hit = 1 if item.hit_rank is not None else 0
        by_length.setdefault(len(item.gold), []).append(hit)
        for tri in trigrams(item.gold):
            tri_outcomes.setdefault(tri, []).append(hit)

    length_rows = [(length, len(v), 100.0 * sum(v) / len(v))
                   for length, v in sorted(by_length.items())]

    tri_err: list[tuple[float, float]] = []  # (error rate, angle)
    skipped = 0
    for tri, outcomes in tri_outcomes.items():
        if any(c not in layout for c in tri):
            skipped += 1
            continue
        p0, p1, p2 = (key_center(layout, c) for c in tri)
        try:
            angle = angle_subtended(p0, p1, p2)
        except ValueError:
            skipped += 1
            continue
        tri_err.append((1.0 - sum(outcomes) / len(outcomes), angle))

    angle_rows = []
    for i in range(10):
        lo, hi = i / 10.0, (i + 1) / 10.0
        in_bin = [ang for err, ang in tri_err
                  if (lo <= err < hi) or (i == 9 and err == 1.0)]
        if in_bin:
            angle_rows.append((lo, hi, len(in_bin), float(np.mean(in_bin))))
    return AnalysisTables(length_rows=length_rows, angle_rows=angle_rows,
                          trigram_count=len(tri_err), skipped_trigrams=skipped)


@dataclass
class ExperimentFixture:
    """Everything needed to train and evaluate one pipeline variant from scratch.

    ``words`` are the words traced on the layout (latin sources for
    english_to_indic). For english_to_indic, ``lexicon`` supplies the
    latin -> indic gold pairs and the correction vocabulary is the set of
    indic targets; for indic_to_indic the vocabulary is ``words`` itself.
    """

    task: str
    layout: KeyboardLayout
    words: list[str]
    synth_config: SynthConfig
    traces_per_word: int = 20
    split_seed: int = 0
    lexicon: list[tuple[str, str]] | None = None
    k: int = 3
    path_overrides: dict = field(default_factory=dict)
    path_training: ctc.PathTrainingConfig = field(default_factory=ctc.PathTrainingConfig)
    translit_overrides: dict = field(default_factory=dict)
    translit_training: tl.TranslitTrainingConfig = field(default_factory=tl.TranslitTrainingConfig)
    correct_overrides: dict = field(default_factory=dict)
    correct_training: cor.CorrectTrainingConfig = field(default_factory=cor.CorrectTrainingConfig)
    corruptions_per_word: int = 2
    corruption_seed: int = 101


def _fixture_samples(fixture: ExperimentFixture):
    lex = dict(fixture.lexicon) if fixture.lexicon else {}
    samples = []
    for trace in synthesize_dataset(fixture.layout, fixture.words, fixture.synth_config,
                                    fixture.traces_per_word):
        if fixture.task == TASK_ENGLISH_TO_INDIC:
            samples.append(EvalSample(trace=trace, gold=lex[trace.word],
                                      gold_source=trace.word))
        else:
            samples.append(EvalSample(trace=trace, gold=trace.word))
    return samples


def run_experiment(fixture: ExperimentFixture,
                   ablations: frozenset[str] | set[str] = frozenset()) -> EvalReport:
    """Synthesize, split 70-20-10, train all stages, evaluate on the test split.

    ``ablations`` may contain any of ``ABLATION_SWITCHES``:
    derivative_features zeroes the dx/dy feature columns in training and eval;
    attention trains the transliterator with final-state context; correction
    bypasses the corrector; dense_scorer trains and scores with raw squared
    Euclidean distance instead of the dense metric.
    """
    ablations = frozenset(ablations)
    unknown = ablations - set(ABLATION_SWITCHES)
    if unknown:
        raise ValueError(f"unknown ablation switches: {sorted(unknown)}")
    if fixture.task == TASK_ENGLISH_TO_INDIC and not fixture.lexicon:
        raise TaskConfigError("english_to_indic fixture needs a lexicon")

    zero_derivatives = "derivative_features" in ablations
    train_set, val_set, test_set = split_dataset(_fixture_samples(fixture), fixture.split_seed)

    # Stage 1+2: path decoder.
    alphabet = tuple(fixture.layout.chars)
    path_cfg = ctc.PathDecoderConfig(
        alphabet=alphabet,
        use_recurrent_stack=(fixture.task == TASK_ENGLISH_TO_INDIC),
        **fixture.path_overrides)
    path_training = ctc.PathTrainingConfig(
        lr=fixture.path_training.lr, ctc_epochs=fixture.path_training.ctc_epochs,
        decoder_epochs=fixture.path_training.decoder_epochs,
        seed=fixture.path_training.seed, zero_derivative_features=zero_derivatives)
    train_data = [(featurize(s.trace, fixture.layout),
                   s.gold_source or s.gold) for s in train_set]
    path_model, _ = ctc.train_path_decoder(train_data, path_cfg, path_training)

    def feature_fn(trace: Trace) -> FeatureSequence:
        f = featurize(trace, fixture.layout)
        if zero_derivatives:
            rows = f.rows.copy()
            rows[:, 2:4] = 0.0
            return FeatureSequence(rows=rows, char_count=f.char_count)
        return f

    # Stage 3: transliteration (english_to_indic only), trained on the path
    # decoder's own outputs for the training split.
    translit_model = None
    if fixture.task == TASK_ENGLISH_TO_INDIC:
        lex = dict(fixture.lexicon)
        decoded_pairs = []
        for sample in train_set:
            decoded = ctc.decode_word(path_model, feature_fn(sample.trace))
            if decoded:
                decoded_pairs.append((decoded, lex[sample.gold_source]))
        src_alpha = tuple(sorted(set(alphabet) | {c for s, _ in decoded_pairs for c in s}))
        tgt_alpha = tuple(sorted({c for _, t in fixture.lexicon for c in t}))
        tl_cfg = tl.TranslitConfig(source_alphabet=src_alpha, target_alphabet=tgt_alpha,
                                   use_attention=("attention" not in ablations),
                                   **fixture.translit_overrides)
        translit_model, _ = tl.train_translit(decoded_pairs, tl_cfg, fixture.translit_training)

    # Stage 4: correction.
    correct_model = None
    vocab = None
    if "correction" not in ablations:
        if fixture.task == TASK_ENGLISH_TO_INDIC:
            vocab_words = sorted({t for _, t in fixture.lexicon})
        else:
            vocab_words = sorted(set(fixture.words))
        corr_alpha = tuple(sorted({c for w in vocab_words for c in w}))
        correct_model = cor.CorrectionModel(
            cor.CorrectConfig(alphabet=corr_alpha, **fixture.correct_overrides))
        corruption_rng = np.random.default_rng(fixture.corruption_seed)
        pairs = cor.generate_corruptions(vocab_words, corruption_rng,
                                         per_word=fixture.corruptions_per_word)
        vocab, _ = cor.train_correct(correct_model, vocab_words, pairs,
                                     fixture.correct_training,
                                     use_dense=("dense_scorer" not in ablations))
        val_words = sorted({s.gold for s in val_set})
        correct_model.oov_threshold = cor.calibrate_threshold(correct_model, vocab, val_words)

    task = TaskSpec(
        task=fixture.task,
        layout=fixture.layout,
        path_model=path_model,
        translit_model=translit_model,
        correct_model=correct_model,
        vocab=vocab,
        k=fixture.k,
        bypass_correction=("correction" in ablations),
        correction_method=("euclidean" if "dense_scorer" in ablations else "dense"),
    )
    return evaluate(task, test_set, feature_fn=feature_fn)


def ablate(fixture: ExperimentFixture, switches) -> EvalReport:
    """Re-run training and evaluation with the named components disabled."""
    return run_experiment(fixture, ablations=frozenset(switches))

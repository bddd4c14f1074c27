"""Contrastive spelling correction over a vocabulary.

Words are encoded by summing position-aware character vectors (a trainable
character embedding contextualized by one bidirectional GRU layer) and
min-max normalizing the sum. Candidate distance is the squared difference of
encodings passed through a small dense scorer; the vocabulary entry with the
smallest score wins, with a threshold fallback for out-of-vocabulary inputs.

Vocabulary encodings are immutable snapshots: adding words only means
encoding them, never retraining.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import nncore as nn
from .nncore import Tensor

logger = logging.getLogger("swipeforge.correct")

_DEGENERATE_SPAN = 1e-12


@dataclass
class CorrectConfig:
    alphabet: tuple[str, ...]
    embed_dim: int = 64            # word-encoding width E (must be even)
    scorer_hidden: int = 64
    oov_threshold: float = math.inf
    seed: int = 0

    def __post_init__(self) -> None:
        self.alphabet = tuple(self.alphabet)
        if self.embed_dim % 2 != 0:
            raise ValueError("embed_dim must be even (bidirectional halves)")


class CorrectionModel:
    def __init__(self, config: CorrectConfig):
        self.config = config
        c = config
        rng = np.random.default_rng(np.random.SeedSequence([c.seed, 31]))
        self.char_index = {ch: i for i, ch in enumerate(c.alphabet)}
        self.unk_index = len(c.alphabet)
        half = c.embed_dim // 2
        self.char_embed = nn.Embedding(rng, len(c.alphabet) + 1, c.embed_dim, name="char_embed")
        self.fwd = nn.GRUCell(rng, c.embed_dim, half, name="ctx.f")
        self.bwd = nn.GRUCell(rng, c.embed_dim, half, name="ctx.b")
        self.dense1 = nn.Dense(rng, c.embed_dim, c.scorer_hidden, name="score1")
        self.dense2 = nn.Dense(rng, c.scorer_hidden, 1, name="score2")
        self.oov_threshold = c.oov_threshold
        self._warned_chars: set[str] = set()

    def parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for part in (self.char_embed, self.fwd, self.bwd, self.dense1, self.dense2):
            params.update(part.parameters())
        return params

    def hyperparameters(self) -> dict:
        c = self.config
        return {
            "alphabet": list(c.alphabet), "embed_dim": c.embed_dim,
            "scorer_hidden": c.scorer_hidden, "oov_threshold": self.oov_threshold,
            "seed": c.seed,
        }

    def save(self, path) -> None:
        nn.save_checkpoint(path, "correct", self.hyperparameters(), self.parameters())

    @classmethod
    def load(cls, path) -> "CorrectionModel":
        _, hyper, arrays = nn.load_checkpoint(path, expect_kind="correct")
        hyper = dict(hyper)
        hyper["alphabet"] = tuple(hyper["alphabet"])
        threshold = hyper.pop("oov_threshold", math.inf)
        model = cls(CorrectConfig(oov_threshold=threshold, **hyper))
        nn.restore_parameters(model.parameters(), arrays)
        return model

    def _indices(self, word: str) -> list[int]:
        out = []
        for c in word:
            i = self.char_index.get(c)
            if i is None:
                if c not in self._warned_chars:
                    self._warned_chars.add(c)
                    logger.warning("character %r not in correction alphabet; using UNK", c)
                i = self.unk_index
            out.append(i)
        return out


def encode_word(model: CorrectionModel, word: str) -> Tensor:
    """Sum of contextual character vectors, min-max normalized into [0, 1].

    A constant pre-normalization vector maps to all zeros (degenerate but
    total). Unknown characters fall back to a reserved UNK embedding and are
    reported through the module logger.
    """
    if not word:
        raise ValueError("cannot encode an empty word")
    idx = model._indices(word)
    embeds = model.char_embed(idx)
    f = nn.run_recurrent(model.fwd, embeds)
    b = nn.run_recurrent(model.bwd, embeds, reverse=True)
    rows = [nn.concat([f[t], b[t]], axis=1) for t in range(len(f))]
    summed = nn.tsum(nn.concat(rows, axis=0), axis=0)
    mn = summed.min()
    mx = summed.max()
    span = float(mx.data) - float(mn.data)
    if span < _DEGENERATE_SPAN:
        return Tensor(np.zeros(model.config.embed_dim))
    return nn.div(nn.add(summed, nn.mul(mn, -1.0)), nn.add(mx, nn.mul(mn, -1.0)))


def distance_vector(h_w, h_v):
    """Componentwise squared difference of two word encodings."""
    if isinstance(h_w, Tensor) or isinstance(h_v, Tensor):
        d = nn.add(nn.as_tensor(h_w), nn.mul(nn.as_tensor(h_v), -1.0))
        return nn.mul(d, d)
    h_w, h_v = np.asarray(h_w), np.asarray(h_v)
    if h_w.shape != h_v.shape:
        raise ValueError(f"encoding dims differ: {h_w.shape} vs {h_v.shape}")
    return (h_w - h_v) ** 2


def score(model: CorrectionModel, d) -> Tensor:
    """Scalar distance metric from the two dense layers."""
    x = nn.as_tensor(d)
    if x.data.ndim == 1:
        x = x.reshape((1, -1))
    return model.dense2(nn.relu(model.dense1(x)))


class Vocabulary:
    """Ordered word list with a precomputed encoding per word."""

    def __init__(self, words: list[str], encodings: np.ndarray):
        self.words = list(words)
        if len(set(self.words)) != len(self.words):
            raise ValueError("vocabulary contains duplicate words")
        self.encodings = np.asarray(encodings, dtype=np.float64)
        if self.encodings.shape[0] != len(self.words):
            raise ValueError("one encoding required per word")

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def build(cls, model: CorrectionModel, words) -> "Vocabulary":
        uniq: list[str] = []
        seen: set[str] = set()
        for w in words:
            if w and w not in seen:
                seen.add(w)
                uniq.append(w)
        with nn.no_grad():
            enc = (np.vstack([encode_word(model, w).data for w in uniq])
                   if uniq else np.zeros((0, model.config.embed_dim)))
        return cls(uniq, enc)

    def augment(self, model: CorrectionModel, new_words) -> "Vocabulary":
        """Snapshot with extra words appended; existing encodings unchanged."""
        fresh = [w for w in new_words if w and w not in set(self.words)]
        with nn.no_grad():
            extra = (np.vstack([encode_word(model, w).data for w in fresh])
                     if fresh else np.zeros((0, self.encodings.shape[1])))
        return Vocabulary(self.words + fresh, np.vstack([self.encodings, extra]))


def _batched_scores(model: CorrectionModel, h_w: np.ndarray, vocab: Vocabulary,
                    method: str = "dense") -> np.ndarray:
    d = (h_w[None, :] - vocab.encodings) ** 2
    if method == "euclidean":
        return d.sum(axis=1)
    if method != "dense":
        raise ValueError(f"unknown scoring method {method!r}")
    w1, b1 = model.dense1.w.data, model.dense1.b.data
    w2, b2 = model.dense2.w.data, model.dense2.b.data
    return (np.maximum(d @ w1 + b1, 0.0) @ w2 + b2).reshape(-1)


def rank(model: CorrectionModel, vocab: Vocabulary, word: str, k: int = 1,
         method: str = "dense") -> list[tuple[str, float]]:
    """k best vocabulary matches by ascending score; ties keep vocab order."""
    if len(vocab) == 0:
        return []
    with nn.no_grad():
        h_w = encode_word(model, word).data
    e = _batched_scores(model, h_w, vocab, method=method)
    order = np.argsort(e, kind="stable")[:k]
    return [(vocab.words[i], float(e[i])) for i in order]


@dataclass
class CorrectionResult:
    word: str
    score: float
    fallback: bool


def correct(model: CorrectionModel, vocab: Vocabulary, word: str,
            method: str = "dense") -> CorrectionResult:
    """Best vocabulary match, or the input itself when past the OOV threshold."""
    if not word:
        raise ValueError("cannot correct an empty word")
    ranked = rank(model, vocab, word, k=1, method=method)
    if not ranked:
        return CorrectionResult(word=word, score=math.inf, fallback=True)
    best, e_star = ranked[0]
    if e_star > model.oov_threshold:
        return CorrectionResult(word=word, score=e_star, fallback=True)
    return CorrectionResult(word=best, score=e_star, fallback=False)


@dataclass
class CorrectTrainingConfig:
    lr: float = 0.002
    epochs: int = 8
    negatives: int | None = 32  # None trains against the full vocabulary
    seed: int = 0


@dataclass
class CorrectTrainingReport:
    epoch_losses: list[float] = field(default_factory=list)
    pair_source: str = "synthetic-corruptions"

    def to_text(self) -> str:
        lines = [f"pair_source\t{self.pair_source}", "epoch\tloss"]
        lines += [f"{i}\t{loss!r}" for i, loss in enumerate(self.epoch_losses)]
        return "\n".join(lines) + "\n"


def train_correct(model: CorrectionModel, vocab_words: list[str], pairs,
                  training: CorrectTrainingConfig | None = None,
                  pair_source: str = "synthetic-corruptions",
                  use_dense: bool = True) -> tuple[Vocabulary, CorrectTrainingReport]:
    """Classification training: softmax over negated scores across the
    vocabulary (or a sampled negative batch), cross-entropy against the true
    word's index.

    Vocabulary-side encodings are recomputed once per epoch and treated as
    constants within it; gradients flow through the corrupted word's encoding
    and the dense scorer. Returns a fresh vocabulary snapshot encoded with
    the trained model.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("training pairs are empty")
    vocab_words = list(vocab_words)
    word_pos = {w: i for i, w in enumerate(vocab_words)}
    for _, true_word in pairs:
        if true_word not in word_pos:
            raise ValueError(f"true word {true_word!r} missing from vocabulary")
    training = training or CorrectTrainingConfig()
    rng = np.random.default_rng(np.random.SeedSequence([training.seed, 37]))
    opt = nn.Adam(model.parameters(), lr=training.lr)
    report = CorrectTrainingReport(pair_source=pair_source)

    full_vocab = (training.negatives is None
                  or training.negatives >= len(vocab_words) - 1)
    for _ in range(training.epochs):
        snapshot = Vocabulary.build(model, vocab_words).encodings
        order = rng.permutation(len(pairs))
        total = 0.0
        for i in order:
            corrupted, true_word = pairs[i]
            if full_vocab:
                cand_idx = np.arange(len(vocab_words))
                target = word_pos[true_word]
            else:
                others = rng.choice(len(vocab_words), size=training.negatives + 1,
                                    replace=False)
                negs = [j for j in others if vocab_words[j] != true_word]
                cand_idx = np.array([word_pos[true_word]] + negs[:training.negatives])
                target = 0
            h_w = encode_word(model, corrupted).reshape((1, -1))
            diff = nn.add(h_w, Tensor(-snapshot[cand_idx]))
            d = nn.mul(diff, diff)
            if use_dense:
                e = model.dense2(nn.relu(model.dense1(d)))
            else:
                e = nn.tsum(d, axis=1, keepdims=True)
            logits = nn.mul(e, -1.0).T
            loss = nn.cross_entropy(logits, [target])
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.data)
        report.epoch_losses.append(total / len(pairs))
    return Vocabulary.build(model, vocab_words), report


def calibrate_threshold(model: CorrectionModel, vocab: Vocabulary, sample_words,
                        quantile: float = 0.99) -> float:
    """OOV threshold: the given quantile of best scores over in-vocab inputs."""
    best = []
    for w in sample_words:
        ranked = rank(model, vocab, w, k=1)
        if ranked:
            best.append(ranked[0][1])
    if not best:
        raise ValueError("no sample words to calibrate on")
    return float(np.quantile(np.asarray(best), quantile))


EDIT_OPS = ("substitute", "delete", "insert", "transpose")


def generate_corruptions(vocab_words, rng: np.random.Generator,
                         ops=EDIT_OPS, per_word: int = 2,
                         max_edits: int = 2) -> list[tuple[str, str]]:
    """Seeded (corrupted, original) pairs with 1..max_edits edit operations."""
    vocab_words = list(vocab_words)
    if not vocab_words:
        raise ValueError("vocabulary is empty")
    ops = tuple(ops)
    unknown = set(ops) - set(EDIT_OPS)
    if unknown:
        raise ValueError(f"unknown edit ops: {sorted(unknown)}")
    alphabet = sorted({c for w in vocab_words for c in w})
    pairs = []
    for word in vocab_words:
        for _ in range(per_word):
            corrupted = word
            for _ in range(20):  # retry until the corruption actually differs
                corrupted = word
                for _ in range(int(rng.integers(1, max_edits + 1))):
                    corrupted = _apply_edit(corrupted, ops, alphabet, rng)
                if corrupted and corrupted != word:
                    break
            if corrupted and corrupted != word:
                pairs.append((corrupted, word))
    return pairs


def _apply_edit(word: str, ops, alphabet, rng: np.random.Generator) -> str:
    op = ops[int(rng.integers(0, len(ops)))]
    if op == "transpose" and len(word) < 2:
        op = "substitute"
    if op == "delete" and len(word) < 2:
        op = "insert"
    if op == "substitute":
        pos = int(rng.integers(0, len(word)))
        ch = alphabet[int(rng.integers(0, len(alphabet)))]
        return word[:pos] + ch + word[pos + 1:]
    if op == "delete":
        pos = int(rng.integers(0, len(word)))
        return word[:pos] + word[pos + 1:]
    if op == "insert":
        pos = int(rng.integers(0, len(word) + 1))
        ch = alphabet[int(rng.integers(0, len(alphabet)))]
        return word[:pos] + ch + word[pos:]
    pos = int(rng.integers(0, len(word) - 1))
    return word[:pos] + word[pos + 1] + word[pos] + word[pos + 2:]


def read_vocabulary_file(path) -> list[str]:
    """One word per line, UTF-8; blank lines ignored, order preserved."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            w = line.strip()
            if w:
                out.append(w)
    return out

"""CTC gesture path decoder.

Pipeline: feature sequence -> positional encoding + self-attention encoder
(optionally followed by a 2-layer bidirectional LSTM stack) -> per-frame
emission distributions over characters plus blank -> greedy aggregation of
same-argmax runs -> bidirectional character decoder head.

The loss marginalizes over all frame-level alignments that collapse to the
target; a brute-force alignment enumerator doubles as its oracle at toy sizes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import nncore as nn
from .nncore import Tensor
from .synth import FeatureSequence

# Single-codepoint stand-in for the CTC blank in alignment strings.
BLANK = "␢"

# Finite stand-in for log(0) in the forward recursion; far below any real
# log-probability yet safe under logaddexp and exp.
_LOG_ZERO = -1e30


class CTCAlignmentError(ValueError):
    """Target cannot be aligned to the given number of frames."""


class OracleScaleError(ValueError):
    """Brute-force enumeration requested beyond its intended toy bounds."""


def collapse(frames: str) -> str:
    """Merge adjacent repeats, then drop blanks."""
    out = []
    prev = None
    for c in frames:
        if c != prev:
            if c != BLANK:
                out.append(c)
            prev = c
    return "".join(out)


def min_frames(target: str) -> int:
    """Fewest frames any alignment of ``target`` needs (repeats force blanks)."""
    return len(target) + sum(1 for a, b in zip(target, target[1:]) if a == b)


def ctc_alignments(target: str, t_len: int, alphabet) -> set[str]:
    """All length-T frame strings over alphabet+blank that collapse to target."""
    alphabet = list(alphabet)
    if t_len > 8 or len(alphabet) + 1 > 6:
        raise OracleScaleError(f"oracle limits exceeded: T={t_len}, |alphabet|={len(alphabet)}")
    symbols = alphabet + [BLANK]
    return {
        "".join(frames)
        for frames in itertools.product(symbols, repeat=t_len)
        if collapse("".join(frames)) == target
    }


@dataclass
class EmissionSequence:
    """Per-frame probability rows over characters plus a trailing blank column."""

    probs: np.ndarray
    alphabet: tuple[str, ...]
    tensor: Tensor | None = None

    def __post_init__(self) -> None:
        self.alphabet = tuple(self.alphabet)
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape[1] != len(self.alphabet) + 1:
            raise ValueError("emission matrix must be T x (|alphabet|+1)")
        if probs.size and (probs.min() < -1e-9 or probs.max() > 1 + 1e-9):
            raise ValueError("emission entries must lie in [0, 1]")
        if probs.size and np.abs(probs.sum(axis=1) - 1.0).max() > 1e-6:
            raise ValueError("emission rows must sum to 1")
        self.probs = probs

    def __len__(self) -> int:
        return self.probs.shape[0]

    @property
    def blank_index(self) -> int:
        return len(self.alphabet)


@dataclass
class ContractedSequence:
    """Averaged emission vectors from greedy aggregation, in frame order."""

    vectors: np.ndarray          # M x (|alphabet|+1)
    char_indices: list[int]      # argmax character per vector (never blank)
    spans: list[tuple[int, int]]  # inclusive frame span [m, m+k-1] per vector
    alphabet: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.char_indices)

    @property
    def chars(self) -> str:
        return "".join(self.alphabet[i] for i in self.char_indices)


def _extended_labels(target: str, alphabet) -> list[int]:
    index = {c: i for i, c in enumerate(alphabet)}
    blank = len(alphabet)
    ext = [blank]
    for c in target:
        if c not in index:
            raise KeyError(f"target character {c!r} not in alphabet")
        ext.append(index[c])
        ext.append(blank)
    return ext


def ctc_log_loss(emissions, target: str, alphabet=None) -> Tensor:
    """Negative log-probability of ``target`` under the emission rows.

    Runs the log-space forward recursion over the blank-interleaved target;
    gradients flow back into the emission tensor.
    """
    if isinstance(emissions, EmissionSequence):
        alphabet = emissions.alphabet
        probs = emissions.tensor if emissions.tensor is not None else Tensor(emissions.probs)
    else:
        if alphabet is None:
            raise ValueError("alphabet required when emissions is a raw tensor")
        probs = nn.as_tensor(emissions)
    t_len = probs.shape[0]
    if t_len < 1:
        raise ValueError("need at least one frame")
    if t_len < min_frames(target):
        raise CTCAlignmentError(
            f"target {target!r} needs >= {min_frames(target)} frames, got {t_len}")

    ext = _extended_labels(target, alphabet)
    s_len = len(ext)
    logp = nn.log(probs)
    lp_ext = logp[:, np.asarray(ext, dtype=np.intp)]  # (T, S)

    # Skip transitions allowed into state s from s-2.
    blank = len(alphabet)
    skip_ok = np.full(s_len, _LOG_ZERO)
    for s in range(2, s_len):
        if ext[s] != blank and ext[s] != ext[s - 2]:
            skip_ok[s] = 0.0

    init_mask = np.full(s_len, _LOG_ZERO)
    init_mask[0] = 0.0
    if s_len > 1:
        init_mask[1] = 0.0
    alpha = nn.add(lp_ext[0], Tensor(init_mask))

    shift_pad = Tensor(np.full(1, _LOG_ZERO))
    skip_mask = Tensor(skip_ok)
    for t in range(1, t_len):
        stay = alpha
        step1 = nn.concat([shift_pad, alpha[:-1]])
        acc = nn.logaddexp(stay, step1)
        if s_len > 2:
            step2 = nn.add(nn.concat([shift_pad, shift_pad, alpha[:-2]]), skip_mask)
            acc = nn.logaddexp(acc, step2)
        alpha = nn.add(acc, lp_ext[t])

    total = alpha[s_len - 1]
    if s_len > 1:
        total = nn.logaddexp(total, alpha[s_len - 2])
    if float(total.data) < _LOG_ZERO / 2:
        raise CTCAlignmentError(f"no alignment of {target!r} fits {t_len} frames")
    return nn.mul(total, -1.0)


def greedy_aggregate(emissions: EmissionSequence) -> ContractedSequence:
    """Average maximal same-argmax runs; blank runs are dropped but split runs."""
    probs = emissions.probs
    blank = emissions.blank_index
    argmax = probs.argmax(axis=1) if len(probs) else np.zeros(0, dtype=int)
    vectors: list[np.ndarray] = []
    chars: list[int] = []
    spans: list[tuple[int, int]] = []
    start = 0
    for i in range(1, len(argmax) + 1):
        if i == len(argmax) or argmax[i] != argmax[start]:
            if argmax[start] != blank:
                vectors.append(probs[start:i].mean(axis=0))
                chars.append(int(argmax[start]))
                spans.append((start, i - 1))
            start = i
    stacked = np.vstack(vectors) if vectors else np.zeros((0, probs.shape[1] if probs.ndim == 2 else 0))
    return ContractedSequence(vectors=stacked, char_indices=chars, spans=spans,
                              alphabet=emissions.alphabet)


@dataclass
class PathDecoderConfig:
    alphabet: tuple[str, ...]
    model_dim: int = 32
    heads: int = 4
    ff_dim: int = 64
    encoder_blocks: int = 1
    use_recurrent_stack: bool = True
    recurrent_hidden: int = 32
    decoder_hidden: int = 32
    dropout_rate: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        self.alphabet = tuple(self.alphabet)

    @property
    def feature_dim(self) -> int:
        return 4 + len(self.alphabet)

    @property
    def emission_dim(self) -> int:
        return len(self.alphabet) + 1


class PathDecoderModel:
    def __init__(self, config: PathDecoderConfig):
        self.config = config
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, 11]))
        self.dropout_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 13]))
        c = config
        self.input_proj = nn.Dense(rng, c.feature_dim, c.model_dim, name="input_proj")
        self.blocks = [
            nn.EncoderBlock(rng, c.model_dim, c.heads, c.ff_dim, c.dropout_rate,
                            name=f"block{i}")
            for i in range(c.encoder_blocks)
        ]
        enc_out = c.model_dim
        self.stack: list[nn.Bidirectional] = []
        if c.use_recurrent_stack:
            h = c.recurrent_hidden
            self.stack = [
                nn.Bidirectional(nn.LSTMCell(rng, enc_out, h, name="stack0.f"),
                                 nn.LSTMCell(rng, enc_out, h, name="stack0.b")),
                nn.Bidirectional(nn.LSTMCell(rng, 2 * h, h, name="stack1.f"),
                                 nn.LSTMCell(rng, 2 * h, h, name="stack1.b")),
            ]
            enc_out = 2 * h
        self.emission_proj = nn.Dense(rng, enc_out, c.emission_dim, name="emission_proj")
        dh = c.decoder_hidden
        self.decoder_layers = [
            nn.Bidirectional(nn.LSTMCell(rng, c.emission_dim, dh, name="dec0.f"),
                             nn.LSTMCell(rng, c.emission_dim, dh, name="dec0.b")),
            nn.Bidirectional(nn.LSTMCell(rng, 2 * dh, dh, name="dec1.f"),
                             nn.LSTMCell(rng, 2 * dh, dh, name="dec1.b")),
        ]
        self.decoder_proj = nn.Dense(rng, 2 * dh, len(c.alphabet), name="decoder_proj")

    # -- parameter bookkeeping ---------------------------------------------

    def encoder_parameters(self) -> dict[str, Tensor]:
        params = dict(self.input_proj.parameters())
        for b in self.blocks:
            params.update(b.parameters())
        for layer in self.stack:
            params.update(layer.parameters())
        params.update(self.emission_proj.parameters())
        return params

    def decoder_parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for layer in self.decoder_layers:
            params.update(layer.parameters())
        params.update(self.decoder_proj.parameters())
        return params

    def parameters(self) -> dict[str, Tensor]:
        params = self.encoder_parameters()
        params.update(self.decoder_parameters())
        return params

    # -- forward paths -------------------------------------------------------

    def encode(self, features, train: bool = False) -> Tensor:
        x = nn.as_tensor(features.rows if isinstance(features, FeatureSequence) else features)
        if x.shape[1] != self.config.feature_dim:
            raise ValueError(
                f"feature width {x.shape[1]} does not match model input {self.config.feature_dim}")
        x = self.input_proj(x)
        x = nn.add(x, Tensor(nn.positional_encoding(x.shape[0], self.config.model_dim)))
        for block in self.blocks:
            x = block(x, train=train, rng=self.dropout_rng)
        for layer in self.stack:
            x = layer(x)
        return nn.softmax(self.emission_proj(x), axis=-1)

    def decode_head(self, vectors: np.ndarray) -> Tensor:
        x = nn.as_tensor(vectors)
        for layer in self.decoder_layers:
            x = layer(x)
        return self.decoder_proj(x)

    # -- checkpointing -------------------------------------------------------

    def hyperparameters(self) -> dict:
        c = self.config
        return {
            "alphabet": list(c.alphabet), "model_dim": c.model_dim, "heads": c.heads,
            "ff_dim": c.ff_dim, "encoder_blocks": c.encoder_blocks,
            "use_recurrent_stack": c.use_recurrent_stack,
            "recurrent_hidden": c.recurrent_hidden, "decoder_hidden": c.decoder_hidden,
            "dropout_rate": c.dropout_rate, "seed": c.seed,
        }

    def save(self, path) -> None:
        nn.save_checkpoint(path, "path_decoder", self.hyperparameters(), self.parameters())

    @classmethod
    def load(cls, path) -> "PathDecoderModel":
        _, hyper, arrays = nn.load_checkpoint(path, expect_kind="path_decoder")
        hyper = dict(hyper)
        hyper["alphabet"] = tuple(hyper["alphabet"])
        model = cls(PathDecoderConfig(**hyper))
        nn.restore_parameters(model.parameters(), arrays)
        return model


def encode_path(model: PathDecoderModel, features: FeatureSequence) -> EmissionSequence:
    with nn.no_grad():
        probs = model.encode(features)
    return EmissionSequence(probs=probs.data, alphabet=model.config.alphabet)


def decode_characters(model: PathDecoderModel, contracted: ContractedSequence) -> str:
    if len(contracted) == 0:
        return ""
    with nn.no_grad():
        logits = model.decode_head(contracted.vectors)
    picks = logits.data.argmax(axis=1)  # argmax ties resolve to the lowest index
    return "".join(model.config.alphabet[i] for i in picks)


def decode_word(model: PathDecoderModel, features: FeatureSequence,
                use_decoder_head: bool = True) -> str:
    if len(features) == 0:
        return ""
    contracted = greedy_aggregate(encode_path(model, features))
    if not use_decoder_head:
        return contracted.chars
    return decode_characters(model, contracted)


@dataclass
class PathTrainingConfig:
    lr: float = 0.01
    lr_decay: float = 1.0       # per-epoch multiplier once decay starts
    lr_decay_start: int = 0     # epochs trained at the full rate first
    ctc_epochs: int = 20
    decoder_epochs: int = 10
    seed: int = 0
    zero_derivative_features: bool = False  # ablation switch


@dataclass
class PathTrainingReport:
    ctc_epoch_losses: list[float] = field(default_factory=list)
    decoder_epoch_losses: list[float] = field(default_factory=list)
    ctc_skipped: int = 0
    stage2_used: int = 0
    stage2_skipped: int = 0

    def to_text(self) -> str:
        lines = ["stage\tepoch\tloss"]
        for i, loss in enumerate(self.ctc_epoch_losses):
            lines.append(f"ctc\t{i}\t{loss!r}")
        for i, loss in enumerate(self.decoder_epoch_losses):
            lines.append(f"decoder\t{i}\t{loss!r}")
        lines.append(f"ctc_skipped\t{self.ctc_skipped}")
        lines.append(f"stage2_used\t{self.stage2_used}")
        lines.append(f"stage2_skipped\t{self.stage2_skipped}")
        return "\n".join(lines) + "\n"


def _prepare_rows(features: FeatureSequence, zero_derivatives: bool) -> np.ndarray:
    rows = features.rows
    if zero_derivatives:
        rows = rows.copy()
        rows[:, 2:4] = 0.0
    return rows


def train_path_decoder(dataset, model_config: PathDecoderConfig,
                       training: PathTrainingConfig | None = None
                       ) -> tuple[PathDecoderModel, PathTrainingReport]:
    """Two-stage training.

    Stage 1 fits the encoder and emission projection with the CTC loss.
    Stage 2 freezes emissions and fits the character decoder head with
    cross-entropy on samples whose contracted length matches the target word;
    mismatches are skipped and counted in the report.
    """
    dataset = list(dataset)
    if not dataset:
        raise ValueError("training dataset is empty")
    training = training or PathTrainingConfig()
    model = PathDecoderModel(model_config)
    report = PathTrainingReport()
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([training.seed, 17]))

    opt = nn.Adam(model.encoder_parameters(), lr=training.lr)
    for epoch in range(training.ctc_epochs):
        opt.lr = training.lr * training.lr_decay**max(0, epoch - training.lr_decay_start)
        order = shuffle_rng.permutation(len(dataset))
        total, used = 0.0, 0
        for idx in order:
            features, word = dataset[idx]
            rows = _prepare_rows(features, training.zero_derivative_features)
            if rows.shape[0] < min_frames(word):
                report.ctc_skipped += 1
                continue
            probs = model.encode(rows, train=True)
            loss = ctc_log_loss(probs, word, alphabet=model_config.alphabet)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.data)
            used += 1
        report.ctc_epoch_losses.append(total / max(used, 1))

    contracted_set = []
    for features, word in dataset:
        rows = _prepare_rows(features, training.zero_derivative_features)
        with nn.no_grad():
            probs = model.encode(rows)
        contracted = greedy_aggregate(
            EmissionSequence(probs=probs.data, alphabet=model_config.alphabet))
        if len(contracted) == len(word) and len(word) > 0:
            targets = [model_config.alphabet.index(c) for c in word]
            contracted_set.append((contracted.vectors, targets))
        else:
            report.stage2_skipped += 1
    report.stage2_used = len(contracted_set)
    if training.decoder_epochs > 0 and not contracted_set:
        raise ValueError("stage 2 has no usable samples: every contracted length mismatched")

    opt2 = nn.Adam(model.decoder_parameters(), lr=training.lr)
    for _ in range(training.decoder_epochs):
        order = shuffle_rng.permutation(len(contracted_set))
        total = 0.0
        for idx in order:
            vectors, targets = contracted_set[idx]
            logits = model.decode_head(vectors)
            loss = nn.cross_entropy(logits, targets)
            opt2.zero_grad()
            loss.backward()
            opt2.step()
            total += float(loss.data)
        report.decoder_epoch_losses.append(total / len(contracted_set))
    return model, report

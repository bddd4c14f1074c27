"""Transliteration: GRU encoder-decoder with additive attention and beam search.

Maps Latin character sequences to Indic character sequences. Targets are
tokenized at Unicode codepoint level, so vowel signs are standalone symbols.
Decoding finishes on an explicit end marker or at max_len.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nncore as nn
from .nncore import Tensor


@dataclass
class TranslitConfig:
    source_alphabet: tuple[str, ...]
    target_alphabet: tuple[str, ...]
    embed_dim: int = 32
    hidden: int = 64
    attention_dim: int = 48
    use_attention: bool = True
    dropout_rate: float = 0.1   # decoder-input dropout during training
    seed: int = 0

    def __post_init__(self) -> None:
        self.source_alphabet = tuple(self.source_alphabet)
        self.target_alphabet = tuple(self.target_alphabet)


@dataclass
class BeamHypothesis:
    prefix: tuple[int, ...]
    log_prob: float
    state: Tensor
    finished: bool


def default_max_len(source: str) -> int:
    return 3 * len(source) + 5


def alphabets_from_pairs(pairs) -> tuple[tuple[str, ...], tuple[str, ...]]:
    src = sorted({c for s, _ in pairs for c in s})
    tgt = sorted({c for _, t in pairs for c in t})
    return tuple(src), tuple(tgt)


class TranslitModel:
    def __init__(self, config: TranslitConfig):
        self.config = config
        c = config
        rng = np.random.default_rng(np.random.SeedSequence([c.seed, 23]))
        self.dropout_rng = np.random.default_rng(np.random.SeedSequence([c.seed, 41]))
        n_tgt = len(c.target_alphabet)
        self.src_index = {ch: i for i, ch in enumerate(c.source_alphabet)}
        self.tgt_index = {ch: i for i, ch in enumerate(c.target_alphabet)}
        self.end_index = n_tgt          # output class for end-of-word
        self.start_index = n_tgt + 1    # decoder input token only
        self.src_embed = nn.Embedding(rng, len(c.source_alphabet), c.embed_dim, name="src_embed")
        self.tgt_embed = nn.Embedding(rng, n_tgt + 2, c.embed_dim, name="tgt_embed")
        self.encoder = nn.GRUCell(rng, c.embed_dim, c.hidden, name="encoder")
        self.decoder = nn.GRUCell(rng, c.embed_dim + c.hidden, c.hidden, name="decoder")
        self.attn_enc = nn.Dense(rng, c.hidden, c.attention_dim, name="attn_enc")
        self.attn_dec = nn.Dense(rng, c.hidden, c.attention_dim, name="attn_dec")
        self.attn_v = nn.init_uniform(rng, c.attention_dim, (c.attention_dim, 1))
        # readout sees both the new state and the attended context (Bahdanau)
        self.out_proj = nn.Dense(rng, 2 * c.hidden, n_tgt + 1, name="out_proj")

    def parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for part in (self.src_embed, self.tgt_embed, self.encoder, self.decoder,
                     self.attn_enc, self.attn_dec, self.out_proj):
            params.update(part.parameters())
        params["attn_v"] = self.attn_v
        return params

    def hyperparameters(self) -> dict:
        c = self.config
        return {
            "source_alphabet": list(c.source_alphabet),
            "target_alphabet": list(c.target_alphabet),
            "embed_dim": c.embed_dim, "hidden": c.hidden,
            "attention_dim": c.attention_dim, "use_attention": c.use_attention,
            "dropout_rate": c.dropout_rate, "seed": c.seed,
        }

    def save(self, path) -> None:
        nn.save_checkpoint(path, "translit", self.hyperparameters(), self.parameters())

    @classmethod
    def load(cls, path) -> "TranslitModel":
        _, hyper, arrays = nn.load_checkpoint(path, expect_kind="translit")
        hyper = dict(hyper)
        hyper["source_alphabet"] = tuple(hyper["source_alphabet"])
        hyper["target_alphabet"] = tuple(hyper["target_alphabet"])
        model = cls(TranslitConfig(**hyper))
        nn.restore_parameters(model.parameters(), arrays)
        return model


def encode_source(model: TranslitModel, source: str) -> tuple[Tensor, Tensor]:
    """Per-character encodings and the final encoder state."""
    if not source:
        raise ValueError("source string is empty")
    try:
        idx = [model.src_index[c] for c in source]
    except KeyError as exc:
        raise KeyError(f"source character {exc.args[0]!r} not in alphabet") from None
    embeds = model.src_embed(idx)
    outs = nn.run_recurrent(model.encoder, embeds)
    encodings = nn.concat(outs, axis=0)
    return encodings, outs[-1]


def decode_step(model: TranslitModel, state: Tensor, prev_index: int,
                encodings: Tensor, enc_proj: Tensor | None = None,
                train: bool = False):
    """One decoder step: returns (distribution, new state, attention weights).

    With attention disabled (ablation), the context is the final encoding at
    every step and the returned weights put all mass there. During training,
    dropout on the decoder input discourages memorizing target sequences.
    """
    t_len = encodings.shape[0]
    if model.config.use_attention:
        if enc_proj is None:
            enc_proj = model.attn_enc(encodings)
        scores = nn.matmul(nn.tanh(nn.add(enc_proj, model.attn_dec(state))), model.attn_v)
        weights = nn.softmax(scores.T, axis=-1)  # (1, T)
    else:
        hard = np.zeros((1, t_len))
        hard[0, -1] = 1.0
        weights = Tensor(hard)
    context = nn.matmul(weights, encodings)
    x = nn.concat([model.tgt_embed([prev_index]), context], axis=1)
    x = nn.dropout(x, model.config.dropout_rate, train, model.dropout_rng)
    _, new_state = model.decoder.step(x, state)
    readout = nn.concat([new_state, context], axis=1)
    dist = nn.softmax(model.out_proj(readout), axis=-1)
    return dist, new_state, weights


def greedy_decode(model: TranslitModel, source: str, max_len: int | None = None,
                  collect_attention: bool = False):
    """Argmax decoding; ties resolve to the lowest class index."""
    max_len = max_len or default_max_len(source)
    with nn.no_grad():
        encodings, state = encode_source(model, source)
        enc_proj = model.attn_enc(encodings) if model.config.use_attention else None
        prev = model.start_index
        out: list[int] = []
        attn_rows = []
        log_prob = 0.0
        for _ in range(max_len):
            dist, state, weights = decode_step(model, state, prev, encodings, enc_proj)
            pick = int(dist.data.argmax())
            log_prob += float(np.log(dist.data[0, pick]))
            if collect_attention:
                attn_rows.append(weights.data.reshape(-1).copy())
            if pick == model.end_index:
                break
            out.append(pick)
            prev = pick
    word = "".join(model.config.target_alphabet[i] for i in out)
    if collect_attention:
        return word, log_prob, np.array(attn_rows)
    return word, log_prob


def attention_trace(model: TranslitModel, source: str) -> np.ndarray:
    """Per-output-step attention weights over source positions."""
    _, _, trace = greedy_decode(model, source, collect_attention=True)
    return trace


def beam_search(model: TranslitModel, source: str, k: int = 3,
                max_len: int | None = None) -> list[tuple[str, float]]:
    """Top-k sequences by accumulated log-probability.

    Hypotheses finish on the end marker (its probability included) or at
    max_len (no end factor). Ties break lexicographically on the prefix, so
    results are deterministic and k=1 reproduces greedy decoding.
    """
    if k < 1:
        raise ValueError("beam size must be >= 1")
    max_len = max_len or default_max_len(source)
    with nn.no_grad():
        encodings, state = encode_source(model, source)
        enc_proj = model.attn_enc(encodings) if model.config.use_attention else None
        beam = [BeamHypothesis(prefix=(), log_prob=0.0, state=state, finished=False)]
        for _ in range(max_len):
            if all(h.finished for h in beam):
                break
            pool: list[BeamHypothesis] = [h for h in beam if h.finished]
            for h in beam:
                if h.finished:
                    continue
                dist, new_state, _ = decode_step(model, h.state,
                                                 h.prefix[-1] if h.prefix else model.start_index,
                                                 encodings, enc_proj)
                logp = np.log(dist.data.reshape(-1))
                for j in range(logp.shape[0]):
                    if j == model.end_index:
                        pool.append(BeamHypothesis(h.prefix, h.log_prob + float(logp[j]),
                                                   new_state, True))
                    else:
                        pool.append(BeamHypothesis(h.prefix + (j,), h.log_prob + float(logp[j]),
                                                   new_state, False))
            pool.sort(key=lambda h: (-h.log_prob, h.prefix))
            beam = pool[:k]
        results = [(h.prefix, h.log_prob) for h in beam]
    results.sort(key=lambda r: (-r[1], r[0]))
    return [("".join(model.config.target_alphabet[i] for i in prefix), lp)
            for prefix, lp in results]


@dataclass
class TranslitTrainingConfig:
    lr: float = 0.005
    lr_decay: float = 1.0      # per-epoch multiplier once decay starts
    lr_decay_start: int = 0
    epochs: int = 10
    seed: int = 0


@dataclass
class TranslitTrainingReport:
    epoch_losses: list[float] = field(default_factory=list)

    def to_text(self) -> str:
        lines = ["epoch\tloss"]
        lines += [f"{i}\t{loss!r}" for i, loss in enumerate(self.epoch_losses)]
        return "\n".join(lines) + "\n"


def sequence_loss(model: TranslitModel, source: str, target: str) -> Tensor:
    """Teacher-forced cross-entropy including the end-marker step."""
    encodings, state = encode_source(model, source)
    enc_proj = model.attn_enc(encodings) if model.config.use_attention else None
    try:
        target_idx = [model.tgt_index[c] for c in target]
    except KeyError as exc:
        raise KeyError(f"target character {exc.args[0]!r} not in alphabet") from None
    prev = model.start_index
    rows = []
    for idx in target_idx + [model.end_index]:
        dist, state, _ = decode_step(model, state, prev, encodings, enc_proj,
                                     train=True)
        rows.append(nn.log(dist[:, idx]))
        prev = idx
    total = rows[0]
    for r in rows[1:]:
        total = nn.add(total, r)
    return nn.mul(nn.tsum(total), -1.0 / len(rows))


def train_translit(pairs, config: TranslitConfig,
                   training: TranslitTrainingConfig | None = None
                   ) -> tuple[TranslitModel, TranslitTrainingReport]:
    """Teacher-forced training on (source, target) pairs.

    Pairs may be gold lexicon entries or path-decoder outputs; the caller
    chooses which (the pipeline trains on decoded sequences).
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("training pairs are empty")
    training = training or TranslitTrainingConfig()
    model = TranslitModel(config)
    report = TranslitTrainingReport()
    shuffle_rng = np.random.default_rng(np.random.SeedSequence([training.seed, 29]))
    opt = nn.Adam(model.parameters(), lr=training.lr)
    for epoch in range(training.epochs):
        opt.lr = training.lr * training.lr_decay**max(0, epoch - training.lr_decay_start)
        order = shuffle_rng.permutation(len(pairs))
        total = 0.0
        for i in order:
            source, target = pairs[i]
            loss = sequence_loss(model, source, target)
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.data)
        report.epoch_losses.append(total / len(pairs))
    return model, report


def read_lexicon(path) -> list[tuple[str, str]]:
    """Tab-separated ``latin_source<TAB>indic_target`` pairs, UTF-8."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(f"{path}:{line_no}: expected 'source<TAB>target'")
            pairs.append((parts[0], parts[1]))
    return pairs

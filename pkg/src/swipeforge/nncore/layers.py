"""Neural layers built on the Tensor autodiff core.

Sequence inputs are (T, features) tensors; recurrent cells step over rows.
Every layer exposes ``parameters()`` as an ordered name->Tensor mapping used
by the optimizer and the checkpoint writer.
"""

from __future__ import annotations

import math

import numpy as np

from . import tensor as T
from .tensor import Tensor


def init_uniform(rng: np.random.Generator, fan_in: int, shape) -> Tensor:
    """Uniform fan-in initializer: U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    bound = 1.0 / math.sqrt(max(fan_in, 1))
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def zeros_param(shape) -> Tensor:
    return Tensor(np.zeros(shape), requires_grad=True)


class Dense:
    def __init__(self, rng: np.random.Generator, in_dim: int, out_dim: int, name: str = "dense"):
        self.name = name
        self.w = init_uniform(rng, in_dim, (in_dim, out_dim))
        self.b = zeros_param((out_dim,))

    def __call__(self, x: Tensor) -> Tensor:
        return T.add(T.matmul(x, self.w), self.b)

    def parameters(self) -> dict[str, Tensor]:
        return {f"{self.name}.w": self.w, f"{self.name}.b": self.b}


class Embedding:
    def __init__(self, rng: np.random.Generator, vocab: int, dim: int, name: str = "embed"):
        self.name = name
        self.table = init_uniform(rng, dim, (vocab, dim))

    def __call__(self, indices) -> Tensor:
        return self.table[np.asarray(indices, dtype=np.intp)]

    def parameters(self) -> dict[str, Tensor]:
        return {f"{self.name}.table": self.table}


class LSTMCell:
    """Gates ordered [input, forget, candidate, output].

    Forget-gate biases start at 1 so early training does not wash out the
    cell state.
    """

    def __init__(self, rng: np.random.Generator, in_dim: int, hidden: int, name: str = "lstm"):
        self.name = name
        self.in_dim = in_dim
        self.hidden = hidden
        self.w_ih = init_uniform(rng, in_dim, (in_dim, 4 * hidden))
        self.w_hh = init_uniform(rng, hidden, (hidden, 4 * hidden))
        b = np.zeros(4 * hidden)
        b[hidden:2 * hidden] = 1.0
        self.b = Tensor(b, requires_grad=True)

    def initial_state(self) -> tuple[Tensor, Tensor]:
        return Tensor(np.zeros((1, self.hidden))), Tensor(np.zeros((1, self.hidden)))

    def input_projection(self, xs: Tensor) -> Tensor:
        return T.add(T.matmul(xs, self.w_ih), self.b)

    def step_projected(self, ip_t: Tensor, state):
        h, c = state
        z = T.add(ip_t, T.matmul(h, self.w_hh))
        n = self.hidden
        i = T.sigmoid(z[:, 0 * n:1 * n])
        f = T.sigmoid(z[:, 1 * n:2 * n])
        g = T.tanh(z[:, 2 * n:3 * n])
        o = T.sigmoid(z[:, 3 * n:4 * n])
        c_new = T.add(T.mul(f, c), T.mul(i, g))
        h_new = T.mul(o, T.tanh(c_new))
        return h_new, (h_new, c_new)

    def step(self, x_t: Tensor, state):
        return self.step_projected(self.input_projection(x_t), state)

    def parameters(self) -> dict[str, Tensor]:
        return {f"{self.name}.w_ih": self.w_ih, f"{self.name}.w_hh": self.w_hh,
                f"{self.name}.b": self.b}


class GRUCell:
    """Gates ordered [reset, update, candidate]; h' = (1-z)*n + z*h."""

    def __init__(self, rng: np.random.Generator, in_dim: int, hidden: int, name: str = "gru"):
        self.name = name
        self.in_dim = in_dim
        self.hidden = hidden
        self.w_ih = init_uniform(rng, in_dim, (in_dim, 3 * hidden))
        self.w_hh = init_uniform(rng, hidden, (hidden, 3 * hidden))
        self.b_ih = zeros_param((3 * hidden,))
        self.b_hh = zeros_param((3 * hidden,))

    def initial_state(self) -> Tensor:
        return Tensor(np.zeros((1, self.hidden)))

    def input_projection(self, xs: Tensor) -> Tensor:
        return T.add(T.matmul(xs, self.w_ih), self.b_ih)

    def step_projected(self, ip_t: Tensor, h: Tensor):
        n = self.hidden
        hp = T.add(T.matmul(h, self.w_hh), self.b_hh)
        r = T.sigmoid(T.add(ip_t[:, 0 * n:1 * n], hp[:, 0 * n:1 * n]))
        z = T.sigmoid(T.add(ip_t[:, 1 * n:2 * n], hp[:, 1 * n:2 * n]))
        cand = T.tanh(T.add(ip_t[:, 2 * n:3 * n], T.mul(r, hp[:, 2 * n:3 * n])))
        h_new = T.add(T.mul(T.add(T.mul(z, -1.0), 1.0), cand), T.mul(z, h))
        return h_new, h_new

    def step(self, x_t: Tensor, h: Tensor):
        return self.step_projected(self.input_projection(x_t), h)

    def parameters(self) -> dict[str, Tensor]:
        return {f"{self.name}.w_ih": self.w_ih, f"{self.name}.w_hh": self.w_hh,
                f"{self.name}.b_ih": self.b_ih, f"{self.name}.b_hh": self.b_hh}


def run_recurrent(cell, xs: Tensor, reverse: bool = False) -> list[Tensor]:
    """Run a cell over the rows of xs; returns per-step (1, hidden) outputs.

    The input projection for all timesteps is batched into one matmul.
    """
    t_len = xs.shape[0]
    ip = cell.input_projection(xs)
    state = cell.initial_state()
    steps = range(t_len - 1, -1, -1) if reverse else range(t_len)
    outs: list[Tensor | None] = [None] * t_len
    for t in steps:
        out, state = cell.step_projected(ip[t:t + 1, :], state)
        outs[t] = out
    return outs  # type: ignore[return-value]


class Bidirectional:
    """Runs a forward and a backward cell and concatenates per-step outputs."""

    def __init__(self, fwd_cell, bwd_cell, name: str = "bi"):
        self.name = name
        self.fwd = fwd_cell
        self.bwd = bwd_cell

    def __call__(self, xs: Tensor) -> Tensor:
        f = run_recurrent(self.fwd, xs)
        b = run_recurrent(self.bwd, xs, reverse=True)
        rows = [T.concat([f[t], b[t]], axis=1) for t in range(len(f))]
        return T.concat(rows, axis=0)

    def parameters(self) -> dict[str, Tensor]:
        out = {}
        out.update(self.fwd.parameters())
        out.update(self.bwd.parameters())
        return out


class EncoderBlock:
    """Multi-head self-attention plus position-wise feed-forward, residual
    connections and layer norm after each sub-layer.

    Contains no positional information of its own: permuting input rows
    permutes the output rows identically.
    """

    def __init__(self, rng: np.random.Generator, model_dim: int, heads: int,
                 ff_dim: int, dropout_rate: float = 0.05, name: str = "enc"):
        if model_dim % heads != 0:
            raise ValueError(f"model_dim {model_dim} not divisible by heads {heads}")
        self.name = name
        self.model_dim = model_dim
        self.heads = heads
        self.head_dim = model_dim // heads
        self.dropout_rate = dropout_rate
        self.wq = init_uniform(rng, model_dim, (model_dim, model_dim))
        self.wk = init_uniform(rng, model_dim, (model_dim, model_dim))
        self.wv = init_uniform(rng, model_dim, (model_dim, model_dim))
        self.wo = init_uniform(rng, model_dim, (model_dim, model_dim))
        self.ff1 = Dense(rng, model_dim, ff_dim, name=f"{name}.ff1")
        self.ff2 = Dense(rng, ff_dim, model_dim, name=f"{name}.ff2")
        self.ln1_g = Tensor(np.ones(model_dim), requires_grad=True)
        self.ln1_b = zeros_param((model_dim,))
        self.ln2_g = Tensor(np.ones(model_dim), requires_grad=True)
        self.ln2_b = zeros_param((model_dim,))

    def __call__(self, seq: Tensor, train: bool = False,
                 rng: np.random.Generator | None = None,
                 return_attention: bool = False):
        if seq.shape[1] != self.model_dim:
            raise ValueError(f"expected feature dim {self.model_dim}, got {seq.shape[1]}")
        q = T.matmul(seq, self.wq)
        k = T.matmul(seq, self.wk)
        v = T.matmul(seq, self.wv)
        scale = 1.0 / math.sqrt(self.head_dim)
        contexts = []
        attention = []
        for h in range(self.heads):
            lo, hi = h * self.head_dim, (h + 1) * self.head_dim
            qh, kh, vh = q[:, lo:hi], k[:, lo:hi], v[:, lo:hi]
            scores = T.mul(T.matmul(qh, kh.T), scale)
            weights = T.softmax(scores, axis=-1)
            if return_attention:
                attention.append(weights.data.copy())
            contexts.append(T.matmul(weights, vh))
        attn_out = T.matmul(T.concat(contexts, axis=1), self.wo)
        attn_out = T.dropout(attn_out, self.dropout_rate, train, rng)
        x = T.layer_norm(T.add(seq, attn_out), self.ln1_g, self.ln1_b)
        ff = self.ff2(T.relu(self.ff1(x)))
        ff = T.dropout(ff, self.dropout_rate, train, rng)
        out = T.layer_norm(T.add(x, ff), self.ln2_g, self.ln2_b)
        if return_attention:
            return out, attention
        return out

    def parameters(self) -> dict[str, Tensor]:
        out = {
            f"{self.name}.wq": self.wq, f"{self.name}.wk": self.wk,
            f"{self.name}.wv": self.wv, f"{self.name}.wo": self.wo,
            f"{self.name}.ln1_g": self.ln1_g, f"{self.name}.ln1_b": self.ln1_b,
            f"{self.name}.ln2_g": self.ln2_g, f"{self.name}.ln2_b": self.ln2_b,
        }
        out.update(self.ff1.parameters())
        out.update(self.ff2.parameters())
        return out


def positional_encoding(length: int, dim: int) -> np.ndarray:
    """Sinusoidal encodings, one row per position."""
    pos = np.arange(length, dtype=np.float64)[:, None]
    i = np.arange(dim, dtype=np.float64)[None, :]
    angles = pos / np.power(10000.0, (2.0 * (i // 2)) / dim)
    enc = np.zeros((length, dim))
    enc[:, 0::2] = np.sin(angles[:, 0::2])
    enc[:, 1::2] = np.cos(angles[:, 1::2])
    return enc


def cross_entropy(logits: Tensor, targets) -> Tensor:
    """Mean negative log-likelihood of integer targets under row-wise softmax."""
    targets = np.asarray(targets, dtype=np.intp)
    logp = T.log_softmax(logits, axis=-1)
    picked = logp[np.arange(len(targets)), targets]
    return T.mul(T.tsum(picked), -1.0 / len(targets))

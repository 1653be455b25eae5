"""Decoder-only transformer language model.

Pre-layer-norm residual blocks (norm, attention, add; norm, MLP, add), GELU
MLPs, learned position embeddings, and a token-embedding-tied LM head by
default.  The two built-in presets instantiate the 0.1B and 0.3B
configurations; toy configs down to a handful of units are equally valid and
are what the test suite trains.

Ops are module-level functions over an explicit :class:`Parameters`
container, so the training loop and the checkpoint format can treat the
parameter set as plain named tensors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Iterator

import numpy as np

from . import tensor as T
from .errors import ConfigError, InputError
from .tensor import Tensor

EOS_ID = 2

_NEG_INF = -1e30  # large-negative mask addend; exp() underflows to exactly 0.0


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters. ``d_ff`` defaults to 4*d_model."""

    vocab_size: int
    ctx_len: int
    n_layers: int
    n_heads: int
    d_model: int
    d_ff: int = 0
    attn_dropout: float = 0.0
    embd_dropout: float = 0.0
    resid_dropout: float = 0.0
    tie_lm_head: bool = True

    def __post_init__(self):
        if self.d_ff == 0:
            object.__setattr__(self, "d_ff", 4 * self.d_model)
        for name in ("vocab_size", "ctx_len", "n_layers", "n_heads", "d_model", "d_ff"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < (0 if name == "n_layers" else 1):
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})"
            )
        for name in ("attn_dropout", "embd_dropout", "resid_dropout"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ConfigError(f"{name} must be in [0, 1), got {p}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in obj.items() if k in known})


_PRESETS = {
    "0.1B": dict(vocab_size=64000, ctx_len=768, n_layers=12, n_heads=12, d_model=768),
    "0.3B": dict(vocab_size=64000, ctx_len=1024, n_layers=24, n_heads=16, d_model=1024),
}


def preset(name: str) -> ModelConfig:
    """Return a named built-in configuration ("0.1B" or "0.3B")."""
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}")
    return ModelConfig(attn_dropout=0.1, embd_dropout=0.1, resid_dropout=0.1, **_PRESETS[name])


def param_count(config: ModelConfig) -> int:
    """Closed-form scalar count of an LM instantiated at ``config``.

    Embeddings V*d + ctx*d, per block 4d^2 + 2*d*d_ff + 9d + d_ff, final
    norm 2d, plus V*d again only when the head is untied.
    """
    d, dff = config.d_model, config.d_ff
    per_layer = 4 * d * d + 2 * d * dff + 9 * d + dff
    n = config.vocab_size * d + config.ctx_len * d + config.n_layers * per_layer + 2 * d
    if not config.tie_lm_head:
        n += config.vocab_size * d
    return n


class Parameters:
    """Ordered name -> Tensor mapping; every tensor tracks its gradient."""

    def __init__(self):
        self._tensors: dict[str, Tensor] = {}

    def add(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._tensors:
            raise ConfigError(f"duplicate parameter name {name!r}")
        t = Tensor(data, requires_grad=True)
        self._tensors[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self._tensors

    def __len__(self) -> int:
        return len(self._tensors)

    def names(self) -> list[str]:
        return list(self._tensors)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        return iter(self._tensors.items())

    def scalar_count(self) -> int:
        return sum(t.size for t in self._tensors.values())

    def zero_grads(self) -> None:
        for t in self._tensors.values():
            t.zero_grad()

    def copy(self) -> "Parameters":
        out = Parameters()
        for name, t in self.items():
            out.add(name, t.data.copy())
        return out


def parameter_shapes(
    config: ModelConfig, n_classes: int | None = None
) -> list[tuple[str, tuple[int, ...], str]]:
    """Canonical (name, shape, kind) list; kind is weight/bias/gain.

    This ordering is the naming scheme checkpoints validate against and the
    order in which ``init`` consumes random draws.
    """
    d, dff, v = config.d_model, config.d_ff, config.vocab_size
    out: list[tuple[str, tuple[int, ...], str]] = [
        ("tok_emb", (v, d), "weight"),
        ("pos_emb", (config.ctx_len, d), "weight"),
    ]
    for i in range(config.n_layers):
        p = f"h.{i}."
        out += [
            (p + "ln_1.g", (d,), "gain"),
            (p + "ln_1.b", (d,), "bias"),
            (p + "attn.qkv.w", (d, 3 * d), "weight"),
            (p + "attn.qkv.b", (3 * d,), "bias"),
            (p + "attn.proj.w", (d, d), "weight"),
            (p + "attn.proj.b", (d,), "bias"),
            (p + "ln_2.g", (d,), "gain"),
            (p + "ln_2.b", (d,), "bias"),
            (p + "mlp.fc.w", (d, dff), "weight"),
            (p + "mlp.fc.b", (dff,), "bias"),
            (p + "mlp.proj.w", (dff, d), "weight"),
            (p + "mlp.proj.b", (d,), "bias"),
        ]
    out += [("ln_f.g", (d,), "gain"), ("ln_f.b", (d,), "bias")]
    if not config.tie_lm_head:
        out.append(("lm_head.w", (d, v), "weight"))
    if n_classes is not None:
        out += [("cls_head.w", (d, n_classes), "weight"), ("cls_head.b", (n_classes,), "bias")]
    return out


def init(config: ModelConfig, seed: int, n_classes: int | None = None) -> Parameters:
    """Initialize Parameters: weights N(0, 0.02), biases 0, norm gains 1.

    All weight draws come from one PCG64 generator in declaration order, so
    a seed pins every value.  ``n_classes`` appends a classification head.
    """
    rng = np.random.default_rng(seed)
    params = Parameters()
    for name, shape, kind in parameter_shapes(config, n_classes):
        if kind == "weight":
            params.add(name, rng.normal(0.0, 0.02, size=shape))
        elif kind == "gain":
            params.add(name, np.ones(shape))
        else:
            params.add(name, np.zeros(shape))
    return params


def add_classifier_head(
    params: Parameters, config: ModelConfig, seed: int, n_classes: int = 2
) -> Parameters:
    """Attach a fresh affine head to pretrained LM parameters, in place."""
    if "cls_head.w" in params:
        raise ConfigError("parameters already carry a classification head")
    if n_classes < 2:
        raise ConfigError(f"n_classes must be >= 2, got {n_classes}")
    rng = np.random.default_rng(seed)
    params.add("cls_head.w", rng.normal(0.0, 0.02, size=(config.d_model, n_classes)))
    params.add("cls_head.b", np.zeros(n_classes))
    return params


def _validate_ids(config: ModelConfig, ids: np.ndarray) -> None:
    t = ids.shape[-1]
    if t < 1:
        raise InputError("forward requires at least one token")
    if t > config.ctx_len:
        raise InputError(f"context overflow: {t} tokens exceed ctx_len {config.ctx_len}")
    if ids.min() < 0 or ids.max() >= config.vocab_size:
        raise InputError(f"token id out of range [0, {config.vocab_size})")


def _causal_mask(t: int) -> Tensor:
    return Tensor(np.triu(np.full((t, t), _NEG_INF), k=1))


def _hidden_states(
    params: Parameters, config: ModelConfig, ids: np.ndarray, mode: str, dropout_seed
) -> Tensor:
    """Embeddings through all blocks and the final norm -> [B, T, d_model]."""
    if mode not in ("train", "eval"):
        raise ConfigError(f"mode must be 'train' or 'eval', got {mode!r}")
    train = mode == "train"
    rng = np.random.default_rng(0 if dropout_seed is None else dropout_seed)
    bsz, t = ids.shape
    d, heads = config.d_model, config.n_heads
    hs = d // heads
    mask = _causal_mask(t)

    x = T.add(T.embedding_lookup(params["tok_emb"], ids), T.slice_axis(params["pos_emb"], 0, 0, t))
    if train:
        x = T.dropout(x, config.embd_dropout, rng)
    for i in range(config.n_layers):
        p = f"h.{i}."
        h = T.layer_norm(x, params[p + "ln_1.g"], params[p + "ln_1.b"])
        qkv = T.add(T.matmul(h, params[p + "attn.qkv.w"]), params[p + "attn.qkv.b"])
        q = T.transpose(T.reshape(T.slice_axis(qkv, -1, 0, d), (bsz, t, heads, hs)), (0, 2, 1, 3))
        k = T.transpose(
            T.reshape(T.slice_axis(qkv, -1, d, 2 * d), (bsz, t, heads, hs)), (0, 2, 1, 3)
        )
        v = T.transpose(
            T.reshape(T.slice_axis(qkv, -1, 2 * d, 3 * d), (bsz, t, heads, hs)), (0, 2, 1, 3)
        )
        att = T.scale(T.matmul(q, T.transpose(k, (0, 1, 3, 2))), 1.0 / math.sqrt(hs))
        att = T.softmax(T.add(att, mask), axis=-1)
        if train:
            att = T.dropout(att, config.attn_dropout, rng)
        y = T.reshape(T.transpose(T.matmul(att, v), (0, 2, 1, 3)), (bsz, t, d))
        y = T.add(T.matmul(y, params[p + "attn.proj.w"]), params[p + "attn.proj.b"])
        if train:
            y = T.dropout(y, config.resid_dropout, rng)
        x = T.add(x, y)

        h = T.layer_norm(x, params[p + "ln_2.g"], params[p + "ln_2.b"])
        m = T.gelu(T.add(T.matmul(h, params[p + "mlp.fc.w"]), params[p + "mlp.fc.b"]))
        m = T.add(T.matmul(m, params[p + "mlp.proj.w"]), params[p + "mlp.proj.b"])
        if train:
            m = T.dropout(m, config.resid_dropout, rng)
        x = T.add(x, m)
    return T.layer_norm(x, params["ln_f.g"], params["ln_f.b"])


def _lm_logits(params: Parameters, config: ModelConfig, hidden: Tensor) -> Tensor:
    head = T.transpose(params["tok_emb"]) if config.tie_lm_head else params["lm_head.w"]
    return T.matmul(hidden, head)


def forward(
    params: Parameters,
    config: ModelConfig,
    token_ids,
    mode: str = "eval",
    dropout_seed: int | None = None,
) -> Tensor:
    """Logits [T, vocab_size] for one sequence of T ids (T <= ctx_len)."""
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.ndim != 1:
        raise InputError(f"forward expects a 1-d id sequence, got shape {ids.shape}")
    _validate_ids(config, ids)
    hidden = _hidden_states(params, config, ids[None, :], mode, dropout_seed)
    logits = _lm_logits(params, config, hidden)
    return T.reshape(logits, (ids.shape[0], config.vocab_size))


def forward_batch(
    params: Parameters,
    config: ModelConfig,
    token_ids,
    mode: str = "eval",
    dropout_seed: int | None = None,
) -> Tensor:
    """Logits [B, T, vocab_size] for a [B, T] id batch."""
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.ndim != 2:
        raise InputError(f"forward_batch expects [B, T] ids, got shape {ids.shape}")
    _validate_ids(config, ids)
    hidden = _hidden_states(params, config, ids, mode, dropout_seed)
    return _lm_logits(params, config, hidden)


def classifier_logits(
    params: Parameters,
    config: ModelConfig,
    token_ids,
    last_positions,
    mode: str = "eval",
    dropout_seed: int | None = None,
) -> Tensor:
    """Head logits [B, n_classes] read at each sequence's last real position."""
    if "cls_head.w" not in params:
        raise ConfigError("parameters carry no classification head (init with n_classes)")
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.ndim != 2:
        raise InputError(f"classifier_logits expects [B, T] ids, got shape {ids.shape}")
    _validate_ids(config, ids)
    hidden = _hidden_states(params, config, ids, mode, dropout_seed)
    pooled = T.take_positions(hidden, np.asarray(last_positions, dtype=np.int64))
    return T.add(T.matmul(pooled, params["cls_head.w"]), params["cls_head.b"])


def _np_softmax(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max())
    return e / e.sum()


def generate(
    params: Parameters,
    config: ModelConfig,
    prompt_ids,
    max_new: int,
    strategy: str = "greedy",
    temperature: float = 1.0,
    top_k: int = 1,
    seed: int = 0,
    eos_id: int = EOS_ID,
) -> list[int]:
    """Extend ``prompt_ids`` by up to ``max_new`` tokens.

    Strategies: "greedy" (deterministic argmax), "temperature" (sample from
    softmax(logits / temperature)), "top_k" (restrict to the top_k highest
    logits, then temperature-sample).  Generation stops after emitting
    ``eos_id``; the window slides once prompt+new exceeds ctx_len.  Ties
    resolve to the lowest token id, so top_k=1 reproduces greedy exactly.
    """
    out = [int(i) for i in prompt_ids]
    if not out:
        raise InputError("generate requires a non-empty prompt")
    if strategy not in ("greedy", "temperature", "top_k"):
        raise ConfigError(f"unknown strategy {strategy!r}")
    if strategy != "greedy" and temperature <= 0:
        raise ConfigError(f"temperature must be > 0, got {temperature}")
    if strategy == "top_k" and (not isinstance(top_k, int) or top_k < 1):
        raise ConfigError(f"top_k must be an integer >= 1, got {top_k!r}")
    rng = np.random.default_rng(seed)
    for _ in range(max_new):
        window = out[-config.ctx_len :]
        logits = forward(params, config, window, mode="eval").data[-1]
        if strategy == "greedy":
            nxt = int(np.argmax(logits))
        else:
            # stable sort keeps the lowest id first among equal logits
            order = np.argsort(-logits, kind="stable")
            if strategy == "top_k":
                order = order[:top_k]
            probs = _np_softmax(logits[order] / temperature)
            nxt = int(order[rng.choice(order.size, p=probs)])
        out.append(nxt)
        if nxt == eos_id:
            break
    return out

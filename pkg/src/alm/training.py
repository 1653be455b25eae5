"""Causal-LM pretraining and fine-tuning.

Three loops share one engine: next-token pretraining over packed corpus
blocks, prompt/completion fine-tuning with the loss masked to completion
tokens, and binary classification fine-tuning through a head on the final
hidden state.  The optimizer is bias-corrected Adam with an optional global
gradient-norm clip; the learning rate warms up linearly then decays linearly.

Everything is deterministic per (seed, data order): batch shuffles come from
one PCG64 generator and per-step dropout seeds are derived from (seed, step),
so two runs with equal configs produce bit-identical parameters.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import model as M
from . import tensor as T
from .errors import ConfigError, InputError, NonFiniteError
from .model import ModelConfig, Parameters
from .tokenizer import EOS_ID, PAD_ID, TokenizerModel, iter_token_stream
from .tensor import Tensor, Trace, backward

LogFn = Callable[[dict], None]


@dataclass(frozen=True)
class TrainConfig:
    """Optimization hyperparameters shared by all training loops.

    ``epochs=None`` cycles the data until ``max_steps``; an integer caps the
    run at that many passes (still never past ``max_steps``).  ``lr_final``
    and ``warmup_steps`` default to lr_initial/10 and 1% of max_steps.
    """

    batch_size: int = 8
    seq_len: int = 64
    max_steps: int = 100
    epochs: int | None = None
    lr_initial: float = 4e-5
    lr_final: float = -1.0
    warmup_steps: int = -1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip_norm: float | None = None
    seed: int = 0
    eval_every: int = 50

    def __post_init__(self):
        if self.lr_final < 0:
            object.__setattr__(self, "lr_final", self.lr_initial / 10.0)
        if self.warmup_steps < 0:
            object.__setattr__(self, "warmup_steps", self.max_steps // 100)
        if self.lr_initial <= 0:
            raise ConfigError(f"lr_initial must be > 0, got {self.lr_initial}")
        if self.warmup_steps > self.max_steps:
            raise ConfigError(
                f"warmup_steps ({self.warmup_steps}) exceeds max_steps ({self.max_steps})"
            )
        if self.batch_size < 1 or self.seq_len < 1 or self.max_steps < 1:
            raise ConfigError("batch_size, seq_len and max_steps must be >= 1")
        if self.epochs is not None and self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1 when set, got {self.epochs}")

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in obj.items() if k in known})


@dataclass
class OptimizerState:
    """Adam moments, keyed like Parameters; ``t`` counts completed steps."""

    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0


def init_optimizer(params: Parameters) -> OptimizerState:
    return OptimizerState(
        m={name: np.zeros_like(t.data) for name, t in params.items()},
        v={name: np.zeros_like(t.data) for name, t in params.items()},
    )


@dataclass
class TrainingReport:
    """Per-step loss curve plus run totals; persists as JSONL records."""

    steps: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    lrs: list[float] = field(default_factory=list)
    tokens: list[int] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def final_loss(self) -> float:
        if not self.losses:
            raise InputError("empty training report has no final loss")
        return self.losses[-1]

    def append(self, step: int, loss: float, lr: float, tokens_seen: int) -> None:
        self.steps.append(step)
        self.losses.append(loss)
        self.lrs.append(lr)
        self.tokens.append(tokens_seen)

    def records(self) -> list[dict]:
        return [
            {"step": s, "loss": l, "lr": r, "tokens_seen": k}
            for s, l, r, k in zip(self.steps, self.losses, self.lrs, self.tokens)
        ]

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> "TrainingReport":
        rep = cls()
        for r in records:
            rep.append(int(r["step"]), float(r["loss"]), float(r["lr"]), int(r["tokens_seen"]))
        return rep


# ---------------------------------------------------------------------------
# loss, schedule, optimizer


def clm_loss(logits: Tensor, targets) -> Tensor:
    """Mean next-token cross-entropy for [T, V] logits and T target ids."""
    return T.cross_entropy(logits, np.asarray(targets, dtype=np.int64))


def clm_loss_batch(logits: Tensor, targets, mask=None) -> Tensor:
    """Batched variant: [B, T, V] logits, [B, T] targets, optional 0/1 mask."""
    b, t, v = logits.shape
    flat = T.reshape(logits, (b * t, v))
    tgt = np.asarray(targets, dtype=np.int64).reshape(b * t)
    m = None if mask is None else np.asarray(mask, dtype=np.float64).reshape(b * t)
    return T.cross_entropy(flat, tgt, m)


def lr_at(step: int, config: TrainConfig) -> float:
    """Piecewise-linear rate: 0 -> lr_initial over warmup, then -> lr_final."""
    if step < 0:
        raise ConfigError(f"step must be >= 0, got {step}")
    w, m = config.warmup_steps, config.max_steps
    if step <= w:
        return config.lr_initial if w == 0 else config.lr_initial * step / w
    if step >= m:
        return config.lr_final
    frac = (step - w) / (m - w)
    return config.lr_initial + (config.lr_final - config.lr_initial) * frac


def global_grad_norm(params: Parameters) -> float:
    total = 0.0
    for _, t in params.items():
        total += float((t.grad**2).sum())
    return float(np.sqrt(total))


def adam_step(params: Parameters, state: OptimizerState, rate: float, config: TrainConfig) -> None:
    """One in-place Adam update from the gradients stored on ``params``."""
    for name, t in params.items():
        if not np.isfinite(t.grad).all():
            raise NonFiniteError(f"non-finite gradient for parameter {name!r}")
    if config.grad_clip_norm is not None:
        norm = global_grad_norm(params)
        if norm > config.grad_clip_norm:
            factor = config.grad_clip_norm / norm
            for _, t in params.items():
                t.grad *= factor
    state.t += 1
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for name, t in params.items():
        g = t.grad
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        t.data -= rate * (m / c1) / (np.sqrt(v / c2) + eps)


# ---------------------------------------------------------------------------
# data shaping


def pack_sequences(token_stream: Iterable[int], block_len: int) -> np.ndarray:
    """Chunk a token stream into [n, block_len] non-overlapping blocks.

    The final partial block is dropped; a stream shorter than one block is an
    input error.
    """
    if block_len < 2:
        raise ConfigError(f"block_len must be >= 2, got {block_len}")
    ids = np.fromiter(token_stream, dtype=np.int64)
    n = ids.size // block_len
    if n == 0:
        raise InputError(f"token stream ({ids.size} tokens) shorter than one {block_len} block")
    return ids[: n * block_len].reshape(n, block_len)


def _dropout_seed(seed: int, step: int) -> int:
    return seed * 1_000_003 + step + 1


def _epoch_iter(epochs: int | None):
    return itertools.count() if epochs is None else range(epochs)


# ---------------------------------------------------------------------------
# training loops


def pretrain(
    params: Parameters,
    model_config: ModelConfig,
    tokenizer: TokenizerModel,
    corpus: Iterable[str],
    config: TrainConfig,
    log: LogFn | None = None,
) -> TrainingReport:
    """Next-token training over eos-joined packed blocks; mutates ``params``.

    Divergence (non-finite loss or gradient) raises before any parameter
    update, so on error ``params`` still holds the last good step.
    """
    blocks = pack_sequences(iter_token_stream(tokenizer, corpus), config.seq_len + 1)
    if blocks.shape[0] < config.batch_size:
        raise InputError(
            f"corpus packs into {blocks.shape[0]} blocks, fewer than batch_size {config.batch_size}"
        )
    return _run_lm_loop(params, model_config, blocks, None, config, log)


def _run_lm_loop(
    params: Parameters,
    model_config: ModelConfig,
    blocks: np.ndarray,
    masks: np.ndarray | None,
    config: TrainConfig,
    log: LogFn | None,
) -> TrainingReport:
    """Shared LM loop: blocks [N, L+1] -> x=[:, :-1], y=[:, 1:], Adam steps."""
    rng = np.random.default_rng(config.seed)
    state = init_optimizer(params)
    report = TrainingReport()
    n = blocks.shape[0]
    batches = n // config.batch_size
    started = time.monotonic()
    step = 0
    tokens_seen = 0
    for _ in _epoch_iter(config.epochs):
        perm = rng.permutation(n)
        for b in range(batches):
            idx = perm[b * config.batch_size : (b + 1) * config.batch_size]
            block = blocks[idx]
            x, y = block[:, :-1], block[:, 1:]
            mask = None if masks is None else masks[idx][:, 1:]
            rate = lr_at(step + 1, config)
            with Trace() as trace:
                logits = M.forward_batch(
                    params, model_config, x, mode="train",
                    dropout_seed=_dropout_seed(config.seed, step),
                )
                loss = clm_loss_batch(logits, y, mask)
            params.zero_grads()
            backward(loss, trace)
            adam_step(params, state, rate, config)
            step += 1
            tokens_seen += int(x.size if mask is None else mask.sum())
            report.append(step, loss.item(), rate, tokens_seen)
            if log is not None and (step % config.eval_every == 0 or step == 1):
                log({"event": "step", "step": step, "loss": loss.item(), "lr": rate})
            if step >= config.max_steps:
                report.wall_time = time.monotonic() - started
                return report
    report.wall_time = time.monotonic() - started
    if step == 0:
        raise InputError("no full batch available; reduce batch_size")
    return report


def _render_pair(
    tokenizer: TokenizerModel, prompt: str, completion: str, ctx_len: int, log: LogFn | None
) -> tuple[list[int], list[int]]:
    """Encode one prompt/completion record -> (ids, loss mask over ids).

    Layout is prompt ++ eos ++ completion ++ eos, the eos doubling as the
    separator; the mask covers completion tokens and the final eos.  Records
    longer than ctx_len+1 lose tokens from the prompt head.
    """
    comp_ids = tokenizer.encode(completion)
    if not comp_ids:
        raise InputError(f"empty completion for prompt {prompt[:40]!r}")
    prompt_ids = tokenizer.encode(prompt) + [EOS_ID]
    ids = prompt_ids + comp_ids + [EOS_ID]
    mask = [0] * len(prompt_ids) + [1] * (len(comp_ids) + 1)
    limit = ctx_len + 1
    if len(ids) > limit:
        dropped = len(ids) - limit
        ids, mask = ids[dropped:], mask[dropped:]
        if log is not None:
            log({"event": "truncated", "dropped_tokens": dropped, "prompt": prompt[:40]})
    return ids, mask


def finetune_lm(
    params: Parameters,
    model_config: ModelConfig,
    tokenizer: TokenizerModel,
    dataset: Sequence[tuple[str, str]],
    config: TrainConfig,
    log: LogFn | None = None,
) -> TrainingReport:
    """Fine-tune on (prompt, completion) pairs, loss on completions only."""
    if not dataset:
        raise InputError("empty fine-tuning dataset")
    rendered = [
        _render_pair(tokenizer, p, c, model_config.ctx_len, log) for p, c in dataset
    ]
    width = max(len(ids) for ids, _ in rendered)
    blocks = np.full((len(rendered), width), PAD_ID, dtype=np.int64)
    masks = np.zeros((len(rendered), width), dtype=np.float64)
    for i, (ids, mask) in enumerate(rendered):
        blocks[i, : len(ids)] = ids
        masks[i, : len(ids)] = mask
    if blocks.shape[0] < config.batch_size:
        raise InputError(
            f"dataset has {blocks.shape[0]} records, fewer than batch_size {config.batch_size}"
        )
    return _run_lm_loop(params, model_config, blocks, masks, config, log)


def _encode_classification(
    tokenizer: TokenizerModel, text: str, ctx_len: int
) -> list[int]:
    ids = tokenizer.encode(text)
    if not ids:
        raise InputError(f"text encodes to no tokens: {text[:40]!r}")
    return ids[-ctx_len:]


def finetune_classifier(
    params: Parameters,
    model_config: ModelConfig,
    tokenizer: TokenizerModel,
    dataset: Sequence[tuple[str, int]],
    config: TrainConfig,
    log: LogFn | None = None,
) -> TrainingReport:
    """Co-train backbone plus 2-way head on (text, label in {0,1}) records."""
    if "cls_head.w" not in params:
        raise ConfigError("parameters lack a classification head (init with n_classes=2)")
    if not dataset:
        raise InputError("empty classification dataset")
    for _, label in dataset:
        if label not in (0, 1):
            raise InputError(f"label must be 0 or 1, got {label!r}")
    encoded = [_encode_classification(tokenizer, t, model_config.ctx_len) for t, _ in dataset]
    labels = np.array([l for _, l in dataset], dtype=np.int64)
    width = max(len(ids) for ids in encoded)
    blocks = np.full((len(encoded), width), PAD_ID, dtype=np.int64)
    last_pos = np.zeros(len(encoded), dtype=np.int64)
    for i, ids in enumerate(encoded):
        blocks[i, : len(ids)] = ids
        last_pos[i] = len(ids) - 1
    n = blocks.shape[0]
    if n < config.batch_size:
        raise InputError(f"dataset has {n} records, fewer than batch_size {config.batch_size}")

    rng = np.random.default_rng(config.seed)
    state = init_optimizer(params)
    report = TrainingReport()
    batches = n // config.batch_size
    started = time.monotonic()
    step = 0
    seen = 0
    for _ in _epoch_iter(config.epochs):
        perm = rng.permutation(n)
        for b in range(batches):
            idx = perm[b * config.batch_size : (b + 1) * config.batch_size]
            rate = lr_at(step + 1, config)
            with Trace() as trace:
                logits = M.classifier_logits(
                    params, model_config, blocks[idx], last_pos[idx], mode="train",
                    dropout_seed=_dropout_seed(config.seed, step),
                )
                loss = T.cross_entropy(logits, labels[idx])
            params.zero_grads()
            backward(loss, trace)
            adam_step(params, state, rate, config)
            step += 1
            seen += int(last_pos[idx].sum()) + len(idx)
            report.append(step, loss.item(), rate, seen)
            if log is not None and (step % config.eval_every == 0 or step == 1):
                log({"event": "step", "step": step, "loss": loss.item(), "lr": rate})
            if step >= config.max_steps:
                report.wall_time = time.monotonic() - started
                return report
    report.wall_time = time.monotonic() - started
    if step == 0:
        raise InputError("no full batch available; reduce batch_size")
    return report


def classify(
    params: Parameters,
    model_config: ModelConfig,
    tokenizer: TokenizerModel,
    text: str,
) -> tuple[int, float]:
    """Predict (label, softmax score of that label) for one text."""
    ids = _encode_classification(tokenizer, text, model_config.ctx_len)
    logits = M.classifier_logits(
        params, model_config, np.asarray([ids]), np.asarray([len(ids) - 1])
    ).data[0]
    e = np.exp(logits - logits.max())
    probs = e / e.sum()
    label = int(np.argmax(probs))
    return label, float(probs[label])

"""K-shot multiple-choice evaluation by per-choice log-likelihood.

Each record supplies a context and candidate completions; the model scores
every candidate by the summed log-probability of its tokens given the
context, and the harness aggregates one of three ways: raw-argmax accuracy,
byte-length-normalized accuracy, or the normalized probability mass on the
true choices (the multi-true variant).  Exemplars for the k-shot prompt are
drawn from a separate pool, without replacement, deterministically per seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import model as M
from .errors import ConfigError, InputError
from .metrics import MetricReport
from .model import ModelConfig, Parameters
from .tensor import np_log_softmax
from .tokenizer import BOS_ID, TokenizerModel

# conventional shot counts for the common benchmark families
BENCHMARK_SHOTS = {"arc": 25, "hellaswag": 10, "mmlu": 5, "truthfulqa": 0}

METRICS = ("acc", "acc_norm", "mc2")


@dataclass(frozen=True)
class McRecord:
    """One multiple-choice item: context, candidate strings, true indices."""

    context: str
    choices: tuple[str, ...]
    true_set: frozenset[int]

    def __post_init__(self):
        if len(self.choices) < 2:
            raise InputError(f"record needs >= 2 choices, got {len(self.choices)}")
        if not self.true_set:
            raise InputError("record has an empty true set")
        if any(i < 0 or i >= len(self.choices) for i in self.true_set):
            raise InputError(f"true index out of range for {len(self.choices)} choices")

    @classmethod
    def from_json(cls, obj: dict) -> "McRecord":
        try:
            return cls(
                context=str(obj["context"]),
                choices=tuple(str(c) for c in obj["choices"]),
                true_set=frozenset(int(i) for i in obj["true"]),
            )
        except KeyError as missing:
            raise InputError(f"record missing field {missing}") from None


@dataclass(frozen=True)
class McTask:
    """Evaluation records plus the exemplar pool for k-shot prompts."""

    records: tuple[McRecord, ...]
    pool: tuple[McRecord, ...] = ()

    def __post_init__(self):
        if not self.records:
            raise InputError("task has no records")


def load_mc_records(path) -> tuple[McRecord, ...]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(McRecord.from_json(json.loads(line)))
            except json.JSONDecodeError as err:
                raise InputError(f"{path}:{lineno}: malformed JSON ({err.msg})") from None
    return tuple(records)


def load_mc_task(path, pool_path=None) -> McTask:
    pool = load_mc_records(pool_path) if pool_path else ()
    return McTask(records=load_mc_records(path), pool=pool)


def choice_loglik(
    params: Parameters,
    model_config: ModelConfig,
    tokenizer: TokenizerModel,
    context: str,
    choice: str,
) -> tuple[float, int]:
    """Sum of log P(choice token | prefix) and the choice's UTF-8 byte length.

    The context is prefixed with bos so the first choice token is conditioned
    even on an empty context; when context+choice overflows the window, the
    context keeps only its rightmost tokens.
    """
    choice_ids = tokenizer.encode(choice)
    if not choice_ids:
        raise InputError(f"choice encodes to no tokens: {choice[:40]!r}")
    if len(choice_ids) >= model_config.ctx_len:
        raise InputError(
            f"choice of {len(choice_ids)} tokens cannot fit context window "
            f"{model_config.ctx_len}"
        )
    ctx_ids = [BOS_ID] + tokenizer.encode(context)
    room = model_config.ctx_len - len(choice_ids)
    ctx_ids = ctx_ids[-room:]
    ids = ctx_ids + choice_ids
    logits = M.forward(params, model_config, ids).data
    logp = np_log_softmax(logits, axis=-1)
    start = len(ctx_ids)
    # row j predicts ids[j+1]; choice tokens occupy ids[start:], so rows
    # start-1 .. len(ids)-2 are the scoring rows
    total = math.fsum(logp[j - 1, ids[j]] for j in range(start, len(ids)))
    return total, len(choice.encode("utf-8"))


def _render_exemplar(record: McRecord) -> str:
    answer = record.choices[min(record.true_set)]
    return f"{record.context}\n{answer}\n\n"


def fewshot_eval(
    params: Parameters,
    model_config: ModelConfig,
    tokenizer: TokenizerModel,
    task: McTask,
    k: int,
    metric: str = "acc",
    seed: int = 0,
) -> MetricReport:
    """Score every record under a k-shot prompt and aggregate per ``metric``.

    acc: argmax of raw log-likelihood lands in the true set.
    acc_norm: argmax of log-likelihood / byte length.
    mc2: mean normalized probability mass on the true choices.
    Argmax ties resolve to the lowest choice index.
    """
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {METRICS}, got {metric!r}")
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    if k > len(task.pool):
        raise ConfigError(f"k={k} exceeds exemplar pool of {len(task.pool)}")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(task.pool), size=k, replace=False) if k else []
    prefix = "".join(_render_exemplar(task.pool[int(i)]) for i in chosen)

    per_record = []
    for record in task.records:
        context = prefix + record.context
        scored = [
            choice_loglik(params, model_config, tokenizer, context, c)
            for c in record.choices
        ]
        logliks = np.array([s for s, _ in scored])
        if metric == "acc":
            per_record.append(float(int(np.argmax(logliks)) in record.true_set))
        elif metric == "acc_norm":
            byte_lens = np.array([b for _, b in scored], dtype=np.float64)
            per_record.append(float(int(np.argmax(logliks / byte_lens)) in record.true_set))
        else:
            # shift by the max so exp cannot underflow all mass to zero;
            # the ratio is invariant under the shift
            p = np.exp(logliks - logliks.max())
            true_mass = math.fsum(p[i] for i in sorted(record.true_set))
            per_record.append(true_mass / math.fsum(p))
    return MetricReport(
        name=metric,
        value=math.fsum(per_record) / len(per_record),
        sample_count=len(per_record),
        config={"k": k, "seed": seed},
    )

"""Command-line surface.

Subcommands cover the full pipeline: text normalization, tokenizer training
and encode/decode, pretraining, the two fine-tunes, generation, the metric
and few-shot evaluators, report rendering, and checkpoint inspection.

Conventions: machine-readable results go to stdout; logs are JSON lines on
stderr; exit code 0 on success, 1 on validation errors (including usage), 2
on runtime errors.  Any flag may instead be supplied by a JSON --config
file; explicit flags win over the file, the file wins over defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from types import SimpleNamespace

from . import checkpoint as C
from . import data as D
from . import metrics as MX
from . import model as M
from . import report as R
from . import training as TR
from .errors import AlmError, ConfigError, InputError, NonFiniteError
from .fewshot import fewshot_eval, load_mc_task
from .normalize import NormalizerConfig, normalize
from .tokenizer import (
    PRESET_VOCAB_SIZES,
    TokenizerModel,
    load_tokenizer,
    save_tokenizer,
    train_bpe,
)


def _log(obj: dict) -> None:
    print(json.dumps(obj, ensure_ascii=False), file=sys.stderr)


def _emit(obj: dict) -> None:
    print(json.dumps(obj, ensure_ascii=False))


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as validation errors (exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


def _resolve(args: argparse.Namespace, defaults: dict) -> SimpleNamespace:
    """Merge flag > config-file > default for every known option."""
    file_cfg = {}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path, encoding="utf-8") as fh:
                file_cfg = json.load(fh)
        except OSError as err:
            raise InputError(f"cannot read config file: {err}") from None
        except json.JSONDecodeError as err:
            raise InputError(f"{config_path}: malformed JSON ({err.msg})") from None
        if not isinstance(file_cfg, dict):
            raise InputError(f"{config_path}: config must be a JSON object")
        unknown = sorted(set(file_cfg) - set(defaults))
        if unknown:
            _log({"event": "ignored_config_keys", "keys": unknown})
    merged = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
        elif key in file_cfg:
            merged[key] = file_cfg[key]
        else:
            merged[key] = default
    return SimpleNamespace(**merged)


def _require(ns: SimpleNamespace, *keys: str) -> None:
    for key in keys:
        if getattr(ns, key) in (None, ""):
            raise InputError(f"missing required option --{key.replace('_', '-')}")


# ---------------------------------------------------------------------------
# option groups

_NORM_DEFAULTS = {
    "strip_diacritics": False,
    "keep_tatweel": False,
    "keep_whitespace": False,
    "no_unicode_canonicalize": False,
    "lowercase_latin": False,
    "fold_alef": False,
}

_TRAIN_DEFAULTS = {
    "batch_size": 8,
    "seq_len": 64,
    "steps": 100,
    "epochs": None,
    "lr": 4e-5,
    "lr_final": -1.0,
    "warmup": -1,
    "beta1": 0.9,
    "beta2": 0.999,
    "adam_eps": 1e-8,
    "clip_norm": None,
    "eval_every": 50,
    "seed": 0,
}

_MODEL_DEFAULTS = {
    "preset": None,
    "n_layers": 2,
    "n_heads": 2,
    "d_model": 64,
    "d_ff": 0,
    "ctx_len": 128,
    "vocab_size": None,
    "dropout": None,
    "untie_head": False,
}


def _add_norm_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strip-diacritics", action="store_true", default=None)
    p.add_argument("--keep-tatweel", action="store_true", default=None)
    p.add_argument("--keep-whitespace", action="store_true", default=None)
    p.add_argument("--no-unicode-canonicalize", action="store_true", default=None)
    p.add_argument("--lowercase-latin", action="store_true", default=None)
    p.add_argument("--fold-alef", action="store_true", default=None)


def _norm_config(ns: SimpleNamespace) -> NormalizerConfig:
    return NormalizerConfig(
        unicode_canonicalize=not ns.no_unicode_canonicalize,
        preserve_diacritics=not ns.strip_diacritics,
        remove_tatweel=not ns.keep_tatweel,
        collapse_whitespace=not ns.keep_whitespace,
        lowercase_latin=ns.lowercase_latin,
        fold_alef_variants=ns.fold_alef,
    )


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--seq-len", type=int, default=None)
    p.add_argument("--steps", type=int, default=None, help="max optimizer steps")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None, help="initial learning rate")
    p.add_argument("--lr-final", type=float, default=None)
    p.add_argument("--warmup", type=int, default=None, help="warmup steps")
    p.add_argument("--beta1", type=float, default=None)
    p.add_argument("--beta2", type=float, default=None)
    p.add_argument("--adam-eps", type=float, default=None)
    p.add_argument("--clip-norm", type=float, default=None)
    p.add_argument("--eval-every", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)


def _train_config(ns: SimpleNamespace, epochs_default=None) -> TR.TrainConfig:
    epochs = ns.epochs if ns.epochs is not None else epochs_default
    return TR.TrainConfig(
        batch_size=ns.batch_size,
        seq_len=ns.seq_len,
        max_steps=ns.steps,
        epochs=epochs,
        lr_initial=ns.lr,
        lr_final=ns.lr_final,
        warmup_steps=ns.warmup,
        adam_beta1=ns.beta1,
        adam_beta2=ns.beta2,
        adam_eps=ns.adam_eps,
        grad_clip_norm=ns.clip_norm,
        seed=ns.seed,
        eval_every=ns.eval_every,
    )


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=["0.1B", "0.3B"], default=None)
    p.add_argument("--n-layers", type=int, default=None)
    p.add_argument("--n-heads", type=int, default=None)
    p.add_argument("--d-model", type=int, default=None)
    p.add_argument("--d-ff", type=int, default=None)
    p.add_argument("--ctx-len", type=int, default=None)
    p.add_argument("--vocab-size", type=int, default=None)
    p.add_argument("--dropout", type=float, default=None, help="sets all three dropout rates")
    p.add_argument("--untie-head", action="store_true", default=None)


def _model_config(ns: SimpleNamespace, vocab_size: int | None) -> M.ModelConfig:
    if ns.preset:
        cfg = M.preset(ns.preset)
        if vocab_size is not None and vocab_size != cfg.vocab_size:
            _log({"event": "vocab_override", "preset": cfg.vocab_size, "tokenizer": vocab_size})
            cfg = M.ModelConfig.from_json({**cfg.to_json(), "vocab_size": vocab_size})
    else:
        v = vocab_size if vocab_size is not None else ns.vocab_size
        if v is None:
            raise InputError("vocab size unknown: give --vocab-size, --preset, or --tokenizer")
        cfg = M.ModelConfig(
            vocab_size=v,
            ctx_len=ns.ctx_len,
            n_layers=ns.n_layers,
            n_heads=ns.n_heads,
            d_model=ns.d_model,
            d_ff=ns.d_ff,
            tie_lm_head=not ns.untie_head,
        )
    if ns.dropout is not None:
        cfg = M.ModelConfig.from_json(
            {
                **cfg.to_json(),
                "attn_dropout": ns.dropout,
                "embd_dropout": ns.dropout,
                "resid_dropout": ns.dropout,
            }
        )
    return cfg


def _read_lines(path: str):
    if path == "-":
        return sys.stdin.read().splitlines()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except OSError as err:
        raise InputError(f"cannot read {path}: {err}") from None
    except UnicodeDecodeError as err:
        raise InputError(f"{path}: undecodable byte at offset {err.start}") from None


def _write_lines(path: str, lines) -> None:
    text = "\n".join(lines)
    if text:
        text += "\n"
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_tok(path: str) -> TokenizerModel:
    if not path:
        raise InputError("missing required option --tokenizer")
    return load_tokenizer(path)


# ---------------------------------------------------------------------------
# subcommands


def cmd_normalize(args) -> int:
    ns = _resolve(args, {**_NORM_DEFAULTS, "input": "-", "output": "-"})
    cfg = _norm_config(ns)
    lines = _read_lines(ns.input)
    out = []
    cp_in = cp_out = 0
    for line in lines:
        result = normalize(line, cfg)
        cp_in += result.source_len
        cp_out += len(result.text)
        out.append(result.text)
    _write_lines(ns.output, out)
    _log({"event": "normalized", "lines": len(lines), "codepoints_in": cp_in, "codepoints_out": cp_out})
    return 0


def cmd_tok_train(args) -> int:
    defaults = {**_NORM_DEFAULTS, "corpus": None, "out": None, "vocab_size": None, "size_preset": None}
    ns = _resolve(args, defaults)
    _require(ns, "corpus", "out")
    if ns.vocab_size is None:
        preset = ns.size_preset or "64k"
        if preset not in PRESET_VOCAB_SIZES:
            raise InputError(f"unknown size preset {preset!r}; choose from {sorted(PRESET_VOCAB_SIZES)}")
        vocab_size = PRESET_VOCAB_SIZES[preset]
    else:
        vocab_size = ns.vocab_size
    tok = train_bpe(D.stream_corpus(ns.corpus), vocab_size, normalizer=_norm_config(ns))
    save_tokenizer(tok, ns.out)
    _emit({"vocab_size": len(tok.vocab), "merges": len(tok.merges), "path": ns.out})
    return 0


def cmd_encode(args) -> int:
    ns = _resolve(args, {"tokenizer": None, "input": "-", "output": "-"})
    tok = _load_tok(ns.tokenizer)
    out_lines = []
    for line in _read_lines(ns.input):
        ids = tok.encode(line)
        out_lines.append(" ".join(str(i) for i in ids))
    _write_lines(ns.output, out_lines)
    return 0


def cmd_decode(args) -> int:
    ns = _resolve(args, {"tokenizer": None, "input": "-", "output": "-"})
    tok = _load_tok(ns.tokenizer)
    out_lines = []
    for lineno, line in enumerate(_read_lines(ns.input), start=1):
        try:
            ids = [int(tk) for tk in line.split()]
        except ValueError:
            raise InputError(f"line {lineno}: ids must be integers") from None
        out_lines.append(tok.decode(ids))
    _write_lines(ns.output, out_lines)
    return 0


def cmd_pretrain(args) -> int:
    defaults = {
        **_TRAIN_DEFAULTS,
        **_MODEL_DEFAULTS,
        "corpus": None,
        "tokenizer": None,
        "out": None,
        "report": None,
        "dry_run": False,
    }
    ns = _resolve(args, defaults)
    if ns.dry_run:
        cfg = _model_config(ns, None)
        _emit({"param_count": M.param_count(cfg), "model_config": cfg.to_json()})
        return 0
    _require(ns, "corpus", "tokenizer", "out")
    tok = _load_tok(ns.tokenizer)
    cfg = _model_config(ns, len(tok.vocab))
    params = M.init(cfg, ns.seed)
    tcfg = _train_config(ns)
    tok_hash = C.tokenizer_hash(ns.tokenizer)
    try:
        rep = TR.pretrain(params, cfg, tok, D.stream_corpus(ns.corpus), tcfg, log=_log)
    except NonFiniteError as err:
        # params still hold the last completed step; persist them before failing
        C.save_checkpoint(ns.out, params, cfg, tok_hash, seed=ns.seed)
        _log({"event": "diverged", "message": str(err), "checkpoint": ns.out})
        raise
    C.save_checkpoint(
        ns.out, params, cfg, tok_hash, step=rep.steps[-1], seed=ns.seed,
        metrics={"final_loss": rep.final_loss},
    )
    if ns.report:
        R.save_report(rep, ns.report)
    _emit(
        {
            "final_loss": rep.final_loss,
            "steps": rep.steps[-1],
            "tokens_seen": rep.tokens[-1],
            "checkpoint": ns.out,
        }
    )
    return 0


def cmd_finetune_lm(args) -> int:
    defaults = {**_TRAIN_DEFAULTS, "ckpt": None, "tokenizer": None, "data": None, "out": None, "report": None}
    ns = _resolve(args, defaults)
    _require(ns, "ckpt", "tokenizer", "data", "out")
    tok = _load_tok(ns.tokenizer)
    tok_hash = C.tokenizer_hash(ns.tokenizer)
    params, cfg, _ = C.load_checkpoint(ns.ckpt, expected_tokenizer_hash=tok_hash)
    pairs = D.load_pairs(ns.data)
    tcfg = _train_config(ns)
    rep = TR.finetune_lm(params, cfg, tok, pairs, tcfg, log=_log)
    C.save_checkpoint(
        ns.out, params, cfg, tok_hash, step=rep.steps[-1], seed=ns.seed,
        metrics={"final_loss": rep.final_loss},
    )
    if ns.report:
        R.save_report(rep, ns.report)
    _emit({"final_loss": rep.final_loss, "steps": rep.steps[-1], "checkpoint": ns.out})
    return 0


def cmd_finetune_cls(args) -> int:
    defaults = {
        **_TRAIN_DEFAULTS,
        "ckpt": None,
        "tokenizer": None,
        "data": None,
        "out": None,
        "report": None,
        "train_fraction": 0.7,
    }
    ns = _resolve(args, defaults)
    _require(ns, "ckpt", "tokenizer", "data", "out")
    tok = _load_tok(ns.tokenizer)
    tok_hash = C.tokenizer_hash(ns.tokenizer)
    params, cfg, header = C.load_checkpoint(ns.ckpt, expected_tokenizer_hash=tok_hash)
    if header.get("n_classes") is None:
        M.add_classifier_head(params, cfg, ns.seed, n_classes=2)
    records = D.load_labeled(ns.data)
    train, test = D.split(records, ns.train_fraction, ns.seed)
    tcfg = _train_config(ns, epochs_default=3)
    rep = TR.finetune_classifier(params, cfg, tok, train, tcfg, log=_log)
    predictions = [TR.classify(params, cfg, tok, text)[0] for text, _ in test]
    acc = MX.accuracy(predictions, [label for _, label in test]) if test else 0.0
    C.save_checkpoint(
        ns.out, params, cfg, tok_hash, step=rep.steps[-1], seed=ns.seed, n_classes=2,
        metrics={"final_loss": rep.final_loss, "test_accuracy": acc},
    )
    if ns.report:
        R.save_report(rep, ns.report)
    _emit(
        {
            "accuracy": acc,
            "n_train": len(train),
            "n_test": len(test),
            "final_loss": rep.final_loss,
            "checkpoint": ns.out,
        }
    )
    return 0


def cmd_generate(args) -> int:
    defaults = {
        "ckpt": None,
        "tokenizer": None,
        "prompt": None,
        "max_new": 32,
        "strategy": "greedy",
        "temperature": 1.0,
        "top_k": 1,
        "seed": 0,
    }
    ns = _resolve(args, defaults)
    _require(ns, "ckpt", "tokenizer", "prompt")
    tok = _load_tok(ns.tokenizer)
    params, cfg, _ = C.load_checkpoint(ns.ckpt, expected_tokenizer_hash=C.tokenizer_hash(ns.tokenizer))
    prompt_ids = tok.encode(ns.prompt)
    if not prompt_ids:
        raise InputError("prompt encodes to no tokens")
    ids = M.generate(
        params, cfg, prompt_ids, ns.max_new,
        strategy=ns.strategy, temperature=ns.temperature, top_k=ns.top_k, seed=ns.seed,
    )
    _log({"event": "generated", "prompt_tokens": len(prompt_ids), "new_tokens": len(ids) - len(prompt_ids)})
    print(tok.decode(ids))
    return 0


def cmd_eval_gen(args) -> int:
    defaults = {**_NORM_DEFAULTS, "data": None, "max_n": 4, "rouge_n": 1, "results": None}
    ns = _resolve(args, defaults)
    _require(ns, "data")
    cfg = _norm_config(ns)
    pairs = D.load_gen_pairs(ns.data)
    bleus, rouges, f1s = [], [], []
    for hyp, ref in pairs:
        h = normalize(hyp, cfg).text
        r = normalize(ref, cfg).text
        b = MX.bleu(h, r, max_n=ns.max_n)
        g = MX.rouge_n(h, r, n=ns.rouge_n)
        bleus.append(b)
        rouges.append(g)
        f1s.append(MX.f1_bleu_rouge(b, g))
    n = len(pairs)
    result = {
        "bleu": sum(bleus) / n,
        "rouge": sum(rouges) / n,
        "f1": sum(f1s) / n,
        "sample_count": n,
        "config": {"max_n": ns.max_n, "rouge_n": ns.rouge_n},
    }
    _emit(result)
    if ns.results:
        R.append_result({"metric": "f1", "value": result["f1"], "sample_count": n}, ns.results)
    return 0


def cmd_eval_cls(args) -> int:
    ns = _resolve(args, {"ckpt": None, "tokenizer": None, "data": None, "results": None})
    _require(ns, "ckpt", "tokenizer", "data")
    tok = _load_tok(ns.tokenizer)
    params, cfg, _ = C.load_checkpoint(ns.ckpt, expected_tokenizer_hash=C.tokenizer_hash(ns.tokenizer))
    records = D.load_labeled(ns.data)
    predictions, scores = [], []
    for text, _ in records:
        label, score = TR.classify(params, cfg, tok, text)
        predictions.append(label)
        scores.append(score)
    acc = MX.accuracy(predictions, [label for _, label in records])
    result = {"metric": "accuracy", "value": acc, "sample_count": len(records),
              "mean_score": sum(scores) / len(scores)}
    _emit(result)
    if ns.results:
        R.append_result(result, ns.results)
    return 0


def cmd_eval_fewshot(args) -> int:
    defaults = {
        "ckpt": None,
        "tokenizer": None,
        "task": None,
        "pool": None,
        "k": 0,
        "metric": "acc",
        "seed": 0,
        "results": None,
    }
    ns = _resolve(args, defaults)
    _require(ns, "ckpt", "tokenizer", "task")
    tok = _load_tok(ns.tokenizer)
    params, cfg, _ = C.load_checkpoint(ns.ckpt, expected_tokenizer_hash=C.tokenizer_hash(ns.tokenizer))
    task = load_mc_task(ns.task, ns.pool)
    rep = fewshot_eval(params, cfg, tok, task, ns.k, metric=ns.metric, seed=ns.seed)
    _emit(rep.to_json())
    if ns.results:
        R.append_result(rep.to_json(), ns.results)
    return 0


def cmd_report(args) -> int:
    ns = _resolve(args, {"train_log": None, "results": None, "out_dir": "."})
    if not ns.train_log and not ns.results:
        raise InputError("give --train-log and/or --results")
    os.makedirs(ns.out_dir, exist_ok=True)
    tables = []
    if ns.train_log:
        rep = R.load_report(ns.train_log)
        fig_path = os.path.join(ns.out_dir, "loss_curve.png")
        R.render_loss_curve(rep, fig_path)
        _log({"event": "figure", "path": fig_path})
        tables.append(R.report_table(rep))
    if ns.results:
        results = R.load_results(ns.results)
        fig_path = os.path.join(ns.out_dir, "metrics.png")
        R.render_metrics_chart(results, fig_path)
        _log({"event": "figure", "path": fig_path})
        tables.append(R.results_table(results))
    print("\n\n".join(tables))
    return 0


def cmd_inspect_ckpt(args) -> int:
    ns = _resolve(args, {"ckpt": None})
    _require(ns, "ckpt")
    header, entries = C.read_header(ns.ckpt)
    total = 0
    for e in entries:
        count = 1
        for s in e["shape"]:
            count *= int(s)
        total += count
    _emit(
        {
            "header": header,
            "tensor_count": len(entries),
            "param_count": total,
            "tensors": [{"name": e["name"], "shape": e["shape"]} for e in entries],
        }
    )
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def _build_parser() -> _Parser:
    parser = _Parser(prog="alm", description="Arabic language modeling toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def command(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None, help="JSON file supplying any flag")
        p.set_defaults(fn=fn)
        return p

    p = command("normalize", cmd_normalize, "normalize text lines")
    p.add_argument("--input", default=None)
    p.add_argument("--output", default=None)
    _add_norm_flags(p)

    p = command("tok-train", cmd_tok_train, "train a BPE tokenizer")
    p.add_argument("--corpus", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--vocab-size", type=int, default=None)
    p.add_argument("--size-preset", default=None, help="32k, 50k, 64k, or 86k")
    _add_norm_flags(p)

    for name, fn in (("encode", cmd_encode), ("decode", cmd_decode)):
        p = command(name, fn, f"{name} lines with a trained tokenizer")
        p.add_argument("--tokenizer", default=None)
        p.add_argument("--input", default=None)
        p.add_argument("--output", default=None)

    p = command("pretrain", cmd_pretrain, "causal-LM pretraining")
    p.add_argument("--corpus", default=None)
    p.add_argument("--tokenizer", default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--report", default=None, help="write the loss curve JSONL here")
    p.add_argument("--dry-run", action="store_true", default=None)
    _add_model_flags(p)
    _add_train_flags(p)

    p = command("finetune-lm", cmd_finetune_lm, "prompt/completion fine-tuning")
    for flag in ("--ckpt", "--tokenizer", "--data", "--out", "--report"):
        p.add_argument(flag, default=None)
    _add_train_flags(p)

    p = command("finetune-cls", cmd_finetune_cls, "binary classifier fine-tuning")
    for flag in ("--ckpt", "--tokenizer", "--data", "--out", "--report"):
        p.add_argument(flag, default=None)
    p.add_argument("--train-fraction", type=float, default=None)
    _add_train_flags(p)

    p = command("generate", cmd_generate, "generate text from a checkpoint")
    p.add_argument("--ckpt", default=None)
    p.add_argument("--tokenizer", default=None)
    p.add_argument("--prompt", default=None)
    p.add_argument("--max-new", type=int, default=None)
    p.add_argument("--strategy", choices=["greedy", "temperature", "top_k"], default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)

    p = command("eval-gen", cmd_eval_gen, "BLEU/ROUGE/F1 over hypothesis-reference pairs")
    p.add_argument("--data", default=None)
    p.add_argument("--max-n", type=int, default=None)
    p.add_argument("--rouge-n", type=int, default=None)
    p.add_argument("--results", default=None, help="append results JSONL here")
    _add_norm_flags(p)

    p = command("eval-cls", cmd_eval_cls, "classifier accuracy on labeled data")
    for flag in ("--ckpt", "--tokenizer", "--data", "--results"):
        p.add_argument(flag, default=None)

    p = command("eval-fewshot", cmd_eval_fewshot, "k-shot multiple-choice evaluation")
    for flag in ("--ckpt", "--tokenizer", "--task", "--pool", "--results"):
        p.add_argument(flag, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--metric", choices=["acc", "acc_norm", "mc2"], default=None)
    p.add_argument("--seed", type=int, default=None)

    p = command("report", cmd_report, "render figures and tables from logs")
    p.add_argument("--train-log", default=None)
    p.add_argument("--results", default=None)
    p.add_argument("--out-dir", default=None)

    p = command("inspect-ckpt", cmd_inspect_ckpt, "print checkpoint header and inventory")
    p.add_argument("--ckpt", default=None)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "fn", None) is None:
            parser.print_usage(sys.stderr)
            raise InputError("no subcommand given")
        return args.fn(args)
    except SystemExit as exc:  # argparse -h/--help
        return int(exc.code or 0)
    except (InputError, ConfigError) as err:
        _log({"event": "error", "kind": type(err).__name__, "message": str(err)})
        return 1
    except AlmError as err:
        _log({"event": "error", "kind": type(err).__name__, "message": str(err)})
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Desk-scale Arabic language modeling toolkit.

Subpackages: normalize (Unicode pipeline), tokenizer (trainable BPE),
tensor (autodiff numeric core), model (decoder-only transformer), training
(pretrain and fine-tunes), metrics/fewshot (evaluation), data/checkpoint/
report/cli (ingestion, persistence, CLI surface).
"""

import os as _os

# honor ALM_THREADS before numpy configures its thread pools
_threads = _os.environ.get("ALM_THREADS")
if _threads and _threads.isdigit():
    for _var in (
        "OMP_NUM_THREADS",
        "OPENBLAS_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
    ):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"

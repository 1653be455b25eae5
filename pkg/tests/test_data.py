import json

import pytest

from alm.data import (
    iter_jsonl,
    load_gen_pairs,
    load_labeled,
    load_pairs,
    split,
    stream_corpus,
)
from alm.errors import ConfigError, InputError


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# corpus streaming


def test_stream_plain_text_skips_blanks(tmp_path):
    path = _write(tmp_path / "c.txt", "اول\n\n  \nثاني\n")
    assert list(stream_corpus(path)) == ["اول", "ثاني"]


def test_stream_directory_in_name_order(tmp_path):
    d = tmp_path / "corpus"
    d.mkdir()
    _write(d / "b.txt", "two\n")
    _write(d / "a.txt", "one\n")
    assert list(stream_corpus(str(d))) == ["one", "two"]


def test_stream_jsonl_documents(tmp_path):
    lines = [
        json.dumps({"document": "نص اول"}, ensure_ascii=False),
        json.dumps({"document": "   "}),
        json.dumps({"document": "نص ثاني"}, ensure_ascii=False),
    ]
    path = _write(tmp_path / "c.jsonl", "\n".join(lines) + "\n")
    assert list(stream_corpus(path)) == ["نص اول", "نص ثاني"]


def test_stream_errors(tmp_path):
    with pytest.raises(InputError):
        list(stream_corpus(str(tmp_path / "missing.txt")))
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(InputError):
        list(stream_corpus(str(empty)))

    bad = _write(tmp_path / "bad.jsonl", '{"document": "x"}\nnot json\n')
    with pytest.raises(InputError) as exc:
        list(stream_corpus(bad))
    assert "bad.jsonl:2" in str(exc.value)

    nofield = _write(tmp_path / "nofield.jsonl", '{"text": "x"}\n')
    with pytest.raises(InputError):
        list(stream_corpus(nofield))


def test_stream_reports_undecodable_bytes(tmp_path):
    path = tmp_path / "c.txt"
    path.write_bytes(b"ok\n\xff\xfe broken\n")
    with pytest.raises(InputError) as exc:
        list(stream_corpus(str(path)))
    assert "c.txt:2" in str(exc.value) and "offset" in str(exc.value)


def test_stream_is_lazy(tmp_path):
    path = _write(tmp_path / "c.txt", "a\nb\nc\n")
    it = stream_corpus(path)
    assert next(it) == "a"  # consuming one line must not require reading all


# ---------------------------------------------------------------------------
# dataset loaders


def test_load_pairs(tmp_path):
    path = _write(
        tmp_path / "p.jsonl",
        json.dumps({"prompt": "س", "completion": "ج"}, ensure_ascii=False) + "\n",
    )
    assert load_pairs(path) == [("س", "ج")]
    missing = _write(tmp_path / "m.jsonl", '{"prompt": "x"}\n')
    with pytest.raises(InputError):
        load_pairs(missing)
    with pytest.raises(InputError):
        load_pairs(_write(tmp_path / "e.jsonl", "\n"))


def test_load_labeled(tmp_path):
    good = _write(
        tmp_path / "l.jsonl",
        '{"text": "a", "label": 0}\n{"text": "b", "label": 1}\n',
    )
    assert load_labeled(good) == [("a", 0), ("b", 1)]
    with pytest.raises(InputError):
        load_labeled(_write(tmp_path / "bad1.jsonl", '{"text": "a", "label": 2}\n'))
    with pytest.raises(InputError):
        load_labeled(_write(tmp_path / "bad2.jsonl", '{"text": "a", "label": "1"}\n'))


def test_load_gen_pairs(tmp_path):
    path = _write(
        tmp_path / "g.jsonl",
        '{"hypothesis": "h", "reference": "r"}\n',
    )
    assert load_gen_pairs(path) == [("h", "r")]


def test_iter_jsonl_line_numbers(tmp_path):
    path = _write(tmp_path / "x.jsonl", '{"a": 1}\n\n{"a": 2}\n')
    assert [(n, o["a"]) for n, o in iter_jsonl(path)] == [(1, 1), (3, 2)]


# ---------------------------------------------------------------------------
# splitting


def test_split_seventy_thirty_of_1800():
    train, test = split(list(range(1800)), 0.70, seed=0)
    assert (len(train), len(test)) == (1260, 540)


def test_split_partitions_dataset():
    data = [f"r{i}" for i in range(10)]
    train, test = split(data, 0.7, seed=3)
    assert (len(train), len(test)) == (7, 3)
    assert sorted(train + test) == sorted(data)
    assert not (set(train) & set(test))


def test_split_deterministic_and_seed_sensitive():
    data = list(range(50))
    assert split(data, 0.5, seed=4) == split(data, 0.5, seed=4)
    assert split(data, 0.5, seed=4) != split(data, 0.5, seed=5)


def test_split_is_shuffled():
    data = list(range(100))
    train, _ = split(data, 0.5, seed=1)
    assert train != data[:50]


def test_split_fraction_validation():
    with pytest.raises(ConfigError):
        split([1, 2], 0.0, seed=0)
    with pytest.raises(ConfigError):
        split([1, 2], 1.0, seed=0)

"""Synthetic corpora for the test suite.

Real review/question corpora are not redistributable, so tests use seeded
generators that mimic their shape: a two-class sentiment-style corpus
(class-correlated lexicons plus shared filler words) and a small
multi-class question-style corpus. Generation is deterministic given the
seed.
"""

from __future__ import annotations

import numpy as np


def _word_pool(prefix: str, count: int) -> list[str]:
    return [f"{prefix}{i}" for i in range(count)]


def sentiment_corpus(
    n: int,
    seed: int,
    n_neutral: int = 800,
    n_class_words: int = 200,
    length_range: tuple[int, int] = (6, 28),
    class_word_prob: float = 0.3,
    noise: float = 0.1,
) -> list[tuple[str, int]]:
    """(text, label) pairs, labels balanced 0/1.

    Each sentence mixes filler words with words drawn mostly from its
    class's lexicon; `noise` is the chance a class-word slot uses the
    wrong class's lexicon, which keeps accuracy off the ceiling.
    """
    rng = np.random.default_rng(seed)
    neutral = _word_pool("blandword", n_neutral)
    lexicons = [_word_pool("sourword", n_class_words), _word_pool("sweetword", n_class_words)]
    out = []
    for i in range(n):
        label = i % 2
        length = int(rng.integers(length_range[0], length_range[1] + 1))
        words = []
        for _ in range(length):
            if rng.random() < class_word_prob:
                pool_label = label if rng.random() >= noise else 1 - label
                pool = lexicons[pool_label]
            else:
                pool = neutral
            words.append(pool[int(rng.integers(len(pool)))])
        out.append((" ".join(words), label))
    return out


def question_corpus(n: int, seed: int, classes: tuple[str, ...] = ("ABBR", "DESC", "ENTY", "HUM", "LOC", "NUM")) -> list[tuple[str, str, int]]:
    """(text, class_name, label) triples in a prefix-label style."""
    rng = np.random.default_rng(seed)
    neutral = _word_pool("qword", 300)
    lexicons = {name: _word_pool(name.lower() + "word", 60) for name in classes}
    out = []
    for i in range(n):
        label = i % len(classes)
        name = classes[label]
        length = int(rng.integers(4, 14))
        words = []
        for _ in range(length):
            pool = lexicons[name] if rng.random() < 0.4 else neutral
            words.append(pool[int(rng.integers(len(pool)))])
        out.append((" ".join(words), name, label))
    return out


def write_tsv(path, rows: list[tuple[str, int]], class_names=("neg", "pos")) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for text, label in rows:
            fh.write(f"{class_names[label]}\t{text}\n")


def write_pair_of_files(dirpath, rows: list[tuple[str, int]], filenames=("rt.neg", "rt.pos")) -> None:
    dirpath.mkdir(parents=True, exist_ok=True)
    handles = [open(dirpath / name, "w", encoding="utf-8") for name in filenames]
    try:
        for text, label in rows:
            handles[label].write(text + "\n")
    finally:
        for fh in handles:
            fh.close()


def write_labeled_prefix(dirpath, train_rows, test_rows) -> None:
    """TREC-style files: LABEL:fine question text."""
    dirpath.mkdir(parents=True, exist_ok=True)
    for name, rows in (("train_5500.label", train_rows), ("TREC_10_test.label", test_rows)):
        with open(dirpath / name, "w", encoding="utf-8") as fh:
            for text, class_name, _ in rows:
                fh.write(f"{class_name}:fine {text}\n")


def write_directory_per_class(root, train_rows, test_rows, class_names=("neg", "pos"), extra_train_dir=None) -> None:
    """IMDB-style tree: root/{train,test}/{class}/NNN.txt, one example per file."""
    for part, rows in (("train", train_rows), ("test", test_rows)):
        for name in class_names:
            (root / part / name).mkdir(parents=True, exist_ok=True)
        for i, (text, label) in enumerate(rows):
            (root / part / class_names[label] / f"{i:05d}.txt").write_text(text, encoding="utf-8")
    if extra_train_dir:
        d = root / "train" / extra_train_dir
        d.mkdir(parents=True, exist_ok=True)
        (d / "00000.txt").write_text("unlabeled filler text", encoding="utf-8")

"""Text ingestion: tokenizer, vocabulary, encoders, embeddings, datasets.

Everything downstream of raw corpus files and upstream of the model lives
here. The pipeline is: load_dataset -> build_vocab -> (load or make an
EmbeddingTable) -> encode_dataset. All loaders are read-only and
reentrant; Vocabulary and EmbeddingTable never mutate after construction.
"""

from __future__ import annotations

import hashlib
import re
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from scnn.errors import ConfigError, DataError, FormatError

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

PAD_ID = 0
PAD_DISPLAY = "<pad>"

LAYOUTS = ("tsv", "pair-of-files", "labeled-prefix", "directory-per-class")


def tokenize(text: str) -> list[str]:
    """Lowercase and split, isolating punctuation into standalone tokens.

    Stopwords are kept. "The Movie, great!" becomes
    ["the", "movie", ",", "great", "!"].
    """
    return _TOKEN_RE.findall(text.lower())


class Vocabulary:
    """Dense word ids with id 0 reserved for padding.

    Id 0 maps to no real word; non-reserved ids are assigned by descending
    corpus frequency with lexicographic tie-breaking.
    """

    def __init__(self, words: Sequence[str]):
        words = list(words)
        if len(set(words)) != len(words):
            raise DataError("vocabulary words must be unique")
        if any(not w for w in words):
            raise DataError("vocabulary words must be non-empty strings")
        self._id_to_word = [PAD_DISPLAY] + words
        self._word_to_id = {w: i + 1 for i, w in enumerate(words)}

    @property
    def size(self) -> int:
        return len(self._id_to_word)

    def __len__(self) -> int:
        return len(self._id_to_word)

    def __contains__(self, word: str) -> bool:
        return word in self._word_to_id

    def id_of(self, word: str) -> int:
        """Id of `word`, or the pad id 0 when out of vocabulary."""
        return self._word_to_id.get(word, PAD_ID)

    def word_of(self, idx: int) -> str:
        if not 0 <= idx < len(self._id_to_word):
            raise DataError(f"id {idx} outside vocabulary of size {self.size}")
        return self._id_to_word[idx]

    def export(self) -> str:
        """One "word TAB id" line per real word, sorted by id."""
        return "".join(f"{w}\t{i}\n" for i, w in enumerate(self._id_to_word) if i != PAD_ID)

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.export().encode("utf-8")).hexdigest()

    @classmethod
    def from_export(cls, text: str) -> "Vocabulary":
        words = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise FormatError(f"vocabulary export line {lineno}: expected 'word TAB id'")
            word, id_str = parts
            if int(id_str) != len(words) + 1:
                raise FormatError(
                    f"vocabulary export line {lineno}: ids must be dense and ordered"
                )
            words.append(word)
        return cls(words)


def build_vocab(corpus: Iterable[Sequence[str]], max_size: int = 20000) -> Vocabulary:
    """Top max_size - 1 words by frequency, plus the pad slot.

    Deterministic: same corpus yields the identical word -> id map.
    """
    if max_size < 2:
        raise ConfigError(f"vocabulary size must be >= 2, got {max_size}")
    counts = Counter()
    for tokens in corpus:
        counts.update(tokens)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary([w for w, _ in ranked[: max_size - 1]])


def encode(tokens: Sequence[str], vocab: Vocabulary, max_len: int) -> np.ndarray:
    """Fixed-length id sequence: OOV -> 0, truncate the tail, right-pad with 0."""
    if max_len < 1:
        raise ConfigError(f"max_len must be >= 1, got {max_len}")
    out = np.zeros(max_len, dtype=np.int64)
    for i, tok in enumerate(tokens[:max_len]):
        out[i] = vocab.id_of(tok)
    return out


def decode(ids: Sequence[int], vocab: Vocabulary) -> list[str]:
    """Words for the non-pad ids, in order. Inverse of encode on the
    in-vocabulary part of the (possibly truncated) input."""
    return [vocab.word_of(int(i)) for i in ids if int(i) != PAD_ID]


# ---------------------------------------------------------------------------
# Embeddings
# ---------------------------------------------------------------------------


@dataclass
class EmbeddingTable:
    """V x d float64 matrix aligned with a Vocabulary.

    Row 0 (pad) is always all-zero, and rows for vocabulary words missing
    from a pretrained file stay exactly zero. Loaded vectors are never
    rescaled or normalized. `coverage` is the fraction of real vocabulary
    words found in the pretrained file (None for random tables).
    """

    matrix: np.ndarray
    dim: int
    coverage: float | None = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.ndim != 2 or self.matrix.shape[1] != self.dim:
            raise FormatError(
                f"embedding matrix shape {self.matrix.shape} does not match dim {self.dim}"
            )
        if np.any(self.matrix[PAD_ID] != 0.0):
            raise FormatError("embedding row 0 (pad) must be all-zero")

    @property
    def vocab_size(self) -> int:
        return self.matrix.shape[0]


def random_embeddings(vocab: Vocabulary, dim: int, rng: np.random.Generator) -> EmbeddingTable:
    """Standard-normal vectors for every real word; pad row zero.

    Unit component variance keeps convolution pre-activations near the
    (0, 1) moments the selu fixed point and the alpha-dropout correction
    are built around, which matters because these rows stay frozen.
    """
    if dim < 1:
        raise ConfigError(f"embedding dim must be >= 1, got {dim}")
    matrix = rng.standard_normal((vocab.size, dim))
    matrix[PAD_ID] = 0.0
    return EmbeddingTable(matrix=matrix, dim=dim, coverage=None)


def load_embeddings(path, fmt: str, vocab: Vocabulary, dim: int | None = None) -> EmbeddingTable:
    """Read a pretrained embedding file into a table aligned with `vocab`.

    fmt "text": whitespace-separated word + d decimals per line, no header.
    fmt "binary": header "count dim\\n", then per record the word bytes, a
    single space, and d little-endian 32-bit floats (widened to 64-bit).
    Vocabulary words absent from the file keep exactly-zero rows.
    """
    if fmt == "text":
        return _load_text_embeddings(path, vocab, dim)
    if fmt == "binary":
        return _load_binary_embeddings(path, vocab, dim)
    raise ConfigError(f"unknown embedding format {fmt!r}; expected 'text' or 'binary'")


def _load_text_embeddings(path, vocab: Vocabulary, dim: int | None) -> EmbeddingTable:
    matrix = None
    found = 0
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                if not values:
                    raise FormatError(f"{path}:{lineno}: record has no vector values")
                dim = len(values)
            if len(values) != dim:
                raise FormatError(
                    f"{path}:{lineno}: expected {dim} values, found {len(values)}"
                )
            if matrix is None:
                matrix = np.zeros((vocab.size, dim))
            idx = vocab.id_of(word)
            if idx == PAD_ID or word in seen:
                continue
            seen.add(word)
            try:
                matrix[idx] = [float(v) for v in values]
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: bad float: {exc}") from None
            found += 1
    if matrix is None:
        if dim is None:
            raise FormatError(f"{path}: empty embedding file and no dimension given")
        matrix = np.zeros((vocab.size, dim))
    coverage = found / max(vocab.size - 1, 1)
    return EmbeddingTable(matrix=matrix, dim=dim, coverage=coverage)


def _load_binary_embeddings(path, vocab: Vocabulary, dim: int | None) -> EmbeddingTable:
    blob = Path(path).read_bytes()
    newline = blob.find(b"\n")
    if newline < 0:
        raise FormatError(f"{path}: missing header line")
    header = blob[:newline].split()
    if len(header) != 2:
        raise FormatError(f"{path}: header must be 'count dim', got {blob[:newline]!r}")
    try:
        count, file_dim = int(header[0]), int(header[1])
    except ValueError:
        raise FormatError(f"{path}: non-integer header fields {header!r}") from None
    if dim is not None and file_dim != dim:
        raise FormatError(f"{path}: file declares dimension {file_dim}, expected {dim}")
    dim = file_dim
    matrix = np.zeros((vocab.size, dim))
    vec_bytes = 4 * dim
    pos = newline + 1
    found = 0
    seen = set()
    for record in range(count):
        # Some writers put a newline between records; tolerate it.
        while pos < len(blob) and blob[pos : pos + 1] == b"\n":
            pos += 1
        space = blob.find(b" ", pos)
        if space < 0:
            raise FormatError(f"{path}: offset {pos}: record {record} has no word terminator")
        try:
            word = blob[pos:space].decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"{path}: offset {pos}: bad word bytes: {exc}") from None
        pos = space + 1
        if pos + vec_bytes > len(blob):
            raise FormatError(f"{path}: offset {pos}: record {record} truncated")
        vec = np.frombuffer(blob, dtype="<f4", count=dim, offset=pos).astype(np.float64)
        pos += vec_bytes
        idx = vocab.id_of(word)
        if idx != PAD_ID and word not in seen:
            seen.add(word)
            matrix[idx] = vec
            found += 1
    coverage = found / max(vocab.size - 1, 1)
    return EmbeddingTable(matrix=matrix, dim=dim, coverage=coverage)


def make_embeddings(
    fmt: str,
    vocab: Vocabulary,
    dim: int | None,
    path=None,
    rng: np.random.Generator | None = None,
) -> EmbeddingTable:
    """Dispatch: fmt 'random' draws seeded vectors, 'text'/'binary' load a file."""
    if fmt == "random":
        if dim is None:
            raise ConfigError("random embeddings require an explicit dimension")
        if rng is None:
            raise ConfigError("random embeddings require an RNG")
        return random_embeddings(vocab, dim, rng)
    if fmt in ("text", "binary"):
        if path is None:
            raise ConfigError(f"embedding format {fmt!r} requires embeddings.path")
        return load_embeddings(path, fmt, vocab, dim)
    raise ConfigError(
        f"unknown embedding format {fmt!r}; expected 'random', 'text', or 'binary'"
    )


# ---------------------------------------------------------------------------
# Datasets
# ---------------------------------------------------------------------------


@dataclass
class Example:
    tokens: list[str]
    label: int


@dataclass
class Dataset:
    """Tokenized examples plus class names and an optional train/test marker."""

    examples: list[Example]
    class_names: list[str]
    split: list[str] | None = None  # aligned with examples; entries "train"/"test"

    def __post_init__(self):
        if not self.examples:
            raise DataError("dataset is empty")
        n_classes = len(self.class_names)
        for i, ex in enumerate(self.examples):
            if not 0 <= ex.label < n_classes:
                raise DataError(
                    f"example {i} has label {ex.label} outside [0, {n_classes})"
                )
        if self.split is not None:
            if len(self.split) != len(self.examples):
                raise DataError("split marker length does not match example count")
            bad = set(self.split) - {"train", "test"}
            if bad:
                raise DataError(f"split marker contains invalid entries {sorted(bad)}")

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def labels(self) -> np.ndarray:
        return np.array([ex.label for ex in self.examples], dtype=np.int64)

    def subset(self, indices) -> "Dataset":
        indices = list(indices)
        return Dataset(
            examples=[self.examples[i] for i in indices],
            class_names=list(self.class_names),
            split=None if self.split is None else [self.split[i] for i in indices],
        )

    def train_test(self) -> tuple["Dataset", "Dataset"]:
        if self.split is None:
            raise DataError("dataset has no predefined train/test split")
        train_idx = [i for i, s in enumerate(self.split) if s == "train"]
        test_idx = [i for i, s in enumerate(self.split) if s == "test"]
        return self.subset(train_idx), self.subset(test_idx)


def load_dataset(path, layout: str) -> Dataset:
    """Read a corpus in one of four layouts.

    tsv: one file, "label TAB text" per line.
    pair-of-files: directory of class files (sorted filenames fix the class
        order), one example per line.
    labeled-prefix: lines like "DESC:manner how did ...", coarse label
        before the colon; a directory of files uses *train*/*test* in the
        filename as the split marker.
    directory-per-class: train/<class>/ and test/<class>/ subdirectories,
        one example per file; classes are the train subdirectories that
        also appear under test, extra train-only directories are skipped.

    Example order is stable: file order (sorted names), then line order.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset path does not exist: {path}")
    if layout == "tsv":
        return _load_tsv(path)
    if layout == "pair-of-files":
        return _load_pair_of_files(path)
    if layout == "labeled-prefix":
        return _load_labeled_prefix(path)
    if layout == "directory-per-class":
        return _load_directory_per_class(path)
    raise ConfigError(f"unknown dataset layout {layout!r}; expected one of {LAYOUTS}")


def _read_lines(path: Path) -> list[str]:
    try:
        text = path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    return [ln for ln in text.splitlines() if ln.strip()]


def _load_tsv(path: Path) -> Dataset:
    if not path.is_file():
        raise DataError(f"tsv layout expects a file, got {path}")
    rows = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        label, sep, text = line.partition("\t")
        if not sep or not label.strip():
            raise DataError(f"{path}:{lineno}: expected 'label TAB text'")
        rows.append((label.strip(), text))
    if not rows:
        raise DataError(f"{path}: empty dataset file")
    class_names = sorted({label for label, _ in rows})
    index = {name: i for i, name in enumerate(class_names)}
    examples = [Example(tokens=tokenize(text), label=index[label]) for label, text in rows]
    return Dataset(examples=examples, class_names=class_names)


def _load_pair_of_files(path: Path) -> Dataset:
    if not path.is_dir():
        raise DataError(f"pair-of-files layout expects a directory, got {path}")
    files = sorted(p for p in path.iterdir() if p.is_file())
    if len(files) < 2:
        raise DataError(f"{path}: need at least two class files, found {len(files)}")
    examples = []
    for label, class_file in enumerate(files):
        lines = _read_lines(class_file)
        if not lines:
            raise DataError(f"{class_file}: empty class file")
        for line in lines:
            examples.append(Example(tokens=tokenize(line), label=label))
    return Dataset(examples=examples, class_names=[p.name for p in files])


def _parse_prefixed(path: Path, lines: list[str]) -> list[tuple[str, str]]:
    rows = []
    for lineno, line in enumerate(lines, start=1):
        head, _, text = line.partition(" ")
        label, sep, _fine = head.partition(":")
        if not sep or not label:
            raise DataError(
                f"{path}:{lineno}: expected a 'LABEL:fine text' line, got {line[:40]!r}"
            )
        rows.append((label, text))
    return rows


def _load_labeled_prefix(path: Path) -> Dataset:
    if path.is_file():
        rows = _parse_prefixed(path, _read_lines(path))
        if not rows:
            raise DataError(f"{path}: empty dataset file")
        split_of = None
        tagged = [(label, text, "train") for label, text in rows]
    else:
        files = sorted(p for p in path.iterdir() if p.is_file())
        tagged = []
        for f in files:
            name = f.name.lower()
            if "train" in name:
                part = "train"
            elif "test" in name:
                part = "test"
            else:
                raise DataError(
                    f"{f}: cannot tell train from test; filename must contain one"
                )
            tagged.extend((label, text, part) for label, text in _parse_prefixed(f, _read_lines(f)))
        if not tagged:
            raise DataError(f"{path}: no examples found")
        split_of = [part for _, _, part in tagged]
        train_labels = {label for label, _, part in tagged if part == "train"}
        test_only = {label for label, _, part in tagged if part == "test"} - train_labels
        if test_only:
            raise DataError(
                f"{path}: classes {sorted(test_only)} appear only in the test split"
            )
    class_names = sorted({label for label, _, _ in tagged})
    index = {name: i for i, name in enumerate(class_names)}
    examples = [Example(tokens=tokenize(text), label=index[label]) for label, text, _ in tagged]
    return Dataset(examples=examples, class_names=class_names, split=split_of)


def _load_directory_per_class(path: Path) -> Dataset:
    if not path.is_dir():
        raise DataError(f"directory-per-class layout expects a directory, got {path}")
    train_dir, test_dir = path / "train", path / "test"
    if train_dir.is_dir():
        train_classes = sorted(p.name for p in train_dir.iterdir() if p.is_dir())
        test_classes = (
            sorted(p.name for p in test_dir.iterdir() if p.is_dir()) if test_dir.is_dir() else []
        )
        unknown = [c for c in test_classes if c not in train_classes]
        if unknown:
            raise DataError(f"{test_dir}: unknown class directories {unknown}")
        class_names = (
            [c for c in train_classes if c in test_classes] if test_classes else train_classes
        )
        if not class_names:
            raise DataError(f"{train_dir}: no class directories found")
        examples, split = [], []
        for part, base, present in (("train", train_dir, True), ("test", test_dir, bool(test_classes))):
            if not present:
                continue
            for label, name in enumerate(class_names):
                class_dir = base / name
                if not class_dir.is_dir():
                    raise DataError(f"{base}: missing class directory {name!r}")
                for f in sorted(p for p in class_dir.iterdir() if p.is_file()):
                    text = f.read_text(encoding="utf-8", errors="replace")
                    if not text.strip():
                        raise DataError(f"{f}: empty example file")
                    examples.append(Example(tokens=tokenize(text), label=label))
                    split.append(part)
        if not examples:
            raise DataError(f"{path}: no examples found")
        marker = split if test_classes else None
        return Dataset(examples=examples, class_names=class_names, split=marker)
    # No train/ subdirectory: the immediate subdirectories are the classes.
    class_dirs = sorted(p for p in path.iterdir() if p.is_dir())
    if not class_dirs:
        raise DataError(f"{path}: no class directories found")
    examples = []
    for label, class_dir in enumerate(class_dirs):
        files = sorted(p for p in class_dir.iterdir() if p.is_file())
        if not files:
            raise DataError(f"{class_dir}: empty class directory")
        for f in files:
            text = f.read_text(encoding="utf-8", errors="replace")
            if not text.strip():
                raise DataError(f"{f}: empty example file")
            examples.append(Example(tokens=tokenize(text), label=label))
    return Dataset(examples=examples, class_names=[p.name for p in class_dirs])


# ---------------------------------------------------------------------------
# Encoded form
# ---------------------------------------------------------------------------


@dataclass
class EncodedDataset:
    """Padded id matrix plus labels, ready for the model."""

    ids: np.ndarray  # (n, max_len) int64
    labels: np.ndarray  # (n,) int64
    class_names: list[str]
    split: list[str] | None = None

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.ids.ndim != 2 or self.ids.shape[0] != self.labels.shape[0]:
            raise DataError(
                f"ids shape {self.ids.shape} does not align with labels shape {self.labels.shape}"
            )

    def __len__(self) -> int:
        return self.ids.shape[0]

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    def subset(self, indices) -> "EncodedDataset":
        indices = np.asarray(list(indices), dtype=np.int64)
        return EncodedDataset(
            ids=self.ids[indices],
            labels=self.labels[indices],
            class_names=list(self.class_names),
            split=None if self.split is None else [self.split[i] for i in indices],
        )

    def train_test(self) -> tuple["EncodedDataset", "EncodedDataset"]:
        if self.split is None:
            raise DataError("dataset has no predefined train/test split")
        train_idx = [i for i, s in enumerate(self.split) if s == "train"]
        test_idx = [i for i, s in enumerate(self.split) if s == "test"]
        return self.subset(train_idx), self.subset(test_idx)


def encode_dataset(dataset: Dataset, vocab: Vocabulary, max_len: int) -> EncodedDataset:
    ids = np.zeros((len(dataset), max_len), dtype=np.int64)
    for i, ex in enumerate(dataset.examples):
        ids[i] = encode(ex.tokens, vocab, max_len)
    return EncodedDataset(
        ids=ids,
        labels=dataset.labels(),
        class_names=list(dataset.class_names),
        split=None if dataset.split is None else list(dataset.split),
    )


def export_vocabulary(vocab: Vocabulary, path) -> str:
    """Write the vocabulary export file; returns its sha256 hex digest."""
    text = vocab.export()
    Path(path).write_text(text, encoding="utf-8")
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_binary_embeddings(path, words: Sequence[str], matrix: np.ndarray) -> None:
    """Writer for the binary embedding format (used by tests and tooling)."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != len(words):
        raise FormatError(
            f"matrix shape {matrix.shape} does not match {len(words)} words"
        )
    dim = matrix.shape[1]
    with open(path, "wb") as fh:
        fh.write(f"{len(words)} {dim}\n".encode("utf-8"))
        for word, row in zip(words, matrix):
            fh.write(word.encode("utf-8"))
            fh.write(b" ")
            fh.write(struct.pack(f"<{dim}f", *row.astype(np.float32)))

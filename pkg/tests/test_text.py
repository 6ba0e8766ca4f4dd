"""Text pipeline: tokenizer, vocabulary, embeddings, and dataset layouts."""

import numpy as np
import pytest

import synthdata
from scnn.errors import ConfigError, DataError, FormatError
from scnn.text import (
    Dataset,
    EmbeddingTable,
    Example,
    PAD_ID,
    Vocabulary,
    build_vocab,
    decode,
    encode,
    encode_dataset,
    export_vocabulary,
    load_dataset,
    load_embeddings,
    make_embeddings,
    random_embeddings,
    tokenize,
    write_binary_embeddings,
)

# ---------------------------------------------------------------------------
# tokenizer and vocabulary
# ---------------------------------------------------------------------------


def test_tokenize_lowercases_and_isolates_punctuation():
    assert tokenize("The Movie, great!") == ["the", "movie", ",", "great", "!"]
    assert tokenize("don't STOP") == ["don", "'", "t", "stop"]
    assert tokenize("") == []
    assert tokenize("  \n\t ") == []
    assert tokenize("a  b") == ["a", "b"]


def test_vocabulary_ids_are_dense_and_pad_reserved():
    vocab = Vocabulary(["movie", "great", "bad"])
    assert vocab.size == 4
    assert vocab.id_of("movie") == 1
    assert vocab.id_of("bad") == 3
    assert vocab.id_of("unseen") == PAD_ID
    assert vocab.word_of(0) == "<pad>"
    assert "great" in vocab and "unseen" not in vocab
    with pytest.raises(DataError):
        vocab.word_of(4)
    with pytest.raises(DataError):
        Vocabulary(["a", "a"])
    with pytest.raises(DataError):
        Vocabulary(["a", ""])


def test_build_vocab_orders_by_frequency_then_word():
    corpus = [["b", "b", "a", "c"], ["a", "b", "c"], ["c"]]
    vocab = build_vocab(corpus)
    # b and c both occur 3 times; b wins the tie lexicographically
    assert [vocab.word_of(i) for i in range(1, 4)] == ["b", "c", "a"]


def test_build_vocab_caps_size_including_pad_slot():
    corpus = [[f"w{i}" for i in range(10)]]
    vocab = build_vocab(corpus, max_size=4)
    assert vocab.size == 4  # pad + 3 real words
    assert vocab.id_of("w0") == 1
    assert vocab.id_of("w5") == PAD_ID  # fell below the cap


def test_vocabulary_export_round_trip():
    vocab = build_vocab([["x", "y", "x"]])
    text = vocab.export()
    assert text == "x\t1\ny\t2\n"
    again = Vocabulary.from_export(text)
    assert again.id_of("y") == 2
    assert again.sha256 == vocab.sha256
    with pytest.raises(FormatError):
        Vocabulary.from_export("x\t2\n")  # ids must start at 1
    with pytest.raises(FormatError):
        Vocabulary.from_export("no-tab-line\n")


def test_encode_truncates_pads_and_zeroes_oov():
    vocab = Vocabulary(["a", "b"])
    ids = encode(["a", "mystery", "b"], vocab, max_len=5)
    np.testing.assert_array_equal(ids, [1, 0, 2, 0, 0])
    assert ids.dtype == np.int64
    np.testing.assert_array_equal(encode(["b", "a", "b"], vocab, max_len=2), [2, 1])
    assert decode([1, 0, 2, 0], vocab) == ["a", "b"]


def test_export_vocabulary_writes_file_and_hash(tmp_path):
    vocab = Vocabulary(["a", "b"])
    out = tmp_path / "vocab.txt"
    digest = export_vocabulary(vocab, out)
    assert digest == vocab.sha256
    assert out.read_text() == "a\t1\nb\t2\n"


# ---------------------------------------------------------------------------
# embeddings
# ---------------------------------------------------------------------------


def test_random_embeddings_unit_variance_and_zero_pad():
    vocab = Vocabulary([f"w{i}" for i in range(4000)])
    rng = np.random.default_rng(12)
    table = random_embeddings(vocab, 25, rng)
    assert table.matrix.shape == (4001, 25)
    np.testing.assert_array_equal(table.matrix[PAD_ID], 0.0)
    real = table.matrix[1:]
    assert abs(real.mean()) < 5e-3
    assert abs(real.std() - 1.0) < 5e-3
    assert table.coverage is None


def test_embedding_table_validates_pad_row():
    with pytest.raises(FormatError):
        EmbeddingTable(matrix=np.ones((3, 2)), dim=2)
    with pytest.raises(FormatError):
        EmbeddingTable(matrix=np.zeros((3, 2)), dim=4)


def test_text_embeddings_load_and_cover(tmp_path):
    vocab = Vocabulary(["apple", "pear", "plum"])
    path = tmp_path / "vecs.txt"
    path.write_text(
        "apple 1.0 2.0 3.0\n"
        "mango 9.0 9.0 9.0\n"  # not in the vocabulary: ignored
        "plum 4.0 5.0 6.0\n"
        "apple 7.0 7.0 7.0\n"  # duplicate: first occurrence wins
    )
    table = load_embeddings(path, "text", vocab)
    assert table.dim == 3
    np.testing.assert_array_equal(table.matrix[vocab.id_of("apple")], [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(table.matrix[vocab.id_of("plum")], [4.0, 5.0, 6.0])
    np.testing.assert_array_equal(table.matrix[vocab.id_of("pear")], 0.0)  # absent
    assert table.coverage == pytest.approx(2 / 3)


def test_text_embeddings_format_errors(tmp_path):
    vocab = Vocabulary(["a"])
    ragged = tmp_path / "ragged.txt"
    ragged.write_text("a 1.0 2.0\nb 3.0\n")
    with pytest.raises(FormatError, match="ragged.txt:2"):
        load_embeddings(ragged, "text", vocab)

    bad = tmp_path / "bad.txt"
    bad.write_text("a 1.0 oops\n")
    with pytest.raises(FormatError, match="bad.txt:1"):
        load_embeddings(bad, "text", vocab)

    empty = tmp_path / "empty.txt"
    empty.write_text("")
    with pytest.raises(FormatError):
        load_embeddings(empty, "text", vocab)
    # with an explicit dimension an empty file is a legal all-zero table
    table = load_embeddings(empty, "text", vocab, dim=4)
    np.testing.assert_array_equal(table.matrix, np.zeros((2, 4)))


def test_binary_embeddings_round_trip(tmp_path):
    vocab = Vocabulary(["alpha", "beta", "gamma"])
    rng = np.random.default_rng(3)
    vectors = rng.standard_normal((2, 5)).astype(np.float32)
    path = tmp_path / "vecs.bin"
    write_binary_embeddings(path, ["alpha", "gamma"], vectors)
    table = load_embeddings(path, "binary", vocab)
    assert table.dim == 5
    # float32 values widen exactly to float64
    np.testing.assert_array_equal(table.matrix[vocab.id_of("alpha")], vectors[0].astype(np.float64))
    np.testing.assert_array_equal(table.matrix[vocab.id_of("gamma")], vectors[1].astype(np.float64))
    np.testing.assert_array_equal(table.matrix[vocab.id_of("beta")], 0.0)
    assert table.coverage == pytest.approx(2 / 3)


def test_binary_embeddings_tolerate_record_newlines(tmp_path):
    vocab = Vocabulary(["aa", "bb"])
    vec = np.arange(3, dtype="<f4")
    path = tmp_path / "nl.bin"
    with open(path, "wb") as fh:
        fh.write(b"2 3\n")
        fh.write(b"aa " + vec.tobytes() + b"\n")  # newline after the record
        fh.write(b"bb " + (vec + 1).astype("<f4").tobytes())
    table = load_embeddings(path, "binary", vocab)
    np.testing.assert_array_equal(table.matrix[1], [0.0, 1.0, 2.0])
    np.testing.assert_array_equal(table.matrix[2], [1.0, 2.0, 3.0])


def test_binary_embeddings_format_errors(tmp_path):
    vocab = Vocabulary(["aa"])
    no_header = tmp_path / "nohdr.bin"
    no_header.write_bytes(b"justbytes")
    with pytest.raises(FormatError, match="header"):
        load_embeddings(no_header, "binary", vocab)

    bad_header = tmp_path / "badhdr.bin"
    bad_header.write_bytes(b"two words three\n")
    with pytest.raises(FormatError):
        load_embeddings(bad_header, "binary", vocab)

    truncated = tmp_path / "trunc.bin"
    truncated.write_bytes(b"1 4\naa " + b"\x00" * 7)  # needs 16 payload bytes
    with pytest.raises(FormatError, match="truncated"):
        load_embeddings(truncated, "binary", vocab)

    wrong_dim = tmp_path / "dim.bin"
    vec = np.zeros(3, dtype="<f4")
    with open(wrong_dim, "wb") as fh:
        fh.write(b"1 3\naa " + vec.tobytes())
    with pytest.raises(FormatError, match="dimension"):
        load_embeddings(wrong_dim, "binary", vocab, dim=8)


def test_make_embeddings_dispatch():
    vocab = Vocabulary(["a"])
    rng = np.random.default_rng(0)
    table = make_embeddings("random", vocab, 4, rng=rng)
    assert table.matrix.shape == (2, 4)
    with pytest.raises(ConfigError):
        make_embeddings("random", vocab, None, rng=rng)
    with pytest.raises(ConfigError):
        make_embeddings("random", vocab, 4)
    with pytest.raises(ConfigError):
        make_embeddings("text", vocab, 4)  # no path
    with pytest.raises(ConfigError):
        make_embeddings("word2vec", vocab, 4)


# ---------------------------------------------------------------------------
# dataset layouts
# ---------------------------------------------------------------------------


def test_tsv_layout(tmp_path):
    rows = synthdata.sentiment_corpus(40, seed=1)
    path = tmp_path / "data.tsv"
    synthdata.write_tsv(path, rows)
    ds = load_dataset(path, "tsv")
    assert len(ds) == 40
    assert ds.class_names == ["neg", "pos"]  # sorted label names
    assert ds.split is None
    assert ds.examples[0].tokens == tokenize(rows[0][0])
    assert [ex.label for ex in ds.examples] == [label for _, label in rows]


def test_tsv_layout_rejects_malformed_lines(tmp_path):
    path = tmp_path / "broken.tsv"
    path.write_text("pos\tfine text\nno tab here\n")
    with pytest.raises(DataError, match="broken.tsv:2"):
        load_dataset(path, "tsv")


def test_pair_of_files_layout(tmp_path):
    rows = synthdata.sentiment_corpus(30, seed=2)
    d = tmp_path / "rt"
    synthdata.write_pair_of_files(d, rows)
    ds = load_dataset(d, "pair-of-files")
    assert len(ds) == 30
    # sorted filenames fix class order: rt.neg -> 0, rt.pos -> 1
    assert ds.class_names == ["rt.neg", "rt.pos"]
    neg = [ex for ex in ds.examples if ex.label == 0]
    assert len(neg) == sum(1 for _, label in rows if label == 0)


def test_pair_of_files_rejects_empty_class_file(tmp_path):
    d = tmp_path / "rt"
    d.mkdir()
    (d / "rt.neg").write_text("some text\n")
    (d / "rt.pos").write_text("")
    with pytest.raises(DataError, match="empty"):
        load_dataset(d, "pair-of-files")


def test_labeled_prefix_single_file(tmp_path):
    rows = synthdata.question_corpus(24, seed=3)
    d = tmp_path / "trec"
    synthdata.write_labeled_prefix(d, rows, rows[:6])
    ds = load_dataset(d / "train_5500.label", "labeled-prefix")
    assert ds.split is None
    assert ds.class_names == sorted({name for _, name, _ in rows})
    # the "CLASS:fine" head token is dropped from the text
    first_text = rows[0][0]
    assert ds.examples[0].tokens == tokenize(first_text)


def test_labeled_prefix_directory_sets_split(tmp_path):
    rows = synthdata.question_corpus(36, seed=4)
    d = tmp_path / "trec"
    synthdata.write_labeled_prefix(d, rows[:30], rows[30:])
    ds = load_dataset(d, "labeled-prefix")
    assert ds.split is not None
    assert ds.split.count("train") == 30
    assert ds.split.count("test") == 6
    train, test = ds.train_test()
    assert len(train) == 30 and len(test) == 6
    assert train.class_names == ds.class_names


def test_labeled_prefix_rejects_test_only_classes(tmp_path):
    d = tmp_path / "trec"
    d.mkdir()
    (d / "train_1.label").write_text("LOC:city where is it\n")
    (d / "test_1.label").write_text("NUM:count how many\n")
    with pytest.raises(DataError):
        load_dataset(d, "labeled-prefix")


def test_directory_per_class_layout(tmp_path):
    rows = synthdata.sentiment_corpus(20, seed=5)
    root = tmp_path / "imdb"
    synthdata.write_directory_per_class(
        root, rows[:14], rows[14:], extra_train_dir="unsup"
    )
    ds = load_dataset(root, "directory-per-class")
    assert ds.class_names == ["neg", "pos"]
    assert len(ds) == 20  # the unsup directory contributes nothing
    assert ds.split.count("train") == 14
    assert ds.split.count("test") == 6


def test_directory_per_class_rejects_test_only_class(tmp_path):
    root = tmp_path / "imdb"
    rows = synthdata.sentiment_corpus(8, seed=6)
    synthdata.write_directory_per_class(root, rows[:4], rows[4:])
    extra = root / "test" / "mystery"
    extra.mkdir()
    (extra / "0.txt").write_text("orphan")
    with pytest.raises(DataError, match="mystery"):
        load_dataset(root, "directory-per-class")


def test_load_dataset_errors():
    with pytest.raises(DataError):
        load_dataset("/nonexistent/path", "tsv")
    with pytest.raises(ConfigError):
        load_dataset(".", "zip")


# ---------------------------------------------------------------------------
# Dataset and EncodedDataset contracts
# ---------------------------------------------------------------------------


def _tiny_dataset(split=None):
    examples = [
        Example(tokens=["good", "fun"], label=1),
        Example(tokens=["bad"], label=0),
        Example(tokens=["dull", "slow"], label=0),
    ]
    return Dataset(examples=examples, class_names=["neg", "pos"], split=split)


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(examples=[], class_names=["a"])
    with pytest.raises(DataError):
        Dataset(examples=[Example(tokens=["x"], label=5)], class_names=["a", "b"])
    with pytest.raises(DataError):
        _tiny_dataset(split=["train", "dev", "test"])
    with pytest.raises(DataError):
        _tiny_dataset(split=["train"])
    with pytest.raises(DataError):
        _tiny_dataset().train_test()


def test_encode_dataset_shapes_and_content():
    ds = _tiny_dataset(split=["train", "train", "test"])
    vocab = build_vocab([ex.tokens for ex in ds.examples])
    enc = encode_dataset(ds, vocab, max_len=4)
    assert enc.ids.shape == (3, 4)
    assert enc.ids.dtype == np.int64
    np.testing.assert_array_equal(enc.labels, [1, 0, 0])
    assert enc.class_names == ["neg", "pos"]
    np.testing.assert_array_equal(enc.ids[1], encode(["bad"], vocab, 4))

    train, test = enc.train_test()
    assert len(train) == 2 and len(test) == 1
    np.testing.assert_array_equal(test.ids[0], enc.ids[2])

    sub = enc.subset([2, 0])
    np.testing.assert_array_equal(sub.labels, [0, 1])

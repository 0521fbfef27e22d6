import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from rmc.core import RelationalData
from rmc.ingest import (
    LEUKEMIA2,
    LUNG_CANCER,
    DataFormatError,
    Dataset,
    GenePreprocessSpec,
    gene_preprocess,
    load_matrix,
    planted_coclusters,
    save_matrix,
    select_words_by_mi,
    unit_normalize,
    word_mi_scores,
)


def ds(mat, labels=None):
    return Dataset(RelationalData(np.asarray(mat, dtype=float)), labels)


def test_dense_csv(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2\n3,4\n")
    d = load_matrix(path, "dense-csv")
    np.testing.assert_array_equal(d.matrix.r12, [[1, 2], [3, 4]])
    assert d.truth_labels is None and d.name == "m"


def test_csv_parse_error_has_line_number(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("# header comment\n1,2\n3,x\n")
    with pytest.raises(DataFormatError, match=r"m.csv:3"):
        load_matrix(path, "dense-csv")
    path.write_text("1,2\n3\n")
    with pytest.raises(DataFormatError, match=r":2: expected 2 fields"):
        load_matrix(path, "dense-csv")


def test_negative_entry_named(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1,2,3\n4,-1,6\n")
    with pytest.raises(DataFormatError, match="row 2, column 2"):
        load_matrix(path, "dense-csv")
    mtx = tmp_path / "m.mtx"
    mtx.write_text("%%MatrixMarket matrix coordinate real general\n3 3 2\n1 1 1.0\n3 2 -1.0\n")
    with pytest.raises(DataFormatError, match="row 3, column 2"):
        load_matrix(mtx)


def test_labeled_csv_transposes(tmp_path):
    path = tmp_path / "l.csv"
    path.write_text("1,0,5,0\n0,2,6,1\n3,3,0,1\n")
    d = load_matrix(path, "labeled-csv")
    np.testing.assert_array_equal(d.matrix.r12, [[1, 0, 3], [0, 2, 3], [5, 6, 0]])
    np.testing.assert_array_equal(d.truth_labels, [0, 1, 1])
    path.write_text("1,0,5,0.5\n0,2,6,1\n")
    with pytest.raises(DataFormatError, match=":1: class label"):
        load_matrix(path, "labeled-csv")
    path.write_text("1,0,5,0\n0,-2,6,1\n")
    # sample 2 is column 2 of R12 and feature 2 its row
    with pytest.raises(DataFormatError, match="row 2, column 2"):
        load_matrix(path, "labeled-csv")


def test_matrix_market_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    r12 = sp.random(30, 20, density=0.2, random_state=1, format="csr")
    r12.data = rng.uniform(0, 1e3, r12.nnz) / 7.0
    labels = rng.integers(0, 3, 20)
    d = Dataset(RelationalData(r12), labels, "x")
    save_matrix(d, tmp_path / "x.mtx", labels_path=tmp_path / "x.labels")
    back = load_matrix(tmp_path / "x.mtx", labels_path=tmp_path / "x.labels")
    assert back.matrix.is_sparse
    assert np.array_equal(back.matrix.dense(), d.matrix.dense())
    assert np.array_equal(back.truth_labels, labels)


@pytest.mark.parametrize("fmt", ["dense-csv", "labeled-csv"])
def test_csv_round_trip(tmp_path, fmt):
    d = planted_coclusters(8, 6, 2, 2, noise=0.3, seed=1, kind="gaussian")
    save_matrix(d, tmp_path / "d.csv", fmt)
    back = load_matrix(tmp_path / "d.csv", fmt)
    assert np.array_equal(back.matrix.dense(), d.matrix.dense())
    if fmt == "labeled-csv":
        assert np.array_equal(back.truth_labels, d.truth_labels)


def test_unknown_format(tmp_path):
    with pytest.raises(DataFormatError):
        load_matrix(tmp_path / "a", "parquet")


def test_label_length_checked():
    with pytest.raises(DataFormatError):
        ds(np.ones((3, 3)), [0, 1])


def test_unit_normalize_examples():
    d = unit_normalize(ds([[3.0, 1.0], [4.0, 0.0]]), "samples")
    np.testing.assert_allclose(d.matrix.r12[:, 0], [0.6, 0.8], atol=1e-15)
    np.testing.assert_allclose(np.linalg.norm(d.matrix.r12, axis=0), 1.0, atol=1e-12)
    again = unit_normalize(d, "samples")
    np.testing.assert_allclose(again.matrix.r12, d.matrix.r12, atol=1e-15)
    with pytest.warns(RuntimeWarning):
        z = unit_normalize(ds([[0.0, 1.0], [0.0, 2.0]]), "samples")
    assert np.all(z.matrix.r12[:, 0] == 0)


def test_unit_normalize_features_and_sparse():
    rng = np.random.default_rng(2)
    x = rng.uniform(size=(5, 4))
    dense = unit_normalize(ds(x), "features").matrix.r12
    np.testing.assert_allclose(np.linalg.norm(dense, axis=1), 1.0, atol=1e-12)
    sparse = unit_normalize(Dataset(RelationalData(sp.csr_matrix(x))), "features").matrix
    assert sparse.is_sparse
    np.testing.assert_allclose(sparse.dense(), dense, atol=1e-15)


def brute_word_mi(counts):
    p = counts / counts.sum()
    pw, pd = p.sum(axis=1), p.sum(axis=0)
    out = np.zeros(counts.shape[0])
    for w in range(counts.shape[0]):
        for d in range(counts.shape[1]):
            if p[w, d] > 0:
                out[w] += p[w, d] * np.log(p[w, d] / (pw[w] * pd[d]))
    return out


def test_word_mi_toy_corpus():
    # equal document totals; word 0 is spread evenly, word 1 only in docs 0-1,
    # word 2 leans towards docs 2-3
    counts = np.array([[2, 2, 2, 2], [4, 4, 0, 0], [1, 1, 5, 5]], dtype=float)
    scores = word_mi_scores(counts)
    np.testing.assert_allclose(scores, brute_word_mi(counts), atol=1e-15)
    # word 1: p(w, d) = 1/7 on two documents with p(w) = 2/7, p(d) = 1/4
    assert scores[1] == pytest.approx(2 / 7 * np.log(2.0), abs=1e-15)
    assert scores[0] == pytest.approx(0.0, abs=1e-15)
    assert np.argmax(scores) == 1
    kept = select_words_by_mi(ds(counts), 2)
    # rows keep their original order, and the evenly spread word is the one dropped
    np.testing.assert_array_equal(kept.matrix.r12, counts[[1, 2]])


def test_word_mi_uniform_word_is_zero_and_last():
    # equal document totals, so an evenly spread word is independent of the document
    counts = np.array([[1, 1, 1, 1], [3, 0, 1, 0], [0, 3, 2, 3]], dtype=float)
    scores = word_mi_scores(counts)
    assert scores[0] == pytest.approx(0.0, abs=1e-15)
    assert np.argmin(scores) == 0


def test_select_words_identity_and_errors():
    rng = np.random.default_rng(3)
    counts = rng.integers(0, 5, (6, 5)).astype(float) + 1
    d = ds(counts)
    assert np.array_equal(select_words_by_mi(d, 6).matrix.r12, counts)
    with pytest.raises(ValueError):
        select_words_by_mi(d, 7)


def test_select_words_row_order_independent():
    rng = np.random.default_rng(4)
    counts = rng.integers(0, 6, (10, 8)).astype(float) + 1
    counts[7] = counts[2]  # a tie
    perm = rng.permutation(10)
    a = select_words_by_mi(ds(counts), 4).matrix.r12
    b = select_words_by_mi(ds(counts[perm]), 4).matrix.r12
    key = lambda m: sorted(map(tuple, m))
    assert key(a) == key(b)


def test_sparse_mi_matches_dense():
    rng = np.random.default_rng(5)
    counts = rng.integers(0, 3, (12, 9)).astype(float)
    counts[0, 0] = 1.0
    np.testing.assert_allclose(word_mi_scores(sp.csr_matrix(counts)), word_mi_scores(counts), atol=1e-15)


def test_gene_preprocess_examples():
    x = np.array([
        [50.0, 16000.0, 3000.0],   # clamped to 100, ratio 160, range 15900 -> kept
        [700.0, 700.0, 700.0],     # constant -> dropped
        [100.0, 2000.0, 20000.0],  # clamped to 16000 -> kept
        [1000.0, 1200.0, 1100.0],  # ratio 1.2 -> dropped
    ])
    out = gene_preprocess(ds(x), LEUKEMIA2).matrix.r12
    np.testing.assert_array_equal(out, [[100.0, 16000.0, 3000.0], [100.0, 2000.0, 16000.0]])


def test_gene_preprocess_and_or():
    # ratio 30 passes, range 290 fails
    x = np.array([[10.0, 300.0], [100.0, 16000.0], [100.0, 9000.0]])
    spec = GenePreprocessSpec(0, 16000, 25, 500)
    assert gene_preprocess(ds(x), spec).matrix.n1 == 2
    loose = GenePreprocessSpec(0, 16000, 25, 500, combine="or")
    assert gene_preprocess(ds(x), loose).matrix.n1 == 3


def test_gene_preprocess_all_filtered():
    with pytest.raises(ValueError):
        gene_preprocess(ds(np.full((3, 4), 500.0)), LUNG_CANCER)
    with pytest.raises(ValueError):
        GenePreprocessSpec(10, 10, 1, 1)


@given(st.integers(0, 1000), st.sampled_from(["bernoulli", "gaussian"]))
def test_planted_generator(seed, kind):
    d = planted_coclusters(24, 18, 3, 3, 0.1, seed, kind)
    r12 = d.matrix.r12
    assert r12.min() >= 0
    assert np.all(r12.sum(axis=0) > 0) and np.all(r12.sum(axis=1) > 0)
    assert np.bincount(d.truth_labels).tolist() == [6, 6, 6]
    assert np.bincount(d.feature_labels).tolist() == [8, 8, 8]
    again = planted_coclusters(24, 18, 3, 3, 0.1, seed, kind)
    assert np.array_equal(again.matrix.r12, r12)


def test_planted_noiseless_structure():
    d = planted_coclusters(12, 9, 3, 3, 0.0, seed=0)
    expected = (d.feature_labels[:, None] == d.truth_labels[None, :]).astype(float)
    np.testing.assert_array_equal(d.matrix.r12, expected)

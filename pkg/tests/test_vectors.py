import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.spatial.distance import pdist

from newsregime.vectors import (
    EmbeddingTable,
    VectorFileError,
    VectorTable,
    load_embeddings,
    load_reduced,
    pca_reduce,
    write_vectors,
)


def _write(path, header, rows):
    path.write_text(header + "\n" + "".join(f"{k}\t{' '.join(map(str, v))}\n" for k, v in rows))


class TestLoad:
    def test_three_by_eight(self, tmp_path, rng):
        p = tmp_path / "e.vec"
        _write(p, "dim=8 count=3", [(k, rng.normal(size=8)) for k in "abc"])
        t = load_embeddings(p)
        assert len(t) == 3 and t.dim == 8 and t.keywords == ("a", "b", "c")

    def test_short_row_names_keyword(self, tmp_path):
        p = tmp_path / "e.vec"
        _write(p, "dim=8 count=2", [("good", [0.0] * 8), ("broken", [0.0] * 7)])
        with pytest.raises(VectorFileError, match="broken"):
            load_embeddings(p)

    def test_nan_rejected(self, tmp_path):
        p = tmp_path / "e.vec"
        _write(p, "dim=2 count=1", [("x", ["nan", 1.0])])
        with pytest.raises(VectorFileError, match="NaN"):
            load_embeddings(p)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.vec"
        p.write_text("")
        assert len(load_embeddings(p)) == 0

    def test_bad_header(self, tmp_path):
        p = tmp_path / "e.vec"
        p.write_text("dimension 3\n")
        with pytest.raises(VectorFileError, match="header"):
            load_embeddings(p)

    def test_reduced_dim_check(self, tmp_path):
        p = tmp_path / "r.vec"
        _write(p, "dim=5 count=1", [("x", [1, 2, 3, 4, 5])])
        assert load_reduced(p, 5).dim == 5
        with pytest.raises(VectorFileError):
            load_reduced(p, 3)

    def test_duplicate_last_wins_with_warning(self, tmp_path):
        p = tmp_path / "r.vec"
        _write(p, "dim=1 count=2", [("x", [1.0]), ("y", [2.0]), ("x", [3.0])])
        with pytest.warns(UserWarning, match="duplicate"):
            t = load_reduced(p, 1)
        assert t["x"][0] == 3.0 and len(t) == 2

    def test_table_is_read_only(self):
        t = VectorTable(("a",), np.zeros((1, 2)))
        with pytest.raises(ValueError):
            t.matrix[0, 0] = 1.0

    @settings(max_examples=30)
    @given(arrays(np.float64, (4, 3), elements=st.floats(-1e6, 1e6)))
    def test_write_read_is_bit_exact(self, tmp_path_factory, m):
        p = tmp_path_factory.mktemp("v") / "v.vec"
        t = VectorTable(tuple("abcd"), m)
        write_vectors(t, p)
        back = load_embeddings(p)
        assert back.keywords == t.keywords and np.array_equal(back.matrix, t.matrix)


class TestPca:
    def test_line_in_5d_has_rank_one(self, rng):
        direction = rng.normal(size=5)
        X = np.outer(rng.normal(size=30), direction) + rng.normal(size=5)
        r = pca_reduce(EmbeddingTable(tuple(str(i) for i in range(30)), X), 1)
        # top eigenvector of the brute-force covariance
        C = sum(np.outer(x, x) for x in X - X.mean(0)) / 29
        w, V = np.linalg.eigh(C)
        v = V[:, np.argmax(w)]
        centred = X - X.mean(0)
        proj = centred @ v
        np.testing.assert_allclose(np.abs(r.matrix[:, 0]), np.abs(proj), atol=1e-9)
        assert np.abs(np.outer(proj, v) - centred).max() < 1e-9

    def test_full_rank_preserves_distances(self, rng):
        X = rng.normal(size=(20, 6))
        r = pca_reduce(EmbeddingTable(tuple(map(str, range(20))), X), 6)
        np.testing.assert_allclose(pdist(r.matrix), pdist(X), atol=1e-9)

    def test_identical_rows(self):
        X = np.tile([1.0, 2.0, 3.0], (5, 1))
        r = pca_reduce(EmbeddingTable(tuple("abcde"), X), 2)
        assert np.all(r.matrix == r.matrix[0])

    @pytest.mark.parametrize("m", [0, 4])
    def test_bad_component_count(self, m):
        with pytest.raises(ValueError):
            pca_reduce(EmbeddingTable(("a", "b"), np.eye(2, 3)), m)

    def test_single_row(self):
        with pytest.raises(ValueError):
            pca_reduce(EmbeddingTable(("a",), np.ones((1, 3))), 1)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 30), st.integers(1, 8), st.integers(0, 2**31))
    def test_variance_non_increasing_and_keys_kept(self, n, d, seed):
        X = np.random.default_rng(seed).normal(size=(n, d)) * np.arange(1, d + 1)
        keys = tuple(f"k{i}" for i in range(n))
        r = pca_reduce(EmbeddingTable(keys, X), d)
        var = r.matrix.var(axis=0)
        assert np.all(np.diff(var) <= 1e-9 * max(1.0, var.max()))
        assert r.keywords == keys

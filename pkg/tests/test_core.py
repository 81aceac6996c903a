import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sniht.core import (
    L11,
    L21,
    L22,
    MixedNormIndex,
    UnsupportedNormError,
    as_complex_matrix,
    columns,
    format_support,
    hard_threshold,
    mixed_norm,
    parse_support,
    read_complex_csv,
    restrict,
    row_support,
    rows,
    write_complex_csv,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
# squares of these stay normal
moderate = finite.filter(lambda x: x == 0 or abs(x) > 1e-100)


@st.composite
def complex_matrices(draw, max_rows=8, max_cols=4):
    r = draw(st.integers(1, max_rows))
    c = draw(st.integers(1, max_cols))
    re = draw(arrays(np.float64, (r, c), elements=moderate))
    im = draw(arrays(np.float64, (r, c), elements=moderate))
    return re + 1j * im


class TestMixedNorm:
    def test_single_row_l21(self):
        assert mixed_norm(np.array([[3, 4], [0, 0]]), 2, 1) == 5.0

    def test_single_row_l11(self):
        assert mixed_norm(np.array([[3, 4], [0, 0]]), 1, 1) == 7.0

    def test_identity_frobenius(self):
        assert mixed_norm(np.eye(2), 2, 2) == pytest.approx(np.sqrt(2), rel=1e-15)

    def test_l12(self):
        # (sum_i ||s_i||_1^2)^(1/2)
        assert mixed_norm(np.array([[1, 1j], [3, 0]]), 1, 2) == pytest.approx(np.sqrt(4 + 9))

    def test_rejects_other_orders(self):
        with pytest.raises(ValueError):
            mixed_norm(np.ones((2, 2)), 3, 1)

    @given(complex_matrices(), st.sampled_from([1, 2]))
    def test_equal_orders_are_entrywise(self, S, p):
        expected = np.sum(np.abs(S.ravel()) ** p) ** (1 / p)
        assert mixed_norm(S, p, p) == pytest.approx(expected, rel=1e-12, abs=1e-300)

    @given(complex_matrices(), moderate, moderate, st.sampled_from([(2, 2), (1, 1), (2, 1), (1, 2)]))
    def test_absolute_homogeneity(self, S, a, b, pq):
        c = a + 1j * b
        assert mixed_norm(c * S, *pq) == pytest.approx(abs(c) * mixed_norm(S, *pq), rel=1e-12, abs=1e-300)


class TestRowSupport:
    def test_example(self):
        S = np.array([[0, 0], [1, 0], [0, 2j]])
        assert (row_support(S) + 1).tolist() == [2, 3]

    def test_zero(self):
        assert row_support(np.zeros((3, 2))).size == 0

    def test_full(self):
        assert row_support(np.ones((2, 2))).tolist() == [0, 1]


class TestHardThreshold:
    def test_keeps_largest_row(self):
        out = hard_threshold(np.array([[3, 0], [1, 1]]), 1)
        np.testing.assert_array_equal(out.matrix, [[3, 0], [0, 0]])
        assert out.support.tolist() == [0]

    def test_K_equals_p_is_identity(self):
        S = np.array([[1, 2j], [0, 0], [3, 0]])
        out = hard_threshold(S, 3)
        np.testing.assert_array_equal(out.matrix, S)
        assert out.support.tolist() == row_support(S).tolist()

    def test_tie_breaks_by_index(self):
        S = np.array([[2, 0], [0, 2j], [1, 0]])
        assert hard_threshold(S, 1).support.tolist() == [0]

    def test_K_too_large(self):
        with pytest.raises(ValueError):
            hard_threshold(np.ones((2, 2)), 3)

    def test_K_zero(self):
        out = hard_threshold(np.ones((2, 2)), 0)
        assert not out.matrix.any() and out.support.size == 0

    @given(complex_matrices(), st.data())
    def test_idempotent_and_sparse(self, S, data):
        K = data.draw(st.integers(0, S.shape[0]))
        once = hard_threshold(S, K)
        twice = hard_threshold(once.matrix, K)
        np.testing.assert_array_equal(once.matrix, twice.matrix)
        assert once.support.size <= K
        assert once.support.tolist() == row_support(once.matrix).tolist()

    @settings(max_examples=60)
    @given(complex_matrices(max_rows=8, max_cols=3), st.data())
    def test_best_rowsparse_approximation(self, S, data):
        K = data.draw(st.integers(0, min(3, S.shape[0])))
        best = min(
            np.linalg.norm(S - restrict(S, list(g)))
            for g in itertools.combinations(range(S.shape[0]), K)
        )
        got = np.linalg.norm(S - hard_threshold(S, K).matrix)
        assert got <= best * (1 + 1e-12) + 1e-300


class TestRestrict:
    def test_empty_set(self):
        assert not restrict(np.ones((2, 2)), []).any()

    def test_full_set(self):
        S = np.array([[1, 2], [3, 4]])
        np.testing.assert_array_equal(restrict(S, [0, 1]), S)

    def test_example(self):
        np.testing.assert_array_equal(restrict(np.array([[1, 1], [2, 2]]), [1]), [[0, 0], [2, 2]])

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            restrict(np.ones((2, 2)), [2])

    def test_companions(self):
        A = np.arange(12).reshape(3, 4)
        np.testing.assert_array_equal(columns(A, [1, 3]), A[:, [1, 3]])
        np.testing.assert_array_equal(rows(A, [2]), A[[2]])
        with pytest.raises(IndexError):
            columns(A, [4])


class TestMixedNormIndex:
    @pytest.mark.parametrize("text, expected", [("2,1", L21), ("(1,1)", L11), ("22", L22), (" 2, 2 ", L22)])
    def test_parse(self, text, expected):
        assert MixedNormIndex.parse(text) == expected

    def test_l12_unsupported(self):
        idx = MixedNormIndex(1, 2)
        assert not idx.supported
        with pytest.raises(UnsupportedNormError):
            idx.require_supported()

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            MixedNormIndex(3, 1)


class TestMatrixIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
        write_complex_csv(tmp_path / "a.csv", A)
        np.testing.assert_array_equal(read_complex_csv(tmp_path / "a.csv"), A)

    def test_layout(self, tmp_path):
        write_complex_csv(tmp_path / "a.csv", np.array([[1 + 2j, 3 - 4j]]))
        assert (tmp_path / "a.csv").read_text().strip() == "1,2,3,-4"

    def test_single_column_file(self, tmp_path):
        (tmp_path / "y.csv").write_text("1,0\n0,1\n")
        np.testing.assert_array_equal(read_complex_csv(tmp_path / "y.csv"), [[1], [1j]])

    def test_odd_columns_rejected(self, tmp_path):
        (tmp_path / "b.csv").write_text("1,2,3\n")
        with pytest.raises(ValueError):
            read_complex_csv(tmp_path / "b.csv")

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            as_complex_matrix([[np.nan]])

    def test_support_format(self):
        assert format_support([4, 0, 2]) == "1 3 5"
        assert parse_support("1 3 5").tolist() == [0, 2, 4]
        assert format_support([]) == ""

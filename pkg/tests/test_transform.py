import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wl1alsh import (
    MAX_M,
    DimensionError,
    ParameterError,
    PrefixTable,
    WeightVector,
    build_prefix_table,
    fast_projection,
    materialize_data_transform,
    materialize_query_transform,
    unary_encode,
    weighted_manhattan,
)
from wl1alsh.transform import check_M, prefix_rows, trig_pair


class TestUnary:
    def test_examples(self):
        assert unary_encode([2, 0], 3).tolist() == [1, 1, 0, 0, 0, 0]
        assert unary_encode([0, 3], 3).tolist() == [0, 0, 0, 1, 1, 1]

    def test_hamming_is_l1(self, rng):
        for _ in range(50):
            a, b = rng.integers(0, 9, size=(2, 5))
            assert np.sum(unary_encode(a, 8) != unary_encode(b, 8)) == np.abs(a - b).sum()

    @pytest.mark.parametrize("bad", [[4, 0], [-1, 0], [0.5, 1]])
    def test_rejects_off_grid(self, bad):
        with pytest.raises(ParameterError):
            unary_encode(bad, 3)


class TestTransforms:
    def test_trig_pair(self):
        assert trig_pair(0) == (1.0, 0.0)
        assert trig_pair(1) == (0.0, 1.0)
        with pytest.raises(ParameterError):
            trig_pair(2)

    def test_data_examples(self):
        assert materialize_data_transform([1], 2).tolist() == [0, 1, 1, 0]
        assert materialize_data_transform([0], 2).tolist() == [1, 1, 0, 0]

    def test_query_examples(self):
        assert materialize_query_transform([2], [2.0], 2).tolist() == [0, 0, 2, 2]
        assert materialize_query_transform([0], [-1.0], 1).tolist() == [-1, 0]

    @settings(max_examples=300, deadline=None)
    @given(st.data(), st.integers(1, 8), st.integers(1, 16))
    def test_inner_product_identity_and_norms(self, data, d, M):
        pt = st.lists(st.integers(0, M), min_size=d, max_size=d)
        o, q = data.draw(pt), data.draw(pt)
        w = WeightVector(data.draw(st.lists(st.floats(-3, 3), min_size=d, max_size=d).filter(any)))
        P = materialize_data_transform(o, M)
        Q = materialize_query_transform(q, w, M)
        lhs = weighted_manhattan(o, q, w)
        rhs = M * w.sum_w - float(P @ Q)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, w.sum_abs_w * M)
        assert P @ P == M * d
        assert Q @ Q == pytest.approx(M * w.sum_sq_w, rel=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            materialize_query_transform([1, 2], [1.0], 3)


class TestPrefixTable:
    def test_example_rows(self):
        t = build_prefix_table([[1, 2, 3], [4, 5, 6]], M=3, d=1)
        assert t.rows.tolist() == [[6, 5, 3, 0], [0, 4, 9, 15]]
        assert t.collapsed.tolist() == [[6, 9, 12, 15]]

    def test_projection_examples(self):
        t = build_prefix_table([[1, 2, 3], [4, 5, 6]], M=3, d=1)
        a = np.array([1, 2, 3, 4, 5, 6], dtype=float)
        # oracle: explicit dot product against the materialized vectors
        assert a @ materialize_data_transform([2], 3) == 12.0
        assert a @ materialize_query_transform([1], [2.0], 3) == 18.0
        assert fast_projection(t, [2]) == 12.0
        assert fast_projection(t, [1], [2.0]) == 18.0

    def test_flat_and_row_inputs_agree(self, rng):
        raw = rng.normal(size=(6, 5))
        assert build_prefix_table(raw, 5, 3) == build_prefix_table(raw.ravel(), 5, 3)

    def test_wrong_draw_count(self):
        with pytest.raises(ParameterError):
            build_prefix_table(np.zeros(7), 2, 2)

    def test_batched_rows_match_single(self, rng):
        raw = rng.normal(size=(4, 6, 5))
        batched = prefix_rows(raw)
        for j in range(4):
            assert np.array_equal(batched[j], prefix_rows(raw[j]))

    def test_immutable(self, rng):
        t = build_prefix_table(rng.normal(size=(2, 3)), 3, 1)
        with pytest.raises(ValueError):
            t.rows[0, 0] = 1.0
        assert t.d == 1 and t.M == 3

    def test_bad_shape(self):
        with pytest.raises(ParameterError):
            PrefixTable(np.zeros((3, 4)))

    @settings(max_examples=150, deadline=None)
    @given(st.data(), st.integers(1, 6), st.integers(1, 12), st.integers(0, 2**32 - 1))
    def test_fast_path_matches_materialized(self, data, d, M, seed):
        raw = np.random.default_rng(seed).normal(size=(2 * d, M))
        t = build_prefix_table(raw, M, d)
        x = data.draw(st.lists(st.integers(0, M), min_size=d, max_size=d))
        w = data.draw(st.lists(st.floats(-3, 3), min_size=d, max_size=d).filter(any))
        a = raw.ravel()
        assert fast_projection(t, x) == pytest.approx(a @ materialize_data_transform(x, M), abs=1e-9)
        assert fast_projection(t, x, w) == pytest.approx(a @ materialize_query_transform(x, w, M), abs=1e-9)


class TestCheckM:
    def test_cap_message(self):
        with pytest.raises(ParameterError, match="smaller t"):
            check_M(MAX_M + 1)
        assert check_M(MAX_M) == MAX_M

    @pytest.mark.parametrize("bad", [0, -3, 2.5])
    def test_invalid(self, bad):
        with pytest.raises(ParameterError):
            check_M(bad)

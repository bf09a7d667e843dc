import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boi.core import (
    BoiParams,
    RankedResult,
    VectorSet,
    dense_vector,
    l2_distance,
    pairwise_distances,
    rank_by_distance,
)


class TestL2Distance:
    def test_identity(self):
        assert l2_distance((0.0, 0.0), (0.0, 0.0)) == 0.0

    def test_3_4_5_triangle(self):
        assert l2_distance((0.0, 0.0), (3.0, 4.0)) == 5.0

    def test_hand_evaluated(self):
        # sqrt((4-1)^2 + (6-2)^2 + (3-3)^2) = sqrt(9 + 16 + 0) = 5
        assert l2_distance((1.0, 2.0, 3.0), (4.0, 6.0, 3.0)) == 5.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            l2_distance((1.0, 2.0), (1.0, 2.0, 3.0))

    def test_symmetric(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a = rng.standard_normal(8).astype(np.float32)
            b = rng.standard_normal(8).astype(np.float32)
            assert l2_distance(a, b) == l2_distance(b, a)

    def test_zero_iff_equal(self):
        rng = np.random.default_rng(1)
        a = rng.standard_normal(16).astype(np.float32)
        assert l2_distance(a, a) == 0.0
        b = a.copy()
        b[3] += 1e-3
        assert l2_distance(a, b) > 0.0

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            l2_distance((np.nan, 0.0), (0.0, 0.0))


finite_components = st.floats(
    min_value=-1e4, max_value=1e4, allow_nan=False, width=32
)


@given(
    st.integers(2, 8).flatmap(
        lambda d: st.tuples(
            st.lists(finite_components, min_size=d, max_size=d),
            st.lists(finite_components, min_size=d, max_size=d),
            st.lists(finite_components, min_size=d, max_size=d),
        )
    )
)
@settings(max_examples=200, deadline=None)
def test_triangle_inequality(triple):
    a, b, c = triple
    ac = l2_distance(a, c)
    ab = l2_distance(a, b)
    bc = l2_distance(b, c)
    assert ac <= ab + bc + 1e-6 * max(ac, ab + bc, 1.0)


class TestDenseVector:
    def test_basic(self):
        v = dense_vector([1.0, 2.0])
        assert v.dtype == np.float32 and v.shape == (2,)

    @pytest.mark.parametrize("bad", [[], [[1.0, 2.0]], [1.0, np.inf], [np.nan]])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            dense_vector(bad)


class TestVectorSet:
    def test_ids_are_positions(self):
        vs = VectorSet(np.arange(6, dtype=np.float32).reshape(3, 2))
        assert vs.n == 3 and vs.dim == 2 and len(vs) == 3
        assert np.array_equal(vs.vectors[1], [2.0, 3.0])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            VectorSet(np.array([[1.0, np.inf]], dtype=np.float32))

    def test_rejects_1d(self):
        with pytest.raises(ValueError):
            VectorSet(np.zeros(4, dtype=np.float32))

    def test_immutable(self):
        vs = VectorSet(np.zeros((2, 2), dtype=np.float32))
        with pytest.raises(ValueError):
            vs.vectors[0, 0] = 1.0

    def test_doubles_cached_and_exact(self):
        vs = VectorSet(np.array([[1.5, -2.25]], dtype=np.float32))
        d = vs.doubles()
        assert d.dtype == np.float64
        assert np.array_equal(d, vs.vectors.astype(np.float64))
        assert vs.doubles() is d

    def test_empty(self):
        vs = VectorSet(np.empty((0, 0), dtype=np.float32))
        assert vs.n == 0


class TestBoiParams:
    def test_defaults_match_reference_configuration(self):
        p = BoiParams()
        assert p.num_tables == 100
        assert p.hash_bits == 8 and p.num_buckets == 256
        assert p.probe_radius == 1
        assert p.shortlist_size == 250
        assert p.initial_probe_count == 10
        assert p.schedule == "sublinear"
        assert p.linear_step == 40
        assert p.sublinear_step == 25

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"hash_bits": 0},
            {"hash_bits": 31},
            {"shortlist_size": 0},
            {"num_tables": 0},
            {"probe_radius": -1},
            {"initial_probe_count": 256},  # > 2**8 - 1
            {"schedule": "exponential"},
            {"linear_step": 0},
            {"seed": -1},
            {"seed": 2**64},
        ],
    )
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            BoiParams(**kwargs)

    def test_gamma0_bound_follows_bits(self):
        BoiParams(hash_bits=2, initial_probe_count=3)
        with pytest.raises(ValueError):
            BoiParams(hash_bits=2, initial_probe_count=4)


class TestRankedResult:
    def test_entries(self):
        r = RankedResult(np.array([4, 2]), np.array([0.5, 1.5]))
        assert r.entries == [(4, 0.5), (2, 1.5)]
        assert len(r) == 2

    def test_rejects_decreasing_distances(self):
        with pytest.raises(ValueError):
            RankedResult(np.array([0, 1]), np.array([2.0, 1.0]))

    def test_rejects_duplicate_ids(self):
        with pytest.raises(ValueError):
            RankedResult(np.array([3, 3]), np.array([1.0, 1.0]))

    def test_empty(self):
        r = RankedResult.empty(probe_count=7)
        assert len(r) == 0 and r.probe_count == 7


class TestRankByDistance:
    def test_matches_sorted_oracle_with_ties(self):
        rng = np.random.default_rng(2)
        for trial in range(30):
            m = int(rng.integers(1, 40))
            ids = rng.permutation(100)[:m].astype(np.int64)
            # coarse grid forces distance ties
            dists = rng.integers(0, 4, size=m).astype(np.float64)
            k = int(rng.integers(1, m + 1))
            oracle = sorted(zip(dists, ids))[:k]
            got_ids, got_d = rank_by_distance(ids, dists, k)
            assert [(d, i) for d, i in zip(got_d, got_ids)] == oracle

    def test_k_larger_than_m(self):
        ids, d = rank_by_distance(np.array([5, 1]), np.array([2.0, 1.0]), 10)
        assert list(ids) == [1, 5]

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            rank_by_distance(np.array([0]), np.array([0.0]), 0)


def test_pairwise_distances_subset_consistent():
    # gathering rows then measuring equals measuring then gathering, bitwise
    rng = np.random.default_rng(3)
    X = rng.standard_normal((64, 12)).astype(np.float32)
    q = rng.standard_normal(12).astype(np.float32)
    full = pairwise_distances(X, q)
    idx = rng.permutation(64)[:20]
    sub = pairwise_distances(X[idx], q)
    assert np.array_equal(full[idx], sub)

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boi.core import BoiParams, VectorSet
from boi.hashing import (
    ProjectionTable,
    flip_masks,
    hash_codes,
    hash_codes_all,
    hash_vector,
    insert_all,
    make_tables,
    neighbor_codes,
    neighbor_codes_with_distance,
    occupancy_summary,
)


def table_from_matrix(rows, table_index=0) -> ProjectionTable:
    proj = np.asarray(rows, dtype=np.float32)
    t = ProjectionTable(
        projections=proj,
        table_index=table_index,
        bucket_offsets=np.zeros((1 << proj.shape[0]) + 1, dtype=np.int64),
        bucket_members=np.empty(0, dtype=np.int32),
    )
    return t


class TestMakeTables:
    def test_reference_shape(self):
        # 100 tables of 8x128 projections and 256 empty buckets
        params = BoiParams(num_tables=100, hash_bits=8, seed=9)
        tables = make_tables(params, 128)
        assert len(tables) == 100
        for t in tables:
            assert t.projections.shape == (8, 128)
            assert t.num_buckets == 256
            assert t.size == 0
            assert np.all(t.bucket_sizes() == 0)

    def test_seeded_determinism(self):
        params = BoiParams(num_tables=5, hash_bits=4, seed=1234)
        a = make_tables(params, 32)
        b = make_tables(params, 32)
        for ta, tb in zip(a, b):
            assert np.array_equal(ta.projections, tb.projections)

    def test_tables_are_independent(self):
        params = BoiParams(num_tables=3, hash_bits=4, seed=0)
        tables = make_tables(params, 16)
        assert not np.array_equal(tables[0].projections, tables[1].projections)

    def test_minimal(self):
        params = BoiParams(
            num_tables=1, hash_bits=1, initial_probe_count=0, seed=0
        )
        (t,) = make_tables(params, 1)
        assert t.projections.shape == (1, 1)
        assert t.num_buckets == 2

    def test_rejects_bad_dim(self):
        with pytest.raises(ValueError):
            make_tables(BoiParams(), 0)


class TestHashVector:
    def test_identity_rows_sign_rule(self):
        # bit j = sign of component j; (1, -1) -> bits (1, 0) -> code 1
        t = table_from_matrix([[1.0, 0.0], [0.0, 1.0]])
        assert hash_vector(t, np.array([1.0, -1.0], dtype=np.float32)) == 1

    def test_zero_vector_all_ties(self):
        t = table_from_matrix(np.ones((3, 4)))
        assert hash_vector(t, np.zeros(4, dtype=np.float32)) == 0b111

    def test_negation_gives_complement(self):
        rng = np.random.default_rng(7)
        params = BoiParams(num_tables=1, hash_bits=6, seed=7)
        (t,) = make_tables(params, 24)
        for _ in range(25):
            v = rng.standard_normal(24).astype(np.float32)
            assert np.all(t.projections @ v != 0)  # no ties, complement exact
            code = hash_vector(t, v)
            assert hash_vector(t, -v) == code ^ 0b111111

    def test_pure_function(self):
        t = table_from_matrix([[0.5, -0.25]])
        v = np.array([2.0, 1.0], dtype=np.float32)
        assert hash_vector(t, v) == hash_vector(t, v)

    def test_dimension_mismatch(self):
        t = table_from_matrix([[1.0, 0.0]])
        with pytest.raises(ValueError):
            hash_vector(t, np.zeros(3, dtype=np.float32))

    def test_single_matches_batch(self):
        rng = np.random.default_rng(11)
        params = BoiParams(num_tables=4, hash_bits=8, seed=5)
        tables = make_tables(params, 20)
        X = rng.standard_normal((100, 20)).astype(np.float32)
        codes = hash_codes_all(tables, X)
        for t_i, table in enumerate(tables):
            col = hash_codes(table.projections, X)
            assert np.array_equal(col, codes[:, t_i])
            for row in (0, 17, 99):
                assert hash_vector(table, X[row]) == codes[row, t_i]


class TestInsertAll:
    def test_empty_dataset(self):
        params = BoiParams(num_tables=2, hash_bits=3, initial_probe_count=2)
        tables = insert_all(
            make_tables(params, 4), VectorSet(np.empty((0, 4), dtype=np.float32))
        )
        assert all(t.size == 0 for t in tables)

    def test_partition_property(self):
        rng = np.random.default_rng(3)
        params = BoiParams(num_tables=6, hash_bits=5, seed=21)
        data = VectorSet(rng.standard_normal((1000, 16)).astype(np.float32))
        tables = insert_all(make_tables(params, 16), data)
        for t in tables:
            assert t.bucket_sizes().sum() == 1000
            seen = np.sort(t.bucket_members)
            assert np.array_equal(seen, np.arange(1000))

    def test_records_land_in_their_hash_bucket(self):
        rng = np.random.default_rng(4)
        params = BoiParams(num_tables=3, hash_bits=4, seed=8)
        data = VectorSet(rng.standard_normal((200, 10)).astype(np.float32))
        tables = insert_all(make_tables(params, 10), data)
        codes = hash_codes_all(tables, data.vectors)
        for ti, t in enumerate(tables):
            for rid in range(0, 200, 17):
                assert rid in t.bucket(int(codes[rid, ti]))

    def test_duplicate_vectors_share_buckets(self):
        rng = np.random.default_rng(5)
        row = rng.standard_normal(8).astype(np.float32)
        data = VectorSet(np.stack([row, row, row]))
        params = BoiParams(num_tables=4, hash_bits=6, seed=2)
        tables = insert_all(make_tables(params, 8), data)
        for t in tables:
            code = hash_vector(t, row)
            assert np.array_equal(t.bucket(code), [0, 1, 2])

    def test_dimension_mismatch(self):
        params = BoiParams(num_tables=1, hash_bits=2, initial_probe_count=1)
        with pytest.raises(ValueError):
            insert_all(
                make_tables(params, 4),
                VectorSet(np.zeros((3, 5), dtype=np.float32)),
            )


def hamming(a: int, b: int) -> int:
    return bin(a ^ b).count("1")


class TestNeighborCodes:
    def test_one_bit_shell_is_exact(self):
        rng = np.random.default_rng(0)
        got = neighbor_codes(0b10110001, 8, 8, rng)
        expected = {0b10110001 ^ (1 << j) for j in range(8)}
        assert set(int(c) for c in got) == expected

    def test_spill_into_second_shell(self):
        # enumeration oracle: group all codes by Hamming distance from center
        center = 37
        bits = 8
        by_shell = {}
        for code in range(1 << bits):
            if code != center:
                by_shell.setdefault(hamming(code, center), set()).add(code)
        rng = np.random.default_rng(1)
        got = [int(c) for c in neighbor_codes(center, 10, bits, rng)]
        assert set(got[:8]) == by_shell[1]
        assert set(got[8:]) <= by_shell[2]
        assert len(set(got)) == 10

    def test_zero_count(self):
        rng = np.random.default_rng(2)
        assert neighbor_codes(3, 0, 4, rng).size == 0

    def test_count_too_large(self):
        rng = np.random.default_rng(3)
        with pytest.raises(ValueError):
            neighbor_codes(0, 16, 4, rng)

    def test_center_out_of_range(self):
        rng = np.random.default_rng(4)
        with pytest.raises(ValueError):
            neighbor_codes(16, 1, 4, rng)

    def test_reported_distances_are_true_distances(self):
        rng = np.random.default_rng(5)
        codes, dists = neighbor_codes_with_distance(9, 14, 6, rng)
        for c, h in zip(codes, dists):
            assert hamming(int(c), 9) == int(h)


@given(
    bits=st.integers(1, 10),
    seed=st.integers(0, 2**32 - 1),
    data=st.data(),
)
@settings(max_examples=150, deadline=None)
def test_neighbor_codes_properties(bits, seed, data):
    max_count = data.draw(st.integers(0, (1 << bits) - 1))
    center = data.draw(st.integers(0, (1 << bits) - 1))
    rng = np.random.default_rng(seed)
    codes = neighbor_codes(center, max_count, bits, rng)
    assert codes.size == max_count
    as_ints = [int(c) for c in codes]
    assert center not in as_ints
    assert len(set(as_ints)) == len(as_ints)
    dists = [hamming(c, center) for c in as_ints]
    assert dists == sorted(dists)  # non-decreasing shells


def test_flip_masks_shell_sizes():
    from math import comb

    for bits in (1, 4, 8):
        for dist in range(bits + 2):
            assert flip_masks(bits, dist).size == comb(bits, dist)


def test_collision_probability_monotone_in_angle():
    # pairs closer than 30 degrees must collide in a 1-bit table strictly
    # more often than pairs farther than 60 degrees
    rng = np.random.default_rng(99)
    dim = 8
    n_pairs = 1500

    def collisions(theta_low, theta_high):
        count = 0
        for _ in range(n_pairs):
            u = rng.standard_normal(dim)
            u /= np.linalg.norm(u)
            w = rng.standard_normal(dim)
            w -= (w @ u) * u
            w /= np.linalg.norm(w)
            theta = rng.uniform(theta_low, theta_high)
            v = np.cos(theta) * u + np.sin(theta) * w
            r = rng.standard_normal(dim)
            count += (r @ u >= 0) == (r @ v >= 0)
        return count

    close = collisions(0.0, np.pi / 6)
    far = collisions(np.pi / 3, np.pi / 2)
    assert close > far


def test_occupancy_summary_counts():
    rng = np.random.default_rng(6)
    params = BoiParams(num_tables=2, hash_bits=3, initial_probe_count=3, seed=1)
    data = VectorSet(rng.standard_normal((50, 6)).astype(np.float32))
    tables = insert_all(make_tables(params, 6), data)
    stats = occupancy_summary(tables)
    assert stats["num_tables"] == 2
    assert stats["buckets_per_table"] == 8
    assert stats["mean"] == pytest.approx(50 / 8)

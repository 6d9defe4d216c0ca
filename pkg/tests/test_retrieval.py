"""Retrieval tests: packed distances against a naive per-bit loop,
metric axioms checked exhaustively for 8-bit codes, ranking against a
naive sort, hand-traced average precision, and the codes file format."""

import numpy as np
import pytest

from icshash import (
    EvaluationError,
    hamming,
    load_codes,
    map_at_k,
    pack_code,
    pack_database,
    precision_at_k,
    rank_database,
    relevant,
    save_codes,
    unpack_database,
)


def naive_hamming(a, b):
    return int(np.sum(np.asarray(a) != np.asarray(b)))


def random_codes(rng, n, k):
    return 2 * rng.integers(0, 2, size=(n, k)).astype(np.int64) - 1


class TestHamming:
    def test_identical(self):
        code = pack_code([1, -1, 1, 1, -1, -1, 1, -1])
        assert hamming(code, code) == 0

    def test_complementary(self):
        a = pack_code(np.ones(16, dtype=int))
        b = pack_code(-np.ones(16, dtype=int))
        assert hamming(a, b) == 16

    @pytest.mark.parametrize("k", [16, 64, 100])
    def test_matches_naive_loop(self, k):
        rng = np.random.default_rng(k)
        for _ in range(500):
            x = random_codes(rng, 1, k)[0]
            y = random_codes(rng, 1, k)[0]
            assert hamming(pack_code(x), pack_code(y)) == naive_hamming(x, y)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            hamming(pack_code([1, -1]), pack_code([1, -1, 1]))

    def test_metric_axioms_exhaustive_k8(self):
        # all 256 8-bit codes: identity, symmetry, triangle inequality
        bits = ((np.arange(256)[:, None] >> np.arange(8)[None, :]) & 1).astype(
            np.int64
        )
        codes = 2 * bits - 1
        db = pack_database(codes)
        dist = np.bitwise_count(
            db.words[:, None, :] ^ db.words[None, :, :]
        ).sum(axis=2)
        assert np.all(np.diag(dist) == 0)
        assert np.all((dist == 0) == np.eye(256, dtype=bool))
        np.testing.assert_array_equal(dist, dist.T)
        triangle = dist[:, :, None] + dist[None, :, :] >= dist[:, None, :]
        assert np.all(triangle)


class TestPacking:
    def test_round_trip(self):
        rng = np.random.default_rng(9)
        for k in (4, 16, 63, 64, 65, 128):
            codes = random_codes(rng, 7, k)
            np.testing.assert_array_equal(unpack_database(pack_database(codes)), codes)

    def test_pad_bits_zero(self):
        codes = -np.ones((3, 10), dtype=np.int64)  # all bits clear
        db = pack_database(codes)
        assert np.all(db.words == 0)

    def test_rejects_non_sign_values(self):
        with pytest.raises(ValueError):
            pack_code([1, 0, -1])


class TestRankDatabase:
    def test_query_in_database_ranks_first(self):
        rng = np.random.default_rng(1)
        codes = random_codes(rng, 20, 16)
        db = pack_database(codes)
        ranking = rank_database(pack_code(codes[13]), db)
        assert hamming(pack_code(codes[ranking.indices[0]]), pack_code(codes[13])) == 0

    def test_two_item_order(self):
        query = pack_code([1, 1, 1, 1])
        db = pack_database([[1, -1, -1, -1], [1, 1, 1, -1]])  # distances 3, 1
        ranking = rank_database(query, db)
        np.testing.assert_array_equal(ranking.indices, [1, 0])
        np.testing.assert_array_equal(ranking.distances, [1, 3])

    def test_ties_broken_by_ascending_index(self):
        query = pack_code([1, 1])
        db = pack_database([[1, -1], [1, -1], [-1, 1]])
        ranking = rank_database(query, db)
        np.testing.assert_array_equal(ranking.indices, [0, 1, 2])

    def test_matches_naive_sort(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            codes = random_codes(rng, 500, 16)
            db = pack_database(codes)
            qi = int(rng.integers(0, 500))
            ranking = rank_database(pack_code(codes[qi]), db)
            naive = np.array(
                [naive_hamming(codes[qi], codes[j]) for j in range(500)]
            )
            expected = sorted(range(500), key=lambda j: (naive[j], j))
            np.testing.assert_array_equal(ranking.indices, expected)
            assert np.all(np.diff(ranking.distances) >= 0)

    def test_empty_database(self):
        from icshash import CodeDatabase

        empty = CodeDatabase(2, np.empty((0, 1), dtype=np.uint64))
        with pytest.raises(ValueError):
            rank_database(pack_code([1, -1]), empty)


class TestRelevant:
    def test_identical_single_label(self):
        assert relevant([0, 1, 0], [0, 1, 0])

    def test_disjoint(self):
        assert not relevant([1, 0, 0], [0, 1, 1])

    def test_single_overlap_in_many(self):
        a = np.zeros(80, dtype=int)
        b = np.zeros(80, dtype=int)
        a[[3, 17]] = 1
        b[[17, 60]] = 1
        assert relevant(a, b)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            relevant([1, 0], [1, 0, 0])


def identity_setup(k=8, n=6):
    # distinct codes, one label each, every query is its own database hit
    rng = np.random.default_rng(4)
    codes = []
    seen = set()
    while len(codes) < n:
        c = tuple(random_codes(rng, 1, k)[0].tolist())
        if c not in seen:
            seen.add(c)
            codes.append(c)
    codes = np.array(codes)
    labels = np.eye(n, dtype=np.int8)
    return pack_database(codes), labels


class TestMapAtK:
    def test_all_relevant_tops(self):
        db, labels = identity_setup()
        value = map_at_k(db, labels, db, labels, k=1)
        assert value == 1.0

    def test_zero_when_no_relevant_in_top_k(self):
        # two clusters: query's only relevant item is maximally far
        query_codes = pack_database([[1, 1, 1, 1]])
        query_labels = np.array([[1, 0]])
        db_codes = pack_database([[-1, -1, -1, -1], [1, 1, 1, -1], [1, 1, -1, 1]])
        db_labels = np.array([[1, 0], [0, 1], [0, 1]])
        assert map_at_k(query_codes, query_labels, db_codes, db_labels, k=2) == 0.0

    def test_hand_traced_average_precision(self):
        # relevant at ranks 1 and 3, k=3, exactly 2 relevant in database
        query_codes = pack_database([[1, 1, 1, 1]])
        query_labels = np.array([[1, 0]])
        db = pack_database(
            [
                [1, 1, 1, 1],  # dist 0, relevant -> rank 1
                [1, 1, 1, -1],  # dist 1, irrelevant -> rank 2
                [1, 1, -1, -1],  # dist 2, relevant -> rank 3
            ]
        )
        db_labels = np.array([[1, 0], [0, 1], [1, 1]])
        value = map_at_k(query_codes, query_labels, db, db_labels, k=3)
        assert value == pytest.approx((1.0 + 2.0 / 3.0) / 2.0)
        assert value == pytest.approx(0.8333, abs=1e-4)

    def test_queries_without_relevant_items_are_excluded(self):
        query_codes = pack_database([[1, 1, 1, 1], [1, 1, 1, 1]])
        query_labels = np.array([[1, 0], [0, 1]])
        db = pack_database([[1, 1, 1, 1]])
        db_labels = np.array([[1, 0]])
        assert map_at_k(query_codes, query_labels, db, db_labels, k=1) == 1.0

    def test_error_when_nothing_relevant(self):
        query_codes = pack_database([[1, 1, 1, 1]])
        db = pack_database([[1, 1, 1, 1]])
        with pytest.raises(EvaluationError):
            map_at_k(query_codes, [[1, 0]], db, [[0, 1]], k=1)

    def test_database_permutation_invariance_without_ties(self):
        rng = np.random.default_rng(8)
        k = 16
        db_codes_raw = []
        seen = set()
        while len(db_codes_raw) < 30:
            c = tuple(random_codes(rng, 1, k)[0].tolist())
            if c not in seen:
                seen.add(c)
                db_codes_raw.append(c)
        db_codes_raw = np.array(db_codes_raw)
        db_labels = rng.integers(0, 2, size=(30, 4))
        db_labels[db_labels.sum(axis=1) == 0, 0] = 1
        query = random_codes(rng, 3, k)
        query_labels = np.eye(4, dtype=int)[:3]
        base_dist = np.array(
            [
                [naive_hamming(q, c) for c in db_codes_raw]
                for q in query
            ]
        )
        # only permute when all distances are distinct per query
        if all(len(set(row)) == len(row) for row in base_dist):
            perm = rng.permutation(30)
            a = map_at_k(
                pack_database(query), query_labels,
                pack_database(db_codes_raw), db_labels, k=10,
            )
            b = map_at_k(
                pack_database(query), query_labels,
                pack_database(db_codes_raw[perm]), db_labels[perm], k=10,
            )
            assert a == pytest.approx(b, abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(3)
        codes = random_codes(rng, 25, 16)
        labels = rng.integers(0, 2, size=(25, 5))
        labels[labels.sum(axis=1) == 0, 2] = 1
        db = pack_database(codes)
        for k in (1, 5, 25, 40):
            v = map_at_k(db, labels, db, labels, k=k)
            p = precision_at_k(db, labels, db, labels, k=k)
            assert 0.0 <= v <= 1.0
            assert 0.0 <= p <= 1.0


class TestPrecisionAtK:
    def test_all_relevant(self):
        db, labels = identity_setup()
        assert precision_at_k(db, labels, db, labels, k=1) == 1.0

    def test_none_relevant_in_top(self):
        query_codes = pack_database([[1, 1, 1, 1]])
        query_labels = np.array([[1, 0]])
        db_codes = pack_database([[-1, -1, -1, -1], [1, 1, 1, -1]])
        db_labels = np.array([[1, 0], [0, 1]])
        assert precision_at_k(query_codes, query_labels, db_codes, db_labels, k=1) == 0.0

    def test_half_relevant_in_top_four(self):
        query_codes = pack_database([[1, 1, 1, 1]])
        query_labels = np.array([[1, 0]])
        db = pack_database(
            [[1, 1, 1, 1], [1, 1, 1, -1], [1, 1, -1, -1], [1, -1, -1, -1]]
        )
        db_labels = np.array([[1, 0], [0, 1], [1, 0], [0, 1]])
        assert precision_at_k(query_codes, query_labels, db, db_labels, k=4) == 0.5


class TestCodesFile:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        codes = random_codes(rng, 12, 20)
        db = pack_database(codes)
        path = tmp_path / "codes.txt"
        save_codes(path, db)
        loaded = load_codes(path)
        assert loaded.k_bits == 20
        np.testing.assert_array_equal(unpack_database(loaded), codes)
        again = tmp_path / "again.txt"
        save_codes(again, loaded)
        assert path.read_bytes() == again.read_bytes()

    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 4\n1010\n10\n")
        with pytest.raises(Exception) as exc_info:
            load_codes(path)
        assert "line 3" in str(exc_info.value)

"""Bit-packed Hamming ranking and retrieval metrics.

Codes in {-1, +1} are packed into 64-bit words (bit 1 encodes +1,
little-endian bit order, pad bits zero) so distances reduce to XOR and
population count. Relevance between two samples means sharing at least
one positive label. Average precision at k divides by min(k, number of
relevant database items), and queries with no relevant item are
excluded from the mean.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ParseError


@dataclass(frozen=True)
class BinaryCode:
    """One K-bit code: ceil(K/64) little-endian words, pad bits zero."""

    k_bits: int
    words: np.ndarray  # (n_words,) uint64


@dataclass(frozen=True)
class CodeDatabase:
    """N packed codes sharing one K."""

    k_bits: int
    words: np.ndarray  # (n, n_words) uint64

    def __len__(self) -> int:
        return self.words.shape[0]

    def code(self, i: int) -> BinaryCode:
        return BinaryCode(self.k_bits, self.words[i])


@dataclass(frozen=True)
class RankedResult:
    """Database ranking for one query: ascending distance, ties by
    ascending database index."""

    query_index: int
    indices: np.ndarray
    distances: np.ndarray


def _pack_rows(pm1: np.ndarray) -> np.ndarray:
    bits01 = ((pm1 + 1) // 2).astype(np.uint8)
    n, k = bits01.shape
    n_words = (k + 63) // 64
    padded = np.zeros((n, n_words * 64), dtype=np.uint8)
    padded[:, :k] = bits01
    packed = np.packbits(padded, axis=1, bitorder="little")
    return packed.view(np.uint64)


def pack_code(bits_pm1) -> BinaryCode:
    """Pack one {-1, +1} vector."""
    row = np.asarray(bits_pm1, dtype=np.int64)
    if row.ndim != 1 or row.size == 0 or not np.all(np.abs(row) == 1):
        raise ValueError("expected a nonempty vector of -1/+1 values")
    return BinaryCode(row.size, _pack_rows(row[None, :])[0])


def pack_database(codes_pm1) -> CodeDatabase:
    """Pack an (N, K) matrix of {-1, +1} codes."""
    rows = np.atleast_2d(np.asarray(codes_pm1, dtype=np.int64))
    if rows.size == 0 or not np.all(np.abs(rows) == 1):
        raise ValueError("expected a nonempty matrix of -1/+1 values")
    return CodeDatabase(rows.shape[1], _pack_rows(rows))


def unpack_database(db: CodeDatabase) -> np.ndarray:
    """Back to an (N, K) int8 matrix of {-1, +1}."""
    bytes_ = db.words.view(np.uint8).reshape(len(db), -1)
    bits = np.unpackbits(bytes_, axis=1, bitorder="little")[:, : db.k_bits]
    return (2 * bits.astype(np.int8)) - 1


def hamming(a: BinaryCode, b: BinaryCode) -> int:
    """Number of differing bits, by XOR plus population count."""
    if a.k_bits != b.k_bits:
        raise ValueError(f"code length mismatch: {a.k_bits} vs {b.k_bits}")
    return int(np.bitwise_count(a.words ^ b.words).sum())


def hamming_to_all(query: BinaryCode, db: CodeDatabase) -> np.ndarray:
    """Distances from one query to every database code."""
    if query.k_bits != db.k_bits:
        raise ValueError(f"code length mismatch: {query.k_bits} vs {db.k_bits}")
    return np.bitwise_count(db.words ^ query.words[None, :]).sum(
        axis=1, dtype=np.int64
    )


def rank_database(query: BinaryCode, db: CodeDatabase, query_index: int = -1) -> RankedResult:
    """Stable sort of the database by (distance, index)."""
    if len(db) == 0:
        raise ValueError("empty database")
    dist = hamming_to_all(query, db)
    order = np.argsort(dist, kind="stable")
    return RankedResult(query_index, order, dist[order])


def relevant(query_labels, db_labels) -> bool:
    """True iff the two label vectors share a positive label."""
    a = np.asarray(query_labels)
    b = np.asarray(db_labels)
    if a.shape != b.shape:
        raise ValueError("label dimension mismatch")
    return bool(np.any((a > 0) & (b > 0)))


def _relevance_matrix(query_labels: np.ndarray, db_labels: np.ndarray) -> np.ndarray:
    if query_labels.shape[1] != db_labels.shape[1]:
        raise ValueError("label dimension mismatch")
    return (query_labels.astype(np.int64) @ db_labels.astype(np.int64).T) > 0


def _per_query_rankings(query_codes: CodeDatabase, db_codes: CodeDatabase):
    for qi in range(len(query_codes)):
        yield qi, rank_database(query_codes.code(qi), db_codes, qi)


def map_at_k(
    query_codes: CodeDatabase,
    query_labels,
    db_codes: CodeDatabase,
    db_labels,
    k: int,
) -> float:
    """Mean average precision over the top-k ranked results.

    AP@k = sum_{r<=k} Precision@r * rel(r) / min(k, relevant-in-db);
    queries without any relevant database item are skipped, and if no
    query has one the metric is undefined.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(db_codes) == 0:
        raise ValueError("empty database")
    query_labels = np.atleast_2d(np.asarray(query_labels))
    db_labels = np.atleast_2d(np.asarray(db_labels))
    rel = _relevance_matrix(query_labels, db_labels)
    ap_values = []
    for qi, ranking in _per_query_rankings(query_codes, db_codes):
        n_relevant = int(rel[qi].sum())
        if n_relevant == 0:
            continue
        top = ranking.indices[:k]
        flags = rel[qi][top].astype(np.float64)
        cum = np.cumsum(flags)
        precision = cum / np.arange(1, top.size + 1)
        ap_values.append(float(np.sum(precision * flags)) / min(k, n_relevant))
    if not ap_values:
        raise EvaluationError("no query has a relevant database item")
    return float(np.mean(ap_values))


def precision_at_k(
    query_codes: CodeDatabase,
    query_labels,
    db_codes: CodeDatabase,
    db_labels,
    k: int,
) -> float:
    """Fraction of relevant items in the top-k, averaged over queries
    that have at least one relevant database item."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if len(db_codes) == 0:
        raise ValueError("empty database")
    query_labels = np.atleast_2d(np.asarray(query_labels))
    db_labels = np.atleast_2d(np.asarray(db_labels))
    rel = _relevance_matrix(query_labels, db_labels)
    values = []
    for qi, ranking in _per_query_rankings(query_codes, db_codes):
        if int(rel[qi].sum()) == 0:
            continue
        top = ranking.indices[:k]
        values.append(float(rel[qi][top].sum()) / k)
    if not values:
        raise EvaluationError("no query has a relevant database item")
    return float(np.mean(values))


def save_codes(path, db: CodeDatabase) -> None:
    """Text format: header ``N K``, then one K-character 0/1 line per
    code (1 encodes +1)."""
    pm1 = unpack_database(db)
    lines = [f"{len(db)} {db.k_bits}"]
    for row in pm1:
        lines.append("".join("1" if v > 0 else "0" for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_codes(path) -> CodeDatabase:
    with open(path) as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise ParseError("empty codes file", line=1)
    head = raw[0].split()
    if len(head) != 2:
        raise ParseError("expected header 'N K'", line=1)
    try:
        n, k = int(head[0]), int(head[1])
    except ValueError:
        raise ParseError("non-integer header field", line=1) from None
    if len(raw) < 1 + n:
        raise ParseError(f"expected {n} code lines, found {len(raw) - 1}", line=len(raw))
    rows = np.empty((n, k), dtype=np.int64)
    for i in range(n):
        text = raw[1 + i].strip()
        if len(text) != k or set(text) - {"0", "1"}:
            raise ParseError(f"expected a {k}-character 0/1 string", line=2 + i)
        rows[i] = [1 if ch == "1" else -1 for ch in text]
    return pack_database(rows)

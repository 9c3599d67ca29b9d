import numpy as np
import pytest

from hepack import (
    encode_row_major,
    encode_transpose_extended,
    decode_diagonal,
    he_matmul,
    he_matmul_partitioned,
    multiply_matrices,
    split_weight_groups,
    WeightGroup,
)
from common import ledger_delta, sim


@pytest.mark.parametrize("m,n,p", [
    (2, 4, 2), (4, 4, 4), (8, 16, 4), (8, 16, 64),
    (4, 4, 2), (16, 8, 16), (8, 3, 5), (5, 7, 3),
])
def test_product_matches_numpy(m, n, p):
    rng = np.random.default_rng(m * 1000 + n * 10 + p)
    a = rng.normal(size=(m, n))
    b = rng.normal(size=(n, p))
    got = multiply_matrices(a, b)
    assert got.shape == (m, p)
    assert np.max(np.abs(got - a @ b)) < 1e-9


def test_small_frozen_product():
    a = [[1.0, 2.0], [3.0, 4.0]]
    b = [[2.0, 0.0], [1.0, 3.0]]
    assert np.allclose(multiply_matrices(a, b), [[4, 6], [10, 12]], atol=1e-12)


def test_accumulator_seed_is_added():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(4, 8))
    b = rng.normal(size=(8, 4))
    seed = rng.normal(size=(4, 4))
    got = multiply_matrices(a, b, acc_init=seed)
    assert np.max(np.abs(got - (a @ b + seed))) < 1e-9


def test_he_matmul_needs_enough_rows():
    backend = sim(64)
    a = encode_row_major(backend, np.ones((8, 4)), 8)
    b = encode_transpose_extended(backend, np.ones((4, 8)), 8, 8)
    with pytest.raises(ValueError, match="pad A or split"):
        he_matmul(backend, a, b, 16)


def test_partitioned_inner_dimension_split():
    rng = np.random.default_rng(6)
    a = rng.normal(size=(8, 16))
    b = rng.normal(size=(16, 4))
    backend = sim(64)
    a_parts = [encode_row_major(backend, a[:, g * 4:(g + 1) * 4], 8)
               for g in range(4)]
    b_blocks = [encode_transpose_extended(backend, b[g * 4:(g + 1) * 4], 8, 8)
                for g in range(4)]
    out = he_matmul_partitioned(backend, a_parts, b_blocks, 4)
    got = decode_diagonal(backend.decrypt(out.ct), 8, 8, 4)
    assert np.max(np.abs(got - a @ b)) < 1e-9


def test_column_groups_cover_wide_outputs():
    # p = 32 output columns from only 8 ciphertext rows.
    rng = np.random.default_rng(7)
    a = rng.normal(size=(8, 8))
    b = rng.normal(size=(8, 32))
    backend = sim(8 * 32)
    enc_a = encode_row_major(backend, a, 32)
    groups = split_weight_groups(backend, b, rows=8, row_width=32)
    assert [(g.base, g.width) for g in groups] == [(0, 8), (8, 8), (16, 8), (24, 8)]
    out = he_matmul_partitioned(backend, [enc_a], [groups], 32)
    got = decode_diagonal(backend.decrypt(out.ct), 8, 32, 32)
    assert np.max(np.abs(got - a @ b)) < 1e-9


def test_column_groups_with_uneven_tail():
    rng = np.random.default_rng(8)
    a = rng.normal(size=(4, 4))
    b = rng.normal(size=(4, 10))
    backend = sim(4 * 16)
    enc_a = encode_row_major(backend, a, 16)
    groups = split_weight_groups(backend, b, rows=4, row_width=16)
    assert [(g.base, g.width) for g in groups] == [(0, 4), (4, 4), (8, 2)]
    out = he_matmul_partitioned(backend, [enc_a], [groups], 10)
    got = decode_diagonal(backend.decrypt(out.ct), 4, 16, 10)
    assert np.max(np.abs(got - a @ b)) < 1e-9


def test_group_tiling_is_validated():
    backend = sim(64)
    a = encode_row_major(backend, np.ones((8, 4)), 8)
    b = encode_transpose_extended(backend, np.ones((4, 4)), 8, 8)
    hole = [WeightGroup(0, 4, b)]
    with pytest.raises(ValueError, match="tile"):
        he_matmul_partitioned(backend, [a], [hole], 8)
    overlap = [WeightGroup(0, 4, b), WeightGroup(2, 4, b)]
    with pytest.raises(ValueError, match="tile"):
        he_matmul_partitioned(backend, [a], [overlap], 6)


def test_partitioned_argument_validation():
    backend = sim(64)
    a = encode_row_major(backend, np.ones((8, 4)), 8)
    b = encode_transpose_extended(backend, np.ones((4, 4)), 8, 8)
    with pytest.raises(ValueError):
        he_matmul_partitioned(backend, [], [], 4)
    with pytest.raises(ValueError):
        he_matmul_partitioned(backend, [a, a], [b], 4)
    with pytest.raises(ValueError):
        he_matmul_partitioned(backend, [a], [b], 16)  # wider than a row


def test_fast_path_cost_contract():
    # m=8, f=16, p=4 with p | m: per column one rotation-shift, one mul,
    # one row-sum broadcast (2*log2(16) rot/add + 1 cmul), one filter cmul.
    rng = np.random.default_rng(9)
    backend = sim(8 * 16)
    a = encode_row_major(backend, rng.normal(size=(8, 8)), 16)
    b = encode_transpose_extended(backend, rng.normal(size=(8, 4)), 8, 16)
    before = backend.ledger.snapshot()
    out = he_matmul(backend, a, b, 4)
    assert ledger_delta(backend, before) == {
        "mul": 4, "cmul": 8, "rot": 3 + 2 * 4 * 4, "add": 2 * 4 * 4 + 4,
        "consumed_bits": 4 * (45 + 2 * 20)}
    assert out.ct.budget_bits == 1200 - (45 + 2 * 20)


def test_masked_shift_cost_contract():
    # p=3 does not divide m=8: steps 1 and 2 each pay the patched-tail
    # shift (2 rot + 2 cmul + 1 add) on top of the fast-path work.
    rng = np.random.default_rng(10)
    backend = sim(8 * 8)
    a = rng.normal(size=(8, 5))
    b = rng.normal(size=(5, 3))
    enc_a = encode_row_major(backend, a, 8)
    enc_b = encode_transpose_extended(backend, b, 8, 8)
    before = backend.ledger.snapshot()
    out = he_matmul(backend, enc_a, enc_b, 3)
    assert ledger_delta(backend, before) == {
        "mul": 3, "cmul": 2 * 3 + 2 * 2, "rot": 2 * 2 + 2 * 3 * 3,
        "add": 2 * 3 * 3 + 2 + 3,
        "consumed_bits": 3 * (45 + 2 * 20) + 2 * 2 * 20}
    got = decode_diagonal(backend.decrypt(out.ct), 8, 8, 3)
    assert np.max(np.abs(got - a @ b)) < 1e-9
    assert out.layout.period == 3


def test_parallel_matches_sequential_bitwise():
    rng = np.random.default_rng(11)
    a = rng.normal(size=(8, 16))
    b = rng.normal(size=(16, 8))
    seq = multiply_matrices(a, b, threads=1)
    par = multiply_matrices(a, b, threads=4)
    assert np.array_equal(seq, par)


def test_fold_combine_agrees_with_tree():
    rng = np.random.default_rng(12)
    a = rng.normal(size=(4, 8))
    b = rng.normal(size=(8, 4))
    tree = multiply_matrices(a, b, combine="tree")
    fold = multiply_matrices(a, b, combine="fold")
    assert np.allclose(tree, fold, atol=1e-12)


def test_multiply_matrices_validation():
    with pytest.raises(ValueError, match="inner dimensions"):
        multiply_matrices(np.ones((2, 3)), np.ones((4, 2)))
    with pytest.raises(ValueError, match="row_width"):
        multiply_matrices(np.ones((2, 8)), np.ones((8, 2)), row_width=4)

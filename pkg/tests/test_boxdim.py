import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ifslab.boxdim import (box_count, check_chain, find_separating_translation, is_chain,
                           linf_gap, point_cloud, random_chain, read_cloud_csv, sum_embed,
                           upper_box_dimension, write_cloud_csv)
from ifslab.errors import BudgetExhausted, DegenerateFit, NotChain
from oracles import box_count_oracle, linf_gap_oracle

cube_points = arrays(np.float64, st.tuples(st.integers(1, 60), st.just(3)),
                     elements=st.floats(0, 1))


def test_point_cloud_validation():
    with pytest.raises(ValueError):
        point_cloud(np.empty((0, 3)))
    with pytest.raises(ValueError):
        point_cloud([[0.5, 0.5, 1.2]])
    assert len(point_cloud([[0.1, 0.2, 0.3], [0.1, 0.2, 0.3 + 1e-14]])) == 1


def test_box_count_examples():
    assert box_count([[0.3, 0.3, 0.3]], 2.0**-5) == 1
    diag = np.repeat(((np.arange(64) + 0.5) / 64)[:, None], 3, axis=1)
    assert box_count(diag, 2.0**-4) == 16
    assert box_count([[1.0, 1.0, 1.0], [0.99, 0.99, 0.99]], 0.5) == 1


def test_chain_box_bound(rng):
    for _ in range(10):
        P = random_chain(300, rng)
        for k in range(2, 8):
            side = 2.0**-k
            assert box_count(P, side) <= math.ceil(3 / side) + 3


@given(cube_points, st.integers(1, 7))
def test_box_count_matches_oracle(P, k):
    assert box_count(P, 2.0**-k) == box_count_oracle(P, 2.0**-k)


@given(cube_points, st.integers(1, 6))
def test_box_count_monotone_under_halving(P, k):
    a, b = box_count(P, 2.0**-k), box_count(P, 2.0**-(k + 1))
    assert a <= b <= 8 * a


def test_dimension_slopes(rng):
    seg = np.column_stack([rng.random(5000)] * 3)
    assert 0.85 <= upper_box_dimension(seg).slope <= 1.1
    pl = np.column_stack([rng.random(20000), rng.random(20000), np.full(20000, 0.5)])
    assert 1.7 <= upper_box_dimension(pl).slope <= 2.2
    for _ in range(5):
        est = upper_box_dimension(random_chain(2000, rng))
        assert est.slope <= 1.15
        assert len(est.scales) == len(est.counts) == 7 and est.slope_ci >= 0


def test_dimension_errors(rng):
    with pytest.raises(ValueError):
        upper_box_dimension(rng.random((10, 3)))
    with pytest.raises(ValueError):
        upper_box_dimension(rng.random((100, 3)), scale_range=(2, 4))
    with pytest.raises(DegenerateFit):
        upper_box_dimension(np.full((20, 3), 0.3) + np.arange(20)[:, None] * 1e-6)


def test_chain_checks():
    assert is_chain([[0.1, 0.1, 0.1], [0.2, 0.3, 0.4]])
    assert not is_chain([[0.1, 0.5, 0.1], [0.2, 0.3, 0.4]])
    with pytest.raises(NotChain) as info:
        check_chain([[0.1, 0.5, 0.1], [0.2, 0.3, 0.4]])
    assert set(info.value.pair) == {0, 1}


def test_sum_embed_examples(rng):
    P = [[0.1, 0.2, 0.3], [0.2, 0.3, 0.4]]
    np.testing.assert_allclose(sum_embed(P), [0.6, 0.9])
    with pytest.raises(NotChain):
        sum_embed([[0.1, 0.5, 0.1], [0.2, 0.3, 0.4]])
    C = random_chain(200, rng)
    s = sum_embed(C)
    l1 = np.abs(C[:, None, :] - C[None, :, :]).sum(axis=2)
    assert np.max(np.abs(l1 - np.abs(s[:, None] - s[None, :]))) < 1e-12


@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_random_chain_is_chain(n, seed):
    assert is_chain(random_chain(n, np.random.default_rng(seed)))


@given(cube_points, cube_points, arrays(np.float64, 3, elements=st.floats(-0.1, 0.1)))
def test_linf_gap_matches_oracle(A, A2, t):
    assert linf_gap(A, A2, t) == pytest.approx(linf_gap_oracle(A, A2, t), abs=1e-15)


def test_translation_search_examples(rng):
    p = np.array([[0.5, 0.5, 0.5]])
    t = find_separating_translation(p, p, 0.02, 0.0, 100, rng)
    assert np.all(np.abs(t) < 0.02) and linf_gap(p, p, t) > 0
    A = np.array([[0.1, 0.1, 0.1]])
    B = np.array([[0.6, 0.6, 0.6]])
    assert np.array_equal(find_separating_translation(A, B, 0.02, 0.1, 10, rng), np.zeros(3))
    with pytest.raises(BudgetExhausted) as info:
        find_separating_translation(p, p, 0.02, 0.05, 200, rng)
    assert 0 < info.value.best_margin < 0.02


def test_translation_search_success_rate():
    ok = 0
    for seed in range(200):
        r = np.random.default_rng(seed)
        A = random_chain(100, r)
        try:
            t = find_separating_translation(A, A, 0.02, 0.005, 1000, r)
        except BudgetExhausted:
            continue
        assert np.all(np.abs(t) < 0.02)
        assert linf_gap(A, A, t) > 0.005
        ok += 1
    assert ok >= 198


def test_translation_search_deterministic(rng):
    A = random_chain(50, rng)
    B = random_chain(50, rng)
    t1 = find_separating_translation(A, B, 0.02, 0.004, 1000, 7)
    t2 = find_separating_translation(A, B, 0.02, 0.004, 1000, 7)
    assert np.array_equal(t1, t2)


def test_cloud_csv_round_trip(tmp_path, rng):
    P = rng.random((30, 3))
    write_cloud_csv(tmp_path / "p.csv", P)
    assert np.array_equal(read_cloud_csv(tmp_path / "p.csv"), P)

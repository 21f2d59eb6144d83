import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from polytope_lens import experiments as ex
from polytope_lens.cluster import (NOISE, ClusterLabels, DistanceMatrix, adjusted_rand_index,
                                   cluster, cosine_profile, default_eps, distance_matrix,
                                   monosemanticity_score, nmf, shift_to_min)
from polytope_lens.errors import InvalidInputError


def naive_dbscan(D, eps, min_pts):
    """Textbook DBSCAN with an explicit seed set, written independently of cluster()."""
    n = len(D)
    UNSEEN = -2
    lab = [UNSEEN] * n
    c = -1
    for p in range(n):
        if lab[p] != UNSEEN:
            continue
        nb = [q for q in range(n) if D[p][q] <= eps]
        if len(nb) < min_pts:
            lab[p] = -1
            continue
        c += 1
        lab[p] = c
        seeds = [q for q in nb if q != p]
        k = 0
        while k < len(seeds):
            q = seeds[k]
            k += 1
            if lab[q] == -1:
                lab[q] = c
            if lab[q] != UNSEEN:
                continue
            lab[q] = c
            nq = [r for r in range(n) if D[q][r] <= eps]
            if len(nq) >= min_pts:
                seeds.extend(nq)
    return np.array(lab)


def same_partition(a, b):
    a, b = np.asarray(a), np.asarray(b)
    if not np.array_equal(a == NOISE, b == NOISE):
        return False
    pairs = set(zip(a.tolist(), b.tolist()))
    return len(pairs) == len({x for x, _ in pairs}) == len({y for _, y in pairs})


def test_distance_examples():
    dm = distance_matrix([[1.0, 2.0], [1.0, 2.0]])
    assert dm.condensed.tolist() == [0.0]
    dm = distance_matrix(np.array([[1, 0, 1], [1, 1, 1], [0, 0, 0]], bool), "hamming")
    assert dm.condensed.tolist() == [1.0, 2.0, 3.0]
    with pytest.raises(InvalidInputError):
        distance_matrix([[1.0]])


def test_distance_matches_naive():
    X = np.random.default_rng(0).normal(size=(200, 5))
    dm = distance_matrix(X)
    D = dm.square()
    for i in range(0, 200, 13):
        for j in range(200):
            assert abs(D[i, j] - np.sqrt(np.sum((X[i] - X[j]) ** 2))) < 1e-12


def test_two_blobs_and_all_noise():
    rng = np.random.default_rng(0)
    X = np.concatenate([rng.normal(0, 0.1, (20, 2)), rng.normal(10, 0.1, (20, 2))])
    lab = cluster(distance_matrix(X), eps=1.0, min_pts=5)
    assert lab.cluster_count == 2 and lab.noise_count == 0
    dm = distance_matrix(X)
    lab = cluster(dm, eps=dm.condensed.min() / 2, min_pts=2)
    assert lab.cluster_count == 0 and lab.noise_count == 40
    with pytest.raises(InvalidInputError):
        cluster(dm, eps=0.0)


@pytest.mark.parametrize("seed", range(20))
def test_matches_naive_dbscan(seed):
    rng = np.random.default_rng(seed)
    X = np.concatenate([rng.normal(c, 1.0, (60, 2)) for c in rng.uniform(-6, 6, (5, 2))])
    dm = distance_matrix(X)
    eps = default_eps(dm) * 0.15
    got = cluster(dm, eps, 5)
    want = naive_dbscan(dm.square().tolist(), eps, 5)
    assert np.array_equal(got.labels, want)
    assert set(got.labels.tolist()) <= {NOISE} | set(range(got.cluster_count))


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    X = np.concatenate([rng.normal(c, 0.6, (25, 2)) for c in rng.uniform(-5, 5, (3, 2))])
    dm = distance_matrix(X)
    eps = 0.5
    base = cluster(dm, eps, 4).labels
    perm = rng.permutation(len(X))
    other = cluster(distance_matrix(X[perm]), eps, 4).labels
    back = np.empty_like(other)
    back[perm] = other
    D = dm.square()
    core = (D <= eps).sum(axis=1) >= 4
    # core points and noise are order-independent; a border point may go to any cluster
    # that owns one of its core neighbours
    assert same_partition(np.where(core, base, NOISE), np.where(core, back, NOISE))
    assert np.array_equal(base == NOISE, back == NOISE)
    for i in np.flatnonzero(~core & (back != NOISE)):
        owners = set(back[core & (D[i] <= eps)].tolist())
        assert back[i] in owners


def test_canonical_labels():
    lab = ClusterLabels(np.array([2, -1, 0, 2, 1]), 3)
    assert lab.canonical().tolist() == [0, -1, 1, 0, 2]


def test_ari():
    assert adjusted_rand_index([0, 0, 1, 1], [1, 1, 0, 0]) == 1.0
    assert adjusted_rand_index([0, 0, 1, 1], [0, 1, 0, 1]) < 0


@pytest.mark.parametrize("seed", range(10))
def test_nmf_monotone_nonnegative(seed):
    X = np.random.default_rng(seed).uniform(0, 1, (40, 15))
    f = nmf(X, 5, 500, seed)
    assert np.all(np.diff(f.reconstruction_history) <= 1e-12 * f.reconstruction_history[0])
    assert np.all(f.W >= 0) and np.all(f.H >= 0)
    assert len(f.reconstruction_history) == 501


@pytest.mark.parametrize("seed", range(5))
def test_nmf_planted(seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (50, 3)) @ rng.uniform(0, 1, (3, 20))
    f = nmf(X, 3, 3000, seed)
    assert f.final_error / np.sum(X ** 2) < 1e-3


def test_nmf_rank_one_and_errors():
    u, v = np.array([1.0, 2.0, 0.5, 3.0]), np.array([0.2, 1.0, 4.0])
    X = np.outer(u, v)
    f = nmf(X, 1, 500, 0)
    assert f.final_error / np.sum(X ** 2) < 1e-6
    with pytest.raises(InvalidInputError):
        nmf(-X, 1)
    with pytest.raises(InvalidInputError):
        nmf(X, 4)
    assert shift_to_min(np.array([[-1.0, 2.0]])).tolist() == [[0.0, 3.0]]


def test_cosine_profile():
    lab = ClusterLabels(np.array([0, 0, 1, -1]), 2)
    A = np.array([[2.0, 0.0], [0.0, 3.0], [1.0, 1.0], [0.0, 0.0]])
    prof = cosine_profile([1.0, 0.0], A, lab)
    assert prof.by_cluster[0].tolist() == [1.0, 0.0]
    assert prof.excluded_zero_norm == 1 and prof.by_cluster[-1].size == 0
    assert prof.histogram(0).sum() == 2 and prof.histogram(0).size == 50
    rng = np.random.default_rng(0)
    A = rng.normal(size=(30, 4))
    d = rng.normal(size=4)
    prof = cosine_profile(d, A, ClusterLabels(np.zeros(30, int), 1))
    naive = [float(a @ d) / (np.sqrt(a @ a) * np.sqrt(d @ d)) for a in A]
    np.testing.assert_allclose(prof.by_cluster[0], naive, atol=1e-12)
    with pytest.raises(InvalidInputError):
        cosine_profile([0.0, 0.0, 0.0, 0.0], A, ClusterLabels(np.zeros(30, int), 1))


def test_purity():
    assert monosemanticity_score(ClusterLabels(np.array([0, 0, 1, 1]), 2), [1, 1, 0, 0]).mean == 1.0
    p = monosemanticity_score(ClusterLabels(np.array([0, 0, 0, 0, -1]), 1), [0, 0, 0, 1, 1])
    assert p.per_cluster == {0: 0.75}
    with pytest.raises(InvalidInputError):
        monosemanticity_score(ClusterLabels(np.array([0]), 1), [0, 1])


def test_prediction1_controls_seed0():
    p1 = ex.prediction1(ex.toy_setup(0))
    assert p1.purity > p1.shuffled_purity
    assert p1.agreement > p1.shuffled_agreement

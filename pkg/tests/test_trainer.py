import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dimreg import objectives as obj
from dimreg.graph import generate_sbm, sbm_blocks
from dimreg.rng import substream
from dimreg.theory import finite_difference_gradient, relative_error
from dimreg.trainer import (NegativeSampler, TrainConfig, TrainingDiverged, constriction, dimreg_update,
                            init_embeddings, positive_update, sgns_update, train)
from dimreg.walks import PairSet, pairs_from_edges


# --- attraction ------------------------------------------------------------------

def test_positive_update_single_pair():
    X = np.array([[0.0, 0.0], [1.0, 0.0]])
    positive_update(X, np.array([[0, 1]]), 1.0)
    assert np.allclose(X, [[0.5, 0.0], [1.0, 0.0]])


def test_positive_update_saturates_for_aligned_pair():
    X = np.array([[10.0, 0.0], [10.0, 0.0]])
    before = X.copy()
    positive_update(X, np.array([[0, 1]]), 1.0)
    # sigma(-100) ~ 4e-44 gives a step far below the entries' resolution
    assert np.array_equal(X, before)


def test_positive_update_is_a_descent_step(rng):
    X = rng.normal(0, 0.5, (6, 3))
    pairs = np.array([[0, 1], [2, 3], [3, 2], [5, 0]])
    S = obj.similarity_matrix(pairs, 6)
    fd = finite_difference_gradient(lambda Y: obj.positive_loss(Y, S), X)
    eta = 1e-3
    step = (positive_update(X.copy(), pairs, eta) - X) / eta
    assert relative_error(step, -fd) < 1e-5


@given(st.permutations(list(range(8))))
def test_positive_update_order_independent(perm):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(5, 2))
    pairs = rng.integers(0, 5, (8, 2))
    a = positive_update(X.copy(), pairs, 0.1)
    b = positive_update(X.copy(), pairs[list(perm)], 0.1)
    assert np.allclose(a, b, atol=1e-14)


# --- negative sampling -----------------------------------------------------------

def test_sgns_without_negatives_is_identity(rng):
    X = rng.normal(size=(4, 2))
    before = X.copy()
    sgns_update(X, np.array([[0, 1]]), NegativeSampler(np.ones(4), 0.0), 0, 0.5, rng)
    assert np.array_equal(X, before)


def test_sgns_pushes_negative_away(rng):
    X = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
    sampler = NegativeSampler(np.array([0, 0, 1]), 1.0)  # always draws node 2
    sgns_update(X, np.array([[0, 1]]), sampler, 1, 0.5, rng)
    assert X[0] @ X[2] < 1.0


def test_uniform_sampler_frequencies():
    s = NegativeSampler(np.array([1, 5, 2, 9, 3]), alpha=0.0)
    draws = s.sample(100_000, substream(0, "t"))
    counts = np.bincount(draws, minlength=5)
    sd = np.sqrt(100_000 * 0.2 * 0.8)
    assert np.all(np.abs(counts - 20_000) < 4 * sd)


def test_degree_power_probabilities():
    s = NegativeSampler(np.array([1, 2, 4]), alpha=0.75)
    assert np.allclose(s.probs, [0.1815, 0.3052, 0.5133], atol=5e-5)
    w = np.array([1, 2, 4]) ** 0.75
    assert np.allclose(s.probs, w / w.sum(), atol=1e-15)


@given(arrays(np.int64, st.integers(1, 50), elements=st.integers(0, 30)), st.floats(0.0, 2.0))
def test_sampler_probabilities_sum_to_one(deg, alpha):
    if alpha > 0 and deg.sum() == 0:
        with pytest.raises(ValueError):
            NegativeSampler(deg, alpha)
        return
    s = NegativeSampler(deg, alpha)
    assert abs(s.probs.sum() - 1.0) < 1e-12
    if alpha > 0:
        assert np.all(s.probs[deg == 0] == 0)


def test_alias_draws_follow_probabilities():
    deg = np.array([1, 2, 4, 0, 8])
    s = NegativeSampler(deg, 1.0)
    draws = s.sample(200_000, substream(1, "alias"))
    freq = np.bincount(draws, minlength=5) / 200_000
    assert freq[3] == 0
    assert np.all(np.abs(freq - s.probs) < 4 * np.sqrt(s.probs * (1 - s.probs) / 200_000) + 1e-12)


# --- regulariser -------------------------------------------------------------------

def test_regulariser_leaves_centred_matrix_alone():
    X = np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert np.array_equal(dimreg_update(X.copy(), 1.0), X)


def test_regulariser_zeroes_identical_rows():
    X = np.ones((2, 2))
    assert np.array_equal(dimreg_update(X, 1.0), np.zeros((2, 2)))


@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.integers(1, 6)), elements=st.floats(-100, 100)),
       st.floats(0.0, 1.0))
def test_regulariser_shrinks_column_means(X, lam):
    mean = X.mean(axis=0)
    Y = dimreg_update(X.copy(), lam)
    assert np.allclose(Y.mean(axis=0), (1 - lam) * mean, atol=1e-9)
    assert np.allclose(Y - Y.mean(axis=0), X - mean, atol=1e-9)


def test_regulariser_step_matches_gradient(rng):
    X = rng.normal(size=(9, 3))
    lam = 0.3
    expected = X - lam / len(X) * 0.5 * obj.dimension_mean_grad(X)  # true gradient is 2 * 1X
    assert np.allclose(dimreg_update(X.copy(), lam), expected)


def test_uniform_weights_match_unweighted(rng):
    X = rng.normal(size=(7, 3))
    assert np.allclose(dimreg_update(X.copy(), 0.7, np.full(7, 1 / 7)), dimreg_update(X.copy(), 0.7))


def test_invalid_weights_rejected(rng):
    with pytest.raises(ValueError):
        dimreg_update(rng.normal(size=(3, 2)), 1.0, np.array([0.5, 0.5, 0.5]))


# --- constriction -----------------------------------------------------------------------

def test_constriction_examples():
    assert constriction(np.array([[1.0, 0.0], [-1.0, 0.0]])) == -1.0
    assert constriction(np.array([[1.0, 1.0], [1.0, 1.0]])) == 2.0
    assert constriction(np.array([[0.0, 0.0], [2.0, 3.0]])) == 0.0


@given(arrays(np.float64, st.tuples(st.integers(1, 40), st.integers(1, 5)), elements=st.floats(-10, 10)),
       st.integers(1, 7))
def test_blocked_constriction_equals_dense(X, block):
    assert np.isclose(constriction(X, block=block), np.min(X @ X.T), rtol=1e-12, atol=1e-12)


# --- initialisation --------------------------------------------------------------------------

def test_init_embeddings_scale_and_determinism():
    X = init_embeddings(1000, 16, 1e-2, seed=3)
    assert X.shape == (1000, 16)
    assert abs(X.std() - 1e-2) < 5e-4 and np.abs(X).max() < 1e-1
    assert np.array_equal(X, init_embeddings(1000, 16, 1e-2, seed=3))
    assert not np.array_equal(X, init_embeddings(1000, 16, 1e-2, seed=4))
    with pytest.raises(ValueError):
        init_embeddings(3, 2, 0.0, 0)


# --- training loop ----------------------------------------------------------------------------

@pytest.fixture(scope="module")
def sbm():
    g = generate_sbm(60, 2, 0.3, 0.02, seed=0)
    return g, pairs_from_edges(g)


def small_cfg(**kw):
    base = dict(dim=8, eta=0.05, epochs=2, batch_size=32, optimizer="sgd", n_negative=2)
    base.update(kw)
    return TrainConfig(**base)


def test_dimreg_training_separates_blocks(sbm):
    g, pairs = sbm
    X, _ = train(g, pairs, small_cfg(repulsion_mode="dimreg", epochs=60, eta=0.1), seed=0)
    blocks = sbm_blocks(60, 2)
    Z = X @ X.T
    same = blocks[:, None] == blocks[None, :]
    off = ~np.eye(60, dtype=bool)
    assert Z[same & off].mean() > Z[~same].mean()


def test_zero_lambda_dimreg_equals_attraction_only(sbm):
    g, pairs = sbm
    a, _ = train(g, pairs, small_cfg(repulsion_mode="dimreg", lam=0.0), seed=1)
    b, _ = train(g, pairs, small_cfg(repulsion_mode="none"), seed=1)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("mode", ["sgns", "none", "dimreg"])
@pytest.mark.parametrize("optimizer", ["sgd", "adam"])
def test_training_is_deterministic(sbm, mode, optimizer):
    g, pairs = sbm
    cfg = small_cfg(repulsion_mode=mode, optimizer=optimizer)
    a, ta = train(g, pairs, cfg, seed=5)
    b, tb = train(g, pairs, cfg, seed=5)
    assert np.array_equal(a, b)
    assert np.array_equal(ta.column("positive_loss"), tb.column("positive_loss"))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reports_batch(sbm):
    g, pairs = sbm
    with pytest.raises(TrainingDiverged) as info:
        train(g, pairs, small_cfg(repulsion_mode="none", eta=1e200, init_scale=1.0), seed=0)
    assert info.value.batch_index >= 0


def test_attraction_only_epoch_cap(sbm):
    g, pairs = sbm
    _, trace = train(g, pairs, small_cfg(repulsion_mode="none", epochs=10), seed=0)
    assert trace.column("epoch").max() == 2
    _, trace = train(g, pairs, small_cfg(repulsion_mode="none", epochs=4, none_epoch_cap=None), seed=0)
    assert trace.column("epoch").max() == 4


def test_untouched_nodes(sbm):
    g, _ = sbm
    pairs = PairSet(np.array([[0, 1], [1, 0]]), g.n)
    X0 = init_embeddings(g.n, 8, 1e-2, 0)
    X, _ = train(g, pairs, small_cfg(repulsion_mode="none"), seed=0, X0=X0)
    assert np.array_equal(X[2:], X0[2:])
    X, _ = train(g, pairs, small_cfg(repulsion_mode="dimreg", n_negative=1), seed=0, X0=X0)
    assert not np.array_equal(X[2:], X0[2:])


def test_sgns_needs_negatives():
    with pytest.raises(ValueError):
        TrainConfig(repulsion_mode="sgns", k=0)
    with pytest.raises(ValueError):
        TrainConfig(repulsion_mode="other")


def test_empty_pairs_rejected(sbm):
    g, _ = sbm
    with pytest.raises(ValueError):
        train(g, PairSet(np.zeros((0, 2), dtype=np.int64), g.n), small_cfg(), seed=0)


def test_trace_csv(sbm, tmp_path):
    g, pairs = sbm
    _, trace = train(g, pairs, small_cfg(repulsion_mode="dimreg", epochs=3), seed=0)
    trace.to_csv(tmp_path / "trace.csv")
    with open(tmp_path / "trace.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["epoch", "positive_loss", "constriction", "wall_clock_ms"]
    assert [int(r["epoch"]) for r in rows] == [0, 1, 2, 3]
    ms = [float(r["wall_clock_ms"]) for r in rows]
    assert ms[0] == 0 and all(b >= a for a, b in zip(ms, ms[1:]))
    X0 = init_embeddings(g.n, 8, 1e-2, 0)
    assert float(rows[0]["constriction"]) == constriction(X0)

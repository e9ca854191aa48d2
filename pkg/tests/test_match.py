import numpy as np
import pytest

from argpair import layers, match
from argpair.diffcore import ParameterStore, ShapeError, Tensor, grad_check, ops
from argpair.match import MatchConfig, rank_scores
from argpair.model import VARIANTS
from argpair.train import hinge_terms

from conftest import gradcheck_model, three_token_instance, tiny_config


def test_single_token_reply_attends_fully():
    rq = Tensor(np.array([[0.3, -1.0]]))
    h = Tensor(np.array([[[2.0, 5.0]]]))
    v, f_r = match.quotation_guided_attention(rq, h)
    assert v.data[0, 0] == 1.0
    np.testing.assert_array_equal(f_r.data, [[2.0, 5.0]])


def test_equal_dot_products_give_mean_state():
    rq = Tensor(np.array([[1.0, 0.0]]))
    h = Tensor(np.array([[[0.5, 1.0], [0.5, -3.0], [0.5, 8.0]]]))
    v, f_r = match.quotation_guided_attention(rq, h)
    np.testing.assert_allclose(v.data, 1 / 3)
    np.testing.assert_allclose(f_r.data, [[0.5, 2.0]])


def test_attention_matches_brute_force():
    rng = np.random.default_rng(0)
    rq, h = rng.normal(size=(1, 4)), rng.normal(size=(1, 3, 4))
    v, f_r = match.quotation_guided_attention(Tensor(rq), Tensor(h))
    dots = [sum(rq[0, d] * h[0, j, d] for d in range(4)) for j in range(3)]
    e = np.exp(np.array(dots) - max(dots))
    ref_v = e / e.sum()
    np.testing.assert_allclose(v.data[0], ref_v, atol=1e-12)
    np.testing.assert_allclose(f_r.data[0], sum(ref_v[j] * h[0, j] for j in range(3)), atol=1e-12)


def test_attention_masks_padding_and_is_shift_invariant():
    rng = np.random.default_rng(1)
    rq, h = rng.normal(size=(1, 3)), rng.normal(size=(1, 4, 3))
    mask = np.array([[True, True, False, False]])
    v, f_r = match.quotation_guided_attention(Tensor(rq), Tensor(h), mask)
    assert np.all(v.data[0, 2:] == 0.0)
    v2, _ = match.quotation_guided_attention(Tensor(rq), Tensor(h[:, :2]))
    np.testing.assert_allclose(v.data[0, :2], v2.data[0], atol=1e-12)
    # adding the same constant to every dot product leaves v unchanged
    dots = ops.dot(Tensor(h), Tensor(rq[:, None, :]))
    np.testing.assert_allclose(ops.softmax(dots + 7.5).data, ops.softmax(dots).data, atol=1e-12)


def test_attention_rejects_dimension_mismatch():
    with pytest.raises(ShapeError):
        match.quotation_guided_attention(Tensor(np.ones((1, 3))), Tensor(np.ones((1, 2, 4))))


def test_difference_vanishes_for_identical_representations():
    r = Tensor(np.array([[1.0, -2.0, 0.5]]))
    f = match.match_features(r, r, Tensor(np.ones((1, 2, 3))))
    assert np.all(f.f_d.data == 0.0)
    np.testing.assert_array_equal(f.f_p.data, r.data * r.data)
    assert f.f_m.shape == (1, 9)


def _score_store(n_in=4, h1=3, h2=2):
    store = ParameterStore()
    match.init_params(store, MatchConfig(hidden1=h1, hidden2=h2), n_in, np.random.default_rng(0))
    return store


def test_zero_weights_give_bias_score():
    store = _score_store()
    for t in store:
        store[t].data[...] = 0.0
    store["score.S.b"].data[...] = 1.25
    s = match.score(store, [Tensor(np.random.default_rng(0).normal(size=(3, 4)))])
    np.testing.assert_array_equal(s.data, [1.25] * 3)


def test_negative_pre_activations_cut_off():
    store = _score_store()
    store["match.H1.W"].data[...] = 0.0
    store["match.H1.b"].data[...] = -1.0
    store["score.S.b"].data[...] = -0.5
    s = match.score(store, [Tensor(np.ones((2, 4)))])
    np.testing.assert_array_equal(s.data, [-0.5, -0.5])


def test_score_matches_hand_arithmetic():
    store = _score_store()
    x1, x2 = np.array([[1.0, -1.0]]), np.array([[0.5, 2.0]])
    x = np.concatenate([x1, x2], axis=1)[0]
    W1, b1 = store["match.H1.W"].data, store["match.H1.b"].data
    W2, b2 = store["match.H2.W"].data, store["match.H2.b"].data
    Ws, bs = store["score.S.W"].data, store["score.S.b"].data
    h1 = [max(0.0, sum(x[i] * W1[i, j] for i in range(4)) + b1[j]) for j in range(3)]
    h2 = [max(0.0, sum(h1[i] * W2[i, j] for i in range(3)) + b2[j]) for j in range(2)]
    ref = sum(h2[i] * Ws[i, 0] for i in range(2)) + bs[0]
    s = match.score(store, [Tensor(x1), Tensor(x2)])
    assert s.data[0] == pytest.approx(ref, abs=1e-12)


@pytest.mark.parametrize("scores,rank,ties", [
    ([3.0, 1, 0, -1, -2], 1, 0),
    ([1.0, 2.0, 0, -1, -2], 2, 0),
    ([1.0, 1.0, 0, -1, -2], 1, 1),
    ([-5.0, 1, 0, -1, -2], 5, 0),
])
def test_rank_examples(scores, rank, ties):
    r = rank_scores("x", scores)
    assert r.rank == rank and r.ties == ties
    assert sorted(r.order) == list(range(5))


def test_order_is_stable_descending():
    assert rank_scores("x", [0.0, 2.0, 2.0, 1.0, 2.0]).order == [1, 2, 4, 3, 0]


def test_default_input_width():
    assert tiny_config().score_input_dim == 4 * 4 + 2 * 4 + 4
    from argpair.model import ModelConfig
    assert ModelConfig().score_input_dim == 2400


# Exactly-zero gradients (the score bias under a ranking loss, dead rectifier
# units) read as rounding noise under central differences; with the absolute
# 1e-8 floor of the relative error that noise must stay below ~1e-12, so the
# loss is scaled down. The scale leaves the relative error of nonzero entries
# unchanged.
LOSS_SCALE = 1e-3


@pytest.mark.parametrize("variant", sorted(VARIANTS))
def test_end_to_end_hinge_gradient(variant):
    model = gradcheck_model(variant)
    batch = [three_token_instance(s) for s in range(2)]

    def build():
        res = model.forward(batch, train=False, reconstruct=False)
        return ops.sum(hinge_terms(res.scores, 0.5)) * LOSS_SCALE

    for rep in grad_check(build, dict(model.store.items()), samples=10):
        assert rep.max_relative_error < 1e-4, (variant, rep)


def test_joint_training_loss_gradient():
    # training mode: Gumbel samples, dropout and reconstruction are all on the
    # graph; the seed fixes the noise so the loss is a deterministic function
    model = gradcheck_model("full")
    batch = [three_token_instance(s) for s in range(2)]

    def build():
        res = model.forward(batch, train=True, seed=4)
        hinge = ops.mean(ops.sum(hinge_terms(res.scores, 0.5), axis=1))
        return (res.recon.loss + res.kl + hinge) * LOSS_SCALE

    for rep in grad_check(build, dict(model.store.items()), samples=10):
        assert rep.max_relative_error < 1e-4, rep


def test_ranking_is_pure(tiny_model, toy_batch):
    a = tiny_model.rank(toy_batch)
    b = tiny_model.rank(toy_batch)
    assert [r.scores for r in a] == [r.scores for r in b]
    assert [r.instance_id for r in a] == [i.id for i in toy_batch]


def test_batched_scores_equal_single_instance_scores(tiny_model, toy_batch):
    together = tiny_model.forward(toy_batch).scores.data
    for i, inst in enumerate(toy_batch):
        alone = tiny_model.forward([inst]).scores.data[0]
        np.testing.assert_allclose(together[i], alone, atol=1e-12)


def test_dropout_only_in_training(tiny_model, toy_batch):
    a = tiny_model.forward(toy_batch, train=False).scores.data
    b = tiny_model.forward(toy_batch, train=False).scores.data
    np.testing.assert_array_equal(a, b)
    x = Tensor(np.ones((4, 6)))
    y = layers.dropout(x, 0.5, np.random.default_rng(0))
    assert np.any(y.data == 0.0)

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iotaml import nnet
from iotaml.nnet import Dataset, DenseNet, Hyperparams


def straight_line_forward(net, x):
    """Plain-Python re-evaluation, one neuron at a time."""
    a = [float(v) for v in x]
    for k, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = [sum(w[i][j] * a[j] for j in range(len(a))) + b[i] for i in range(len(b))]
        if k < len(net.weights) - 1:
            a = [max(0.0, v) for v in z]
        else:
            m = max(z)
            e = [math.exp(v - m) for v in z]
            a = [v / sum(e) for v in e]
    return a


def separable(n=600, seed=0, std=0.2):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    X = np.where(y[:, None] == 1, 4.0, 1.0) + rng.normal(0, std, (n, 10))
    return Dataset(X, y)


def small_net(rng, sizes=(4, 6, 5, 2)):
    ws = [rng.normal(0, 1, (o, i)) for i, o in zip(sizes[:-1], sizes[1:])]
    bs = [rng.normal(0, 0.5, o) for o in sizes[1:]]
    return DenseNet(list(sizes), ws, bs)


def test_zero_net_is_uniform():
    net = DenseNet.zeros([10, 100, 100, 100, 2])
    np.testing.assert_array_equal(nnet.forward(net, np.arange(10.0)), [0.5, 0.5])


def test_relu_clips_negative_preactivation():
    net = DenseNet([1, 1, 2], [np.array([[-1.0]]), np.array([[0.0], [1.0]])],
                   [np.zeros(1), np.array([0.3, -0.2])])
    pre, acts = nnet._forward_cached(net, np.array([[3.0]]))
    assert pre[0][0, 0] == -3.0
    assert acts[1][0, 0] == 0.0
    np.testing.assert_allclose(acts[-1][0], nnet.softmax(np.array([0.3, -0.2])))


def test_forward_matches_straight_line_oracle():
    rng = np.random.default_rng(7)
    for _ in range(20):
        net = DenseNet.create(10, rng=rng)
        for b in net.biases:
            b += rng.normal(0, 0.1, b.shape)
        x = rng.normal(2, 1, 10)
        np.testing.assert_allclose(nnet.forward(net, x), straight_line_forward(net, x),
                                   rtol=0, atol=1e-12)


def test_dimension_mismatch_names_lengths():
    net = DenseNet.create(10, rng=np.random.default_rng(0))
    with pytest.raises(nnet.DimensionError) as exc:
        nnet.forward(net, np.zeros(7))
    assert exc.value.expected == 10 and exc.value.actual == 7
    assert "10" in str(exc.value) and "7" in str(exc.value)


def test_uniform_output_loss_is_ln2():
    net = DenseNet.zeros([3, 4, 2])
    loss, _ = nnet.loss_and_gradient(net, Dataset(np.ones((5, 3)), [0, 1, 1, 0, 1]))
    assert loss == pytest.approx(math.log(2), abs=1e-15)


def _finite_difference(net, batch, param, idx, h=1e-5):
    old = param[idx]
    param[idx] = old + h
    up = nnet.mean_loss(net, batch)
    param[idx] = old - h
    down = nnet.mean_loss(net, batch)
    param[idx] = old
    return (up - down) / (2 * h)


def test_gradient_matches_central_differences_100_cases():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for case in range(100):
        net = small_net(rng)
        n = int(rng.integers(1, 8))
        batch = Dataset(rng.normal(0, 1.5, (n, 4)), rng.integers(0, 2, n))
        _, (gw, gb) = nnet.loss_and_gradient(net, batch)
        for param, grad in zip(net.params(), [*gw, *gb]):
            for idx in np.ndindex(param.shape):
                num = _finite_difference(net, batch, param, idx)
                ana = grad[idx]
                # central differences carry ~1e-10 roundoff, hence the floor
                denom = max(abs(num), abs(ana), 1e-5)
                worst = max(worst, abs(num - ana) / denom)
    assert worst <= 1e-4, worst


def test_duplicated_batch_same_loss_and_gradient():
    rng = np.random.default_rng(3)
    net = small_net(rng)
    batch = Dataset(rng.normal(size=(6, 4)), rng.integers(0, 2, 6))
    doubled = Dataset.concat([batch, batch])
    l1, (w1, b1) = nnet.loss_and_gradient(net, batch)
    l2, (w2, b2) = nnet.loss_and_gradient(net, doubled)
    assert l1 == pytest.approx(l2, rel=1e-14)
    for a, b in zip([*w1, *b1], [*w2, *b2]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


def test_loss_and_gradient_errors():
    net = DenseNet.zeros([2, 3, 2])
    with pytest.raises(ValueError, match="empty"):
        nnet.loss_and_gradient(net, Dataset(np.zeros((0, 2)), []))
    with pytest.raises(ValueError, match="0 or 1"):
        Dataset(np.zeros((2, 2)), [0, 2])


def test_training_reaches_99_percent_on_separable_set():
    data = separable()
    rng = np.random.default_rng(1)
    net, trace = nnet.train(DenseNet.create(10, rng=rng), data, Hyperparams(), rng)
    acc = np.mean(nnet.predict(net, data.features) == data.labels)
    assert acc >= 0.99
    assert len(trace) == 1000


def test_zero_learning_rate_returns_identical_net():
    data = separable(200)
    rng = np.random.default_rng(4)
    net = DenseNet.create(10, rng=rng)
    out, _ = nnet.train(net, data, Hyperparams(learning_rate=0.0, training_steps=20), rng)
    for a, b in zip(net.params(), out.params()):
        np.testing.assert_array_equal(a, b)


def test_same_seed_same_weights():
    data = separable(300)
    nets = []
    for _ in range(2):
        rng = np.random.default_rng(99)
        net = DenseNet.create(10, rng=rng)
        nets.append(nnet.train(net, data, Hyperparams(learning_rate=0.03, training_steps=200),
                               rng)[0])
    for a, b in zip(nets[0].params(), nets[1].params()):
        np.testing.assert_array_equal(a, b)


def test_invalid_hyperparams_rejected_before_mutation():
    data = separable(50)
    rng = np.random.default_rng(0)
    net = DenseNet.create(10, rng=rng)
    before = [p.copy() for p in net.params()]
    with pytest.raises(ValueError, match="batch_size"):
        nnet.train(net, data, Hyperparams(batch_size=100), rng)
    with pytest.raises(ValueError, match="decision_threshold"):
        nnet.train(net, data, Hyperparams(batch_size=10, decision_threshold=1.0), rng)
    for a, b in zip(before, net.params()):
        np.testing.assert_array_equal(a, b)


def test_full_set_loss_decreases_for_small_learning_rate():
    data = separable(400, seed=5)
    rng = np.random.default_rng(5)
    net = DenseNet.create(10, rng=rng)
    trained, _ = nnet.train(net, data, Hyperparams(learning_rate=0.01), rng)
    assert nnet.mean_loss(trained, data) < nnet.mean_loss(net, data)


def test_score_equal_to_tau_is_label_zero():
    net = DenseNet.zeros([10, 100, 2])
    assert nnet.classify(net, np.ones(10), 0.5) == (0, 0.5)


def test_classify_rejects_tau_outside_unit_interval():
    with pytest.raises(ValueError):
        nnet.classify(DenseNet.zeros([2, 2, 2]), np.ones(2), 1.0)


def test_trained_net_is_confident_on_far_busy_sample():
    data = separable()
    rng = np.random.default_rng(1)
    net, _ = nnet.train(DenseNet.create(10, rng=rng), data, Hyperparams(), rng)
    label, s = nnet.classify(net, np.full(10, 6.0))
    assert label == 1 and s >= 0.9


def test_hyper_search_single_candidate():
    data = separable(300)
    h = Hyperparams(training_steps=50)
    res = nnet.hyper_search([h], data[:200], data[200:], np.random.default_rng(0))
    assert res.hyperparams is h


def sigmoid_net():
    """One input x >= 0 maps to S = sigmoid(x)."""
    return DenseNet([1, 1, 2], [np.array([[1.0]]), np.array([[0.0], [1.0]])],
                    [np.zeros(1), np.zeros(2)])


def test_hyper_search_prefers_lower_worst_case_error():
    # label-0 / label-1 feature values rigged so that cutoff x=2 gives
    # (FA, MD) = (0.10, 0.02) and cutoff x=3 gives (0.05, 0.05)
    neg = [1.0] * 90 + [2.5] * 5 + [4.0] * 5
    pos = [1.5] * 2 + [2.5] * 3 + [5.0] * 95
    validation = Dataset(np.array(neg + pos)[:, None], [0] * 100 + [1] * 100)
    sig = lambda x: 1 / (1 + math.exp(-x))
    cands = [Hyperparams(learning_rate=0.0, training_steps=1, batch_size=1, decision_threshold=sig(2.0)),
             Hyperparams(learning_rate=0.0, training_steps=1, batch_size=1, decision_threshold=sig(3.0))]
    res = nnet.hyper_search(cands, validation, validation, np.random.default_rng(0),
                            init=sigmoid_net())
    (_, fa1, md1), (_, fa2, md2) = res.evaluated
    assert (fa1, md1) == pytest.approx((0.10, 0.02))
    assert (fa2, md2) == pytest.approx((0.05, 0.05))
    assert res.hyperparams is cands[1]


def test_hyper_search_tie_goes_to_first():
    validation = Dataset(np.array([[1.0], [5.0]]), [0, 1])
    cands = [Hyperparams(learning_rate=0.0, training_steps=1, batch_size=1) for _ in range(3)]
    res = nnet.hyper_search(cands, validation, validation, np.random.default_rng(0),
                            init=sigmoid_net())
    assert res.hyperparams is cands[0]


def test_hyper_search_needs_both_classes_in_validation():
    data = separable(100)
    one_class = data[data.labels == 1]
    with pytest.raises(ValueError, match="both labels"):
        nnet.hyper_search([Hyperparams(batch_size=10)], data, one_class, np.random.default_rng(0))


finite_logits = st.lists(st.floats(-300, 300), min_size=2, max_size=2)


@given(finite_logits)
def test_softmax_normalized_and_positive(logits):
    p = nnet.softmax(np.array(logits))
    assert abs(p.sum() - 1.0) <= 1e-9
    assert (p > 0).all()


@given(finite_logits, st.floats(-50, 50))
def test_softmax_shift_invariance(logits, c):
    z = np.array(logits)
    np.testing.assert_allclose(nnet.softmax(z + c), nnet.softmax(z), rtol=0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_forward_output_is_probability_vector(seed):
    rng = np.random.default_rng(seed)
    net = DenseNet.create(10, rng=rng)
    p = nnet.forward(net, rng.normal(0, 5, 10))
    assert abs(p.sum() - 1) <= 1e-9 and (p >= 0).all() and (p <= 1).all()

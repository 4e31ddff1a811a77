import numpy as np
import pytest

from tanhexp.activations import RELU, TANHEXP
from tanhexp.core import Rng
from tanhexp.data import Dataset
from tanhexp.nn import Activation, Dense, Model, build_mnist_net
from tanhexp.optim import Adam, SGD
from tanhexp.train import MetricsRecord, evaluate, final_accuracy, fit, train_epoch


def two_gaussians(n=200, seed=0):
    rng = Rng(seed)
    labels = (np.arange(n) % 2).astype(np.uint8)
    centers = np.where(labels[:, None] == 1, 1.5, -1.5)
    return Dataset(rng.normal(0.0, 1.0, n, 2) + centers, labels, "toy")


def small_mnist_like(n, seed):
    rng = Rng(seed)
    labels = (rng.random(n) * 10).astype(np.uint8)
    images = rng.random(n * 784).reshape(n, 784) * 0.2
    for i, c in enumerate(labels.tolist()):
        images[i, 70 * c : 70 * c + 70] = 1.0
    return Dataset(images, labels)


def test_two_gaussians_separable():
    data = two_gaussians()
    rng = Rng(1)
    model = Model([Dense(2, 8, rng), Activation(TANHEXP), Dense(8, 2, rng)])
    opt = SGD(0.1)
    for _ in range(50):
        train_epoch(model, data, opt, rng, batch_size=20)
    _, acc = evaluate(model, data)
    assert acc >= 0.95


def test_evaluate_is_pure():
    model = build_mnist_net(TANHEXP, 2, Rng(0))
    data = small_mnist_like(50, 1)
    before = [p.value.copy() for p in model.parameters()]
    first = evaluate(model, data, batch_size=16)
    assert evaluate(model, data, batch_size=16) == first
    assert all(np.array_equal(a, p.value) for a, p in zip(before, model.parameters()))
    assert 0.0 <= first[1] <= 1.0
    model.train()
    evaluate(model, data)
    assert model.training


def run(seed):
    train, test = small_mnist_like(96, seed), small_mnist_like(40, seed + 100)
    rng = Rng(seed)
    model = build_mnist_net(RELU, 2, rng, width=32)
    return list(fit(model, train, test, Adam(), rng, epochs=3, batch_size=16))


def test_fit_is_deterministic():
    a, b = run(4), run(4)
    key = lambda r: (r.epoch, r.train_loss, r.test_loss, r.test_accuracy)  # noqa: E731
    assert [key(r) for r in a] == [key(r) for r in b]
    assert [key(r) for r in run(5)] != [key(r) for r in a]


def test_fit_learns():
    records = run(6)
    assert [r.epoch for r in records] == [1, 2, 3]
    assert records[-1].train_loss < records[0].train_loss
    assert final_accuracy(records) == records[-1].test_accuracy


def test_singleton_tail_batch_is_skipped():
    # 33 samples at batch 16 leaves a trailing batch of one, which batchnorm cannot train on
    model = build_mnist_net(RELU, 1, Rng(0), width=8)
    loss = train_epoch(model, small_mnist_like(33, 2), Adam(), Rng(1), batch_size=16)
    assert np.isfinite(loss)


def test_empty_dataset_rejected():
    empty = Dataset(np.zeros((0, 784)), np.zeros(0, np.uint8))
    model = build_mnist_net(RELU, 1, Rng(0), width=8)
    with pytest.raises(ValueError):
        evaluate(model, empty)
    with pytest.raises(ValueError):
        train_epoch(model, empty, Adam(), Rng(0))


def test_metrics_row():
    row = MetricsRecord(1, 0.5, 0.25, 0.875, 1.23456).row()
    assert row == ["1", "0.5", "0.25", "0.875", "1.235"]
    assert len(MetricsRecord.FIELDS) == len(row)

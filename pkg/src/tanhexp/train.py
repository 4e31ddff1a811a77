from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np

from tanhexp.core import Rng
from tanhexp.data import Dataset, batches
from tanhexp.nn import Model, softmax_cross_entropy
from tanhexp.optim import Optimizer

log = logging.getLogger(__name__)

EVAL_BATCH = 1000


@dataclass
class MetricsRecord:
    epoch: int
    train_loss: float
    test_loss: float
    test_accuracy: float
    wall_seconds: float

    FIELDS = ("epoch", "train_loss", "test_loss", "test_accuracy", "wall_seconds")

    def row(self) -> list[str]:
        return [str(self.epoch), repr(self.train_loss), repr(self.test_loss),
                repr(self.test_accuracy), f"{self.wall_seconds:.3f}"]


def evaluate(model: Model, data: Dataset, batch_size: int = EVAL_BATCH) -> tuple[float, float]:
    """Mean loss and accuracy in eval mode. Leaves the model's mode as it found it."""
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    was_training = model.training
    model.eval()
    total_loss, correct = 0.0, 0
    try:
        for batch in batches(data, batch_size):
            value, _ = softmax_cross_entropy(model.forward(batch.x), batch.y)
            total_loss += value.loss * batch.y.shape[0]
            correct += value.correct
    finally:
        model.training = was_training
    return total_loss / len(data), correct / len(data)


def train_epoch(model: Model, data: Dataset, optimizer: Optimizer, rng: Rng,
                batch_size: int = 128) -> float:
    """One shuffled pass of forward, loss, backward, step. Returns the mean training loss."""
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    if batch_size < 2:
        raise ValueError("batch_size must be >= 2 for batch normalization")
    model.train()
    total, seen = 0.0, 0
    for batch in batches(data, batch_size, rng, shuffle=True, drop_singleton=True):
        value, grad = softmax_cross_entropy(model.forward(batch.x, rng), batch.y)
        model.backward(grad, input_grad=False)
        optimizer.step(model)
        total += value.loss * batch.y.shape[0]
        seen += batch.y.shape[0]
    model.eval()
    return total / seen


def fit(model: Model, train: Dataset, test: Dataset, optimizer: Optimizer, rng: Rng,
        epochs: int, batch_size: int = 128,
        on_epoch: Callable[[MetricsRecord], None] | None = None) -> Iterator[MetricsRecord]:
    """Train for ``epochs`` and yield one MetricsRecord per epoch."""
    for epoch in range(1, epochs + 1):
        start = time.perf_counter()
        train_loss = train_epoch(model, train, optimizer, rng, batch_size)
        test_loss, test_acc = evaluate(model, test)
        record = MetricsRecord(epoch, train_loss, test_loss, test_acc, time.perf_counter() - start)
        log.info("epoch %d train_loss=%.4f test_loss=%.4f test_acc=%.4f (%.1fs)",
                 epoch, train_loss, test_loss, test_acc, record.wall_seconds)
        if on_epoch is not None:
            on_epoch(record)
        yield record


def final_accuracy(records: list[MetricsRecord]) -> float:
    return records[-1].test_accuracy if records else float(np.nan)

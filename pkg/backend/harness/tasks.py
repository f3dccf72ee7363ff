"""
Desk-scale training tasks with closed-form gradients

Both tasks expose the same surface: init_params(), sample_batch() and
loss_and_grad(params, batch). The evaluator(batch) closure fixes a batch
and has the f(params) -> (loss, grads) shape used by gradient checks.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np

from errors import ConfigError
from harness.rng import SplitMix64

Params = Dict[str, np.ndarray]
Evaluator = Callable[[Params], Tuple[float, Params]]

TARGET_NORM = 0.5
BLOB_SPREAD = 2.0
HELD_OUT_BATCH = 512


@dataclass
class MatRegTask:
    """
    Matrix regression toward a hidden W* (n x m)

    loss = ||(W - W*) X||_F^2 / (2 b), grad = (W - W*) X X^T / b
    with Gaussian X of shape m x b. W* is scaled so its spectral norm
    sits near TARGET_NORM.
    """

    seed: int
    n: int = 32
    m: int = 32
    batch: int = 64
    target: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 2 or self.m < 2:
            raise ConfigError(f"matreg needs n, m >= 2, got {self.n} x {self.m}")
        if self.batch < 1:
            raise ConfigError(f"batch must be >= 1, got {self.batch}")
        root = SplitMix64(self.seed)
        scale = TARGET_NORM / (np.sqrt(self.n) + np.sqrt(self.m))
        self.target = root.child(0).normal((self.n, self.m)) * scale
        self._data = root.child(1)

    def init_params(self) -> Params:
        return {"W": np.zeros((self.n, self.m))}

    def sample_batch(self) -> np.ndarray:
        return self._data.normal((self.m, self.batch))

    def loss_and_grad(self, params: Params, X: np.ndarray) -> Tuple[float, Params]:
        R = (params["W"] - self.target) @ X
        b = X.shape[1]
        loss = 0.5 * float(np.einsum("ij,ij->", R, R)) / b
        return loss, {"W": (R @ X.T) / b}

    def held_out_loss(self, params: Params) -> float:
        """Expected loss over x ~ N(0, I): ||W - W*||_F^2 / 2"""
        D = params["W"] - self.target
        return 0.5 * float(np.einsum("ij,ij->", D, D))

    def evaluator(self, X: np.ndarray) -> Evaluator:
        return lambda params: self.loss_and_grad(params, X)


@dataclass
class MLPTask:
    """
    Two-layer tanh MLP with softmax cross-entropy on Gaussian blobs

    Params: W1 (hidden x inputs), b1, W2 (classes x hidden), b2.
    A batch is (X: batch x inputs, y: class labels).
    """

    seed: int
    inputs: int = 16
    hidden: int = 32
    classes: int = 4
    batch: int = 64
    centers: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if min(self.inputs, self.hidden) < 1 or self.classes < 2:
            raise ConfigError(
                f"mlp needs inputs, hidden >= 1 and classes >= 2, got "
                f"{self.inputs}/{self.hidden}/{self.classes}"
            )
        if self.batch < 1:
            raise ConfigError(f"batch must be >= 1, got {self.batch}")
        root = SplitMix64(self.seed)
        self.centers = root.child(0).normal((self.classes, self.inputs)) * BLOB_SPREAD
        self._init = root.child(1)
        self._data = root.child(2)
        self._held_out = self._draw(root.child(3), HELD_OUT_BATCH)

    def init_params(self) -> Params:
        return {
            "W1": self._init.normal((self.hidden, self.inputs)) / np.sqrt(self.inputs),
            "b1": np.zeros(self.hidden),
            "W2": self._init.normal((self.classes, self.hidden)) / np.sqrt(self.hidden),
            "b2": np.zeros(self.classes),
        }

    def _draw(self, rng: SplitMix64, size: int) -> Tuple[np.ndarray, np.ndarray]:
        y = rng.integers(self.classes, size)
        X = self.centers[y] + rng.normal((size, self.inputs))
        return X, y

    def sample_batch(self) -> Tuple[np.ndarray, np.ndarray]:
        return self._draw(self._data, self.batch)

    def held_out_loss(self, params: Params) -> float:
        """Loss on a fixed batch drawn once from its own stream"""
        return self.loss_and_grad(params, self._held_out)[0]

    def loss_and_grad(self, params: Params, batch: Tuple[np.ndarray, np.ndarray]) -> Tuple[float, Params]:
        X, y = batch
        b = X.shape[0]
        rows = np.arange(b)

        H = np.tanh(X @ params["W1"].T + params["b1"])
        logits = H @ params["W2"].T + params["b2"]
        shifted = logits - logits.max(axis=1, keepdims=True)
        log_norm = np.log(np.exp(shifted).sum(axis=1))
        loss = float(np.mean(log_norm - shifted[rows, y]))

        dlogits = np.exp(shifted - log_norm[:, None])
        dlogits[rows, y] -= 1.0
        dlogits /= b
        dH = dlogits @ params["W2"]
        dZ = dH * (1.0 - H * H)
        return loss, {
            "W1": dZ.T @ X,
            "b1": dZ.sum(axis=0),
            "W2": dlogits.T @ H,
            "b2": dlogits.sum(axis=0),
        }

    def evaluator(self, batch: Tuple[np.ndarray, np.ndarray]) -> Evaluator:
        return lambda params: self.loss_and_grad(params, batch)


def task_matreg(seed: int, n: int = 32, m: int = 32, batch: int = 64) -> MatRegTask:
    return MatRegTask(seed=seed, n=n, m=m, batch=batch)


def task_mlp(seed: int, inputs: int = 16, hidden: int = 32, classes: int = 4, batch: int = 64) -> MLPTask:
    return MLPTask(seed=seed, inputs=inputs, hidden=hidden, classes=classes, batch=batch)

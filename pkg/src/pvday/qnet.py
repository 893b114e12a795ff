"""Feedforward quantile network trained from scratch with numpy.

A small multi-layer perceptron with softplus hidden activations and one
linear output per (horizon step, quantile). Training minimizes the pinball
loss with mini-batch adaptive-moment gradient descent and early stopping
on validation loss; the best-epoch parameters are restored. Everything is
deterministic given the config seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pvday.errors import DivergedLoss


@dataclass(frozen=True)
class TrainConfig:
    hidden: tuple[int, ...] = (64, 64)
    learning_rate: float = 1e-3
    batch_size: int = 64
    max_epochs: int = 200
    patience: int = 10
    weight_decay: float = 0.0  # decoupled shrinkage of hidden weights
    rng_seed: int = 0

    def __post_init__(self):
        if self.patience >= self.max_epochs:
            raise ValueError("patience must be smaller than max_epochs")
        if not self.hidden:
            raise ValueError("at least one hidden layer required")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")


def _softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_params(d_in: int, hidden: tuple[int, ...], d_out: int,
                rng: np.random.Generator) -> list[tuple[np.ndarray, np.ndarray]]:
    sizes = [d_in, *hidden, d_out]
    params = []
    for a, b in zip(sizes[:-1], sizes[1:]):
        w = rng.normal(0.0, np.sqrt(2.0 / a), size=(a, b))
        params.append((w, np.zeros(b)))
    return params


def forward(params, x: np.ndarray) -> np.ndarray:
    h = x
    for w, b in params[:-1]:
        h = _softplus(h @ w + b)
    w, b = params[-1]
    return h @ w + b


def pinball(y: np.ndarray, yhat: np.ndarray, quantiles: np.ndarray) -> float:
    """Mean over points of the per-point sum of quantile losses.

    y: (n, t); yhat: (n, t, k) for quantile set of size k.
    """
    err = y[..., None] - yhat
    q = quantiles.reshape(1, 1, -1)
    loss = np.maximum(q * err, (q - 1.0) * err)
    return float(loss.sum(axis=-1).mean())


def _pinball_grad(y: np.ndarray, yhat: np.ndarray, quantiles: np.ndarray) -> np.ndarray:
    """d pinball / d yhat, averaged the same way as the loss."""
    err = y[..., None] - yhat
    q = quantiles.reshape(1, 1, -1)
    g = np.where(err > 0, -q, 1.0 - q)
    return g / (y.shape[0] * y.shape[1])


def loss_and_grads(params, x: np.ndarray, y: np.ndarray,
                   quantiles: np.ndarray) -> tuple[float, list]:
    """Pinball loss and its analytic parameter gradients.

    y is (n, t); the network output is reshaped to (n, t, k).
    """
    n, t = y.shape
    k = quantiles.size
    activations = [x]
    pre = []
    h = x
    for w, b in params[:-1]:
        z = h @ w + b
        pre.append(z)
        h = _softplus(z)
        activations.append(h)
    w_out, b_out = params[-1]
    out = h @ w_out + b_out
    yhat = out.reshape(n, t, k)
    loss = pinball(y, yhat, quantiles)

    delta = _pinball_grad(y, yhat, quantiles).reshape(n, t * k)
    grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(params)
    grads[-1] = (activations[-1].T @ delta, delta.sum(axis=0))
    back = delta @ w_out.T
    for layer in range(len(params) - 2, -1, -1):
        back = back * _sigmoid(pre[layer])
        w, _ = params[layer]
        grads[layer] = (activations[layer].T @ back, back.sum(axis=0))
        if layer > 0:
            back = back @ w.T
    return loss, grads


def train(
    x_train: np.ndarray,
    y_train: np.ndarray,
    x_val: np.ndarray,
    y_val: np.ndarray,
    quantiles: np.ndarray,
    cfg: TrainConfig,
) -> tuple[list, list[dict]]:
    """Fit the network; returns (best parameters, per-epoch log)."""
    rng = np.random.default_rng(cfg.rng_seed)
    n, t = y_train.shape
    d_out = t * quantiles.size
    params = init_params(x_train.shape[1], cfg.hidden, d_out, rng)
    # start the head at the unconditional target quantiles: pinball
    # gradients have constant magnitude, so a cold head converges slowly
    w_out, _ = params[-1]
    base = np.quantile(y_train, quantiles, axis=0)  # (k, t)
    params[-1] = (w_out * 0.01, np.ascontiguousarray(base.T).reshape(-1))

    adam_m = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    adam_v = [(np.zeros_like(w), np.zeros_like(b)) for w, b in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    def val_loss(p):
        yhat = forward(p, x_val).reshape(y_val.shape[0], t, quantiles.size)
        return pinball(y_val, yhat, quantiles)

    best = np.inf
    best_params = [(w.copy(), b.copy()) for w, b in params]
    wait = 0
    log: list[dict] = []
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n)
        for lo in range(0, n, cfg.batch_size):
            idx = order[lo: lo + cfg.batch_size]
            loss, grads = loss_and_grads(params, x_train[idx], y_train[idx], quantiles)
            if not np.isfinite(loss):
                raise DivergedLoss(f"non-finite training loss at epoch {epoch}")
            step += 1
            new_params = []
            for i, ((w, b), (gw, gb)) in enumerate(zip(params, grads)):
                mw, mb = adam_m[i]
                vw, vb = adam_v[i]
                mw = beta1 * mw + (1 - beta1) * gw
                mb = beta1 * mb + (1 - beta1) * gb
                vw = beta2 * vw + (1 - beta2) * gw * gw
                vb = beta2 * vb + (1 - beta2) * gb * gb
                adam_m[i] = (mw, mb)
                adam_v[i] = (vw, vb)
                corr1 = 1 - beta1 ** step
                corr2 = 1 - beta2 ** step
                w = w - cfg.learning_rate * (mw / corr1) / (np.sqrt(vw / corr2) + eps)
                b = b - cfg.learning_rate * (mb / corr1) / (np.sqrt(vb / corr2) + eps)
                if cfg.weight_decay > 0:
                    w = w * (1.0 - cfg.learning_rate * cfg.weight_decay)
                new_params.append((w, b))
            params = new_params
        tr = pinball(y_train, forward(params, x_train).reshape(n, t, quantiles.size),
                     quantiles)
        vl = val_loss(params)
        if not (np.isfinite(tr) and np.isfinite(vl)):
            raise DivergedLoss(f"non-finite loss at epoch {epoch}")
        log.append({"epoch": epoch, "train_loss": tr, "val_loss": vl})
        if vl < best - 1e-12:
            best = vl
            best_params = [(w.copy(), b.copy()) for w, b in params]
            wait = 0
        else:
            wait += 1
            if wait >= cfg.patience:
                break
    return best_params, log


def predict_raw(params, x: np.ndarray, t: int, k: int) -> np.ndarray:
    """Network outputs reshaped to (n, t, k) with quantiles sorted per point."""
    out = forward(params, x).reshape(x.shape[0], t, k)
    return np.sort(out, axis=-1)

"""Log-domain arithmetic, recurrent/convolutional cell kernels, and gradient checking.

Everything here is pure numpy. The kernels (`lstm_cell_forward` and friends)
are shared between the reverse-mode tape in :mod:`rolescribe.autodiff` and the
cache-free inference paths in :mod:`rolescribe.model`, so the two can never
drift apart.

Log-domain convention: ``-inf`` is a legal log probability meaning "probability
zero". All reductions here treat it as the additive identity and never produce
NaN from all-``-inf`` inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

NEG_INF = float("-inf")


def log_sum_exp(values: Sequence[float]) -> float:
    """Return log(sum(exp(v))) of a sequence, stable under large magnitudes.

    Raises ValueError on an empty sequence. If every element is -inf the
    result is -inf (never NaN).
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("log_sum_exp requires at least one element")
    m = np.max(arr)
    if m == NEG_INF:
        return NEG_INF
    return float(m + np.log(np.sum(np.exp(arr - m))))


def logsumexp(arr: np.ndarray, axis: int | None = None) -> np.ndarray | float:
    """Axis-aware log-sum-exp with the same -inf guarantees as log_sum_exp."""
    arr = np.asarray(arr, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("logsumexp requires at least one element")
    if axis is None:
        return log_sum_exp(arr.ravel())
    m = np.max(arr, axis=axis, keepdims=True)
    safe = np.where(np.isneginf(m), 0.0, m)
    with np.errstate(divide="ignore"):
        out = np.squeeze(safe, axis=axis) + np.log(
            np.sum(np.exp(arr - safe), axis=axis)
        )
    return np.where(np.isneginf(np.squeeze(m, axis=axis)), NEG_INF, out)


def log_softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    """log(softmax(x)) along `axis`; shift-invariant and overflow-free."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("log_softmax requires finite inputs")
    shifted = x - np.max(x, axis=axis, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=axis, keepdims=True))


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int,
                 dtype=np.float64) -> np.ndarray:
    """Uniform [-k, k] with k = 1/sqrt(fan_in); deterministic given `rng`."""
    k = 1.0 / np.sqrt(float(fan_in))
    return rng.uniform(-k, k, size=shape).astype(dtype)


# ---------------------------------------------------------------------------
# LSTM cell
# ---------------------------------------------------------------------------
# Gate layout along the 4H axis: input, forget, candidate, output (i, f, g, o).


@dataclass
class LstmParams:
    """Weights of one LSTM direction: x->gates, h->gates, gate bias."""

    w_x: np.ndarray  # (input_dim, 4*hidden)
    w_h: np.ndarray  # (hidden, 4*hidden)
    b: np.ndarray    # (4*hidden,)

    @property
    def hidden_size(self) -> int:
        return self.w_h.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_x.shape[0]

    def validate(self) -> None:
        h = self.hidden_size
        if self.w_x.shape[1] != 4 * h or self.w_h.shape != (h, 4 * h) or self.b.shape != (4 * h,):
            raise ValueError(
                f"inconsistent LSTM parameter shapes: w_x {self.w_x.shape}, "
                f"w_h {self.w_h.shape}, b {self.b.shape}"
            )


def lstm_cell_forward(zx: np.ndarray, h_prev: np.ndarray, c_prev: np.ndarray,
                      w_h: np.ndarray):
    """One LSTM step given zx = x @ w_x + b already computed.

    Returns (h, c, cache); the cache feeds lstm_cell_backward.
    """
    z = zx + h_prev @ w_h
    hidden = w_h.shape[0]
    i = sigmoid(z[..., 0 * hidden:1 * hidden])
    f = sigmoid(z[..., 1 * hidden:2 * hidden])
    g = np.tanh(z[..., 2 * hidden:3 * hidden])
    o = sigmoid(z[..., 3 * hidden:4 * hidden])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (h_prev, c_prev, i, f, g, o, tc)


def lstm_cell_backward(dh: np.ndarray, dc: np.ndarray, cache, w_h: np.ndarray):
    """Backward of one step; returns (dzx, dh_prev, dc_prev, dw_h contribution)."""
    h_prev, c_prev, i, f, g, o, tc = cache
    do = dh * tc
    dc_total = dc + dh * o * (1.0 - tc * tc)
    di = dc_total * g
    df = dc_total * c_prev
    dg = dc_total * i
    dc_prev = dc_total * f
    dz = np.concatenate([
        di * i * (1.0 - i),
        df * f * (1.0 - f),
        dg * (1.0 - g * g),
        do * o * (1.0 - o),
    ], axis=-1)
    dh_prev = dz @ w_h.T
    dw_h = np.outer(h_prev, dz) if h_prev.ndim == 1 else h_prev.T @ dz
    return dz, dh_prev, dc_prev, dw_h


def lstm_step(params: LstmParams, x: np.ndarray,
              state: tuple[np.ndarray, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Pure single LSTM step: (hidden, cell) from input vector and previous state.

    The new hidden lies in (-1, 1) elementwise. Raises ValueError on shape
    mismatch between `x`/`state` and `params`.
    """
    params.validate()
    h_prev, c_prev = state
    if x.shape[-1] != params.input_size:
        raise ValueError(f"input dim {x.shape[-1]} != expected {params.input_size}")
    if h_prev.shape[-1] != params.hidden_size or c_prev.shape[-1] != params.hidden_size:
        raise ValueError("state dims do not match params.hidden_size")
    zx = x @ params.w_x + params.b
    h, c, _ = lstm_cell_forward(zx, h_prev, c_prev, params.w_h)
    return h, c


def lstm_run(params: LstmParams, xs: np.ndarray) -> np.ndarray:
    """Run a whole sequence (T, input_dim) from zero state; returns (T, hidden)."""
    params.validate()
    t_len = xs.shape[0]
    hidden = params.hidden_size
    zx = xs @ params.w_x + params.b
    h = np.zeros(hidden, dtype=xs.dtype)
    c = np.zeros(hidden, dtype=xs.dtype)
    out = np.empty((t_len, hidden), dtype=xs.dtype)
    for t in range(t_len):
        h, c, _ = lstm_cell_forward(zx[t], h, c, params.w_h)
        out[t] = h
    return out


# ---------------------------------------------------------------------------
# Temporal convolution / pooling kernels
# ---------------------------------------------------------------------------


def conv1d_cols(x: np.ndarray, kernel: int) -> np.ndarray:
    """im2col for a same-padded 1D convolution over (T, C): returns (T, kernel*C)."""
    t_len, channels = x.shape
    left = (kernel - 1) // 2
    right = kernel - 1 - left
    padded = np.zeros((t_len + left + right, channels), dtype=x.dtype)
    padded[left:left + t_len] = x
    cols = np.empty((t_len, kernel * channels), dtype=x.dtype)
    for k in range(kernel):
        cols[:, k * channels:(k + 1) * channels] = padded[k:k + t_len]
    return cols


def conv1d_cols_backward(dcols: np.ndarray, t_len: int, channels: int,
                         kernel: int) -> np.ndarray:
    """Scatter im2col gradients back onto the (T, C) input."""
    left = (kernel - 1) // 2
    right = kernel - 1 - left
    dpad = np.zeros((t_len + left + right, channels), dtype=dcols.dtype)
    for k in range(kernel):
        dpad[k:k + t_len] += dcols[:, k * channels:(k + 1) * channels]
    return dpad[left:left + t_len]


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Same-padded temporal convolution: (T, Cin) x (K*Cin, Cout) -> (T, Cout)."""
    kernel = w.shape[0] // x.shape[1]
    return conv1d_cols(x, kernel) @ w + b


def maxpool1d_forward(x: np.ndarray, size: int):
    """Non-overlapping temporal max pooling, trailing remainder frames dropped.

    Returns (pooled (T//size, C), argmax indices used by the backward pass).
    """
    t_out = x.shape[0] // size
    if t_out == 0:
        raise ValueError(f"sequence of {x.shape[0]} frames too short for pool size {size}")
    xr = x[:t_out * size].reshape(t_out, size, x.shape[1])
    idx = np.argmax(xr, axis=1)
    pooled = np.take_along_axis(xr, idx[:, None, :], axis=1)[:, 0, :]
    return pooled, idx


def maxpool1d_backward(dout: np.ndarray, idx: np.ndarray, t_in: int, size: int) -> np.ndarray:
    t_out, channels = dout.shape
    dxr = np.zeros((t_out, size, channels), dtype=dout.dtype)
    np.put_along_axis(dxr, idx[:, None, :], dout[:, None, :], axis=1)
    dx = np.zeros((t_in, channels), dtype=dout.dtype)
    dx[:t_out * size] = dxr.reshape(t_out * size, channels)
    return dx


# ---------------------------------------------------------------------------
# Gradient checking
# ---------------------------------------------------------------------------


def check_gradient(f: Callable[[np.ndarray], tuple[float, np.ndarray]],
                   point: np.ndarray, epsilon: float = 1e-5) -> float:
    """Max relative error between f's analytic gradient and central differences.

    `f` maps a parameter vector to (scalar value, gradient of same shape).
    The error at each coordinate is |analytic - numeric| / max(1, |analytic|).
    Raises ValueError naming the coordinate if any evaluation is non-finite.
    """
    point = np.asarray(point, dtype=np.float64)
    value, grad = f(point)
    if not np.isfinite(value):
        raise ValueError("function value non-finite at the base point")
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != point.shape:
        raise ValueError(f"gradient shape {grad.shape} != point shape {point.shape}")
    worst = 0.0
    for idx in np.ndindex(point.shape):
        for sign in (+1.0, -1.0):
            shifted = point.copy()
            shifted[idx] += sign * epsilon
            val, _ = f(shifted)
            if not np.isfinite(val):
                raise ValueError(f"function value non-finite at coordinate {idx}")
            if sign > 0:
                f_plus = val
            else:
                f_minus = val
        numeric = (f_plus - f_minus) / (2.0 * epsilon)
        analytic = grad[idx]
        err = abs(analytic - numeric) / max(1.0, abs(analytic))
        worst = max(worst, err)
    return worst

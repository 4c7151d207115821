"""A small provably-powerful graph network predicting per-edge clean-graph logits.

The input pairs the dense adjacency of the noisy graph with the noise level on
the diagonal, giving an n x n x 2 tensor. Each block applies two feature-wise
two-layer perceptrons, multiplies their outputs channel-by-channel as n x n
matrices, concatenates a third feature-wise (skip) transform, and instance-
normalizes the result. The outputs of all block depths are concatenated and a
feature-wise head reduces them to one logit per node pair; logits are
symmetrized by transpose-averaging and the upper triangle is returned.

Forward and backward are hand-written numpy in float64; the backward pass is
validated against central finite differences in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .denoiser import DenoiserOutput
from .graphs import Graph
from .schedule import NoiseSchedule

__all__ = [
    "MiniPPGNParams",
    "MiniPPGNDenoiser",
    "PpgnNumericsError",
    "init_params",
    "mini_ppgn_forward",
    "mini_ppgn_backward",
]

NORM_EPS = 1e-5


class PpgnNumericsError(FloatingPointError):
    """Non-finite activations, with the offending layer named."""


@dataclass(frozen=True)
class MiniPPGNParams:
    """Network weights: ``d`` blocks of width ``h`` plus the output head.

    ``tensors`` maps canonical names (``b0.m1.w0`` ... ``head.b1``) to float64
    arrays; the insertion order is the canonical serialization order.
    """

    d: int
    h: int
    tensors: dict[str, np.ndarray]

    def size(self) -> int:
        return sum(t.size for t in self.tensors.values())

    def copy(self) -> MiniPPGNParams:
        return MiniPPGNParams(self.d, self.h, {k: v.copy() for k, v in self.tensors.items()})


def _mlp_shapes(c_in: int, h: int, c_out: int):
    return [("w0", (c_in, h)), ("b0", (h,)), ("w1", (h, c_out)), ("b1", (c_out,))]


def init_params(rng: np.random.Generator, d: int, h: int, in_channels: int = 2) -> MiniPPGNParams:
    """Centered-uniform weights scaled by fan-in; zero biases; identity norms."""
    if d < 1:
        raise ValueError(f"block count must be >= 1, got {d}")
    if h < 2 or h % 2:
        raise ValueError(f"hidden width must be even and >= 2, got {h}")
    half = h // 2
    tensors: dict[str, np.ndarray] = {}

    def add_mlp(prefix: str, c_in: int, c_out: int):
        for name, shape in _mlp_shapes(c_in, h, c_out):
            if name.startswith("w"):
                fan_in = shape[0]
                tensors[f"{prefix}.{name}"] = rng.uniform(
                    -1 / np.sqrt(fan_in), 1 / np.sqrt(fan_in), shape
                )
            else:
                tensors[f"{prefix}.{name}"] = np.zeros(shape)

    for k in range(d):
        c_in = in_channels if k == 0 else h
        add_mlp(f"b{k}.m1", c_in, half)
        add_mlp(f"b{k}.m2", c_in, half)
        add_mlp(f"b{k}.skip", c_in, half)
        tensors[f"b{k}.norm.scale"] = np.ones(h)
        tensors[f"b{k}.norm.shift"] = np.zeros(h)
    add_mlp("head", d * h, 1)
    return MiniPPGNParams(d=d, h=h, tensors=tensors)


def _mlp_forward(t: dict[str, np.ndarray], prefix: str, x: np.ndarray):
    act = np.tanh(x @ t[f"{prefix}.w0"] + t[f"{prefix}.b0"])
    out = act @ t[f"{prefix}.w1"] + t[f"{prefix}.b1"]
    return out, act


def _mlp_backward(t, grads, prefix: str, x: np.ndarray, act: np.ndarray, dout: np.ndarray):
    grads[f"{prefix}.w1"] += act.T @ dout
    grads[f"{prefix}.b1"] += dout.sum(axis=0)
    dpre = (dout @ t[f"{prefix}.w1"].T) * (1 - act * act)
    grads[f"{prefix}.w0"] += x.T @ dpre
    grads[f"{prefix}.b0"] += dpre.sum(axis=0)
    return dpre @ t[f"{prefix}.w0"].T


def _channel_matmul(m1: np.ndarray, m2: np.ndarray, n: int) -> np.ndarray:
    # (N, half) pairs of per-channel n x n matrices -> their products.
    half = m1.shape[1]
    a = m1.reshape(n, n, half).transpose(2, 0, 1)
    b = m2.reshape(n, n, half).transpose(2, 0, 1)
    return (a @ b).transpose(1, 2, 0).reshape(n * n, half)


def _forward_impl(params: MiniPPGNParams, a_t: Graph, beta_bar_t: float):
    t = params.tensors
    n = a_t.n
    N = n * n
    x_in = np.empty((n, n, 2))
    x_in[:, :, 0] = a_t.adjacency()
    x_in[:, :, 1] = beta_bar_t * np.eye(n)
    x = x_in.reshape(N, 2)

    blocks = []
    outputs = []
    for k in range(params.d):
        m1, act1 = _mlp_forward(t, f"b{k}.m1", x)
        m2, act2 = _mlp_forward(t, f"b{k}.m2", x)
        s, act_s = _mlp_forward(t, f"b{k}.skip", x)
        z = np.concatenate([_channel_matmul(m1, m2, n), s], axis=1)
        mean = z.mean(axis=0)
        inv_std = 1.0 / np.sqrt(z.var(axis=0) + NORM_EPS)
        zhat = (z - mean) * inv_std
        y = zhat * t[f"b{k}.norm.scale"] + t[f"b{k}.norm.shift"]
        if not np.all(np.isfinite(y)):
            raise PpgnNumericsError(f"non-finite values in block {k} output")
        blocks.append(
            {"x": x, "m1": m1, "act1": act1, "m2": m2, "act2": act2,
             "act_s": act_s, "zhat": zhat, "inv_std": inv_std}
        )
        outputs.append(y)
        x = y

    concat = np.concatenate(outputs[::-1], axis=1)  # deepest block first
    head_out, head_act = _mlp_forward(t, "head", concat)
    full = head_out.reshape(n, n)
    sym = 0.5 * (full + full.T)
    iu, ju = np.triu_indices(n, k=1)
    logits = sym[iu, ju]
    if not np.all(np.isfinite(logits)):
        raise PpgnNumericsError("non-finite values in output head")
    cache = {"blocks": blocks, "concat": concat, "head_act": head_act, "n": n}
    return logits, cache


def _backward_impl(params: MiniPPGNParams, cache, dlogits: np.ndarray) -> dict[str, np.ndarray]:
    t = params.tensors
    n = cache["n"]
    N = n * n
    grads = {k: np.zeros_like(v) for k, v in t.items()}

    dsym = np.zeros((n, n))
    iu, ju = np.triu_indices(n, k=1)
    dsym[iu, ju] = 0.5 * dlogits
    dsym[ju, iu] = 0.5 * dlogits
    dconcat = _mlp_backward(t, grads, "head", cache["concat"], cache["head_act"],
                            dsym.reshape(N, 1))

    h = params.h
    half = h // 2
    dx_next = np.zeros((N, h))
    for k in reversed(range(params.d)):
        blk = cache["blocks"][k]
        # concat order is [block d-1, ..., block 0]
        offset = (params.d - 1 - k) * h
        dy = dconcat[:, offset:offset + h] + dx_next

        # instance norm
        zhat = blk["zhat"]
        grads[f"b{k}.norm.scale"] += (dy * zhat).sum(axis=0)
        grads[f"b{k}.norm.shift"] += dy.sum(axis=0)
        dzhat = dy * t[f"b{k}.norm.scale"]
        dz = blk["inv_std"] * (
            dzhat - dzhat.mean(axis=0) - zhat * (dzhat * zhat).mean(axis=0)
        )

        # channel-wise matrix product and the three feature-wise transforms
        dp = dz[:, :half].reshape(n, n, half).transpose(2, 0, 1)
        m1 = blk["m1"].reshape(n, n, half).transpose(2, 0, 1)
        m2 = blk["m2"].reshape(n, n, half).transpose(2, 0, 1)
        dm1 = (dp @ m2.transpose(0, 2, 1)).transpose(1, 2, 0).reshape(N, half)
        dm2 = (m1.transpose(0, 2, 1) @ dp).transpose(1, 2, 0).reshape(N, half)
        x = blk["x"]
        dx = _mlp_backward(t, grads, f"b{k}.m1", x, blk["act1"], dm1)
        dx += _mlp_backward(t, grads, f"b{k}.m2", x, blk["act2"], dm2)
        dx += _mlp_backward(t, grads, f"b{k}.skip", x, blk["act_s"], dz[:, half:])
        dx_next = dx

    return grads


def mini_ppgn_forward(params: MiniPPGNParams, a_t: Graph, beta_bar_t: float) -> DenoiserOutput:
    """Predict per-pair clean-edge logits for a noisy graph at one noise level."""
    logits, _ = _forward_impl(params, a_t, beta_bar_t)
    return DenoiserOutput.from_logits(logits)


def mini_ppgn_backward(
    params: MiniPPGNParams, a_t: Graph, beta_bar_t: float, dlogits: np.ndarray
) -> dict[str, np.ndarray]:
    """Parameter gradients for a loss whose logit-gradient is ``dlogits``."""
    _, cache = _forward_impl(params, a_t, beta_bar_t)
    return _backward_impl(params, cache, np.asarray(dlogits, dtype=np.float64))


@dataclass(frozen=True)
class MiniPPGNDenoiser:
    """Adapts network weights plus a schedule to the denoiser interface."""

    params: MiniPPGNParams
    schedule: NoiseSchedule

    def denoise(self, a_t: Graph, t: int) -> DenoiserOutput:
        if not 1 <= t <= self.schedule.steps:
            raise IndexError(f"step {t} out of range 1..{self.schedule.steps}")
        return mini_ppgn_forward(self.params, a_t, float(self.schedule.beta_bar[t]))

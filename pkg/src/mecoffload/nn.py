"""Minimal fully connected network with analytic gradients and Adam.

One tanh hidden layer, linear output head, 64-bit arithmetic throughout.
The backward pass is a vector-Jacobian product: given a per-output error
signal it returns the gradient of error . output with respect to every
parameter, which is exactly what the squared-error training steps need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MlpParams:
    w1: np.ndarray   # (hidden, in)
    b1: np.ndarray   # (hidden,)
    w2: np.ndarray   # (out, hidden)
    b2: np.ndarray   # (out,)

    @property
    def sizes(self) -> tuple[int, int, int]:
        return self.w1.shape[1], self.w1.shape[0], self.w2.shape[0]

    def copy(self) -> "MlpParams":
        return MlpParams(self.w1.copy(), self.b1.copy(),
                         self.w2.copy(), self.b2.copy())


_FIELDS = ("w1", "b1", "w2", "b2")


def init_mlp(n_in: int, n_hidden: int, n_out: int, rng) -> MlpParams:
    """Uniform fan-in initialization: every weight and bias of a layer drawn
    from [-1/sqrt(fan_in), 1/sqrt(fan_in)]."""
    s1 = 1.0 / np.sqrt(n_in)
    s2 = 1.0 / np.sqrt(n_hidden)
    return MlpParams(
        w1=rng.uniform(-s1, s1, size=(n_hidden, n_in)),
        b1=rng.uniform(-s1, s1, size=n_hidden),
        w2=rng.uniform(-s2, s2, size=(n_out, n_hidden)),
        b2=rng.uniform(-s2, s2, size=n_out))


def mlp_forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Network output for a single input (in,) or a batch (n, in)."""
    h = np.tanh(x @ params.w1.T + params.b1)
    return h @ params.w2.T + params.b2


def mlp_forward_hidden(params: MlpParams, x: np.ndarray):
    """Forward pass that also exposes the hidden activations, so a following
    backward pass can skip recomputing them."""
    h = np.tanh(x @ params.w1.T + params.b1)
    return h @ params.w2.T + params.b2, h


def mlp_gradient(params: MlpParams, x: np.ndarray, err: np.ndarray,
                 hidden: np.ndarray | None = None) -> MlpParams:
    """Gradient of sum(err * output) with respect to the parameters.

    `err` must match the output shape; batched inputs sum their
    contributions (divide err by the batch size for a mean). Pass the
    activations from `mlp_forward_hidden` as `hidden` to reuse them.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    err = np.atleast_2d(np.asarray(err, dtype=float))
    if x.shape[0] != err.shape[0] or err.shape[1] != params.w2.shape[0]:
        raise ValueError("input/error shapes do not match the network")
    if hidden is None:
        hidden = np.tanh(x @ params.w1.T + params.b1)
    else:
        hidden = np.atleast_2d(hidden)
    dh = (err @ params.w2) * (1.0 - hidden * hidden)
    return MlpParams(w1=dh.T @ x, b1=dh.sum(axis=0),
                     w2=err.T @ hidden, b2=err.sum(axis=0))


@dataclass
class AdamState:
    m: MlpParams
    v: MlpParams
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_adam(params: MlpParams, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    zeros = lambda a: np.zeros_like(a)
    return AdamState(
        m=MlpParams(*(zeros(getattr(params, f)) for f in _FIELDS)),
        v=MlpParams(*(zeros(getattr(params, f)) for f in _FIELDS)),
        step=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: MlpParams, state: AdamState,
              grads: MlpParams) -> tuple[MlpParams, AdamState]:
    """One bias-corrected Adam update; inputs are left untouched."""
    t = state.step + 1
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    new_p, new_m, new_v = {}, {}, {}
    for f in _FIELDS:
        g = getattr(grads, f)
        m = state.beta1 * getattr(state.m, f) + (1.0 - state.beta1) * g
        v = state.beta2 * getattr(state.v, f) + (1.0 - state.beta2) * g * g
        new_m[f], new_v[f] = m, v
        new_p[f] = getattr(params, f) - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return (MlpParams(**new_p),
            AdamState(m=MlpParams(**new_m), v=MlpParams(**new_v), step=t,
                      lr=state.lr, beta1=state.beta1, beta2=state.beta2,
                      eps=state.eps))


def finite_difference_check(params: MlpParams, x: np.ndarray, err: np.ndarray,
                            step: float = 1e-6, floor: float = 1e-8) -> float:
    """Max relative error of the analytic gradient of sum(err * output)
    against central differences.

    Entries whose analytic/numeric discrepancy is below `floor` are treated
    as agreeing: the difference quotient itself only resolves gradients to
    about machine-eps/step, so relative error is meaningless there.
    """
    analytic = mlp_gradient(params, x, err)
    x2 = np.atleast_2d(np.asarray(x, dtype=float))
    e2 = np.atleast_2d(np.asarray(err, dtype=float))

    def objective() -> float:
        return float(np.sum(e2 * mlp_forward(params, x2)))

    worst = 0.0
    for f in _FIELDS:
        arr = getattr(params, f)
        grad = np.atleast_1d(getattr(analytic, f))
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            f_plus = objective()
            flat[i] = keep - step
            f_minus = objective()
            flat[i] = keep
            numeric = (f_plus - f_minus) / (2.0 * step)
            diff = abs(gflat[i] - numeric)
            if diff < floor:
                continue
            worst = max(worst, diff / max(abs(gflat[i]), abs(numeric)))
    return worst


def save_params(path, params: MlpParams, adam: AdamState | None = None) -> None:
    """Checkpoint parameters (and optionally optimizer state) as npz."""
    arrays = {f: getattr(params, f) for f in _FIELDS}
    if adam is not None:
        for f in _FIELDS:
            arrays[f"adam_m_{f}"] = getattr(adam.m, f)
            arrays[f"adam_v_{f}"] = getattr(adam.v, f)
        arrays["adam_meta"] = np.array(
            [adam.step, adam.lr, adam.beta1, adam.beta2, adam.eps])
    np.savez(path, **arrays)


def load_params(path) -> tuple[MlpParams, AdamState | None]:
    with np.load(path) as data:
        params = MlpParams(*(data[f] for f in _FIELDS))
        if "adam_meta" not in data:
            return params, None
        meta = data["adam_meta"]
        adam = AdamState(
            m=MlpParams(*(data[f"adam_m_{f}"] for f in _FIELDS)),
            v=MlpParams(*(data[f"adam_v_{f}"] for f in _FIELDS)),
            step=int(meta[0]), lr=float(meta[1]), beta1=float(meta[2]),
            beta2=float(meta[3]), eps=float(meta[4]))
    return params, adam

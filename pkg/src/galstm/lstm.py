"""Stacked LSTM regressor: init, forward, BPTT, training, persistence.

Parameters per layer are stored packed along a 4H axis in gate order
[i, f, o, g]; the per-gate matrices the rest of the code and the model
file speak in (W_i, U_f, b_o, ...) are views/slices of that packing.
The output head is a single linear unit on the top layer's final hidden
state (one-step-ahead regression).

The batched sequence work is done by ``kernels`` (numba or numpy, see
kernels/__init__); ``cell_forward`` is the independent single-step
reference used by the tests.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels, numerics
from .data import ScalerParams, WindowedDataset, inverse_scale
from .errors import DivergedError, EmptySeriesError, NumericError, ShapeError
from .rng import Rng, derive_seed

GATES = ("i", "f", "o", "g")


@dataclass(frozen=True)
class LstmLayerParams:
    """One layer's weights, packed (4H, .) in gate order [i, f, o, g]."""

    wx: np.ndarray  # (4H, D) input->hidden
    wh: np.ndarray  # (4H, H) hidden->hidden
    b: np.ndarray  # (4H,)

    @property
    def hidden_size(self) -> int:
        return self.wh.shape[1]

    @property
    def input_size(self) -> int:
        return self.wx.shape[1]

    def gate(self, kind: str, name: str) -> np.ndarray:
        """kind in {'wx','wh','b'}, name in GATES; returns the gate slice."""
        h = self.hidden_size
        g = GATES.index(name)
        return getattr(self, kind)[g * h : (g + 1) * h]

    # Spec-facing aliases.
    @property
    def W_i(self):
        return self.gate("wx", "i")

    @property
    def W_f(self):
        return self.gate("wx", "f")

    @property
    def W_o(self):
        return self.gate("wx", "o")

    @property
    def W_g(self):
        return self.gate("wx", "g")

    @property
    def U_i(self):
        return self.gate("wh", "i")

    @property
    def U_f(self):
        return self.gate("wh", "f")

    @property
    def U_o(self):
        return self.gate("wh", "o")

    @property
    def U_g(self):
        return self.gate("wh", "g")

    @property
    def b_i(self):
        return self.gate("b", "i")

    @property
    def b_f(self):
        return self.gate("b", "f")

    @property
    def b_o(self):
        return self.gate("b", "o")

    @property
    def b_g(self):
        return self.gate("b", "g")


@dataclass(frozen=True)
class LstmParams:
    """Full parameter tree; also reused as the gradient container."""

    layers: tuple[LstmLayerParams, ...]
    w_out: np.ndarray  # (H,)
    b_out: float

    @property
    def input_size(self) -> int:
        return self.layers[0].input_size

    @property
    def hidden_size(self) -> int:
        return self.layers[0].hidden_size

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def validate(self) -> None:
        h = self.hidden_size
        for idx, lp in enumerate(self.layers):
            expect_in = self.input_size if idx == 0 else h
            if lp.wx.shape != (4 * h, expect_in):
                raise ShapeError(f"layer {idx}: wx is {lp.wx.shape}, expected {(4 * h, expect_in)}")
            if lp.wh.shape != (4 * h, h):
                raise ShapeError(f"layer {idx}: wh is {lp.wh.shape}, expected {(4 * h, h)}")
            if lp.b.shape != (4 * h,):
                raise ShapeError(f"layer {idx}: b is {lp.b.shape}, expected {(4 * h,)}")
            for arr, name in ((lp.wx, "wx"), (lp.wh, "wh"), (lp.b, "b")):
                numerics.require_finite(f"layer {idx} {name}", arr)
        if self.w_out.shape != (h,):
            raise ShapeError(f"w_out is {self.w_out.shape}, expected {(h,)}")
        numerics.require_finite("w_out", self.w_out)
        numerics.require_finite("b_out", self.b_out)


@dataclass
class CellState:
    """Per-layer hidden and cell state vectors."""

    h: list[np.ndarray]
    c: list[np.ndarray]

    @classmethod
    def zeros(cls, hidden_size: int, num_layers: int) -> "CellState":
        return cls(
            h=[np.zeros(hidden_size) for _ in range(num_layers)],
            c=[np.zeros(hidden_size) for _ in range(num_layers)],
        )


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 0.01
    optimizer: str = "adam"  # "adam" or "sgd"
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int | None = None  # None = full batch
    gradient_clip: float | None = 5.0  # global-norm clip, None disables
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"optimizer must be adam or sgd, got {self.optimizer!r}")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1 or None, got {self.batch_size}")
        if self.gradient_clip is not None and self.gradient_clip <= 0:
            raise ValueError(f"gradient_clip must be > 0 or None, got {self.gradient_clip}")


@dataclass(frozen=True)
class TrainedModel:
    params: LstmParams
    scaler: ScalerParams
    lookback: int
    mae_history: np.ndarray  # per-epoch training MAE, scaled units
    column: str = "close"


def init_params(input_size: int, hidden_size: int, num_layers: int, seed: int) -> LstmParams:
    """Glorot-uniform weights, zero biases except forget-gate biases = 1.

    Draw order is fixed (per layer: wx gate blocks i,f,o,g row-major,
    then wh; finally the head), so a seed pins every parameter.
    """
    if min(input_size, hidden_size, num_layers) < 1:
        raise ShapeError("input_size, hidden_size and num_layers must all be >= 1")
    rng = Rng(seed)
    layers = []
    for idx in range(num_layers):
        d = input_size if idx == 0 else hidden_size
        lim_x = np.sqrt(6.0 / (d + hidden_size))
        lim_h = np.sqrt(6.0 / (hidden_size + hidden_size))
        wx = rng.uniform_array((4 * hidden_size, d), -lim_x, lim_x)
        wh = rng.uniform_array((4 * hidden_size, hidden_size), -lim_h, lim_h)
        b = np.zeros(4 * hidden_size)
        b[hidden_size : 2 * hidden_size] = 1.0  # forget gate: remember by default
        layers.append(LstmLayerParams(wx=wx, wh=wh, b=b))
    lim_out = np.sqrt(6.0 / (hidden_size + 1))
    w_out = rng.uniform_array(hidden_size, -lim_out, lim_out)
    params = LstmParams(layers=tuple(layers), w_out=w_out, b_out=0.0)
    params.validate()
    return params


def cell_forward(x, state: CellState, params: LstmParams, layer: int):
    """Single-step reference cell for one layer.

    Returns (h, c, cache); raises NumericError naming the gate that
    produced a non-finite value. Does not mutate `state`.
    """
    lp = params.layers[layer]
    x = numerics.as_vector(x)
    h_prev, c_prev = state.h[layer], state.c[layer]
    gates = {}
    for name in GATES:
        z = numerics.add(
            numerics.add(numerics.matvec(lp.gate("wx", name), x), numerics.matvec(lp.gate("wh", name), h_prev)),
            lp.gate("b", name),
        )
        act = numerics.tanh_act(z) if name == "g" else numerics.sigmoid(z)
        if not np.all(np.isfinite(act)):
            label = {"i": "input gate", "f": "forget gate", "o": "output gate", "g": "candidate"}[name]
            raise NumericError(f"non-finite value in {label} (layer {layer})")
        gates[name] = act
    c = numerics.add(numerics.hadamard(gates["f"], c_prev), numerics.hadamard(gates["i"], gates["g"]))
    tc = numerics.tanh_act(c)
    h = numerics.hadamard(gates["o"], tc)
    cache = {"x": x, "h_prev": h_prev, "c_prev": c_prev, "c": c, "h": h, "tanh_c": tc, **gates}
    return h, c, cache


@dataclass(frozen=True)
class _LayerCache:
    x: np.ndarray
    h_seq: np.ndarray
    c_seq: np.ndarray
    gates: np.ndarray
    tanh_c: np.ndarray


@dataclass(frozen=True)
class BatchCaches:
    params: LstmParams
    layers: tuple[_LayerCache, ...]
    h_last: np.ndarray  # (N, H) top layer, final step


def forward_batch(windows, params: LstmParams):
    """Predictions for a batch of windows. windows: (N, T) scaled values.

    Returns (preds (N,), caches for backward_batch).
    """
    windows = np.ascontiguousarray(windows, dtype=np.float64)
    if windows.ndim != 2:
        raise ShapeError(f"windows must be 2-d (n, lookback), got shape {windows.shape}")
    n, t = windows.shape
    x = np.ascontiguousarray(windows.T).reshape(t, n, 1)
    caches = []
    for lp in params.layers:
        h_seq, c_seq, gates, tanh_c = kernels.lstm_layer_forward(x, lp.wx, lp.wh, lp.b)
        caches.append(_LayerCache(x=x, h_seq=h_seq, c_seq=c_seq, gates=gates, tanh_c=tanh_c))
        x = h_seq
    h_last = x[t - 1]
    preds = h_last @ params.w_out + params.b_out
    return preds, BatchCaches(params=params, layers=tuple(caches), h_last=h_last)


def backward_batch(caches: BatchCaches, dpreds) -> LstmParams:
    """Exact gradients of a scalar loss; dpreds[i] = dLoss/dpred_i.

    The result reuses the LstmParams shape-tree: every field holds the
    gradient of the matching parameter.
    """
    params = caches.params
    dpreds = np.ascontiguousarray(dpreds, dtype=np.float64)
    dw_out = caches.h_last.T @ dpreds
    db_out = float(np.sum(dpreds))
    dh = np.zeros_like(caches.layers[-1].h_seq)
    dh[-1] = np.outer(dpreds, params.w_out)
    grads: list[LstmLayerParams | None] = [None] * params.num_layers
    for idx in range(params.num_layers - 1, -1, -1):
        cache = caches.layers[idx]
        lp = params.layers[idx]
        dx, dwx, dwh, db = kernels.lstm_layer_backward(
            cache.x, lp.wx, lp.wh, cache.h_seq, cache.c_seq, cache.gates, cache.tanh_c, dh
        )
        grads[idx] = LstmLayerParams(wx=dwx, wh=dwh, b=db)
        dh = dx
    return LstmParams(layers=tuple(grads), w_out=dw_out, b_out=db_out)


def forward_window(window, params: LstmParams):
    """One window -> (scaled prediction, caches). Base case of the batch."""
    window = np.asarray(window, dtype=np.float64)
    if window.ndim != 1:
        raise ShapeError(f"window must be 1-d, got shape {window.shape}")
    preds, caches = forward_batch(window[np.newaxis, :], params)
    return float(preds[0]), caches


def backward(caches: BatchCaches, dloss_dprediction: float) -> LstmParams:
    """Gradients for a single-window forward (see backward_batch)."""
    n = caches.h_last.shape[0]
    if n != 1:
        raise ShapeError(f"backward() expects single-window caches, got batch of {n}")
    return backward_batch(caches, np.array([dloss_dprediction]))


def _flatten(params: LstmParams) -> list[np.ndarray]:
    arrays = []
    for lp in params.layers:
        arrays.extend([lp.wx, lp.wh, lp.b])
    arrays.append(params.w_out)
    arrays.append(np.array([params.b_out]))
    return arrays


def _rebuild(arrays: list[np.ndarray], num_layers: int) -> LstmParams:
    layers = tuple(
        LstmLayerParams(wx=arrays[3 * i], wh=arrays[3 * i + 1], b=arrays[3 * i + 2])
        for i in range(num_layers)
    )
    return LstmParams(layers=layers, w_out=arrays[3 * num_layers], b_out=float(arrays[3 * num_layers + 1][0]))


def _clip_global_norm(grads: list[np.ndarray], clip: float) -> None:
    total = 0.0
    for g in grads:
        total += float(np.sum(g * g))
    norm = np.sqrt(total)
    if norm > clip:
        factor = clip / norm
        for g in grads:
            g *= factor


def train(dataset: WindowedDataset, hidden_size: int, num_layers: int, cfg: TrainConfig) -> TrainedModel:
    """Minimize MSE on scaled targets; record training MAE after each epoch.

    Full-batch by default; cfg.batch_size enables shuffled mini-batches.
    Raises DivergedError with the epoch number if the loss goes
    non-finite.
    """
    n = len(dataset)
    if n == 0:
        raise EmptySeriesError("cannot train on an empty dataset")
    params0 = init_params(1, hidden_size, num_layers, cfg.seed)
    theta = [a.copy() for a in _flatten(params0)]
    num_arrays = len(theta)
    windows, targets = dataset.windows, dataset.targets

    adam_m = [np.zeros_like(a) for a in theta]
    adam_v = [np.zeros_like(a) for a in theta]
    step = 0
    shuffle_rng = Rng(derive_seed(cfg.seed, 1))

    mae_history = np.empty(cfg.epochs)
    for epoch in range(1, cfg.epochs + 1):
        if cfg.batch_size is None or cfg.batch_size >= n:
            batches = [np.arange(n)]
        else:
            order = np.array(shuffle_rng.sample_indices(n, n))
            batches = [order[i : i + cfg.batch_size] for i in range(0, n, cfg.batch_size)]
        for idx in batches:
            params = _rebuild(theta, num_layers)
            preds, caches = forward_batch(windows[idx], params)
            err = preds - targets[idx]
            loss = float(np.mean(err * err))
            if not np.isfinite(loss):
                raise DivergedError(epoch)
            dpreds = (2.0 / len(idx)) * err
            grads = _flatten(backward_batch(caches, dpreds))
            if cfg.gradient_clip is not None:
                _clip_global_norm(grads, cfg.gradient_clip)
            if cfg.optimizer == "adam":
                step += 1
                bc1 = 1.0 - cfg.beta1**step
                bc2 = 1.0 - cfg.beta2**step
                for k in range(num_arrays):
                    adam_m[k] = cfg.beta1 * adam_m[k] + (1.0 - cfg.beta1) * grads[k]
                    adam_v[k] = cfg.beta2 * adam_v[k] + (1.0 - cfg.beta2) * grads[k] * grads[k]
                    theta[k] -= cfg.learning_rate * (adam_m[k] / bc1) / (np.sqrt(adam_v[k] / bc2) + cfg.eps)
            else:
                for k in range(num_arrays):
                    theta[k] -= cfg.learning_rate * grads[k]

        preds, _ = forward_batch(windows, _rebuild(theta, num_layers))
        mae = float(np.mean(np.abs(preds - targets)))
        if not np.isfinite(mae):
            raise DivergedError(epoch)
        mae_history[epoch - 1] = mae

    return TrainedModel(
        params=_rebuild(theta, num_layers),
        scaler=dataset.scaler,
        lookback=dataset.lookback,
        mae_history=mae_history,
    )


def predict(model: TrainedModel, windows) -> np.ndarray:
    """Forecast in original price units for scaled windows (n, lookback)."""
    windows = np.asarray(windows, dtype=np.float64)
    if windows.ndim == 1:
        windows = windows[np.newaxis, :]
    if windows.shape[1] != model.lookback:
        raise ShapeError(
            f"windows have length {windows.shape[1]}, model expects lookback {model.lookback}"
        )
    preds, _ = forward_batch(windows, model.params)
    return inverse_scale(preds, model.scaler)


def save_model(model: TrainedModel, path: str | Path) -> None:
    """Self-describing JSON; floats survive the round trip bit-exactly."""
    params = model.params
    doc = {
        "format": "galstm-model",
        "version": 1,
        "input_size": params.input_size,
        "hidden_size": params.hidden_size,
        "num_layers": params.num_layers,
        "lookback": model.lookback,
        "column": model.column,
        "scaler": {"lo": model.scaler.lo, "hi": model.scaler.hi},
        "mae_history": [float(v) for v in model.mae_history],
        "layers": [
            {
                **{f"W_{g}": lp.gate("wx", g).tolist() for g in GATES},
                **{f"U_{g}": lp.gate("wh", g).tolist() for g in GATES},
                **{f"b_{g}": lp.gate("b", g).tolist() for g in GATES},
            }
            for lp in params.layers
        ],
        "w_out": params.w_out.tolist(),
        "b_out": params.b_out,
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def load_model(path: str | Path) -> TrainedModel:
    with Path(path).open(encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != "galstm-model":
        raise ShapeError(f"{path}: not a galstm model file")
    layers = []
    for entry in doc["layers"]:
        wx = np.concatenate([np.asarray(entry[f"W_{g}"], dtype=np.float64) for g in GATES], axis=0)
        wh = np.concatenate([np.asarray(entry[f"U_{g}"], dtype=np.float64) for g in GATES], axis=0)
        b = np.concatenate([np.asarray(entry[f"b_{g}"], dtype=np.float64) for g in GATES])
        layers.append(LstmLayerParams(wx=wx, wh=wh, b=b))
    params = LstmParams(layers=tuple(layers), w_out=np.asarray(doc["w_out"], dtype=np.float64), b_out=float(doc["b_out"]))
    params.validate()
    return TrainedModel(
        params=params,
        scaler=ScalerParams(lo=float(doc["scaler"]["lo"]), hi=float(doc["scaler"]["hi"])),
        lookback=int(doc["lookback"]),
        mae_history=np.asarray(doc["mae_history"], dtype=np.float64),
        column=doc.get("column", "close"),
    )

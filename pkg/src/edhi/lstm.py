"""LSTM encoder-decoder for reconstructing healthy-operation windows.

The encoder folds an l-step window into its final hidden/cell state; the
decoder, seeded with that state, regenerates the window in reverse order. A
linear readout maps each decoder hidden state to a predicted input row. The
very first prediction comes straight from the inherited encoder state, before
the decoder consumes any input.

Training is teacher-forced (the true row is fed at each decoder step);
inference is autoregressive (each prediction is fed back). Both paths share
one cell-step function so they cannot drift apart. Gradients are exact
reverse-mode backpropagation through the unrolled network; everything here is
hand-written over numpy arrays in float64.

Gate layout in the stacked affine transform, in block order: input gate i,
forget gate f, output gate o, candidate g. The first three pass through the
logistic function, the candidate through tanh.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_GRAD_KEYS = ("enc_w", "enc_b", "dec_w", "dec_b", "out_w", "out_b")
_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # piecewise form avoids overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class LstmParams:
    """One cell's stacked gate transform: weight (4n, p+n), bias (4n,)."""

    w: np.ndarray
    b: np.ndarray

    @property
    def hidden_units(self) -> int:
        return self.b.shape[0] // 4

    @property
    def input_dim(self) -> int:
        return self.w.shape[1] - self.hidden_units


@dataclass(frozen=True)
class LstmState:
    """Hidden and cell vectors, shape (n,) or batched (B, n)."""

    hidden: np.ndarray
    cell: np.ndarray


@dataclass(frozen=True)
class LstmEdModel:
    """Encoder/decoder cells plus the linear readout.

    Attributes:
        encoder: Gate transform consuming input rows forward in time.
        decoder: Gate transform regenerating rows in reverse.
        out_weight: Readout weight, shape (c, p).
        out_bias: Readout bias, shape (p,).
        hidden_units: c, shared by encoder and decoder.
        window_len: l, the training window length.
        input_dim: p, columns per input row.
    """

    encoder: LstmParams
    decoder: LstmParams
    out_weight: np.ndarray
    out_bias: np.ndarray
    hidden_units: int
    window_len: int
    input_dim: int


@dataclass(frozen=True)
class TrainConfig:
    """Optimization knobs for the training loop."""

    learning_rate: float = 1e-3
    max_epochs: int = 500
    batch_size: int = 32
    grad_clip_norm: float = 10.0
    patience: int = 10
    seed: int = 0

    def validate(self) -> None:
        if not (
            self.learning_rate > 0
            and self.max_epochs > 0
            and self.batch_size > 0
            and self.grad_clip_norm > 0
            and self.patience > 0
        ):
            raise ValueError("training config values must be positive")


@dataclass(frozen=True)
class TrainResult:
    """Outcome of one training run.

    Attributes:
        model: Parameters from the epoch with the lowest validation loss
            (epoch 0 means the untrained initialization was never beaten).
        train_history: Summed teacher-forced training loss per epoch.
        val_history: Summed validation loss per epoch, index 0 being the
            untrained model's loss.
        best_epoch: Index into val_history of the checkpoint returned.
    """

    model: LstmEdModel
    train_history: list[float] = field(default_factory=list)
    val_history: list[float] = field(default_factory=list)
    best_epoch: int = 0


def init_model(
    input_dim: int, hidden_units: int, window_len: int, seed: int
) -> LstmEdModel:
    """Seeded initialization: weights uniform in +-1/sqrt(fan_in), forget bias 1.

    Args:
        input_dim: p, columns per input row.
        hidden_units: c, hidden size of both cells.
        window_len: l, window length the model is trained on.
        seed: RNG seed; same seed gives bit-identical parameters.
    """
    if input_dim < 1 or hidden_units < 1 or window_len < 1:
        raise ValueError("input_dim, hidden_units, window_len must be >= 1")
    return _init_from_rng(
        input_dim, hidden_units, window_len, np.random.default_rng(seed)
    )


def _init_from_rng(p: int, n: int, l: int, rng: np.random.Generator) -> LstmEdModel:
    rec_bound = 1.0 / np.sqrt(p + n)
    enc_w = rng.uniform(-rec_bound, rec_bound, size=(4 * n, p + n))
    dec_w = rng.uniform(-rec_bound, rec_bound, size=(4 * n, p + n))
    out_bound = 1.0 / np.sqrt(n)
    out_w = rng.uniform(-out_bound, out_bound, size=(n, p))
    enc_b = np.zeros(4 * n)
    enc_b[n : 2 * n] = 1.0  # forget gate open at start aids gradient flow
    dec_b = enc_b.copy()
    return LstmEdModel(
        encoder=LstmParams(w=enc_w, b=enc_b),
        decoder=LstmParams(w=dec_w, b=dec_b),
        out_weight=out_w,
        out_bias=np.zeros(p),
        hidden_units=n,
        window_len=l,
        input_dim=p,
    )


def _cell_forward(params: LstmParams, x, h_prev, c_prev):
    """One cell step on a (B, p) input batch. Returns (h, c, cache)."""
    n = params.hidden_units
    xh = np.concatenate([x, h_prev], axis=-1)
    pre = xh @ params.w.T + params.b
    i = _sigmoid(pre[..., :n])
    f = _sigmoid(pre[..., n : 2 * n])
    o = _sigmoid(pre[..., 2 * n : 3 * n])
    g = np.tanh(pre[..., 3 * n :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    return h, c, (x, h_prev, c_prev, i, f, o, g, tc)


def _cell_backward(params: LstmParams, cache, dh, dc, dw, db):
    """Backprop one cell step; accumulates into dw/db, returns (dh_prev, dc_prev)."""
    x, h_prev, c_prev, i, f, o, g, tc = cache
    do = dh * tc
    dct = dc + dh * o * (1.0 - tc * tc)
    dpre = np.concatenate(
        [
            dct * g * i * (1.0 - i),
            dct * c_prev * f * (1.0 - f),
            do * o * (1.0 - o),
            dct * i * (1.0 - g * g),
        ],
        axis=-1,
    )
    xh = np.concatenate([x, h_prev], axis=-1)
    dw += dpre.T @ xh
    db += dpre.sum(axis=0)
    dxh = dpre @ params.w
    p = x.shape[-1]
    return dxh[..., p:], dct * f


def lstm_step(params: LstmParams, inp: np.ndarray, prev: LstmState) -> LstmState:
    """Advance one cell step: gates from the stacked affine, then state update.

    Accepts a single (p,) input with (n,) state, or batched (B, p) with (B, n).

    Raises:
        ValueError: If input or state dimensions do not match the parameters.
    """
    x = np.asarray(inp, dtype=np.float64)
    n = params.hidden_units
    if x.shape[-1] != params.input_dim:
        raise ValueError(
            f"input has {x.shape[-1]} entries, cell expects {params.input_dim}"
        )
    if prev.hidden.shape != prev.cell.shape or prev.hidden.shape[-1] != n:
        raise ValueError("state shape does not match cell size")
    h, c, _ = _cell_forward(params, x, prev.hidden, prev.cell)
    return LstmState(hidden=h, cell=c)


def _check_window(model: LstmEdModel, window: np.ndarray, name: str) -> np.ndarray:
    w = np.asarray(window, dtype=np.float64)
    if w.ndim not in (2, 3):
        raise ValueError(f"{name} must be 2-D or batched 3-D, got shape {w.shape}")
    if w.shape[-2] != model.window_len:
        raise ValueError(
            f"{name} has {w.shape[-2]} rows, model window length is {model.window_len}"
        )
    if w.shape[-1] != model.input_dim:
        raise ValueError(
            f"{name} has {w.shape[-1]} columns, model input dim is {model.input_dim}"
        )
    return w


def encode(model: LstmEdModel, window: np.ndarray) -> LstmState:
    """Run the encoder over an l-row window from the zero state.

    Args:
        model: The encoder-decoder model.
        window: Shape (l, p), or (B, l, p) for a batch.

    Returns:
        Final encoder state after the l-th step.
    """
    w = _check_window(model, window, "window")
    single = w.ndim == 2
    batch = w[None] if single else w
    n = model.hidden_units
    h = np.zeros((batch.shape[0], n))
    c = np.zeros((batch.shape[0], n))
    for t in range(model.window_len):
        h, c, _ = _cell_forward(model.encoder, batch[:, t, :], h, c)
    if single:
        return LstmState(hidden=h[0], cell=c[0])
    return LstmState(hidden=h, cell=c)


def _readout(model: LstmEdModel, h: np.ndarray) -> np.ndarray:
    return h @ model.out_weight + model.out_bias


def decode_train(
    model: LstmEdModel, window: np.ndarray, enc_final: LstmState
) -> np.ndarray:
    """Teacher-forced decode: feed true rows, predict the window in reverse.

    The decoder starts from the encoder's final state and emits its first
    prediction (for the last row) before consuming any input; each subsequent
    step is fed the true row just predicted. Output rows are re-ordered so row
    t of the result predicts row t of the window.

    Args:
        model: The encoder-decoder model.
        window: True rows, shape (l, p) or (B, l, p).
        enc_final: Encoder final state for the same window(s).

    Returns:
        Predictions, same shape as ``window``.
    """
    w = _check_window(model, window, "window")
    single = w.ndim == 2
    batch = w[None] if single else w
    h = np.atleast_2d(enc_final.hidden)
    c = np.atleast_2d(enc_final.cell)
    l = model.window_len
    preds = np.empty_like(batch)
    preds[:, l - 1, :] = _readout(model, h)
    for s in range(1, l):
        h, c, _ = _cell_forward(model.decoder, batch[:, l - s, :], h, c)
        preds[:, l - 1 - s, :] = _readout(model, h)
    return preds[0] if single else preds


def decode_infer(model: LstmEdModel, enc_final: LstmState, steps: int) -> np.ndarray:
    """Autoregressive decode: feed each prediction back as the next input.

    Args:
        model: The encoder-decoder model.
        enc_final: Encoder final state, single or batched.
        steps: Number of rows to regenerate, >= 1.

    Returns:
        Predictions in original time order, shape (steps, p) or (B, steps, p).
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    single = enc_final.hidden.ndim == 1
    h = np.atleast_2d(enc_final.hidden)
    c = np.atleast_2d(enc_final.cell)
    preds = np.empty((h.shape[0], steps, model.input_dim))
    preds[:, steps - 1, :] = _readout(model, h)
    for s in range(1, steps):
        h, c, _ = _cell_forward(model.decoder, preds[:, steps - s, :], h, c)
        preds[:, steps - 1 - s, :] = _readout(model, h)
    return preds[0] if single else preds


def loss(predictions: np.ndarray, targets: np.ndarray) -> float:
    """Sum over all points of the squared Euclidean reconstruction error."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    diff = p - t
    return float(np.sum(diff * diff))


def _forward_backward(model: LstmEdModel, batch: np.ndarray):
    """Teacher-forced loss and exact gradients for a (B, l, p) batch.

    The batch gradient is the sum of per-window gradients, matching the
    summed objective.
    """
    b, l, p = batch.shape
    n = model.hidden_units
    h = np.zeros((b, n))
    c = np.zeros((b, n))
    enc_caches = []
    for t in range(l):
        h, c, cache = _cell_forward(model.encoder, batch[:, t, :], h, c)
        enc_caches.append(cache)

    preds = np.empty_like(batch)
    out_states = [h]
    preds[:, l - 1, :] = _readout(model, h)
    dec_caches = []
    for s in range(1, l):
        h, c, cache = _cell_forward(model.decoder, batch[:, l - s, :], h, c)
        dec_caches.append(cache)
        out_states.append(h)
        preds[:, l - 1 - s, :] = _readout(model, h)

    diff = preds - batch
    total = float(np.sum(diff * diff))
    dpred = 2.0 * diff

    grads = {
        "enc_w": np.zeros_like(model.encoder.w),
        "enc_b": np.zeros_like(model.encoder.b),
        "dec_w": np.zeros_like(model.decoder.w),
        "dec_b": np.zeros_like(model.decoder.b),
        "out_w": np.zeros_like(model.out_weight),
        "out_b": np.zeros_like(model.out_bias),
    }
    dh = np.zeros((b, n))
    dc = np.zeros((b, n))
    for s in range(l - 1, 0, -1):
        dy = dpred[:, l - 1 - s, :]
        grads["out_w"] += out_states[s].T @ dy
        grads["out_b"] += dy.sum(axis=0)
        dh = dh + dy @ model.out_weight.T
        dh, dc = _cell_backward(
            model.decoder, dec_caches[s - 1], dh, dc, grads["dec_w"], grads["dec_b"]
        )
    dy = dpred[:, l - 1, :]
    grads["out_w"] += out_states[0].T @ dy
    grads["out_b"] += dy.sum(axis=0)
    dh = dh + dy @ model.out_weight.T
    for t in range(l - 1, -1, -1):
        dh, dc = _cell_backward(
            model.encoder, enc_caches[t], dh, dc, grads["enc_w"], grads["enc_b"]
        )
    return total, grads


def grad_bptt(model: LstmEdModel, window: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradient of the teacher-forced loss for one window or a batch.

    Args:
        model: The encoder-decoder model.
        window: Shape (l, p), or (B, l, p); a batch gradient is the sum of
            per-window gradients.

    Returns:
        Dict with keys enc_w, enc_b, dec_w, dec_b, out_w, out_b, each shaped
        like the corresponding parameter.
    """
    w = _check_window(model, window, "window")
    batch = w[None] if w.ndim == 2 else w
    _, grads = _forward_backward(model, batch)
    return grads


def _params_of(model: LstmEdModel) -> dict[str, np.ndarray]:
    return {
        "enc_w": model.encoder.w,
        "enc_b": model.encoder.b,
        "dec_w": model.decoder.w,
        "dec_b": model.decoder.b,
        "out_w": model.out_weight,
        "out_b": model.out_bias,
    }


def _model_from_params(
    params: dict[str, np.ndarray], n: int, l: int, p: int
) -> LstmEdModel:
    return LstmEdModel(
        encoder=LstmParams(w=params["enc_w"], b=params["enc_b"]),
        decoder=LstmParams(w=params["dec_w"], b=params["dec_b"]),
        out_weight=params["out_w"],
        out_bias=params["out_b"],
        hidden_units=n,
        window_len=l,
        input_dim=p,
    )


def _stack_windows(windows, l: int, p: int, name: str) -> np.ndarray:
    arrs = [np.asarray(w, dtype=np.float64) for w in windows]
    for k, w in enumerate(arrs):
        if w.shape != (l, p):
            raise ValueError(
                f"{name} window {k} has shape {w.shape}, expected {(l, p)}"
            )
    return np.stack(arrs, axis=0)


def train(
    windows: list[np.ndarray],
    config: TrainConfig,
    validation: list[np.ndarray],
    hidden_units: int,
) -> TrainResult:
    """Mini-batch training with early stopping on validation loss.

    Uses adaptive-moment gradient descent (decay 0.9/0.999, epsilon 1e-8)
    with global-norm gradient clipping. The model returned is the checkpoint
    with the lowest validation loss seen, the untrained initialization
    included as epoch 0. Deterministic given the seed: initialization, batch
    order, and arithmetic are all reproduced bit-for-bit.

    Args:
        windows: Nonempty list of training windows, all shape (l, p).
        config: Optimization settings.
        validation: Nonempty list of validation windows, same shape.
        hidden_units: Hidden size c for the model to train.

    Returns:
        TrainResult carrying the best model and per-epoch loss histories.

    Raises:
        ValueError: On empty windows, empty validation, or bad config.
    """
    if not windows:
        raise ValueError("no training windows")
    if not validation:
        raise ValueError("validation windows required for early stopping")
    config.validate()
    if hidden_units < 1:
        raise ValueError("hidden_units must be >= 1")
    first = np.asarray(windows[0], dtype=np.float64)
    if first.ndim != 2:
        raise ValueError("windows must be 2-D matrices")
    l, p = first.shape
    train_batch = _stack_windows(windows, l, p, "training")
    val_batch = _stack_windows(validation, l, p, "validation")

    rng = np.random.default_rng(config.seed)
    model = _init_from_rng(p, hidden_units, l, rng)
    params = _params_of(model)

    def val_loss() -> float:
        preds = decode_train(model, val_batch, encode(model, val_batch))
        return loss(preds, val_batch)

    best_val = val_loss()
    best_params = {k: v.copy() for k, v in params.items()}
    best_epoch = 0
    val_history = [best_val]
    train_history: list[float] = []

    m_state = {k: np.zeros_like(v) for k, v in params.items()}
    v_state = {k: np.zeros_like(v) for k, v in params.items()}
    step = 0
    stale = 0
    n_train = train_batch.shape[0]
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n_train)
        epoch_loss = 0.0
        for lo in range(0, n_train, config.batch_size):
            idx = order[lo : lo + config.batch_size]
            batch_loss, grads = _forward_backward(model, train_batch[idx])
            epoch_loss += batch_loss

            gnorm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            if gnorm > config.grad_clip_norm:
                scale = config.grad_clip_norm / gnorm
                for g in grads.values():
                    g *= scale

            step += 1
            bc1 = 1.0 - _ADAM_BETA1**step
            bc2 = 1.0 - _ADAM_BETA2**step
            for key in _GRAD_KEYS:
                g = grads[key]
                m_state[key] = _ADAM_BETA1 * m_state[key] + (1.0 - _ADAM_BETA1) * g
                v_state[key] = _ADAM_BETA2 * v_state[key] + (1.0 - _ADAM_BETA2) * (
                    g * g
                )
                update = (m_state[key] / bc1) / (
                    np.sqrt(v_state[key] / bc2) + _ADAM_EPS
                )
                params[key] -= config.learning_rate * update

        train_history.append(epoch_loss)
        current_val = val_loss()
        val_history.append(current_val)
        if current_val < best_val:
            best_val = current_val
            best_params = {k: v.copy() for k, v in params.items()}
            best_epoch = epoch
            stale = 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    return TrainResult(
        model=_model_from_params(best_params, hidden_units, l, p),
        train_history=train_history,
        val_history=val_history,
        best_epoch=best_epoch,
    )

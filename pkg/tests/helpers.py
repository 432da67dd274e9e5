"""Shared test oracles: finite-difference gradient checking."""

import numpy as np

from edhi.lstm import (
    LstmEdModel,
    LstmParams,
    decode_train,
    encode,
    grad_bptt,
    loss,
)

_PARAM_KEYS = ("enc_w", "enc_b", "dec_w", "dec_b", "out_w", "out_b")


def params_dict(model: LstmEdModel) -> dict:
    return {
        "enc_w": model.encoder.w,
        "enc_b": model.encoder.b,
        "dec_w": model.decoder.w,
        "dec_b": model.decoder.b,
        "out_w": model.out_weight,
        "out_b": model.out_bias,
    }


def model_from_dict(params: dict, template: LstmEdModel) -> LstmEdModel:
    return LstmEdModel(
        encoder=LstmParams(w=params["enc_w"], b=params["enc_b"]),
        decoder=LstmParams(w=params["dec_w"], b=params["dec_b"]),
        out_weight=params["out_w"],
        out_bias=params["out_b"],
        hidden_units=template.hidden_units,
        window_len=template.window_len,
        input_dim=template.input_dim,
    )


def teacher_loss(model: LstmEdModel, window: np.ndarray) -> float:
    return loss(decode_train(model, window, encode(model, window)), window)


def grad_check_max_rel_err(model: LstmEdModel, window: np.ndarray, step: float = 1e-5) -> float:
    """Max relative error of BPTT gradients vs central finite differences.

    Entries where both the analytic and numeric gradient are below 1e-8 in
    magnitude count as exact matches (the relative error is undefined there).
    """
    analytic = grad_bptt(model, window)
    base = params_dict(model)
    worst = 0.0
    for key in _PARAM_KEYS:
        flat = base[key].reshape(-1)
        for idx in range(flat.shape[0]):
            original = flat[idx]
            flat[idx] = original + step
            hi = teacher_loss(model, window)
            flat[idx] = original - step
            lo = teacher_loss(model, window)
            flat[idx] = original
            numeric = (hi - lo) / (2.0 * step)
            a = analytic[key].reshape(-1)[idx]
            denom = max(abs(a), abs(numeric))
            if denom < 1e-8:
                continue
            worst = max(worst, abs(a - numeric) / denom)
    return worst

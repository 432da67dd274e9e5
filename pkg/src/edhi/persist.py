"""Pipeline persistence: one versioned binary file, bit-exact round trips.

Layout: 8-byte magic, u32 format version, u64 header length, JSON header,
raw little-endian array payload, sha256 trailer over everything before it.
The header carries the section table (name, dtype, shape, offset), the run
configuration, and the train instance ids; arrays are written in a fixed
section order with deterministic JSON, so saving the same pipeline twice
produces identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig, config_from_dict
from .health import HiCurve
from .lstm import LstmEdModel, LstmParams
from .matching import MatchConfig
from .numerics import NormStats, OlsModel, PcaModel

MAGIC = b"EDHIPIPE"
FORMAT_VERSION = 1
_CHECKSUM_BYTES = 32


@dataclass(frozen=True)
class PipelineBundle:
    """Everything needed to score new instances.

    Attributes:
        norm: Pooled normalization statistics.
        pca: Derived-sensor projection.
        lstm: Trained reconstruction model.
        lr: Linear HI map.
        hi_train_curves: (train id, full HI curve) pairs, the matching
            library.
        config: The run configuration the pipeline was built with.
    """

    norm: NormStats
    pca: PcaModel
    lstm: LstmEdModel
    lr: OlsModel
    hi_train_curves: list[tuple[str, HiCurve]]
    config: RunConfig

    def match_config(self) -> MatchConfig:
        return MatchConfig(
            lam=self.config.lam,
            tau=self.config.tau,
            alpha=self.config.alpha,
            r_max=self.config.r_max,
        )


def _sections_of(bundle: PipelineBundle) -> list[tuple[str, np.ndarray]]:
    out = [
        ("norm_mean", bundle.norm.mean),
        ("norm_std", bundle.norm.std),
        ("norm_dropped", np.array(bundle.norm.dropped, dtype=np.int64)),
        ("pca_components", bundle.pca.components),
        ("enc_w", bundle.lstm.encoder.w),
        ("enc_b", bundle.lstm.encoder.b),
        ("dec_w", bundle.lstm.decoder.w),
        ("dec_b", bundle.lstm.decoder.b),
        ("out_w", bundle.lstm.out_weight),
        ("out_b", bundle.lstm.out_bias),
        ("lr_theta", bundle.lr.theta),
        ("lr_theta0", np.array([bundle.lr.theta0])),
    ]
    for k, (_, curve) in enumerate(bundle.hi_train_curves):
        out.append((f"curve_{k}", curve.values))
    return out


def _encode_array(arr: np.ndarray) -> tuple[bytes, str]:
    if arr.dtype == np.int64:
        dtype = "<i8"
    else:
        arr = np.asarray(arr, dtype=np.float64)
        dtype = "<f8"
    return np.ascontiguousarray(arr).astype(dtype).tobytes(), dtype


def save_pipeline(path: str | Path, bundle: PipelineBundle) -> None:
    """Write the pipeline file; identical bundles give identical bytes."""
    sections = []
    payload = bytearray()
    for name, arr in _sections_of(bundle):
        data, dtype = _encode_array(arr)
        sections.append(
            {
                "name": name,
                "dtype": dtype,
                "shape": list(arr.shape),
                "offset": len(payload),
                "nbytes": len(data),
            }
        )
        payload.extend(data)
    header = {
        "config": bundle.config.to_dict(),
        "model": {
            "hidden_units": bundle.lstm.hidden_units,
            "window_len": bundle.lstm.window_len,
            "input_dim": bundle.lstm.input_dim,
        },
        "train_ids": [uid for uid, _ in bundle.hi_train_curves],
        "sections": sections,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode(
        "utf-8"
    )
    body = (
        MAGIC
        + int(FORMAT_VERSION).to_bytes(4, "little")
        + len(header_bytes).to_bytes(8, "little")
        + header_bytes
        + bytes(payload)
    )
    digest = hashlib.sha256(body).digest()
    Path(path).write_bytes(body + digest)


def _fail(path: Path, reason: str):
    raise ValueError(f"pipeline file {path}: {reason}")


def load_pipeline(path: str | Path) -> PipelineBundle:
    """Read a pipeline file back, verifying magic, version, and checksum.

    Raises:
        ValueError: On a wrong magic string, an unsupported format version,
            a truncated file, or a checksum mismatch.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < len(MAGIC) + 12 + _CHECKSUM_BYTES:
        _fail(path, "truncated file")
    if blob[: len(MAGIC)] != MAGIC:
        _fail(path, "bad magic, not a pipeline file")
    pos = len(MAGIC)
    version = int.from_bytes(blob[pos : pos + 4], "little")
    if version != FORMAT_VERSION:
        _fail(path, f"unsupported version {version} (supported: {FORMAT_VERSION})")
    pos += 4
    header_len = int.from_bytes(blob[pos : pos + 8], "little")
    pos += 8
    payload_start = pos + header_len
    if len(blob) < payload_start + _CHECKSUM_BYTES:
        _fail(path, "truncated file")
    body, digest = blob[:-_CHECKSUM_BYTES], blob[-_CHECKSUM_BYTES:]
    if hashlib.sha256(body).digest() != digest:
        _fail(path, "checksum mismatch, file is corrupted")
    try:
        header = json.loads(blob[pos:payload_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        _fail(path, "unreadable header")
    payload = blob[payload_start:-_CHECKSUM_BYTES]

    arrays: dict[str, np.ndarray] = {}
    for sec in header["sections"]:
        start, nbytes = sec["offset"], sec["nbytes"]
        if start + nbytes > len(payload):
            _fail(path, f"truncated section {sec['name']}")
        arr = np.frombuffer(payload[start : start + nbytes], dtype=sec["dtype"])
        arrays[sec["name"]] = arr.reshape(sec["shape"]).copy()

    required = {
        "norm_mean",
        "norm_std",
        "norm_dropped",
        "pca_components",
        "enc_w",
        "enc_b",
        "dec_w",
        "dec_b",
        "out_w",
        "out_b",
        "lr_theta",
        "lr_theta0",
    }
    missing = required - set(arrays)
    if missing:
        _fail(path, f"missing sections: {sorted(missing)}")

    config = config_from_dict(header["config"])
    meta = header["model"]
    lstm = LstmEdModel(
        encoder=LstmParams(w=arrays["enc_w"], b=arrays["enc_b"]),
        decoder=LstmParams(w=arrays["dec_w"], b=arrays["dec_b"]),
        out_weight=arrays["out_w"],
        out_bias=arrays["out_b"],
        hidden_units=int(meta["hidden_units"]),
        window_len=int(meta["window_len"]),
        input_dim=int(meta["input_dim"]),
    )
    curves = [
        (uid, HiCurve(values=arrays[f"curve_{k}"]))
        for k, uid in enumerate(header["train_ids"])
    ]
    return PipelineBundle(
        norm=NormStats(
            mean=arrays["norm_mean"],
            std=arrays["norm_std"],
            dropped=tuple(int(j) for j in arrays["norm_dropped"]),
        ),
        pca=PcaModel(components=arrays["pca_components"]),
        lstm=lstm,
        lr=OlsModel(theta=arrays["lr_theta"], theta0=float(arrays["lr_theta0"][0])),
        hi_train_curves=curves,
        config=config,
    )

"""Binary checkpoint files.

Layout (all integers little-endian; full byte map in
docs/checkpoint_format.md):

    magic      8 bytes  b"FIRECKPT"
    version    u32
    header_len u64
    header     UTF-8 JSON: architecture, normalization, config, history,
               and the tensor manifest (name + shape, in order)
    tensors    raw little-endian float64, C order, manifest order
    checksum   32-byte SHA-256 over the tensor bytes

Files are written atomically (temp file + rename) and are fully
self-describing.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

from .dataset import NormalizationParams
from .errors import (BadMagicError, IntegrityError, ShapeError,
                     UnsupportedVersionError)
from .linalg import Activation
from .network import build_model
from .optim import AdamConfig
from .training import Checkpoint, EpochRecord, Loss, Selection, TrainConfig

MAGIC = b"FIRECKPT"
VERSION = 1


def expected_shapes(hidden: int) -> dict[str, tuple[int, int]]:
    """Canonical tensor manifest for a given hidden size."""
    n = hidden
    shapes: dict[str, tuple[int, int]] = {}
    for g in "zifo":
        shapes[f"lstm.W_{g}"] = (1, n)
    for g in "zifo":
        shapes[f"lstm.R_{g}"] = (n, n)
    for g in "zifo":
        shapes[f"lstm.b_{g}"] = (1, n)
    for g in "zrh":
        shapes[f"gru.W_{g}"] = (n, n)
    for g in "zrh":
        shapes[f"gru.R_{g}"] = (n, n)
    for g in "zrh":
        shapes[f"gru.b_{g}"] = (1, n)
    shapes["dense1.W"] = (n, n)
    shapes["dense1.b"] = (1, n)
    shapes["dense2.W"] = (n, 1)
    shapes["dense2.b"] = (1, 1)
    return shapes


def _config_to_json(cfg: TrainConfig) -> dict:
    return {
        "epochs": cfg.epochs, "seed": cfg.seed, "loss": cfg.loss.value,
        "batch_size": cfg.batch_size, "hidden": cfg.hidden, "window": cfg.window,
        "selection": None if cfg.selection is None else cfg.selection.value,
        "adam": {"alpha": cfg.adam.alpha, "beta1": cfg.adam.beta1,
                 "beta2": cfg.adam.beta2, "epsilon": cfg.adam.epsilon,
                 "clip_norm": cfg.adam.clip_norm},
    }


def _config_from_json(d: dict) -> TrainConfig:
    adam = AdamConfig(**d["adam"])
    return TrainConfig(epochs=d["epochs"], seed=d["seed"], loss=Loss(d["loss"]),
                       batch_size=d["batch_size"], hidden=d["hidden"],
                       window=d["window"], adam=adam,
                       selection=None if d["selection"] is None
                       else Selection(d["selection"]))


def save(ckpt: Checkpoint, path) -> None:
    params = ckpt.model.named_params()
    manifest = [{"name": k, "shape": list(v.shape)} for k, v in params.items()]
    header = {
        "hidden": ckpt.model.hidden,
        "window": ckpt.model.window,
        "norm": {"min": ckpt.norm.min, "max": ckpt.norm.max},
        "rng": ckpt.rng_name,
        "best_epoch": ckpt.best_epoch,
        "config": _config_to_json(ckpt.config),
        "history": [[r.epoch, r.loss, r.train_mae, r.train_rmse,
                     r.val_mae, r.val_rmse] for r in ckpt.history],
        "tensors": manifest,
    }
    header_bytes = json.dumps(header, separators=(",", ":"),
                              allow_nan=False).encode("utf-8")
    digest = hashlib.sha256()
    blobs = []
    for v in params.values():
        blob = np.ascontiguousarray(v, dtype="<f8").tobytes()
        digest.update(blob)
        blobs.append(blob)

    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ckpt-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(VERSION.to_bytes(4, "little"))
            fh.write(len(header_bytes).to_bytes(8, "little"))
            fh.write(header_bytes)
            for blob in blobs:
                fh.write(blob)
            fh.write(digest.digest())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise IntegrityError(f"file truncated while reading {what}")
    return data


def load(path) -> Checkpoint:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise BadMagicError(f"{path}: not a checkpoint file (bad magic)")
        version = int.from_bytes(_read_exact(fh, 4, "version"), "little")
        if version != VERSION:
            raise UnsupportedVersionError(f"{path}: format version {version} "
                                          f"is not supported (expected {VERSION})")
        header_len = int.from_bytes(_read_exact(fh, 8, "header length"), "little")
        try:
            header = json.loads(_read_exact(fh, header_len, "header").decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise IntegrityError(f"{path}: header is not valid JSON ({exc})") from None

        hidden, window = header["hidden"], header["window"]
        expected = expected_shapes(hidden)
        declared = [(t["name"], tuple(t["shape"])) for t in header["tensors"]]
        if [name for name, _ in declared] != list(expected):
            raise ShapeError(f"{path}: tensor manifest does not match the "
                             f"declared architecture (hidden={hidden})")
        for name, shape in declared:
            if shape != expected[name]:
                raise ShapeError(f"{path}: tensor {name} declares shape {shape}, "
                                 f"architecture requires {expected[name]}")

        digest = hashlib.sha256()
        params: dict[str, np.ndarray] = {}
        for name, shape in declared:
            count = shape[0] * shape[1]
            blob = _read_exact(fh, count * 8, f"tensor {name}")
            digest.update(blob)
            params[name] = np.frombuffer(blob, dtype="<f8").reshape(shape).copy()
        stored = _read_exact(fh, 32, "checksum")
        if stored != digest.digest():
            raise IntegrityError(f"{path}: checksum mismatch; file is corrupt")

    model = build_model(params, window, hidden,
                        Activation.RELU, Activation.LINEAR)
    history = [EpochRecord(epoch=e, loss=lo, train_mae=tm, train_rmse=tr,
                           val_mae=vm, val_rmse=vr)
               for e, lo, tm, tr, vm, vr in header["history"]]
    return Checkpoint(model=model,
                      norm=NormalizationParams(**header["norm"]),
                      config=_config_from_json(header["config"]),
                      best_epoch=header["best_epoch"],
                      history=history,
                      rng_name=header["rng"])

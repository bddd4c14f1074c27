"""Checkpoint files: JSON with named flat parameter arrays.

Floats serialize through Python's shortest round-trip repr, so float64 values
survive a save/load cycle losslessly.
"""

from __future__ import annotations

import json

import numpy as np

from .tensor import Tensor

CHECKPOINT_SCHEMA_VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, module_kind: str, hyperparameters: dict,
                    params: dict[str, Tensor]) -> None:
    doc = {
        "schema_version": CHECKPOINT_SCHEMA_VERSION,
        "module_kind": module_kind,
        "hyperparameters": hyperparameters,
        "parameters": {
            name: {"shape": list(p.data.shape), "values": p.data.reshape(-1).tolist()}
            for name, p in params.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, ensure_ascii=False)


def load_checkpoint(path, expect_kind: str | None = None) -> tuple[str, dict, dict[str, np.ndarray]]:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("schema_version") != CHECKPOINT_SCHEMA_VERSION:
        raise CheckpointError(f"unsupported checkpoint schema {doc.get('schema_version')!r}")
    kind = doc.get("module_kind")
    if expect_kind is not None and kind != expect_kind:
        raise CheckpointError(f"expected module_kind {expect_kind!r}, found {kind!r}")
    arrays = {
        name: np.array(entry["values"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in doc["parameters"].items()
    }
    return kind, doc["hyperparameters"], arrays


def restore_parameters(params: dict[str, Tensor], arrays: dict[str, np.ndarray]) -> None:
    missing = set(params) - set(arrays)
    extra = set(arrays) - set(params)
    if missing or extra:
        raise CheckpointError(f"parameter mismatch: missing={sorted(missing)} extra={sorted(extra)}")
    for name, p in params.items():
        if tuple(arrays[name].shape) != tuple(p.data.shape):
            raise CheckpointError(f"shape mismatch for {name!r}")
        p.data = arrays[name].astype(np.float64)

"""Checkpoint files: parameter arrays plus a JSON manifest, written atomically."""

import json
import os

import numpy as np

from ..errors import CheckpointError

FORMAT_VERSION = 1


def save_checkpoint(path, kind, config, arrays, extra=None):
    """Write a checkpoint to `path` (npz) via a temp file and atomic rename.

    Args:
        kind: model identifier string, checked again on load.
        config: JSON-serializable dict describing the architecture knobs.
        arrays: dict name -> ndarray of parameters.
        extra: optional JSON-serializable metadata (loss curves, seeds, ...).
    """
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config": config,
        "extra": extra or {},
        "param_names": sorted(arrays.keys()),
    }
    tmp = f"{path}.tmp.{os.getpid()}"
    payload = {f"param/{k}": np.asarray(v) for k, v in arrays.items()}
    payload["__manifest__"] = np.frombuffer(
        json.dumps(manifest, sort_keys=True).encode("utf-8"), dtype=np.uint8
    )
    with open(tmp, "wb") as f:
        np.savez(f, **payload)
    os.replace(tmp, path)


def load_checkpoint(path, expect_kind=None):
    """Load a checkpoint; returns (manifest dict, dict name -> ndarray)."""
    if not os.path.exists(path):
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        with np.load(path) as z:
            raw = bytes(z["__manifest__"].tobytes())
            manifest = json.loads(raw.decode("utf-8"))
            arrays = {k[len("param/") :]: z[k] for k in z.files if k.startswith("param/")}
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as e:
        raise CheckpointError(f"corrupt checkpoint {path}: {e}") from e
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint version {manifest.get('format_version')} in {path}"
        )
    if expect_kind is not None and manifest.get("kind") != expect_kind:
        raise CheckpointError(
            f"checkpoint kind mismatch in {path}: expected {expect_kind!r}, "
            f"found {manifest.get('kind')!r}"
        )
    missing = set(manifest.get("param_names", [])) - set(arrays)
    if missing:
        raise CheckpointError(f"checkpoint {path} missing arrays: {sorted(missing)}")
    return manifest, arrays

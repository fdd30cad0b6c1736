"""Checkpoints: one little-endian float32 binary blob plus a JSON manifest
carrying names, shapes, optimizer state layout, RNG states and the iteration
counter. Writes are atomic (temp file + rename)."""

import json
import os
import tempfile

import numpy as np

CHECKPOINT_VERSION = 1


def save_checkpoint(path: str, param_arrays: dict, opt_arrays: dict = None,
                    rng_states: dict = None, iteration: int = 0, meta: dict = None):
    """path is the manifest path (.json); the blob lands next to it (.bin)."""
    opt_arrays = opt_arrays or {}
    entries = []
    blobs = []
    offset = 0
    for section, arrays in (("param", param_arrays), ("opt", opt_arrays)):
        for name, arr in arrays.items():
            data = np.ascontiguousarray(arr, dtype="<f4")
            entries.append({
                "section": section, "name": name,
                "shape": list(data.shape), "offset": offset, "nbytes": data.nbytes,
            })
            blobs.append(data.tobytes())
            offset += data.nbytes
    manifest = {
        "version": CHECKPOINT_VERSION,
        "iteration": int(iteration),
        "arrays": entries,
        "rng": rng_states or {},
        "meta": meta or {},
    }
    base, _ = os.path.splitext(path)
    bin_path = base + ".bin"
    _atomic_write(bin_path, b"".join(blobs), binary=True)
    manifest["blob"] = os.path.basename(bin_path)
    _atomic_write(path, json.dumps(manifest, indent=1), binary=False)


def load_checkpoint(path: str):
    """Returns (param_arrays, opt_arrays, rng_states, iteration, meta)."""
    with open(path) as f:
        manifest = json.load(f)
    if manifest.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {manifest.get('version')!r}")
    blob_path = os.path.join(os.path.dirname(os.path.abspath(path)), manifest["blob"])
    with open(blob_path, "rb") as f:
        blob = f.read()
    params, opt = {}, {}
    for entry in manifest["arrays"]:
        raw = blob[entry["offset"]: entry["offset"] + entry["nbytes"]]
        arr = np.frombuffer(raw, dtype="<f4").reshape(entry["shape"]).copy()
        (params if entry["section"] == "param" else opt)[entry["name"]] = arr
    return params, opt, manifest["rng"], manifest["iteration"], manifest["meta"]


def bundle_param_arrays(bundle) -> dict:
    return {name: p.data for name, p in bundle.parameters()}


def load_bundle_params(bundle, arrays: dict):
    for name, p in bundle.parameters():
        arr = arrays[name]
        if tuple(arr.shape) != tuple(p.data.shape):
            raise ValueError(f"shape mismatch for {name}: {arr.shape} vs {p.data.shape}")
        p.data = arr.astype(p.data.dtype)


def rng_state(rng: np.random.Generator) -> dict:
    return json.loads(json.dumps(rng.bit_generator.state))


def restore_rng(state: dict) -> np.random.Generator:
    gen = np.random.default_rng()
    gen.bit_generator.state = state
    return gen


def _atomic_write(path: str, payload, binary: bool):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory)
    try:
        with os.fdopen(fd, "wb" if binary else "w") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise

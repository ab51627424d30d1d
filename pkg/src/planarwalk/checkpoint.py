"""Self-describing binary checkpoints.

Layout: magic ``PWCK`` | u32 version | u32 header length | JSON header |
named parameter blocks as little-endian float32. The header records layer
shapes, the obs-normalization count, a config hash, and the block index;
the blocks hold actor/critic weights, the log-std vector, and the
obs-normalization statistics.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointError
from .nets import ActorCritic, ObsNormalizer

MAGIC = b"PWCK"
FORMAT_VERSION = 1


def _blocks_from(ac: ActorCritic, normalizer: ObsNormalizer) -> dict:
    blocks = dict(ac.params())
    blocks["obs_mean"] = normalizer.mean.astype(np.float32)
    blocks["obs_var"] = normalizer.var.astype(np.float32)
    return blocks


def save_checkpoint(path, ac: ActorCritic, normalizer: ObsNormalizer,
                    config_hash: str = "", extra: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blocks = _blocks_from(ac, normalizer)
    index = []
    offset = 0
    payload = []
    for name, arr in blocks.items():
        arr32 = np.ascontiguousarray(arr, dtype="<f4")
        raw = arr32.tobytes()
        index.append({"name": name, "shape": list(arr.shape),
                      "offset": offset, "nbytes": len(raw)})
        payload.append(raw)
        offset += len(raw)
    header = {
        "format_version": FORMAT_VERSION,
        "config_hash": config_hash,
        "obs_dim": ac.obs_dim,
        "action_dim": ac.action_dim,
        "hidden": ac.hidden,
        "layers": ac.layers,
        "obs_count": normalizer.count,
        "blocks": index,
    }
    if extra:
        header.update(extra)
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for raw in payload:
            fh.write(raw)
    return path


def load_checkpoint(path) -> tuple[ActorCritic, ObsNormalizer, dict]:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint (bad magic)")
    version, header_len = struct.unpack("<II", data[4:12])
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        header = json.loads(data[12:12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header in {path}") from exc
    base = 12 + header_len

    blocks = {}
    for entry in header["blocks"]:
        start = base + entry["offset"]
        raw = data[start:start + entry["nbytes"]]
        if len(raw) != entry["nbytes"]:
            raise CheckpointError(f"truncated checkpoint block '{entry['name']}'")
        blocks[entry["name"]] = np.frombuffer(raw, dtype="<f4").reshape(entry["shape"]).copy()

    ac = ActorCritic(header["obs_dim"], header["action_dim"],
                     hidden=header["hidden"], layers=header["layers"])
    params = ac.params()
    for name, param in params.items():
        if name not in blocks:
            raise CheckpointError(f"checkpoint missing block '{name}'")
        if list(blocks[name].shape) != list(param.shape):
            raise CheckpointError(
                f"block '{name}' shape {blocks[name].shape} != expected {param.shape}")
        param[...] = blocks[name]
    normalizer = ObsNormalizer(header["obs_dim"])
    normalizer.mean = blocks["obs_mean"].astype(np.float64)
    normalizer.var = blocks["obs_var"].astype(np.float64)
    normalizer.count = float(header["obs_count"])
    return ac, normalizer, header

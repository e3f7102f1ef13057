"""Binary checkpoint format.

Layout (all integers little-endian):
    8 bytes   magic b"TS2CCKPT"
    u32       format version
    u32       length n of the descriptor
    n bytes   UTF-8 JSON descriptor: {"architecture": {...}, "arrays": [[name, shape], ...], "meta": {...}}
    ...       float64 little-endian array payloads, in descriptor order
"""

import json
import struct
from pathlib import Path

import numpy as np

from ts2c.errors import CheckpointError

MAGIC = b"TS2CCKPT"
VERSION = 1


def save_arrays(path, architecture: dict, arrays: dict, meta: dict | None = None):
    names = list(arrays)
    desc = {
        "architecture": architecture,
        "arrays": [[n, list(np.shape(arrays[n]))] for n in names],
        "meta": meta or {},
    }
    blob = json.dumps(desc, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(arrays[n], dtype="<f8").tobytes())


def load_arrays(path, expected_architecture: dict | None = None):
    """Return (architecture, arrays, meta); validates magic, version and architecture."""
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    data = path.read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointError(f"{path}: bad magic tag")
    version, n = struct.unpack("<II", data[8:16])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    try:
        desc = json.loads(data[16:16 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt descriptor") from exc
    arch = desc["architecture"]
    if expected_architecture is not None and arch != json.loads(json.dumps(expected_architecture)):
        raise CheckpointError(f"{path}: architecture mismatch: file has {arch}, expected {expected_architecture}")
    arrays = {}
    offset = 16 + n
    for name, shape in desc["arrays"]:
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(data):
            raise CheckpointError(f"{path}: truncated payload")
        arrays[name] = np.frombuffer(data[offset:end], dtype="<f8").reshape(shape).astype(np.float64)
        offset = end
    if offset != len(data):
        raise CheckpointError(f"{path}: trailing bytes after payload")
    return arch, arrays, desc.get("meta", {})


def _named(prefix, params):
    return {f"{prefix}.{i}": p for i, p in enumerate(params)}


def save_policy(path, policy, critics=None, meta=None):
    """Policy (and optionally its critics) to one file."""
    arch = {"policy": policy.descriptor()}
    arrays = _named("policy", policy.params())
    if critics is not None:
        arch["critics"] = critics.descriptor()
        arrays.update(_named("critics", critics.params()))
        arrays.update(_named("critics_target", critics.target.params()))
    save_arrays(path, arch, arrays, meta)


def load_policy(path, expected=None):
    """Rebuild (policy, critics or None, meta) from ``save_policy`` output.

    ``expected`` is a policy descriptor the stored one must equal.
    """
    from ts2c.neural.ensemble import QEnsemble
    from ts2c.neural.gaussian import GaussianPolicy

    arch, arrays, meta = load_arrays(path)
    pd = arch.get("policy")
    if pd is None or pd.get("kind") != "gaussian_policy":
        raise CheckpointError(f"{path}: not a policy checkpoint")
    if expected is not None and pd != json.loads(json.dumps(expected)):
        raise CheckpointError(f"{path}: architecture mismatch: file has {pd}, expected {expected}")
    policy = GaussianPolicy(pd["obs_dim"], pd["action_dim"], pd["hidden"], pd["low"], pd["high"])
    _fill(path, policy.params(), arrays, "policy")
    critics = None
    if "critics" in arch:
        cd = arch["critics"]
        critics = QEnsemble(cd["obs_dim"], cd["action_dim"], cd["hidden"], cd["n_members"])
        _fill(path, critics.params(), arrays, "critics")
        _fill(path, critics.target.params(), arrays, "critics_target")
    return policy, critics, meta


def _fill(path, params, arrays, prefix):
    for i, p in enumerate(params):
        key = f"{prefix}.{i}"
        if key not in arrays or arrays[key].shape != p.shape:
            raise CheckpointError(f"{path}: array {key} missing or mis-shaped")
        p[...] = arrays[key]

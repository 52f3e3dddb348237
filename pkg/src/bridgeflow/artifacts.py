"""Self-describing run artifacts: CSV tables, parameter files, manifests.

Every CSV starts with ``# run_id=...`` comment lines followed by a column
header; floats are written with 17 significant digits so reruns with the
same seed are byte-identical. The manifest is written last and lists every
produced file with its role, serving as the completion marker of a command.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .mlp import MlpParams

__all__ = [
    "TOOL_VERSION",
    "run_id_for",
    "config_hash",
    "write_csv",
    "read_csv",
    "write_manifest",
    "read_manifest",
    "manifest_file",
    "save_params",
    "load_params",
    "MissingArtifactError",
]

TOOL_VERSION = "0.1.0"

FLOAT_FMT = "%.17g"


class MissingArtifactError(FileNotFoundError):
    """A required prior-stage artifact is absent."""


def config_hash(config_dict: dict) -> str:
    """Stable hash of the semantic config content."""
    canon = json.dumps(config_dict, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def run_id_for(config_dict: dict, seed: int) -> str:
    """Deterministic run id from config content and seed (no timestamps)."""
    canon = json.dumps({"config": config_dict, "seed": seed}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _format_value(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FLOAT_FMT % float(v)


def write_csv(path, columns, rows, run_id: str, meta: dict | None = None) -> None:
    """Write rows (iterable of sequences) with run-id and metadata comments."""
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# run_id={run_id}\n")
        for key, val in (meta or {}).items():
            fh.write(f"# {key}={val}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_format_value(v) for v in row) + "\n")


def read_csv(path) -> tuple[list[str], np.ndarray, dict]:
    """Read one of our CSVs: (columns, float array, comment metadata)."""
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"artifact not found: {path}")
    meta: dict[str, str] = {}
    columns: list[str] = []
    data_start = 0
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    for i, line in enumerate(lines):
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, val = body.split("=", 1)
                meta[key.strip()] = val.strip()
            continue
        columns = line.split(",")
        data_start = i + 1
        break
    n_cols = len(columns)
    rows = [line.split(",") for line in lines[data_start:] if line]
    arr = np.array(rows, dtype=float) if rows else np.empty((0, n_cols))
    if arr.size and arr.shape[1] != n_cols:
        raise ValueError(f"{path}: ragged rows")
    return columns, arr, meta


def manifest_file(out_dir, command: str) -> Path:
    return Path(out_dir) / f"manifest_{command}.json"


def write_manifest(out_dir, command: str, run_id: str, cfg_hash: str, files: list[tuple[str, str]]) -> Path:
    """List produced files (relative path, role); written after everything else."""
    out_dir = Path(out_dir)
    for rel, _role in files:
        if not (out_dir / rel).exists():
            raise MissingArtifactError(f"manifest lists missing file {rel}")
    doc = {
        "run_id": run_id,
        "config_hash": cfg_hash,
        "command": command,
        "tool_version": TOOL_VERSION,
        "files": [{"path": rel, "role": role} for rel, role in files],
    }
    path = manifest_file(out_dir, command)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"manifest not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def save_params(path, params: MlpParams, run_id: str) -> None:
    """Parameter file: architecture header plus flat arrays in layer order.

    Layer order: input, block1.lin1, block1.lin2, ..., output. Weights are
    row-major flattened lists with shapes recorded alongside.
    """
    layers = []

    def add(name: str, w: np.ndarray, b: np.ndarray) -> None:
        layers.append(
            {
                "name": name,
                "weight_shape": list(w.shape),
                "weight": [float(v) for v in w.ravel()],
                "bias": [float(v) for v in b],
            }
        )

    add("input", params.w_in, params.b_in)
    for i, (w1, b1, w2, b2) in enumerate(params.blocks, start=1):
        add(f"block{i}.lin1", w1, b1)
        add(f"block{i}.lin2", w2, b2)
    add("output", params.w_out, params.b_out)
    doc = {
        "run_id": run_id,
        "tool_version": TOOL_VERSION,
        "architecture": {
            "state_dim": params.state_dim,
            "control_dim": params.control_dim,
            "width": params.width,
            "blocks": len(params.blocks),
            "activation": "elu",
            "input": "concat(t, state)",
        },
        "layers": layers,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_params(path) -> MlpParams:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"parameter file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    arch = doc["architecture"]
    by_name = {}
    for layer in doc["layers"]:
        w = np.array(layer["weight"], dtype=float).reshape(layer["weight_shape"])
        b = np.array(layer["bias"], dtype=float)
        by_name[layer["name"]] = (w, b)
    blocks = []
    for i in range(1, arch["blocks"] + 1):
        w1, b1 = by_name[f"block{i}.lin1"]
        w2, b2 = by_name[f"block{i}.lin2"]
        blocks.append((w1, b1, w2, b2))
    w_in, b_in = by_name["input"]
    w_out, b_out = by_name["output"]
    params = MlpParams(w_in, b_in, blocks, w_out, b_out)
    if params.state_dim != arch["state_dim"] or params.control_dim != arch["control_dim"]:
        raise ValueError(f"{path}: architecture header disagrees with layer shapes")
    return params

import json
import subprocess
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))


MINI_CONFIG = {
    "system": {"name": "double_integrator", "epsilon": 1.0},
    "distributions": {
        "p0": {"kind": "gaussian", "mean": [0, 0], "cov": [[1, 0], [0, 1]]},
        "p1": {
            "kind": "mixture",
            "weights": [0.5, 0.5],
            "means": [[-2.5, 0], [2.5, 0]],
            "cov_scale": 0.25,
        },
    },
    "law": {"kind": "learned", "train": {"iterations": 200, "dataset_size": 150, "batch_size": 32}},
    "rollout": {"paths": 60, "dt": 0.01, "store_stride": 5},
    "eval": {"eval_times": 8, "w2_subsample": 48},
    "seed": 3,
}


@pytest.fixture(scope="session")
def run_dir(tmp_path_factory):
    """Artifacts produced by the primary tool's own CLI (its public interface)."""
    tmp = tmp_path_factory.mktemp("artifacts")
    out = tmp / "run"
    cfg = dict(MINI_CONFIG, output_dir=str(out))
    cfg_path = tmp / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    for cmd in ("train", "rollout", "eval"):
        proc = subprocess.run(
            [sys.executable, "-m", "bridgeflow.cli", cmd, "--config", str(cfg_path)],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0, f"{cmd} failed: {proc.stderr}"
    return out

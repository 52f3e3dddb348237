"""The artifact pipeline end to end, through the command-line interface.

check -> train -> rollout -> eval on a reduced copy of the fig2a problem,
then the figure panels via plots/render.py. The shipped configs under
configs/ run the same pipeline at full production scale.
"""

import json
import subprocess
import sys
from pathlib import Path

HERE = Path(__file__).parent
OUT = HERE / "out" / "cli_run"
REPO = HERE.parent

config = json.loads((REPO / "configs" / "fig2a.json").read_text())
config["law"]["train"].update(iterations=1500, dataset_size=600)
config["rollout"].update(paths=500)
config["output_dir"] = str(OUT)
cfg_path = HERE / "out" / "fig2a_small.json"
cfg_path.parent.mkdir(exist_ok=True)
cfg_path.write_text(json.dumps(config, indent=2))


def run(*argv):
    print("$", " ".join(str(a) for a in argv))
    subprocess.run([str(a) for a in argv], check=True)


cli = [sys.executable, "-m", "bridgeflow.cli"]
run(*cli, "check", "--config", cfg_path)
run(*cli, "train", "--config", cfg_path)
run(*cli, "rollout", "--config", cfg_path)
run(*cli, "eval", "--config", cfg_path)

for panel in ("trajectories", "density_overlay", "metric_curve"):
    run(
        sys.executable, REPO / "plots" / "render.py",
        "--manifest", OUT,
        "--panel", panel,
        "--out", HERE / "out" / f"{panel}.png",
    )

print("\nartifacts:")
for p in sorted(OUT.iterdir()):
    print(f"  {p.name}")

"""Subcommand implementations behind the CLI.

Each command reads a RunConfig, derives its own seeded generator streams,
writes self-describing artifacts into the output directory, and finishes
by writing its manifest (the completion marker). Outputs are byte-stable
across reruns with the same seed.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import artifacts
from .artifacts import MissingArtifactError
from .bridges import bridge_gain, det_interpolate, sample_training_batch
from .config import RunConfig, command_streams
from .distributions import GaussianMixture
from .linalg import gramian
from .metrics import MmdConfig, kde2, mmd, pick_eval_times, w2
from .mixture_law import MixtureLawContext
from .rollout import ClosedFormMixtureLaw, LearnedLaw, PointBridgeLaw, rollout
from .systems import BridgeKernel, build_kernel, check_controllability
from .training import train

__all__ = ["cmd_check", "cmd_bridge", "cmd_train", "cmd_rollout", "cmd_eval"]


def _prepare(config: RunConfig, out_dir) -> tuple[Path, str, str]:
    out = Path(out_dir if out_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    run_id = artifacts.run_id_for(config.raw, config.seed)
    cfg_hash = artifacts.config_hash(config.raw)
    return out, run_id, cfg_hash


def _kernel_for(config: RunConfig) -> BridgeKernel:
    grid = int(round(1.0 / config.rollout.dt)) + 1
    return build_kernel(config.system, grid_size=grid, delta=config.train.time_clamp)


def cmd_check(config: RunConfig, out_dir=None, print_fn=print) -> int:
    """Controllability verdict: Kalman rank and Gramian conditioning at t=1."""
    sys = config.system
    report = check_controllability(sys.A, sys.B)
    print_fn(f"system: {sys.name or 'custom'} (n={sys.n}, m={sys.m}, epsilon={sys.epsilon:g})")
    print_fn(f"kalman rank: {report.rank} of {report.n}")
    if report.controllable:
        cond = float(np.linalg.cond(gramian(sys.A, sys.B, 1.0)))
        print_fn(f"gramian condition number at t=1: {cond:.6g}")
        print_fn("verdict: controllable")
        return 0
    print_fn("verdict: NOT controllable")
    return 1


def cmd_bridge(config: RunConfig, out_dir=None) -> Path:
    """Single-pair bridge trajectories with their controls, as CSV."""
    if config.bridge is None:
        raise MissingArtifactError("config has no 'bridge' block with endpoints x, y")
    out, run_id, cfg_hash = _prepare(config, out_dir)
    kernel = _kernel_for(config)
    sys = config.system
    x, y = config.bridge.x, config.bridge.y
    (rng,) = command_streams(config.seed, "bridge", 1)
    stride = config.rollout.effective_stride

    if sys.epsilon > 0.0:
        law = PointBridgeLaw(kernel, y)
        batch = rollout(
            sys, kernel, law, np.tile(x, (config.bridge.paths, 1)),
            dt=config.rollout.dt, rng=rng, store_stride=stride, seed=config.seed,
        )
        times, states = batch.times, batch.states
    else:
        # deterministic: the interpolant formula is exact, no simulation needed
        all_times = np.linspace(0.0, 1.0, int(round(1.0 / config.rollout.dt)) + 1)
        keep = pick_eval_times(all_times, max(2, all_times.size // stride + 1))
        times = all_times[keep]
        path = det_interpolate(kernel, x, y, times)
        states = np.repeat(path[None, :, :], config.bridge.paths, axis=0)

    rows = []
    for pid in range(states.shape[0]):
        controls = np.stack(
            [bridge_gain(kernel, t, states[pid, i], y) for i, t in enumerate(times)]
        )
        for i, t in enumerate(times):
            rows.append([pid, t, *states[pid, i], *controls[i]])
    cols = ["path_id", "t"] + [f"x_{i+1}" for i in range(sys.n)] + [f"u_{j+1}" for j in range(sys.m)]
    artifacts.write_csv(out / "bridge_trajectories.csv", cols, rows, run_id)
    return artifacts.write_manifest(
        out, "bridge", run_id, cfg_hash, [("bridge_trajectories.csv", "bridge_trajectories")]
    )


def cmd_train(config: RunConfig, out_dir=None) -> Path:
    """Fit the learned law; persist parameters, loss trace, and frozen pairs."""
    out, run_id, cfg_hash = _prepare(config, out_dir)
    kernel = _kernel_for(config)
    (rng,) = command_streams(config.seed, "train", 1)
    result = train(config.system, config.coupling, config.train, kernel=kernel, rng=rng)

    artifacts.save_params(out / "params.json", result.params, run_id)
    artifacts.write_csv(
        out / "loss_trace.csv",
        ["iteration", "loss"],
        ([it, lo] for it, lo in enumerate(result.loss_trace)),
        run_id,
    )
    n = config.system.n
    pair_cols = [f"x_{i+1}" for i in range(n)] + [f"y_{i+1}" for i in range(n)]
    artifacts.write_csv(
        out / "training_pairs.csv",
        pair_cols,
        np.hstack([result.pair_xs, result.pair_ys]),
        run_id,
    )
    return artifacts.write_manifest(
        out,
        "train",
        run_id,
        cfg_hash,
        [
            ("params.json", "parameters"),
            ("loss_trace.csv", "loss_trace"),
            ("training_pairs.csv", "training_pairs"),
        ],
    )


def _build_law(config: RunConfig, kernel: BridgeKernel, out: Path):
    if config.law_kind == "closed_form":
        return ClosedFormMixtureLaw(MixtureLawContext(kernel, config.p0, config.p1))
    params_file = config.raw.get("law", {}).get("params_file", "params.json")
    path = Path(params_file)
    if not path.is_absolute():
        path = out / params_file
    return LearnedLaw(artifacts.load_params(path))


def cmd_rollout(config: RunConfig, out_dir=None) -> Path:
    """Simulate prediction paths from P0 under the configured law."""
    out, run_id, cfg_hash = _prepare(config, out_dir)
    kernel = _kernel_for(config)
    law = _build_law(config, kernel, out)
    rng_init, rng_noise, rng_target = command_streams(config.seed, "rollout", 3)

    n_paths = config.rollout.paths
    init = config.p0.sample(n_paths, rng_init)
    batch = rollout(
        config.system, kernel, law, init,
        dt=config.rollout.dt, rng=rng_noise,
        store_stride=config.rollout.effective_stride, seed=config.seed,
    )

    n = config.system.n
    state_cols = [f"x_{i+1}" for i in range(n)]
    n_times = batch.times.size
    traj = np.empty((n_paths * n_times, 2 + n))
    traj[:, 0] = np.repeat(np.arange(n_paths), n_times)
    traj[:, 1] = np.tile(batch.times, n_paths)
    traj[:, 2:] = batch.states.reshape(n_paths * n_times, n)
    artifacts.write_csv(
        out / "trajectories.csv",
        ["path_id", "t"] + state_cols,
        traj,
        run_id,
        meta={"dt": "%.17g" % batch.dt, "paths": n_paths, "law": law.law_id},
    )
    artifacts.write_csv(out / "terminal_samples.csv", state_cols, batch.terminal(), run_id)
    artifacts.write_csv(
        out / "target_samples.csv", state_cols, config.p1.sample(n_paths, rng_target), run_id
    )
    return artifacts.write_manifest(
        out,
        "rollout",
        run_id,
        cfg_hash,
        [
            ("trajectories.csv", "trajectories"),
            ("terminal_samples.csv", "terminal_samples"),
            ("target_samples.csv", "target_samples"),
        ],
    )


def _load_trajectories(out: Path) -> tuple[np.ndarray, np.ndarray]:
    cols, arr, _meta = artifacts.read_csv(out / "trajectories.csv")
    if cols[:2] != ["path_id", "t"]:
        raise ValueError("trajectories.csv: unexpected column layout")
    n = len(cols) - 2
    path_ids = arr[:, 0].astype(int)
    n_paths = path_ids.max() + 1
    times = arr[path_ids == 0, 1]
    if arr.shape[0] != n_paths * times.size:
        raise ValueError("trajectories.csv: incomplete path grid")
    states = arr[:, 2:].reshape(n_paths, times.size, n)
    return times, states


def cmd_eval(config: RunConfig, out_dir=None) -> Path:
    """Metric curves against time-matched bridge references, plus densities.

    MMD (normalized by MMD(P0, P1)) and W2 at <= eval_times grid times; the
    reference at time t is regenerated from the frozen training pairs when
    the law was trained, else from fresh coupling draws. When the target has
    a density, also writes the terminal KDE / exact-density overlay grid.
    """
    out, run_id, cfg_hash = _prepare(config, out_dir)
    kernel = _kernel_for(config)
    times, states = _load_trajectories(out)
    rng_pairs, rng_ref, rng_norm, rng_w2 = command_streams(config.seed, "eval", 4)

    if config.law_kind == "learned":
        cols, pair_arr, _ = artifacts.read_csv(out / "training_pairs.csv")
        n = config.system.n
        xs, ys = pair_arr[:, :n], pair_arr[:, n:]
    else:
        xs, ys = config.coupling.draw_pairs(config.train.dataset_size, rng_pairs)

    cfg_mmd = MmdConfig(bandwidth=config.eval.mmd_bandwidth)
    idx = pick_eval_times(times, config.eval.eval_times)
    p0_samples = config.p0.sample(states.shape[0], rng_norm)
    p1_samples = config.p1.sample(xs.shape[0], rng_norm)
    normalizer = mmd(p0_samples, p1_samples, cfg_mmd)

    rows = []
    for k in idx:
        t = float(times[k])
        ref, _ = sample_training_batch(kernel, xs, ys, np.full(xs.shape[0], t), rng_ref)
        gen = states[:, k, :]
        raw = mmd(gen, ref, cfg_mmd)
        dist_w2 = w2(
            gen,
            ref,
            max_exact=config.eval.w2_subsample,
            repeats=config.eval.w2_repeats,
            rng=rng_w2,
            exact=config.eval.w2_exact,
        )
        rows.append([t, raw, raw / normalizer, dist_w2])
    artifacts.write_csv(
        out / "metrics.csv",
        ["t", "mmd", "mmd_normalized", "w2"],
        rows,
        run_id,
        meta={"mmd_normalizer": "%.17g" % normalizer},
    )
    files = [("metrics.csv", "metrics")]

    if isinstance(config.p1, GaussianMixture):
        files.append(("density_grid.csv", "density_grid"))
        _write_density_grid(config, out, run_id, states[:, -1, :])

    return artifacts.write_manifest(out, "eval", run_id, cfg_hash, files)


def _write_density_grid(config: RunConfig, out: Path, run_id: str, terminal: np.ndarray) -> None:
    dims = config.projection_dims()
    pts = terminal[:, list(dims)]
    target = config.p1.marginal(np.array(dims))

    lo = pts.mean(axis=0) - 5.0 * pts.std(axis=0)
    hi = pts.mean(axis=0) + 5.0 * pts.std(axis=0)
    spread = 5.0 * np.sqrt(np.linalg.eigvalsh(target.covs).max())
    lo = np.minimum(lo, target.means.min(axis=0) - spread)
    hi = np.maximum(hi, target.means.max(axis=0) + spread)
    g = config.eval.density_grid
    gx = np.linspace(lo[0], hi[0], g)
    gy = np.linspace(lo[1], hi[1], g)

    dens = kde2(pts, gx, gy, config.eval.kde_bandwidth)
    mesh = np.stack(np.meshgrid(gx, gy, indexing="ij"), axis=-1).reshape(-1, 2)
    exact = np.exp(target.log_density(mesh))
    rows = np.column_stack([mesh, dens.ravel(), exact])
    artifacts.write_csv(
        out / "density_grid.csv",
        ["x1", "x2", "kde", "target_density"],
        rows,
        run_id,
        meta={
            "nx": g,
            "ny": g,
            "projection": f"{dims[0]},{dims[1]}",
            "kde_bandwidth": "%.17g" % config.eval.kde_bandwidth,
        },
    )

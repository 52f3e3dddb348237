"""Run configuration: one JSON document driving every subcommand.

Blocks: system (builtin name or explicit A/B, epsilon), distributions
(p0/p1 specs), law (closed_form or learned + training hyperparameters),
rollout (paths, dt, stride), eval (bandwidths, subsample sizes), bridge
(endpoints for single-pair trajectories), mandatory seed, output_dir.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .distributions import Empirical, GaussianMixture, IndependentCoupling, UniformCircle
from .systems import LinearSystem, builtin_system
from .training import TrainConfig

__all__ = ["ConfigError", "RunConfig", "load_config", "build_distribution", "command_streams"]

_COMMAND_CODES = {"check": 0, "bridge": 1, "train": 2, "rollout": 3, "eval": 4}


class ConfigError(ValueError):
    """Config parse/validation failure, annotated with the offending key path."""

    def __init__(self, key: str, message: str):
        super().__init__(f"config[{key}]: {message}")
        self.key = key


def _get(d: dict, key: str, path: str, required: bool = True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required key")
        return default
    return d[key]


def build_system(block: dict) -> LinearSystem:
    if "name" in block:
        try:
            return builtin_system(block["name"], epsilon=float(block.get("epsilon", 1.0)))
        except ValueError as exc:
            raise ConfigError("system.name", str(exc)) from exc
    if "A" not in block or "B" not in block:
        raise ConfigError("system", "need either a builtin 'name' or explicit 'A' and 'B'")
    try:
        return LinearSystem(
            np.array(block["A"], dtype=float),
            np.array(block["B"], dtype=float),
            float(block.get("epsilon", 1.0)),
            name=str(block.get("label", "custom")),
        )
    except ValueError as exc:
        raise ConfigError("system", str(exc)) from exc


def build_distribution(block: dict, n: int, path: str, base_dir: Path | None = None):
    kind = _get(block, "kind", path)
    if kind == "gaussian":
        mean = np.array(_get(block, "mean", path), dtype=float)
        cov = np.array(_get(block, "cov", path), dtype=float)
        dist = GaussianMixture.single(mean, cov)
    elif kind == "mixture":
        means = np.atleast_2d(np.array(_get(block, "means", path), dtype=float))
        if "covs" in block:
            covs = np.array(block["covs"], dtype=float)
        elif "cov_scale" in block:
            covs = np.stack([float(block["cov_scale"]) * np.eye(means.shape[1])] * means.shape[0])
        else:
            raise ConfigError(path, "mixture needs 'covs' or 'cov_scale'")
        dist = GaussianMixture(np.array(_get(block, "weights", path), dtype=float), means, covs)
    elif kind == "uniform_circle":
        dist = UniformCircle(block.get("center", (0.0, 0.0)), float(_get(block, "radius", path)))
    elif kind == "empirical":
        rel = Path(_get(block, "path", path))
        file_path = rel if rel.is_absolute() or base_dir is None else base_dir / rel
        try:
            dist = Empirical(file_path)
        except (FileNotFoundError, ValueError) as exc:
            raise ConfigError(f"{path}.path", str(exc)) from exc
    else:
        raise ConfigError(f"{path}.kind", f"unknown distribution kind {kind!r}")
    if dist.dim != n:
        raise ConfigError(path, f"distribution dimension {dist.dim} != system dimension {n}")
    return dist


@dataclass
class RolloutBlock:
    paths: int = 2000
    dt: float = 1e-3
    store_stride: int = 10
    full_resolution: bool = False

    @property
    def effective_stride(self) -> int:
        return 1 if self.full_resolution else self.store_stride


@dataclass
class EvalBlock:
    mmd_bandwidth: float = 2.0
    w2_subsample: int = 512
    w2_repeats: int = 4
    w2_exact: bool = False
    eval_times: int = 50
    kde_bandwidth: float = 0.25
    density_grid: int = 121
    projection: tuple[int, int] | None = None  # defaults to last two components


@dataclass
class BridgeBlock:
    x: np.ndarray = None
    y: np.ndarray = None
    paths: int = 5


@dataclass
class RunConfig:
    system: LinearSystem
    p0: object
    p1: object
    law_kind: str
    train: TrainConfig
    rollout: RolloutBlock
    eval: EvalBlock
    bridge: BridgeBlock | None
    seed: int
    output_dir: str
    raw: dict

    @property
    def coupling(self) -> IndependentCoupling:
        return IndependentCoupling(self.p0, self.p1)

    def projection_dims(self) -> tuple[int, int]:
        if self.eval.projection is not None:
            return self.eval.projection
        n = self.system.n
        return (n - 2, n - 1) if n >= 2 else (0, 0)


def load_config(path, seed_override: int | None = None, out_override: str | None = None) -> RunConfig:
    """Parse and validate a JSON run config."""
    path = Path(path)
    if not path.exists():
        raise ConfigError("", f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc

    system = build_system(_get(raw, "system", ""))
    n = system.n

    dists = _get(raw, "distributions", "")
    p0 = build_distribution(_get(dists, "p0", "distributions"), n, "distributions.p0", path.parent)
    p1 = build_distribution(_get(dists, "p1", "distributions"), n, "distributions.p1", path.parent)

    seed = seed_override if seed_override is not None else raw.get("seed")
    if seed is None:
        raise ConfigError("seed", "missing required key (or pass --seed)")
    seed = int(seed)

    law_block = raw.get("law", {"kind": "learned"})
    law_kind = law_block.get("kind", "learned")
    if law_kind not in ("closed_form", "learned"):
        raise ConfigError("law.kind", f"unknown law kind {law_kind!r}")
    if law_kind == "closed_form":
        if not (isinstance(p0, GaussianMixture) and p0.n_components == 1):
            raise ConfigError("law.kind", "closed_form needs a single-Gaussian p0")
        if not isinstance(p1, GaussianMixture):
            raise ConfigError("law.kind", "closed_form needs a gaussian/mixture p1")
    tb = law_block.get("train", {})
    try:
        train_cfg = TrainConfig(
            iterations=int(tb.get("iterations", 10_000)),
            dataset_size=int(tb.get("dataset_size", 2_000)),
            batch_size=int(tb.get("batch_size", 64)),
            lr0=float(tb.get("lr0", 1e-2)),
            decay=float(tb.get("decay", 0.999)),
            seed=seed,
            time_clamp=float(tb.get("time_clamp", 1e-3)),
            width=int(tb.get("width", 32)),
            n_blocks=int(tb.get("blocks", 3)),
        )
    except ValueError as exc:
        raise ConfigError("law.train", str(exc)) from exc

    rb = raw.get("rollout", {})
    rollout = RolloutBlock(
        paths=int(rb.get("paths", 2000)),
        dt=float(rb.get("dt", 1e-3)),
        store_stride=int(rb.get("store_stride", 10)),
        full_resolution=bool(rb.get("full_resolution", False)),
    )
    if rollout.paths < 1 or rollout.dt <= 0 or rollout.store_stride < 1:
        raise ConfigError("rollout", "paths/store_stride must be >= 1 and dt > 0")

    eb = raw.get("eval", {})
    proj = eb.get("projection")
    eval_block = EvalBlock(
        mmd_bandwidth=float(eb.get("mmd_bandwidth", 2.0)),
        w2_subsample=int(eb.get("w2_subsample", 512)),
        w2_repeats=int(eb.get("w2_repeats", 4)),
        w2_exact=bool(eb.get("w2_exact", False)),
        eval_times=int(eb.get("eval_times", 50)),
        kde_bandwidth=float(eb.get("kde_bandwidth", 0.25)),
        density_grid=int(eb.get("density_grid", 121)),
        projection=tuple(int(i) for i in proj) if proj is not None else None,
    )
    if eval_block.projection is not None:
        for i in eval_block.projection:
            if not 0 <= i < n:
                raise ConfigError("eval.projection", f"component {i} out of range for n={n}")

    bridge = None
    if "bridge" in raw:
        bb = raw["bridge"]
        x = np.array(_get(bb, "x", "bridge"), dtype=float)
        y = np.array(_get(bb, "y", "bridge"), dtype=float)
        if x.shape != (n,) or y.shape != (n,):
            raise ConfigError("bridge", f"x and y must be {n}-vectors")
        bridge = BridgeBlock(x=x, y=y, paths=int(bb.get("paths", 5)))

    out_dir = out_override if out_override is not None else raw.get("output_dir", f"runs/{path.stem}")
    return RunConfig(
        system=system,
        p0=p0,
        p1=p1,
        law_kind=law_kind,
        train=train_cfg,
        rollout=rollout,
        eval=eval_block,
        bridge=bridge,
        seed=seed,
        output_dir=str(out_dir),
        raw=raw,
    )


def command_streams(seed: int, command: str, count: int) -> list[np.random.Generator]:
    """Deterministic per-command generator streams.

    Stream j of command c is seeded from SeedSequence([seed, code(c), j]),
    so commands never share draws and reruns are reproducible.
    """
    code = _COMMAND_CODES[command]
    return [np.random.default_rng(np.random.SeedSequence([seed, code, j])) for j in range(count)]

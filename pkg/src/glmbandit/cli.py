"""Experiment runner: JSON config in, aggregated CSV and metadata out.

Config schema (all keys required):

    {
      "cells":  [{"d": int, "k": int, "t": int, "link": str,
                  "delay": {"kind": str, "mean": float}, "theta_seed": int}],
      "policies": [{"kind": str, "alpha": float, "delta": float,
                    "m1": float, "r": float}],
      "n_runs": int, "base_seed": int, "record_every": int
    }

Each (cell, run) pair gets the seed tuple (base_seed, cell_index, run_index),
so every policy sees identical decision sets, noise, and delays within a run.
The CSV is byte-identical for a fixed config and seed regardless of the
worker count (BANDIT_WORKERS); BANDIT_SEED overrides base_seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .env import DelayModel, EnvironmentConfig, resolve_theta
from .glm import NonConvergenceError
from .policy import PolicyConfig
from .sim import run_episode
from .verify import run_all

__all__ = [
    "CSV_COLUMNS",
    "ExperimentSpec",
    "AggregateResult",
    "load_spec",
    "spec_to_dict",
    "preset_spec",
    "cell_ids",
    "policy_names",
    "run_experiment",
    "write_csv",
    "write_meta",
    "main",
]

CSV_COLUMNS = (
    "cell_id",
    "policy",
    "round",
    "mean_cum_regret",
    "se_cum_regret",
    "mean_pending",
    "coverage_rate",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """A full experiment: cells x policies x runs plus aggregation settings."""

    cells: tuple[EnvironmentConfig, ...]
    policies: tuple[PolicyConfig, ...]
    n_runs: int
    base_seed: int
    record_every: int

    def __post_init__(self):
        if not self.cells or not self.policies:
            raise ValueError("need at least one cell and one policy")
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class AggregateResult:
    """Rows of (cell_id, policy, round, mean regret, SE, mean pending, coverage)."""

    rows: list[tuple[str, str, int, float, float, float, float]]
    failed_runs: dict[str, int]


def load_spec(cfg: dict) -> ExperimentSpec:
    """Parse and validate the config schema; raises ValueError on any problem."""
    try:
        cells = tuple(
            EnvironmentConfig(
                d=int(c["d"]),
                k=int(c["k"]),
                horizon=int(c["t"]),
                link=str(c["link"]),
                delay=DelayModel(str(c["delay"]["kind"]), float(c["delay"].get("mean", 0.0))),
                theta_seed=int(c["theta_seed"]),
            )
            for c in cfg["cells"]
        )
        policies = tuple(
            PolicyConfig(
                kind=str(p["kind"]),
                alpha=float(p["alpha"]),
                delta=float(p["delta"]),
                m1=float(p["m1"]),
                r=float(p["r"]),
            )
            for p in cfg["policies"]
        )
        return ExperimentSpec(
            cells=cells,
            policies=policies,
            n_runs=int(cfg["n_runs"]),
            base_seed=int(cfg["base_seed"]),
            record_every=int(cfg["record_every"]),
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"invalid config: {exc!r}") from exc


def spec_to_dict(spec: ExperimentSpec) -> dict:
    """Inverse of load_spec; emits the documented JSON schema."""
    return {
        "cells": [
            {
                "d": c.d,
                "k": c.k,
                "t": c.horizon,
                "link": c.link,
                "delay": {"kind": c.delay.kind, "mean": c.delay.mean},
                "theta_seed": c.theta_seed,
            }
            for c in spec.cells
        ],
        "policies": [
            {"kind": p.kind, "alpha": p.alpha, "delta": p.delta, "m1": p.m1, "r": p.r}
            for p in spec.policies
        ],
        "n_runs": spec.n_runs,
        "base_seed": spec.base_seed,
        "record_every": spec.record_every,
    }


def preset_spec(name: str) -> dict:
    """Built-in configs: 'desk' runs in minutes, 'paper' is the full-scale sweep."""
    delta = 0.05 / 3
    if name == "desk":
        cells = [
            {
                "d": 5,
                "k": 20,
                "t": 20_000,
                "link": "identity",
                "delay": {"kind": "exponential", "mean": mean},
                "theta_seed": 101 + i,
            }
            for i, mean in enumerate((25.0, 100.0))
        ]
        policies = [
            {"kind": kind, "alpha": 1.0, "delta": delta, "m1": 1.0, "r": 1.0}
            for kind in ("delayed_ofu_glm", "delay_inflated_ucb", "random")
        ]
        return {
            "cells": cells,
            "policies": policies,
            "n_runs": 10,
            "base_seed": 20_240_501,
            "record_every": 500,
        }
    if name == "paper":
        cells = []
        idx = 0
        for d in (5, 10, 20):
            for link in ("identity", "logistic"):
                for kind in ("exponential", "uniform", "pareto"):
                    for mean in (100.0, 250.0, 500.0, 1000.0):
                        cells.append(
                            {
                                "d": d,
                                "k": 100,
                                "t": 100_000,
                                "link": link,
                                "delay": {"kind": kind, "mean": mean},
                                "theta_seed": 1000 + idx,
                            }
                        )
                        idx += 1
        policies = [
            {"kind": kind, "alpha": 1.0, "delta": delta, "m1": 1.0, "r": 1.0}
            for kind in ("delayed_ofu_glm", "delay_inflated_ucb", "random")
        ]
        return {
            "cells": cells,
            "policies": policies,
            "n_runs": 30,
            "base_seed": 20_240_501,
            "record_every": 1000,
        }
    raise ValueError(f"unknown preset {name!r}")


def cell_ids(spec: ExperimentSpec) -> list[str]:
    return [
        f"c{i:02d}_d{c.d}_{c.link}_{c.delay.kind}{c.delay.mean:g}"
        for i, c in enumerate(spec.cells)
    ]


def policy_names(spec: ExperimentSpec) -> list[str]:
    kinds = [p.kind for p in spec.policies]
    return [k if kinds.count(k) == 1 else f"{k}#{i}" for i, k in enumerate(kinds)]


def _recorded_rounds(horizon: int, record_every: int) -> np.ndarray:
    rounds = np.arange(record_every, horizon + 1, record_every, dtype=np.int64)
    return rounds if rounds.size else np.array([horizon], dtype=np.int64)


def _run_task(task):
    """One (cell, policy, run) episode, downsampled to the recorded rounds."""
    cell_idx, pol_idx, run_idx, env_cfg, pol_cfg, base_seed, rec_rounds = task
    seed = (base_seed, cell_idx, run_idx)
    try:
        trace = run_episode(env_cfg, pol_cfg, seed)
    except NonConvergenceError:
        return cell_idx, pol_idx, run_idx, None
    sel = np.asarray(rec_rounds) - 1
    anytime_cov = np.minimum.accumulate(trace.covered)
    return (
        cell_idx,
        pol_idx,
        run_idx,
        (trace.cum_regret[sel], trace.pending[sel].astype(float), anytime_cov[sel]),
    )


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> AggregateResult:
    """Run the replication matrix and aggregate over runs.

    theta* is resolved once per cell, so it is shared by every run and policy
    of that cell. Results are merged in task order, which makes the output
    independent of the worker count.
    """
    names = policy_names(spec)
    ids = cell_ids(spec)
    envs = [replace(c, theta=resolve_theta(c)) for c in spec.cells]
    rec = [_recorded_rounds(c.horizon, spec.record_every) for c in spec.cells]
    tasks = [
        (ci, pi, ri, envs[ci], spec.policies[pi], spec.base_seed, rec[ci])
        for ci in range(len(spec.cells))
        for pi in range(len(spec.policies))
        for ri in range(spec.n_runs)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]

    grouped: dict[tuple[int, int], list] = {}
    failed: dict[str, int] = {}
    for cell_idx, pol_idx, _, payload in results:
        if payload is None:
            key = f"{ids[cell_idx]}/{names[pol_idx]}"
            failed[key] = failed.get(key, 0) + 1
        else:
            grouped.setdefault((cell_idx, pol_idx), []).append(payload)

    rows: list[tuple[str, str, int, float, float, float, float]] = []
    for ci in range(len(spec.cells)):
        for pi in range(len(spec.policies)):
            runs = grouped.get((ci, pi), [])
            if not runs:
                raise RuntimeError(f"all runs failed for {ids[ci]}/{names[pi]}")
            cum = np.stack([r[0] for r in runs])
            pend = np.stack([r[1] for r in runs])
            cov = np.stack([r[2] for r in runs])
            n = cum.shape[0]
            mean = cum.mean(axis=0)
            se = cum.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros(cum.shape[1])
            for j, rnd in enumerate(rec[ci]):
                rows.append(
                    (
                        ids[ci],
                        names[pi],
                        int(rnd),
                        float(mean[j]),
                        float(se[j]),
                        float(pend[:, j].mean()),
                        float(cov[:, j].mean()),
                    )
                )
    return AggregateResult(rows, failed)


def write_csv(result: AggregateResult, path) -> None:
    """Serialize rows with repr-exact floats so equal results are equal bytes."""
    lines = [",".join(CSV_COLUMNS)]
    for cell_id, policy, rnd, mean, se, pend, cov in result.rows:
        lines.append(
            f"{cell_id},{policy},{rnd},{mean!r},{se!r},{pend!r},{cov!r}"
        )
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def write_meta(spec: ExperimentSpec, path, result: AggregateResult | None = None) -> None:
    """Config echo plus derived facts (ids, analytic delay means, theta*, failures)."""
    meta = {
        "version": __version__,
        "spec": spec_to_dict(spec),
        "cells": [
            {
                "cell_id": cid,
                "analytic_delay_mean": cell.delay.analytic_mean(),
                "theta_star": [float(v) for v in resolve_theta(cell)],
            }
            for cid, cell in zip(cell_ids(spec), spec.cells)
        ],
        "policies": policy_names(spec),
        "failed_runs": dict(sorted(result.failed_runs.items())) if result else {},
    }
    try:
        Path(path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write metadata to {path}: {exc}") from exc


def _cmd_run(args) -> int:
    try:
        cfg = json.loads(Path(args.config).read_text())
        spec = load_spec(cfg)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    seed_override = os.environ.get("BANDIT_SEED")
    if seed_override is not None:
        spec = replace(spec, base_seed=int(seed_override))
    workers = int(os.environ.get("BANDIT_WORKERS", "1"))
    try:
        result = run_experiment(spec, workers)
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(result, out / "results.csv")
    write_meta(spec, out / "meta.json", result)
    print(f"wrote {out / 'results.csv'} ({len(result.rows)} rows)")
    for key, count in sorted(result.failed_runs.items()):
        print(f"warning: {count} failed run(s) excluded for {key}", file=sys.stderr)
    return 0


def _cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else int(os.environ.get("BANDIT_SEED", "0"))
    try:
        reports = run_all(instances=args.instances, seed=seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    ok = True
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        ok = ok and rep.passed
        print(
            f"{rep.check_id:<28s} instances={rep.instances:>7d} "
            f"max_violation={rep.max_violation: .3e} {status}"
        )
    return 0 if ok else 1


def _cmd_preset(args) -> int:
    print(json.dumps(preset_spec(args.name), indent=2))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="glmbandit",
        description="Generalized linear bandit simulator with stochastically delayed feedback",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config and write CSV + metadata")
    p_run.add_argument("--config", required=True, help="path to the JSON config")
    p_run.add_argument("--out", required=True, help="output directory")

    p_verify = sub.add_parser("verify", help="run the numerical lemma checks")
    p_verify.add_argument("--instances", type=int, default=1000)
    p_verify.add_argument("--seed", type=int, default=None)

    p_preset = sub.add_parser("preset", help="print a built-in config to stdout")
    p_preset.add_argument("--name", required=True, choices=("desk", "paper"))

    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "verify":
        return _cmd_verify(args)
    return _cmd_preset(args)


if __name__ == "__main__":
    raise SystemExit(main())

"""Command-line pipelines: dataset generation, training, sampling, evaluation.

Every command takes an explicit integer seed (there is no wall-clock
fallback), resolves its options from an optional TOML config file plus flag
overrides, and writes a JSON manifest next to its outputs recording the
resolved configuration and the SHA-256 of every artifact. Identical
configuration and seed produce byte-identical artifacts.

RNG streams are derived per (seed, role, index); see :mod:`graphdiff.seeding`.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - version-dependent import
    import tomli as tomllib

from . import __version__
from .datasets import DEFAULT_COUNTS, DatasetSpec, gen_dataset
from .denoiser import EmpiricalDenoiser
from .diffusion import noise_graph
from .graphs import read_graphs, to_dot, write_graphs, format_graphs
from .metrics import EvalConfig, evaluate
from .ppgn import MiniPPGNDenoiser
from .sampling import SampleConfig, chain_for_index, sample_batch
from .schedule import make_schedule
from .seeding import derive_rng
from .training import (
    DivergenceError,
    TrainConfig,
    load_state,
    save_state,
    train,
    write_trace,
)

__all__ = ["main"]


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(path: Path, command: str, config: dict, outputs: list[Path]) -> None:
    manifest = {
        "command": command,
        "config": config,
        "outputs": {str(p): _sha256(p) for p in outputs},
        "version": __version__,
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "rb") as fh:
        return tomllib.load(fh)


class _Resolver:
    """Merge precedence: command-line flag, then config file, then default."""

    def __init__(self, args: argparse.Namespace, section: str):
        config = _load_config_file(args.config)
        self.parser_error = args._parser.error
        self.section = {**config, **config.get(section, {})}
        self.args = args

    def get(self, key: str, default=None, required: bool = False):
        value = getattr(self.args, key.replace("-", "_"), None)
        if value is None:
            value = self.section.get(key, default)
        if value is None and required:
            self.parser_error(f"missing required option --{key.replace('_', '-')}")
        return value

    def seed(self) -> int:
        value = self.get("seed", required=True)
        return int(value)


def _threads(resolver: _Resolver) -> int:
    value = resolver.get("threads")
    if value is None:
        value = os.environ.get("GRAPHDIFF_THREADS", "1")
    return max(1, int(value))


def cmd_dataset(args) -> int:
    r = _Resolver(args, "dataset")
    kind = r.get("kind", required=True)
    seed = r.seed()
    count = r.get("count", DEFAULT_COUNTS.get(kind))
    spec = DatasetSpec(
        kind=kind,
        count=int(count) if count is not None else None,
        seed=seed,
        nodes=r.get("nodes"),
        edge_prob=r.get("edge_prob"),
        path=r.get("path"),
    )
    batch = gen_dataset(spec)
    out = Path(r.get("out", required=True))
    out.parent.mkdir(parents=True, exist_ok=True)
    write_graphs(batch, out)

    counts = sorted(batch.node_counts())
    resolved = {
        "kind": kind,
        "count": len(batch),
        "seed": seed,
        "nodes": spec.nodes,
        "edge_prob": spec.edge_prob,
        "path": str(spec.path) if spec.path else None,
        "node_distribution": {str(n): counts.count(n) for n in sorted(set(counts))},
    }
    _write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "dataset", resolved, [out])
    print(f"wrote {len(batch)} graphs to {out}")
    return 0


def cmd_train(args) -> int:
    r = _Resolver(args, "train")
    data_path = r.get("data", required=True)
    out_dir = Path(r.get("out_dir", required=True))
    config = TrainConfig(
        epochs=int(r.get("epochs", required=True)),
        seed=r.seed(),
        loss=r.get("loss", "simple"),
        steps=int(r.get("steps", 32)),
        schedule=r.get("schedule", "linear"),
        batch_size=int(r.get("batch_size", 64)),
        learning_rate=float(r.get("learning_rate", 1e-3)),
        beta1=float(r.get("beta1", 0.9)),
        beta2=float(r.get("beta2", 0.999)),
        lr_decay=float(r.get("lr_decay", 0.999)),
        blocks=int(r.get("blocks", 6)),
        hidden=int(r.get("hidden", 16)),
        checkpoint_every=int(r.get("checkpoint_every", 50)),
    )
    dataset = read_graphs(data_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    resume = r.get("resume")
    try:
        result = train(config, dataset, out_dir=out_dir, resume_from=resume)
    except DivergenceError as err:
        save_state(out_dir / "checkpoint.aborted", err.last_state, config)
        write_trace(out_dir / "trace.csv", err.trace)
        print(f"error: {err} (last good state in checkpoint.aborted)", file=sys.stderr)
        return 3

    write_trace(out_dir / "trace.csv", result.trace)
    outputs = [out_dir / "checkpoint.last", out_dir / "checkpoint.best", out_dir / "trace.csv"]
    resolved = {**asdict(config), "data": str(data_path), "out_dir": str(out_dir)}
    _write_manifest(out_dir / "manifest.json", "train", resolved, outputs)
    final = result.trace[-1].loss if result.trace else math.nan
    print(f"trained {config.epochs} epochs; final batch loss {final:.6f}, "
          f"best epoch loss {result.state.best_loss:.6f}")
    return 0


def _build_denoiser(r: _Resolver):
    checkpoint_path = r.get("checkpoint")
    oracle_path = r.get("oracle")
    if (checkpoint_path is None) == (oracle_path is None):
        r.parser_error("set exactly one of --checkpoint / --oracle")
    if checkpoint_path is not None:
        state, config = load_state(checkpoint_path)
        schedule = make_schedule(config.schedule, config.steps)
        return MiniPPGNDenoiser(state.params, schedule), None
    dataset = read_graphs(oracle_path)
    steps = int(r.get("steps", 32))
    schedule = make_schedule(r.get("schedule", "linear"), steps)
    return EmpiricalDenoiser(dataset, schedule), dataset


def cmd_sample(args) -> int:
    r = _Resolver(args, "sample")
    denoiser, oracle_dataset = _build_denoiser(r)
    seed = r.seed()
    nodes = r.get("nodes")
    nodes_from = r.get("nodes_from")
    node_counts = None
    if nodes_from is not None:
        node_counts = read_graphs(nodes_from).node_counts()
    elif nodes is None and oracle_dataset is not None:
        node_counts = oracle_dataset.node_counts()
    if nodes is None and node_counts is None:
        r.parser_error("set --nodes or --nodes-from (checkpoints carry no node counts)")

    config = SampleConfig(
        count=int(r.get("count", required=True)),
        seed=seed,
        nodes=int(nodes) if nodes is not None else None,
        node_counts=node_counts,
        steps=denoiser.schedule.steps,
        schedule=denoiser.schedule.kind,
    )
    algorithm = r.get("algorithm", "simple")
    batch = sample_batch(denoiser, config, algorithm, threads=_threads(r))

    out = Path(r.get("out", required=True))
    out.parent.mkdir(parents=True, exist_ok=True)
    write_graphs(batch, out)
    outputs = [out]

    if r.get("dump_trajectory"):
        _, trajectory = chain_for_index(denoiser, config, algorithm, 0, keep_trajectory=True)
        traj_path = out.with_suffix(out.suffix + ".trajectory.gl")
        traj_path.write_text(
            "".join(f"# t={t}\n{format_graphs(g)}\n" for t, g in trajectory).rstrip("\n") + "\n"
        )
        outputs.append(traj_path)

    resolved = {
        "algorithm": algorithm,
        "count": config.count,
        "seed": seed,
        "steps": denoiser.schedule.steps,
        "schedule": denoiser.schedule.kind,
        "nodes": config.nodes,
        "node_counts": sorted(set(node_counts)) if node_counts else None,
        "source": {"checkpoint": r.get("checkpoint"), "oracle": r.get("oracle")},
    }
    _write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "sample", resolved, outputs)
    print(f"wrote {len(batch)} samples to {out}")
    return 0


def cmd_eval(args) -> int:
    r = _Resolver(args, "eval")
    generated = read_graphs(r.get("generated", required=True))
    reference = read_graphs(r.get("reference", required=True))
    config = EvalConfig(
        clustering_bins=int(r.get("clustering_bins", 100)),
        degree_sigma=float(r.get("degree_sigma", 1.0)),
        clustering_sigma=float(r.get("clustering_sigma", 1.0)),
        orbit_sigma=float(r.get("orbit_sigma", 30.0)),
    )
    report = evaluate(generated, reference, config, threads=_threads(r))
    payload = {**report.as_dict(), "kernels": config.as_dict()}

    out = Path(r.get("out", required=True))
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    resolved = {
        "generated": str(r.get("generated")),
        "reference": str(r.get("reference")),
        "kernels": config.as_dict(),
    }
    _write_manifest(out.with_suffix(out.suffix + ".manifest.json"), "eval", resolved, [out])
    print(json.dumps(report.as_dict(), sort_keys=True))
    return 0


def cmd_noise_demo(args) -> int:
    r = _Resolver(args, "noise-demo")
    seed = r.seed()
    data = r.get("data", required=True)
    graph = read_graphs(data)[int(r.get("graph_index", 0))]
    steps = int(r.get("steps", 32))
    schedule = make_schedule(r.get("schedule", "linear"), steps)
    out_dir = Path(r.get("out_dir", required=True))
    out_dir.mkdir(parents=True, exist_ok=True)

    ladder = sorted({0, steps // 4, steps // 2, 3 * steps // 4, steps})
    outputs = []
    for t in ladder:
        rng = derive_rng(seed, "noise-demo", t)
        noisy = noise_graph(graph, schedule, t, rng)
        path = out_dir / f"noise-t{t:03d}.dot"
        path.write_text(to_dot(noisy))
        outputs.append(path)
    resolved = {"data": str(data), "steps": steps, "schedule": schedule.kind,
                "seed": seed, "timesteps": ladder}
    _write_manifest(out_dir / "manifest.json", "noise-demo", resolved, outputs)
    print(f"wrote noising ladder for t in {ladder} to {out_dir}")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML config file; flags override its values")
    parser.add_argument("--seed", type=int, help="global random seed (required)")
    parser.add_argument("--threads", type=int,
                        help="worker threads (default: $GRAPHDIFF_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphdiff",
        description="Discrete denoising diffusion for simple undirected graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", help="generate or load a graph dataset")
    _add_common(p)
    p.add_argument("--kind", choices=["er", "community-small", "sbm-27", "planar-60", "file"])
    p.add_argument("--count", type=int)
    p.add_argument("--nodes", type=int, help="node count (er)")
    p.add_argument("--edge-prob", type=float, help="edge probability (er)")
    p.add_argument("--path", help="input edge-list file (kind=file)")
    p.add_argument("--out", help="output edge-list file")
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", help="train the MiniPPGN denoiser")
    _add_common(p)
    p.add_argument("--data", help="training edge-list file")
    p.add_argument("--out-dir", help="checkpoint/trace directory")
    p.add_argument("--loss", choices=["vb", "simple"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--schedule", choices=["linear", "cosine"])
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--lr-decay", type=float)
    p.add_argument("--blocks", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--resume", help="checkpoint to continue from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="generate graphs by reversing the chain")
    _add_common(p)
    p.add_argument("--checkpoint", help="trained network checkpoint")
    p.add_argument("--oracle", help="dataset file for the exact empirical denoiser")
    p.add_argument("--algorithm", choices=["vb", "simple"])
    p.add_argument("--count", type=int)
    p.add_argument("--nodes", type=int, help="fixed node count")
    p.add_argument("--nodes-from", help="draw node counts from this dataset file")
    p.add_argument("--steps", type=int, help="chain length (oracle mode)")
    p.add_argument("--schedule", choices=["linear", "cosine"], help="(oracle mode)")
    p.add_argument("--out", help="output edge-list file")
    p.add_argument("--dump-trajectory", action="store_true", default=None,
                   help="also write the first sample's full reverse trajectory")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="MMD report: generated vs reference")
    _add_common(p)
    p.add_argument("--generated")
    p.add_argument("--reference")
    p.add_argument("--clustering-bins", type=int)
    p.add_argument("--degree-sigma", type=float)
    p.add_argument("--clustering-sigma", type=float)
    p.add_argument("--orbit-sigma", type=float)
    p.add_argument("--out", help="output JSON report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("noise-demo", help="forward-noising ladder rendered to DOT")
    _add_common(p)
    p.add_argument("--data", help="input edge-list file")
    p.add_argument("--graph-index", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--schedule", choices=["linear", "cosine"])
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_noise_demo)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args._parser = parser
    try:
        return args.func(args)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""``transg`` command line: synth, train, eval, embed, gradcheck, ablate.

Run configuration precedence: built-in defaults < ``--config`` JSON file <
command-line flags.
"""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from ..core.config import MODES
from ..core.errors import (
    ConfigurationError,
    ParseError,
    SchemaError,
    TransgError,
)
from ..core.formatters import CliError, RunConfigFile
from ..core.graphpe import build_graph
from ..core.numerics import SeededRng
from ..core.skeledata import SPLITS, generate_splits, get_topology, load_dataset, write_dataset
from ..core.utils import make_json_serializable, setup_logging

logger = logging.getLogger(__name__)

# flag name -> TrainConfig field
OVERRIDE_FLAGS = {
    "mode": str,
    "seed": int,
    "epochs": int,
    "batch_size": int,
    "lr": float,
    "eval_every": int,
    "alpha": float,
    "beta": float,
    "lam": float,
    "dbscan_eps": float,
    "dbscan_min_pts": int,
}

USAGE_ERRORS = (ConfigurationError, SchemaError, ParseError)


def load_run_config(path: Optional[str]) -> RunConfigFile:
    if path is None:
        return RunConfigFile()
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigurationError(f"config file {path} not found") from None
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path=str(path), line=e.lineno) from None
    try:
        return RunConfigFile.model_validate(raw)
    except ValidationError as e:
        problems = [
            f"{'.'.join(str(part) for part in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        ]
        raise ConfigurationError.from_violations(problems) from None


def resolve_config(args: argparse.Namespace) -> tuple:
    """(TrainConfig, manifest path, output dir) after applying flag overrides."""
    document = load_run_config(getattr(args, "config", None))
    overrides = {name: getattr(args, name, None) for name in OVERRIDE_FLAGS}
    config = document.to_train_config().replace(**overrides)
    manifest = getattr(args, "manifest", None) or document.manifest
    output_dir = getattr(args, "out", None) or document.output_dir
    return config, manifest, output_dir


def _require_manifest(manifest: Optional[str]) -> str:
    if not manifest:
        raise ConfigurationError("no dataset manifest given; pass --manifest or set 'manifest' in the config file")
    return manifest


def cmd_synth(args: argparse.Namespace) -> int:
    topology = get_topology(args.graph)
    spec = build_graph(topology.num_joints, topology.edges)
    rng = SeededRng(args.seed)
    counts = {"train": args.seqs, "probe": args.probe, "gallery": args.gallery}
    splits = generate_splits(args.ids, counts, args.frames, spec, rng, noise=args.noise, root_joint=topology.root_joint)
    path = write_dataset(
        args.out,
        name=args.name or f"synthetic-{topology.name}",
        edges=topology.edges,
        seq_len=args.frames,
        splits=splits,
        root_joint=topology.root_joint,
        force=args.force,
    )
    print(path)
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    from ..core.trainer import default_output_dir, train

    config, manifest, output_dir = resolve_config(args)
    dataset = load_dataset(_require_manifest(manifest))
    output_dir = Path(output_dir) if output_dir else default_output_dir()
    result = train(config, dataset, output_dir=output_dir, resume=args.resume)
    summary = {"output_dir": str(output_dir), "epochs": config.epochs, "best_mAP": result.best_map}
    if result.final_report:
        summary["final"] = {k: 100.0 * v for k, v in result.final_report.items()}
    print(json.dumps(make_json_serializable(summary), sort_keys=True))
    return 0


def _checkpoint_dataset(args: argparse.Namespace):
    from ..core.trainer import load_checkpoint

    checkpoint = load_checkpoint(args.checkpoint)
    manifest = args.manifest or checkpoint.manifest
    dataset = load_dataset(_require_manifest(manifest))
    if dataset.num_joints != checkpoint.num_joints:
        raise SchemaError(
            f"dataset has J={dataset.num_joints}, checkpoint was trained with J={checkpoint.num_joints}",
            {"dataset": dataset.num_joints, "checkpoint": checkpoint.num_joints},
        )
    return checkpoint, dataset


def cmd_eval(args: argparse.Namespace) -> int:
    from ..core.evalrank import embed_split, match

    checkpoint, dataset = _checkpoint_dataset(args)
    batch_size = checkpoint.config.eval_batch_size
    report = match(
        embed_split(checkpoint, dataset.probe, batch_size),
        embed_split(checkpoint, dataset.gallery, batch_size),
        [s.identity for s in dataset.probe],
        [s.identity for s in dataset.gallery],
        cosine=args.cosine,
    )
    out = Path(args.out or Path(args.checkpoint) / "eval")
    out.mkdir(parents=True, exist_ok=True)
    report.write_csv(out / "report.csv")
    report.write_report(out / "report.json", config=checkpoint.config.to_dict())
    if args.rankings:
        report.write_rankings(out / "rankings.jsonl")
    print(json.dumps({k: round(v, 4) for k, v in report.percent().items()}, sort_keys=True))
    return 0


def cmd_embed(args: argparse.Namespace) -> int:
    from ..core.evalrank import embed_split

    checkpoint, dataset = _checkpoint_dataset(args)
    splits = SPLITS if args.split == "all" else (args.split,)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as f:
        writer = None
        for split in splits:
            sequences = dataset.splits.get(split, [])
            reps = embed_split(checkpoint, sequences, checkpoint.config.eval_batch_size)
            if writer is None:
                writer = csv.writer(f)
                writer.writerow(["split", "index", "identity", "source_id"] + [f"v{i}" for i in range(reps.shape[1])])
            for index, (seq, row) in enumerate(zip(sequences, reps)):
                writer.writerow([split, index, seq.identity, seq.source_id] + [repr(float(v)) for v in row])
    snapshot = out.with_name(f"{out.stem}.config.json")
    snapshot.write_text(json.dumps(checkpoint.config.to_dict(), indent=2, sort_keys=True) + "\n")
    print(out)
    return 0


def cmd_gradcheck(args: argparse.Namespace) -> int:
    from ..core.trainer import check_gradients, tiny_config

    if args.config:
        config, _, _ = resolve_config(args)
    else:
        overrides = {name: getattr(args, name, None) for name in OVERRIDE_FLAGS}
        config = tiny_config().replace(**overrides)
    rows = check_gradients(config, num_joints=args.joints, tolerance=args.tolerance)
    width = max(len(row.group) for row in rows) if rows else 5
    print(f"{'group':<{width}}  {'size':>6}  {'rel_error':>10}  result")
    for row in rows:
        print(f"{row.group:<{width}}  {row.size:>6}  {row.rel_error:>10.3e}  {'pass' if row.passed else 'FAIL'}")
    return 0 if all(row.passed for row in rows) else 1


def cmd_ablate(args: argparse.Namespace) -> int:
    from ..core.trainer import default_output_dir, train_ablation_suite, write_ablation_csv

    config, manifest, output_dir = resolve_config(args)
    dataset = load_dataset(_require_manifest(manifest))
    output_dir = Path(output_dir) if output_dir else default_output_dir()
    rows = train_ablation_suite(config, dataset, output_dir=output_dir)
    path = write_ablation_csv(rows, output_dir / "ablation.csv")
    (output_dir / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
    print(path)
    return 0


def _add_overrides(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("config overrides")
    group.add_argument("--mode", choices=MODES)
    for name, kind in OVERRIDE_FLAGS.items():
        if name == "mode":
            continue
        group.add_argument(f"--{name.replace('_', '-')}", dest=name, type=kind)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="transg", description="Skeleton graph transformer person re-identification")
    parser.add_argument("--log-level", default="INFO", help="DEBUG, INFO, WARNING or ERROR")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="generate a synthetic skeleton dataset")
    synth.add_argument("--ids", type=int, default=10, help="number of identities")
    synth.add_argument("--seqs", type=int, default=20, help="training sequences per identity")
    synth.add_argument("--probe", type=int, default=0, help="probe sequences per identity")
    synth.add_argument("--gallery", type=int, default=0, help="gallery sequences per identity")
    synth.add_argument("--frames", type=int, default=6, help="frames per recording")
    synth.add_argument("--graph", default="kinect20", help="built-in skeleton layout")
    synth.add_argument("--noise", type=float, default=0.01, help="coordinate noise std (m)")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--name")
    synth.add_argument("--out", required=True)
    synth.add_argument("--force", action="store_true", help="overwrite a non-empty output directory")
    synth.set_defaults(handler=cmd_synth)

    train = commands.add_parser("train", help="train one mode")
    train.add_argument("--config", help="JSON run config")
    train.add_argument("--manifest", help="dataset manifest.json")
    train.add_argument("--out", help="run directory")
    train.add_argument("--resume", help="checkpoint directory to continue from")
    _add_overrides(train)
    train.set_defaults(handler=cmd_train)

    evaluate = commands.add_parser("eval", help="match probe against gallery with a checkpoint")
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--manifest", help="defaults to the manifest the checkpoint was trained on")
    evaluate.add_argument("--out", help="report directory (default <checkpoint>/eval)")
    evaluate.add_argument("--cosine", action="store_true", help="L2-normalize reps before matching")
    evaluate.add_argument("--rankings", action="store_true", help="also write per-probe rankings as JSON Lines")
    evaluate.set_defaults(handler=cmd_eval)

    embed = commands.add_parser("embed", help="export sequence representations as CSV")
    embed.add_argument("--checkpoint", required=True)
    embed.add_argument("--manifest")
    embed.add_argument("--split", choices=list(SPLITS) + ["all"], default="all")
    embed.add_argument("--out", required=True)
    embed.set_defaults(handler=cmd_embed)

    gradcheck = commands.add_parser("gradcheck", help="finite-difference check of the training loss")
    gradcheck.add_argument("--config", help="JSON run config (default: the tiny config)")
    gradcheck.add_argument("--joints", type=int, default=4, help="joints of the path graph used")
    gradcheck.add_argument("--tolerance", type=float, default=1e-4)
    _add_overrides(gradcheck)
    gradcheck.set_defaults(handler=cmd_gradcheck)

    ablate = commands.add_parser("ablate", help="train and score every ablation mode")
    ablate.add_argument("--config", help="JSON run config")
    ablate.add_argument("--manifest")
    ablate.add_argument("--out", help="suite directory")
    _add_overrides(ablate)
    ablate.set_defaults(handler=cmd_ablate)
    return parser


def _report(error: TransgError) -> int:
    payload = CliError(**make_json_serializable(error.to_dict()))
    print(payload.model_dump_json(), file=sys.stderr)
    return 2 if isinstance(error, USAGE_ERRORS) else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except TransgError as e:
        logger.error(e.message)
        return _report(e)
    except Exception as e:
        logger.exception(f"Unexpected failure in {args.command}")
        payload = CliError(error="internal_error", message=str(e))
        print(payload.model_dump_json(), file=sys.stderr)
        return 1


__all__ = ["main", "build_parser", "load_run_config", "resolve_config"]

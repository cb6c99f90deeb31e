"""Command-line pipeline: generate, poison, train, predict, evaluate.

One subcommand per stage so external training harnesses can splice in after
``poison``.  Every command writes a ``run_manifest.json`` into its output
directory — command, resolved arguments, input digests, toolkit version —
even when it fails (the manifest then carries an error record).  Nothing
reads environment variables and no timestamps are written, so reruns with
identical inputs and seeds produce byte-identical output trees.

Exit codes: 0 success, 1 input/config error, 2 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable

from . import __version__, attack, io, metrics, synthdata, toymodel
from .core import AlignmentError, ConfigError, SegPoisonError

RUN_FORMAT = "segpoison-run/1"


def _args_doc(args: argparse.Namespace) -> dict:
    doc = {}
    for key, value in sorted(vars(args).items()):
        if key == "func":
            continue
        doc[key] = str(value) if isinstance(value, Path) else value
    return doc


def _input_digest(path: Path) -> dict:
    digest = io.tree_digest(path) if path.is_dir() else io.file_digest(path)
    return {"path": str(path), "sha256": digest}


def _run(args: argparse.Namespace, command: str, body: Callable[[dict], None]) -> int:
    """Execute one subcommand body, always emitting the run manifest."""
    out_dir = Path(args.out)
    manifest: dict = {
        "format": RUN_FORMAT,
        "command": command,
        "args": _args_doc(args),
        "toolkit_version": __version__,
        "inputs": {},
        "outputs": {},
        "error": None,
    }
    code = 0
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        body(manifest)
    except (SegPoisonError, ValueError, KeyError) as err:
        manifest["error"] = {"type": type(err).__name__, "message": str(err)}
        print(f"error: {err}", file=sys.stderr)
        code = 1
    except OSError as err:
        manifest["error"] = {"type": type(err).__name__, "message": str(err)}
        print(f"error: {err}", file=sys.stderr)
        code = 2
    try:
        io.write_json(out_dir / "run_manifest.json", manifest)
    except OSError:
        pass  # best effort when the output directory itself is unwritable
    return code


def _cmd_gen_synth(args: argparse.Namespace) -> int:
    def body(manifest: dict) -> None:
        spec = synthdata.SceneSpec(
            num_classes=args.num_classes,
            width=args.width,
            height=args.height,
            shapes_per_image=(args.shapes_min, args.shapes_max),
            noise_std=args.noise_std,
            seed=args.seed,
        )
        out = Path(args.out)
        train = synthdata.generate_dataset(spec, args.n_train, "train", 0)
        test = synthdata.generate_dataset(spec, args.n_test, "test", args.n_train)
        io.save_dataset(train, out / "train")
        io.save_dataset(test, out / "test")
        synthdata.write_scene_spec(spec, out)
        manifest["outputs"] = {
            "train": str(out / "train"),
            "test": str(out / "test"),
            "scene_spec": str(out / "scene_spec.json"),
        }
        manifest["resolved_config"] = spec.to_doc()
        print(f"wrote {args.n_train} train / {args.n_test} test scenes to {out}")

    return _run(args, "gen-synth", body)


def _cmd_poison(args: argparse.Namespace) -> int:
    def body(manifest: dict) -> None:
        manifest["inputs"] = {
            "dataset": _input_digest(Path(args.dataset)),
            "config": _input_digest(Path(args.config)),
        }
        dataset = io.load_dataset(args.dataset)
        doc = io.read_json(args.config)
        if args.seed is not None:
            doc["seed"] = args.seed
        config = attack.resolve_poison_config(
            doc, dataset, base_dir=Path(args.config).parent
        )
        poisoned = attack.poison_dataset(dataset, config)
        out = Path(args.out)
        io.save_dataset(poisoned.dataset, out)
        attack.write_poison_record(poisoned, out)
        manifest["outputs"] = {"dataset": str(out), "record": str(out / "poison_record.json")}
        manifest["resolved_config"] = attack.poison_config_doc(config)
        print(
            f"poisoned {len(poisoned.modified_ids)}/{len(dataset)} samples "
            f"(effective rate {poisoned.effective_rate:.3f}) into {out}"
        )

    return _run(args, "poison", body)


def _cmd_attack_test(args: argparse.Namespace) -> int:
    def body(manifest: dict) -> None:
        manifest["inputs"] = {
            "dataset": _input_digest(Path(args.dataset)),
            "config": _input_digest(Path(args.config)),
        }
        dataset = io.load_dataset(args.dataset)
        config = attack.load_poison_config(args.config, dataset)
        attacked = attack.make_attacked_test_set(
            dataset, config, restrict_to_source=not args.all_images
        )
        out = Path(args.out)
        io.save_dataset(attacked.dataset, out)
        io.save_masks(
            list(zip(attacked.dataset.sample_ids, attacked.targets)),
            dataset.num_classes,
            dataset.split,
            out / "targets",
        )
        manifest["outputs"] = {"dataset": str(out), "targets": str(out / "targets")}
        manifest["resolved_config"] = attack.poison_config_doc(config)
        print(
            f"attacked test set: {len(attacked.dataset)}/{len(dataset)} samples into {out}"
        )

    return _run(args, "attack-test", body)


def _cmd_train(args: argparse.Namespace) -> int:
    def body(manifest: dict) -> None:
        manifest["inputs"] = {"dataset": _input_digest(Path(args.dataset))}
        dataset = io.load_dataset(args.dataset)
        config = toymodel.TrainConfig(
            epochs=args.epochs,
            learning_rate=args.learning_rate,
            batch_size=args.batch_size,
            pixel_sample_rate=args.pixel_sample_rate,
            seed=args.seed,
        )
        model, losses = toymodel.train(dataset, config, patch_radius=args.patch_radius)
        out = Path(args.out)
        toymodel.save_model(model, out / "model.json")
        with open(out / "loss_history.csv", "w", encoding="utf-8") as fh:
            fh.write("step,loss\n")
            for step, loss in enumerate(losses):
                fh.write(f"{step},{loss!r}\n")
        manifest["outputs"] = {
            "model": str(out / "model.json"),
            "loss_history": str(out / "loss_history.csv"),
        }
        manifest["resolved_config"] = {
            "epochs": config.epochs,
            "learning_rate": config.learning_rate,
            "batch_size": config.batch_size,
            "pixel_sample_rate": config.pixel_sample_rate,
            "seed": config.seed,
            "patch_radius": args.patch_radius,
        }
        final = losses[-1] if losses else float("nan")
        print(f"trained on {len(dataset)} samples, final step loss {final:.4f}")

    return _run(args, "train", body)


def _cmd_predict(args: argparse.Namespace) -> int:
    def body(manifest: dict) -> None:
        manifest["inputs"] = {
            "model": _input_digest(Path(args.model)),
            "dataset": _input_digest(Path(args.dataset)),
        }
        model = toymodel.load_model(args.model)
        dataset = io.load_dataset(args.dataset)
        if model.num_classes != dataset.num_classes:
            raise ConfigError(
                f"model has {model.num_classes} classes, dataset has "
                f"{dataset.num_classes}"
            )
        preds = [
            (s.sample_id, toymodel.predict(model, s.image)) for s in dataset
        ]
        io.save_masks(preds, dataset.num_classes, dataset.split, args.out)
        manifest["outputs"] = {"predictions": str(args.out)}
        print(f"wrote {len(preds)} prediction masks to {args.out}")

    return _run(args, "predict", body)


def _aligned_masks(preds_dir: Path, expected_ids: tuple[str, ...], num_classes: int):
    pred_k, masks = io.load_masks(preds_dir)
    if pred_k != num_classes:
        raise ConfigError(
            f"{preds_dir}: predictions are over {pred_k} classes, expected {num_classes}"
        )
    by_id = dict(masks)
    missing = [i for i in expected_ids if i not in by_id]
    extra = [i for i, _ in masks if i not in set(expected_ids)]
    if missing or extra:
        raise AlignmentError(
            f"{preds_dir}: predictions misaligned with the evaluation set "
            f"(missing {missing[:5]}, unexpected {extra[:5]})"
        )
    return [by_id[i] for i in expected_ids]


def _cmd_evaluate(args: argparse.Namespace) -> int:
    def body(manifest: dict) -> None:
        manifest["inputs"] = {
            "benign_preds": _input_digest(Path(args.benign_preds)),
            "attacked_preds": _input_digest(Path(args.attacked_preds)),
            "dataset": _input_digest(Path(args.dataset)),
            "config": _input_digest(Path(args.config)),
        }
        dataset = io.load_dataset(args.dataset)
        config = attack.load_poison_config(args.config, dataset)
        attacked = attack.make_attacked_test_set(
            dataset, config, restrict_to_source=not args.all_images
        )
        benign_preds = _aligned_masks(
            Path(args.benign_preds), dataset.sample_ids, dataset.num_classes
        )
        attacked_preds = _aligned_masks(
            Path(args.attacked_preds),
            attacked.dataset.sample_ids,
            dataset.num_classes,
        )
        report = metrics.evaluate(
            dataset.num_classes,
            benign_preds,
            [s.mask for s in dataset],
            attacked_preds,
            [s.mask for s in attacked.dataset],
            list(attacked.targets),
        )
        out = Path(args.out)
        metrics.write_report_json(report, out / "report.json")
        metrics.write_report_csv(
            report, out / "report.csv", args.model_tag, args.attack_tag
        )
        manifest["outputs"] = {
            "report_json": str(out / "report.json"),
            "report_csv": str(out / "report.csv"),
        }
        manifest["resolved_config"] = attack.poison_config_doc(config)
        print(metrics.format_report_table(report, args.model_tag, args.attack_tag))

    return _run(args, "evaluate", body)


class _Parser(argparse.ArgumentParser):
    """Argument parser honoring the exit-code contract (usage errors are 1)."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="segpoison",
        description="Backdoor data-poisoning toolkit for semantic segmentation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-synth", help="generate synthetic train/test datasets")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--num-classes", type=int, default=8)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--shapes-min", type=int, default=2)
    p.add_argument("--shapes-max", type=int, default=5)
    p.add_argument("--noise-std", type=float, default=8.0)
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-test", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_gen_synth)

    p = sub.add_parser("poison", help="poison a training dataset per a config file")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=_cmd_poison)

    p = sub.add_parser(
        "attack-test", help="stamp the trigger over a test set for evaluation"
    )
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument(
        "--all-images",
        action="store_true",
        help="keep samples without source-class pixels instead of dropping them",
    )
    p.set_defaults(func=_cmd_attack_test)

    p = sub.add_parser("train", help="train the patch classifier")
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--epochs", type=int, default=12)
    p.add_argument("--learning-rate", type=float, default=0.5)
    p.add_argument("--batch-size", type=int, default=4096)
    p.add_argument("--pixel-sample-rate", type=float, default=0.25)
    p.add_argument("--patch-radius", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="write prediction masks for a dataset")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score benign and attacked predictions")
    p.add_argument("--benign-preds", type=Path, required=True)
    p.add_argument("--attacked-preds", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True, help="benign test dataset")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--model-tag", default="model")
    p.add_argument("--attack-tag", default="attack")
    p.add_argument("--all-images", action="store_true")
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

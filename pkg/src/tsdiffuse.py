import argparse
import logging
import sys
from collections.abc import Sequence

from conf import settings
from conf.conf_types import Backbone, ProjectionMethod
from conf.model import merge_update
from exc.exc import EXIT_OK, TsDiffuseError
from models.diffusion.model import TrainConfigUpdate
from models.metrics.table import render_table
from models.projection.model import ProjectionConfig
from models.run.model import RunConfig
from models.run.service import RunService, create_run_dir

logger = logging.getLogger("tsdiffuse")


class TsDiffuseCli():
    def __init__(self):
        self.parser = argparse.ArgumentParser(
            prog="tsdiffuse", description="Diffusion-based synthesis and evaluation of long multivariate time series"
        )
        self.subparsers = self.parser.add_subparsers(dest="command", required=True)
        self.register_commands()

    def register_commands(self):
        train = self.subparsers.add_parser("train", help="Train a denoiser on a dataset")
        self._add_run_arguments(train)
        train.add_argument("--backbone", type=Backbone, choices=list(Backbone))
        train.set_defaults(handler=self.on_train)

        sample = self.subparsers.add_parser("sample", help="Draw sequences from a trained checkpoint")
        sample.add_argument("--checkpoint", required=True)
        sample.add_argument("--count", type=int, required=True)
        sample.add_argument("--seed", type=int, default=0)
        sample.add_argument("--seq-len", type=int)
        sample.add_argument("--batch-size", type=int)
        sample.add_argument("--out")
        sample.set_defaults(handler=self.on_sample)

        evaluate = self.subparsers.add_parser("evaluate", help="Score synthetic sequences against held-out real ones")
        self._add_pair_arguments(evaluate)
        evaluate.add_argument("--config")
        evaluate.add_argument("--repetitions", type=int)
        evaluate.set_defaults(handler=self.on_evaluate)

        project = self.subparsers.add_parser("project", help="2-D embedding of pooled real and synthetic sequences")
        self._add_pair_arguments(project)
        project.add_argument("--method", type=ProjectionMethod, choices=list(ProjectionMethod), default=ProjectionMethod.PCA)
        project.add_argument("--perplexity", type=float)
        project.add_argument("--iterations", type=int)
        project.add_argument("--max-points", type=int)
        project.set_defaults(handler=self.on_project)

        ablate = self.subparsers.add_parser("ablate", help="Transformer vs GRU denoiser under one config and seed")
        self._add_run_arguments(ablate)
        ablate.set_defaults(handler=self.on_ablate)

    @staticmethod
    def _add_run_arguments(parser: argparse.ArgumentParser):
        parser.add_argument("--config", help="RunConfig JSON file; defaults apply when omitted")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--out", help="Output root for the run directory")
        parser.add_argument("--epochs", type=int)
        parser.add_argument("--max-steps", type=int)
        parser.add_argument("--batch-size", type=int)
        parser.add_argument("--learning-rate", type=float)

    @staticmethod
    def _add_pair_arguments(parser: argparse.ArgumentParser):
        parser.add_argument("--real", required=True)
        parser.add_argument("--synthetic", required=True)
        parser.add_argument("--seed", type=int, default=0)
        parser.add_argument("--out")

    def run(self, argv: Sequence[str] | None = None) -> int:
        args = self.parser.parse_args(argv)
        try:
            args.handler(args)
        except TsDiffuseError as error:
            logger.error("%s failed: %s", args.command, error.detail)
            print(f"error: {error.type}: {error.detail.get('content', '')}", file=sys.stderr)
            return error.exit_code
        return EXIT_OK

    @staticmethod
    def load_config(args: argparse.Namespace) -> RunConfig:
        """RunConfig from --config (or defaults) with command-line overrides applied section by section."""
        config = RunConfig.from_json_file(args.config) if args.config else RunConfig()
        overrides = TrainConfigUpdate(
            epochs=getattr(args, "epochs", None),
            max_steps=getattr(args, "max_steps", None),
            batch_size=getattr(args, "batch_size", None),
            learning_rate=getattr(args, "learning_rate", None),
        )
        update = {
            "train": merge_update(config.train, overrides).model_dump(mode="json"),
            "seed": getattr(args, "seed", None),
        }
        if getattr(args, "backbone", None) is not None:
            update["denoiser"] = merge_update(config.denoiser, {"backbone": args.backbone}).model_dump(mode="json")
        return merge_update(config, update)

    @staticmethod
    def _service(kind: str, out: str | None, config: RunConfig | None = None) -> RunService:
        root = out or (config.output_dir if config else None) or settings.output_root()
        return RunService(create_run_dir(kind, root))

    def on_train(self, args: argparse.Namespace):
        config = self.load_config(args)
        service = self._service("train", args.out, config)
        service.write_config(config)
        outcome = service.train(config)
        final = outcome.result.loss_history[-1] if outcome.result.loss_history else float("nan")
        print(f"run_dir={service.run_dir}")
        print(f"checkpoint={outcome.checkpoint_path}")
        print(f"steps={outcome.result.steps} final_loss={final:.6f}")

    def on_sample(self, args: argparse.Namespace):
        service = self._service("sample", args.out)
        service.write_arguments({k: v for k, v in vars(args).items() if k != "handler"})
        batch = service.sample(args.checkpoint, args.count, args.seed, seq_len=args.seq_len, batch_size=args.batch_size)
        print(f"run_dir={service.run_dir}")
        print(f"samples={len(batch)} shape={batch.values.shape}")

    def on_evaluate(self, args: argparse.Namespace):
        config = RunConfig.from_json_file(args.config) if args.config else RunConfig()
        metrics = merge_update(config.metrics, {"repetitions": args.repetitions})
        service = self._service("evaluate", args.out, config)
        service.write_config(config.model_copy(update={"metrics": metrics, "seed": args.seed}))
        pair = service.load_pair(args.real, args.synthetic)
        reports = service.evaluate(pair, metrics, args.seed)
        print(f"run_dir={service.run_dir}")
        print(render_table({"model": reports}), end="")

    def on_project(self, args: argparse.Namespace):
        config = merge_update(
            ProjectionConfig(method=args.method),
            {"perplexity": args.perplexity, "iterations": args.iterations, "max_points": args.max_points},
        )
        service = self._service("project", args.out)
        service.write_arguments({**{k: v for k, v in vars(args).items() if k != "handler"}, **config.model_dump(mode="json")})
        projection = service.project(service.load_pair(args.real, args.synthetic), config, args.seed)
        print(f"run_dir={service.run_dir}")
        print(f"points={len(projection.labels)} method={projection.method}")

    def on_ablate(self, args: argparse.Namespace):
        config = self.load_config(args)
        service = self._service("ablate", args.out, config)
        service.write_config(config)
        rows = service.ablate(config)
        print(f"run_dir={service.run_dir}")
        print(render_table(rows), end="")


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(
        level=settings.log_level(), format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    return TsDiffuseCli().run(argv)


if __name__ == "__main__":
    sys.exit(main())

import bittensor as bt

from dualgraph.base.command import BaseCommand
from dualgraph.commands.common import load_split_campaign, select
from dualgraph.data.case_store import compute_norm_stats
from dualgraph.exceptions import InvalidInputError
from dualgraph.model.types import RolloutMode
from dualgraph.trainer.checkpoint import check_stats, load_checkpoint
from dualgraph.trainer.evaluate import CURVE_HEADER, FRAME_ERROR_HEADER, evaluate
from dualgraph.utils.config import add_campaign_args
from dualgraph.utils.tables import metrics_table

SUBSETS = ("test", "val", "train", "all")


class EvalCommand(BaseCommand):
    name = "eval"
    help = "Score a checkpoint on a campaign subset with free rollouts."

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        add_campaign_args(parser)
        parser.add_argument("--eval.checkpoint", type=str, help="Checkpoint directory.", default="")
        parser.add_argument(
            "--eval.subset", type=str, choices=list(SUBSETS), help="Cases to score.", default="test"
        )
        parser.add_argument("--eval.batch_size", type=int, help="Cases per rollout batch.", default=8)
        parser.add_argument(
            "--eval.mode",
            type=str,
            choices=[m.value for m in RolloutMode],
            help="Rollout mode; teacher forcing is a diagnostic.",
            default=RolloutMode.free.value,
        )

    def run(self):
        cfg = self.config.eval
        if not cfg.checkpoint:
            raise InvalidInputError("--eval.checkpoint is required")
        model, manifest = load_checkpoint(cfg.checkpoint)
        self.manifest.inputs["checkpoint"] = cfg.checkpoint
        self.manifest.inputs["campaign"] = self.config.data.campaign
        self.manifest.seeds = [manifest.seed]

        _, cases, split = load_split_campaign(
            self.config.data.campaign, manifest.train.split_ratios, manifest.train.seed
        )
        # the checkpoint must come from this campaign's training split
        check_stats(compute_norm_stats(select(cases, split.train)), manifest.norm_stats)
        indices = list(range(len(cases))) if cfg.subset == "all" else getattr(split, cfg.subset)

        report = evaluate(model, select(cases, indices), cfg.batch_size, RolloutMode(cfg.mode))
        self.write_json("metrics.json", report.metrics.model_dump(exclude={"mean_rollout_seconds"}))
        self.write_csv("force_deflection.csv", CURVE_HEADER, report.curves)
        self.write_csv("frame_errors.csv", FRAME_ERROR_HEADER, report.frame_errors)
        if report.metrics.mean_rollout_seconds is not None:
            self.manifest.timing["mean_rollout_seconds"] = report.metrics.mean_rollout_seconds
        bt.logging.info("\n" + metrics_table(report.metrics))
        return report

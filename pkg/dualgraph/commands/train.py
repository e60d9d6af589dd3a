import bittensor as bt

from dualgraph.base.command import BaseCommand
from dualgraph.commands.common import load_split_campaign, select
from dualgraph.trainer.train import HISTORY_HEADER, history_rows, train
from dualgraph.utils.config import add_campaign_args, add_train_args, train_config_from
from dualgraph.utils.tables import dict_table
from dualgraph.utils.wandb.wandb import WandbLogger


class TrainCommand(BaseCommand):
    name = "train"
    help = "Train a surrogate on the train split and keep the best validation checkpoint."

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        add_campaign_args(parser)
        add_train_args(parser)

    def run(self):
        train_config = train_config_from(self.config)
        index, cases, split = load_split_campaign(
            self.config.data.campaign, train_config.split_ratios, train_config.seed
        )
        self.manifest.inputs["campaign"] = self.config.data.campaign
        self.manifest.seeds = [train_config.seed]
        self.write_json("train_config.json", train_config)

        wandb_logger = WandbLogger(
            self.config,
            run_name=f"train-{train_config.kind.value}-seed{train_config.seed}",
            run_config=train_config.model_dump(mode="json"),
        )
        try:
            result = train(
                select(cases, split.train),
                select(cases, split.val),
                train_config,
                out_dir=self.out_dir,
                wandb_logger=wandb_logger,
            )
        finally:
            wandb_logger.finish()

        self.manifest.outputs["checkpoint"] = f"{self.out_dir}/checkpoint"
        self.write_csv("history.csv", HISTORY_HEADER, history_rows(result.history))
        counts = result.model.count_parameters()
        self.manifest.extra["parameter_counts"] = counts
        self.manifest.extra["best_epoch"] = result.history.best_epoch
        self.manifest.timing["train_seconds"] = result.seconds
        bt.logging.info("\n" + dict_table(counts, headers=("block", "parameters")))
        return result

import bittensor as bt

from dualgraph.base.command import BaseCommand
from dualgraph.commands.common import load_split_campaign, parse_int_list, select
from dualgraph.model.types import ModelKind
from dualgraph.trainer.ablation import ABLATION_HEADER, ablate, ablation_rows
from dualgraph.utils.config import add_campaign_args, add_train_args, train_config_from
from dualgraph.utils.tables import ablation_table


class AblateCommand(BaseCommand):
    name = "ablate"
    help = "Train dual-graph and single-graph models under one config and compare element-level errors."

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        add_campaign_args(parser)
        add_train_args(parser)
        parser.add_argument("--ablate.seeds", type=str, help="Comma separated seeds.", default="0,1,2")
        parser.add_argument(
            "--ablate.candidate",
            type=str,
            choices=[k.value for k in ModelKind],
            help="Model whose reduction is reported.",
            default=ModelKind.dual.value,
        )
        parser.add_argument(
            "--ablate.reference",
            type=str,
            choices=[k.value for k in ModelKind],
            help="Model the reduction is measured against.",
            default=ModelKind.baseline.value,
        )

    def run(self):
        train_config = train_config_from(self.config)
        seeds = parse_int_list(self.config.ablate.seeds)
        # one split for every seed and model
        _, cases, split = load_split_campaign(
            self.config.data.campaign, train_config.split_ratios, train_config.seed
        )
        self.manifest.inputs["campaign"] = self.config.data.campaign
        self.manifest.seeds = seeds
        self.write_json("train_config.json", train_config)

        summary = ablate(
            select(cases, split.train),
            select(cases, split.val),
            select(cases, split.test),
            train_config,
            seeds=seeds,
            kinds=(ModelKind(self.config.ablate.candidate), ModelKind(self.config.ablate.reference)),
            out_dir=self.out_dir,
        )
        self.write_csv("ablation.csv", ABLATION_HEADER, ablation_rows(summary))
        self.write_json("ablation.json", summary)
        bt.logging.info("\n" + ablation_table(summary))
        return summary

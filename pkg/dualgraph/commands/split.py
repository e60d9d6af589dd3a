import bittensor as bt

from dualgraph.base.command import BaseCommand
from dualgraph.commands.common import parse_float_list
from dualgraph.data.case_store import (
    campaign_index_path,
    load_campaign_index,
    save_campaign_index,
    split_cases,
)
from dualgraph.utils.config import add_campaign_args


class SplitCommand(BaseCommand):
    name = "split"
    help = "Assign whole cases to train/val/test and store the split in the campaign index."

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        add_campaign_args(parser)
        parser.add_argument(
            "--split.ratios", type=str, help="train,val,test fractions.", default="0.7,0.15,0.15"
        )
        parser.add_argument("--split.seed", type=int, help="Split seed.", default=0)

    def run(self):
        path = campaign_index_path(self.config.data.campaign)
        self.manifest.inputs["campaign"] = path
        index = load_campaign_index(path)
        split = split_cases(
            len(index.cases), parse_float_list(self.config.split.ratios), self.config.split.seed
        )
        index.split = split
        save_campaign_index(index, path)
        self.write_json("split.json", split)
        self.manifest.seeds = [split.seed]
        bt.logging.info(
            f"Split {split.n_cases} cases: {len(split.train)} train, {len(split.val)} val, {len(split.test)} test"
        )
        return split

import bittensor as bt
from pydantic import ValidationError

from dualgraph.base.command import BaseCommand
from dualgraph.commands.common import parse_int_list
from dualgraph.exceptions import InvalidInputError
from dualgraph.synth.generator import campaign_table, generate_campaign
from dualgraph.synth.types import BeamSpec, CampaignSpec, MeshScale


class GenCommand(BaseCommand):
    name = "gen"
    help = "Generate a synthetic four-point-bending campaign."

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        defaults = CampaignSpec()
        parser.add_argument("--gen.count", type=int, help="Number of cases to sample.", default=defaults.count)
        parser.add_argument("--gen.seed", type=int, help="Seed for sampling offset pairs.", default=defaults.seed)
        parser.add_argument("--gen.frames", type=int, help="Frames per case.", default=defaults.frames)
        parser.add_argument(
            "--gen.mesh_scale",
            type=str,
            choices=[m.value for m in MeshScale],
            help="Mesh resolution.",
            default=MeshScale.tiny.value,
        )
        parser.add_argument(
            "--gen.offset_range", type=int, help="Max block shift in mm.", default=defaults.offset_range
        )
        parser.add_argument(
            "--gen.offset_step", type=int, help="Block shift increment in mm.", default=defaults.offset_step
        )
        parser.add_argument(
            "--gen.offsets",
            type=str,
            help="Explicit offset pairs 'a:b,c:d'; overrides sampling.",
            default="",
        )

    def _offsets(self):
        text = self.config.gen.offsets
        if not text:
            return None
        pairs = []
        for item in str(text).split(","):
            parts = item.split(":")
            if len(parts) != 2:
                raise InvalidInputError(f"offset pair '{item}' must look like a:b")
            pairs.append(tuple(parse_int_list(",".join(parts))))
        return pairs

    def run(self):
        cfg = self.config.gen
        try:
            campaign = CampaignSpec(
                offset_range=cfg.offset_range,
                offset_step=cfg.offset_step,
                frames=cfg.frames,
                count=cfg.count,
                seed=cfg.seed,
                offsets=self._offsets(),
            )
        except ValidationError as e:
            raise InvalidInputError(f"invalid campaign: {e}")
        index = generate_campaign(BeamSpec(), campaign, self.out_dir, MeshScale(cfg.mesh_scale))
        self.manifest.seeds = [cfg.seed]
        self.manifest.outputs["campaign.json"] = f"{self.out_dir}/campaign.json"
        bt.logging.info("\n" + campaign_table(index))
        return index

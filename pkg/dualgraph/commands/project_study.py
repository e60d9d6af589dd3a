import bittensor as bt

from dualgraph.base.command import BaseCommand
from dualgraph.data.case_store import load_case
from dualgraph.exceptions import InvalidInputError
from dualgraph.mesh.graph import build_incidence
from dualgraph.projection.projection import attenuation_report


class ProjectStudyCommand(BaseCommand):
    name = "project-study"
    help = "Measure peak attenuation of element fields under element-node-element projection."

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        parser.add_argument("--project.case", type=str, help="Case directory.", default="")
        parser.add_argument(
            "--project.frame", type=int, help="Frame index, negative counts from the end.", default=-1
        )

    def run(self):
        cfg = self.config.project
        if not cfg.case:
            raise InvalidInputError("--project.case is required")
        case = load_case(cfg.case)
        self.manifest.inputs["case"] = cfg.case
        frame = cfg.frame if cfg.frame >= 0 else case.n_frames + cfg.frame
        if not 0 <= frame < case.n_frames:
            raise InvalidInputError(f"frame {cfg.frame} outside a {case.n_frames}-frame case")

        inc = build_incidence(case.connectivity, case.n_nodes)
        reports = {
            "stress": attenuation_report(case.s[frame], inc, unit="MPa"),
            "peeq": attenuation_report(case.peeq[frame], inc),
        }
        payload = {
            "case_id": case.case_id,
            "frame": frame,
            **{name: r.model_dump(exclude={"abs_diff"}) for name, r in reports.items()},
        }
        self.write_json("attenuation.json", payload)
        for name, r in reports.items():
            bt.logging.info(f"{name}: {r.summary()}")
        return reports

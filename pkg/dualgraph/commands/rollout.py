import os

import bittensor as bt
import numpy as np

from dualgraph.base.command import BaseCommand
from dualgraph.data.blobs import write_blob
from dualgraph.data.case_store import MANIFEST_NAME, load_case
from dualgraph.data.types import CaseManifest
from dualgraph.exceptions import InvalidInputError
from dualgraph.model.batch import make_batch, prepare_case
from dualgraph.model.types import RolloutMode, RolloutResult
from dualgraph.trainer.checkpoint import load_checkpoint
from dualgraph.trainer.evaluate import CURVE_HEADER, force_deflection_rows

PREDICTION_DIR = "prediction"


def save_prediction(result: RolloutResult, case, path: str, mode: RolloutMode):
    """
    Writes predicted fields in physical units as a case-container directory. The
    case invariants are not enforced on predictions.
    """
    os.makedirs(path, exist_ok=True)
    arrays = {
        "coords": (case.coords, "f64"),
        "connectivity": (case.connectivity, "u32"),
        "u": (result.u_phys, "f64"),
        "s": (result.s_phys, "f64"),
        "peeq": (result.peeq_phys, "f64"),
        "rf2": (result.rf2_phys, "f64"),
        "frame_times": (case.frame_times, "f64"),
    }
    blobs = [write_blob(path, name, value, dtype) for name, (value, dtype) in arrays.items()]
    manifest = CaseManifest(
        n_nodes=case.n_nodes,
        n_elems=case.n_elems,
        n_frames=case.n_frames,
        blobs=blobs,
        load_positions=case.load_positions,
        load_nodes=[int(i) for i in np.asarray(case.load_nodes)],
        case_id=case.case_id,
        meta={**case.meta, "prediction": True, "rollout_mode": RolloutMode(mode).value},
    )
    with open(os.path.join(path, MANIFEST_NAME), "w") as f:
        f.write(manifest.model_dump_json(indent=2))


class RolloutCommand(BaseCommand):
    name = "rollout"
    help = "Predict the full trajectory of one case from its static conditions."

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        parser.add_argument("--rollout.checkpoint", type=str, help="Checkpoint directory.", default="")
        parser.add_argument("--rollout.case", type=str, help="Case directory.", default="")
        parser.add_argument(
            "--rollout.mode",
            type=str,
            choices=[m.value for m in RolloutMode],
            help="free feeds predictions back; teacher feeds ground truth (diagnostic).",
            default=RolloutMode.free.value,
        )

    def run(self):
        cfg = self.config.rollout
        if not cfg.checkpoint or not cfg.case:
            raise InvalidInputError("--rollout.checkpoint and --rollout.case are required")
        model, _ = load_checkpoint(cfg.checkpoint)
        case = load_case(cfg.case)
        self.manifest.inputs.update(checkpoint=cfg.checkpoint, case=cfg.case)

        prepared = prepare_case(case, model.stats, model.config.lambda_max_mode)
        mode = RolloutMode(cfg.mode)
        (result,) = model.predict(make_batch([prepared]), mode)

        save_prediction(result, case, self.output_path(PREDICTION_DIR), mode)
        self.write_csv("force_deflection.csv", CURVE_HEADER, force_deflection_rows(result, prepared))
        self.manifest.timing["rollout_seconds"] = result.seconds or 0.0
        bt.logging.info(
            f"Rolled out '{case.case_id}' ({case.n_frames} frames, {mode.value} mode), "
            f"final RF2 {result.rf2_phys[-1]:.3f} kN"
        )
        return result

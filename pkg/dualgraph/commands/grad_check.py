import bittensor as bt
from tabulate import tabulate

from dualgraph.base.command import BaseCommand
from dualgraph.exceptions import GradientCheckError
from dualgraph.model.types import ModelKind
from dualgraph.trainer.audit import model_audit, primitive_audit


class GradCheckCommand(BaseCommand):
    name = "grad-check"
    help = "Compare tape gradients with central finite differences."

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        parser.add_argument("--grad.h", type=float, help="Finite-difference step.", default=1e-6)
        parser.add_argument(
            "--grad.primitive_tol", type=float, help="Max relative error per primitive.", default=1e-6
        )
        parser.add_argument(
            "--grad.model_tol", type=float, help="Max relative error of the model loss.", default=1e-4
        )
        parser.add_argument("--grad.hidden", type=int, help="Hidden size of the audited model.", default=8)
        parser.add_argument("--grad.frames", type=int, help="Frames of the audited case.", default=3)
        parser.add_argument("--grad.seed", type=int, help="Seed for inputs and weights.", default=0)
        parser.add_argument(
            "--grad.kind",
            type=str,
            choices=[k.value for k in ModelKind],
            help="Model kind to audit.",
            default=ModelKind.dual.value,
        )

    def run(self):
        cfg = self.config.grad
        self.manifest.seeds = [cfg.seed]
        primitives = primitive_audit(cfg.seed, cfg.h)
        model = model_audit(ModelKind(cfg.kind), cfg.hidden, cfg.frames, cfg.seed, cfg.h)
        worst_model = max(model.values())

        self.write_json("grad_check.json", {"primitives": primitives, "model": model})
        bt.logging.info(
            "\n"
            + tabulate(
                [[name, err, err <= cfg.primitive_tol] for name, err in primitives.items()]
                + [["model (worst parameter)", worst_model, worst_model <= cfg.model_tol]],
                headers=["check", "relative error", "ok"],
                tablefmt="grid",
                floatfmt=".3e",
            )
        )

        failed = [n for n, e in primitives.items() if e > cfg.primitive_tol]
        if worst_model > cfg.model_tol:
            failed.append("model")
        if failed:
            raise GradientCheckError(f"gradient check failed for {failed}")
        return {"primitives": primitives, "model": model}

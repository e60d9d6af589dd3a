import bittensor as bt

from dualgraph.base.command import BaseCommand
from dualgraph.data.case_store import load_case
from dualgraph.mesh.graph import build_dual_graph, graph_stats
from dualgraph.synth.generator import beam_mesh
from dualgraph.synth.types import BeamSpec, MeshScale
from dualgraph.utils.tables import dict_table


class GraphStatsCommand(BaseCommand):
    name = "graph-stats"
    help = "Report sizes and degree histograms of the node and element graphs."

    @classmethod
    def add_args(cls, parser):
        super().add_args(parser)
        parser.add_argument("--graph.case", type=str, help="Case directory; overrides the mesh scale.", default="")
        parser.add_argument(
            "--graph.mesh_scale",
            type=str,
            choices=[m.value for m in MeshScale],
            help="Beam mesh to inspect when no case is given.",
            default=MeshScale.full.value,
        )
        parser.add_argument(
            "--graph.lambda_max_mode",
            type=str,
            choices=["fixed", "power"],
            help="Largest-eigenvalue estimate for the scaled Laplacians.",
            default="fixed",
        )

    def run(self):
        cfg = self.config.graph
        if cfg.case:
            case = load_case(cfg.case)
            connectivity, n_nodes = case.connectivity, case.n_nodes
            self.manifest.inputs["case"] = cfg.case
        else:
            coords, connectivity, _ = beam_mesh(BeamSpec(), MeshScale(cfg.mesh_scale))
            n_nodes = coords.shape[0]

        stats = graph_stats(build_dual_graph(connectivity, n_nodes, cfg.lambda_max_mode))
        self.write_json("graph_stats.json", stats)
        flat = {k: v for k, v in stats.items() if not isinstance(v, dict)}
        bt.logging.info("\n" + dict_table(flat))
        return stats

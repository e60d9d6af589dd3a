from .gen import GenCommand
from .split import SplitCommand
from .train import TrainCommand
from .eval import EvalCommand
from .rollout import RolloutCommand
from .ablate import AblateCommand
from .project_study import ProjectStudyCommand
from .graph_stats import GraphStatsCommand
from .grad_check import GradCheckCommand

COMMANDS = {
    cls.name: cls
    for cls in (
        GenCommand,
        SplitCommand,
        TrainCommand,
        EvalCommand,
        RolloutCommand,
        AblateCommand,
        ProjectStudyCommand,
        GraphStatsCommand,
        GradCheckCommand,
    )
}

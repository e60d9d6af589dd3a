import os
import time
from typing import Optional

import bittensor as bt
import wandb

import dualgraph


class WandbLogger:
    """
    Optional experiment tracking. Off by default; when off, records can be echoed
    through bt.logging instead.
    """

    def __init__(self, config: "bt.Config", run_name: str, run_config: Optional[dict] = None):
        self.config = config
        self.run_name = run_name
        self.run = None
        if not self.is_off():
            self.run = self._setup_wandb(run_config or {})
            self.start_time = time.time()

    def is_off(self) -> bool:
        return not self.config.wandb.on

    def finish(self):
        if not self.is_off():
            wandb.finish()

    def log(self, *args, **kwargs):
        if not self.is_off():
            wandb.log(*args, **kwargs)
        else:
            if self.config.wandb.log_stdout_if_off:
                bt.logging.info(f"Wandb is off, logging to stdout: {args} {kwargs}")

    def _setup_wandb(self, run_config: dict):
        if not os.environ.get("WANDB_API_KEY"):
            raise Exception("WANDB_API_KEY environment variable must be set")

        run = wandb.init(
            name=self.run_name,
            project=self.config.wandb.project_name,
            entity=self.config.wandb.entity or dualgraph.ENTITY,
            config={**run_config, "version": dualgraph.__version__},
            dir=self.config.out_dir,
        )
        bt.logging.success(
            f"Started wandb run for project '{self.config.wandb.project_name}', name: '{self.run_name}', id: '{run.id}'"
        )
        return run

# The MIT License (MIT)
# Copyright © 2024 VectorChat

# Permission is hereby granted, free of charge, to any person obtaining a copy of this software and associated
# documentation files (the “Software”), to deal in the Software without restriction, including without limitation
# the rights to use, copy, modify, merge, publish, distribute, sublicense, and/or sell copies of the Software,
# and to permit persons to whom the Software is furnished to do so, subject to the following conditions:

# The above copyright notice and this permission notice shall be included in all copies or substantial portions of
# the Software.

# THE SOFTWARE IS PROVIDED “AS IS”, WITHOUT WARRANTY OF ANY KIND, EXPRESS OR IMPLIED, INCLUDING BUT NOT LIMITED TO
# THE WARRANTIES OF MERCHANTABILITY, FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL
# THE AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY, WHETHER IN AN ACTION
# OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER
# DEALINGS IN THE SOFTWARE.

import copy
import csv
import json
import os
import time
from abc import ABC, abstractmethod

import bittensor as bt

from dualgraph.utils.config import add_args, check_config, config
from dualgraph.utils.log import log_dict
from dualgraph.utils.manifest import RunManifest, write_run_manifest


class BaseCommand(ABC):
    """
    Base class for subcommands. Subclasses declare their flags in `add_args`,
    do their work in `run` and record what they read and wrote on `self.manifest`.
    """

    name: str = "base"
    help: str = ""

    @classmethod
    def check_config(cls, config: "bt.Config"):
        check_config(cls, config)

    @classmethod
    def add_args(cls, parser):
        add_args(cls, parser)

    @classmethod
    def config(cls, argv=None):
        return config(cls, argv or [])

    def __init__(self, config: "bt.Config"):
        self.config = copy.deepcopy(config)
        self.check_config(self.config)
        bt.logging.set_config(config=self.config.logging)

        # Log the configuration for reference.
        bt.logging.debug(f"{self.name} configuration:")
        log_dict(self._config_dict())

        self.manifest = RunManifest(subcommand=self.name, config=self._config_dict())

    def _config_dict(self) -> dict:
        return json.loads(json.dumps(self.config.toDict(), default=str))

    @property
    def out_dir(self) -> str:
        return self.config.out_dir

    def output_path(self, name: str) -> str:
        path = os.path.join(self.out_dir, name)
        self.manifest.outputs[name] = path
        return path

    def write_json(self, name: str, payload) -> str:
        path = self.output_path(name)
        with open(path, "w") as f:
            if hasattr(payload, "model_dump_json"):
                f.write(payload.model_dump_json(indent=2))
            else:
                json.dump(payload, f, indent=2, default=str)
        return path

    def write_csv(self, name: str, header: list, rows: list) -> str:
        path = self.output_path(name)
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            writer.writerows(rows)
        return path

    @abstractmethod
    def run(self): ...

    def execute(self):
        start = time.perf_counter()
        result = self.run()
        self.manifest.timing["total_seconds"] = time.perf_counter() - start
        write_run_manifest(self.manifest, self.out_dir)
        bt.logging.success(f"{self.name} finished, outputs in {self.out_dir}")
        return result

import os
import platform

import bittensor as bt
from pydantic import BaseModel, Field

import dualgraph

RUN_MANIFEST_NAME = "run_manifest.json"


class RunManifest(BaseModel):
    """Provenance of one CLI run, written next to its outputs."""

    subcommand: str
    config: dict
    seeds: list[int] = Field(default_factory=list)
    inputs: dict[str, str] = Field(default_factory=dict)
    outputs: dict[str, str] = Field(default_factory=dict)
    engine_version: str = dualgraph.__version__
    python_version: str = Field(default_factory=platform.python_version)
    timing: dict[str, float] = Field(default_factory=dict)
    extra: dict = Field(default_factory=dict)


def write_run_manifest(manifest: RunManifest, out_dir: str) -> str:
    path = os.path.join(out_dir, RUN_MANIFEST_NAME)
    with open(path, "w") as f:
        f.write(manifest.model_dump_json(indent=2))
    bt.logging.debug(f"Wrote run manifest to {path}")
    return path


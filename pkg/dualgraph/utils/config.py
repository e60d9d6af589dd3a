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

import argparse
import json
import os

import bittensor as bt
from pydantic import ValidationError

import dualgraph
from dualgraph.exceptions import InvalidInputError, MissingBlobError
from dualgraph.trainer.types import TrainConfig


def check_config(cls, config: "bt.Config"):
    r"""Checks/validates the config namespace object and resolves the output directory."""
    bt.logging.check_config(config)

    out_dir = config.out_dir
    if not out_dir:
        root = os.environ.get(dualgraph.OUTPUT_ROOT_ENV) or "./runs"
        out_dir = os.path.join(root, cls.name)
    config.out_dir = os.path.abspath(os.path.expanduser(out_dir))
    if not os.path.exists(config.out_dir):
        os.makedirs(config.out_dir, exist_ok=True)


def add_args(cls, parser):
    """
    Adds the arguments shared by every subcommand.
    """
    parser.add_argument(
        "--out_dir",
        type=str,
        help=f"Output directory. Defaults to ${dualgraph.OUTPUT_ROOT_ENV}/<subcommand> or ./runs/<subcommand>.",
        default="",
    )

    parser.add_argument(
        "--config",
        type=str,
        help="If set, defaults are overridden by the passed yaml file.",
        default=False,
    )

    parser.add_argument(
        "--wandb.on",
        action="store_true",
        help="Turn on wandb logging.",
        default=False,
    )

    parser.add_argument(
        "--wandb.project_name",
        type=str,
        help="The name of the wandb project.",
        default=dualgraph.PROJECT_NAME,
    )

    parser.add_argument(
        "--wandb.entity",
        type=str,
        help="The wandb entity.",
        default=dualgraph.ENTITY,
    )

    parser.add_argument(
        "--wandb.log_stdout_if_off",
        action="store_true",
        help="If set, logs to stdout if wandb is off.",
        default=False,
    )


def add_campaign_args(parser):
    parser.add_argument(
        "--data.campaign",
        type=str,
        help="Campaign directory or campaign.json written by `gen`.",
        default="",
    )


def add_train_args(parser):
    """
    Training flags. Defaults follow the reference training setup.
    """
    defaults = TrainConfig()
    parser.add_argument(
        "--train.config_file",
        type=str,
        help="JSON file validated into a TrainConfig; flags set on the command line override it.",
        default="",
    )
    parser.add_argument("--train.epochs", type=int, help="Number of epochs.", default=defaults.epochs)
    parser.add_argument(
        "--train.batch_size", type=int, help="Cases per batch.", default=defaults.batch_size
    )
    parser.add_argument("--train.lr", type=float, help="Adam learning rate.", default=defaults.lr)
    parser.add_argument(
        "--train.clip", type=float, help="Global gradient-norm clip.", default=defaults.clip
    )
    parser.add_argument(
        "--train.cheb_order", type=int, help="Chebyshev filter order K.", default=defaults.cheb_order
    )
    parser.add_argument(
        "--train.hidden", type=int, help="GConvGRU hidden size.", default=defaults.hidden
    )
    parser.add_argument(
        "--train.mlp_hidden", type=int, help="Decoder hidden width.", default=defaults.mlp_hidden
    )
    parser.add_argument("--train.seed", type=int, help="Random seed.", default=defaults.seed)
    parser.add_argument(
        "--train.kind",
        type=str,
        choices=["dual", "baseline"],
        help="Model kind.",
        default=defaults.kind.value,
    )
    parser.add_argument(
        "--train.stress_feedback",
        action="store_true",
        help="Feed nodal averages of the previous stress prediction back as a feature.",
        default=False,
    )
    parser.add_argument(
        "--train.lambda_max_mode",
        type=str,
        choices=["fixed", "power"],
        help="Largest-eigenvalue estimate used to scale the Laplacians.",
        default=defaults.lambda_max_mode,
    )
    parser.add_argument(
        "--train.val_workers",
        type=int,
        help="Threads used for validation rollouts.",
        default=defaults.val_workers,
    )
    w = defaults.weights
    parser.add_argument("--train.weights.stress", type=float, help="Stress loss weight.", default=w.stress)
    parser.add_argument("--train.weights.rf2", type=float, help="RF2 loss weight.", default=w.rf2)
    parser.add_argument("--train.weights.peeq", type=float, help="PEEQ loss weight.", default=w.peeq)
    parser.add_argument(
        "--train.weights.laplacian",
        type=float,
        help="Laplacian smoothing weight.",
        default=w.laplacian,
    )


_TRAIN_FLAGS = {
    "epochs": "train.epochs",
    "batch_size": "train.batch_size",
    "lr": "train.lr",
    "clip": "train.clip",
    "cheb_order": "train.cheb_order",
    "hidden": "train.hidden",
    "mlp_hidden": "train.mlp_hidden",
    "seed": "train.seed",
    "kind": "train.kind",
    "stress_feedback": "train.stress_feedback",
    "lambda_max_mode": "train.lambda_max_mode",
    "val_workers": "train.val_workers",
}
_WEIGHT_FLAGS = ("stress", "rf2", "peeq", "laplacian")


def train_config_from(config: "bt.Config") -> TrainConfig:
    """
    Builds the TrainConfig: the JSON file (when given) provides the base, flags
    explicitly set on the command line override it.
    """
    base: dict = {}
    path = config.train.config_file
    if path:
        path = os.path.expanduser(path)
        if not os.path.exists(path):
            raise MissingBlobError("missing training config file", path=path)
        try:
            with open(path, "r") as f:
                base = json.load(f)
        except json.JSONDecodeError as e:
            raise InvalidInputError(f"training config is not valid JSON: {e}", path=path)
        if not isinstance(base, dict):
            raise InvalidInputError("training config must be a JSON object", path=path)

    def flag(dotted):
        node = config
        for part in dotted.split("."):
            node = getattr(node, part)
        return node

    def use(dotted):
        return not path or config.is_set(dotted)

    values = dict(base)
    for field, dotted in _TRAIN_FLAGS.items():
        if use(dotted):
            values[field] = flag(dotted)
    weights = dict(base.get("weights", {}))
    for name in _WEIGHT_FLAGS:
        if use(f"train.weights.{name}"):
            weights[name] = flag(f"train.weights.{name}")
    values["weights"] = weights

    try:
        return TrainConfig.model_validate(values)
    except ValidationError as e:
        raise InvalidInputError(f"invalid training config: {e}", path=path or None)


def config(cls, argv):
    """
    Returns the configuration object for a subcommand after adding relevant
    arguments. Unknown flags are rejected before the config is built.
    """
    parser = argparse.ArgumentParser(prog=f"dualgraph {cls.name}", description=cls.help)
    bt.logging.add_args(parser)
    cls.add_args(parser)
    parser.parse_args(argv)
    return bt.config(parser, args=argv)

""" Command line: `realpg {gen-data,train,eval,verify}`.

Every command accepts `--config PATH` and any number of dotted overrides
(`--train.steps=10`), and echoes the resolved configuration next to its
outputs. Exit codes: 0 success, 1 verification failure, 2 configuration
error, 3 numerical failure, 4 compatibility error.
"""

# =============================================================================
# IMPORTS
# =============================================================================
import argparse
import json
import logging
import os
import sys

import torch

from .. import infer
from ..config import dump_resolved, load_config
from ..data import JudgeDataset, make_dataset
from ..exceptions import CompatibilityError, ConfigError, NumericalError
from ..oracle import run_verification
from .checkpoint import check_compatible, load_checkpoint, save_checkpoint
from .experiment import TrainAndTest
from .report import markdown

logger = logging.getLogger(__name__)

# =============================================================================
# CONSTANTS
# =============================================================================
EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_COMPAT = 4


# =============================================================================
# UTILITY FUNCTIONS
# =============================================================================
def _resolved_path(prefix):
    return prefix + ".resolved.json"


def _write_json(document, path):
    with open(path, "w", encoding="utf-8") as f_handle:
        json.dump(document, f_handle, indent=2, sort_keys=True)
        f_handle.write("\n")


def _makedirs(path):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)


def load_split(config, split):
    """The train or test split: read from `data.<split>_path` when set,
    generated from the environment otherwise."""
    path = config.data.train_path if split == "train" else config.data.test_path
    if path is not None:
        return JudgeDataset.load(path)
    return generate_split(config, split)


def generate_split(config, split):
    data = config.data
    n, seed = (data.n_train, data.seed_train) if split == "train" else (data.n_test, data.seed_test)
    return make_dataset(config.env, n, seed)


# =============================================================================
# COMMANDS
# =============================================================================
def cmd_gen_data(args, config):
    """Write one split of the judge dataset."""
    dataset = generate_split(config, args.split)
    _makedirs(args.out)
    dataset.save(args.out)
    dump_resolved(config, _resolved_path(args.out))
    print(len(dataset))
    return EXIT_OK


def cmd_train(args, config):
    """Train, then write checkpoint, step log, evaluation curve and the
    held-out report (JSON and markdown) for every inference mode."""
    prefix = os.path.join(args.out_dir or config.out_dir, config.name)
    _makedirs(prefix)
    dump_resolved(config, _resolved_path(prefix))

    experiment = TrainAndTest(config, load_split(config, "train"), load_split(config, "test"))
    try:
        results = experiment.run()["test"]
    except NumericalError as e:
        _write_json({"error": str(e), "state": e.state}, prefix + ".failure.json")
        raise

    result = experiment.result
    save_checkpoint(result.checkpoint, prefix + ".ckpt")
    result.frame().to_csv(prefix + ".steps.csv", index=False)
    if result.curve:
        result.curve_frame().to_csv(prefix + ".eval.csv", index=False)

    _write_json({mode: report.model_dump() for mode, report in results.items()}, prefix + ".report.json")
    with open(prefix + ".report.md", "w", encoding="utf-8") as f_handle:
        f_handle.write(markdown(results) + "\n")
    logger.info("wrote %s.{ckpt,steps.csv,report.json,report.md}", prefix)
    return EXIT_OK


def cmd_eval(args, config):
    """Predict a dataset with a checkpoint and score the predictions."""
    checkpoint = load_checkpoint(args.checkpoint)
    if args.config is not None:
        check_compatible(checkpoint, config.policy)
        policy = config.policy
    else:
        policy = checkpoint.policy
    config = config.model_copy(update={"policy": policy})

    dataset = JudgeDataset.load(args.data) if args.data else load_split(config, "test")
    if len(dataset) == 0:
        raise CompatibilityError("dataset has no examples")
    d = int(dataset[0].features.shape[0])
    if d != policy.prompt_feature_dim:
        raise CompatibilityError(
            "dataset has %d prompt features, checkpoint expects %d" % (d, policy.prompt_feature_dim)
        )

    infer_config = config.infer
    mode = args.mode or infer_config.mode
    n = args.n if args.n is not None else (infer_config.n if mode == "rail_avg_n" else 1)

    prefix = args.out
    _makedirs(prefix)
    dump_resolved(config, _resolved_path(prefix))

    predictions = infer.predict(checkpoint.params, dataset, policy, mode, n=n, seed=infer_config.seed)
    infer.write_predictions(predictions, dataset, prefix + ".predictions.csv")
    report = infer.score(predictions, dataset, policy, config.metrics.tau_variant)
    with open(prefix + ".report.json", "w", encoding="utf-8") as f_handle:
        f_handle.write(report.to_json() + "\n")
    logger.info("%s: r=%.4f rho=%.4f rmse=%.4f", mode, report.r, report.rho, report.rmse)
    return EXIT_OK


def cmd_verify(args, config):
    """Run the verification suite; exit 1 on any hard failure."""
    report = run_verification(args.scale, seed=args.seed)
    _makedirs(args.out)
    dump_resolved(config, _resolved_path(args.out))
    _write_json(report, args.out)
    if not report["passed"]:
        logger.error("verification failed, see %s", args.out)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "eval": cmd_eval,
    "verify": cmd_verify,
}


# =============================================================================
# MODULE FUNCTIONS
# =============================================================================
def build_parser():
    parser = argparse.ArgumentParser(
        prog="realpg",
        description="Regression-aware policy gradients for small softmax policies.",
        allow_abbrev=False,
    )
    parser.add_argument("--log-level", default="INFO", type=str)
    subparsers = parser.add_subparsers(dest="command", required=True)

    def _subparser(name, help):
        sub = subparsers.add_parser(name, help=help, allow_abbrev=False)
        sub.add_argument("--config", default=None, type=str, help="JSON run configuration")
        return sub

    gen = _subparser("gen-data", "write a judge dataset")
    gen.add_argument("--out", required=True, type=str)
    gen.add_argument("--split", default="train", choices=["train", "test"])

    train = _subparser("train", "train a policy")
    train.add_argument("--out-dir", default=None, type=str)

    evaluate = _subparser("eval", "evaluate a checkpoint")
    evaluate.add_argument("--checkpoint", required=True, type=str)
    evaluate.add_argument("--data", default=None, type=str)
    evaluate.add_argument("--mode", default=None, choices=list(infer.MODES))
    evaluate.add_argument("--n", default=None, type=int)
    evaluate.add_argument("--out", required=True, type=str, help="output prefix")

    verify = _subparser("verify", "run the verification suite")
    verify.add_argument("--scale", default="quick", choices=["quick", "full"])
    verify.add_argument("--seed", default=0, type=int)
    verify.add_argument("--out", default="verify.json", type=str)

    return parser


def main(argv=None):
    """Entry point; returns the process exit code."""
    parser = build_parser()
    args, overrides = parser.parse_known_args(argv)

    logging.basicConfig(
        level=getattr(logging, args.log_level.upper(), logging.INFO),
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    torch.set_num_threads(1)

    try:
        config = load_config(args.config, overrides)
        if args.command == "eval" and args.n is not None and args.n < 1:
            raise ConfigError("--n must be at least 1")
        return COMMANDS[args.command](args, config)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except NumericalError as e:
        logger.error("numerical failure: %s", e)
        return EXIT_NUMERIC
    except CompatibilityError as e:
        logger.error("incompatible input: %s", e)
        return EXIT_COMPAT


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()

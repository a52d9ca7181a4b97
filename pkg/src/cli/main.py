"""Argument parsing, logging setup and exit codes of the command-line front end."""

import argparse
import logging
import sys

from baseline.nearest import BaselineError
from cli import commands
from cli.config import CONFIG_FIELDS, ConfigError, build_config
from constants.config import LOGGING_FORMAT_STR_SUFFIX
from corpus.units import CorpusError
from finetune.encoding import FineTuneError
from ingest.report import IngestError
from metrics.confusion import MetricsError
from project.store import MissingStageError, ProjectError
from splitter.split import SplitError

EXIT_MISSING_STAGE = 2
EXIT_VALIDATION = 3
EXIT_TRANSPORT = 4

VALIDATION_ERRORS = (
    ConfigError,
    CorpusError,
    IngestError,
    SplitError,
    MetricsError,
    BaselineError,
    ProjectError,
)


def _bucket_bounds(text):
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got '{text}'")


def _common_options():
    """Options accepted both before and after the subcommand."""
    common = argparse.ArgumentParser(add_help=False)
    add = common.add_argument
    suppress = argparse.SUPPRESS
    add("--project", default=suppress, help="project directory (default: .)")
    add("--config", default=suppress, help="YAML file of settings, overridden by flags")
    add("--seed", type=int, default=suppress, help="seed for every random choice")
    add("--api-base", default=suppress, help="OpenAI compatible API base URL")
    add("--api-key-file", default=suppress, help="read the API key from this file")
    add("--model", default=suppress, help="base model to fine-tune")
    add("--dialect", choices=["completion", "chat"], default=suppress)
    add("--ratio", type=float, default=suppress, help="train fraction of the split")
    add("--buckets", type=_bucket_bounds, default=suppress, help="length bucket upper bounds, e.g. 5,10,20,40")
    add("--pay-rate", type=float, default=suppress, help="LAI review pay rate")
    add("--concurrency", type=int, default=suppress, help="max requests in flight")
    add("--poll-interval", type=float, default=suppress, help="seconds between job polls")
    add("--poll-timeout", type=float, default=suppress, help="seconds to wait for a job")
    add("--margin", type=int, default=suppress, help="|tp - tn| considered balanced")
    add("--backend", choices=["remote", "baseline"], default=suppress)
    add("--format", choices=["text", "json", "csv"], default=suppress)
    add("--mock-scenario", default=suppress, help="serve API calls from a scripted scenario file")
    add("-v", "--verbose", action="store_true", default=suppress, help="debug logging")
    return common


def build_parser():
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="python3 -m cli", description="Predict which MT segments need post-editing.", parents=[common]
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def subcommand(name, handler, help_text):
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        sub.set_defaults(handler=handler)
        return sub

    sub = subcommand("init", commands.cmd_init, "create a project directory")
    sub.add_argument("--run-id", help="run id (default: project directory name)")

    sub = subcommand("ingest", commands.cmd_ingest, "parse and validate a corpus")
    sub.add_argument("input", help="corpus file (the MT export for TMX)")
    sub.add_argument("--pe-file", help="post-edited TMX export")
    sub.add_argument("--input-format", choices=["tsv", "jsonl", "tmx"], help="default: from the file suffix")
    sub.add_argument("--lang-pair", required=True, help="e.g. en-it")
    sub.add_argument("--declared-count", type=int, help="expected number of records")

    subcommand("split", commands.cmd_split, "length-stratified train/test split")
    subcommand("prepare", commands.cmd_prepare, "write the fine-tuning training file")

    sub = subcommand("finetune", commands.cmd_finetune, "start, poll or read a fine-tuning job")
    sub.add_argument("action", choices=["start", "status", "events"])
    sub.add_argument("--hyperparam", action="append", help="NAME=VALUE, e.g. n_epochs=4")

    sub = subcommand("predict", commands.cmd_predict, "classify the test set")
    sub.add_argument("--baseline-file", help="replay a baseline saved by another run instead of training one")

    sub = subcommand("eval", commands.cmd_eval, "confusion matrix and derived metrics")
    sub.add_argument("--matrix", help="literal tp,fp,tn,fn counts instead of a project")
    sub.add_argument("--export-lai", action="store_true", help="write unit_id,lai CSV")

    sub = subcommand("savings", commands.cmd_savings, "cost savings scenarios")
    sub.add_argument("--matrix", help="literal tp,fp,tn,fn counts instead of a project")
    sub.add_argument("--sweep", action="store_true", help="also sweep pay rates 10%% to 40%%")

    sub = subcommand("compare", commands.cmd_compare, "accuracy table across models")
    sub.add_argument("--run", action="append", required=True, help="NAME=TP,FP,TN,FN or NAME=@PROJECT_DIR")

    sub = subcommand("curve", commands.cmd_curve, "training-set-size learning curve")
    sub.add_argument("--point", action="append", help="SIZE=TP,FP,TN,FN")
    sub.add_argument("--sizes", help="comma separated training sizes, computed with the baseline")

    sub = subcommand("profile", commands.cmd_profile, "TP versus TN profile per language pair")
    sub.add_argument("--pair", action="append", required=True, help="LANG_PAIR=TP,FP,TN,FN")
    return parser


def _fail(code, kind, error):
    message = " ".join(str(error).split())
    sys.stderr.write(f"error: {kind}: {message}\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO,
        format=LOGGING_FORMAT_STR_SUFFIX,
    )
    try:
        overrides = {name: getattr(args, name, None) for name in CONFIG_FIELDS}
        config = build_config(overrides, getattr(args, "config", None))
        args.handler(args, config)
    except MissingStageError as e:
        return _fail(EXIT_MISSING_STAGE, "missing_stage", e)
    except VALIDATION_ERRORS as e:
        return _fail(EXIT_VALIDATION, "validation", e)
    except FineTuneError as e:
        return _fail(EXIT_TRANSPORT, "transport", e)
    except OSError as e:
        return _fail(EXIT_VALIDATION, "validation", e)
    return 0



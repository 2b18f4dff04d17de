"""``evifuse`` command line.

Subcommands: train, eval, sweep, report, gen-data.  Exit codes: 0 success,
1 configuration error, 2 data error, 3 numeric divergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import build_run_config, read_config_file
from .data import SPLITS
from .errors import ConfigError, DataError, EvifuseError
from .fusion import STRATEGIES
from .evidence import GATING_FORMULAS
from .runner import (
    DEFAULT_LAMBDAS,
    load_datasets,
    run_eval,
    run_report,
    run_sweep,
    run_train,
    scores_table,
    sweep_table,
    write_datasets,
)

log = logging.getLogger("evifuse")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # Usage errors are configuration errors.
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def _run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key=value configuration file")
    p.add_argument("--seed", type=int)
    p.add_argument("--lambda", dest="lam", type=float, help="evidence regularizer weight")
    p.add_argument("--fusion", choices=STRATEGIES)
    p.add_argument("--gating", choices=GATING_FORMULAS)
    p.add_argument("--invert-gating", action="store_true", default=None,
                   help="strategy c keeps the most uncertain branch")
    p.add_argument("--no-evidential", action="store_true", default=None,
                   help="train on the classification loss alone")
    p.add_argument("--modalities", help="comma-separated subset of text,image,pretrained")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--synth-standard", action="store_true", help="use the standard synthetic benchmark")
    for split in SPLITS:
        p.add_argument(f"--{split}", type=Path, help=f"{split} split in CoNLL format")
    p.add_argument("--features", nargs="+", metavar="SPEC",
                   help="EVIFEAT files for train, dev, test in that order; each SPEC is "
                        "path or modality=path, several joined by commas")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="evifuse", description="Evidential multimodal fusion for sequence labeling.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train one model and write metrics, checkpoint and config")
    _run_options(p)

    p = sub.add_parser("eval", help="score a checkpoint on a split")
    _run_options(p)
    p.add_argument("--checkpoint", type=Path, help="defaults to <out>/model.ckpt")
    p.add_argument("--split", choices=SPLITS, default="test")

    p = sub.add_parser("sweep", help="train once per lambda plus an evidential-off baseline")
    _run_options(p)
    p.add_argument("--lambdas", type=float, nargs="+", default=list(DEFAULT_LAMBDAS))

    p = sub.add_parser("report", help="uncertainty curves and a strategy comparison table")
    p.add_argument("metrics", type=Path, nargs="+", help="metrics.jsonl files")
    p.add_argument("--out", type=Path, default=Path("report"))
    p.add_argument("--gating", choices=GATING_FORMULAS, default="var_mu")

    p = sub.add_parser("gen-data", help="write a synthetic dataset as CoNLL and EVIFEAT files")
    _run_options(p)
    return parser


def resolve_config(args: argparse.Namespace):
    """Config file values overridden by explicit flags."""
    raw = read_config_file(args.config) if args.config else {}
    flags = {
        "seed": args.seed,
        "lambda": args.lam,
        "fusion.strategy": args.fusion,
        "fusion.gating": args.gating,
        "fusion.invert_gating": args.invert_gating,
        "loss.evidential": False if args.no_evidential else None,
        "modalities": args.modalities,
        "epochs": args.epochs,
        "lr": args.lr,
        "out": args.out,
    }
    raw.update({k: str(v).lower() if isinstance(v, bool) else str(v) for k, v in flags.items() if v is not None})
    files = {s: getattr(args, s) for s in SPLITS if getattr(args, s) is not None}
    if args.synth_standard and (files or args.features):
        raise ConfigError("--synth-standard cannot be combined with data files")
    if args.synth_standard:
        raw["data.source"] = "synth"
        for split in SPLITS:
            raw.pop(f"data.{split}", None)
            raw.pop(f"data.{split}.features", None)
    if files:
        raw["data.source"] = "files"
        raw.update({f"data.{s}": str(p) for s, p in files.items()})
    if args.features:
        if len(args.features) > len(SPLITS):
            raise ConfigError(f"--features takes at most {len(SPLITS)} specs (train, dev, test)")
        raw.update({f"data.{s}.features": spec for s, spec in zip(SPLITS, args.features)})
    return build_run_config(raw)


def _cmd_train(args) -> int:
    cfg = resolve_config(args)
    outcome = run_train(cfg)
    print(scores_table(outcome.test_scores), end="")
    print(f"best epoch {outcome.result.best_epoch}; outputs in {outcome.out}")
    return 0


def _cmd_eval(args) -> int:
    cfg = resolve_config(args)
    checkpoint = args.checkpoint or cfg.out / "model.ckpt"
    data = load_datasets(cfg)[args.split]
    scores, unc, _ = run_eval(checkpoint, data)
    cfg.out.mkdir(parents=True, exist_ok=True)
    payload = {"split": args.split, "checkpoint": str(checkpoint), "metrics": scores.to_dict(), "uncertainty": unc}
    (cfg.out / f"eval_{args.split}.json").write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")
    print(scores_table(scores), end="")
    return 0


def _cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    rows = run_sweep(cfg, args.lambdas)
    print(sweep_table(rows), end="")
    return 0


def _cmd_report(args) -> int:
    rows = run_report(args.metrics, args.out, args.gating)
    print((args.out / "report.txt").read_text(encoding="utf-8"), end="")
    return 0 if rows else 1


def _cmd_gen_data(args) -> int:
    cfg = resolve_config(args)
    if cfg.synth is None:
        raise ConfigError("gen-data only writes synthetic data; drop --train/--dev/--test")
    for path in write_datasets(load_datasets(cfg), cfg.out):
        print(path)
    return 0


COMMANDS = {
    "train": _cmd_train,
    "eval": _cmd_eval,
    "sweep": _cmd_sweep,
    "report": _cmd_report,
    "gen-data": _cmd_gen_data,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except EvifuseError as exc:
        print(f"evifuse {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, OSError) as exc:
        # Anything not already classified came from reading inputs.
        print(f"evifuse {args.command}: data error: {exc}", file=sys.stderr)
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point.

Settings come from an optional flat ``key = value`` config file (``--config``)
and are overridden by ``--key value`` flags. Keys are the ``TrainConfig``
field names plus the path keys in ``PATH_KEYS``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import load_task1_csv, load_task2_csv, record_tokens, to_examples
from .embed import load_word2vec_binary
from .errors import DataError, DimMismatch, HumorError, NumericError
from .gradcheck import GradcheckConfig, gradcheck
from .metrics import compare_pairs, task1_report, task2_report
from .text import Vocab, build_vocab
from .train import TrainConfig, new_state, predict_examples, train

log = logging.getLogger("edithumor")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

PATH_KEYS = (
    "train_csv",
    "dev_csv",
    "test_csv",
    "embeddings",
    "vocab",
    "checkpoint",
    "output_dir",
    "input",
    "output",
    "predictions",
    "gold",
    "report",
)
EXTRA_KEYS = {"rmse_at_basis": str, "samples": int, "step": float, "tolerance": float}

TRAIN_FILES = ("vocab.txt", "history.csv", "last.ckpt", "best.ckpt")
GRADCHECK_TRAIN_KEYS = ("seed", "summary", "output_relu")


class UsageError(Exception):
    pass


def _parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _key_types() -> dict:
    types = {}
    for f in dataclasses.fields(TrainConfig):
        t = f.type if isinstance(f.type, str) else f.type.__name__
        if t.startswith("bool"):
            types[f.name] = _parse_bool
        elif t.startswith("int"):
            types[f.name] = int
        elif t.startswith("float | None"):
            types[f.name] = lambda s: None if s.strip().lower() in ("", "none") else float(s)
        elif t.startswith("float"):
            types[f.name] = float
        else:
            types[f.name] = str
    types.update({k: str for k in PATH_KEYS})
    types.update(EXTRA_KEYS)
    return types


KEY_TYPES = _key_types()


def read_config_file(path: str | Path) -> dict[str, str]:
    values = {}
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                key, _, value = line.partition(" ")
            key = key.strip().replace("-", "_")
            if key not in KEY_TYPES:
                raise UsageError(f"{path}:{n}: unknown key {key!r}")
            values[key] = value.strip()
    return values


def resolve(args: argparse.Namespace) -> dict:
    """Merge config file values with command-line overrides, typed."""
    raw = read_config_file(args.config) if args.config else {}
    for key in KEY_TYPES:
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    out = {}
    for key, value in raw.items():
        try:
            out[key] = KEY_TYPES[key](value)
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {exc}") from None
    return out


def train_config(values: dict, base: TrainConfig | None = None) -> TrainConfig:
    fields = {f: values[f] for f in TrainConfig.field_names() if f in values}
    try:
        if base is not None:
            return dataclasses.replace(base, **fields)
        return TrainConfig(**fields)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _require(values: dict, *keys: str) -> None:
    for key in keys:
        if not values.get(key):
            raise UsageError(f"--{key} is required")


def _write_rows(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def cmd_train(values: dict) -> int:
    _require(values, "train_csv", "embeddings", "output_dir")
    config = train_config(values)
    out = Path(values["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    emb_seed, train_seed = np.random.SeedSequence(config.seed).spawn(2)

    records = load_task1_csv(values["train_csv"], require_labels=True)
    vocab = build_vocab(record_tokens(r) for r in records)
    vocab.save(out / "vocab.txt")
    table, coverage = load_word2vec_binary(
        values["embeddings"], vocab, np.random.default_rng(emb_seed), dim=config.embed_dim
    )
    train_ex, report = to_examples(records, vocab, config.seq_len)
    if report.n_empty:
        log.warning("%d training headlines are empty after tokenizing", report.n_empty)
    log.info(
        "train: %d records, %d empty after tokenizing, %d truncated, vocab %d, "
        "pretrained hits %d / misses %d",
        report.n_records, report.n_empty, report.n_truncated, len(vocab),
        coverage.hits, coverage.misses,
    )
    dev_ex = None
    if values.get("dev_csv"):
        dev_records = load_task1_csv(values["dev_csv"], require_labels=True)
        dev_ex, _ = to_examples(dev_records, vocab, config.seq_len)

    state = new_state(config, len(vocab), table.matrix, rng=np.random.default_rng(train_seed))
    result = train(train_ex, config, len(vocab), dev_ex, state=state)

    save_checkpoint(result.state, out / "last.ckpt")
    save_checkpoint(result.best, out / "best.ckpt")
    with open(out / "history.csv", "w", encoding="utf-8", newline="") as f:
        f.write(f"# seed={config.seed}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["epoch", "train_mse", "dev_rmse"])
        for epoch, mse, dev in result.history:
            writer.writerow([epoch, _fmt(mse), "" if math.isnan(dev) else _fmt(dev)])
    if result.history and not math.isnan(result.history[-1][2]):
        best = min(h[2] for h in result.history)
        print(f"final dev RMSE {result.history[-1][2]:.4f} (best {best:.4f} at epoch {result.best_epoch})")
    else:
        print("training finished (no dev set)")
    return EXIT_OK


def _load_model(values: dict):
    _require(values, "checkpoint")
    state = load_checkpoint(values["checkpoint"])
    vocab_path = values.get("vocab") or Path(values["checkpoint"]).with_name("vocab.txt")
    vocab = Vocab.load(vocab_path)
    if len(vocab) != state.spec.vocab_size:
        raise DimMismatch(
            f"vocabulary {vocab_path} has {len(vocab)} entries, checkpoint expects {state.spec.vocab_size}"
        )
    return state, vocab


def _is_task2(path) -> bool:
    with open(path, encoding="utf-8", newline="") as f:
        header = next(csv.reader(f), [])
    return "original1" in header


def cmd_predict(values: dict) -> int:
    _require(values, "input", "output")
    state, vocab = _load_model(values)
    clamp_out = values.get("clamp_eval", state.config.clamp_eval)
    L = state.config.seq_len
    if _is_task2(values["input"]):
        pairs = load_task2_csv(values["input"])
        ex_a, _ = to_examples([p.record_a for p in pairs], vocab, L)
        ex_b, _ = to_examples([p.record_b for p in pairs], vocab, L)
        pred_a = predict_examples(state, ex_a, clamp_out)
        pred_b = predict_examples(state, ex_b, clamp_out)
        labels = compare_pairs(pred_a, pred_b)
        _write_rows(values["output"], ["id", "pred_label"], [(p.id, int(l)) for p, l in zip(pairs, labels)])
    else:
        records = load_task1_csv(values["input"])
        examples, _ = to_examples(records, vocab, L)
        pred = predict_examples(state, examples, clamp_out)
        _write_rows(values["output"], ["id", "pred"], [(r.id, _fmt(p)) for r, p in zip(records, pred)])
    return EXIT_OK


def _read_predictions(path, column: str, cast) -> dict:
    preds = {}
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if not reader.fieldnames or "id" not in reader.fieldnames or column not in reader.fieldnames:
            raise DataError(f"{path}: expected columns id,{column}")
        for row in reader:
            if row["id"] in preds:
                raise DataError(f"{path}: duplicate id {row['id']}")
            try:
                preds[row["id"]] = cast(row[column])
            except (TypeError, ValueError):
                raise DataError(f"{path}: bad {column} for id {row['id']}") from None
    return preds


def _join(preds: dict, gold_ids: list[str]) -> list:
    for gid in gold_ids:
        if gid not in preds:
            raise DataError(f"id mismatch: gold id {gid} has no prediction")
    gold_set = set(gold_ids)
    for pid in preds:
        if pid not in gold_set:
            raise DataError(f"id mismatch: predicted id {pid} not in gold file")
    return [preds[g] for g in gold_ids]


def _emit(report, values: dict) -> None:
    text = report.to_json()
    print(text)
    path = values.get("report") or Path(values["predictions"]).with_suffix(".metrics.json")
    report.save(path)


def cmd_eval_task1(values: dict) -> int:
    _require(values, "predictions", "gold")
    gold = load_task1_csv(values["gold"], require_labels=True)
    preds = _join(_read_predictions(values["predictions"], "pred", float), [r.id for r in gold])
    clamp_on = values.get("clamp_eval", True)
    report = task1_report(
        preds,
        [r.mean_grade for r in gold],
        basis=values.get("rmse_at_basis", "truth"),
        clamp_range=(0.0, 3.0) if clamp_on else None,
    )
    _emit(report, values)
    return EXIT_OK


def cmd_eval_task2(values: dict) -> int:
    _require(values, "predictions", "gold")
    gold = load_task2_csv(values["gold"], require_labels=True)
    for p in gold:
        if p.record_a.mean_grade is None or p.record_b.mean_grade is None:
            raise DataError(f"gold pair {p.id} lacks meanGrade values")
    preds = _join(_read_predictions(values["predictions"], "pred_label", int), [p.id for p in gold])
    report = task2_report(
        [p.label for p in gold],
        preds,
        [p.record_a.mean_grade for p in gold],
        [p.record_b.mean_grade for p in gold],
    )
    _emit(report, values)
    return EXIT_OK


def cmd_gradcheck(values: dict) -> int:
    keys = GRADCHECK_TRAIN_KEYS + ("samples", "step", "tolerance")
    try:
        config = GradcheckConfig(**{k: values[k] for k in keys if k in values})
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = gradcheck(config)
    for line in report.lines():
        print(line)
    print("PASS" if report.passed else f"FAIL: {', '.join(report.failures)}")
    return EXIT_OK if report.passed else EXIT_NUMERIC


COMMANDS = {
    "train": (cmd_train, "train a model and write vocab, history and checkpoints",
              ("train_csv", "dev_csv", "embeddings", "output_dir")),
    "predict": (cmd_predict, "predict grades (Task 1) or funnier-side labels (Task 2)",
                ("checkpoint", "vocab", "input", "output")),
    "eval-task1": (cmd_eval_task1, "score id,pred against a labeled Task-1 file",
                   ("predictions", "gold", "report", "rmse_at_basis")),
    "eval-task2": (cmd_eval_task2, "score id,pred_label against a labeled Task-2 file",
                   ("predictions", "gold", "report")),
    "gradcheck": (cmd_gradcheck, "finite-difference check of the model's gradients",
                  ("samples", "step", "tolerance")),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="edithumor", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    train_keys = TrainConfig.field_names()
    for name, (_, help_text, keys) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("-v", "--verbose", action="store_true")
        for key in keys:
            p.add_argument(f"--{key}", dest=key, metavar=key.upper())
        extra = GRADCHECK_TRAIN_KEYS if name == "gradcheck" else train_keys
        for key in extra:
            p.add_argument(f"--{key}", dest=key, metavar="VALUE")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    func = COMMANDS[args.command][0]
    try:
        values = resolve(args)
        return func(values)
    except UsageError as exc:
        print(f"edithumor {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"edithumor {args.command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (HumorError, OSError) as exc:
        print(f"edithumor {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA

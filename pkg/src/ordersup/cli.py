"""Command-line entry point: ``ordersup <subcommand> ...``.

Machine-readable summaries go to stdout as JSON, diagnostics to stderr.
Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import os
import sys
import tempfile

from . import __version__
from .corpus import (
    CorpusStats,
    filter_min_steps,
    load_corpus,
    prepend_ingredient_step,
    select_fixed_step_subset,
    write_recipes,
)
from .errors import DataError
from .gradcheck import LOSSES, grad_check
from .permutation import DEFAULT_POOL_SIZE, PermutationSet, generate_max_hamming_set
from .synthetic import synthetic_recipes
from .tasks import (
    GenerationReport,
    gen_emb_reg,
    gen_perm_class,
    gen_skip_clip,
    read_examples,
    write_examples,
)
from .tracking import read_grids, score
from .training import TASK_ALIASES, TrainConfig, train

log = logging.getLogger("ordersup")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
GEN_TASKS = ("permclass", "embreg-lehmer", "embreg-hamming", "skipclip")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def pipeline_config(command, args) -> dict:
    """Echo of the invocation, embedded in every output."""
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    return {"tool": "ordersup", "version": __version__, "command": command, "args": flags}


@contextlib.contextmanager
def atomic_write(path):
    """Write to a temporary sibling and rename on success; nothing is left on failure."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ordersup-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def write_meta(path, meta):
    with atomic_write(path + ".meta.json") as fh:
        json.dump(meta, fh, sort_keys=True, indent=2)
        fh.write("\n")


def emit(obj):
    print(json.dumps(obj, sort_keys=True))


# ----------------------------------------------------------------- commands


def cmd_ingest(args):
    reader = load_corpus(args.input, args.source)
    stats = CorpusStats()
    read = 0

    def tally(recipes):
        nonlocal read
        for r in recipes:
            read += 1
            yield r

    def counted(recipes):
        for r in recipes:
            stats.add(r)
            yield r

    stream = tally(reader)
    if args.prepend_ingredients:
        stream = map(prepend_ingredient_step, stream)
    stream = filter_min_steps(stream, args.min_steps)
    if args.n_steps is not None:
        stream = select_fixed_step_subset(stream, args.n_steps)

    meta = pipeline_config("ingest", args)
    with atomic_write(args.out) as fh:
        kept = write_recipes(counted(stream), fh)
    write_meta(args.out, meta)
    if args.stats_out:
        with atomic_write(args.stats_out) as fh:
            json.dump(stats.to_dict(), fh, sort_keys=True)
            fh.write("\n")
    for lineno, msg in reader.skipped:
        print(f"{args.input}:{lineno}: skipped: {msg}", file=sys.stderr)
    emit({
        "read": read,
        "skipped_lines": [lineno for lineno, _ in reader.skipped],
        "kept": kept,
        "stats": stats.to_dict(),
        "meta": meta,
    })
    return EXIT_OK


def cmd_permset(args):
    pset = generate_max_hamming_set(args.n_steps, args.size, args.seed, args.pool)
    meta = pipeline_config("permset", args)
    with atomic_write(args.out) as fh:
        fh.write(pset.to_json(meta))
    emit({
        "n_steps": pset.n_steps,
        "set_size": len(pset),
        "min_pairwise_hamming": pset.min_pairwise_distance(),
        "out": args.out,
    })
    return EXIT_OK


def cmd_gen(args):
    recipes = load_corpus(args.input)
    report = GenerationReport()
    if args.task == "skipclip":
        examples = gen_skip_clip(recipes, args.K, args.M, args.seed, args.copies, report)
    else:
        if not args.permset:
            raise UsageError(f"--permset is required for task {args.task}")
        pset = PermutationSet.load(args.permset)
        ref = args.permset_ref or args.permset
        if args.task == "permclass":
            examples = gen_perm_class(recipes, pset, args.seed, ref, args.copies, report,
                                      strict=False)
        else:
            kind = args.task.split("-", 1)[1]
            examples = gen_emb_reg(recipes, pset, kind, args.seed, ref, args.copies, report,
                                   strict=False)
    meta = pipeline_config("gen", args)
    with atomic_write(args.out) as fh:
        write_examples(examples, fh)
    write_meta(args.out, meta)
    if args.task != "skipclip":
        for pos, rid, msg in report.errors:
            print(f"record {pos}: {msg}", file=sys.stderr)
    elif report.skipped:
        print(f"skipped {report.skipped} recipes shorter than K+M", file=sys.stderr)
    for lineno, msg in recipes.skipped:
        print(f"{args.input}:{lineno}: skipped: {msg}", file=sys.stderr)
    summary = report.to_dict()
    summary["malformed_lines"] = len(recipes.skipped)
    summary["out"] = args.out
    emit(summary)
    return EXIT_OK


def _num_classes(args):
    if args.num_classes:
        return args.num_classes
    path = args.permset
    if path is None:
        first = next(iter(read_examples(args.examples)), None)
        ref = getattr(first, "permset_ref", "") if first is not None else ""
        candidates = [os.path.join(os.path.dirname(args.examples), ref), ref] if ref else []
        path = next((c for c in candidates if os.path.isfile(c)), None)
    if path is None:
        raise UsageError("cannot determine the number of classes; pass --num-classes "
                         "or --permset")
    return len(PermutationSet.load(path))


def cmd_train(args):
    cfg_dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            cfg_dict = json.load(fh)
    overrides = {
        "batch_size": args.batch_size,
        "learning_rate": args.lr,
        "weight_decay": args.weight_decay,
        "warmup_steps": args.warmup,
        "margin": args.margin,
        "epochs": args.epochs,
        "feature_dim": args.feature_dim,
        "embed_dim": args.embed_dim,
    }
    cfg_dict.update({k: v for k, v in overrides.items() if v is not None})
    cfg_dict["seed"] = args.seed
    try:
        cfg = TrainConfig.from_dict(cfg_dict)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad training config: {exc}") from exc

    task = TASK_ALIASES[args.task]
    n_classes = _num_classes(args) if task == "perm_class" else None
    meta = pipeline_config("train", args)
    log_path = args.out_log
    with contextlib.ExitStack() as stack:
        log_fh = stack.enter_context(atomic_write(log_path)) if log_path else None
        model, records = train(task, args.examples, cfg, n_classes, log_fh)
    if log_path:
        write_meta(log_path, meta)
    with atomic_write(args.out_model) as fh:
        json.dump(model.to_dict(meta), fh, sort_keys=True)
        fh.write("\n")
    emit({
        "task": task,
        "steps": len(records),
        "first_loss": records[0]["loss"] if records else None,
        "final_loss": records[-1]["loss"] if records else None,
        "out_model": args.out_model,
    })
    return EXIT_OK


def cmd_gradcheck(args):
    names = LOSSES if args.loss == "all" else (args.loss,)
    results = {n: grad_check(n, args.trials, args.eps, args.seed) for n in names}
    ok = all(v < args.tol for v in results.values())
    emit({"max_rel_error": results, "tol": args.tol, "passed": ok})
    return EXIT_OK if ok else EXIT_INTERNAL


def cmd_score(args):
    gold = read_grids(args.gold, args.format)
    pred = read_grids(args.pred, args.format)
    emit(score(gold, pred).to_dict())
    return EXIT_OK


def cmd_synth(args):
    recipes = synthetic_recipes(args.n, args.n_steps, args.seed, args.filler_words)
    with atomic_write(args.out) as fh:
        n = write_recipes(recipes, fh)
    write_meta(args.out, pipeline_config("synth", args))
    emit({"recipes": n, "out": args.out})
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser():
    p = _Parser(prog="ordersup", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"ordersup {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="filter and augment a recipe JSONL corpus")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--source", default=None, help="source tag stamped on every recipe")
    s.add_argument("--min-steps", type=int, default=4,
                   help="keep recipes with strictly more steps than this (default 4)")
    s.add_argument("--prepend-ingredients", action="store_true")
    s.add_argument("--n-steps", type=int, default=None,
                   help="additionally keep only recipes with exactly this many steps")
    s.add_argument("--stats-out", default=None)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("permset", help="generate a max-Hamming permutation set")
    s.add_argument("--n-steps", type=int, default=6)
    s.add_argument("--size", type=int, default=100)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--pool", type=int, default=DEFAULT_POOL_SIZE)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_permset)

    s = sub.add_parser("gen", help="generate training examples")
    s.add_argument("--task", choices=GEN_TASKS, required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--permset", default=None)
    s.add_argument("--permset-ref", default=None,
                   help="identifier recorded in examples (default: the --permset path)")
    s.add_argument("--K", type=int, default=4, help="context steps for skipclip")
    s.add_argument("--M", type=int, default=4, help="target steps for skipclip")
    s.add_argument("--copies", type=int, default=1, help="examples per recipe")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen)

    s = sub.add_parser("train", help="train the reference model")
    s.add_argument("--task", choices=sorted(TASK_ALIASES), required=True)
    s.add_argument("--examples", required=True)
    s.add_argument("--config", default=None, help="JSON file with TrainConfig fields")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out-model", required=True)
    s.add_argument("--out-log", default=None)
    s.add_argument("--num-classes", type=int, default=None)
    s.add_argument("--permset", default=None)
    s.add_argument("--batch-size", type=int, default=None)
    s.add_argument("--lr", type=float, default=None)
    s.add_argument("--weight-decay", type=float, default=None)
    s.add_argument("--warmup", type=int, default=None)
    s.add_argument("--margin", type=float, default=None)
    s.add_argument("--epochs", type=int, default=None)
    s.add_argument("--feature-dim", type=int, default=None)
    s.add_argument("--embed-dim", type=int, default=None)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("gradcheck", help="finite-difference check of the loss gradients")
    s.add_argument("--loss", choices=LOSSES + ("ce", "all"), default="all")
    s.add_argument("--trials", type=int, default=100)
    s.add_argument("--eps", type=float, default=1e-5)
    s.add_argument("--tol", type=float, default=1e-4)
    s.add_argument("--seed", type=int, required=True)
    s.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("score", help="score entity-tracking predictions")
    s.add_argument("--gold", required=True)
    s.add_argument("--pred", required=True)
    s.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")
    s.set_defaults(func=cmd_score)

    s = sub.add_parser("synth", help="write a synthetic position-marked recipe corpus")
    s.add_argument("--n", type=int, default=2000)
    s.add_argument("--n-steps", type=int, default=6)
    s.add_argument("--filler-words", type=int, default=3)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ordersup {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError, json.JSONDecodeError) as exc:
        print(f"ordersup {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"ordersup {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        log.debug("internal error", exc_info=True)
        print(f"ordersup {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface.

One executable with five subcommands:

  score     score one word pair with an operator under an interpretation
  eval      run the hyponymy evaluation harness and emit the report CSV
  train     train per-fold linear mappings and persist them
  graph     solve an entailment graph file and print node assignments
  gradgrid  emit a training-gradient grid as CSV

Machine-readable output (scores, CSV, TSV, model paths) goes to stdout;
logs and the human-readable table go to stderr.  Exit codes: 0 success,
1 usage error, 2 data/runtime error.  ``--embeddings`` falls back to the
ENTVEC_EMBEDDINGS environment variable.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import evaluation, graph, interpret, training
from .embeddings import load_embeddings

__all__ = ["main", "build_parser", "EMBEDDINGS_ENV_VAR"]

EMBEDDINGS_ENV_VAR = "ENTVEC_EMBEDDINGS"


class UsageError(Exception):
    """Bad invocation (missing flag without a fallback); exits 1, not 2."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; the contract here is
    # 1 for usage errors and 2 for data errors, so override.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _add_embeddings_flags(sub) -> None:
    sub.add_argument("--embeddings", default=os.environ.get(EMBEDDINGS_ENV_VAR),
                     help=f"embedding file (default: ${EMBEDDINGS_ENV_VAR})")
    sub.add_argument("--format", default="auto", choices=("auto", "binary", "text"),
                     help="embedding file format (default: sniff the extension)")


def _add_train_flags(sub) -> None:
    sub.add_argument("--epochs", type=int, default=50)
    sub.add_argument("--step-size", type=float, default=0.1)
    sub.add_argument("--batch-size", type=int, default=32)
    sub.add_argument("--l2", type=float, default=0.0)
    sub.add_argument("--d-out", type=int, default=None,
                     help="mapped dimension (default: input dimension)")


def build_parser() -> _Parser:
    parser = _Parser(prog="entvec",
                     description="entailment operators, graph inference and "
                                 "hyponymy evaluation for word embeddings")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("score", help="score one word pair")
    _add_embeddings_flags(p)
    p.add_argument("--interp", default="logodds", choices=("logodds", "dup", "unkdup"))
    p.add_argument("--op", default="bwd", choices=("fwd", "bwd", "fact"))
    p.add_argument("--shift", type=float, default=1.0, help="unkdup shift")
    p.add_argument("hypo", help="hyponym (entailing word)")
    p.add_argument("hyper", help="hypernym (entailed word)")

    p = subs.add_parser("eval", help="run the evaluation harness")
    _add_embeddings_flags(p)
    p.add_argument("--pairs", required=True, help="hypo<TAB>hyper<TAB>label file")
    p.add_argument("--methods", required=True,
                   help="comma-separated method names, e.g. 'unkdup-bwd,dot'")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shift", type=float, default=1.0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--train", action="store_true",
                   help="allow mapped-* methods (trains per fold)")
    _add_train_flags(p)

    p = subs.add_parser("train", help="train per-fold mappings and save them")
    _add_embeddings_flags(p)
    p.add_argument("--pairs", required=True)
    p.add_argument("--op", default="bwd", choices=("fwd", "bwd", "fact", "dif"))
    p.add_argument("--out-dir", required=True, help="directory for fold<i>.model files")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_train_flags(p)

    p = subs.add_parser("graph", help="solve an entailment graph file")
    p.add_argument("--file", required=True)
    p.add_argument("--max-sweeps", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--damping", type=float, default=0.0)
    p.add_argument("--clamp", type=float, default=30.0)

    p = subs.add_parser("gradgrid", help="emit a training-gradient grid")
    p.add_argument("--model", required=True, choices=interpret.GRID_MODELS)
    p.add_argument("--range", nargs=3, type=float, required=True,
                   metavar=("LO", "HI", "STEP"),
                   help="grid range for both axes")
    p.add_argument("--shift", type=float, default=1.0)

    return parser


def _load_table(args):
    if not args.embeddings:
        raise UsageError(
            f"no embeddings file: pass --embeddings or set ${EMBEDDINGS_ENV_VAR}"
        )
    return load_embeddings(args.embeddings, fmt=args.format)


def _cmd_score(args) -> int:
    table = _load_table(args)
    vecs = []
    for word in (args.hypo, args.hyper):
        vec = table.lookup(word)
        if vec is None:
            raise ValueError(f"word {word!r} is not in the embeddings")
        vecs.append(vec)
    interp_obj = interpret.Interpretation(args.interp, args.shift) \
        if args.interp == "unkdup" else interpret.Interpretation(args.interp)
    print(interpret.pair_score(vecs[0], vecs[1], interp_obj, args.op))
    return 0


def _train_config(args, seed) -> training.TrainConfig:
    return training.TrainConfig(step_size=args.step_size, epochs=args.epochs,
                                batch_size=args.batch_size, seed=seed,
                                l2=args.l2, d_out=args.d_out)


def _cmd_eval(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    mapped = [m for m in methods if m in evaluation.MAPPED_METHODS]
    if mapped and not args.train:
        raise ValueError(
            f"methods {mapped} need training; rerun with --train"
        )
    table = _load_table(args)
    dataset = evaluation.load_pairs(args.pairs)
    request = evaluation.EvalRequest(
        dataset=dataset, embeddings=table, methods=methods, shift=args.shift,
        k_folds=args.folds, seed=args.seed, threads=args.threads,
        train_config=_train_config(args, args.seed) if mapped else None,
    )
    report = evaluation.run_eval(request)
    sys.stdout.write(report.to_csv())
    sys.stderr.write(report.to_text())
    return 0


def _cmd_train(args) -> int:
    table = _load_table(args)
    dataset = evaluation.load_pairs(args.pairs)
    kept = [p for p in dataset.pairs if p.hypo in table and p.hyper in table]
    dropped = len(dataset.pairs) - len(kept)
    if not kept:
        raise ValueError("every pair has an out-of-vocabulary word")
    if dropped:
        print(f"dropped {dropped} out-of-vocabulary pairs", file=sys.stderr)
    folded = evaluation.make_folds(evaluation.WordPairDataset(pairs=kept),
                                   args.folds, args.seed)
    results = training.train(folded, table, _train_config(args, args.seed), args.op)
    os.makedirs(args.out_dir, exist_ok=True)
    for i, trained in enumerate(results):
        path = os.path.join(args.out_dir, f"fold{i}.model")
        training.save_model(trained.model, path)
        print(f"fold {i}: {trained.n_train} training pairs, "
              f"final loss {trained.history[-1]:.6f}", file=sys.stderr)
        print(path)
    return 0


def _cmd_graph(args) -> int:
    g = graph.parse_graph_file(args.file)
    cfg = graph.SolverConfig(max_sweeps=args.max_sweeps, tol=args.tol,
                             damping=args.damping, clamp=args.clamp)
    result = graph.graph_infer(g, cfg)
    for name in g.node_names:
        values = "\t".join(f"{v:.9g}" for v in result.assignments[name])
        print(f"{name}\t{values}")
    status = "converged" if result.converged else "did not converge"
    print(f"{status} after {result.sweeps_used} sweeps "
          f"(last delta {result.final_delta:.3g})", file=sys.stderr)
    return 0


def _cmd_gradgrid(args) -> int:
    lo, hi, step = args.range
    grid = interpret.gradient_grid(args.model, (lo, hi, step), (lo, hi, step),
                                   shift=args.shift)
    sys.stdout.write(grid.to_csv())
    return 0


_COMMANDS = {
    "score": _cmd_score,
    "eval": _cmd_eval,
    "train": _cmd_train,
    "graph": _cmd_graph,
    "gradgrid": _cmd_gradgrid,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"entvec: error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"entvec: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

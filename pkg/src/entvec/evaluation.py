"""Hyponymy-detection evaluation: datasets, folds, metrics, baselines, reports.

The dataset is a list of (hyponym, hypernym, label) pairs.  Pairs whose
words are missing from the embedding table are dropped up front and
counted.  Two metrics are reported:

  * 50% accuracy: scores are thresholded so that exactly half of the
    items are predicted positive (the datasets are label-balanced), and
    accuracy is measured at that threshold.  The threshold therefore
    depends on the test scores but not on the test labels.
  * direction accuracy: over the true (positive) pairs only, how often
    the score prefers the hyponym-to-hypernym direction over the
    reverse, with half credit for exact ties.  A symmetric scorer lands
    on exactly 0.5.

Cross-validation folds are built by shuffling, splitting into near-equal
test sets, and then deleting from each training set every pair that
shares a word with that fold's test vocabulary, so a mapped model can
never memorize test words.

Method tokens understood by ``run_eval``:

  logodds-fwd, logodds-bwd, logodds-fact, dup-bwd, unkdup-bwd,
  unkdup-fact   (entailment operators under an interpretation)
  dot, dif, wcos                     (untrained baselines)
  mapped-fwd, mapped-bwd, mapped-fact, mapped-dif
                                     (linear mapping trained per fold)

Mapped methods train on each fold's filtered training pairs and pool the
held-out test scores across folds before computing both metrics.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import interpret
from .embeddings import EmbeddingTable

__all__ = [
    "WordPair",
    "Fold",
    "WordPairDataset",
    "DatasetFormatError",
    "EvalRow",
    "EvalReport",
    "EvalRequest",
    "load_pairs",
    "fifty_percent_accuracy",
    "direction_accuracy",
    "make_folds",
    "baseline_score",
    "run_eval",
    "OPERATOR_METHODS",
    "BASELINE_METHODS",
    "MAPPED_METHODS",
    "ALL_METHODS",
]


class DatasetFormatError(ValueError):
    """Unparseable pair file; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class WordPair:
    hypo: str
    hyper: str
    label: int

    def __post_init__(self):
        if not self.hypo or not self.hyper:
            raise ValueError("pair words must be non-empty")
        if self.hypo == self.hyper:
            raise ValueError(f"pair repeats the word {self.hypo!r}")
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")

    @property
    def tokens(self) -> frozenset:
        return frozenset((self.hypo, self.hyper))


@dataclass(frozen=True)
class Fold:
    train: tuple
    test: tuple
    n_filtered: int  # training pairs removed for sharing a word with the test set


@dataclass
class WordPairDataset:
    pairs: list
    folds: list | None = None

    def __len__(self) -> int:
        return len(self.pairs)

    def positives(self) -> list:
        return [p for p in self.pairs if p.label == 1]


def load_pairs(path) -> WordPairDataset:
    """Read a ``hypo<TAB>hyper<TAB>label`` file, preserving order."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise DatasetFormatError(
                    f"expected 3 tab-separated columns, got {len(fields)}", lineno
                )
            hypo, hyper, label = fields
            if label not in ("0", "1"):
                raise DatasetFormatError(f"bad label {label!r}", lineno)
            try:
                pairs.append(WordPair(hypo, hyper, int(label)))
            except ValueError as exc:
                raise DatasetFormatError(str(exc), lineno) from None
    return WordPairDataset(pairs)


def fifty_percent_accuracy(scores, labels):
    """Accuracy when the top half of the scores is predicted positive.

    Returns (accuracy, threshold); the threshold is the score of the
    last item predicted positive (+inf when floor(n/2) = 0).  Ties are
    broken by stable input order, so the result is deterministic.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim != 1 or scores.shape != labels.shape:
        raise ValueError(f"scores {scores.shape} and labels {labels.shape} must be equal 1-d")
    if scores.size == 0:
        raise ValueError("need at least one scored item")
    if np.any(np.isnan(scores)):
        raise ValueError("scores contain NaN")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    n = scores.size
    n_pos = n // 2
    order = np.argsort(-scores, kind="stable")
    predicted = np.zeros(n, dtype=np.int64)
    predicted[order[:n_pos]] = 1
    threshold = float(scores[order[n_pos - 1]]) if n_pos else np.inf
    accuracy = float(np.mean(predicted == labels))
    return accuracy, threshold


def direction_accuracy(score_fn, positives) -> float:
    """Mean directional correctness of ``score_fn(hypo, hyper)`` on true pairs.

    Correct when the forward score strictly beats the reversed one;
    exact ties earn half credit.
    """
    positives = list(positives)
    if not positives:
        raise ValueError("need at least one positive pair")
    if any(p.label != 1 for p in positives):
        raise ValueError("direction accuracy is defined over positive pairs only")
    credit = 0.0
    for pair in positives:
        fwd = float(score_fn(pair.hypo, pair.hyper))
        rev = float(score_fn(pair.hyper, pair.hypo))
        if fwd > rev:
            credit += 1.0
        elif fwd == rev:
            credit += 0.5
    return credit / len(positives)


def make_folds(dataset: WordPairDataset, k: int, seed: int) -> WordPairDataset:
    """Shuffled k-fold split with lexically disjoint train/test sets."""
    if dataset.folds is not None:
        raise ValueError("dataset already has folds")
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    n = len(dataset.pairs)
    if k > n:
        raise ValueError(f"cannot split {n} pairs into {k} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    folds = []
    for chunk in np.array_split(perm, k):
        test = tuple(sorted(int(i) for i in chunk))
        test_vocab = set()
        for i in test:
            test_vocab |= dataset.pairs[i].tokens
        test_set = set(test)
        train = []
        filtered = 0
        for i in range(n):
            if i in test_set:
                continue
            if dataset.pairs[i].tokens & test_vocab:
                filtered += 1
            else:
                train.append(i)
        train_vocab = set()
        for i in train:
            train_vocab |= dataset.pairs[i].tokens
        assert not (train_vocab & test_vocab), "fold vocabularies overlap"
        folds.append(Fold(train=tuple(train), test=test, n_filtered=filtered))
    assert sorted(i for f in folds for i in f.test) == list(range(n))
    return WordPairDataset(pairs=list(dataset.pairs), folds=folds)


def _hyper_rank_weights(hyper: np.ndarray) -> np.ndarray:
    # w_k = (D - rank_k) / D with rank 0 for the hypernym's largest value
    d = hyper.shape[-1]
    order = np.argsort(-hyper, axis=-1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.broadcast_to(np.arange(d), hyper.shape).copy(), axis=-1)
    return (d - ranks) / d


_BASELINE_ALIASES = {
    "dot": "dot",
    "cosine": "cosine",
    "cos": "cosine",
    "dif": "dif",
    "weighted_cos": "weighted_cos",
    "wcos": "weighted_cos",
}


def baseline_score(kind: str, hypo_vec, hyper_vec):
    """Untrained scorers: dot, cosine, dif (hyper minus hypo), weighted cos.

    Weighted cosine emphasizes the hypernym's larger coordinates: both
    vectors are reweighted by w_k = (D - rank_k)/D, where rank_k is the
    position of hyper_k in descending order, before taking the cosine.
    Accepts (..., d) batches; returns a float for single vectors.
    """
    canon = _BASELINE_ALIASES.get(kind)
    if canon is None:
        raise ValueError(f"unknown baseline {kind!r}; expected one of {sorted(set(_BASELINE_ALIASES))}")
    h = np.asarray(hypo_vec, dtype=np.float64)
    g = np.asarray(hyper_vec, dtype=np.float64)
    if h.shape != g.shape:
        raise ValueError(f"hypo shape {h.shape} != hyper shape {g.shape}")
    if h.ndim == 0 or h.shape[-1] == 0:
        raise ValueError("vectors must have at least one dimension")
    if canon == "dot":
        out = np.sum(h * g, axis=-1)
    elif canon == "dif":
        out = np.sum(g - h, axis=-1)
    else:
        if canon == "weighted_cos":
            w = _hyper_rank_weights(g)
        else:
            w = np.ones_like(g)
        num = np.sum(w * h * g, axis=-1)
        h_norm = np.sqrt(np.sum(w * h * h, axis=-1))
        g_norm = np.sqrt(np.sum(w * g * g, axis=-1))
        if np.any(h_norm == 0.0) or np.any(g_norm == 0.0):
            raise ValueError(f"{canon} is undefined for zero-weight-norm vectors")
        out = num / (h_norm * g_norm)
    return float(out) if np.ndim(out) == 0 else out


OPERATOR_METHODS = {
    "logodds-fwd": (interpret.LOG_ODDS, "fwd"),
    "logodds-bwd": (interpret.LOG_ODDS, "bwd"),
    "logodds-fact": (interpret.LOG_ODDS, "fact"),
    "dup-bwd": (interpret.DUP, "bwd"),
    "unkdup-bwd": (interpret.UNK_DUP, "bwd"),
    "unkdup-fact": (interpret.UNK_DUP, "fact"),
}
BASELINE_METHODS = ("dot", "dif", "wcos")
MAPPED_METHODS = {
    "mapped-fwd": "fwd",
    "mapped-bwd": "bwd",
    "mapped-fact": "fact",
    "mapped-dif": "dif",
}
ALL_METHODS = tuple(OPERATOR_METHODS) + BASELINE_METHODS + tuple(MAPPED_METHODS)


@dataclass(frozen=True)
class EvalRow:
    method: str
    acc50: float
    dir_acc: float
    threshold: float
    n_scored: int
    n_dropped_oov: int


@dataclass(frozen=True)
class EvalReport:
    rows: tuple

    def to_csv(self) -> str:
        lines = ["method,acc50,dir_acc,threshold,n,oov_dropped"]
        for r in self.rows:
            lines.append(
                f"{r.method},{r.acc50:.4f},{r.dir_acc:.4f},{r.threshold:.4f},"
                f"{r.n_scored},{r.n_dropped_oov}"
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        headers = ("method", "acc50", "dir_acc", "threshold", "n", "oov_dropped")
        cells = [headers]
        for r in self.rows:
            cells.append((
                r.method, f"{r.acc50:.4f}", f"{r.dir_acc:.4f}",
                f"{r.threshold:.4f}", str(r.n_scored), str(r.n_dropped_oov),
            ))
        widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells]
        return "\n".join(lines) + "\n"


@dataclass
class EvalRequest:
    dataset: WordPairDataset
    embeddings: EmbeddingTable
    methods: tuple
    shift: float = 1.0
    k_folds: int = 10
    seed: int = 0
    train_config: object = None  # a trainer TrainConfig; defaulted when mapped-* run
    threads: int = 1


def _interp_with_shift(interp, shift):
    if interp.kind == "unkdup" and shift != interp.shift:
        return interpret.Interpretation("unkdup", shift)
    return interp


def _operator_scores(method, hypo_mat, hyper_mat, shift):
    interp_obj, op = OPERATOR_METHODS[method]
    interp_obj = _interp_with_shift(interp_obj, shift)
    return interpret.pair_score(hypo_mat, hyper_mat, interp_obj, op)


def _unsupervised_row(method, hypo_mat, hyper_mat, labels, pos_mask, shift, n_dropped):
    if method in OPERATOR_METHODS:
        scores = _operator_scores(method, hypo_mat, hyper_mat, shift)
        rev = _operator_scores(method, hyper_mat, hypo_mat, shift)
    else:
        scores = baseline_score(method, hypo_mat, hyper_mat)
        rev = baseline_score(method, hyper_mat, hypo_mat)
    acc50, threshold = fifty_percent_accuracy(scores, labels)
    fwd_pos, rev_pos = scores[pos_mask], rev[pos_mask]
    if fwd_pos.size == 0:
        raise ValueError("direction accuracy needs at least one positive pair")
    dir_acc = float(np.mean(np.where(fwd_pos > rev_pos, 1.0, np.where(fwd_pos == rev_pos, 0.5, 0.0))))
    return EvalRow(method, acc50, dir_acc, threshold, int(labels.size), n_dropped)


def _mapped_row(method, dataset, table, hypo_mat, hyper_mat, labels, pos_mask,
                train_config, n_dropped):
    from . import training  # deferred: training depends on this module's types

    op = MAPPED_METHODS[method]
    cfg = train_config if train_config is not None else training.TrainConfig()
    results = training.train(dataset, table, cfg, op)
    n = labels.size
    scores = np.full(n, np.nan)
    rev = np.full(n, np.nan)
    for fold, trained in zip(dataset.folds, results):
        idx = np.asarray(fold.test, dtype=np.int64)
        scores[idx] = training.raw_scores(trained.model, hypo_mat[idx], hyper_mat[idx])
        rev[idx] = training.raw_scores(trained.model, hyper_mat[idx], hypo_mat[idx])
    if np.any(np.isnan(scores)):
        raise ValueError("some pairs were never assigned to a test fold")
    acc50, threshold = fifty_percent_accuracy(scores, labels)
    fwd_pos, rev_pos = scores[pos_mask], rev[pos_mask]
    dir_acc = float(np.mean(np.where(fwd_pos > rev_pos, 1.0, np.where(fwd_pos == rev_pos, 0.5, 0.0))))
    return EvalRow(method, acc50, dir_acc, threshold, int(n), n_dropped)


def run_eval(request: EvalRequest) -> EvalReport:
    """Score every requested method and aggregate both metrics into a report."""
    methods = tuple(request.methods)
    if not methods:
        raise ValueError("no methods requested")
    for m in methods:
        if m not in ALL_METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {ALL_METHODS}")

    table = request.embeddings
    kept = [p for p in request.dataset.pairs if p.hypo in table and p.hyper in table]
    n_dropped = len(request.dataset.pairs) - len(kept)
    if not kept:
        raise ValueError("every pair has an out-of-vocabulary word")

    hypo_mat = np.stack([table.lookup(p.hypo) for p in kept])
    hyper_mat = np.stack([table.lookup(p.hyper) for p in kept])
    labels = np.array([p.label for p in kept], dtype=np.int64)
    pos_mask = labels == 1

    mapped = [m for m in methods if m in MAPPED_METHODS]
    dataset = WordPairDataset(pairs=kept)
    if mapped:
        if request.dataset.folds is not None and n_dropped == 0:
            dataset = WordPairDataset(pairs=kept, folds=request.dataset.folds)
        else:
            dataset = make_folds(dataset, request.k_folds, request.seed)

    def one(method):
        if method in MAPPED_METHODS:
            return _mapped_row(method, dataset, table, hypo_mat, hyper_mat, labels, pos_mask,
                               request.train_config, n_dropped)
        return _unsupervised_row(method, hypo_mat, hyper_mat, labels, pos_mask,
                                 request.shift, n_dropped)

    if request.threads > 1 and len(methods) > 1:
        with ThreadPoolExecutor(max_workers=request.threads) as pool:
            rows = tuple(pool.map(one, methods))
    else:
        rows = tuple(one(m) for m in methods)
    return EvalReport(rows=rows)

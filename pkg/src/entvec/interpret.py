"""Reading raw word embeddings as entailment log-odds vectors.

Raw embedding coordinates are real numbers, so three progressively more
faithful readings map them into the known/unknown log-odds space the
entailment operators expect:

  * log-odds: use the raw vector directly as feature log-odds.
  * dup:      each coordinate states whether its feature is known-true or
              known-false, so the vector is split into a positive copy and
              a negated copy, concatenated (dimension doubles).
  * unk dup:  like dup, but both copies are shifted down by a constant so
              values near zero keep probability mass on "unknown":
              per coordinate v the unknown mass is
              1 - sigma(v - shift) - sigma(-v - shift) > 0, maximal at v = 0.

This module also scores a word-in-context instance: a hidden vector that
unifies the features of a middle word and a context word is inferred by
backward inference, and the score is how well that hidden vector entails
both.  Comparing the gradient of that score with the skip-gram/negative-
sampling gradient log sigma(m . c) is what motivates the readings, and
``gradient_grid`` reproduces that comparison on 1-d instances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionMismatchError,
    entail_backward,
    entail_factorized,
    entail_forward,
    log_sigmoid,
    sigmoid,
)

__all__ = [
    "Interpretation",
    "LOG_ODDS",
    "DUP",
    "UNK_DUP",
    "OPERATOR_NAMES",
    "ContextModelInputs",
    "GradientGrid",
    "transform",
    "unknown_mass",
    "pair_score",
    "unify_backward",
    "context_score",
    "context_score_grad_m",
    "gradient_grid",
    "GRID_MODELS",
]

_KINDS = ("logodds", "dup", "unkdup")

# canonical operator tokens plus the long spellings accepted from callers
OPERATOR_NAMES = {
    "fwd": "fwd",
    "forward": "fwd",
    "bwd": "bwd",
    "backward": "bwd",
    "fact": "fact",
    "factorized": "fact",
}


@dataclass(frozen=True)
class Interpretation:
    """How a raw embedding is read as log-odds; ``shift`` only matters for unkdup."""

    kind: str
    shift: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown interpretation {self.kind!r}; expected one of {_KINDS}")
        if self.kind == "unkdup" and not self.shift > 0:
            raise ValueError(f"unkdup shift must be positive, got {self.shift}")


LOG_ODDS = Interpretation("logodds")
DUP = Interpretation("dup")
UNK_DUP = Interpretation("unkdup")


def transform(raw, interp: Interpretation) -> np.ndarray:
    """Map a raw embedding (shape (..., d)) into entailment log-odds space.

    logodds keeps the vector; dup returns [raw; -raw]; unkdup returns
    [raw - shift; -raw - shift].  The dup/unkdup result has dimension 2d.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(raw)):
        raise ValueError("raw vector contains non-finite values")
    if interp.kind == "logodds":
        return raw.copy()
    if interp.kind == "dup":
        return np.concatenate([raw, -raw], axis=-1)
    return np.concatenate([raw - interp.shift, -raw - interp.shift], axis=-1)


def unknown_mass(values, shift: float = 1.0):
    """Per-coordinate probability of "unknown" under the unkdup reading."""
    values = np.asarray(values, dtype=np.float64)
    out = 1.0 - sigmoid(values - shift) - sigmoid(-values - shift)
    return float(out) if np.ndim(out) == 0 else out


def pair_score(hypo_raw, hyper_raw, interp: Interpretation, op: str):
    """Score "hyponym entails hypernym" for two raw embedding vectors.

    Both vectors are transformed under ``interp``; the hypernym plays the
    entailed side (x) and the hyponym the entailing side (y).  ``op`` is
    one of fwd / bwd / fact.
    """
    canon = OPERATOR_NAMES.get(op)
    if canon is None:
        raise ValueError(f"unknown operator {op!r}; expected fwd, bwd or fact")
    op = canon
    y = transform(hypo_raw, interp)
    x = transform(hyper_raw, interp)
    if op == "fwd":
        return entail_forward(x, y)
    if op == "bwd":
        return entail_backward(y, x)
    return entail_factorized(y, x)


@dataclass(frozen=True)
class ContextModelInputs:
    """A word-in-context instance: middle word, context word, context prior."""

    x_m: np.ndarray
    x_c: np.ndarray
    theta_c: np.ndarray

    def __post_init__(self):
        for name in ("x_m", "x_c", "theta_c"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if not (self.x_m.shape == self.x_c.shape == self.theta_c.shape):
            raise DimensionMismatchError(
                f"x_m {self.x_m.shape}, x_c {self.x_c.shape} and theta_c "
                f"{self.theta_c.shape} must share a shape"
            )

    @property
    def x_c_prime(self) -> np.ndarray:
        """Context vector with prior folded in: theta_c - log sigma(-x_c)."""
        return self.theta_c - log_sigmoid(-self.x_c)


def unify_backward(inputs: ContextModelInputs, interp: Interpretation):
    """Infer the hidden vector(s) entailing both middle and context word.

    Returns (y_plus, y_minus); y_minus is None for the logodds reading,
    which has no negated copy.  Backward inference accumulates
    -log sigma(-.) evidence from each entailed vector on top of the
    combined context term.
    """
    xcp = inputs.x_c_prime
    m = inputs.x_m
    if interp.kind == "logodds":
        return xcp - log_sigmoid(-m), None
    if interp.kind == "dup":
        y_plus = xcp - log_sigmoid(-m)
        y_minus = -xcp - log_sigmoid(m)
        return y_plus, y_minus
    s = interp.shift
    y_plus = xcp - log_sigmoid(-(m - s))
    y_minus = -xcp - log_sigmoid(-(-m - s))
    return y_plus, y_minus


def context_score(inputs: ContextModelInputs, interp: Interpretation) -> float:
    """Log-probability that the unified hidden vector entails both words.

    Each hidden copy Y contributes entail_backward(Y, X_m-part) plus the
    combined context/prior term -sigma(-Y) . X_c'-part.
    """
    xcp = inputs.x_c_prime
    m = inputs.x_m
    y_plus, y_minus = unify_backward(inputs, interp)
    if interp.kind == "logodds":
        return entail_backward(y_plus, m) + float(np.sum(-sigmoid(-y_plus) * xcp))
    if interp.kind == "dup":
        m_plus, m_minus = m, -m
    else:
        m_plus, m_minus = m - interp.shift, -m - interp.shift
    score = entail_backward(y_plus, m_plus) + float(np.sum(-sigmoid(-y_plus) * xcp))
    score += entail_backward(y_minus, m_minus) + float(np.sum(-sigmoid(-y_minus) * (-xcp)))
    return score


def _part_grad(y: np.ndarray, middle_gate: np.ndarray) -> np.ndarray:
    # Each hidden copy contributes -sigma(-Y) * Y to the score, with
    # dY/dx_m = +/-sigma(gate); chain rule gives the closed form below.
    return middle_gate * sigmoid(-y) * (sigmoid(y) * y - 1.0)


def context_score_grad_m(inputs: ContextModelInputs, interp: Interpretation) -> np.ndarray:
    """Analytic gradient of ``context_score`` with respect to x_m (elementwise)."""
    m = inputs.x_m
    y_plus, y_minus = unify_backward(inputs, interp)
    if interp.kind == "logodds":
        return _part_grad(y_plus, sigmoid(m))
    if interp.kind == "dup":
        gate_plus, gate_minus = sigmoid(m), -sigmoid(-m)
    else:
        s = interp.shift
        gate_plus, gate_minus = sigmoid(m - s), -sigmoid(-m - s)
    return _part_grad(y_plus, gate_plus) + _part_grad(y_minus, gate_minus)


GRID_MODELS = ("word2vec", "logodds-bwd", "dup-bwd", "unkdup-bwd")

_MODEL_INTERPS = {
    "logodds-bwd": LOG_ODDS,
    "dup-bwd": DUP,
    "unkdup-bwd": UNK_DUP,
}


@dataclass(frozen=True)
class GradientGrid:
    """d(score)/d(x_m) sampled on a (middle, context) grid of 1-d instances."""

    model: str
    m: np.ndarray
    c: np.ndarray
    grad: np.ndarray  # shape (len(m), len(c))

    def to_csv(self) -> str:
        lines = ["m,c,gradient"]
        for i, mv in enumerate(self.m):
            for j, cv in enumerate(self.c):
                lines.append(f"{mv:.9g},{cv:.9g},{self.grad[i, j]:.9g}")
        return "\n".join(lines) + "\n"


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    if not (np.isfinite(lo) and np.isfinite(hi) and step > 0):
        raise ValueError(f"bad grid range ({lo}, {hi}, {step})")
    n = int(round((hi - lo) / step)) + 1
    if n < 1:
        raise ValueError(f"grid range ({lo}, {hi}, {step}) contains no points")
    return lo + step * np.arange(n)


def gradient_grid(model: str, m_range, c_range, shift: float = 1.0) -> GradientGrid:
    """Training-gradient grid for the skip-gram score or one of its readings.

    For word2vec the score on a 1-d instance is log sigma(m * c), whose
    middle-word gradient is sigma(-m c) * c.  For the interpretation
    models the score is ``context_score`` with theta_c = 0 and the
    gradient is analytic (cross-checked against finite differences in the
    tests).  Grid rows vary m, columns vary c.
    """
    if model not in GRID_MODELS:
        raise ValueError(f"unknown grid model {model!r}; expected one of {GRID_MODELS}")
    m = _axis(*m_range)
    c = _axis(*c_range)
    mm, cc = np.meshgrid(m, c, indexing="ij")
    if model == "word2vec":
        grad = sigmoid(-mm * cc) * cc
    else:
        interp = _MODEL_INTERPS[model]
        if interp.kind == "unkdup":
            interp = Interpretation("unkdup", shift)
        inputs = ContextModelInputs(mm, cc, np.zeros_like(mm))
        grad = context_score_grad_m(inputs, interp)
    return GradientGrid(model=model, m=m, c=c, grad=grad)

"""Mean-field inference over entailment graphs.

Nodes hold vectors of log-odds that each feature is known.  A positive
edge a -> b asserts "a entails b" (every feature known in b is known in
a); a negative edge asserts the entailment does not hold.  Inference
iteratively re-estimates each free node's log-odds as its prior plus
evidence from its neighbours:

  * -log sigma(-X_j) for each entailed neighbour j (a non-negative,
    ReLU-like push upward),
  * +log sigma(X_j) for each entailing neighbour j (non-positive),
  * bounded correction terms for negative edges, using per-dimension
    constants C = prod_{k' != k} (1 - sigma(-X_src,k') sigma(X_tgt,k'))
    recomputed from the current estimates at every update.

Updates sweep the nodes round-robin in declaration order (Gauss-Seidel
style), starting from the priors, until the largest absolute change
drops below ``tol``.  Values are clamped to +/-``clamp`` after every
update so the sigmoids and logs stay finite; a genuinely divergent
negative-edge term (possible when C reaches 1, e.g. in one dimension)
saturates at the clamp instead of erroring.  NaN is always an error.

Graphs can be built programmatically or parsed from a line-oriented
text format:

    # comment
    node <name> <dim> [theta_1 ... theta_dim]   (theta defaults to zeros)
    entail <a> <b>
    notentail <a> <b>
    observe <name> <k> <logodds>                (k is 0-based)

Observing any dimension freezes the whole node: unobserved dimensions
keep their prior value and the node is never updated, only read.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DimensionMismatchError, log_sigmoid, sigmoid

__all__ = [
    "GraphStructureError",
    "GraphFormatError",
    "SolverNumericsError",
    "SolverConfig",
    "SolverResult",
    "EntailmentGraph",
    "forward_infer",
    "backward_infer",
    "neg_relation_constant",
    "graph_infer",
    "parse_graph",
    "parse_graph_file",
]


class GraphStructureError(ValueError):
    """Invalid graph construction: duplicate node, unknown node, self-edge."""


class GraphFormatError(ValueError):
    """Unparseable graph file; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class SolverNumericsError(ValueError):
    """A sweep produced NaN; names the node, dimension and sweep."""


def _as_prob(q, name: str) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    if np.any(q < 0.0) or np.any(q > 1.0) or not np.all(np.isfinite(q)):
        raise ValueError(f"{name} entries must be probabilities in [0, 1]")
    return q


def forward_infer(theta_x, q_y):
    """Marginal of an entailed feature given its entailing side: sigma(theta + log q_y)."""
    theta_x = np.asarray(theta_x, dtype=np.float64)
    q_y = _as_prob(q_y, "q_y")
    if theta_x.shape != q_y.shape:
        raise DimensionMismatchError(
            f"theta_x has shape {theta_x.shape} but q_y has shape {q_y.shape}"
        )
    if np.any(q_y == 0.0):
        raise ValueError("entailing from impossible feature (q_y entry is 0)")
    out = sigmoid(theta_x + np.log(q_y))
    return float(out) if np.ndim(out) == 0 else out


def backward_infer(theta_y, q_x):
    """Marginal of an entailing feature given its entailed side: sigma(theta - log(1 - q_x))."""
    theta_y = np.asarray(theta_y, dtype=np.float64)
    q_x = _as_prob(q_x, "q_x")
    if theta_y.shape != q_x.shape:
        raise DimensionMismatchError(
            f"theta_y has shape {theta_y.shape} but q_x has shape {q_x.shape}"
        )
    if np.any(q_x == 1.0):
        raise ValueError("entailed feature certainly known (q_x entry is 1)")
    out = sigmoid(theta_y - np.log1p(-q_x))
    return float(out) if np.ndim(out) == 0 else out


def _neg_log_factors(x_src: np.ndarray, x_tgt: np.ndarray) -> np.ndarray:
    # log(1 - sigma(-x_src) sigma(x_tgt)) per dimension; -inf when the
    # product saturates to 1 (only possible at extreme log-odds).
    p = sigmoid(-x_src) * sigmoid(x_tgt)
    with np.errstate(divide="ignore"):
        return np.log1p(-p)


def _neg_constants(x_src: np.ndarray, x_tgt: np.ndarray) -> np.ndarray:
    """C_k = prod_{k' != k} (1 - sigma(-x_src,k') sigma(x_tgt,k')), all k at once."""
    logf = _neg_log_factors(x_src, x_tgt)
    zero = np.isneginf(logf)
    n_zero = int(np.count_nonzero(zero))
    if n_zero == 0:
        return np.exp(logf.sum() - logf)
    # A zero factor kills every product that includes it.
    out = np.zeros_like(logf)
    if n_zero == 1:
        k0 = int(np.flatnonzero(zero)[0])
        rest = np.delete(logf, k0)
        out[k0] = np.exp(rest.sum())
    return out


def neg_relation_constant(x_i, x_j, k: int) -> float:
    """Negative-edge bound constant for dimension ``k`` of edge i -> j.

    The product runs over all dimensions except ``k``; the vacuous
    one-dimensional product is 1.
    """
    x_i = np.asarray(x_i, dtype=np.float64)
    x_j = np.asarray(x_j, dtype=np.float64)
    if x_i.shape != x_j.shape:
        raise DimensionMismatchError(f"x_i has shape {x_i.shape} but x_j has shape {x_j.shape}")
    if x_i.ndim != 1:
        raise ValueError("neg_relation_constant expects 1-d vectors")
    if not 0 <= k < x_i.shape[0]:
        raise IndexError(f"dimension index {k} out of range for dim {x_i.shape[0]}")
    return float(_neg_constants(x_i, x_j)[k])


@dataclass(frozen=True)
class SolverConfig:
    max_sweeps: int = 500
    tol: float = 1e-6
    damping: float = 0.0
    clamp: float = 30.0

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be >= 1, got {self.max_sweeps}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not 0.0 <= self.damping < 1.0:
            raise ValueError(f"damping must be in [0, 1), got {self.damping}")
        if not self.clamp > 0:
            raise ValueError(f"clamp must be positive, got {self.clamp}")


@dataclass(frozen=True)
class SolverResult:
    assignments: dict
    converged: bool
    sweeps_used: int
    final_delta: float


class EntailmentGraph:
    """Nodes with prior log-odds, positive/negative edges, and observations."""

    def __init__(self):
        self._theta: dict[str, np.ndarray] = {}
        self._dim: int | None = None
        # dicts used as insertion-ordered sets so sweeps are deterministic
        self._pos: dict[tuple[str, str], None] = {}
        self._neg: dict[tuple[str, str], None] = {}
        self._observed: dict[str, np.ndarray] = {}

    @property
    def dim(self) -> int | None:
        return self._dim

    @property
    def node_names(self) -> list:
        return list(self._theta)

    @property
    def pos_edges(self) -> list:
        return list(self._pos)

    @property
    def neg_edges(self) -> list:
        return list(self._neg)

    @property
    def observations(self) -> dict:
        return {name: vec.copy() for name, vec in self._observed.items()}

    def theta(self, name: str) -> np.ndarray:
        return self._theta[name].copy()

    def add_node(self, name: str, dim: int | None = None, theta=None) -> None:
        if name in self._theta:
            raise GraphStructureError(f"duplicate node {name!r}")
        if theta is None:
            if dim is None:
                raise GraphStructureError(f"node {name!r} needs a dim or a theta vector")
            theta = np.zeros(dim, dtype=np.float64)
        else:
            theta = np.asarray(theta, dtype=np.float64)
            if theta.ndim != 1 or theta.size == 0:
                raise GraphStructureError(f"node {name!r} theta must be a non-empty vector")
            if dim is not None and theta.shape[0] != dim:
                raise GraphStructureError(
                    f"node {name!r} declares dim {dim} but theta has {theta.shape[0]} entries"
                )
        if not np.all(np.isfinite(theta)):
            raise GraphStructureError(f"node {name!r} theta contains non-finite values")
        if self._dim is None:
            self._dim = theta.shape[0]
        elif theta.shape[0] != self._dim:
            raise GraphStructureError(
                f"node {name!r} has dim {theta.shape[0]} but the graph uses dim {self._dim}"
            )
        self._theta[name] = theta.copy()

    def _check_edge(self, a: str, b: str) -> None:
        for name in (a, b):
            if name not in self._theta:
                raise GraphStructureError(f"edge references unknown node {name!r}")
        if a == b:
            raise GraphStructureError(f"self-edge on node {a!r}")

    def add_entail(self, a: str, b: str) -> None:
        """Assert a entails b."""
        self._check_edge(a, b)
        self._pos[(a, b)] = None

    def add_not_entail(self, a: str, b: str) -> None:
        """Assert a does not entail b."""
        self._check_edge(a, b)
        self._neg[(a, b)] = None

    def observe(self, name: str, k: int, value: float) -> None:
        """Pin dimension ``k`` of ``name`` to a known log-odds value.

        Unobserved dimensions of an observed node keep their prior; the
        whole node is excluded from inference.
        """
        if name not in self._theta:
            raise GraphStructureError(f"observation on unknown node {name!r}")
        if not 0 <= k < self._dim:
            raise GraphStructureError(
                f"observation index {k} out of range for dim {self._dim}"
            )
        value = float(value)
        if not np.isfinite(value):
            raise GraphStructureError(f"observation on {name!r} must be finite, got {value}")
        if name not in self._observed:
            self._observed[name] = self._theta[name].copy()
        self._observed[name][k] = value

    def is_observed(self, name: str) -> bool:
        return name in self._observed


def graph_infer(graph: EntailmentGraph, cfg: SolverConfig | None = None) -> SolverResult:
    """Iterate the per-node update to a fixed point; see the module docstring."""
    if cfg is None:
        cfg = SolverConfig()
    names = graph.node_names
    observed = graph.observations
    state = {}
    for name in names:
        start = observed[name] if name in observed else graph.theta(name)
        state[name] = np.clip(start, -cfg.clamp, cfg.clamp)
    free = [name for name in names if not graph.is_observed(name)]

    pos_out = {name: [] for name in names}
    pos_in = {name: [] for name in names}
    neg_out = {name: [] for name in names}
    neg_in = {name: [] for name in names}
    for a, b in graph.pos_edges:
        pos_out[a].append(b)
        pos_in[b].append(a)
    for a, b in graph.neg_edges:
        neg_out[a].append(b)
        neg_in[b].append(a)

    converged = False
    sweeps = 0
    delta = 0.0
    with np.errstate(divide="ignore"):
        for sweep in range(1, cfg.max_sweeps + 1):
            sweeps = sweep
            delta = 0.0
            for name in free:
                old = state[name]
                new = graph.theta(name)
                for j in pos_out[name]:
                    new = new - log_sigmoid(-state[j])
                for j in pos_in[name]:
                    new = new + log_sigmoid(state[j])
                for j in neg_in[name]:
                    # edge j -> i negated; i is the entailed side
                    c = _neg_constants(state[j], old)
                    new = new + np.log1p(-c * sigmoid(state[j])) - np.log1p(-c)
                for j in neg_out[name]:
                    # edge i -> j negated; i is the entailing side
                    c = _neg_constants(old, state[j])
                    new = new - (np.log1p(-c * sigmoid(-state[j])) - np.log1p(-c))
                if np.any(np.isnan(new)):
                    k = int(np.flatnonzero(np.isnan(new))[0])
                    raise SolverNumericsError(
                        f"NaN update for node {name!r} dimension {k} at sweep {sweep}"
                    )
                if cfg.damping > 0.0:
                    new = (1.0 - cfg.damping) * new + cfg.damping * old
                new = np.clip(new, -cfg.clamp, cfg.clamp)
                delta = max(delta, float(np.max(np.abs(new - old))) if new.size else 0.0)
                state[name] = new
            if delta < cfg.tol:
                converged = True
                break

    return SolverResult(
        assignments={name: vec.copy() for name, vec in state.items()},
        converged=converged,
        sweeps_used=sweeps,
        final_delta=delta,
    )


def _parse_float(text: str, what: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise GraphFormatError(f"bad {what} {text!r}", line) from None


def parse_graph(text: str) -> EntailmentGraph:
    """Build a graph from the line-oriented text format (see module docstring)."""
    graph = EntailmentGraph()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        kind, args = fields[0], fields[1:]
        try:
            if kind == "node":
                if len(args) < 2:
                    raise GraphFormatError("node needs a name and a dim", lineno)
                name = args[0]
                try:
                    dim = int(args[1])
                except ValueError:
                    raise GraphFormatError(f"bad dim {args[1]!r}", lineno) from None
                if dim < 1:
                    raise GraphFormatError(f"dim must be positive, got {dim}", lineno)
                thetas = args[2:]
                if thetas and len(thetas) != dim:
                    raise GraphFormatError(
                        f"node {name!r} declares dim {dim} but lists {len(thetas)} priors",
                        lineno,
                    )
                theta = None
                if thetas:
                    theta = [_parse_float(t, "prior", lineno) for t in thetas]
                graph.add_node(name, dim=dim, theta=theta)
            elif kind in ("entail", "notentail"):
                if len(args) != 2:
                    raise GraphFormatError(f"{kind} needs exactly two node names", lineno)
                if kind == "entail":
                    graph.add_entail(args[0], args[1])
                else:
                    graph.add_not_entail(args[0], args[1])
            elif kind == "observe":
                if len(args) != 3:
                    raise GraphFormatError("observe needs a name, an index and a value", lineno)
                try:
                    k = int(args[1])
                except ValueError:
                    raise GraphFormatError(f"bad dimension index {args[1]!r}", lineno) from None
                graph.observe(args[0], k, _parse_float(args[2], "log-odds value", lineno))
            else:
                raise GraphFormatError(f"unknown directive {kind!r}", lineno)
        except GraphStructureError as exc:
            raise GraphFormatError(str(exc), lineno) from None
    return graph


def parse_graph_file(path) -> EntailmentGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(fh.read())

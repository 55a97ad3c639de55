"""Network model: spec parsing, validation, traffic equations, route enumeration.

A network is a set of exponential-service FCFS nodes fed by Poisson sources
and wired with Bernoulli routing.  The routing matrix covers intermediate
nodes only; whatever probability mass a row leaves unassigned is the chance
of forwarding straight to the destination sink ``d``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping

import numpy as np

from .errors import (
    FeedForwardError,
    SingularTrafficError,
    SpecDomainError,
    SpecSchemaError,
    SpecSyntaxError,
)

#: Reserved identifier of the single destination sink.
DESTINATION = "d"

# Slack for probability sums that must equal 1 (float input).
_PROB_TOL = 1e-9
# Row deficits below this are treated as exactly zero (no edge to d).
_DEFICIT_CLAMP = 1e-12


class NetworkType(str, Enum):
    """How a qubit's erasure clock interacts with intermediate nodes."""

    REPEATER_ASSISTED = "repeater_assisted"  # clock restarts at every node
    REPEATER_LESS = "repeater_less"          # clock runs over the total sojourn


# ---------------------------------------------------------------------------
# Erasure models
# ---------------------------------------------------------------------------


class ErasureModel:
    """Erasure probability as a function of sojourn time.

    Implementations provide ``p(w)``, nondecreasing with values in [0, 1],
    accepting scalars or numpy arrays.
    """

    def p(self, w):
        raise NotImplementedError

    def q(self, w):
        # Survival is always derived as 1 - p so table interpolation
        # artifacts cannot compound.
        return 1.0 - self.p(w)

    def breakpoints(self) -> tuple[float, ...]:
        """Kink locations of p, if any; quadrature splits its panels there."""
        return ()


@dataclass(frozen=True)
class ExponentialErasure(ErasureModel):
    """p(w) = 1 - exp(-kappa*w).  kappa = 0 disables erasures entirely."""

    kappa: float

    def __post_init__(self):
        if not np.isfinite(self.kappa) or self.kappa < 0.0:
            raise SpecDomainError(f"kappa must be finite and >= 0, got {self.kappa!r}")

    def p(self, w):
        return -np.expm1(-self.kappa * np.asarray(w, dtype=float))


@dataclass(frozen=True)
class TableErasure(ErasureModel):
    """Piecewise-linear p from (w, p) samples.

    Clamped to [0, 1] and held constant beyond the first/last sample.
    """

    points: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(w), float(p)) for w, p in self.points)
        if not pts:
            raise SpecDomainError("table erasure model needs at least one point")
        ws = [w for w, _ in pts]
        ps = [p for _, p in pts]
        if any(not np.isfinite(w) or w < 0 for w in ws):
            raise SpecDomainError("table abscissae must be finite and >= 0")
        if any(not (0.0 <= p <= 1.0) for p in ps):
            raise SpecDomainError("table erasure values must lie in [0, 1]")
        if any(b <= a for a, b in zip(ws, ws[1:])):
            raise SpecDomainError("table abscissae must be strictly increasing")
        if any(b < a for a, b in zip(ps, ps[1:])):
            raise SpecDomainError("erasure probability must be nondecreasing")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_ws", np.array(ws))
        object.__setattr__(self, "_ps", np.array(ps))

    def p(self, w):
        return np.clip(np.interp(np.asarray(w, dtype=float), self._ws, self._ps), 0.0, 1.0)

    def breakpoints(self) -> tuple[float, ...]:
        return tuple(w for w, _ in self.points)


@dataclass(frozen=True)
class CallableErasure(ErasureModel):
    """Wraps an arbitrary p(w).

    The callable must accept scalars and numpy arrays; the caller guarantees
    monotonicity.  Values are clamped to [0, 1].
    """

    fn: Callable

    def __post_init__(self):
        p0 = float(np.asarray(self.fn(0.0)))
        if not (0.0 <= p0 <= 1.0):
            raise SpecDomainError(f"p(0) = {p0} outside [0, 1]")

    def p(self, w):
        return np.clip(np.asarray(self.fn(np.asarray(w, dtype=float)), dtype=float), 0.0, 1.0)


# ---------------------------------------------------------------------------
# Spec types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Node:
    id: str
    mu: float  # service rate, qubits/sec

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise SpecSchemaError(f"node id must be a nonempty string, got {self.id!r}")
        if not np.isfinite(self.mu) or self.mu <= 0.0:
            raise SpecDomainError(f"service rate of {self.id!r} must be > 0, got {self.mu!r}")


@dataclass(frozen=True)
class Source:
    id: str
    rate: float                  # Poisson emission rate, qubits/sec
    entry: Mapping[str, float]   # node id -> entry probability, sums to 1

    def __post_init__(self):
        if not self.id or not isinstance(self.id, str):
            raise SpecSchemaError(f"source id must be a nonempty string, got {self.id!r}")
        if not np.isfinite(self.rate) or self.rate < 0.0:
            raise SpecDomainError(f"rate of source {self.id!r} must be >= 0, got {self.rate!r}")
        entry = {str(k): float(v) for k, v in self.entry.items()}
        for node_id, prob in entry.items():
            if not (0.0 <= prob <= 1.0):
                raise SpecDomainError(
                    f"entry probability {self.id!r}->{node_id!r} is {prob}, outside [0, 1]"
                )
        total = sum(entry.values())
        if abs(total - 1.0) > _PROB_TOL:
            raise SpecDomainError(
                f"entry probabilities of source {self.id!r} sum to {total}, expected 1"
            )
        # zero-probability entries are indistinguishable from absent ones
        entry = {k: v for k, v in sorted(entry.items()) if v > 0.0}
        object.__setattr__(self, "entry", entry)


@dataclass(frozen=True)
class NetworkSpec:
    """Immutable description of one network instance."""

    nodes: tuple[Node, ...]
    sources: tuple[Source, ...]
    routing: Mapping[str, Mapping[str, float]]  # a[i][j], intermediate nodes only
    network_type: NetworkType
    erasure: ErasureModel

    def __post_init__(self):
        nodes = tuple(self.nodes)
        sources = tuple(self.sources)
        if not nodes:
            raise SpecSchemaError("network needs at least one node")
        if not sources:
            raise SpecSchemaError("network needs at least one source")
        node_ids = [n.id for n in nodes]
        if len(set(node_ids)) != len(node_ids):
            raise SpecSchemaError("duplicate node ids")
        source_ids = [s.id for s in sources]
        if len(set(source_ids)) != len(source_ids):
            raise SpecSchemaError("duplicate source ids")
        taken = set(node_ids)
        if DESTINATION in taken or DESTINATION in source_ids:
            raise SpecSchemaError(f"id {DESTINATION!r} is reserved for the destination")
        if taken & set(source_ids):
            raise SpecSchemaError("source ids must not collide with node ids")
        for src in sources:
            for node_id in src.entry:
                if node_id not in taken:
                    raise SpecSchemaError(
                        f"source {src.id!r} enters unknown node {node_id!r}"
                    )
        rows: dict[str, dict[str, float]] = {i: {} for i in node_ids}
        for i, row in dict(self.routing).items():
            if i not in taken:
                raise SpecSchemaError(f"routing row for unknown node {i!r}")
            clean: dict[str, float] = {}
            for j, a in dict(row).items():
                a = float(a)
                if j not in taken:
                    raise SpecSchemaError(f"routing target {i!r}->{j!r} is not a node")
                if j == i:
                    raise SpecSchemaError(f"self-loop {i!r}->{i!r} is not allowed")
                if not (0.0 <= a <= 1.0):
                    raise SpecDomainError(f"routing probability {i!r}->{j!r} is {a}, outside [0, 1]")
                if a > 0.0:
                    clean[j] = a
            total = sum(clean.values())
            if total > 1.0 + _PROB_TOL:
                raise SpecDomainError(f"routing row of {i!r} sums to {total}, must be <= 1")
            rows[i] = dict(sorted(clean.items()))
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "routing", rows)
        object.__setattr__(self, "network_type", NetworkType(self.network_type))

    # -- lookup helpers ----------------------------------------------------

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    @property
    def source_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.sources)

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def source(self, source_id: str) -> Source:
        for s in self.sources:
            if s.id == source_id:
                return s
        raise KeyError(source_id)

    def routing_row(self, node_id: str) -> dict[str, float]:
        return dict(self.routing[node_id])

    def deficit(self, node_id: str) -> float:
        """Probability of forwarding from node_id straight to the destination."""
        d = 1.0 - sum(self.routing[node_id].values())
        return 0.0 if d < _DEFICIT_CLAMP else d


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOP_KEYS = {"nodes", "sources", "routing", "network_type", "erasure"}


def _require_number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecSchemaError(f"{what} must be a number, got {value!r}")
    return float(value)


def _require_str(value, what: str) -> str:
    if not isinstance(value, str):
        raise SpecSchemaError(f"{what} must be a string, got {value!r}")
    return value


def _require_mapping(value, what: str) -> dict:
    if not isinstance(value, dict):
        raise SpecSchemaError(f"{what} must be an object, got {value!r}")
    return value


def _require_keys(obj: dict, required: set[str], what: str) -> None:
    missing = required - obj.keys()
    extra = obj.keys() - required
    if missing:
        raise SpecSchemaError(f"{what} is missing field(s) {sorted(missing)}")
    if extra:
        raise SpecSchemaError(f"{what} has unknown field(s) {sorted(extra)}")


def _parse_erasure(obj) -> ErasureModel:
    obj = _require_mapping(obj, "erasure")
    model = _require_str(obj.get("model"), "erasure.model") if "model" in obj else None
    if model is None:
        raise SpecSchemaError("erasure is missing field 'model'")
    if model == "exponential":
        _require_keys(obj, {"model", "kappa"}, "erasure")
        return ExponentialErasure(_require_number(obj["kappa"], "erasure.kappa"))
    if model == "table":
        _require_keys(obj, {"model", "points"}, "erasure")
        pts = obj["points"]
        if not isinstance(pts, list):
            raise SpecSchemaError("erasure.points must be a list of [w, p] pairs")
        parsed = []
        for k, pair in enumerate(pts):
            if not isinstance(pair, list) or len(pair) != 2:
                raise SpecSchemaError(f"erasure.points[{k}] must be a [w, p] pair")
            parsed.append((_require_number(pair[0], f"erasure.points[{k}][0]"),
                           _require_number(pair[1], f"erasure.points[{k}][1]")))
        return TableErasure(tuple(parsed))
    raise SpecSchemaError(f"unknown erasure model {model!r}")


def parse_network(text: str) -> NetworkSpec:
    """Parse a JSON network document into a validated NetworkSpec.

    Raises SpecSyntaxError for malformed JSON, SpecSchemaError for structural
    problems (missing/extra fields, wrong types), SpecDomainError for values
    outside their domain (negative rates, probabilities outside [0, 1]).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(f"not valid JSON: {exc}") from exc
    doc = _require_mapping(doc, "document")
    _require_keys(doc, _TOP_KEYS, "document")

    if not isinstance(doc["nodes"], list):
        raise SpecSchemaError("'nodes' must be a list")
    nodes = []
    for k, item in enumerate(doc["nodes"]):
        item = _require_mapping(item, f"nodes[{k}]")
        _require_keys(item, {"id", "mu"}, f"nodes[{k}]")
        nodes.append(Node(_require_str(item["id"], f"nodes[{k}].id"),
                          _require_number(item["mu"], f"nodes[{k}].mu")))

    if not isinstance(doc["sources"], list):
        raise SpecSchemaError("'sources' must be a list")
    sources = []
    for k, item in enumerate(doc["sources"]):
        item = _require_mapping(item, f"sources[{k}]")
        _require_keys(item, {"id", "lambda", "entry"}, f"sources[{k}]")
        entry = _require_mapping(item["entry"], f"sources[{k}].entry")
        entry = {_require_str(n, "entry key"): _require_number(p, f"entry[{n!r}]")
                 for n, p in entry.items()}
        sources.append(Source(_require_str(item["id"], f"sources[{k}].id"),
                              _require_number(item["lambda"], f"sources[{k}].lambda"),
                              entry))

    routing_doc = _require_mapping(doc["routing"], "routing")
    routing = {}
    for i, row in routing_doc.items():
        row = _require_mapping(row, f"routing[{i!r}]")
        routing[_require_str(i, "routing key")] = {
            _require_str(j, "routing target"): _require_number(a, f"routing[{i!r}][{j!r}]")
            for j, a in row.items()
        }

    nt_raw = _require_str(doc["network_type"], "network_type")
    try:
        network_type = NetworkType(nt_raw)
    except ValueError:
        raise SpecSchemaError(
            f"network_type must be 'repeater_assisted' or 'repeater_less', got {nt_raw!r}"
        ) from None

    erasure = _parse_erasure(doc["erasure"])
    return NetworkSpec(tuple(nodes), tuple(sources), routing, network_type, erasure)


def spec_to_document(spec: NetworkSpec) -> dict:
    """Canonical JSON-serializable document for a spec (inverse of parse_network)."""
    if isinstance(spec.erasure, ExponentialErasure):
        erasure = {"model": "exponential", "kappa": spec.erasure.kappa}
    elif isinstance(spec.erasure, TableErasure):
        erasure = {"model": "table", "points": [[w, p] for w, p in spec.erasure.points]}
    else:
        raise SpecSchemaError("callable erasure models have no document form")
    return {
        "nodes": [{"id": n.id, "mu": n.mu} for n in spec.nodes],
        "sources": [{"id": s.id, "lambda": s.rate, "entry": dict(s.entry)} for s in spec.sources],
        "routing": {i: dict(row) for i, row in spec.routing.items()},
        "network_type": spec.network_type.value,
        "erasure": erasure,
    }


# ---------------------------------------------------------------------------
# Topology
# ---------------------------------------------------------------------------


def find_cycle(spec: NetworkSpec) -> list[str] | None:
    """Return some cycle (as a node id list) in the positive routing graph, or None."""
    WHITE, GRAY, BLACK = 0, 1, 2
    color = {i: WHITE for i in spec.node_ids}
    parent: dict[str, str] = {}
    for start in spec.node_ids:
        if color[start] != WHITE:
            continue
        stack = [(start, iter(sorted(spec.routing[start])))]
        color[start] = GRAY
        while stack:
            node, children = stack[-1]
            advanced = False
            for child in children:
                if color[child] == GRAY:
                    cycle = [child, node]
                    cur = node
                    while cur != child:
                        cur = parent[cur]
                        cycle.append(cur)
                    cycle.reverse()
                    return cycle[:-1]
                if color[child] == WHITE:
                    color[child] = GRAY
                    parent[child] = node
                    stack.append((child, iter(sorted(spec.routing[child]))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
    return None


def is_feed_forward(spec: NetworkSpec) -> bool:
    """True iff the positive-probability routing graph is acyclic."""
    return find_cycle(spec) is None


def topological_order(spec: NetworkSpec) -> list[str]:
    """Deterministic topological order (smallest id first among ready nodes)."""
    cycle = find_cycle(spec)
    if cycle is not None:
        raise FeedForwardError(
            f"routing graph has a cycle {' -> '.join(cycle + [cycle[0]])}; "
            "loop-back networks are out of scope for analytical capacity"
        )
    indeg = {i: 0 for i in spec.node_ids}
    for i in spec.node_ids:
        for j in spec.routing[i]:
            indeg[j] += 1
    ready = sorted(i for i, k in indeg.items() if k == 0)
    order = []
    while ready:
        node = ready.pop(0)
        order.append(node)
        inserted = False
        for j in sorted(spec.routing[node]):
            indeg[j] -= 1
            if indeg[j] == 0:
                ready.append(j)
                inserted = True
        if inserted:
            ready.sort()
    return order


def entry_nodes(spec: NetworkSpec) -> set[str]:
    """Nodes fed directly by at least one source."""
    return {n for s in spec.sources for n in s.entry}


def nodes_reaching_destination(spec: NetworkSpec) -> set[str]:
    """Nodes from which the destination is reachable via positive-probability links."""
    reverse: dict[str, set[str]] = {i: set() for i in spec.node_ids}
    for i in spec.node_ids:
        for j in spec.routing[i]:
            reverse[j].add(i)
    frontier = [i for i in spec.node_ids if spec.deficit(i) > 0.0]
    seen = set(frontier)
    while frontier:
        node = frontier.pop()
        for prev in reverse[node]:
            if prev not in seen:
                seen.add(prev)
                frontier.append(prev)
    return seen


def nodes_reachable_from_sources(spec: NetworkSpec) -> set[str]:
    frontier = list(entry_nodes(spec))
    seen = set(frontier)
    while frontier:
        node = frontier.pop()
        for nxt in spec.routing[node]:
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


# ---------------------------------------------------------------------------
# Traffic equations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrafficSolution:
    """Net arrival rate, stability verdict and residual rate per node."""

    xi: dict[str, float]
    stable: dict[str, bool]
    residual_rates: dict[str, float]

    def unstable_nodes(self) -> tuple[str, ...]:
        return tuple(i for i, ok in self.stable.items() if not ok)


def external_rates(spec: NetworkSpec) -> dict[str, float]:
    """Poisson rate entering each node directly from the sources."""
    lam = {i: 0.0 for i in spec.node_ids}
    for src in spec.sources:
        for node_id, prob in src.entry.items():
            lam[node_id] += src.rate * prob
    return lam


def solve_traffic(spec: NetworkSpec) -> TrafficSolution:
    """Solve xi_i = lambda_ext,i + sum_k a_ki xi_k.

    Feed-forward networks are solved by forward substitution in topological
    order; cyclic ones through the linear system (I - A^T) xi = lambda_ext.
    """
    ids = list(spec.node_ids)
    lam_ext = external_rates(spec)
    if is_feed_forward(spec):
        xi = dict(lam_ext)
        for i in topological_order(spec):
            for j, a in spec.routing[i].items():
                xi[j] += a * xi[i]
    else:
        index = {i: k for k, i in enumerate(ids)}
        n = len(ids)
        m = np.eye(n)
        for i in ids:
            for j, a in spec.routing[i].items():
                m[index[j], index[i]] -= a
        b = np.array([lam_ext[i] for i in ids])
        try:
            sol = np.linalg.solve(m, b)
        except np.linalg.LinAlgError as exc:
            raise SingularTrafficError(
                "traffic equations are singular: routing traps all flow in a cycle"
            ) from exc
        if not np.all(np.isfinite(sol)) or np.linalg.norm(m @ sol - b) > 1e-8 * max(1.0, np.linalg.norm(b)):
            raise SingularTrafficError(
                "traffic equations are numerically singular: routing traps all flow in a cycle"
            )
        xi = {i: float(max(sol[index[i]], 0.0)) for i in ids}
    mu = {n.id: n.mu for n in spec.nodes}
    stable = {i: xi[i] < mu[i] for i in ids}
    residual = {i: mu[i] - xi[i] for i in ids}
    return TrafficSolution(xi=xi, stable=stable, residual_rates=residual)


# ---------------------------------------------------------------------------
# Routes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Route:
    """A positive-probability path from one source to the destination."""

    links: tuple[tuple[str, str], ...]
    intermediate_nodes: tuple[str, ...]
    probability: float

    @property
    def path(self) -> str:
        return "->".join((self.links[0][0],) + tuple(b for _, b in self.links))


def enumerate_routes(spec: NetworkSpec, source_id: str) -> list[Route]:
    """All routes of positive probability from source_id to the destination.

    Probabilities multiply the entry link, every internal link and the final
    hop to d; over a feed-forward network they sum to 1.
    """
    try:
        src = spec.source(source_id)
    except KeyError:
        raise SpecSchemaError(f"unknown source {source_id!r}") from None
    # raises FeedForwardError on cycles
    topological_order(spec)

    routes: list[Route] = []

    def walk(node: str, links: tuple[tuple[str, str], ...], nodes: tuple[str, ...], prob: float):
        deficit = spec.deficit(node)
        if deficit > 0.0:
            routes.append(Route(links + ((node, DESTINATION),), nodes, prob * deficit))
        for nxt, a in spec.routing[node].items():
            walk(nxt, links + ((node, nxt),), nodes + (nxt,), prob * a)

    for entry, p_entry in src.entry.items():
        walk(entry, ((source_id, entry),), (entry,), p_entry)
    return routes


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    topology: str  # "feed_forward" | "cyclic"
    stable: dict[str, bool]
    unstable_nodes: tuple[str, ...]
    unreachable_nodes: tuple[str, ...]
    dead_end_nodes: tuple[str, ...]
    analytical_supported: bool
    traffic: TrafficSolution | None
    defects: tuple[str, ...]


def validate(spec: NetworkSpec) -> ValidationReport:
    """Check stability, reachability and topology class; defects are reported, not thrown."""
    defects: list[str] = []
    feed_forward = is_feed_forward(spec)
    topology = "feed_forward" if feed_forward else "cyclic"
    if not feed_forward:
        cycle = find_cycle(spec)
        defects.append(
            f"routing graph is cyclic ({' -> '.join(cycle + [cycle[0]])}); "
            "analytical capacity unsupported (loop-back networks are out of scope)"
        )

    reachable = nodes_reachable_from_sources(spec)
    unreachable = tuple(i for i in spec.node_ids if i not in reachable)
    if unreachable:
        defects.append(f"node(s) not reachable from any source: {', '.join(unreachable)}")
    reaching = nodes_reaching_destination(spec)
    dead_ends = tuple(i for i in spec.node_ids if i not in reaching)
    if dead_ends:
        defects.append(f"node(s) that cannot reach the destination: {', '.join(dead_ends)}")

    traffic: TrafficSolution | None
    try:
        traffic = solve_traffic(spec)
    except SingularTrafficError as exc:
        traffic = None
        defects.append(str(exc))
        stable = {i: False for i in spec.node_ids}
        unstable = tuple(spec.node_ids)
    else:
        stable = dict(traffic.stable)
        unstable = traffic.unstable_nodes()
        if unstable:
            mu = {n.id: n.mu for n in spec.nodes}
            detail = ", ".join(f"{i} (xi={traffic.xi[i]:.6g} >= mu={mu[i]:.6g})" for i in unstable)
            defects.append(f"unstable node(s): {detail}")

    return ValidationReport(
        ok=not defects,
        topology=topology,
        stable=stable,
        unstable_nodes=unstable,
        unreachable_nodes=unreachable,
        dead_end_nodes=dead_ends,
        analytical_supported=feed_forward,
        traffic=traffic,
        defects=tuple(defects),
    )


# ---------------------------------------------------------------------------
# Spec editing helpers (used by sweeps and optimizers)
# ---------------------------------------------------------------------------


def with_source_rate(spec: NetworkSpec, source_id: str, rate: float) -> NetworkSpec:
    sources = tuple(
        Source(s.id, rate, s.entry) if s.id == source_id else s for s in spec.sources
    )
    return NetworkSpec(spec.nodes, sources, spec.routing, spec.network_type, spec.erasure)


def with_node_mu(spec: NetworkSpec, node_id: str, mu: float) -> NetworkSpec:
    nodes = tuple(Node(n.id, mu) if n.id == node_id else n for n in spec.nodes)
    return NetworkSpec(nodes, spec.sources, spec.routing, spec.network_type, spec.erasure)


def with_erasure(spec: NetworkSpec, erasure: ErasureModel) -> NetworkSpec:
    return NetworkSpec(spec.nodes, spec.sources, spec.routing, spec.network_type, erasure)


def with_entry_split(spec: NetworkSpec, source_id: str, delta: float) -> NetworkSpec:
    """Set a two-branch source's entry distribution to (delta, 1-delta).

    Branch order follows sorted entry node ids.
    """
    src = spec.source(source_id)
    branches = sorted(src.entry)
    if len(branches) != 2:
        raise SpecDomainError(
            f"source {source_id!r} feeds {len(branches)} node(s); a delta split needs exactly 2"
        )
    if not (0.0 <= delta <= 1.0):
        raise SpecDomainError(f"delta must lie in [0, 1], got {delta}")
    entry = {branches[0]: delta, branches[1]: 1.0 - delta}
    sources = tuple(
        Source(s.id, s.rate, entry) if s.id == source_id else s for s in spec.sources
    )
    return NetworkSpec(spec.nodes, sources, spec.routing, spec.network_type, spec.erasure)

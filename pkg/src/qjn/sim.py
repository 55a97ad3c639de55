"""Discrete-event Monte Carlo simulation of the qubit network.

A run emits ``n_emissions`` qubits in total, drawn from the merged Poisson
streams of all active sources (attribution follows the rate proportions, so
every source keeps injecting over the whole window and the network stays
jointly stationary).  Nodes are FCFS single servers with exponential service;
routing is an independent draw per departure.  Erased qubits keep traversing
and occupying queues: erasure changes the payload, not the traffic.

Feed-forward specs are simulated by an exact per-node FCFS recursion in
topological order (departures D_k = cumsum(S)_k + running max of
A_j - cumsum(S)_{j-1}), which matches the event-driven dynamics in law and
runs vectorized.  Cyclic specs fall back to an event-driven loop.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy import stats

from .errors import InsufficientDataError, SingularTrafficError, SpecDomainError
from .model import (
    DESTINATION,
    NetworkSpec,
    NetworkType,
    is_feed_forward,
    nodes_reachable_from_sources,
    nodes_reaching_destination,
    topological_order,
)

WARMUP_FRACTION = 0.1
BATCH_COUNT = 20


@dataclass(frozen=True)
class RngPolicy:
    """Independent named substreams derived from one master seed."""

    seed: int

    def streams(self) -> dict[str, np.random.Generator]:
        children = np.random.SeedSequence(self.seed).spawn(4)
        names = ("arrival", "service", "routing", "erasure")
        return {n: np.random.Generator(np.random.PCG64(c)) for n, c in zip(names, children)}


@dataclass(frozen=True)
class QubitRecord:
    qubit_id: int
    source_id: str
    emit_time: float
    nodes: tuple[str, ...]
    sojourns: tuple[float, ...]
    erased: bool
    delivery_time: float


@dataclass(frozen=True)
class NodeTally:
    visits: int
    busy_time: float
    sojourn_area: float  # integral of number-in-node over the run


@dataclass
class Trace:
    """Columnar record of one simulation run.

    Per-qubit arrays are indexed by qubit id (global emission order); visit
    arrays are sorted by (qubit id, arrival time), i.e. traversal order.
    """

    spec: NetworkSpec
    seed: int
    n_emissions: int
    source_ids: tuple[str, ...]
    qubit_source: np.ndarray   # int32 index into source_ids
    emit_time: np.ndarray
    delivery_time: np.ndarray
    erased: np.ndarray         # bool
    visit_qubit: np.ndarray    # int64
    visit_node: np.ndarray     # int32 index into spec.node_ids
    visit_arrival: np.ndarray
    visit_sojourn: np.ndarray
    visit_service: np.ndarray
    horizon: float

    @property
    def n_qubits(self) -> int:
        return self.emit_time.size

    def records(self) -> Iterator[QubitRecord]:
        node_ids = self.spec.node_ids
        offsets = np.searchsorted(self.visit_qubit, np.arange(self.n_qubits + 1))
        for qid in range(self.n_qubits):
            lo, hi = offsets[qid], offsets[qid + 1]
            yield QubitRecord(
                qubit_id=qid,
                source_id=self.source_ids[self.qubit_source[qid]],
                emit_time=float(self.emit_time[qid]),
                nodes=tuple(node_ids[k] for k in self.visit_node[lo:hi]),
                sojourns=tuple(float(w) for w in self.visit_sojourn[lo:hi]),
                erased=bool(self.erased[qid]),
                delivery_time=float(self.delivery_time[qid]),
            )

    def node_departures(self, node_id: str) -> np.ndarray:
        idx = self.spec.node_ids.index(node_id)
        mask = self.visit_node == idx
        return np.sort(self.visit_arrival[mask] + self.visit_sojourn[mask])

    def node_tally(self, node_id: str) -> NodeTally:
        idx = self.spec.node_ids.index(node_id)
        mask = self.visit_node == idx
        return NodeTally(
            visits=int(mask.sum()),
            busy_time=float(self.visit_service[mask].sum()),
            sojourn_area=float(self.visit_sojourn[mask].sum()),
        )


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


def _active_sources(spec: NetworkSpec):
    return [s for s in spec.sources if s.rate > 0.0]


def _emissions(spec: NetworkSpec, n_emissions: int, streams):
    """Arrival times, source index and entry node index per qubit (emission order).

    Emissions come from the merged source streams (superposed Poisson
    processes), so every source keeps injecting over the whole run and the
    network stays jointly stationary; per-source counts follow the rate
    proportions.
    """
    sources = _active_sources(spec)
    node_index = {i: k for k, i in enumerate(spec.node_ids)}
    rates = np.array([s.rate for s in sources])
    total_rate = float(rates.sum())
    arrival = streams["arrival"]
    emit = np.cumsum(arrival.exponential(1.0 / total_rate, size=n_emissions))
    if len(sources) == 1:
        qsrc = np.zeros(n_emissions, dtype=np.int32)
    else:
        cum = np.cumsum(rates / total_rate)
        cum[-1] = max(cum[-1], 1.0)
        u = arrival.random(n_emissions)
        qsrc = np.minimum(np.searchsorted(cum, u, side="right"),
                          len(sources) - 1).astype(np.int32)

    u = streams["routing"].random(emit.size)
    entry_idx = np.empty(emit.size, dtype=np.int32)
    for k, src in enumerate(sources):
        ids = list(src.entry)  # sorted, positive probabilities
        cum = np.cumsum([src.entry[i] for i in ids])
        sel = qsrc == k
        pick = np.minimum(np.searchsorted(cum, u[sel], side="right"), len(ids) - 1)
        entry_idx[sel] = np.array([node_index[i] for i in ids], dtype=np.int32)[pick]
    return sources, emit, qsrc, entry_idx


def _routing_targets(spec: NetworkSpec, node_id: str):
    """(targets, cumulative probabilities); target None means the destination."""
    row = spec.routing[node_id]
    targets: list[str | None] = list(row)
    probs = [row[j] for j in targets]
    deficit = spec.deficit(node_id)
    if deficit > 0.0:
        targets.append(None)
        probs.append(deficit)
    cum = np.cumsum(probs)
    cum[-1] = max(cum[-1], 1.0)
    return targets, cum


def simulate(spec: NetworkSpec, n_emissions: int, seed: int) -> Trace:
    """Run the network until n_emissions qubits (merged over sources) deliver.

    Deterministic for fixed (spec, n_emissions, seed).  Erasure semantics:
    repeater-assisted draws once per node visit with probability p(W_i);
    repeater-less draws once at delivery with probability p(sum_i W_i).
    """
    if n_emissions < 1:
        raise ValueError(f"n_emissions must be >= 1, got {n_emissions}")
    if not _active_sources(spec):
        raise SpecDomainError("no source has a positive rate; nothing to simulate")
    trapped = nodes_reachable_from_sources(spec) - nodes_reaching_destination(spec)
    if trapped:
        raise SingularTrafficError(
            f"routing traps flow: node(s) {', '.join(sorted(trapped))} cannot reach the destination"
        )
    streams = RngPolicy(seed).streams()
    if is_feed_forward(spec):
        return _simulate_feed_forward(spec, n_emissions, seed, streams)
    return _simulate_event_driven(spec, n_emissions, seed, streams)


def _fcfs_departures(arrivals: np.ndarray, services: np.ndarray) -> np.ndarray:
    # D_k = max_{j<=k}(A_j + sum_{i=j..k} S_i), vectorized via prefix sums;
    # the final maximum removes prefix-sum roundoff that could otherwise push
    # a sojourn a few ulp below its own service time
    cs = np.cumsum(services)
    dep = cs + np.maximum.accumulate(arrivals - (cs - services))
    return np.maximum(dep, arrivals + services)


def _simulate_feed_forward(spec, n_emissions, seed, streams) -> Trace:
    node_ids = spec.node_ids
    node_index = {i: k for k, i in enumerate(node_ids)}
    mu = {n.id: n.mu for n in spec.nodes}
    sources, emit, qsrc, entry_idx = _emissions(spec, n_emissions, streams)
    n_qubits = emit.size
    qids = np.arange(n_qubits, dtype=np.int64)

    pend_t: list[list[np.ndarray]] = [[] for _ in node_ids]
    pend_q: list[list[np.ndarray]] = [[] for _ in node_ids]
    for e in range(len(node_ids)):
        mask = entry_idx == e
        if mask.any():
            pend_t[e].append(emit[mask])
            pend_q[e].append(qids[mask])

    delivery = np.full(n_qubits, np.nan)
    erased = np.zeros(n_qubits, dtype=bool)
    total_sojourn = np.zeros(n_qubits)
    chunks_q, chunks_n, chunks_a, chunks_w, chunks_s = [], [], [], [], []
    assisted = spec.network_type is NetworkType.REPEATER_ASSISTED

    for node_id in topological_order(spec):
        idx = node_index[node_id]
        if not pend_t[idx]:
            continue
        arr = np.concatenate(pend_t[idx])
        qs = np.concatenate(pend_q[idx])
        pend_t[idx] = pend_q[idx] = []  # type: ignore[assignment]
        order = np.lexsort((qs, arr))
        arr, qs = arr[order], qs[order]
        k = arr.size
        svc = streams["service"].exponential(1.0 / mu[node_id], size=k)
        dep = _fcfs_departures(arr, svc)
        soj = dep - arr

        chunks_q.append(qs)
        chunks_n.append(np.full(k, idx, dtype=np.int32))
        chunks_a.append(arr)
        chunks_w.append(soj)
        chunks_s.append(svc)
        total_sojourn[qs] += soj  # each qubit hits a node at most once on a DAG

        if assisted:
            hit = streams["erasure"].random(k) < spec.erasure.p(soj)
            erased[qs[hit]] = True

        targets, cum = _routing_targets(spec, node_id)
        if len(targets) == 1:
            pick = np.zeros(k, dtype=np.int64)
        else:
            u = streams["routing"].random(k)
            pick = np.minimum(np.searchsorted(cum, u, side="right"), len(targets) - 1)
        for t_i, target in enumerate(targets):
            mask = pick == t_i
            if not mask.any():
                continue
            if target is None:
                delivery[qs[mask]] = dep[mask]
            else:
                j = node_index[target]
                pend_t[j].append(dep[mask])
                pend_q[j].append(qs[mask])

    if not assisted:
        erased = streams["erasure"].random(n_qubits) < spec.erasure.p(total_sojourn)

    assert not np.isnan(delivery).any(), "undelivered qubits on a feed-forward network"
    vq = np.concatenate(chunks_q)
    vn = np.concatenate(chunks_n)
    va = np.concatenate(chunks_a)
    vw = np.concatenate(chunks_w)
    vs = np.concatenate(chunks_s)
    order = np.lexsort((va, vq))
    return Trace(
        spec=spec,
        seed=seed,
        n_emissions=n_emissions,
        source_ids=tuple(s.id for s in sources),
        qubit_source=qsrc,
        emit_time=emit,
        delivery_time=delivery,
        erased=np.asarray(erased, dtype=bool),
        visit_qubit=vq[order],
        visit_node=vn[order],
        visit_arrival=va[order],
        visit_sojourn=vw[order],
        visit_service=vs[order],
        horizon=float(delivery.max()),
    )


_ARRIVE, _DEPART = 0, 1


def _simulate_event_driven(spec, n_emissions, seed, streams) -> Trace:
    node_ids = spec.node_ids
    node_index = {i: k for k, i in enumerate(node_ids)}
    mu = [spec.node(i).mu for i in node_ids]
    routing = [_routing_targets(spec, i) for i in node_ids]
    sources, emit, qsrc, entry_idx = _emissions(spec, n_emissions, streams)
    n_qubits = emit.size

    delivery = np.full(n_qubits, np.nan)
    erased = np.zeros(n_qubits, dtype=bool)
    total_sojourn = np.zeros(n_qubits)
    vq_l: list[int] = []
    vn_l: list[int] = []
    va_l: list[float] = []
    vw_l: list[float] = []
    vs_l: list[float] = []
    assisted = spec.network_type is NetworkType.REPEATER_ASSISTED

    service = streams["service"]
    route_rng = streams["routing"]
    erasure_rng = streams["erasure"]

    queue: list[deque] = [deque() for _ in node_ids]
    # (qubit id, node arrival time, service time) of the qubit in service
    in_service: list[tuple[int, float, float] | None] = [None for _ in node_ids]

    heap: list[tuple[float, int, int, int, int]] = []
    seq = 0
    for qid in range(n_qubits):
        heap.append((float(emit[qid]), seq, _ARRIVE, qid, int(entry_idx[qid])))
        seq += 1
    heapq.heapify(heap)

    def begin_service(node: int, qid: int, arr: float, now: float):
        nonlocal seq
        svc = float(service.exponential(1.0 / mu[node]))
        in_service[node] = (qid, arr, svc)
        heapq.heappush(heap, (now + svc, seq, _DEPART, qid, node))
        seq += 1

    while heap:
        now, _, kind, qid, node = heapq.heappop(heap)
        if kind == _ARRIVE:
            if in_service[node] is None:
                begin_service(node, qid, now, now)
            else:
                queue[node].append((qid, now))
            continue

        qid, arr, svc = in_service[node]  # type: ignore[misc]
        in_service[node] = None
        soj = now - arr
        vq_l.append(qid)
        vn_l.append(node)
        va_l.append(arr)
        vw_l.append(soj)
        vs_l.append(svc)
        total_sojourn[qid] += soj
        if assisted and erasure_rng.random() < float(spec.erasure.p(soj)):
            erased[qid] = True
        targets, cum = routing[node]
        if len(targets) == 1:
            target = targets[0]
        else:
            u = route_rng.random()
            target = targets[min(int(np.searchsorted(cum, u, side="right")), len(targets) - 1)]
        if target is None:
            delivery[qid] = now
        else:
            heapq.heappush(heap, (now, seq, _ARRIVE, qid, node_index[target]))
            seq += 1
        if queue[node]:
            next_qid, next_arr = queue[node].popleft()
            begin_service(node, next_qid, next_arr, now)

    if not assisted:
        erased = erasure_rng.random(n_qubits) < spec.erasure.p(total_sojourn)

    assert not np.isnan(delivery).any(), "undelivered qubits after event loop drained"
    vq = np.asarray(vq_l, dtype=np.int64)
    vn = np.asarray(vn_l, dtype=np.int32)
    va = np.asarray(va_l)
    vw = np.asarray(vw_l)
    vs = np.asarray(vs_l)
    order = np.lexsort((va, vq))
    return Trace(
        spec=spec,
        seed=seed,
        n_emissions=n_emissions,
        source_ids=tuple(s.id for s in sources),
        qubit_source=qsrc,
        emit_time=emit,
        delivery_time=delivery,
        erased=np.asarray(erased, dtype=bool),
        visit_qubit=vq[order],
        visit_node=vn[order],
        visit_arrival=va[order],
        visit_sojourn=vw[order],
        visit_service=vs[order],
        horizon=float(delivery.max()),
    )


# ---------------------------------------------------------------------------
# Estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SourceEstimate:
    capacity_estimate: float
    ci_halfwidth: float
    n_emitted: int
    n_delivered_unerased: int
    rate: float
    batch_means: tuple[float, ...]  # unerased fraction per post-warm-up batch


@dataclass(frozen=True)
class SimEstimate:
    per_source: dict[str, SourceEstimate]
    horizon: float
    seed: int | tuple[int, ...]
    batch_count: int


def _t_crit(dof: int) -> float:
    return float(stats.t.ppf(0.975, dof))


def _from_batches(rate: float, batch_means: Sequence[float], n_emitted: int,
                  n_unerased: int) -> SourceEstimate:
    f = np.asarray(batch_means)
    estimate = rate * float(f.mean())
    if f.size > 1:
        halfwidth = _t_crit(f.size - 1) * rate * float(f.std(ddof=1)) / np.sqrt(f.size)
    else:
        halfwidth = float("inf")
    return SourceEstimate(
        capacity_estimate=estimate,
        ci_halfwidth=float(halfwidth),
        n_emitted=n_emitted,
        n_delivered_unerased=n_unerased,
        rate=rate,
        batch_means=tuple(float(x) for x in f),
    )


def estimate_capacity(trace: Trace, warmup_fraction: float = WARMUP_FRACTION,
                      batch_count: int = BATCH_COUNT) -> SimEstimate:
    """Per-source capacity estimate with a 95% batch-means confidence interval.

    The first warmup_fraction of each source's emissions is discarded; the
    rest is split into batch_count contiguous batches because erasure
    indicators are serially dependent through the queueing.
    """
    rates = {s.id: s.rate for s in trace.spec.sources}
    per_source: dict[str, SourceEstimate] = {}
    for k, source_id in enumerate(trace.source_ids):
        mask = trace.qubit_source == k
        ok = ~trace.erased[mask]  # emission order within the source
        n = ok.size
        post = ok[int(n * warmup_fraction):]
        if post.size < batch_count:
            raise InsufficientDataError(
                f"source {source_id!r}: {post.size} post-warm-up emissions < {batch_count}"
            )
        batch_means = [float(b.mean()) for b in np.array_split(post, batch_count)]
        per_source[source_id] = _from_batches(
            rates[source_id], batch_means, n_emitted=int(n), n_unerased=int(ok.sum())
        )
    return SimEstimate(per_source=per_source, horizon=trace.horizon,
                       seed=trace.seed, batch_count=batch_count)


def merge_estimates(estimates: Sequence[SimEstimate]) -> SimEstimate:
    """Pool independent replications; batch statistics concatenate."""
    if not estimates:
        raise ValueError("nothing to merge")
    if len(estimates) == 1:
        return estimates[0]
    source_ids = list(estimates[0].per_source)
    per_source: dict[str, SourceEstimate] = {}
    for source_id in source_ids:
        parts = [e.per_source[source_id] for e in estimates]
        batch_means: list[float] = []
        for p in parts:
            batch_means.extend(p.batch_means)
        per_source[source_id] = _from_batches(
            parts[0].rate,
            batch_means,
            n_emitted=sum(p.n_emitted for p in parts),
            n_unerased=sum(p.n_delivered_unerased for p in parts),
        )
    seeds = []
    for e in estimates:
        seeds.extend(e.seed if isinstance(e.seed, tuple) else (e.seed,))
    return SimEstimate(
        per_source=per_source,
        horizon=max(e.horizon for e in estimates),
        seed=tuple(seeds),
        batch_count=sum(e.batch_count for e in estimates),
    )


def departure_diagnostics(trace: Trace, node_id: str, rate: float | None = None,
                          warmup_fraction: float = WARMUP_FRACTION,
                          min_departures: int = 1000) -> dict[str, float]:
    """Kolmogorov-Smirnov check of a node's interdeparture times.

    A stable node fed by Poisson traffic should show exponential
    interdepartures at the node's throughput rate.  rate defaults to the
    empirical throughput of the post-warm-up window.
    """
    deps = trace.node_departures(node_id)
    post = deps[int(deps.size * warmup_fraction):]
    if post.size < max(min_departures, 2):
        raise InsufficientDataError(
            f"node {node_id!r}: {post.size} post-warm-up departures < {min_departures}"
        )
    gaps = np.diff(post)
    mean_gap = float(gaps.mean())
    if rate is None:
        rate = 1.0 / mean_gap
    result = stats.kstest(gaps, "expon", args=(0.0, 1.0 / rate))
    return {
        "ks_statistic": float(result.statistic),
        "p_value": float(result.pvalue),
        "mean_interdeparture": mean_gap,
    }


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def write_trace_csv(trace: Trace, path: str) -> None:
    """One row per qubit: id, source, emit time, visited nodes, sojourns, fate."""
    with open(path, "w", newline="") as fh:
        fh.write("qubit_id,source_id,emit_time,node_sequence,sojourn_sequence,erased,delivery_time\n")
        for rec in trace.records():
            fh.write(
                f"{rec.qubit_id},{rec.source_id},{rec.emit_time!r},"
                f"{'|'.join(rec.nodes)},{'|'.join(repr(w) for w in rec.sojourns)},"
                f"{int(rec.erased)},{rec.delivery_time!r}\n"
            )

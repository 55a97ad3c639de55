"""Shared spec builders for the test suite."""

import json

import numpy as np
import pytest

from qjn import NetworkSpec, parse_network, solve_traffic, with_source_rate


def make_doc(nodes, sources, routing, network_type="repeater_assisted", kappa=1.0,
             erasure=None):
    return {
        "nodes": [{"id": i, "mu": m} for i, m in nodes],
        "sources": [{"id": s, "lambda": lam, "entry": entry} for s, lam, entry in sources],
        "routing": routing,
        "network_type": network_type,
        "erasure": erasure if erasure is not None else {"model": "exponential", "kappa": kappa},
    }


def make_spec(**kwargs) -> NetworkSpec:
    return parse_network(json.dumps(make_doc(**kwargs)))


def tandem_spec(lam=0.5, mus=(1.0, 1.0), **kwargs) -> NetworkSpec:
    ids = [f"i{k + 1}" for k in range(len(mus))]
    routing = {i: ({ids[k + 1]: 1.0} if k + 1 < len(ids) else {}) for k, i in enumerate(ids)}
    return make_spec(nodes=list(zip(ids, mus)),
                     sources=[("s1", lam, {ids[0]: 1.0})],
                     routing=routing, **kwargs)


def parallel_spec(lam=1.0, delta=0.5, mu1=2.0, mu2=3.0, **kwargs) -> NetworkSpec:
    return make_spec(nodes=[("i1", mu1), ("i2", mu2)],
                     sources=[("s1", lam, {"i1": delta, "i2": 1.0 - delta})],
                     routing={"i1": {}, "i2": {}}, **kwargs)


def split_spec(**kwargs) -> NetworkSpec:
    # single source into i1 (mu=3), forking 0.4/0.6 to i2/i3 (mu=2 each)
    return make_spec(nodes=[("i1", 3.0), ("i2", 2.0), ("i3", 2.0)],
                     sources=[("s1", 1.0, {"i1": 1.0})],
                     routing={"i1": {"i2": 0.4, "i3": 0.6}, "i2": {}, "i3": {}}, **kwargs)


def cyclic_spec(**kwargs) -> NetworkSpec:
    # two nodes bouncing 50/50, each exiting to d with the other half
    return make_spec(nodes=[("i1", 2.0), ("i2", 2.0)],
                     sources=[("s1", 0.5, {"i1": 1.0})],
                     routing={"i1": {"i2": 0.5}, "i2": {"i1": 0.5}}, **kwargs)


def random_feed_forward(rng: np.random.Generator, max_nodes=6,
                        network_type="repeater_assisted", kappa=1.0,
                        utilization=(0.3, 0.85)) -> NetworkSpec:
    """Random stable DAG spec: forward-only edges, one or two sources."""
    n = int(rng.integers(1, max_nodes + 1))
    ids = [f"i{k + 1}" for k in range(n)]
    routing = {}
    for a in range(n):
        targets = [b for b in range(a + 1, n) if rng.random() < 0.5]
        if targets and rng.random() < 0.7:
            keep = float(rng.uniform(0.3, 1.0))
            weights = rng.uniform(0.1, 1.0, size=len(targets))
            weights = keep * weights / weights.sum()
            routing[ids[a]] = {ids[b]: float(w) for b, w in zip(targets, weights)}
        else:
            routing[ids[a]] = {}
    n_sources = int(rng.integers(1, 3))
    sources = []
    for s in range(n_sources):
        k = int(rng.integers(1, min(n, 2) + 1))
        entered = rng.choice(n, size=k, replace=False)
        weights = rng.uniform(0.2, 1.0, size=k)
        weights /= weights.sum()
        entry = {ids[int(e)]: float(w) for e, w in zip(entered, weights)}
        sources.append((f"s{s + 1}", float(rng.uniform(0.2, 2.0)), entry))
    mus = [float(rng.uniform(0.5, 3.0)) for _ in range(n)]
    spec = make_spec(nodes=list(zip(ids, mus)), sources=sources, routing=routing,
                     network_type=network_type, kappa=kappa)
    # rescale all source rates so the busiest node sits at a target utilization
    traffic = solve_traffic(spec)
    rho_max = max(traffic.xi[i] / spec.node(i).mu for i in ids)
    scale = float(rng.uniform(*utilization)) / rho_max
    for s in spec.sources:
        spec = with_source_rate(spec, s.id, s.rate * scale)
    return spec


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250810)

"""Network model: parsing, validation, traffic equations, routes."""

import json

import numpy as np
import pytest

from qjn import (
    ExponentialErasure,
    FeedForwardError,
    SingularTrafficError,
    SpecDomainError,
    SpecSchemaError,
    SpecSyntaxError,
    TableErasure,
    enumerate_routes,
    is_feed_forward,
    parse_network,
    solve_traffic,
    spec_to_document,
    validate,
    with_entry_split,
)

from conftest import cyclic_spec, make_doc, make_spec, parallel_spec, random_feed_forward, split_spec, tandem_spec

MINIMAL = {
    "nodes": [{"id": "i1", "mu": 1.0}],
    "sources": [{"id": "s1", "lambda": 0.5, "entry": {"i1": 1.0}}],
    "routing": {"i1": {}},
    "network_type": "repeater_assisted",
    "erasure": {"model": "exponential", "kappa": 1.0},
}


def doc(**overrides):
    d = json.loads(json.dumps(MINIMAL))
    d.update(overrides)
    return d


class TestParse:
    def test_minimal(self):
        spec = parse_network(json.dumps(MINIMAL))
        assert spec.node_ids == ("i1",)
        assert spec.sources[0].rate == 0.5
        assert isinstance(spec.erasure, ExponentialErasure)
        assert spec.erasure.kappa == 1.0

    def test_malformed_json(self):
        with pytest.raises(SpecSyntaxError):
            parse_network("{not json")

    def test_routing_probability_above_one(self):
        d = make_doc(nodes=[("i1", 1.0), ("i2", 1.0)],
                     sources=[("s1", 0.5, {"i1": 1.0})],
                     routing={"i1": {"i2": 1.2}, "i2": {}})
        with pytest.raises(SpecDomainError):
            parse_network(json.dumps(d))

    def test_row_sum_above_one(self):
        d = make_doc(nodes=[("i1", 1.0), ("i2", 1.0), ("i3", 1.0)],
                     sources=[("s1", 0.5, {"i1": 1.0})],
                     routing={"i1": {"i2": 0.6, "i3": 0.5}, "i2": {}, "i3": {}})
        with pytest.raises(SpecDomainError):
            parse_network(json.dumps(d))

    def test_unknown_top_level_field(self):
        with pytest.raises(SpecSchemaError):
            parse_network(json.dumps(doc(extra=1)))

    def test_missing_field(self):
        d = doc()
        del d["routing"]
        with pytest.raises(SpecSchemaError):
            parse_network(json.dumps(d))

    def test_wrong_type(self):
        d = doc(nodes=[{"id": "i1", "mu": "fast"}])
        with pytest.raises(SpecSchemaError):
            parse_network(json.dumps(d))

    def test_negative_rates(self):
        with pytest.raises(SpecDomainError):
            parse_network(json.dumps(doc(nodes=[{"id": "i1", "mu": -1.0}])))
        bad = doc(sources=[{"id": "s1", "lambda": -0.5, "entry": {"i1": 1.0}}])
        with pytest.raises(SpecDomainError):
            parse_network(json.dumps(bad))

    def test_entry_must_sum_to_one(self):
        bad = doc(sources=[{"id": "s1", "lambda": 0.5, "entry": {"i1": 0.9}}])
        with pytest.raises(SpecDomainError):
            parse_network(json.dumps(bad))

    def test_duplicate_node_ids(self):
        bad = doc(nodes=[{"id": "i1", "mu": 1.0}, {"id": "i1", "mu": 2.0}])
        with pytest.raises(SpecSchemaError):
            parse_network(json.dumps(bad))

    def test_self_loop_rejected(self):
        with pytest.raises(SpecSchemaError):
            parse_network(json.dumps(doc(routing={"i1": {"i1": 0.5}})))

    def test_destination_id_reserved(self):
        bad = doc(nodes=[{"id": "d", "mu": 1.0}],
                  sources=[{"id": "s1", "lambda": 0.5, "entry": {"d": 1.0}}],
                  routing={"d": {}})
        with pytest.raises(SpecSchemaError):
            parse_network(json.dumps(bad))

    def test_routing_to_unknown_node(self):
        with pytest.raises(SpecSchemaError):
            parse_network(json.dumps(doc(routing={"i1": {"ghost": 0.5}})))

    def test_unknown_network_type(self):
        with pytest.raises(SpecSchemaError):
            parse_network(json.dumps(doc(network_type="hybrid")))

    def test_table_erasure(self):
        d = doc(erasure={"model": "table", "points": [[0.0, 0.0], [1.0, 0.5], [2.0, 1.0]]})
        spec = parse_network(json.dumps(d))
        assert isinstance(spec.erasure, TableErasure)
        assert spec.erasure.p(1.5) == pytest.approx(0.75)
        # constant extrapolation and clamping
        assert spec.erasure.p(10.0) == 1.0
        assert spec.erasure.p(0.0) == 0.0

    def test_table_erasure_must_be_monotone(self):
        bad = doc(erasure={"model": "table", "points": [[0.0, 0.5], [1.0, 0.2]]})
        with pytest.raises(SpecDomainError):
            parse_network(json.dumps(bad))

    def test_table_erasure_range(self):
        bad = doc(erasure={"model": "table", "points": [[0.0, 0.0], [1.0, 1.5]]})
        with pytest.raises(SpecDomainError):
            parse_network(json.dumps(bad))

    def test_roundtrip_document(self):
        spec = split_spec()
        again = parse_network(json.dumps(spec_to_document(spec)))
        assert spec_to_document(again) == spec_to_document(spec)


class TestValidate:
    def test_stable_single(self):
        report = validate(make_spec(nodes=[("i1", 1.0)],
                                    sources=[("s1", 0.5, {"i1": 1.0})],
                                    routing={"i1": {}}))
        assert report.ok
        assert report.topology == "feed_forward"
        assert report.stable == {"i1": True}
        assert report.traffic.xi["i1"] == 0.5

    def test_unstable_single(self):
        report = validate(make_spec(nodes=[("i1", 1.0)],
                                    sources=[("s1", 1.2, {"i1": 1.0})],
                                    routing={"i1": {}}))
        assert not report.ok
        assert report.unstable_nodes == ("i1",)
        assert any("i1" in d for d in report.defects)

    def test_cyclic_flagged(self):
        report = validate(cyclic_spec())
        assert report.topology == "cyclic"
        assert not report.analytical_supported
        assert not report.ok
        assert any("loop-back" in d for d in report.defects)

    def test_unreachable_node(self):
        spec = make_spec(nodes=[("i1", 1.0), ("i9", 1.0)],
                         sources=[("s1", 0.5, {"i1": 1.0})],
                         routing={"i1": {}, "i9": {}})
        report = validate(spec)
        assert report.unreachable_nodes == ("i9",)
        assert not report.ok

    def test_trap_cycle(self):
        spec = make_spec(nodes=[("i1", 2.0), ("i2", 2.0)],
                         sources=[("s1", 0.5, {"i1": 1.0})],
                         routing={"i1": {"i2": 1.0}, "i2": {"i1": 1.0}})
        report = validate(spec)
        assert not report.ok
        assert report.dead_end_nodes == ("i1", "i2")
        assert report.traffic is None


class TestTraffic:
    def test_split_example(self):
        # forward substitution must match a direct linear solve
        spec = split_spec()
        traffic = solve_traffic(spec)
        assert traffic.xi == pytest.approx({"i1": 1.0, "i2": 0.4, "i3": 0.6})
        a = np.array([[0.0, 0.4, 0.6], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        xi = np.linalg.solve(np.eye(3) - a.T, np.array([1.0, 0.0, 0.0]))
        assert list(traffic.xi.values()) == pytest.approx(list(xi))

    def test_zero_input(self):
        spec = tandem_spec(lam=0.0, mus=(1.0, 1.0))
        traffic = solve_traffic(spec)
        assert all(x == 0.0 for x in traffic.xi.values())

    def test_tandem_flow_conservation(self):
        spec = tandem_spec(lam=0.7, mus=(1.0, 2.0, 3.0))
        traffic = solve_traffic(spec)
        assert all(x == 0.7 for x in traffic.xi.values())

    def test_cyclic_solvable(self):
        traffic = solve_traffic(cyclic_spec())
        # xi1 = 0.5 + 0.5*xi2, xi2 = 0.5*xi1
        assert traffic.xi["i1"] == pytest.approx(2.0 / 3.0)
        assert traffic.xi["i2"] == pytest.approx(1.0 / 3.0)

    def test_trap_is_singular(self):
        spec = make_spec(nodes=[("i1", 2.0), ("i2", 2.0)],
                         sources=[("s1", 0.5, {"i1": 1.0})],
                         routing={"i1": {"i2": 1.0}, "i2": {"i1": 1.0}})
        with pytest.raises(SingularTrafficError):
            solve_traffic(spec)

    def test_residuals_match_stability(self):
        spec = split_spec()
        traffic = solve_traffic(spec)
        for i in spec.node_ids:
            assert (traffic.residual_rates[i] > 0) == traffic.stable[i]

    def test_conservation_random_specs(self, rng):
        # total source rate equals the flow over final hops into d
        for _ in range(30):
            spec = random_feed_forward(rng)
            traffic = solve_traffic(spec)
            into_d = sum(traffic.xi[i] * spec.deficit(i) for i in spec.node_ids)
            total = sum(s.rate for s in spec.sources)
            assert into_d == pytest.approx(total, abs=1e-12)


class TestRoutes:
    def test_split_routes(self):
        routes = enumerate_routes(split_spec(), "s1")
        probs = {r.path: r.probability for r in routes}
        assert probs == pytest.approx({"s1->i1->i2->d": 0.4, "s1->i1->i3->d": 0.6})
        for r in routes:
            assert r.links[0] == ("s1", "i1")
            assert r.links[-1][1] == "d"

    def test_tandem_single_route(self):
        routes = enumerate_routes(tandem_spec(mus=(1.0, 1.0, 1.0)), "s1")
        assert len(routes) == 1
        assert routes[0].probability == 1.0
        assert routes[0].intermediate_nodes == ("i1", "i2", "i3")

    def test_parallel_pair(self):
        routes = enumerate_routes(parallel_spec(delta=0.3), "s1")
        probs = sorted(r.probability for r in routes)
        assert probs == pytest.approx([0.3, 0.7])

    def test_cyclic_raises(self):
        with pytest.raises(FeedForwardError, match="loop-back"):
            enumerate_routes(cyclic_spec(), "s1")

    def test_unknown_source(self):
        with pytest.raises(SpecSchemaError):
            enumerate_routes(split_spec(), "nope")

    def test_probabilities_sum_to_one(self, rng):
        for _ in range(30):
            spec = random_feed_forward(rng)
            for s in spec.sources:
                total = sum(r.probability for r in enumerate_routes(spec, s.id))
                assert total == pytest.approx(1.0, abs=1e-12)


class TestFeedForward:
    def test_tandem(self):
        assert is_feed_forward(tandem_spec())

    def test_two_cycle(self):
        assert not is_feed_forward(cyclic_spec())

    def test_five_node_forward_topology(self):
        # i1..i5 with forward-only arrows, two sources sharing i1
        spec = make_spec(
            nodes=[("i1", 3.0), ("i2", 3.0), ("i3", 3.0), ("i4", 3.0), ("i5", 3.0)],
            sources=[("s1", 0.4, {"i1": 1.0}), ("s2", 0.3, {"i1": 0.5, "i2": 0.5})],
            routing={
                "i1": {"i2": 0.3, "i3": 0.4, "i4": 0.3},
                "i2": {"i3": 0.5, "i5": 0.5},
                "i3": {"i4": 0.5, "i5": 0.5},
                "i4": {},
                "i5": {},
            },
        )
        assert is_feed_forward(spec)
        for s in spec.sources:
            total = sum(r.probability for r in enumerate_routes(spec, s.id))
            assert total == pytest.approx(1.0, abs=1e-12)


class TestDeterminism:
    def test_parse_validate_solve_pure(self):
        text = json.dumps(make_doc(
            nodes=[("i1", 3.0), ("i2", 2.0), ("i3", 2.0)],
            sources=[("s1", 1.0, {"i1": 1.0})],
            routing={"i1": {"i2": 0.4, "i3": 0.6}, "i2": {}, "i3": {}}))
        a, b = parse_network(text), parse_network(text)
        assert validate(a) == validate(b)
        assert solve_traffic(a) == solve_traffic(b)


class TestEditHelpers:
    def test_entry_split(self):
        spec = with_entry_split(parallel_spec(delta=0.5), "s1", 0.3)
        assert spec.sources[0].entry == {"i1": 0.3, "i2": 0.7}

    def test_entry_split_needs_two_branches(self):
        with pytest.raises(SpecDomainError):
            with_entry_split(tandem_spec(), "s1", 0.3)

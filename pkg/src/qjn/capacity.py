"""Capacity of queue networks whose erasure probability grows with sojourn time.

All capacities are in bits/sec.  For exponential erasure clocks the per-route
survival has the closed form prod_i r_i/(kappa + r_i) over the residual rates
r_i = mu_i - xi_i, and repeater-assisted and repeater-less networks coincide
exactly.  General erasure models are evaluated by quadrature against the
sojourn-time law, never symbolically.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath as mp
import numpy as np
from scipy import integrate

from .errors import InstabilityError, ToleranceError
from .model import (
    ErasureModel,
    ExponentialErasure,
    NetworkSpec,
    NetworkType,
    Route,
    TrafficSolution,
    enumerate_routes,
    solve_traffic,
    topological_order,
)

# Mass allowed past the quadrature truncation point.
_TAIL_EPS = 1e-12
# Largest partial-fraction weight before the closed-form density loses too
# many digits to cancellation; beyond this we switch to the phase-type form.
_WEIGHT_LIMIT = 1e6


def laplace_exp_waiting(r: float, kappa: float) -> float:
    """E[exp(-kappa*W)] for W ~ Exponential(r): the transform r/(kappa + r)."""
    if r <= 0.0:
        raise ValueError(f"rate must be > 0, got {r}")
    if kappa < 0.0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    return r / (kappa + r)


@dataclass(frozen=True)
class SojournLaw:
    """Rates of the independent exponential sojourn times along a route."""

    rates: tuple[float, ...]

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        if not rates:
            raise ValueError("sojourn law needs at least one rate")
        if any(not np.isfinite(r) or r <= 0.0 for r in rates):
            raise InstabilityError(f"sojourn rates must all be > 0, got {rates}")
        object.__setattr__(self, "rates", rates)

    @property
    def mean(self) -> float:
        return sum(1.0 / r for r in self.rates)

    @property
    def var(self) -> float:
        return sum(1.0 / r**2 for r in self.rates)


def _partial_fraction_weights(rates: np.ndarray) -> np.ndarray | None:
    """Weights w_i with density sum_i w_i r_i exp(-r_i t); None if ill-conditioned.

    w_i = prod_{j != i} r_j / (r_j - r_i) explodes as rates coalesce, and the
    alternating sum then cancels catastrophically, so refuse when any weight
    exceeds _WEIGHT_LIMIT.
    """
    n = rates.size
    w = np.empty(n)
    for i in range(n):
        diff = np.delete(rates - rates[i], i)
        if np.any(diff == 0.0):
            return None
        w[i] = np.prod(np.delete(rates, i) / diff)
    if np.max(np.abs(w)) > _WEIGHT_LIMIT:
        return None
    return w


def _mp_exponential_mixture(rates: np.ndarray):
    """density/survival closures for clustered rates, in exact arithmetic.

    Bit-equal rates are split by centered relative steps of 1e-12 (the
    centering cancels the first-order effect, leaving an O(1e-24) bias), and
    the same partial-fraction sum is then evaluated with enough decimal
    digits to absorb the cancellation, which double precision cannot.
    """
    split = 1e-12
    counts: dict[float, int] = {}
    for x in sorted(float(v) for v in rates):
        counts[x] = counts.get(x, 0) + 1
    values: list[float] = []
    for x, k in counts.items():
        if k == 1:
            values.append(x)
        else:
            values.extend(x * (1.0 + split * (j - (k - 1) / 2.0)) for j in range(k))
    values.sort()
    scale = values[-1]
    digits = 25
    for a, b in zip(values, values[1:]):
        gap = (b - a) / scale
        if gap < 1e-3:
            digits += int(-math.log10(gap)) + 1
    with mp.workdps(digits):
        rr = [mp.mpf(v) for v in values]
        weights = []
        for i, ri in enumerate(rr):
            w = mp.mpf(1)
            for j, rj in enumerate(rr):
                if i != j:
                    w *= rj / (rj - ri)
            weights.append(w)

    def density(t: float) -> float:
        with mp.workdps(digits):
            tt = mp.mpf(t)
            return float(mp.fsum(w * ri * mp.e ** (-ri * tt) for w, ri in zip(weights, rr)))

    def survival(t: float) -> float:
        with mp.workdps(digits):
            tt = mp.mpf(t)
            return float(mp.fsum(w * mp.e ** (-ri * tt) for w, ri in zip(weights, rr)))

    return density, survival


def _tail_point(rates: np.ndarray, survival: Callable[[float], float]) -> float:
    law = SojournLaw(tuple(rates))
    t = law.mean + 12.0 * math.sqrt(law.var) + 1.0 / rates.min()
    for _ in range(200):
        if survival(t) < _TAIL_EPS:
            return t
        t *= 1.5
    raise ToleranceError("could not truncate the sojourn-time tail")


def hypoexp_expectation(rates: SojournLaw | Sequence[float], f: Callable,
                        abs_tol: float = 1e-10,
                        breakpoints: Sequence[float] = ()) -> float:
    """E[f(S)] for S the sum of independent exponentials with the given rates.

    f must be bounded in [0, 1].  The sum-of-exponentials closed-form density
    is evaluated in double precision while its partial-fraction weights stay
    well conditioned and in exact arbitrary-precision arithmetic once rates
    cluster.  Adaptive quadrature with absolute tolerance abs_tol; knots of a
    piecewise f can be passed as breakpoints so the error estimate stays
    sharp.  The truncated tail carries mass below 1e-12.
    """
    law = rates if isinstance(rates, SojournLaw) else SojournLaw(tuple(rates))
    r = np.asarray(law.rates)

    if r.size == 1:
        rate = float(r[0])

        def density(t):
            return rate * math.exp(-rate * t)

        def survival(t):
            return math.exp(-rate * t)
    else:
        weights = _partial_fraction_weights(r)
        if weights is not None:
            wr = weights * r

            def density(t):
                return float(wr @ np.exp(-r * t))

            def survival(t):
                return float(weights @ np.exp(-r * t))
        else:
            density, survival = _mp_exponential_mixture(r)

    upper = _tail_point(r, survival)
    knots = sorted({float(b) for b in breakpoints if 0.0 < float(b) < upper})

    def integrand(t):
        return float(f(t)) * density(t)

    with warnings.catch_warnings():
        # certification is rechecked below; the panelled retry handles the
        # cases scipy warns about
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err = integrate.quad(integrand, 0.0, upper, epsabs=abs_tol / 5.0,
                                    epsrel=abs_tol / 5.0, limit=500,
                                    points=knots or None)
    if err > abs_tol:
        # unadvertised kinks in f inflate the global estimate; panel the
        # interval so they stay confined and the error bounds stay sharp
        edges = np.unique(np.concatenate([np.linspace(0.0, upper, 65), knots]))
        value, err = 0.0, 0.0
        for a, b in zip(edges, edges[1:]):
            v, e = integrate.quad(integrand, a, b, epsabs=abs_tol / (5.0 * edges.size),
                                  epsrel=abs_tol / 5.0, limit=100)
            value += v
            err += e
    if err > abs_tol:
        raise ToleranceError(
            f"quadrature error estimate {err:.3e} exceeds tolerance {abs_tol:.1e}"
        )
    return float(min(max(value, 0.0), 1.0))


# ---------------------------------------------------------------------------
# Closed topologies
# ---------------------------------------------------------------------------


def single_queue_capacity(lam: float, mu: float, erasure: ErasureModel) -> float:
    """lam * E[q(W)] with W ~ Exponential(mu - lam).

    Exponential erasure gives the closed form lam*(mu-lam)/(kappa+mu-lam).
    """
    if lam < 0.0 or mu <= 0.0:
        raise ValueError(f"need 0 <= lam and mu > 0, got lam={lam}, mu={mu}")
    if lam >= mu:
        raise InstabilityError(f"arrival rate {lam} >= service rate {mu}")
    if lam == 0.0:
        return 0.0
    r = mu - lam
    if isinstance(erasure, ExponentialErasure):
        return lam * laplace_exp_waiting(r, erasure.kappa)
    return lam * hypoexp_expectation((r,), erasure.q, breakpoints=erasure.breakpoints())


def tandem_capacity(lam: float, mus: Sequence[float], erasure: ErasureModel,
                    network_type: NetworkType = NetworkType.REPEATER_ASSISTED) -> float:
    """Capacity of m nodes in series, every qubit visiting all of them.

    Repeater-assisted: lam * prod_i E[q(W_i)].  Repeater-less:
    lam * E[q(sum_i W_i)].  Under exponential erasure both reduce to
    lam * prod_i (mu_i - lam)/(kappa + mu_i - lam).
    """
    mus = tuple(float(m) for m in mus)
    if not mus:
        raise ValueError("tandem needs at least one node")
    if lam < 0.0:
        raise ValueError(f"arrival rate must be >= 0, got {lam}")
    if lam >= min(mus):
        raise InstabilityError(f"arrival rate {lam} >= slowest service rate {min(mus)}")
    if lam == 0.0:
        return 0.0
    residuals = [mu - lam for mu in mus]
    if isinstance(erasure, ExponentialErasure):
        k = erasure.kappa
        return lam * math.prod(laplace_exp_waiting(r, k) for r in residuals)
    if NetworkType(network_type) is NetworkType.REPEATER_ASSISTED:
        return lam * math.prod(
            hypoexp_expectation((r,), erasure.q, breakpoints=erasure.breakpoints())
            for r in residuals
        )
    return lam * hypoexp_expectation(residuals, erasure.q, breakpoints=erasure.breakpoints())


def parallel_capacity(lam: float, delta: float, mu1: float, mu2: float,
                      erasure: ErasureModel,
                      network_type: NetworkType = NetworkType.REPEATER_ASSISTED) -> float:
    """Capacity of a two-branch split: branch 1 with probability delta.

    Both network types coincide (each route crosses a single node).
    Exponential erasure gives
    lam*d*(mu1-lam*d)/(k+mu1-lam*d) + lam*(1-d)*(mu2-lam*(1-d))/(k+mu2-lam*(1-d)).
    """
    if not (0.0 <= delta <= 1.0):
        raise ValueError(f"delta must lie in [0, 1], got {delta}")
    if lam < 0.0:
        raise ValueError(f"arrival rate must be >= 0, got {lam}")
    branches = ((delta, mu1), (1.0 - delta, mu2))
    for weight, mu in branches:
        if lam * weight >= mu:
            raise InstabilityError(
                f"branch rate {lam * weight} >= service rate {mu} (delta={delta})"
            )
    if lam == 0.0:
        return 0.0
    del network_type  # single node per route: restart vs total sojourn is moot
    total = 0.0
    for weight, mu in branches:
        if weight == 0.0:
            continue
        r = mu - lam * weight
        if isinstance(erasure, ExponentialErasure):
            total += lam * weight * laplace_exp_waiting(r, erasure.kappa)
        else:
            total += lam * weight * hypoexp_expectation(
                (r,), erasure.q, breakpoints=erasure.breakpoints())
    return total


# ---------------------------------------------------------------------------
# General feed-forward networks
# ---------------------------------------------------------------------------


def route_survival(route: Route, traffic: TrafficSolution, erasure: ErasureModel,
                   network_type: NetworkType) -> float:
    """Probability that a qubit traversing the route arrives unerased.

    Repeater-assisted: prod_i E[q(W_i)] with W_i ~ Exponential(mu_i - xi_i).
    Repeater-less: E[q(sum_i W_i)] over the hypoexponential total sojourn.
    Exponential erasure collapses both to prod_i r_i/(kappa + r_i).
    """
    rates = []
    for node_id in route.intermediate_nodes:
        r = traffic.residual_rates[node_id]
        if r <= 0.0:
            raise InstabilityError(f"node {node_id!r} on route {route.path} is unstable")
        rates.append(r)
    if isinstance(erasure, ExponentialErasure):
        k = erasure.kappa
        return math.prod(laplace_exp_waiting(r, k) for r in rates)
    if NetworkType(network_type) is NetworkType.REPEATER_ASSISTED:
        return math.prod(
            hypoexp_expectation((r,), erasure.q, breakpoints=erasure.breakpoints())
            for r in rates
        )
    return hypoexp_expectation(rates, erasure.q, breakpoints=erasure.breakpoints())


@dataclass(frozen=True)
class RouteContribution:
    route: Route
    probability: float
    survival: float
    contribution: float  # lam_s * probability * survival, bits/sec


@dataclass(frozen=True)
class CapacityReport:
    per_source: dict[str, float]
    per_route: dict[tuple[str, str], RouteContribution]  # (source id, route path)
    method: str  # "closed_form" | "quadrature"
    traffic: TrafficSolution


def jackson_capacity(spec: NetworkSpec, source_id: str | None = None) -> CapacityReport:
    """Per-source capacity of a stable feed-forward network.

    C^(s) = lam_s * sum over routes of probability(route) * survival(route).
    Raises FeedForwardError on cyclic specs and InstabilityError naming the
    offending nodes when any node's net arrival rate reaches its service rate.
    """
    topological_order(spec)  # raises FeedForwardError with the cycle named
    traffic = solve_traffic(spec)
    unstable = traffic.unstable_nodes()
    if unstable:
        raise InstabilityError(f"unstable node(s): {', '.join(unstable)}")

    sources = [spec.source(source_id)] if source_id is not None else list(spec.sources)
    method = "closed_form" if isinstance(spec.erasure, ExponentialErasure) else "quadrature"
    per_source: dict[str, float] = {}
    per_route: dict[tuple[str, str], RouteContribution] = {}
    for src in sources:
        total = 0.0
        for route in enumerate_routes(spec, src.id):
            zeta = route_survival(route, traffic, spec.erasure, spec.network_type)
            contribution = src.rate * route.probability * zeta
            per_route[(src.id, route.path)] = RouteContribution(
                route=route,
                probability=route.probability,
                survival=zeta,
                contribution=contribution,
            )
            total += contribution
        per_source[src.id] = total
    return CapacityReport(per_source=per_source, per_route=per_route,
                          method=method, traffic=traffic)

"""Capacity-maximizing transmission rates and routing splits.

Closed forms are used where they exist (homogeneous series and parallel
topologies) and every closed form is certified against an independent
grid-plus-golden-section search.  The heterogeneous split has no trusted
closed form, so there the search is authoritative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InfeasibleError, ToleranceError

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_EDGE = 1e-9  # relative margin kept from open stability boundaries


@dataclass(frozen=True)
class Optimum:
    """An argmax with its capacity and a certification of how it was found."""

    lambda_star: float | None
    delta_star: float | None
    capacity: float
    method: str  # "closed_form" | "golden_section" | "grid_refine"
    certification: dict | None


# ---------------------------------------------------------------------------
# Search oracle
# ---------------------------------------------------------------------------


def _golden_max(f: Callable[[float], float], a: float, b: float, tol: float,
                max_iter: int = 500) -> float:
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    it = 0
    while (b - a) > tol:
        it += 1
        if it > max_iter:
            raise ToleranceError(
                f"golden section stalled at interval {b - a:.3e} (tol {tol:.1e})"
            )
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def maximize_scalar(f: Callable, lo: float, hi: float, tol: float = 1e-8,
                    grid_points: int = 513) -> float:
    """Argmax of f on [lo, hi]: coarse grid, then golden-section refinement.

    The top three non-adjacent grid cells are refined independently so that
    non-concave objectives with a secondary bump still resolve to the global
    maximum.  f is evaluated vectorized on the grid when it accepts arrays.
    """
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    if tol <= 0.0:
        raise ValueError(f"tolerance must be > 0, got {tol}")
    xs = np.linspace(lo, hi, max(int(grid_points), 2))
    try:
        ys = np.asarray(f(xs), dtype=float)
        if ys.shape != xs.shape:
            raise TypeError
    except Exception:
        ys = np.array([float(f(x)) for x in xs])

    order = np.argsort(ys)[::-1]
    seeds: list[int] = []
    for idx in order:
        if any(abs(int(idx) - s) <= 1 for s in seeds):
            continue
        seeds.append(int(idx))
        if len(seeds) == 3:
            break

    best_x, best_y = float(xs[seeds[0]]), float(ys[seeds[0]])
    last = xs.size - 1
    for idx in seeds:
        a = float(xs[max(idx - 1, 0)])
        b = float(xs[min(idx + 1, last)])
        x = _golden_max(lambda t: float(f(t)), a, b, tol)
        y = float(f(x))
        if y > best_y:
            best_x, best_y = x, y
    return best_x


# ---------------------------------------------------------------------------
# Objectives (exponential erasure closed forms)
# ---------------------------------------------------------------------------


def _tandem_unit_capacity(lam, m: int, kappa: float):
    # m identical unit-rate servers in series
    return lam * ((1.0 - lam) / (kappa + 1.0 - lam)) ** m


def _parallel_cap(lam, delta, mu1: float, mu2: float, kappa: float):
    r1 = mu1 - lam * delta
    r2 = mu2 - lam * (1.0 - delta)
    return lam * delta * r1 / (kappa + r1) + lam * (1.0 - delta) * r2 / (kappa + r2)


def _series_cap(lam: float, delta, mu1: float, mu2: float, mu3: float, kappa: float):
    # two-branch split feeding a common downstream node
    factor = (mu3 - lam) / (kappa + mu3 - lam)
    r1 = mu1 - lam * delta
    r2 = mu2 - lam * (1.0 - delta)
    return (lam * delta * r1 / (kappa + r1) + lam * (1.0 - delta) * r2 / (kappa + r2)) * factor


def _feasible_split(lam: float, mu1: float, mu2: float) -> tuple[float, float]:
    """Closed sub-interval of [0, 1] on which both branches stay stable."""
    if lam <= 0.0:
        return 0.0, 1.0
    lo = max(0.0, 1.0 - mu2 / lam)
    hi = min(1.0, mu1 / lam)
    if lo >= hi:
        raise InfeasibleError(
            f"no stable split exists for lam={lam}, mu1={mu1}, mu2={mu2}"
        )
    width = hi - lo
    if lo > 0.0:
        lo += _EDGE * width
    if hi < 1.0:
        hi -= _EDGE * width
    return lo, hi


# ---------------------------------------------------------------------------
# Optima
# ---------------------------------------------------------------------------


def optimal_tandem_rate(m: int, kappa: float) -> Optimum:
    """Best transmission rate for m identical unit-rate nodes in series.

    Closed form, certified against grid+golden search on (0, 1) to 1e-6.
    """
    if m < 1 or int(m) != m:
        raise ValueError(f"m must be a positive integer, got {m!r}")
    if kappa <= 0.0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    m = int(m)
    k = float(kappa)
    # interior root of the first-order condition for lam*((1-lam)/(k+1-lam))^m:
    # lam^2 - (2 + (m+1)k) lam + (k+1) = 0, whose discriminant simplifies to
    # 4mk + ((m+1)k)^2
    lam_cf = 0.5 * (2.0 + (m + 1) * k - math.sqrt(4.0 * m * k + ((m + 1) * k) ** 2))
    cap_cf = float(_tandem_unit_capacity(lam_cf, m, k))

    def objective(lam):
        return _tandem_unit_capacity(lam, m, k)

    lam_search = maximize_scalar(objective, _EDGE, 1.0 - _EDGE, tol=1e-6)
    cert = {
        "searched_lambda": lam_search,
        "argmax_gap": abs(lam_cf - lam_search),
        "value_gap": abs(cap_cf - float(objective(lam_search))),
    }
    return Optimum(lambda_star=lam_cf, delta_star=None, capacity=cap_cf,
                   method="closed_form", certification=cert)


def optimal_homogeneous_parallel(mu: float, kappa: float) -> Optimum:
    """Best (rate, split) for two identical parallel branches.

    Closed form lam* = 2(mu + kappa - sqrt(mu*kappa + kappa^2)), delta* = 1/2,
    certified against a nested 2-D search to 1e-4.
    """
    if mu <= 0.0:
        raise ValueError(f"mu must be > 0, got {mu}")
    if kappa <= 0.0:
        raise ValueError(f"kappa must be > 0, got {kappa}")
    lam_cf = 2.0 * (mu + kappa - math.sqrt(mu * kappa + kappa * kappa))
    delta_cf = 0.5
    cap_cf = float(_parallel_cap(lam_cf, delta_cf, mu, mu, kappa))

    def best_rate_at(delta: float) -> float:
        hi = mu / max(delta, 1.0 - delta)
        return maximize_scalar(
            lambda lam: _parallel_cap(lam, delta, mu, mu, kappa),
            _EDGE * hi, hi * (1.0 - _EDGE), tol=1e-6,
        )

    def over_delta(delta: float) -> float:
        lam = best_rate_at(delta)
        return float(_parallel_cap(lam, delta, mu, mu, kappa))

    delta_search = maximize_scalar(over_delta, 0.0, 1.0, tol=1e-5, grid_points=129)
    lam_search = best_rate_at(delta_search)
    cert = {
        "searched_lambda": lam_search,
        "searched_delta": delta_search,
        "argmax_gap": max(abs(lam_cf - lam_search), abs(delta_cf - delta_search)),
        "value_gap": abs(cap_cf - float(_parallel_cap(lam_search, delta_search, mu, mu, kappa))),
    }
    return Optimum(lambda_star=lam_cf, delta_star=delta_cf, capacity=cap_cf,
                   method="closed_form", certification=cert)


def _heterogeneous_split_formula(lam: float, mu1: float, mu2: float,
                                 kappa: float) -> float | None:
    """Printed closed form for the heterogeneous split, evaluated verbatim.

    Its middle numerator term mixes a rate with a squared rate, so the value
    is reported for reference only, never trusted.  None for equal service
    rates (the expression divides by mu1 - mu2).
    """
    if mu1 == mu2 or lam <= 0.0:
        return None
    denom = lam * lam * (mu1 - mu2)
    root = math.sqrt(lam * lam * (kappa + mu1) * (kappa + mu2)
                     * (2.0 * kappa - lam + mu1 + mu2) ** 2)
    rest = (2.0 * kappa * kappa * lam + lam * mu1 - 2.0 * lam * mu1 * mu2
            + kappa * lam * (lam - 2.0 * (mu1 + mu2)))
    return root / denom - rest / denom


def optimal_parallel_split(lam: float, mu1: float, mu2: float, kappa: float) -> Optimum:
    """Best routing split for a fixed rate over two heterogeneous branches.

    Golden-section search over the feasible split interval to 1e-8 is the
    authoritative answer; the printed closed form is evaluated alongside and
    the discrepancy reported.
    """
    if lam < 0.0 or mu1 <= 0.0 or mu2 <= 0.0 or kappa < 0.0:
        raise ValueError("rates must be positive and kappa nonnegative")
    lo, hi = _feasible_split(lam, mu1, mu2)

    def objective(delta):
        return _parallel_cap(lam, delta, mu1, mu2, kappa)

    delta_search = maximize_scalar(objective, lo, hi, tol=1e-8)
    cap = float(objective(delta_search))
    formula = _heterogeneous_split_formula(lam, mu1, mu2, kappa)
    cert = {
        "closed_form_delta": formula,
        "closed_form_gap": abs(delta_search - formula) if formula is not None else None,
    }
    return Optimum(lambda_star=None, delta_star=delta_search, capacity=cap,
                   method="golden_section", certification=cert)


def series_invariance_check(lam: float, mu1: float, mu2: float, mu3: float,
                            kappa: float) -> dict[str, float]:
    """Compare the best split with and without a shared downstream node.

    Appending a node in series scales the capacity by a delta-independent
    factor, so the two argmaxes should agree; both are found by identical
    searches and the gap returned.
    """
    if lam >= mu3:
        raise InfeasibleError(f"series node unstable: lam={lam} >= mu3={mu3}")
    lo, hi = _feasible_split(lam, mu1, mu2)

    delta_parallel = maximize_scalar(
        lambda d: _parallel_cap(lam, d, mu1, mu2, kappa), lo, hi, tol=1e-8
    )
    delta_series = maximize_scalar(
        lambda d: _series_cap(lam, d, mu1, mu2, mu3, kappa), lo, hi, tol=1e-8
    )
    return {
        "delta_parallel": float(delta_parallel),
        "delta_series": float(delta_series),
        "gap": abs(float(delta_parallel) - float(delta_series)),
    }

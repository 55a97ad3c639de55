"""Command-line front end.

Subcommands: validate, analyze, simulate, optimize, sweep.  Tables print with
6 significant digits; CSV output keeps full precision, starts with a
``# qjn v1, seed=..., spec_hash=...`` metadata line and uses LF endings.

Exit codes: 0 success, 1 input error, 2 validation/infeasibility,
3 runtime numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .capacity import jackson_capacity, parallel_capacity, tandem_capacity
from .errors import (
    FeedForwardError,
    InfeasibleError,
    InstabilityError,
    InsufficientDataError,
    SingularTrafficError,
    SpecDomainError,
    SpecSchemaError,
    SpecSyntaxError,
    ToleranceError,
)
from .model import (
    ExponentialErasure,
    NetworkSpec,
    NetworkType,
    Node,
    Source,
    parse_network,
    solve_traffic,
    spec_to_document,
    topological_order,
    validate,
    with_entry_split,
    with_erasure,
    with_node_mu,
    with_source_rate,
)
from .optimize import (
    Optimum,
    maximize_scalar,
    optimal_homogeneous_parallel,
    optimal_parallel_split,
    optimal_tandem_rate,
)
from .sim import estimate_capacity, merge_estimates, simulate, write_trace_csv

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

_PARAM_ALIASES = {"λ": "lambda", "δ": "delta", "κ": "kappa", "μ": "mu"}


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _print_table(columns: list[str], rows: list[list], indent: str = "") -> None:
    cells = [[_fmt(v) for v in row] for row in rows]
    widths = [max(len(c), *(len(r[k]) for r in cells)) if cells else len(c)
              for k, c in enumerate(columns)]
    print(indent + "  ".join(c.ljust(w) for c, w in zip(columns, widths)))
    for row in cells:
        print(indent + "  ".join(c.ljust(w) for c, w in zip(row, widths)))


def _spec_hash(doc: dict) -> str:
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(canonical).hexdigest()[:16]


def _write_csv(path: str | None, seed, spec_hash: str, columns: list[str],
               rows: list[list]) -> None:
    lines = [f"# qjn v1, seed={seed}, spec_hash={spec_hash}"]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _load_spec(path: str) -> tuple[NetworkSpec, dict]:
    with open(path) as fh:
        text = fh.read()
    spec = parse_network(text)
    return spec, spec_to_document(spec)


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    spec, _ = _load_spec(args.spec)
    report = validate(spec)
    print(f"topology: {report.topology}")
    print(f"network type: {spec.network_type.value}")
    print(f"analytical capacity supported: {_fmt(report.analytical_supported)}")
    if report.traffic is not None:
        rows = [
            [n.id, n.mu, report.traffic.xi[n.id], report.traffic.residual_rates[n.id],
             report.stable[n.id]]
            for n in spec.nodes
        ]
        _print_table(["node", "mu", "xi", "residual", "stable"], rows)
    if report.defects:
        print("defects:")
        for defect in report.defects:
            print(f"  - {defect}")
    else:
        print("ok")
    return EXIT_OK if report.ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def cmd_analyze(args) -> int:
    spec, doc = _load_spec(args.spec)
    report = jackson_capacity(spec, source_id=args.source)
    csv_rows = []
    for source_id, capacity in report.per_source.items():
        print(f"source {source_id}: capacity {_fmt(capacity)} bits/sec ({report.method})")
        rows = []
        for (sid, path), rc in report.per_route.items():
            if sid != source_id:
                continue
            rows.append([path, rc.probability, rc.survival, rc.contribution])
            csv_rows.append([source_id, path, rc.probability, rc.survival,
                             rc.contribution, capacity])
        _print_table(["route", "probability", "survival", "contribution"], rows, indent="  ")
    if args.csv:
        _write_csv(args.csv, args.seed, _spec_hash(doc),
                   ["source", "route", "probability", "survival", "contribution",
                    "source_capacity"],
                   csv_rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def _analytical_column(spec: NetworkSpec) -> dict[str, float] | str:
    try:
        return dict(jackson_capacity(spec).per_source)
    except FeedForwardError:
        return "n/a (loop-back)"
    except (InstabilityError, SingularTrafficError):
        return "n/a (unstable)"


def cmd_simulate(args) -> int:
    spec, doc = _load_spec(args.spec)
    seeds = [args.seed + k for k in range(args.replications)]
    threads = max(1, int(os.environ.get("QJN_THREADS", "1") or "1"))

    def run(seed: int):
        return estimate_capacity(simulate(spec, args.emissions, seed))

    if threads > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            estimates = list(pool.map(run, seeds))
    else:
        estimates = [run(seed) for seed in seeds]
    pooled = merge_estimates(estimates)
    analytical = _analytical_column(spec)

    if args.trace_csv:
        write_trace_csv(simulate(spec, args.emissions, args.seed), args.trace_csv)

    columns = ["source", "rate", "estimate", "ci95", "n_emitted", "unerased",
               "analytical", "covered"]
    rows = []
    csv_rows = []
    for source_id, est in pooled.per_source.items():
        if isinstance(analytical, str):
            exact, covered = analytical, None
        else:
            exact = analytical[source_id]
            covered = abs(exact - est.capacity_estimate) <= est.ci_halfwidth
        rows.append([source_id, est.rate, est.capacity_estimate, est.ci_halfwidth,
                     est.n_emitted, est.n_delivered_unerased, exact, covered])
        csv_rows.append([source_id, est.rate, est.capacity_estimate, est.ci_halfwidth,
                         est.n_emitted, est.n_delivered_unerased,
                         exact if isinstance(exact, float) else exact,
                         "" if covered is None else ("yes" if covered else "no")])
    print(f"replications: {args.replications}, emissions/source: {args.emissions}, "
          f"batches pooled: {pooled.batch_count}")
    _print_table(columns, rows)
    if args.csv:
        _write_csv(args.csv, args.seed, _spec_hash(doc),
                   ["source", "rate", "estimate", "ci_halfwidth", "n_emitted",
                    "n_delivered_unerased", "analytical", "covered"],
                   csv_rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# optimize
# ---------------------------------------------------------------------------


def _optimize_spec_rate(spec: NetworkSpec) -> Optimum:
    """Search the single source's rate; upper bound set by node stability."""
    if len(spec.sources) != 1:
        raise InfeasibleError("rate optimization over a spec needs exactly one source")
    topological_order(spec)  # cyclic specs are out of scope
    src = spec.sources[0]
    unit = solve_traffic(with_source_rate(spec, src.id, 1.0))
    lam_max = min(spec.node(i).mu / unit.xi[i] for i in spec.node_ids if unit.xi[i] > 0.0)

    def objective(lam: float) -> float:
        return jackson_capacity(with_source_rate(spec, src.id, float(lam))).per_source[src.id]

    lam = maximize_scalar(objective, 1e-9 * lam_max, lam_max * (1.0 - 1e-9),
                          tol=1e-6, grid_points=257)
    return Optimum(lambda_star=float(lam), delta_star=None,
                   capacity=float(objective(lam)), method="grid_refine",
                   certification=None)


def _print_optimum(opt: Optimum) -> None:
    rows = [[opt.lambda_star, opt.delta_star, opt.capacity, opt.method]]
    _print_table(["lambda*", "delta*", "capacity", "method"], rows)
    if opt.certification:
        parts = [f"{k}={_fmt(v)}" for k, v in opt.certification.items()]
        print("certification: " + ", ".join(parts))


def cmd_optimize(args) -> int:
    if args.topology == "tandem":
        if args.m is None or args.kappa is None:
            raise SpecSchemaError("tandem optimization needs --m and --kappa")
        opt = optimal_tandem_rate(args.m, args.kappa)
    elif args.topology == "parallel":
        if args.kappa is None:
            raise SpecSchemaError("parallel optimization needs --kappa")
        if args.mu1 is not None or args.mu2 is not None or args.lam is not None:
            if None in (args.mu1, args.mu2, args.lam):
                raise SpecSchemaError(
                    "heterogeneous split needs --mu1, --mu2 and --lambda together"
                )
            opt = optimal_parallel_split(args.lam, args.mu1, args.mu2, args.kappa)
        else:
            if args.mu is None:
                raise SpecSchemaError("homogeneous parallel optimization needs --mu")
            opt = optimal_homogeneous_parallel(args.mu, args.kappa)
    elif args.spec is not None:
        spec, _ = _load_spec(args.spec)
        opt = _optimize_spec_rate(spec)
    else:
        raise SpecSchemaError("give a spec file or --topology tandem|parallel")
    _print_optimum(opt)
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _tandem_document(lam: float, mus, kappa: float) -> dict:
    node_ids = [f"i{k + 1}" for k in range(len(mus))]
    routing = {}
    for k, node_id in enumerate(node_ids):
        routing[node_id] = {node_ids[k + 1]: 1.0} if k + 1 < len(node_ids) else {}
    return {
        "nodes": [{"id": i, "mu": float(m)} for i, m in zip(node_ids, mus)],
        "sources": [{"id": "s1", "lambda": lam, "entry": {node_ids[0]: 1.0}}],
        "routing": routing,
        "network_type": "repeater_assisted",
        "erasure": {"model": "exponential", "kappa": kappa},
    }


def _parallel_document(lam: float, delta: float, mu1: float, mu2: float,
                       kappa: float) -> dict:
    return {
        "nodes": [{"id": "i1", "mu": mu1}, {"id": "i2", "mu": mu2}],
        "sources": [{"id": "s1", "lambda": lam, "entry": {"i1": delta, "i2": 1.0 - delta}}],
        "routing": {"i1": {}, "i2": {}},
        "network_type": "repeater_assisted",
        "erasure": {"model": "exponential", "kappa": kappa},
    }


def _preset_rows(preset: str) -> tuple[list[str], list[list], dict]:
    if preset == "fig3":
        grid = np.linspace(0.0, 0.99, 100)
        columns = ["lambda", "capacity_kappa_1", "capacity_kappa_0.5"]
        rows = [
            [float(lam),
             tandem_capacity(float(lam), (1.0, 1.0), ExponentialErasure(1.0)),
             tandem_capacity(float(lam), (1.0, 1.0), ExponentialErasure(0.5))]
            for lam in grid
        ]
        return columns, rows, _tandem_document(0.0, (1.0, 1.0), 1.0)
    if preset == "fig5":
        grid = np.linspace(0.0, 1.0, 101)
        columns = ["delta", "capacity_lambda_1", "capacity_lambda_1.9"]
        rows = [
            [float(d),
             parallel_capacity(1.0, float(d), 2.0, 3.0, ExponentialErasure(1.0)),
             parallel_capacity(1.9, float(d), 2.0, 3.0, ExponentialErasure(1.0))]
            for d in grid
        ]
        return columns, rows, _parallel_document(1.0, 0.5, 2.0, 3.0, 1.0)
    if preset == "fig6":
        grid = np.linspace(0.0, 1.99, 200)
        columns = ["lambda", "capacity_kappa_1", "capacity_kappa_0.5"]
        rows = [
            [float(lam),
             parallel_capacity(float(lam), 0.5, 1.0, 1.0, ExponentialErasure(1.0)),
             parallel_capacity(float(lam), 0.5, 1.0, 1.0, ExponentialErasure(0.5))]
            for lam in grid
        ]
        return columns, rows, _parallel_document(0.0, 0.5, 1.0, 1.0, 1.0)
    raise SpecSchemaError(f"unknown preset {preset!r}")


def _sweep_variant(spec: NetworkSpec, param: str, value: float, source_id: str,
                   node_id: str | None) -> NetworkSpec:
    if param == "lambda":
        return with_source_rate(spec, source_id, value)
    if param == "delta":
        return with_entry_split(spec, source_id, value)
    if param == "kappa":
        return with_erasure(spec, ExponentialErasure(value))
    if param == "mu":
        if node_id is None:
            raise SpecSchemaError("sweeping mu needs --node")
        return with_node_mu(spec, node_id, value)
    raise SpecSchemaError(f"unknown sweep parameter {param!r}")


def cmd_sweep(args) -> int:
    if args.preset:
        columns, rows, doc = _preset_rows(args.preset)
        _write_csv(args.csv, args.seed, _spec_hash(doc), columns, rows)
        return EXIT_OK

    if args.spec is None:
        raise SpecSchemaError("sweep needs a spec file or --preset")
    if args.param is None or args.start is None or args.stop is None or args.steps is None:
        raise SpecSchemaError("sweep needs --param, --from, --to and --steps")
    if not args.start < args.stop:
        raise SpecDomainError(f"need from < to, got [{args.start}, {args.stop}]")
    if args.steps < 2:
        raise SpecDomainError(f"need at least 2 steps, got {args.steps}")
    param = _PARAM_ALIASES.get(args.param, args.param)

    spec, doc = _load_spec(args.spec)
    topological_order(spec)  # analytical sweeps need a feed-forward network
    if param == "kappa" and not isinstance(spec.erasure, ExponentialErasure):
        raise SpecSchemaError("kappa sweeps need an exponential erasure model")
    source_id = args.source or (spec.sources[0].id if len(spec.sources) == 1 else None)
    if param in ("lambda", "delta") and source_id is None:
        raise SpecSchemaError("this sweep needs --source on multi-source specs")

    columns = [param, "feasible"]
    cap_cols = [f"capacity_{s.id}" for s in spec.sources]
    columns.extend(cap_cols)
    if args.simulate:
        for s in spec.sources:
            columns.extend([f"estimate_{s.id}", f"ci_{s.id}"])

    rows = []
    for k, value in enumerate(np.linspace(args.start, args.stop, args.steps)):
        value = float(value)
        row: list = [value]
        try:
            variant = _sweep_variant(spec, param, value, source_id, args.node)
            report = jackson_capacity(variant)
        except (InstabilityError, SpecDomainError, InfeasibleError):
            row.append("no")
            row.extend([None] * (len(columns) - 2))
            rows.append(row)
            continue
        row.append("yes")
        row.extend(report.per_source[s.id] for s in spec.sources)
        if args.simulate:
            estimate = estimate_capacity(simulate(variant, args.emissions, args.seed + k))
            for s in spec.sources:
                if s.id in estimate.per_source:
                    est = estimate.per_source[s.id]
                    row.extend([est.capacity_estimate, est.ci_halfwidth])
                else:  # zero-rate source emits nothing
                    row.extend([0.0, 0.0])
        rows.append(row)
    _write_csv(args.csv, args.seed, _spec_hash(doc), columns, rows)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # usage problems are input errors (exit 1), not validation failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qjn",
                     description="Analyze, simulate and optimize erasure queue networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a network document")
    p.add_argument("spec")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="analytical capacity with per-route breakdown")
    p.add_argument("spec")
    p.add_argument("--source", default=None)
    p.add_argument("--csv", default=None)
    p.add_argument("--seed", type=int, default=0, help="recorded in CSV metadata")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte Carlo capacity estimate")
    p.add_argument("spec")
    p.add_argument("--emissions", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--csv", default=None)
    p.add_argument("--trace-csv", dest="trace_csv", default=None,
                   help="also export the per-qubit trace")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="capacity-maximizing rate and split")
    p.add_argument("spec", nargs="?", default=None)
    p.add_argument("--topology", choices=["tandem", "parallel"], default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--mu1", type=float, default=None)
    p.add_argument("--mu2", type=float, default=None)
    p.add_argument("--lambda", dest="lam", type=float, default=None)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="parameter sweep as CSV")
    p.add_argument("spec", nargs="?", default=None)
    p.add_argument("--param", default=None,
                   help="lambda | delta | kappa | mu (unicode aliases accepted)")
    p.add_argument("--from", dest="start", type=float, default=None)
    p.add_argument("--to", dest="stop", type=float, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--source", default=None)
    p.add_argument("--node", default=None, help="node id for mu sweeps")
    p.add_argument("--simulate", action="store_true")
    p.add_argument("--emissions", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", choices=["fig3", "fig5", "fig6"], default=None)
    p.add_argument("--csv", default=None, help="write here instead of stdout")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpecSyntaxError, SpecSchemaError, SpecDomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InstabilityError, FeedForwardError, InfeasibleError,
            SingularTrafficError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ToleranceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()

"""Command line entry point: ``spssr {params,gen,run,audit,serve,bench}``.

Exit codes: 0 success, 1 validation failure, 2 audit failure, 3 transport failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

from .errors import SPSSRError, TransportError
from .model import (
    Database,
    DemandFamily,
    Instance,
    derive_params,
    gen_database,
    read_json,
    validate_family,
    write_json,
)
from .randomness import SeededSource
from .scheme import gen_query_first, run_round
from .verification import (
    audit_correctness,
    audit_privacy_exact,
    audit_privacy_statistical,
    audit_security_algebraic,
    audit_security_exact,
    comparison_csv,
    comparison_table,
    merge_reports,
    verify_metrics,
)
from .verification.audits import PRIVACY_MAX_BITS
from .verification.report import AuditReport, instance_descriptor

EXIT_OK, EXIT_VALIDATION, EXIT_AUDIT, EXIT_TRANSPORT = 0, 1, 2, 3

log = logging.getLogger("spssr")


class UsageError(Exception):
    pass


def resolve_seed(cli_seed: int | None, fallback: int | None = None) -> int:
    env = os.environ.get("SPSSR_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"SPSSR_SEED must be an integer, got {env!r}")
    if cli_seed is not None:
        return cli_seed
    return fallback if fallback is not None else 0


def parse_demand(text: str) -> tuple[int, ...]:
    try:
        return tuple(sorted(int(t) for t in text.replace(" ", "").split(",") if t))
    except ValueError:
        raise UsageError(f"demand must be comma-separated integers, got {text!r}")


def parse_grid(spec: str) -> dict[str, list[int]]:
    """``"N=2:8;K=3:10;D=2:9;q=2,257"`` -> lists of values (ranges inclusive)."""
    grid: dict[str, list[int]] = {}
    for part in filter(None, (p.strip() for p in spec.split(";"))):
        key, sep, value = part.partition("=")
        if not sep or key not in ("N", "K", "D", "q"):
            raise UsageError(f"bad grid term {part!r}; expected N=, K=, D= or q=")
        try:
            if ":" in value:
                lo, hi = (int(v) for v in value.split(":"))
                grid[key] = list(range(lo, hi + 1))
            else:
                grid[key] = [int(v) for v in value.split(",")]
        except ValueError:
            raise UsageError(f"bad grid values {value!r}")
    return grid


def grid_points(grid: dict[str, list[int]]):
    for N in grid.get("N", range(2, 6)):
        for K in grid.get("K", range(3, 9)):
            for D in grid.get("D", range(2, K)):
                if 2 <= D <= K - 1:
                    for q in grid.get("q", [257]):
                        yield N, K, D, q


def load_family_file(path: str, K: int, D: int) -> DemandFamily:
    doc = read_json(path)
    sets = doc["family"] if isinstance(doc, dict) else doc
    return DemandFamily.from_sets(K, D, sets)


def cyclic_family(K: int, D: int) -> DemandFamily:
    """K windows of D consecutive indices (mod K): full union, empty intersection."""
    return DemandFamily.from_sets(K, D, [[(s + j) % K + 1 for j in range(D)] for s in range(K)])


def load_instance(path: str) -> Instance:
    inst = Instance.from_json(read_json(path))
    report = validate_family(inst.family)
    if not report.well_formed:
        raise UsageError(f"instance family is malformed: {', '.join(report.failures())}")
    return inst


def default_db_path(instance_path: str) -> Path:
    return Path(instance_path).with_name("database.json")


def emit(report: AuditReport, out: str | None) -> None:
    if out:
        report.write(out)
        print(f"{report.audit_kind}: {report.verdict} (report written to {out})")
    else:
        print(report.dumps())


# --- subcommands ----------------------------------------------------------------

def cmd_params(args) -> int:
    p = derive_params(args.N, args.K, args.D, q=args.q)
    print(f"N={p.N} K={p.K} D={p.D} G={p.G} L={p.L} M={p.M} "
          f"rate={p.rate} ratio={p.randomness_ratio}")
    print()
    sys.stdout.write(comparison_csv(comparison_table(p)))
    return EXIT_OK


def cmd_gen(args) -> int:
    seed = resolve_seed(args.seed)
    if args.family:
        fam = load_family_file(args.family, args.k, args.d)
    else:
        fam = DemandFamily.full(args.k, args.d)
    report = validate_family(fam)
    if not report.well_formed:
        raise UsageError(f"family is malformed: {', '.join(report.failures())}")
    if not report.protocol_ready:
        log.warning("family is not normalized (%s); the scheme still applies",
                    ", ".join(report.failures()))
    inst = Instance(args.q, args.n, args.k, args.d, fam, seed)
    db = gen_database(inst.params, SeededSource(seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "instance.json", inst.to_json())
    write_json(out / "database.json", db.to_json())
    print(f"wrote {out / 'instance.json'} and {out / 'database.json'}")
    return EXIT_OK


def cmd_run(args) -> int:
    from .harness.client import simulate_round

    inst = load_instance(args.instance)
    params = inst.params
    W = parse_demand(args.demand)
    db_path = Path(args.db) if args.db else default_db_path(args.instance)
    db = Database.from_json(read_json(db_path)) if db_path.exists() else None
    rng = SeededSource(resolve_seed(args.seed, inst.seed))
    if args.tcp:
        endpoints = [e.strip() for e in args.tcp.split(",") if e.strip()]
        result, metrics = simulate_round(params, inst.family, W, rng, "tcp",
                                         endpoints=endpoints, timeout=args.timeout)
    else:
        if db is None:
            raise UsageError(f"no database at {db_path}; pass --db or --tcp")
        result, metrics = simulate_round(params, inst.family, W, rng, "in_process", db=db)
    print(json.dumps({"metrics": metrics.to_json(), "result": result.to_json()},
                     indent=2, sort_keys=True))
    if db is not None:
        expected = [db.message_ints()[i - 1] for i in result.demand]
        if result.recovered_ints() != expected:
            print("recovery check: FAILED", file=sys.stderr)
            return EXIT_AUDIT
        print("recovery check: ok")
    return EXIT_OK


def _metrics_grid(grid: dict[str, list[int]]) -> AuditReport:
    reports = [verify_metrics(derive_params(N, K, D, q=2)) for N, K, D, _ in grid_points(grid)]
    failing = [r.instance for r in reports if not r.passed]
    return AuditReport("metrics", {"grid": grid}, not failing,
                       {"points": len(reports), "failing": failing})


def cmd_audit(args) -> int:
    if args.kind == "metrics" and args.grid:
        report = _metrics_grid(parse_grid(args.grid))
        emit(report, args.out)
        return EXIT_OK if report.passed else EXIT_AUDIT
    if not args.instance:
        raise UsageError("--instance is required")
    inst = load_instance(args.instance)
    params, fam = inst.params, inst.family
    seed = resolve_seed(args.seed, inst.seed)
    exhaustive = args.samples is None

    if args.kind == "metrics":
        report = verify_metrics(params)
    elif args.kind == "correctness":
        report = (audit_correctness(params, fam, "exhaustive") if exhaustive
                  else audit_correctness(params, fam, "sampled", trials=args.samples, seed=seed))
    elif args.kind == "privacy":
        if exhaustive:
            if params.query_bits > PRIVACY_MAX_BITS:
                raise UsageError("instance too large for the exact privacy audit; use --samples")
            report = audit_privacy_exact(params, fam)
        else:
            report = audit_privacy_statistical(params, fam, samples=max(args.samples, 10**4),
                                               significance=args.alpha, seed=seed)
    elif args.kind == "security":
        desc = instance_descriptor(params, fam)
        if exhaustive:
            report = merge_reports("security_exact", desc,
                                   [audit_security_exact(params, fam, W) for W in fam])
        else:
            rng = SeededSource(seed)
            parts = []
            for _ in range(args.samples):
                W = fam.sets[rng.symbols(1, fam.E)[0]]
                parts.append(audit_security_algebraic(params, fam, W, gen_query_first(params, rng)))
            report = AuditReport("security_algebraic", desc, all(r.passed for r in parts),
                                 {"rounds": len(parts),
                                  "failing": [r.to_json() for r in parts if not r.passed][:10]})
    else:  # argparse restricts choices
        raise UsageError(args.kind)
    emit(report, args.out)
    return EXIT_OK if report.passed else EXIT_AUDIT


def cmd_serve(args) -> int:
    from .harness.server import serve

    db = Database.from_json(read_json(args.db))
    serve((args.host, args.port), db, args.server_index)
    return EXIT_OK


def cmd_bench(args) -> int:
    grid = parse_grid(args.grid)
    seed = resolve_seed(args.seed)
    rows = []
    for N, K, D, q in grid_points(grid):
        fam = cyclic_family(K, D)
        params = derive_params(N, K, D, fam.E, q)
        rng = SeededSource(seed)
        db = gen_database(params, rng)
        start = time.perf_counter()
        for r in range(args.rounds):
            W = fam.sets[r % fam.E]
            res = run_round(params, fam, W, db, rng)
            if res.recovered_ints() != [db.message_ints()[i - 1] for i in W]:
                print(f"decode failure at N={N} K={K} D={D} q={q}", file=sys.stderr)
                return EXIT_AUDIT
        elapsed = (time.perf_counter() - start) / args.rounds
        rows.append({"N": N, "K": K, "D": D, "q": q, "E": fam.E, "G": params.G, "L": params.L,
                     "M": params.M, "rate": str(params.rate),
                     "randomness_ratio": str(params.randomness_ratio),
                     "spir_x_d_subpacketization": N - 1,
                     "round_time_ms": f"{elapsed * 1e3:.4f}"})
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]) if rows else ["N"],
                                lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} rows to {out}")
    if rows and not args.no_figures:
        from .harness.figures import plot_round_time, plot_subpacketization

        for path in (plot_subpacketization(rows, out.with_name(out.stem + "_subpacketization.png")),
                     plot_round_time(rows, out.with_name(out.stem + "_round_time.png"))):
            print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spssr", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="derived parameters and comparison table")
    p.add_argument("N", type=int)
    p.add_argument("K", type=int)
    p.add_argument("D", type=int)
    p.add_argument("--q", type=int, default=257)
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("gen", help="write instance.json and database.json")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--q", type=int, default=257)
    fam = p.add_mutually_exclusive_group(required=True)
    fam.add_argument("--family", help="JSON file with a list of 1-based index sets")
    fam.add_argument("--full-family", action="store_true", help="all D-subsets of [1:K]")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="execute one retrieval round")
    p.add_argument("--instance", required=True)
    p.add_argument("--db", help="database file (default: database.json next to the instance)")
    p.add_argument("--demand", required=True, help="e.g. 1,2,3,4")
    p.add_argument("--tcp", help="comma-separated host:port list, one per server in order")
    p.add_argument("--seed", type=int)
    p.add_argument("--timeout", type=float, default=5.0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="run a verification audit and write a JSON report")
    p.add_argument("kind", choices=["correctness", "privacy", "security", "metrics"])
    p.add_argument("--instance")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--exhaustive", action="store_true", help="exact enumeration (default)")
    mode.add_argument("--samples", type=int)
    p.add_argument("--grid", help="metrics only: e.g. 'N=2:8;K=3:10;D=2:9'")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="report path (default: print to stdout)")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("serve", help="answer queries over TCP")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--db", required=True)
    p.add_argument("--server-index", type=int, required=True)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench", help="sweep parameters, write CSV and figures")
    p.add_argument("--grid", required=True)
    p.add_argument("--out", required=True, help="CSV path; figures land next to it")
    p.add_argument("--rounds", type=int, default=20)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_bench)
    return ap


def cli_main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (SPSSRError, UsageError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()

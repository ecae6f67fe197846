"""Command-line surface: load networks, plan and run floods, evaluate
trust, and plan authentication bootstraps.

Exit codes: 0 success, 1 infeasible or insecure result, 2 input error.
Every command is deterministic given its inputs and the seed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

from . import adversary_sim, auth_planner, flood_engine, flow_routing, trust_calculus
from .errors import InfeasibleError, InputError, KeyfloodError
from .topology import Network, TrustTable, load_network, load_trust, merge_trust

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INPUT = 2


@dataclass
class RunConfig:
    """Resolved run parameters: flag > config file > default."""

    seed: int = 1
    block_seconds: float | None = None  # overrides the network file when set
    t_min: float = 0.9925
    min_subset: int = 3
    insecurity: float = 1e-9
    comm_ratio: float = 720_000.0
    reuse_fraction: float = 0.1
    d_convention: str = auth_planner.D_CONVENTION_ROUND
    out: str = "out"

    _FLAGS = {
        "seed": "seed",
        "block_seconds": "block_seconds",
        "t_min": "t_min",
        "min_subset": "min_subset",
        "insecurity": "c",
        "comm_ratio": "g",
        "reuse_fraction": "f",
        "d_convention": "d_convention",
        "out": "out",
    }

    @classmethod
    def resolve(cls, args: argparse.Namespace) -> "RunConfig":
        file_values = {}
        config_path = getattr(args, "config", None)
        if config_path:
            try:
                file_values = json.loads(Path(config_path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise InputError(f"config file: {exc}") from exc
            if not isinstance(file_values, dict):
                raise InputError("config file: expected a JSON object")
        values = {}
        for f in fields(cls):
            flag = cls._FLAGS.get(f.name, f.name)
            flag_value = getattr(args, flag, None)
            if flag_value is not None:
                values[f.name] = flag_value
            elif f.name in file_values:
                values[f.name] = file_values[f.name]
        return cls(**values)


def _load_network(path: str, config: RunConfig) -> Network:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"network file: {exc}") from exc
    net = load_network(text)
    if config.block_seconds is not None:
        net = Network(
            nodes=net.nodes,
            links=net.links,
            unit=net.unit,
            block_seconds=config.block_seconds,
        )
    return net


def _load_trust_files(paths: Sequence[str]) -> list[TrustTable]:
    tables = []
    for p in paths:
        try:
            tables.append(load_trust(Path(p).read_text()))
        except OSError as exc:
            raise InputError(f"trust file: {exc}") from exc
    return tables


def _merged_entries(tables: Sequence[TrustTable]) -> dict[str, float]:
    if not tables:
        return {}
    if len(tables) == 1:
        return dict(tables[0].entries)
    merged = tables[0]
    for t in tables[1:]:
        merged = merge_trust(merged, t)
    return dict(merged.entries)


def _outdir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(outdir: Path, name: str, text: str) -> Path:
    path = outdir / name
    path.write_text(text)
    print(f"wrote {path}")
    return path


# ---------------------------------------------------------------------------
# topology
# ---------------------------------------------------------------------------

def cmd_topology_validate(args, config: RunConfig) -> int:
    net = _load_network(args.network, config)
    links = net.edges(include_zero=True)
    print(
        f"ok: {len(net.nodes)} nodes, {len(links)} links, "
        f"unit={net.unit}, block_seconds={net.block_seconds:g}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# flood
# ---------------------------------------------------------------------------

def cmd_flood_plan(args, config: RunConfig) -> int:
    net = _load_network(args.network, config)
    value, optima = flow_routing.optimal_flood_value(
        net, args.source, args.sink, limit=args.limit
    )
    if value == 0:
        print(f"no path: nothing can flow from {args.source} to {args.sink}")
        return EXIT_INFEASIBLE
    if not optima:
        print(f"optimal flood value {value} (orientation enumeration skipped)")
        return EXIT_OK
    chosen = min(optima, key=lambda d: d.orientation)
    plan = flow_routing.make_plan(chosen)
    print(f"optimal flood value: {value} bits per block")
    print(f"optimal orientations: {len(optima)}")
    print("chosen orientation: " + ", ".join(f"{u}>{v}" for u, v in plan.orientation))
    for node, targets in sorted(plan.output_orders.items()):
        flows = ", ".join(f"{t}({plan.edge_flows[(node, t)]})" for t in targets)
        print(f"  {node} announces to: {flows}")
    _write(_outdir(config), "plan.json", json.dumps(plan.to_document(), sort_keys=True, indent=2))
    return EXIT_OK


def _load_plan(path: str) -> flow_routing.FloodingPlan:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"plan file: {exc}") from exc
    return flow_routing.plan_from_document(obj)


def cmd_flood_run(args, config: RunConfig) -> int:
    net = _load_network(args.network, config)
    plan = _load_plan(args.plan)
    if plan.value <= 0:
        print("empty plan: nothing to deliver")
        return EXIT_INFEASIBLE
    keys = flood_engine.mint_link_keys(net, config.seed)
    run = flood_engine.run_flood(plan, keys)
    rate_key = flood_engine.assemble_rate(run.shared)
    secure_key = flood_engine.assemble_secure(run.shared)

    outdir = _outdir(config)
    _write(outdir, "transcript.jsonl", run.transcript.to_jsonl())
    assembled = {
        "rate_bits": rate_key.length,
        "rate_hex": rate_key.hex(),
        "secure_bits": secure_key.length,
        "secure_hex": secure_key.hex(),
    }
    _write(outdir, "assembled.json", json.dumps(assembled, sort_keys=True, indent=2))
    print(
        f"delivered {sum(k.length for k in run.shared)} bits over "
        f"{len(run.shared)} shared segment(s); {len(run.transcript)} announcement(s)"
    )
    print(f"rate-assembled key: {rate_key.length} bits")
    print(f"secure-assembled key: {secure_key.length} bits")

    # a passive outsider holding only the transcript must learn nothing
    fresh = flood_engine.mint_link_keys(net, config.seed)
    index = adversary_sim.VariableIndex(fresh.values())
    eavesdropper = adversary_sim.AdversaryModel(mode=adversary_sim.TRUSTED)
    reports = [
        adversary_sim.audit_run(
            run.transcript, fresh, eavesdropper, exprs, plan.source, plan.sink
        )
        for exprs in (
            adversary_sim.concat_expression(run.shared, index),
            adversary_sim.xor_expression(run.shared, index),
        )
    ]
    if any(r.compromised for r in reports):
        print("AUDIT FAILED: an external eavesdropper can derive the key")
        return EXIT_INFEASIBLE
    print("eavesdropper audit: pass")
    return EXIT_OK


# ---------------------------------------------------------------------------
# trust
# ---------------------------------------------------------------------------

def _parse_path_spec(spec: str) -> list[tuple[str, ...]]:
    paths = []
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            raise InputError("empty path in --paths spec")
        paths.append(tuple(n.strip() for n in part.split(",") if n.strip()))
    return paths


def _assessment_paths(args, config: RunConfig) -> flow_routing.PathSet:
    if args.paths:
        return flow_routing.PathSet.from_paths(_parse_path_spec(args.paths))
    if args.network and args.source and args.sink:
        net = _load_network(args.network, config)
        subnet = net.subgraph(net.nodes, drop_links=[(args.source, args.sink)])
        return flow_routing.max_disjoint_paths(subnet, args.source, args.sink)
    raise InputError("give --paths or all of --network/--source/--sink")


def _node_trust_for(paths: flow_routing.PathSet, args) -> dict[str, float]:
    nodes = paths.interior_nodes()
    if args.trust:
        tables = _load_trust_files(args.trust)
        entries = _merged_entries(tables)
        return {n: entries.get(n, 0.0) for n in nodes}
    if args.trust_value is not None:
        return {n: args.trust_value for n in nodes}
    raise InputError("give --trust file(s) or --trust-value")


def cmd_trust_eval(args, config: RunConfig) -> int:
    paths = _assessment_paths(args, config)
    node_trust = _node_trust_for(paths, args)
    assess = trust_calculus.TrustAssessment(
        paths=paths, node_trust=node_trust, adversary_mode=args.mode
    )
    oracle_p = trust_calculus.compromise_oracle(assess)
    print(f"paths: {len(paths.paths)}, interior nodes: {len(paths.interior_nodes())}, "
          f"cross points: {sorted(paths.cross_points) or 'none'}, mode: {args.mode}")
    print(f"oracle compromise probability: {oracle_p:.12f}")
    print(f"oracle trust: {1.0 - oracle_p:.12f}")
    if not paths.cross_points and args.mode == trust_calculus.BROADCASTING:
        t = trust_calculus.trust_xor(assess)
        print(f"closed-form trust (xor rule): {t:.12f}")
    if args.paper_literal:
        if args.mode != trust_calculus.BROADCASTING:
            raise InputError("--paper-literal applies to broadcasting mode")
        literal = trust_calculus.compromise_probability_closed(assess)
        print(f"literal closed-form compromise probability: {literal:.12f}")
        print(f"note: {trust_calculus.LITERAL_FORM_NOTE}")
    return EXIT_OK


def cmd_trust_optimize(args, config: RunConfig) -> int:
    if args.paths:
        specs = _parse_path_spec(args.paths)
        if not args.rates:
            raise InputError("--paths needs --rates (comma-separated, one per path)")
        rates = [float(r) for r in args.rates.split(",")]
        if len(rates) != len(specs):
            raise InputError("--rates count does not match --paths")
        path_set = flow_routing.PathSet.from_paths(specs)
        trust = _node_trust_for(path_set, args)
        relay_paths = [
            trust_calculus.RelayPath(
                label="-".join(p) or "direct",
                rate=r,
                trusts=tuple(trust[n] for n in p),
            )
            for p, r in zip(specs, rates)
        ]
    else:
        if not (args.network and args.source and args.sink):
            raise InputError("give --paths/--rates or --network/--source/--sink")
        net = _load_network(args.network, config)
        subnet = net.subgraph(net.nodes, drop_links=[(args.source, args.sink)])
        path_set = flow_routing.max_disjoint_paths(subnet, args.source, args.sink)
        trust = _node_trust_for(path_set, args)
        relay_paths = []
        for p in path_set.paths:
            chain = [args.source, *p, args.sink]
            rate = min(net.rate(u, v) for u, v in zip(chain, chain[1:]))
            relay_paths.append(
                trust_calculus.RelayPath(
                    label="-".join(p) or "direct",
                    rate=rate,
                    trusts=tuple(trust[n] for n in p),
                )
            )
    search = trust_calculus.optimize_partition(
        relay_paths, t_min=config.t_min, min_subset=config.min_subset
    )
    best = search.best
    labels = " | ".join(
        ",".join(relay_paths[i].label for i in s) for s in best.subsets
    )
    print(f"best partition: {labels}")
    print(f"trust: {best.trust:.12f}  rate: {best.rate:.6g}")
    print(f"feasible partitions: {len(search.feasible)} of {len(search.table)}")
    _write(
        _outdir(config),
        "partitions.csv",
        trust_calculus.partition_table_csv(
            search.table, note="relay path partitions: rate/trust tradeoff table"
        ),
    )
    return EXIT_OK


def _parse_grid(spec: str) -> list[float]:
    try:
        lo_s, hi_s, step_s = spec.split(":")
        lo, hi, step = float(lo_s), float(hi_s), float(step_s)
    except ValueError as exc:
        raise InputError(f"bad grid spec {spec!r}, expected lo:hi:step") from exc
    if step <= 0 or hi < lo:
        raise InputError(f"bad grid spec {spec!r}")
    out = []
    k = 0
    while True:
        v = lo + k * step
        if v > hi + 1e-12:
            break
        out.append(round(v, 12))
        k += 1
    return out


def cmd_trust_frontier(args, config: RunConfig) -> int:
    grid = _parse_grid(args.t_grid) if args.t_grid else [args.trust_value]
    if grid == [None]:
        raise InputError("give --trust-value or --t-grid")
    csv_text = trust_calculus.frontier_csv(
        args.n, grid, note="rate vs trust for uniform single-hop relay paths"
    )
    for t in grid:
        points = trust_calculus.trust_rate_frontier(args.n, t)
        line = ", ".join(f"m={p.rate} n'={p.group_size} t={p.trust:.6f}" for p in points)
        print(f"T={t:.4f}: {line}")
    _write(_outdir(config), f"trust_rate_frontier_n{args.n}.csv", csv_text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# siat
# ---------------------------------------------------------------------------

def _wc_params(args, config: RunConfig) -> auth_planner.WcParams:
    return auth_planner.WcParams.plan_round(
        insecurity=config.insecurity,
        comm_ratio=config.comm_ratio,
        reuse_fraction=config.reuse_fraction,
        d_convention=config.d_convention,
    )


def cmd_siat_plan(args, config: RunConfig) -> int:
    net = _load_network(args.network, config)
    if args.tag_bits and args.round_bits:
        s, a = args.tag_bits, args.round_bits
    else:
        wc = _wc_params(args, config)
        s, a = wc.key_bits, wc.round_bits
        print(f"wc sizing: round {a} bits, transferred key {s} bits "
              f"(c={config.insecurity:g}, g={config.comm_ratio:g}, f={config.reuse_fraction:g})")
    user_a, user_b = args.users
    plan = auth_planner.siat_plan(net, args.via, user_a, user_b, s, a)
    print(f"intermediary {plan.intermediary} bootstraps {user_a}-{user_b}:")
    print(f"  key transfer: {plan.tag_transfer_seconds:.2f} s")
    print(f"  first QKD round: {plan.qkd_round_seconds:.2f} s")
    print(f"  trust window: {plan.trust_window_seconds:.2f} s")
    return EXIT_OK


def cmd_siat_table(args, config: RunConfig) -> int:
    net = _load_network(args.network, config)
    if args.tag_bits and args.round_bits:
        s, a = args.tag_bits, args.round_bits
    else:
        wc = _wc_params(args, config)
        s, a = wc.key_bits, wc.round_bits
    rows = auth_planner.siat_plan_all(net, args.new_user, s, a)
    planned = [r for r in rows if r.plan is not None]
    print(f"{len(planned)} of {len(rows)} (end user, intermediary) pairs reachable")
    if planned:
        worst = max(planned, key=lambda r: r.plan.trust_window_seconds)
        print(
            f"longest trust window: {worst.plan.trust_window_seconds:.2f} s "
            f"({worst.end_user} via {worst.intermediary})"
        )
    _write(
        _outdir(config),
        f"siat_windows_{args.new_user}.csv",
        auth_planner.siat_table_csv(
            rows, note=f"trust windows for bootstrapping new user {args.new_user}"
        ),
    )
    return EXIT_OK


def cmd_siat_scale(args, config: RunConfig) -> int:
    if args.n_min > args.n_max:
        raise InputError("--n-min must not exceed --n-max")
    print("n,pre_shared_keys")
    for n in range(args.n_min, args.n_max + 1):
        print(f"{n},{auth_planner.key_scaling(n, args.ca)}")
    return EXIT_OK


def cmd_siat_flooded(args, config: RunConfig) -> int:
    net = _load_network(args.network, config)
    tables = _load_trust_files(args.trust)
    if len(tables) != 2:
        raise InputError("flooded bootstrap needs exactly two --trust files")
    user_a, user_b = args.users
    wc = _wc_params(args, config)
    result = auth_planner.flooded_siat(
        net,
        user_a,
        user_b,
        tables[0],
        tables[1],
        t_min=config.t_min,
        min_subset=config.min_subset,
        wc=wc,
    )
    print(f"mutual peers: {', '.join(result.mutual_peers)}")
    print(f"disjoint paths: {len(result.paths)}")
    labels = " | ".join(
        ",".join(result.paths[i].label for i in s) for s in result.partition.subsets
    )
    print(f"chosen partition: {labels}")
    print(f"trust: {result.trust:.12f} (oracle {result.oracle_trust:.12f})")
    print(f"inaugural key rate: {result.rate:.6g} bits/s")
    print(f"trust window: {result.trust_window_seconds:.2f} s")
    _write(
        _outdir(config),
        f"flooded_siat_{user_a}_{user_b}.csv",
        trust_calculus.partition_table_csv(
            result.search.table,
            note=f"feasible partitions for the {user_a}-{user_b} flooded bootstrap",
        ),
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# audit
# ---------------------------------------------------------------------------

def cmd_audit(args, config: RunConfig) -> int:
    net = _load_network(args.network, config)
    plan = _load_plan(args.plan)
    keys = flood_engine.mint_link_keys(net, config.seed)
    run = flood_engine.run_flood(plan, keys)
    fresh = flood_engine.mint_link_keys(net, config.seed)
    index = adversary_sim.VariableIndex(fresh.values())
    members = frozenset(m for m in (args.members or "").split(",") if m)
    adversary = adversary_sim.AdversaryModel(
        mode=args.mode, members=members, bound=args.bound
    )
    if args.final == "rate":
        exprs = adversary_sim.concat_expression(run.shared, index)
    else:
        exprs = adversary_sim.xor_expression(run.shared, index)
    report = adversary_sim.audit_run(
        run.transcript, fresh, adversary, exprs, plan.source, plan.sink
    )
    print(report.to_json())
    _write(_outdir(config), "audit.json", report.to_json() + "\n")
    return EXIT_INFEASIBLE if report.compromised else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="keyflood",
        description="plan and simulate key relay on trusted-node QKD networks",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (flags win over it)")
    common.add_argument("--seed", type=int, help="PRNG seed for simulated keys")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--block-seconds", type=float, dest="block_seconds",
                        help="override the network file's planning block length")
    wcflags = argparse.ArgumentParser(add_help=False)
    wcflags.add_argument("--c", type=float, dest="c", help="authentication insecurity")
    wcflags.add_argument("--g", type=float, dest="g", help="classical bits per key bit")
    wcflags.add_argument("--f", type=float, dest="f", help="key fraction reused per round")
    wcflags.add_argument("--d-convention", choices=auth_planner.D_CONVENTIONS,
                         dest="d_convention", help="what volume sizes the transferred key")
    thresholds = argparse.ArgumentParser(add_help=False)
    thresholds.add_argument("--t-min", type=float, dest="t_min", help="minimum end-to-end trust")
    thresholds.add_argument("--min-subset", type=int, dest="min_subset",
                            help="fewest paths XORed per subset")

    sub = parser.add_subparsers(dest="command", required=True)

    p_topology = sub.add_parser("topology", help="network file operations")
    topo_sub = p_topology.add_subparsers(dest="subcommand", required=True)
    p_validate = topo_sub.add_parser("validate", parents=[common])
    p_validate.add_argument("--network", required=True)
    p_validate.set_defaults(handler=cmd_topology_validate)

    p_flood = sub.add_parser("flood", help="plan and execute flooding relays")
    flood_sub = p_flood.add_subparsers(dest="subcommand", required=True)
    p_plan = flood_sub.add_parser("plan", parents=[common])
    p_plan.add_argument("--network", required=True)
    p_plan.add_argument("--source", required=True)
    p_plan.add_argument("--sink", required=True)
    p_plan.add_argument("--limit", type=int, default=flow_routing.DEFAULT_ORIENTATION_LIMIT)
    p_plan.set_defaults(handler=cmd_flood_plan)
    p_run = flood_sub.add_parser("run", parents=[common])
    p_run.add_argument("--network", required=True)
    p_run.add_argument("--plan", required=True)
    p_run.set_defaults(handler=cmd_flood_run)

    p_trust = sub.add_parser("trust", help="trust evaluation and optimization")
    trust_sub = p_trust.add_subparsers(dest="subcommand", required=True)
    p_eval = trust_sub.add_parser("eval", parents=[common])
    p_eval.add_argument("--paths", help='path spec like "C;D,E" (interiors, ; between paths)')
    p_eval.add_argument("--network")
    p_eval.add_argument("--source")
    p_eval.add_argument("--sink")
    p_eval.add_argument("--trust", action="append", help="trust table file (repeatable)")
    p_eval.add_argument("--trust-value", type=float, dest="trust_value",
                        help="uniform trust for every interior node")
    p_eval.add_argument("--mode", choices=(trust_calculus.BROADCASTING, trust_calculus.POOLING),
                        default=trust_calculus.BROADCASTING)
    p_eval.add_argument("--paper-literal", action="store_true", dest="paper_literal",
                        help="also report the literal closed form and its known defect")
    p_eval.set_defaults(handler=cmd_trust_eval)
    p_optimize = trust_sub.add_parser("optimize", parents=[common, thresholds])
    p_optimize.add_argument("--paths")
    p_optimize.add_argument("--rates", help="comma-separated per-path rates (with --paths)")
    p_optimize.add_argument("--network")
    p_optimize.add_argument("--source")
    p_optimize.add_argument("--sink")
    p_optimize.add_argument("--trust", action="append")
    p_optimize.add_argument("--trust-value", type=float, dest="trust_value")
    p_optimize.set_defaults(handler=cmd_trust_optimize)
    p_frontier = trust_sub.add_parser("frontier", parents=[common])
    p_frontier.add_argument("--n", type=int, required=True, help="number of uniform paths")
    p_frontier.add_argument("--trust-value", type=float, dest="trust_value")
    p_frontier.add_argument("--t-grid", dest="t_grid", help="trust grid lo:hi:step")
    p_frontier.set_defaults(handler=cmd_trust_frontier)

    p_siat = sub.add_parser("siat", help="inaugural-authentication planning")
    siat_sub = p_siat.add_subparsers(dest="subcommand", required=True)
    p_splan = siat_sub.add_parser("plan", parents=[common, wcflags])
    p_splan.add_argument("--network", required=True)
    p_splan.add_argument("--via", required=True, help="intermediary node")
    p_splan.add_argument("--users", nargs=2, required=True, metavar=("U", "V"))
    p_splan.add_argument("--tag-bits", type=int, dest="tag_bits")
    p_splan.add_argument("--round-bits", type=int, dest="round_bits")
    p_splan.set_defaults(handler=cmd_siat_plan)
    p_stable = siat_sub.add_parser("table", parents=[common, wcflags])
    p_stable.add_argument("--network", required=True)
    p_stable.add_argument("--new-user", required=True, dest="new_user")
    p_stable.add_argument("--tag-bits", type=int, dest="tag_bits")
    p_stable.add_argument("--round-bits", type=int, dest="round_bits")
    p_stable.set_defaults(handler=cmd_siat_table)
    p_scale = siat_sub.add_parser("scale", parents=[common])
    p_scale.add_argument("--ca", type=int, default=0, help="adversary coalition bound")
    p_scale.add_argument("--n-min", type=int, default=3, dest="n_min")
    p_scale.add_argument("--n-max", type=int, default=10, dest="n_max")
    p_scale.set_defaults(handler=cmd_siat_scale)
    p_flooded = siat_sub.add_parser("flooded", parents=[common, wcflags, thresholds])
    p_flooded.add_argument("--network", required=True)
    p_flooded.add_argument("--users", nargs=2, required=True, metavar=("U", "V"))
    p_flooded.add_argument("--trust", action="append", required=True,
                           help="trust table file, give twice (one per end user)")
    p_flooded.set_defaults(handler=cmd_siat_flooded)

    p_audit = sub.add_parser("audit", parents=[common], help="adversary knowledge audit")
    p_audit.add_argument("--network", required=True)
    p_audit.add_argument("--plan", required=True)
    p_audit.add_argument("--members", help="comma-separated coalition node ids")
    p_audit.add_argument("--mode", choices=adversary_sim.ADVERSARY_MODES,
                         default=adversary_sim.TRUSTED)
    p_audit.add_argument("--bound", type=int, help="collective coalition bound")
    p_audit.add_argument("--final", choices=("rate", "secure"), default="rate")
    p_audit.set_defaults(handler=cmd_audit)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = RunConfig.resolve(args)
        return args.handler(args, config)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except KeyfloodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

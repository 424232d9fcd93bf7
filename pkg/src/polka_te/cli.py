"""Command line entry points.

Subcommands: `serve` (gateway + background telemetry ticker), `scenario`
(run a scripted experiment and write its report), `train` (evaluate the
regression models on a dataset), and `route encode` / `route forward`
(the routeID codec against a topology file).

Exit codes: 0 success, 1 usage or runtime error, 2 scenario assertion
failure.  POLKA_TE_SEED overrides the default model seeds.
"""

from __future__ import annotations

import argparse
import os
import sys

from .controller import Controller
from .gf2poly import Gf2Poly
from . import polka
from .scenario import BUNDLED_SCENARIOS, ScenarioError, resolve_topology, run_scenario
from .training import train_eval

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ASSERTION = 2


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def env_seed(default: int = 0) -> int:
    raw = os.environ.get("POLKA_TE_SEED")
    return int(raw) if raw else default


def build_parser() -> Parser:
    parser = Parser(prog="polka-te",
                    description="Path-aware traffic engineering toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p_serve = sub.add_parser("serve", help="run the HTTP gateway")
    p_serve.add_argument("--topo", required=True, help="topology file or bundled name")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8080)
    p_serve.add_argument("--model", default="RandomForest",
                         help="forecasting model kind for allocations")
    p_serve.add_argument("--tick", type=float, default=1.0,
                         help="telemetry tick interval in seconds")
    p_serve.add_argument("--no-ticker", action="store_true",
                         help="disable the background telemetry ticker")

    p_scn = sub.add_parser("scenario", help="run a scripted experiment")
    p_scn.add_argument("name", help="bundled scenario name or script path: "
                       + ", ".join(BUNDLED_SCENARIOS))
    p_scn.add_argument("--out", required=True, help="report output directory")
    p_scn.add_argument("--topo", default=None, help="topology override")

    p_train = sub.add_parser("train", help="train and score the regressors")
    p_train.add_argument("--dataset", required=True,
                         help="telemetry CSV path or synthetic:<seed>")
    p_train.add_argument("--out", required=True, help="report output directory")
    p_train.add_argument("--model-seed", type=int, default=None)

    p_route = sub.add_parser("route", help="routeID codec operations")
    route_sub = p_route.add_subparsers(dest="route_command", required=True)

    p_enc = route_sub.add_parser("encode", help="compile a path into a routeID")
    p_enc.add_argument("--topo", required=True)
    p_enc.add_argument("--path", required=True,
                       help='hop list "NODE:port,NODE:port,..."')

    p_fwd = route_sub.add_parser("forward", help="one forwarding step")
    p_fwd.add_argument("--route-id", required=True, help="binary routeID, MSB first")
    group = p_fwd.add_mutually_exclusive_group(required=True)
    group.add_argument("--node-id", help="binary nodeID polynomial")
    group.add_argument("--node", help="core node label (needs --topo)")
    p_fwd.add_argument("--topo", default=None)

    return parser


def cmd_serve(args) -> int:
    from .gateway import serve

    topo = resolve_topology(args.topo)
    controller = Controller(topo, model_kind=args.model, model_seed=env_seed())
    print(f"serving {topo.name} on http://{args.host}:{args.port}")
    serve(controller, host=args.host, port=args.port,
          ticker_interval=None if args.no_ticker else args.tick)
    return EXIT_OK


def cmd_scenario(args) -> int:
    topo = resolve_topology(args.topo) if args.topo else None
    seed = int(os.environ["POLKA_TE_SEED"]) if os.environ.get("POLKA_TE_SEED") \
        else None
    report = run_scenario(args.name, out_dir=args.out, topo=topo, seed=seed)
    print(f"scenario {report.name}: wrote {args.out}")
    for key, value in sorted(report.metrics.items()):
        print(f"  {key}: {value}")
    for result in report.assertions:
        print(f"  [{'PASS' if result.passed else 'FAIL'}] "
              f"{result.kind}: {result.detail}")
    if not report.passed:
        print("scenario assertions FAILED", file=sys.stderr)
        return EXIT_ASSERTION
    return EXIT_OK


def cmd_train(args) -> int:
    seed = args.model_seed if args.model_seed is not None else env_seed()
    report = train_eval(args.dataset, out_dir=args.out, seed=seed)
    print(f"dataset {args.dataset}: chose {report.chosen_model}")
    for pe in report.report.paths:
        scores = ", ".join(f"{k}={v:.3f}" for k, v in
                           sorted(pe.rmse_by_kind.items()))
        print(f"  {pe.series_key}: {scores} | persistence={pe.persistence:.3f}")
    print(f"wrote {args.out}")
    return EXIT_OK


def cmd_route(args) -> int:
    if args.route_command == "encode":
        topo = resolve_topology(args.topo)
        hops = []
        for label, port in polka.parse_route_spec(args.path):
            node = topo.nodes.get(label)
            if node is None or node.node_id is None:
                raise ScenarioError(f"{label!r} is not a core node of {topo.name}")
            hops.append((node.node_id, polka.encode_port(port)))
        route = polka.route_id_for_path(hops)
        print(route.to_binary())
        return EXIT_OK
    route = polka.RouteId(Gf2Poly.from_binary(args.route_id))
    if args.node_id:
        node = polka.NodeId(Gf2Poly.from_binary(args.node_id), "cli")
    else:
        if not args.topo:
            raise ScenarioError("--node needs --topo to resolve the label")
        topo = resolve_topology(args.topo)
        record = topo.nodes.get(args.node)
        if record is None or record.node_id is None:
            raise ScenarioError(f"{args.node!r} is not a core node")
        node = record.node_id
    print(polka.forward(route, node).number)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "scenario":
            return cmd_scenario(args)
        if args.command == "train":
            return cmd_train(args)
        if args.command == "route":
            return cmd_route(args)
    except (ScenarioError, ValueError, FileNotFoundError, KeyError) as exc:
        print(f"polka-te: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

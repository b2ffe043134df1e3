"""Command line entry points for the controller and offline tooling.

Flags mirror environment variables: NDNLAB_BIND, NDNLAB_SYSLOG_PORT,
NDNLAB_DATA_DIR override the corresponding defaults.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import emulator, topo
from .logrepo import DEFAULT_SYSLOG_PORT


def _env(name, default):
    return os.environ.get(name, default)


def build_parser():
    parser = argparse.ArgumentParser(prog="ndnlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the controller HTTP API and syslog listener")
    serve.add_argument("--bind", default=_env("NDNLAB_BIND", "127.0.0.1:8080"))
    serve.add_argument(
        "--syslog-port", type=int, default=int(_env("NDNLAB_SYSLOG_PORT", DEFAULT_SYSLOG_PORT))
    )
    serve.add_argument("--data-dir", default=_env("NDNLAB_DATA_DIR", "runs"))
    serve.add_argument("--probe-interval", type=float, default=5.0)
    serve.add_argument("--workers", type=int, default=1)

    compile_cmd = sub.add_parser("compile", help="compile node configs from an adjacency document")
    compile_cmd.add_argument("document", help="path to the adjacency JSON, or - for stdin")

    run = sub.add_parser("run", help="run an experiment spec offline and print CSV metrics")
    run.add_argument("spec", help="path to a spec JSON with an inline 'topology' document")
    run.add_argument("--data-dir", default=_env("NDNLAB_DATA_DIR", None))
    run.add_argument("--workers", type=int, default=1)

    bench = sub.add_parser("bench", help="prefix-scaling benchmark")
    bench.add_argument("--nodes", type=int, default=10)
    bench.add_argument("--prefixes", type=int, default=1000)
    return parser


def _read(path):
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def cmd_serve(args):
    import uvicorn

    from .control_api import ControllerState, create_app
    from .logrepo import LogStore, SyslogServer

    host, _, port = args.bind.partition(":")
    state = ControllerState(
        data_dir=args.data_dir, probe_interval_s=args.probe_interval, workers=args.workers
    )
    app = create_app(state)
    store = LogStore()
    syslog = SyslogServer(store, host=host or "127.0.0.1", port=args.syslog_port).start()
    app.state.log_store = store
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8080), log_level="warning")
    finally:
        syslog.stop()
    return 0


def cmd_compile(args):
    topology = topo.parse_adjacency(_read(args.document))
    configs = topo.compile_node_configs(topology)
    out = {
        "nodes": topology.node_count,
        "connected": topology.connected,
        "configs": [
            {
                "node": c.node.label,
                "name_prefix": c.name_prefix,
                "faces": [{"neighbor": r.label, "kind": k} for r, k in c.faces],
                "ip_routes": [
                    {"destination": r.destination, "next_hop": r.next_hop.label, "cost": r.cost}
                    for r in c.ip_routes
                ],
                "ndn_routes": [
                    {"destination": r.destination, "next_hop": r.next_hop.label, "cost": r.cost}
                    for r in c.ndn_routes
                ],
            }
            for c in configs
        ],
    }
    print(json.dumps(out, indent=2))
    return 0


def cmd_run(args):
    doc = json.loads(_read(args.spec))
    topology = topo.parse_adjacency(json.dumps(doc["topology"]))
    spec = emulator.ExperimentSpec.from_document(doc, topology)
    result = emulator.run_experiment(spec, data_dir=args.data_dir, workers=args.workers)
    sys.stdout.write(result.export_csv())
    return 0


def cmd_bench(args):
    report = emulator.benchmark_prefix_install(args.nodes, args.prefixes)
    print(json.dumps({"phases_s": report.phase_seconds, "fib_sizes": report.fib_sizes}, indent=2))
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    handler = {
        "serve": cmd_serve,
        "compile": cmd_compile,
        "run": cmd_run,
        "bench": cmd_bench,
    }[args.command]
    return handler(args)


if __name__ == "__main__":
    sys.exit(main())

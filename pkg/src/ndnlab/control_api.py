"""HTTP+JSON control surface: topology intake, experiment lifecycle, live delays.

This layer is a thin adapter over the other modules: every behavior here maps
onto a topo/emulator/evalkit call and the handlers hold no domain branching of
their own. Experiments run one at a time on a dedicated worker; shared
registries are read via snapshots.

Endpoints:
    POST /topology                  submit an adjacency document
    GET  /topology/{id}/configs     compiled per-node configs
    POST /experiments               submit an experiment spec (topology_id + fields)
    GET  /experiments/{id}          lifecycle handle
    GET  /experiments/{id}/metrics  per-repetition summaries (409 until done)
    GET  /links/delays              server-sent link-delay batches per probe round
    POST /links/{a}/{b}/state       flip a link up/down
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse

from . import emulator, topo

PROBE_INTERVAL_S = 5.0

_STATES = ("pending", "running", "done", "failed")
_TRANSITIONS = {
    "pending": {"running"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}


@dataclass
class ExperimentHandle:
    id: str
    spec_doc: dict
    state: str = "pending"
    created_at: float = field(default_factory=time.time)
    error: str = ""
    result: object = None

    def advance(self, state):
        if state not in _TRANSITIONS[self.state]:
            raise ValueError(f"state cannot move {self.state} -> {state}")
        self.state = state

    def to_document(self):
        return {
            "id": self.id,
            "state": self.state,
            "created_at": self.created_at,
            "error": self.error,
            "spec": self.spec_doc,
        }


class ControllerState:
    """Registries behind the API plus the single experiment worker."""

    def __init__(self, data_dir=None, probe_interval_s=PROBE_INTERVAL_S, workers=1):
        self.data_dir = data_dir
        self.probe_interval_s = probe_interval_s
        self.workers = workers
        self.topologies = {}  # id -> {"topology": Topology, "configs": [...], "document": str}
        self.experiments = {}
        self.current_topology_id = None
        self.running_engine = None
        self._lock = threading.Lock()
        self._queue = queue.Queue()
        self._worker = threading.Thread(target=self._drain, name="experiment-worker", daemon=True)
        self._worker.start()

    # -- topology ------------------------------------------------------------

    def add_topology(self, document_text):
        topology = topo.parse_adjacency(document_text)
        configs = topo.compile_node_configs(topology)
        tid = uuid.uuid4().hex[:12]
        with self._lock:
            self.topologies[tid] = {
                "topology": topology,
                "configs": configs,
                "document": topo.serialize(topology),
            }
            self.current_topology_id = tid
        return tid, topology

    def get_topology(self, tid):
        with self._lock:
            return self.topologies.get(tid)

    def current_links(self):
        """Snapshot of the active topology's links for the delay feed."""
        with self._lock:
            tid = self.current_topology_id
            entry = self.topologies.get(tid) if tid else None
        if entry is None:
            return None
        topology = entry["topology"]
        return [
            {"a": topology.nodes[i].label, "b": topology.nodes[j].label, "spec": spec}
            for i, j, spec in topology.undirected_links()
        ]

    def delay_batch(self):
        """One probe round over the active topology; None when nothing is deployed.

        A link's sample is the echo time (twice its one-way delay); down links
        carry a loss marker instead.
        """
        links = self.current_links()
        if links is None:
            return None
        return {
            "t": time.time(),
            "delays": [
                {
                    "link": f"{entry['a']}-{entry['b']}",
                    "ms": 2 * entry["spec"].delay_ms if entry["spec"].up else None,
                    "loss": not entry["spec"].up,
                }
                for entry in links
            ],
        }

    def set_link_state(self, label_a, label_b, up):
        with self._lock:
            tid = self.current_topology_id
            entry = self.topologies.get(tid) if tid else None
            if entry is None:
                raise topo.UnknownLinkError("no topology deployed")
            topology = entry["topology"]
            a = topology.node_by_label(label_a)
            b = topology.node_by_label(label_b)
            entry["topology"] = topo.apply_link_state(topology, a, b, up)
            engine = self.running_engine
        if engine is not None:
            engine.inject_link_state(label_a, label_b, up)

    # -- experiments -----------------------------------------------------------

    def submit_experiment(self, doc):
        entry = self.get_topology(doc.get("topology_id", ""))
        if entry is None:
            raise KeyError("unknown topology")
        spec = emulator.ExperimentSpec.from_document(doc, entry["topology"])
        handle = ExperimentHandle(id=uuid.uuid4().hex[:12], spec_doc=spec.to_document())
        with self._lock:
            self.experiments[handle.id] = handle
        self._queue.put((handle, spec))
        return handle

    def get_experiment(self, eid):
        with self._lock:
            return self.experiments.get(eid)

    def _set_running_engine(self, engine):
        self.running_engine = engine

    def _drain(self):
        while True:
            handle, spec = self._queue.get()
            handle.advance("running")
            try:
                result = emulator.run_experiment(
                    spec,
                    data_dir=self._run_dir(handle.id),
                    workers=self.workers,
                    on_engine=self._set_running_engine,
                )
                handle.result = result
                handle.advance("done")
            except Exception as exc:  # surface the failure on the handle
                handle.error = str(exc)
                handle.advance("failed")
            finally:
                self.running_engine = None

    def _run_dir(self, eid):
        if self.data_dir is None:
            return None
        import os

        return os.path.join(self.data_dir, eid)


def create_app(state=None):
    state = state or ControllerState()
    app = FastAPI(title="ndnlab controller", docs_url=None, redoc_url=None)
    app.state.controller = state

    @app.post("/topology")
    async def post_topology(request: Request):
        body = await request.body()
        if not body:
            return JSONResponse({"error": "empty body"}, status_code=400)
        try:
            tid, topology = state.add_topology(body)
        except topo.TopologyError as exc:
            return JSONResponse({"kind": exc.kind, "error": str(exc)}, status_code=422)
        return {
            "id": tid,
            "validation": {
                "nodes": topology.node_count,
                "links": len(topology.undirected_links()),
                "connected": topology.connected,
            },
        }

    @app.get("/topology/{tid}")
    async def get_topology(tid: str):
        entry = state.get_topology(tid)
        if entry is None:
            return JSONResponse({"error": "unknown topology"}, status_code=404)
        return JSONResponse(content=json.loads(entry["document"]))

    @app.get("/topology/{tid}/configs")
    async def get_configs(tid: str):
        entry = state.get_topology(tid)
        if entry is None:
            return JSONResponse({"error": "unknown topology"}, status_code=404)
        return {
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
                for c in entry["configs"]
            ]
        }

    @app.post("/experiments")
    async def post_experiment(request: Request):
        body = await request.body()
        if not body:
            return JSONResponse({"error": "empty body"}, status_code=400)
        try:
            doc = json.loads(body)
        except json.JSONDecodeError as exc:
            return JSONResponse({"error": f"bad JSON: {exc}"}, status_code=400)
        try:
            handle = state.submit_experiment(doc)
        except KeyError:
            return JSONResponse({"error": "unknown topology"}, status_code=404)
        except (emulator.ExperimentSetupError, topo.UnknownNodeError, ValueError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        return handle.to_document()

    @app.get("/experiments/{eid}")
    async def get_experiment(eid: str):
        handle = state.get_experiment(eid)
        if handle is None:
            return JSONResponse({"error": "unknown experiment"}, status_code=404)
        return handle.to_document()

    @app.get("/experiments/{eid}/metrics")
    async def get_metrics(eid: str):
        handle = state.get_experiment(eid)
        if handle is None:
            return JSONResponse({"error": "unknown experiment"}, status_code=404)
        if handle.state != "done":
            return JSONResponse({"state": handle.state}, status_code=409)
        return {
            "id": handle.id,
            "repetitions": [s.to_document() for s in handle.result.summaries],
            "csv": handle.result.export_csv(),
        }

    @app.post("/links/{a}/{b}/state")
    async def post_link_state(a: str, b: str, request: Request):
        try:
            doc = json.loads(await request.body() or b"{}")
        except json.JSONDecodeError as exc:
            return JSONResponse({"error": f"bad JSON: {exc}"}, status_code=400)
        up = bool(doc.get("up", False))
        try:
            state.set_link_state(a, b, up)
        except (topo.UnknownLinkError, topo.UnknownNodeError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=404)
        return {"link": f"{a}-{b}", "up": up}

    @app.get("/links/delays")
    async def links_delays():
        async def stream():
            while True:
                batch = state.delay_batch()
                if batch is None:
                    break
                yield f"data: {json.dumps(batch, separators=(',', ':'))}\n\n"
                await asyncio.sleep(state.probe_interval_s)

        return StreamingResponse(stream(), media_type="text/event-stream")

    @app.get("/healthz")
    async def healthz():
        return {"ok": True}

    return app

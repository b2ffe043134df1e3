"""Deterministic discrete-event emulation of the testbed data plane.

One Engine instance runs one repetition: per-node forwarders joined by
delay links, a paced AIMD consumer, a producer answering under its name
prefix, link-failure injection and periodic link-delay probes. Time is
integer microseconds internally; identical specs replay byte-identically.

The engine is strictly single-threaded per run. Repetitions are independent
and may execute in parallel worker processes; results merge by repetition
index so the artifact bytes never depend on worker count.
"""

from __future__ import annotations

import heapq
import json
import os
import time
from dataclasses import dataclass
from random import Random

from . import evalkit, topo as topo_mod
from .forwarder import (
    BEST_ROUTE,
    DEFAULT_CS_CAPACITY,
    DEFAULT_HOP_LIMIT,
    DEFAULT_PIT_LIFETIME_MS,
    DataPacket,
    FaceId,
    FibEntry,
    ForwarderState,
    Interest,
    Name,
    STRATEGIES,
    on_data,
    on_interest,
    pit_sweep,
)
from .logrepo import LogStore, SyslogRecord, format_syslog

PROBE_INTERVAL_US = 5_000_000
PIT_SWEEP_INTERVAL_US = 1_000_000
MIN_RTO_MS = 200.0
MAX_RTO_MS = 4000.0
INITIAL_RTO_MS = 1000.0
INITIAL_WINDOW = 2.0

# event kinds, processed in (time, seq) order
_ARR_INTEREST = 0
_ARR_DATA = 1
_CONSUMER_TICK = 2
_TIMEOUT = 3
_PROBE = 4
_PROBE_DONE = 5
_FAILURE = 6
_SWEEP = 7
_SCRIPTED = 8


class ExperimentSetupError(ValueError):
    pass


@dataclass(frozen=True)
class LinkFailure:
    a: str
    b: str
    at_s: float


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything one experiment run needs, including its seed.

    demand_mbps caps the consumer's interest issue rate; the AIMD window
    governs what is actually in flight beneath that cap.
    """

    topology: topo_mod.Topology
    consumer: topo_mod.NodeId
    producer: topo_mod.NodeId
    content_prefix: str
    strategy: str = BEST_ROUTE
    demand_mbps: float = 20.0
    payload_bytes: int = 1250
    duration_s: float = 16.0
    failures: tuple[LinkFailure, ...] = ()
    repetitions: int = 1
    seed: int = 0
    pit_lifetime_ms: float = DEFAULT_PIT_LIFETIME_MS
    cs_capacity: int = DEFAULT_CS_CAPACITY
    hop_limit: int = DEFAULT_HOP_LIMIT
    bucket_s: float = 1.0
    scripted_requests: tuple[tuple[float, str], ...] = ()

    def __post_init__(self):
        if self.repetitions < 1:
            raise ExperimentSetupError("repetitions must be >= 1")
        if self.demand_mbps <= 0:
            raise ExperimentSetupError("demand rate must be positive")
        if self.payload_bytes <= 0:
            raise ExperimentSetupError("payload size must be positive")
        if self.consumer == self.producer:
            raise ExperimentSetupError("consumer and producer must differ")
        if self.strategy not in STRATEGIES:
            raise ExperimentSetupError(f"unknown strategy {self.strategy!r}")

    @classmethod
    def from_document(cls, doc, topology):
        """Build a spec from its JSON document form against a parsed topology."""
        consumer = topology.node_by_label(doc["consumer"])
        producer = topology.node_by_label(doc["producer"])
        failures = tuple(
            LinkFailure(f["a"], f["b"], float(f["at_s"])) for f in doc.get("failures", ())
        )
        return cls(
            topology=topology,
            consumer=consumer,
            producer=producer,
            content_prefix=doc.get("content_prefix") or topo_mod.name_prefix(producer.index),
            strategy=doc.get("strategy", BEST_ROUTE),
            demand_mbps=float(doc.get("demand_mbps", 20.0)),
            payload_bytes=int(doc.get("payload_bytes", 1250)),
            duration_s=float(doc.get("duration_s", 16.0)),
            failures=failures,
            repetitions=int(doc.get("repetitions", 1)),
            seed=int(doc.get("seed", 0)),
        )

    def to_document(self):
        return {
            "consumer": self.consumer.label,
            "producer": self.producer.label,
            "content_prefix": self.content_prefix,
            "strategy": self.strategy,
            "demand_mbps": self.demand_mbps,
            "payload_bytes": self.payload_bytes,
            "duration_s": self.duration_s,
            "failures": [{"a": f.a, "b": f.b, "at_s": f.at_s} for f in self.failures],
            "repetitions": self.repetitions,
            "seed": self.seed,
        }


@dataclass(slots=True)
class AimdState:
    window: float = INITIAL_WINDOW
    in_flight: int = 0
    srtt_ms: float | None = None
    rttvar_ms: float = 0.0
    rto_ms: float = INITIAL_RTO_MS
    next_seq: int = 0


def demand_to_interest_rate(demand_mbps, payload_bytes):
    """Interests per second needed to move demand_mbps of payload_bytes data."""
    if payload_bytes <= 0:
        raise ValueError("payload size must be positive")
    return demand_mbps * 1e6 / (8 * payload_bytes)


def consumer_on_data(aimd, rtt_sample_ms):
    """Additive increase plus RTT estimator update; sample None skips the estimator
    (retransmitted segments give no clean sample)."""
    aimd.window += 1.0 / aimd.window
    if rtt_sample_ms is not None:
        if aimd.srtt_ms is None:
            aimd.srtt_ms = rtt_sample_ms
            aimd.rttvar_ms = rtt_sample_ms / 2.0
        else:
            aimd.srtt_ms = 7.0 / 8.0 * aimd.srtt_ms + 1.0 / 8.0 * rtt_sample_ms
            aimd.rttvar_ms = 3.0 / 4.0 * aimd.rttvar_ms + 1.0 / 4.0 * abs(aimd.srtt_ms - rtt_sample_ms)
        aimd.rto_ms = min(MAX_RTO_MS, max(MIN_RTO_MS, aimd.srtt_ms + 4.0 * aimd.rttvar_ms))
    return aimd


def consumer_on_timeout(aimd):
    """Multiplicative decrease, floored at a window of one."""
    aimd.window = max(1.0, aimd.window / 2.0)
    return aimd


@dataclass(slots=True)
class LinkRuntime:
    key: tuple
    label: str
    delay_us: int
    medium: str
    up: bool = True


@dataclass(slots=True)
class _Pending:
    nonce: int
    emitted_us: int
    emission_id: int  # globally unique per emission; stale timeouts compare against it
    retransmitted: bool
    name: Name


class _EmuNode:
    __slots__ = ("node", "fwd", "routes", "route_list", "face_list", "app_face", "app")

    def __init__(self, node, fwd):
        self.node = node
        self.fwd = fwd
        self.routes = {}  # face id -> (peer_index, peer_face_id, LinkRuntime)
        self.route_list = []  # same, dense-indexed by face id; None for app faces
        self.face_list = []
        self.app_face = None
        self.app = None

    def seal_routes(self):
        size = (max(self.routes) + 1) if self.routes else 0
        self.route_list = [self.routes.get(i) for i in range(size)]
        self.face_list = [self.fwd.faces[i] for i in sorted(self.fwd.faces)]


class Engine:
    """One seeded repetition of an experiment, plus hooks for live probing."""

    def __init__(self, spec, seed=None, debug_logging=False):
        self.spec = spec
        self.seed = spec.seed if seed is None else seed
        self.rng = Random(self.seed)
        self.debug_logging = debug_logging
        self.now_us = 0
        self._seq = 0
        self._heap = []
        self._end_us = round(spec.duration_s * 1e6)
        self.store = LogStore(clock=lambda: self.now_us / 1e6)
        self.dropped_in_flight = 0
        self.dropped_on_down_link = 0
        self._injected = []
        self._build()

    # -- construction ------------------------------------------------------

    def _build(self):
        spec = self.spec
        topo = spec.topology
        self.links = {}
        for i, j, lspec in topo.undirected_links():
            a, b = topo.nodes[i].label, topo.nodes[j].label
            self.links[(i, j)] = LinkRuntime(
                key=(i, j),
                label=f"{a}-{b}",
                delay_us=round(lspec.delay_ms * 1000),
                medium=lspec.medium,
                up=lspec.up,
            )

        self.nodes = []
        for node in topo.nodes:
            fwd = ForwarderState(
                node,
                strategy=spec.strategy,
                cs_capacity=spec.cs_capacity,
                pit_lifetime_ms=spec.pit_lifetime_ms,
            )
            self.nodes.append(_EmuNode(node, fwd))

        # one face per incident link on each endpoint
        for (i, j), link in sorted(self.links.items()):
            for a, b in ((i, j), (j, i)):
                emu = self.nodes[a]
                kind = "ethernet" if link.medium == topo_mod.WIRED else "udp"
                face = FaceId(id=len(emu.fwd.faces), remote=topo.nodes[b], kind=kind)
                emu.fwd.add_face(face)
                emu.routes[face.id] = (b, None, link)
        # resolve peer face ids now that every face exists
        for emu in self.nodes:
            for fid, (peer, _, link) in list(emu.routes.items()):
                peer_fid = next(
                    f.id
                    for f in self.nodes[peer].fwd.faces.values()
                    if f.remote is not None and f.remote.index == emu.node.index
                )
                emu.routes[fid] = (peer, peer_fid, link)

        self._install_routes()
        self._attach_apps()
        for emu in self.nodes:
            emu.seal_routes()

        for failure in spec.failures:
            key = self._link_key(failure.a, failure.b)
            self._push(round(failure.at_s * 1e6), _FAILURE, (key, False))
        for at_s, name_text in spec.scripted_requests:
            self._push(round(at_s * 1e6), _SCRIPTED, name_text)
        self._push(0, _PROBE, None)
        self._push(PIT_SWEEP_INTERVAL_US, _SWEEP, None)

    def _link_key(self, label_a, label_b):
        topo = self.spec.topology
        a = topo.node_by_label(label_a)
        b = topo.node_by_label(label_b)
        key = (min(a.index, b.index), max(a.index, b.index))
        if key not in self.links:
            raise topo_mod.UnknownLinkError(f"no link between {label_a} and {label_b}")
        return key

    def _install_routes(self):
        """Global routing: every node gets a FIB entry per remote prefix whose
        next hops are up-link neighbors with a finite path, costed as link
        delay plus the neighbor's shortest distance. A neighbor whose every
        shortest path to the destination runs back through this node is pruned
        (split horizon); the cheapest surviving hop always matches the Dijkstra
        first hop, so best route follows compute_routes."""
        topo = self.spec.topology
        dist = {}
        for node in topo.nodes:
            best = topo_mod.shortest_paths(topo, node.index)
            dist[node.index] = {d: c for d, (c, _) in best.items()}
        for emu in self.nodes:
            i = emu.node.index
            neighbor_faces = sorted(
                (peer, fid) for fid, (peer, _, link) in emu.routes.items() if link.up
            )
            dist_avoiding_self = {
                peer: {
                    d: c
                    for d, (c, _) in topo_mod.shortest_paths(topo, peer, skip_index=i).items()
                }
                for peer, _ in neighbor_faces
            }
            for dest in topo.nodes:
                j = dest.index
                if j == i:
                    continue
                hops = []
                for peer, fid in neighbor_faces:
                    d = dist[peer].get(j)
                    if d is None:
                        continue
                    detour = dist_avoiding_self[peer].get(j)
                    if detour is None or detour > d + 1e-9:
                        continue
                    link = emu.routes[fid][2]
                    hops.append((emu.fwd.faces[fid], link.delay_us / 1000.0 + d))
                if hops:
                    emu.fwd.install_route(Name.from_text(topo_mod.name_prefix(j)), hops)

    def _attach_apps(self):
        spec = self.spec
        prefix = Name.from_text(spec.content_prefix)

        producer = self.nodes[spec.producer.index]
        pface = FaceId(id=len(producer.fwd.faces), remote=None, kind="app")
        producer.fwd.add_face(pface)
        producer.app_face = pface
        producer.fwd.install_route(prefix, [(pface, 0.0)])
        producer.app = _ProducerApp(self, producer, prefix)

        consumer = self.nodes[spec.consumer.index]
        cface = FaceId(id=len(consumer.fwd.faces), remote=None, kind="app")
        consumer.fwd.add_face(cface)
        consumer.app_face = cface
        # data receivers answer from upstream, not from their own cache
        consumer.fwd.cs_capacity = 0
        consumer.app = _ConsumerApp(self, consumer, prefix)
        self._consumer_app = consumer.app
        if spec.producer.index not in topo_mod.shortest_paths(spec.topology, spec.consumer.index):
            raise ExperimentSetupError(
                f"producer {spec.producer.label} unreachable from {spec.consumer.label}"
            )
        if self._end_us > 0:
            self._push(0, _CONSUMER_TICK, None)

    # -- event plumbing ----------------------------------------------------

    def _push(self, at_us, kind, payload):
        self._seq += 1
        heapq.heappush(self._heap, (at_us, self._seq, kind, payload))

    def log(self, host, app, severity, msg):
        # device timestamps render lazily at artifact-write time from received_at
        self.store.ingest_unlocked(
            SyslogRecord(
                facility=1,
                severity=severity,
                timestamp="",
                host=host,
                app=app,
                procid="",
                msgid="",
                sd="",
                msg=msg,
                source_addr=host,
            ),
            received_at=self.now_us / 1e6,
        )

    def inject_link_state(self, label_a, label_b, up):
        """Thread-safe request to flip a link at the engine's current virtual time."""
        key = self._link_key(label_a, label_b)
        self._injected.append((key, up))

    def _emit(self, emu, face, packet, is_interest):
        fid = face.id
        route = emu.route_list[fid] if fid < len(emu.route_list) else None
        if route is None:
            emu.app.on_packet(packet, is_interest)
            return
        peer, peer_fid, link = route
        if not link.up:
            self.dropped_on_down_link += 1
            return
        self._seq += 1
        heapq.heappush(
            self._heap,
            (
                self.now_us + link.delay_us,
                self._seq,
                _ARR_INTEREST if is_interest else _ARR_DATA,
                (peer, peer_fid, packet, link),
            ),
        )

    def _deliver_app_interest(self, emu, interest):
        """Inject an app-originated interest into the node's own forwarder."""
        interests, data = on_interest(emu.fwd, interest, emu.app_face, self.now_us / 1000.0)
        for face, pkt in interests:
            self._emit(emu, face, pkt, True)
        for face, pkt in data:
            self._emit(emu, face, pkt, False)

    # -- main loop ---------------------------------------------------------

    def run(self):
        heap = self._heap
        heappop = heapq.heappop
        heappush = heapq.heappush
        end = self._end_us
        nodes = self.nodes
        debug = self.debug_logging
        while heap:
            if self._injected:
                for key, up in self._injected:
                    self._push(self.now_us, _FAILURE, (key, up))
                self._injected.clear()
            at = heap[0][0]
            if at >= end:
                break
            _, _, kind, payload = heappop(heap)
            self.now_us = at

            if kind == _ARR_INTEREST or kind == _ARR_DATA:
                node_idx, fid, packet, link = payload
                if not link.up:
                    self.dropped_in_flight += 1
                    continue
                emu = nodes[node_idx]
                face = emu.face_list[fid]
                if kind == _ARR_INTEREST:
                    if debug:
                        self.log(emu.node.label, "nfd", 7, f"interest {packet.name.to_text()} {packet.nonce}")
                    interests, data = on_interest(emu.fwd, packet, face, at / 1000.0)
                else:
                    if debug:
                        self.log(emu.node.label, "nfd", 7, f"data {packet.name.to_text()} {packet.payload_size}")
                    interests, data = on_data(emu.fwd, packet, face, at / 1000.0)
                route_list = emu.route_list
                n_routes = len(route_list)
                if interests:
                    for out_face, pkt in interests:
                        out_id = out_face.id
                        route = route_list[out_id] if out_id < n_routes else None
                        if route is None:
                            emu.app.on_packet(pkt, True)
                        elif route[2].up:
                            self._seq += 1
                            heappush(heap, (at + route[2].delay_us, self._seq, _ARR_INTEREST, (route[0], route[1], pkt, route[2])))
                        else:
                            self.dropped_on_down_link += 1
                if data:
                    for out_face, pkt in data:
                        out_id = out_face.id
                        route = route_list[out_id] if out_id < n_routes else None
                        if route is None:
                            emu.app.on_packet(pkt, False)
                        elif route[2].up:
                            self._seq += 1
                            heappush(heap, (at + route[2].delay_us, self._seq, _ARR_DATA, (route[0], route[1], pkt, route[2])))
                        else:
                            self.dropped_on_down_link += 1
            elif kind == _CONSUMER_TICK:
                self._consumer_app.on_tick()
            elif kind == _TIMEOUT:
                self._consumer_app.on_timeout(payload)
            elif kind == _PROBE:
                self._probe_round()
            elif kind == _PROBE_DONE:
                link, rtt_ms = payload
                if link.up:
                    self.log("controller", "probe", 6, f"probe {link.label} {rtt_ms:.3f}")
                else:
                    self.log("controller", "probe", 6, f"probe {link.label} loss")
            elif kind == _FAILURE:
                key, up = payload
                link = self.links[key]
                if link.up != up:
                    link.up = up
                    self.log("controller", "emu", 4, f"link {link.label} {'up' if up else 'down'}")
            elif kind == _SWEEP:
                now_ms = at / 1000.0
                for emu in nodes:
                    if emu.fwd.pit:
                        pit_sweep(emu.fwd, now_ms)
                self._push(at + PIT_SWEEP_INTERVAL_US, _SWEEP, None)
            elif kind == _SCRIPTED:
                self._consumer_app.request(Name.from_text(payload))
        self.now_us = end
        return self

    def _probe_round(self):
        """Echo every link once; a down link logs a loss record for the round."""
        for key in sorted(self.links):
            link = self.links[key]
            if link.up:
                self._push(self.now_us + 2 * link.delay_us, _PROBE_DONE, (link, 2 * link.delay_us / 1000.0))
            else:
                self.log("controller", "probe", 6, f"probe {link.label} loss")
        nxt = self.now_us + PROBE_INTERVAL_US
        if nxt < self._end_us:
            self._push(nxt, _PROBE, None)

    # -- results -----------------------------------------------------------

    def node_stats(self):
        out = {}
        for emu in self.nodes:
            fwd = emu.fwd
            out[emu.node.label] = {
                "unroutable": fwd.unroutable,
                "no_viable_face": fwd.no_viable_face,
                "duplicate_nonce": fwd.duplicate_nonce,
                "unsolicited": fwd.unsolicited,
                "pit_timeouts": fwd.pit_timeouts,
                "cs_hits": fwd.cs_hits,
                "pit_size": fwd.pit_size(),
                "cs_size": fwd.cs_size(),
            }
        return out


def _emu_timestamp(now_us):
    """Deterministic RFC 3339 instant anchored at the epoch plus emulator time."""
    secs, us = divmod(now_us, 1_000_000)
    mins, s = divmod(secs, 60)
    hours, m = divmod(mins, 60)
    days, h = divmod(hours, 24)
    return f"1970-01-{1 + days:02d}T{h:02d}:{m:02d}:{s:02d}.{us:06d}Z"


class _ProducerApp:
    """Answers interests under the content prefix with fixed-size data."""

    __slots__ = ("engine", "emu", "prefix", "produced")

    def __init__(self, engine, emu, prefix):
        self.engine = engine
        self.emu = emu
        self.prefix = prefix
        self.produced = 0

    def on_packet(self, packet, is_interest):
        if not is_interest:
            return
        engine = self.engine
        now_ms = engine.now_us / 1000.0
        engine.log(
            self.emu.node.label, "producer", 6, f"interest {packet.name.to_text()} {packet.nonce}"
        )
        self.produced += 1
        data = DataPacket(packet.name, engine.spec.payload_bytes, now_ms)
        _, emissions = on_data(self.emu.fwd, data, self.emu.app_face, now_ms)
        for face, pkt in emissions:
            engine._emit(self.emu, face, pkt, False)


class _ConsumerApp:
    """Paced sequential fetcher with AIMD window and RTO-driven retransmission."""

    __slots__ = (
        "engine",
        "emu",
        "prefix",
        "aimd",
        "pending",
        "interval_us",
        "emitted",
        "received",
        "duplicates",
        "timeouts",
        "window_floor_hits",
        "_emission_counter",
    )

    def __init__(self, engine, emu, prefix):
        self.engine = engine
        self.emu = emu
        self.prefix = prefix
        self.aimd = AimdState()
        self.pending = {}  # name parts -> _Pending
        rate = demand_to_interest_rate(engine.spec.demand_mbps, engine.spec.payload_bytes)
        self.interval_us = max(1, round(1e6 / rate))
        self.emitted = 0
        self.received = 0
        self.duplicates = 0
        self.timeouts = 0
        self.window_floor_hits = 0
        self._emission_counter = 0

    def on_tick(self):
        if self.aimd.in_flight < self.aimd.window:
            seq = self.aimd.next_seq
            self.aimd.next_seq += 1
            name = Name(self.prefix.parts + ("seg", str(seq)))
            self.aimd.in_flight += 1
            self._send(name, retransmit=False)
        self.engine._push(self.engine.now_us + self.interval_us, _CONSUMER_TICK, None)

    def request(self, name):
        """Scripted one-off fetch, outside the paced sequential stream."""
        self.aimd.in_flight += 1
        self._send(name, retransmit=False)

    def _send(self, name, retransmit):
        engine = self.engine
        entry = self.pending.get(name.parts)
        self._emission_counter += 1
        emission_id = self._emission_counter
        nonce = engine.rng.getrandbits(32)
        self.pending[name.parts] = _Pending(
            nonce=nonce,
            emitted_us=entry.emitted_us if retransmit else engine.now_us,
            emission_id=emission_id,
            retransmitted=retransmit or (entry is not None),
            name=name,
        )
        self.emitted += 1
        interest = Interest(name, nonce, engine.spec.hop_limit, engine.now_us / 1000.0)
        engine._deliver_app_interest(self.emu, interest)
        engine._push(
            engine.now_us + round(self.aimd.rto_ms * 1000), _TIMEOUT, (name.parts, emission_id)
        )

    def on_timeout(self, payload):
        parts, emission_id = payload
        entry = self.pending.get(parts)
        if entry is None or entry.emission_id != emission_id:
            return
        self.timeouts += 1
        consumer_on_timeout(self.aimd)
        if self.aimd.window == 1.0:
            self.window_floor_hits += 1
        self._send(entry.name, retransmit=True)

    def on_packet(self, packet, is_interest):
        if is_interest:
            return
        entry = self.pending.pop(packet.name.parts, None)
        if entry is None:
            self.duplicates += 1
            return
        engine = self.engine
        self.aimd.in_flight -= 1
        self.received += 1
        rtt_ms = None
        if not entry.retransmitted:
            rtt_ms = (engine.now_us - entry.emitted_us) / 1000.0
        consumer_on_data(self.aimd, rtt_ms)
        label = self.emu.node.label
        name_text = packet.name.to_text()
        if rtt_ms is not None:
            engine.log(label, "consumer", 6, f"rtt {name_text} {rtt_ms:.3f}")
        engine.log(label, "consumer", 6, f"data {name_text} {packet.payload_size}")


# -- experiment driver -------------------------------------------------------


@dataclass(slots=True)
class RepetitionResult:
    repetition: int
    summary: evalkit.RunSummary
    consumer_stats: dict
    node_stats: dict
    store: object = None


@dataclass(slots=True)
class ExperimentResult:
    spec: ExperimentSpec
    repetitions: list
    data_dir: str | None = None

    @property
    def summaries(self):
        return [r.summary for r in self.repetitions]

    def export_csv(self):
        series = []
        for rep in self.repetitions:
            series.extend(rep.summary.series)
        return evalkit.export_csv(series)


def _run_one(spec, repetition, keep_store, debug_logging, on_engine=None):
    import gc

    engine = Engine(spec, seed=spec.seed + repetition, debug_logging=debug_logging)
    if on_engine is not None:
        on_engine(engine)
    # the engine's object graph is cycle-free; skip collector pauses mid-run
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        engine.run()
    finally:
        if gc_was_enabled:
            gc.enable()
    store = engine.store
    consumer = spec.consumer.label
    series = [
        evalkit.compute_throughput(store, consumer, spec.bucket_s, spec.duration_s),
        evalkit.compute_rtt(store, consumer, spec.bucket_s),
        evalkit.compute_interest_rate(store, spec.producer.label, spec.bucket_s, spec.duration_s),
    ]
    for key in sorted(engine.links):
        series.append(evalkit.compute_link_delay(store, engine.links[key].label))
    summary = evalkit.summarize(series, repetition=repetition)
    app = engine.nodes[spec.consumer.index].app
    stats = {
        "emitted": app.emitted,
        "received": app.received,
        "duplicates": app.duplicates,
        "timeouts": app.timeouts,
        "final_window": app.aimd.window,
    }
    return RepetitionResult(
        repetition=repetition,
        summary=summary,
        consumer_stats=stats,
        node_stats=engine.node_stats(),
        store=store if keep_store else None,
    )


def _worker(args):
    spec, repetition, debug = args
    return _run_one(spec, repetition, keep_store=False, debug_logging=debug)


def run_experiment(
    spec, data_dir=None, workers=1, keep_stores=False, debug_logging=False, on_engine=None
):
    """Execute spec.repetitions seeded runs and summarize each one.

    Repetition r runs with seed+r. With workers > 1, repetitions execute in
    parallel processes and merge by index, so artifacts are identical either
    way. keep_stores retains every run's log store in memory (large runs:
    leave off). data_dir writes per-repetition syslog files plus a manifest.
    on_engine sees each engine before it runs (live link injection hook) and
    forces sequential execution.
    """
    retain_stores = keep_stores or data_dir is not None
    reps = list(range(spec.repetitions))
    if workers > 1 and not retain_stores and on_engine is None:
        import multiprocessing

        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=min(workers, len(reps))) as pool:
            results = pool.map(_worker, [(spec, r, debug_logging) for r in reps])
    else:
        results = [
            _run_one(spec, r, keep_store=retain_stores, debug_logging=debug_logging, on_engine=on_engine)
            for r in reps
        ]
    results.sort(key=lambda r: r.repetition)
    outcome = ExperimentResult(spec=spec, repetitions=results, data_dir=data_dir)
    if data_dir is not None:
        _write_artifacts(outcome, data_dir)
        if not keep_stores:
            for rep in results:
                rep.store = None
    return outcome


def _write_artifacts(result, data_dir):
    os.makedirs(data_dir, exist_ok=True)
    manifest = {"spec": result.spec.to_document(), "repetitions": []}
    for rep in result.repetitions:
        rep_dir = os.path.join(data_dir, f"rep_{rep.repetition:03d}")
        os.makedirs(rep_dir, exist_ok=True)
        files = {}
        by_host = {}
        if rep.store is not None:
            for record in rep.store.records:
                if not record.timestamp:
                    record.timestamp = _emu_timestamp(round(record.received_at * 1e6))
                by_host.setdefault(record.host, []).append(record)
        for host in sorted(by_host):
            path = os.path.join(rep_dir, f"{host}.log")
            with open(path, "w", encoding="latin-1") as fh:
                for record in by_host[host]:
                    fh.write(format_syslog(record) + "\n")
            files[host] = os.path.relpath(path, data_dir)
        manifest["repetitions"].append(
            {
                "repetition": rep.repetition,
                "files": files,
                "consumer": rep.consumer_stats,
            }
        )
    with open(os.path.join(data_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    with open(os.path.join(data_dir, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write(result.export_csv())


def schedule_failure(engine, label_a, label_b, at_s):
    """Queue a link-down event; packets in flight on the link at that time drop."""
    key = engine._link_key(label_a, label_b)
    engine._push(round(at_s * 1e6), _FAILURE, (key, False))
    return key


def probe_link_delays(engine):
    """Per-link delay series gathered by the engine's 5 s probe rounds."""
    labels = [engine.links[key].label for key in sorted(engine.links)]
    return [evalkit.compute_link_delay(engine.store, label) for label in labels]


# -- prefix-scaling benchmark -------------------------------------------------


@dataclass(slots=True)
class BenchmarkReport:
    node_count: int
    prefixes_per_node: int
    phase_seconds: dict
    fib_sizes: dict

    def series(self):
        out = [
            evalkit.MetricSeries(
                evalkit.PHASE_RUNTIME_S, phase, 1.0, [(0.0, seconds)]
            )
            for phase, seconds in self.phase_seconds.items()
        ]
        out.extend(
            evalkit.MetricSeries(evalkit.TABLE_SIZES, label, 1.0, [(0.0, float(n))])
            for label, n in self.fib_sizes.items()
        )
        return out


def ring_topology(node_count, delay_ms=1.0):
    labels = [f"N{i}" for i in range(node_count)]
    matrix = [[None] * node_count for _ in range(node_count)]
    for i in range(node_count):
        j = (i + 1) % node_count
        if i != j:
            matrix[i][j] = delay_ms
            matrix[j][i] = delay_ms
    return topo_mod.parse_adjacency(json.dumps({"labels": labels, "matrix": matrix}))


def benchmark_prefix_install(node_count, prefixes_per_node):
    """Time the controller phases for installing hierarchical prefixes at scale.

    Phases: link config (topology + faces), routing (all-pairs paths and
    per-prefix route planning), install (FIB population on every node).
    Each node ends up with (node_count - 1) * prefixes_per_node remote entries.
    """
    if node_count < 1 or prefixes_per_node < 1:
        raise ValueError("counts must be >= 1")
    import gc

    phases = {}
    gc_was_enabled = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        return _benchmark_phases(node_count, prefixes_per_node, phases)
    finally:
        if gc_was_enabled:
            gc.enable()


def _benchmark_phases(node_count, prefixes_per_node, phases):
    t0 = time.perf_counter()
    topology = ring_topology(node_count)
    forwarders = []
    for node in topology.nodes:
        fwd = ForwarderState(node)
        for k, j in enumerate(topology.neighbors(node.index)):
            fwd.add_face(FaceId(id=k, remote=topology.nodes[j], kind="ethernet"))
        forwarders.append(fwd)
    phases["link_config"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    dist = {n.index: topo_mod.shortest_paths(topology, n.index) for n in topology.nodes}
    plans = []  # (node_index, prefix_parts, [(face, cost)])
    for fwd in forwarders:
        i = fwd.node.index
        neighbor_by_face = {
            f.id: f.remote.index for f in fwd.faces.values() if f.remote is not None
        }
        for owner in topology.nodes:
            j = owner.index
            if j == i:
                continue
            hops = []
            for fid, peer in sorted(neighbor_by_face.items()):
                reach = dist[peer].get(j)
                if reach is None:
                    continue
                link = topology.links[(i, peer)]
                hops.append((fwd.faces[fid], link.delay_ms + reach[0]))
            if not hops:
                continue
            for p in range(prefixes_per_node):
                plans.append((i, ("testbed", f"P{j}", f"p{p}"), hops))
    phases["routing"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    for i, parts, hops in plans:
        forwarders[i].fib[parts] = FibEntry(prefix=Name(parts), next_hops=hops)
    phases["install"] = time.perf_counter() - t0

    fib_sizes = {fwd.node.label: len(fwd.fib) for fwd in forwarders}
    return BenchmarkReport(
        node_count=node_count,
        prefixes_per_node=prefixes_per_node,
        phase_seconds=phases,
        fib_sizes=fib_sizes,
    )

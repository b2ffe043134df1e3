"""Per-node NDN data plane: name tables (FIB/PIT/CS), faces and strategies.

The forwarding pipeline for an interest is CS, then PIT, then FIB: a cached
copy answers immediately, a live PIT entry aggregates, otherwise the strategy
picks the outgoing faces from the longest-prefix FIB match. Data retraces PIT
in-faces and lands in the content store (exact-name, LRU).

All mutation happens through these functions on a single owner thread; state
objects can move between threads but are never shared mutably.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

BEST_ROUTE = "best_route"
MULTICAST = "multicast"
STRATEGIES = (BEST_ROUTE, MULTICAST)

DEFAULT_PIT_LIFETIME_MS = 4000.0
DEFAULT_CS_CAPACITY = 1000
DEFAULT_HOP_LIMIT = 32

FACE_KINDS = ("ethernet", "tcp", "udp", "websocket", "app")


@dataclass(frozen=True)
class Name:
    """Hierarchical content name; canonical text form joins components with '/'."""

    parts: tuple[str, ...]

    def __post_init__(self):
        if not self.parts:
            raise ValueError("name needs at least one component")
        for p in self.parts:
            if not p or "/" in p:
                raise ValueError(f"bad name component {p!r}")

    @classmethod
    def from_text(cls, text):
        if not text.startswith("/"):
            raise ValueError(f"name text must start with '/': {text!r}")
        return cls(tuple(c for c in text.split("/") if c))

    def to_text(self):
        return "/" + "/".join(self.parts)

    def __str__(self):
        return self.to_text()


@dataclass(frozen=True, eq=False)
class FaceId:
    """A point-to-point channel endpoint on a node (link, tunnel or local app).

    Faces are singletons per node (compare and hash by identity); the cheap
    identity hash matters on the PIT hot path.
    """

    id: int
    remote: object = None  # NodeId of the peer, None for app faces
    kind: str = "ethernet"


@dataclass(slots=True)
class Interest:
    name: Name
    nonce: int
    hop_limit: int = DEFAULT_HOP_LIMIT
    issued_at_ms: float = 0.0


@dataclass(slots=True)
class DataPacket:
    name: Name
    payload_size: int
    produced_at_ms: float = 0.0


@dataclass(slots=True)
class FibEntry:
    prefix: Name
    next_hops: list  # [(FaceId, cost)], install order preserved


@dataclass(slots=True)
class PitEntry:
    name: Name
    in_faces: set
    out_faces: set
    nonces: set
    expiry_ms: float


@dataclass(slots=True)
class CsEntry:
    name: Name
    data: DataPacket
    inserted_at_ms: float
    last_used_ms: float


class FaceCounters:
    __slots__ = ("interest_in", "interest_out", "data_in", "data_out")

    def __init__(self):
        self.interest_in = 0
        self.interest_out = 0
        self.data_in = 0
        self.data_out = 0


_NO_EMISSIONS = ((), ())


class ForwarderState:
    """One node's tables, faces and tallies."""

    def __init__(
        self,
        node,
        strategy=BEST_ROUTE,
        cs_capacity=DEFAULT_CS_CAPACITY,
        pit_lifetime_ms=DEFAULT_PIT_LIFETIME_MS,
    ):
        if strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {strategy!r}")
        self.node = node
        self.strategy = strategy
        self.cs_capacity = cs_capacity
        self.pit_lifetime_ms = pit_lifetime_ms
        self.faces = {}  # face id -> FaceId
        self.fib = {}  # name parts tuple -> FibEntry
        self.fib_max_prefix = 0  # longest installed prefix, caps LPM walk
        self.pit = {}  # name parts tuple -> PitEntry
        self.cs = OrderedDict()  # name parts tuple -> CsEntry, LRU order
        self.face_counters = {}  # face id -> FaceCounters
        # node-level drop/bookkeeping tallies
        self.unroutable = 0
        self.no_viable_face = 0
        self.duplicate_nonce = 0
        self.hop_exhausted = 0
        self.unsolicited = 0
        self.pit_timeouts = 0
        self.cs_hits = 0

    def add_face(self, face):
        if face.id in self.faces:
            raise ValueError(f"face id {face.id} already present on {self.node.label}")
        self.faces[face.id] = face
        self.face_counters[face.id] = FaceCounters()
        return face

    def install_route(self, prefix, next_hops):
        """Register a FIB entry; next_hops is [(FaceId, cost)] without duplicates."""
        if not next_hops:
            raise ValueError("FIB entry needs at least one next hop")
        ids = [f.id for f, _ in next_hops]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate face in next hops")
        self.fib[prefix.parts] = FibEntry(prefix=prefix, next_hops=list(next_hops))
        if len(prefix.parts) > self.fib_max_prefix:
            self.fib_max_prefix = len(prefix.parts)

    def pit_size(self):
        return len(self.pit)

    def cs_size(self):
        return len(self.cs)


def fib_lpm(fib, name):
    """Longest-prefix FIB match for a name; None when nothing matches.

    Accepts either a ForwarderState or a raw {parts: FibEntry} mapping.
    """
    if isinstance(fib, ForwarderState):
        table = fib.fib
        start = min(len(name.parts), fib.fib_max_prefix)
    else:
        table = fib
        start = len(name.parts)
    parts = name.parts
    for k in range(start, 0, -1):
        entry = table.get(parts[:k])
        if entry is not None:
            return entry
    return None


def _face_order(face):
    return face.id


def strategy_select(strategy, fib_entry, in_face):
    """Faces an interest goes out on: cheapest for best route, all for multicast.

    The incoming face is always excluded; an empty result kills the interest.
    """
    if strategy == BEST_ROUTE:
        best = None
        best_key = None
        for face, cost in fib_entry.next_hops:
            if face.id == in_face.id:
                continue
            key = (cost, face.id)
            if best_key is None or key < best_key:
                best_key = key
                best = face
        return [] if best is None else [best]
    if strategy == MULTICAST:
        return [face for face, _ in fib_entry.next_hops if face.id != in_face.id]
    raise ValueError(f"unknown strategy {strategy!r}")


def on_interest(state, interest, in_face, now_ms):
    """Run one interest through the CS/PIT/FIB pipeline.

    Returns (interest_emissions, data_emissions) as lists of (FaceId, packet).
    CS hit answers on the incoming face. An existing PIT entry aggregates
    (new nonce) or drops (seen nonce). Otherwise a PIT entry is created and
    the strategy fans out over the FIB match; each forwarded copy over a
    non-app face spends one hop.
    """
    counters = state.face_counters[in_face.id]
    counters.interest_in += 1
    if interest.hop_limit <= 0:
        state.hop_exhausted += 1
        return _NO_EMISSIONS
    parts = interest.name.parts

    entry = state.cs.get(parts)
    if entry is not None:
        entry.last_used_ms = now_ms
        state.cs.move_to_end(parts)
        state.cs_hits += 1
        counters.data_out += 1
        return (), [(in_face, entry.data)]

    pit_entry = state.pit.get(parts)
    if pit_entry is not None:
        if interest.nonce in pit_entry.nonces:
            state.duplicate_nonce += 1
        else:
            pit_entry.in_faces.add(in_face)
            pit_entry.nonces.add(interest.nonce)
        return _NO_EMISSIONS

    fib_entry = fib_lpm(state, interest.name)
    if fib_entry is None:
        state.unroutable += 1
        return _NO_EMISSIONS

    # strategy_select, inlined for the hot path
    in_id = in_face.id
    if state.strategy == BEST_ROUTE:
        best = None
        best_key = None
        for face, cost in fib_entry.next_hops:
            if face.id == in_id:
                continue
            key = (cost, face.id)
            if best_key is None or key < best_key:
                best_key = key
                best = face
        out_faces = [] if best is None else [best]
    else:
        out_faces = [face for face, _ in fib_entry.next_hops if face.id != in_id]
    state.pit[parts] = PitEntry(
        interest.name, {in_face}, set(out_faces), {interest.nonce}, now_ms + state.pit_lifetime_ms
    )
    if not out_faces:
        state.no_viable_face += 1
        return _NO_EMISSIONS
    emissions = []
    face_counters = state.face_counters
    for face in out_faces:
        if face.kind == "app":
            copy = Interest(interest.name, interest.nonce, interest.hop_limit, interest.issued_at_ms)
        else:
            hops_left = interest.hop_limit - 1
            if hops_left <= 0:
                state.hop_exhausted += 1
                continue
            copy = Interest(interest.name, interest.nonce, hops_left, interest.issued_at_ms)
        face_counters[face.id].interest_out += 1
        emissions.append((face, copy))
    return emissions, ()


def on_data(state, data, in_face, now_ms):
    """Match data against the PIT; fan out to waiting faces and cache it.

    Returns (interest_emissions, data_emissions); the first element is always
    empty and mirrors on_interest's shape. Unsolicited data (no PIT entry) is
    dropped and counted. Fan-out follows ascending face id so runs replay
    identically across processes.
    """
    state.face_counters[in_face.id].data_in += 1
    parts = data.name.parts
    pit_entry = state.pit.pop(parts, None)
    if pit_entry is None:
        state.unsolicited += 1
        return _NO_EMISSIONS
    in_faces = pit_entry.in_faces
    if len(in_faces) == 1:
        (face,) = in_faces
        state.face_counters[face.id].data_out += 1
        emissions = [(face, data)]
    else:
        emissions = []
        for face in sorted(in_faces, key=_face_order):
            state.face_counters[face.id].data_out += 1
            emissions.append((face, data))
    cs_insert(state, data, now_ms)
    return (), emissions


def cs_insert(state, data, now_ms):
    """Insert data into the content store, evicting the least recently used."""
    if state.cs_capacity <= 0:
        return
    cs = state.cs
    parts = data.name.parts
    refresh = parts in cs
    cs[parts] = CsEntry(name=data.name, data=data, inserted_at_ms=now_ms, last_used_ms=now_ms)
    if refresh:
        cs.move_to_end(parts)
    while len(cs) > state.cs_capacity:
        cs.popitem(last=False)


def pit_sweep(state, now_ms):
    """Drop every PIT entry whose expiry has passed; returns the removed entries."""
    expired = [parts for parts, e in state.pit.items() if e.expiry_ms <= now_ms]
    removed = []
    for parts in expired:
        removed.append(state.pit.pop(parts))
        state.pit_timeouts += 1
    return removed

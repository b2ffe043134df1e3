"""Topology handling: adjacency-matrix parsing, validation and global route compilation.

The controller receives a user topology as a JSON adjacency document, validates
it, and compiles per-node IP and NDN routing tables centrally (no distributed
routing protocol runs on the nodes). Link delay in milliseconds is the edge
weight for shortest paths. Management IPs follow a positional plan: node i owns
10.0.x.y where x.y encodes i+1, and its name prefix is /testbed/P<i>.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

WIRED = "wired"
WIRELESS = "wireless"
_MEDIA = (WIRED, WIRELESS)

# face kind installed for each medium
_FACE_KIND_FOR_MEDIUM = {WIRED: "ethernet", WIRELESS: "udp"}


class TopologyError(ValueError):
    """Base class for topology validation failures; `kind` is a stable identifier."""

    kind = "malformed"

    def __init__(self, message, kind=None):
        super().__init__(message)
        if kind is not None:
            self.kind = kind


class MalformedDocumentError(TopologyError):
    kind = "malformed"


class AsymmetricMatrixError(TopologyError):
    kind = "asymmetric"


class NonPositiveDelayError(TopologyError):
    kind = "non_positive_delay"


class DuplicateLabelError(TopologyError):
    kind = "duplicate_label"


class UnknownNodeError(TopologyError):
    kind = "unknown_node"


class UnknownLinkError(TopologyError):
    kind = "unknown_link"


@dataclass(frozen=True)
class NodeId:
    index: int
    label: str


@dataclass(frozen=True)
class LinkSpec:
    delay_ms: float
    medium: str = WIRED
    up: bool = True


@dataclass(frozen=True)
class RouteEntry:
    destination: str
    next_hop: NodeId
    cost: float


@dataclass(frozen=True)
class NodeConfig:
    node: NodeId
    ip_routes: tuple[RouteEntry, ...]
    ndn_routes: tuple[RouteEntry, ...]
    faces: tuple[tuple[NodeId, str], ...]
    name_prefix: str


@dataclass(frozen=True)
class Topology:
    """Validated node set plus symmetric link map keyed by (i, j) index pairs.

    Both directional keys are present for every link and carry equal specs.
    `connected` is a validation flag: disconnected topologies are accepted but
    unreachable destinations simply get no route.
    """

    nodes: tuple[NodeId, ...]
    links: dict[tuple[int, int], LinkSpec] = field(compare=True)
    connected: bool = True

    @property
    def node_count(self):
        return len(self.nodes)

    def node_by_label(self, label):
        for n in self.nodes:
            if n.label == label:
                return n
        raise UnknownNodeError(f"no node labelled {label!r}")

    def neighbors(self, index):
        """Neighbor indices over up links, ascending."""
        return sorted(j for (i, j), spec in self.links.items() if i == index and spec.up)

    def link_between(self, a, b):
        spec = self.links.get((a.index, b.index))
        if spec is None:
            raise UnknownLinkError(f"no link between {a.label} and {b.label}")
        return spec

    def undirected_links(self):
        """One (i, j, spec) per link with i < j, ascending."""
        return [(i, j, s) for (i, j), s in sorted(self.links.items()) if i < j]


def node_address(index):
    """Positional management IPv4 address for a node index."""
    n = index + 1
    return f"10.0.{n // 256}.{n % 256}"


def name_prefix(index):
    return f"/testbed/P{index}"


def parse_adjacency(text):
    """Parse and validate a JSON adjacency document into a Topology.

    Document shape: {"labels": [...], "matrix": [[delay-ms|null, ...], ...],
    "media": optional matrix of "wired"/"wireless"}. Labels default to N<i>.
    """
    try:
        doc = json.loads(text) if isinstance(text, (str, bytes)) else text
    except (json.JSONDecodeError, TypeError) as exc:
        raise MalformedDocumentError(f"document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDocumentError("document must be a JSON object")
    matrix = doc.get("matrix")
    if not isinstance(matrix, list) or not matrix:
        raise MalformedDocumentError("missing or empty matrix")
    n = len(matrix)
    for row in matrix:
        if not isinstance(row, list) or len(row) != n:
            raise MalformedDocumentError("matrix must be square")

    labels = doc.get("labels")
    if labels is None:
        labels = [f"N{i}" for i in range(n)]
    if not isinstance(labels, list) or len(labels) != n:
        raise MalformedDocumentError("labels must match matrix size")
    seen = set()
    for lab in labels:
        if not isinstance(lab, str) or not lab:
            raise MalformedDocumentError(f"bad label {lab!r}")
        if lab in seen:
            raise DuplicateLabelError(f"duplicate label {lab!r}")
        seen.add(lab)

    media = doc.get("media")
    if media is not None:
        if not isinstance(media, list) or len(media) != n or any(
            not isinstance(r, list) or len(r) != n for r in media
        ):
            raise MalformedDocumentError("media matrix must match matrix size")

    links = {}
    for i in range(n):
        for j in range(n):
            cell = matrix[i][j]
            if cell is None:
                continue
            if i == j:
                raise MalformedDocumentError(f"diagonal entry ({i},{i}) must be null")
            if isinstance(cell, bool) or not isinstance(cell, (int, float)):
                raise MalformedDocumentError(f"entry ({i},{j}) must be a number or null")
            if matrix[j][i] is None:
                raise AsymmetricMatrixError(f"entry ({i},{j}) present but ({j},{i}) absent")
            if matrix[j][i] != cell:
                raise AsymmetricMatrixError(
                    f"entry ({i},{j})={cell} differs from ({j},{i})={matrix[j][i]}"
                )
            if not cell > 0 or not math.isfinite(cell):
                raise NonPositiveDelayError(f"entry ({i},{j}) delay must be > 0, got {cell}")
            medium = WIRED
            if media is not None:
                medium = media[i][j]
                if medium not in _MEDIA:
                    raise MalformedDocumentError(f"media entry ({i},{j}) must be wired/wireless")
                if media[j][i] != medium:
                    raise AsymmetricMatrixError(f"media entry ({i},{j}) differs from ({j},{i})")
            links[(i, j)] = LinkSpec(delay_ms=float(cell), medium=medium)

    nodes = tuple(NodeId(i, labels[i]) for i in range(n))
    return Topology(nodes=nodes, links=links, connected=_is_connected(n, links))


def _is_connected(n, links):
    if n <= 1:
        return True
    adj = {i: [] for i in range(n)}
    for (i, j), spec in links.items():
        if spec.up:
            adj[i].append(j)
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == n


def serialize(topo):
    """Render the canonical adjacency document for a topology.

    Canonical form: compact separators, explicit media matrix, integral delays
    rendered as integers. parse_adjacency(serialize(t)) == t for validated
    topologies with all links up.
    """
    n = topo.node_count
    matrix = [[None] * n for _ in range(n)]
    media = [[None] * n for _ in range(n)]
    for (i, j), spec in topo.links.items():
        d = spec.delay_ms
        matrix[i][j] = int(d) if d == int(d) else d
        media[i][j] = spec.medium
    doc = {"labels": [nd.label for nd in topo.nodes], "matrix": matrix, "media": media}
    return json.dumps(doc, separators=(",", ":"))


def shortest_paths(topo, source_index, skip_index=None):
    """Dijkstra over up links from one node.

    Returns {dest_index: (cost, path)} for every reachable node including the
    source itself; path is the node-index tuple starting at source. Ties between
    equal-cost paths resolve to the lexicographically smallest path, which also
    means the smallest first-hop index. skip_index removes a node from the
    graph (used for reverse-path pruning in route installation).
    """
    adj = {i: [] for i in range(topo.node_count)}
    for (i, j), spec in topo.links.items():
        if spec.up and i != skip_index and j != skip_index:
            adj[i].append((j, spec.delay_ms))
    for lst in adj.values():
        lst.sort()

    best = {}
    if source_index == skip_index:
        return best
    heap = [(0.0, (source_index,), source_index)]
    while heap:
        cost, path, u = heapq.heappop(heap)
        if u in best:
            continue
        best[u] = (cost, path)
        for v, w in adj[u]:
            if v not in best:
                heapq.heappush(heap, (cost + w, path + (v,), v))
    return best


def compute_routes(topo, source):
    """Routes from one node to every reachable other node.

    Edge weight is link delay; only up links count. destination is the target
    node's label, next_hop the first hop on the chosen shortest path.
    """
    if source.index >= topo.node_count or topo.nodes[source.index] != source:
        raise UnknownNodeError(f"{source.label!r} is not in this topology")
    best = shortest_paths(topo, source.index)
    routes = []
    for dest in topo.nodes:
        if dest.index == source.index or dest.index not in best:
            continue
        cost, path = best[dest.index]
        routes.append(RouteEntry(destination=dest.label, next_hop=topo.nodes[path[1]], cost=cost))
    return routes


def compile_node_configs(topo):
    """Compile per-node faces plus IP (/32) and NDN (/testbed/P<i>) route sets."""
    configs = []
    for node in topo.nodes:
        best = shortest_paths(topo, node.index)
        ip_routes = []
        ndn_routes = []
        for dest in topo.nodes:
            if dest.index == node.index or dest.index not in best:
                continue
            cost, path = best[dest.index]
            hop = topo.nodes[path[1]]
            ip_routes.append(RouteEntry(f"{node_address(dest.index)}/32", hop, cost))
            ndn_routes.append(RouteEntry(name_prefix(dest.index), hop, cost))
        faces = tuple(
            (topo.nodes[j], _FACE_KIND_FOR_MEDIUM[topo.links[(node.index, j)].medium])
            for j in sorted(j for (i, j) in topo.links if i == node.index)
        )
        configs.append(
            NodeConfig(
                node=node,
                ip_routes=tuple(ip_routes),
                ndn_routes=tuple(ndn_routes),
                faces=faces,
                name_prefix=name_prefix(node.index),
            )
        )
    return configs


def apply_link_state(topo, a, b, up):
    """Return a topology with link (a, b) set up/down in both directions.

    Previously compiled routes are not touched; global routing is static and
    stays stale across failures on purpose.
    """
    key = (a.index, b.index)
    if key not in topo.links:
        raise UnknownLinkError(f"no link between {a.label} and {b.label}")
    links = dict(topo.links)
    for k in (key, (b.index, a.index)):
        spec = links[k]
        links[k] = LinkSpec(delay_ms=spec.delay_ms, medium=spec.medium, up=up)
    return Topology(nodes=topo.nodes, links=links, connected=topo.connected)

"""Node admission: DHCP message parsing, lease bookkeeping, provisioning plans.

The controller learns a joining node's OS from the vendor class identifier
(option 60) carried in its DISCOVER, hands out the lowest free pool address,
and renders a declarative provisioning plan from the node's compiled config.
Plan execution (packages, SSH) is out of scope; plans carry no secrets.
"""

from __future__ import annotations

import ipaddress
import json
import threading
import time
from dataclasses import dataclass

MAGIC_COOKIE = bytes((99, 130, 83, 99))
HEADER_LEN = 236

OPT_PAD = 0
OPT_MESSAGE_TYPE = 53
OPT_VENDOR_CLASS = 60
OPT_END = 255

DHCPDISCOVER = 1
DHCPREQUEST = 3

OS_UBUNTU = "ubuntu"
OS_MAC = "mac"
OS_PI = "pi"
OS_UNKNOWN = "unknown"

TASK_KINDS = ("install-forwarder", "configure-faces", "install-routes", "set-log-sink")

DEFAULT_LISTEN_PORT = 6767  # unprivileged stand-in for 67


class DhcpParseError(ValueError):
    """Raised on malformed DHCP bytes; `kind` is a stable identifier."""

    def __init__(self, message, kind):
        super().__init__(message)
        self.kind = kind


class PoolExhaustedError(RuntimeError):
    pass


@dataclass(slots=True)
class DhcpMessage:
    op: int
    htype: int
    hlen: int
    hops: int
    xid: int
    secs: int
    flags: int
    ciaddr: bytes
    yiaddr: bytes
    siaddr: bytes
    giaddr: bytes
    chaddr: bytes
    sname: bytes
    file: bytes
    options: list  # ordered (code, payload) pairs, pads kept as (0, b"")
    message_type: int | None = None

    @property
    def mac(self):
        return self.chaddr[: self.hlen].hex(":")

    @property
    def vendor_class(self):
        for code, payload in self.options:
            if code == OPT_VENDOR_CLASS:
                return payload.decode("latin-1")
        return ""


def os_type_from_vci(vci):
    """Map a vendor class identifier onto a supported OS family."""
    low = vci.strip().lower()
    if low.startswith("ubuntu"):
        return OS_UBUNTU
    if low.startswith("mac"):
        return OS_MAC
    if low.startswith("pi") or low.startswith("raspb"):
        return OS_PI
    return OS_UNKNOWN


def parse_dhcp_message(data):
    """Parse the fixed header, cookie and option list of one DHCP message.

    Error kinds: truncated_header, missing_cookie, truncated_option,
    missing_terminator.
    """
    if len(data) < HEADER_LEN + len(MAGIC_COOKIE):
        raise DhcpParseError(
            f"message too short ({len(data)} bytes, need {HEADER_LEN + 4})", "truncated_header"
        )
    if data[HEADER_LEN : HEADER_LEN + 4] != MAGIC_COOKIE:
        raise DhcpParseError("magic cookie missing before options", "missing_cookie")

    msg = DhcpMessage(
        op=data[0],
        htype=data[1],
        hlen=data[2],
        hops=data[3],
        xid=int.from_bytes(data[4:8], "big"),
        secs=int.from_bytes(data[8:10], "big"),
        flags=int.from_bytes(data[10:12], "big"),
        ciaddr=bytes(data[12:16]),
        yiaddr=bytes(data[16:20]),
        siaddr=bytes(data[20:24]),
        giaddr=bytes(data[24:28]),
        chaddr=bytes(data[28:44]),
        sname=bytes(data[44:108]),
        file=bytes(data[108:236]),
        options=[],
    )

    i = HEADER_LEN + 4
    terminated = False
    while i < len(data):
        code = data[i]
        i += 1
        if code == OPT_PAD:
            msg.options.append((OPT_PAD, b""))
            continue
        if code == OPT_END:
            terminated = True
            break
        if i >= len(data):
            raise DhcpParseError(f"option {code} missing its length byte", "truncated_option")
        length = data[i]
        i += 1
        if i + length > len(data):
            raise DhcpParseError(
                f"option {code} claims {length} bytes but {len(data) - i} remain",
                "truncated_option",
            )
        payload = bytes(data[i : i + length])
        i += length
        msg.options.append((code, payload))
        if code == OPT_MESSAGE_TYPE and length == 1:
            msg.message_type = payload[0]
    if not terminated:
        raise DhcpParseError("option list lacks the end marker", "missing_terminator")
    return msg


def encode_options(options):
    """Inverse of the option parse: pads stay single bytes, end marker appended."""
    out = bytearray()
    for code, payload in options:
        if code == OPT_PAD:
            out.append(OPT_PAD)
            continue
        out.append(code)
        out.append(len(payload))
        out.extend(payload)
    out.append(OPT_END)
    return bytes(out)


def encode_message(msg):
    """Rebuild the wire form; options region round-trips byte-exactly."""
    out = bytearray()
    out.append(msg.op)
    out.append(msg.htype)
    out.append(msg.hlen)
    out.append(msg.hops)
    out.extend(msg.xid.to_bytes(4, "big"))
    out.extend(msg.secs.to_bytes(2, "big"))
    out.extend(msg.flags.to_bytes(2, "big"))
    out.extend(msg.ciaddr)
    out.extend(msg.yiaddr)
    out.extend(msg.siaddr)
    out.extend(msg.giaddr)
    out.extend(msg.chaddr)
    out.extend(msg.sname)
    out.extend(msg.file)
    out.extend(MAGIC_COOKIE)
    out.extend(encode_options(msg.options))
    return bytes(out)


@dataclass(slots=True)
class LeaseRecord:
    mac: str
    ip: str
    vci: str
    os_type: str
    issued_at: float

    def to_json(self):
        return json.dumps(
            {
                "mac": self.mac,
                "ip": self.ip,
                "vci": self.vci,
                "os_type": self.os_type,
                "issued_at": self.issued_at,
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line):
        doc = json.loads(line)
        return cls(doc["mac"], doc["ip"], doc["vci"], doc["os_type"], float(doc["issued_at"]))


class LeaseRegistry:
    """Single-writer lease table over a contiguous IPv4 pool.

    Allocation is lowest-free and deterministic: replaying the same DISCOVER
    sequence yields the same table. One active lease per MAC, unique IPs.
    """

    def __init__(self, pool_start="10.0.0.10", pool_end="10.0.0.250", clock=time.time):
        self.pool_start = int(ipaddress.IPv4Address(pool_start))
        self.pool_end = int(ipaddress.IPv4Address(pool_end))
        if self.pool_end < self.pool_start:
            raise ValueError("pool end precedes pool start")
        self.clock = clock
        self.leases = {}  # mac -> LeaseRecord
        self._in_use = set()
        self._lock = threading.Lock()

    @property
    def pool_size(self):
        return self.pool_end - self.pool_start + 1

    def handle_discover(self, msg):
        """Assign or renew the lease for a DISCOVER/REQUEST message."""
        if msg.message_type not in (DHCPDISCOVER, DHCPREQUEST):
            raise ValueError(f"not a DISCOVER/REQUEST (type {msg.message_type})")
        vci = msg.vendor_class
        with self._lock:
            mac = msg.mac
            existing = self.leases.get(mac)
            if existing is not None:
                existing.issued_at = self.clock()
                existing.vci = vci
                existing.os_type = os_type_from_vci(vci)
                return existing
            ip_int = None
            for candidate in range(self.pool_start, self.pool_end + 1):
                if candidate not in self._in_use:
                    ip_int = candidate
                    break
            if ip_int is None:
                raise PoolExhaustedError(f"all {self.pool_size} pool addresses leased")
            lease = LeaseRecord(
                mac=mac,
                ip=str(ipaddress.IPv4Address(ip_int)),
                vci=vci,
                os_type=os_type_from_vci(vci),
                issued_at=self.clock(),
            )
            self.leases[mac] = lease
            self._in_use.add(ip_int)
            return lease

    def snapshot(self):
        with self._lock:
            return list(self.leases.values())

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for lease in self.snapshot():
                fh.write(lease.to_json() + "\n")

    def load(self, path):
        with self._lock:
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    lease = LeaseRecord.from_json(line)
                    self.leases[lease.mac] = lease
                    self._in_use.add(int(ipaddress.IPv4Address(lease.ip)))


def handle_discover(registry, msg):
    """Module-level convenience over LeaseRegistry.handle_discover."""
    return registry.handle_discover(msg)


@dataclass(slots=True)
class ProvisioningTask:
    kind: str
    params: dict


@dataclass(slots=True)
class ProvisioningPlan:
    node: LeaseRecord
    tasks: list
    tags: tuple = ()

    def to_document(self):
        return {
            "node": json.loads(self.node.to_json()),
            "tags": list(self.tags),
            "tasks": [{"kind": t.kind, "params": t.params} for t in self.tasks],
        }


def emit_provisioning_plan(lease, config, syslog_addr=("controller", 514)):
    """Render the fixed four-task plan for one node from its compiled config.

    Nodes with an unrecognized OS still get a plan, tagged manual-review so an
    operator confirms the steps before anything runs on the box.
    """
    tasks = [
        ProvisioningTask("install-forwarder", {"os_type": lease.os_type}),
        ProvisioningTask(
            "configure-faces",
            {
                "faces": [
                    {"neighbor": remote.label, "kind": kind} for remote, kind in config.faces
                ]
            },
        ),
        ProvisioningTask(
            "install-routes",
            {
                "name_prefix": config.name_prefix,
                "ip_routes": [
                    {"destination": r.destination, "next_hop": r.next_hop.label, "cost": r.cost}
                    for r in config.ip_routes
                ],
                "ndn_routes": [
                    {"destination": r.destination, "next_hop": r.next_hop.label, "cost": r.cost}
                    for r in config.ndn_routes
                ],
            },
        ),
        ProvisioningTask(
            "set-log-sink", {"host": syslog_addr[0], "port": syslog_addr[1], "proto": "udp"}
        ),
    ]
    tags = ("manual-review",) if lease.os_type == OS_UNKNOWN else ()
    return ProvisioningPlan(node=lease, tasks=tasks, tags=tags)


class DhcpListener:
    """Minimal UDP intake: parse datagrams, feed DISCOVER/REQUEST to the registry.

    No OFFER/ACK exchange happens here; admission bookkeeping is the entire job.
    """

    def __init__(self, registry, host="127.0.0.1", port=DEFAULT_LISTEN_PORT):
        import socket

        self.registry = registry
        self.parse_errors = []
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host, port))
        self.address = self._sock.getsockname()
        self._running = False
        self._thread = None

    @property
    def port(self):
        return self.address[1]

    def start(self):
        self._running = True
        self._thread = threading.Thread(target=self._serve, name="dhcp-udp", daemon=True)
        self._thread.start()
        return self

    def _serve(self):
        import socket

        self._sock.settimeout(0.2)
        while self._running:
            try:
                data, _ = self._sock.recvfrom(65535)
            except socket.timeout:
                continue
            except OSError:
                break
            try:
                msg = parse_dhcp_message(data)
            except DhcpParseError as exc:
                self.parse_errors.append(exc.kind)
                continue
            if msg.message_type in (DHCPDISCOVER, DHCPREQUEST):
                try:
                    self.registry.handle_discover(msg)
                except PoolExhaustedError:
                    pass

    def stop(self):
        self._running = False
        if self._thread is not None:
            self._thread.join(timeout=2.0)
        self._sock.close()

"""Central log repository: structured syslog parsing, append-only store, queries.

Nodes ship logs as single-datagram syslog lines (versioned header format).
Anything that does not parse lands in a quarantine stream with a typed reason,
so total datagrams always equals parsed + quarantined. Emulated runs bypass
the socket and ingest records in-process with the emulator clock; the UDP
listener serves live nodes and has its own tests.

Record message grammar used by the evaluation layer:
    interest NAME NONCE
    data NAME BYTES
    rtt NAME MS
    probe LINK MS|loss
"""

from __future__ import annotations

import socket
import threading
import time
from dataclasses import dataclass
from datetime import datetime

DEFAULT_SYSLOG_PORT = 514

SEVERITIES = (
    "emergency",
    "alert",
    "critical",
    "error",
    "warning",
    "notice",
    "informational",
    "debug",
)


class SyslogParseError(ValueError):
    """Raised on malformed syslog input; `kind` is a stable identifier."""

    def __init__(self, message, kind):
        super().__init__(message)
        self.kind = kind


class QueryError(ValueError):
    pass


@dataclass(slots=True)
class SyslogRecord:
    facility: int
    severity: int
    timestamp: str  # device-reported RFC 3339 instant, "" when absent
    host: str
    app: str
    procid: str
    msgid: str
    sd: str  # raw structured-data token, "" when absent
    msg: str
    version: int = 1
    received_at: float = 0.0  # controller receipt clock, seconds
    source_addr: str = ""

    @property
    def priority(self):
        return self.facility * 8 + self.severity


@dataclass(slots=True)
class QuarantinedLine:
    raw: bytes
    reason: str
    received_at: float
    source_addr: str


@dataclass(slots=True)
class SeverityFilter:
    """Pass records at least this important (severity <= max_severity)."""

    max_severity: int

    def __post_init__(self):
        if not 0 <= self.max_severity <= 7:
            raise ValueError(f"severity must be 0..7, got {self.max_severity}")

    def passes(self, record):
        return record.severity <= self.max_severity


def _nil(token):
    return "" if token == "-" else token


def _unnil(value):
    return value if value else "-"


def _parse_timestamp(token):
    if token == "-":
        return ""
    probe = token[:-1] + "+00:00" if token.endswith("Z") else token
    try:
        datetime.fromisoformat(probe)
    except ValueError:
        raise SyslogParseError(f"unparseable timestamp {token!r}", "bad_timestamp") from None
    return token


def _scan_sd(text):
    """Return (raw_sd, rest) splitting structured data off the line tail."""
    if text.startswith("-"):
        rest = text[1:]
        if rest and not rest.startswith(" "):
            raise SyslogParseError("garbage after nil structured data", "truncated")
        return "", rest[1:] if rest else ""
    if not text.startswith("["):
        raise SyslogParseError("structured data must be '-' or bracketed", "truncated")
    i = 0
    in_quotes = False
    escaped = False
    while i < len(text):
        c = text[i]
        if escaped:
            escaped = False
        elif c == "\\":
            escaped = True
        elif c == '"':
            in_quotes = not in_quotes
        elif c == "]" and not in_quotes:
            if i + 1 >= len(text):
                return text[: i + 1], ""
            if text[i + 1] == " ":
                return text[: i + 1], text[i + 2 :]
            if text[i + 1] != "[":
                raise SyslogParseError("garbage after structured data", "truncated")
        i += 1
    raise SyslogParseError("unterminated structured data", "truncated")


def parse_syslog(line):
    """Parse one versioned-header syslog line into a SyslogRecord.

    Raises SyslogParseError with kind missing_pri / invalid_pri /
    pri_out_of_range / bad_timestamp / truncated. Bytes are decoded latin-1 so
    any datagram round-trips byte-exactly through format_syslog.
    """
    text = line.decode("latin-1") if isinstance(line, (bytes, bytearray)) else line
    if not text.startswith("<"):
        raise SyslogParseError("line does not start with a <PRI> bracket", "missing_pri")
    close = text.find(">")
    if close <= 0:
        raise SyslogParseError("unterminated <PRI> bracket", "missing_pri")
    pri_text = text[1:close]
    if not pri_text.isdigit():
        raise SyslogParseError(f"PRI {pri_text!r} is not numeric", "invalid_pri")
    if len(pri_text) > 1 and pri_text[0] == "0":
        raise SyslogParseError(f"PRI {pri_text!r} has a leading zero", "invalid_pri")
    pri = int(pri_text)
    if pri > 191:
        raise SyslogParseError(f"PRI {pri} out of range (max 191)", "pri_out_of_range")

    rest = text[close + 1 :]
    head = rest.split(" ", 6)
    if len(head) < 7:
        raise SyslogParseError("missing header fields", "truncated")
    version_text, ts_token, host, app, procid, msgid, tail = head
    if not version_text.isdigit() or version_text == "0" or version_text[0] == "0":
        raise SyslogParseError(f"bad version {version_text!r}", "truncated")
    timestamp = _parse_timestamp(ts_token)
    sd, msg = _scan_sd(tail)
    return SyslogRecord(
        facility=pri // 8,
        severity=pri % 8,
        timestamp=timestamp,
        host=_nil(host),
        app=_nil(app),
        procid=_nil(procid),
        msgid=_nil(msgid),
        sd=sd,
        msg=msg,
        version=int(version_text),
    )


def format_syslog(record):
    """Render the canonical line for a record; inverse of parse_syslog."""
    head = (
        f"<{record.priority}>{record.version} {_unnil(record.timestamp)} "
        f"{_unnil(record.host)} {_unnil(record.app)} {_unnil(record.procid)} "
        f"{_unnil(record.msgid)} {record.sd if record.sd else '-'}"
    )
    return f"{head} {record.msg}" if record.msg else head


class LogStore:
    """Append-only record store with arrival-order iteration.

    `clock` supplies received_at stamps: wall clock for live ingestion,
    the emulator clock for emulated runs.
    """

    def __init__(self, clock=time.time):
        self.clock = clock
        self.records = []
        self.quarantine = []
        self._by_source = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.records)

    @property
    def total_received(self):
        return len(self.records) + len(self.quarantine)

    def ingest(self, record, source_addr="", received_at=None):
        """Append a record, stamping received_at; records are immutable afterwards."""
        with self._lock:
            record.received_at = self.clock() if received_at is None else received_at
            if source_addr:
                record.source_addr = source_addr
            self.records.append(record)
            self._by_source.setdefault(record.source_addr, []).append(record)
        return record

    def ingest_unlocked(self, record, received_at):
        """Single-writer fast path for the emulator's in-process ingestion."""
        record.received_at = received_at
        self.records.append(record)
        by_source = self._by_source.get(record.source_addr)
        if by_source is None:
            by_source = self._by_source[record.source_addr] = []
        by_source.append(record)
        return record

    def ingest_datagram(self, data, source_addr=""):
        """Parse-and-ingest one datagram; malformed input is quarantined, never lost."""
        try:
            record = parse_syslog(data)
        except SyslogParseError as exc:
            with self._lock:
                raw = bytes(data) if isinstance(data, (bytes, bytearray)) else str(data).encode("latin-1")
                entry = QuarantinedLine(raw, exc.kind, self.clock(), source_addr)
                self.quarantine.append(entry)
            return None
        return self.ingest(record, source_addr=source_addr)

    def query(self, source=None, severity=None, time_range=None, app=None, host=None):
        """Records matching every given predicate, in arrival order.

        time_range is half-open [t0, t1) over received_at. severity accepts a
        SeverityFilter or a bare max severity int.
        """
        if time_range is not None:
            t0, t1 = time_range
            if t0 > t1:
                raise QueryError(f"inverted range [{t0}, {t1})")
        if isinstance(severity, int):
            severity = SeverityFilter(severity)
        base = self._by_source.get(source, []) if source is not None else self.records
        out = []
        for r in base:
            if severity is not None and not severity.passes(r):
                continue
            if time_range is not None and not (t0 <= r.received_at < t1):
                continue
            if app is not None and r.app != app:
                continue
            if host is not None and r.host != host:
                continue
            out.append(r)
        return out


class SyslogServer:
    """UDP listener feeding a LogStore; one datagram is one log line."""

    def __init__(self, store, host="127.0.0.1", port=DEFAULT_SYSLOG_PORT):
        self.store = store
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self._sock.bind((host, port))
        self.address = self._sock.getsockname()
        self._thread = None
        self._running = False

    @property
    def port(self):
        return self.address[1]

    def start(self):
        self._running = True
        self._thread = threading.Thread(target=self._serve, name="syslog-udp", daemon=True)
        self._thread.start()
        return self

    def _serve(self):
        self._sock.settimeout(0.2)
        while self._running:
            try:
                data, addr = self._sock.recvfrom(65535)
            except socket.timeout:
                continue
            except OSError:
                break
            self.store.ingest_datagram(data, source_addr=f"{addr[0]}:{addr[1]}")

    def stop(self):
        self._running = False
        if self._thread is not None:
            self._thread.join(timeout=2.0)
        self._sock.close()

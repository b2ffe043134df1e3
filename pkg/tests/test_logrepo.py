import socket
import time

import pytest
from hypothesis import given, settings, strategies as st

from ndnlab import logrepo


CANONICAL = b"<165>1 2024-01-01T00:00:00Z node1 nfd 7 - - data /testbed/P5/seg/0 1250"


def test_parse_canonical_line():
    r = logrepo.parse_syslog(CANONICAL)
    assert r.facility == 20
    assert r.severity == 5
    assert r.priority == 165
    assert r.timestamp == "2024-01-01T00:00:00Z"
    assert r.host == "node1"
    assert r.app == "nfd"
    assert r.procid == "7"
    assert r.msgid == ""
    assert r.sd == ""
    assert r.msg == "data /testbed/P5/seg/0 1250"


def test_parse_priority_zero():
    r = logrepo.parse_syslog(b"<0>1 - - - - - - boom")
    assert r.facility == 0 and r.severity == 0
    assert r.timestamp == ""


@pytest.mark.parametrize(
    "line,kind",
    [
        (b"no-pri line here - - - -", "missing_pri"),
        (b"<abc>1 - - - - - - x", "invalid_pri"),
        (b"<192>1 - - - - - - x", "pri_out_of_range"),
        (b"<1x>1 - - - - - - x", "invalid_pri"),
        (b"<165>1 2024-13-45T99:00:00Z h a - - - x", "bad_timestamp"),
        (b"<165>1 notatime h a - - - x", "bad_timestamp"),
        (b"<165>1 - h a -", "truncated"),
        (b"<165>x - h a - - - x", "truncated"),
        (b"<165", "missing_pri"),
        (b"", "missing_pri"),
        (b"<165>1 - h a - - [unterminated msg", "truncated"),
    ],
)
def test_parse_errors_are_typed(line, kind):
    with pytest.raises(logrepo.SyslogParseError) as err:
        logrepo.parse_syslog(line)
    assert err.value.kind == kind


def test_structured_data_token_preserved():
    line = b'<34>1 2024-01-01T00:00:00Z h app - - [x@1 k="va] lue"][y@2 a="b"] hello'
    r = logrepo.parse_syslog(line)
    assert r.sd == '[x@1 k="va] lue"][y@2 a="b"]'
    assert r.msg == "hello"
    assert logrepo.format_syslog(r).encode("latin-1") == line


def test_format_parse_round_trip_canonical():
    r = logrepo.parse_syslog(CANONICAL)
    assert logrepo.format_syslog(r).encode("latin-1") == CANONICAL


def test_round_trip_empty_message():
    line = b"<13>1 2024-01-01T00:00:00Z h app - - -"
    r = logrepo.parse_syslog(line)
    assert r.msg == ""
    assert logrepo.format_syslog(r).encode("latin-1") == line


def _random_record(rng):
    hosts = ["C0", "R1", "node-7", "host.example"]
    apps = ["nfd", "consumer", "producer", "probe"]
    msgs = [
        "data /testbed/P5/seg/42 1250",
        "rtt /testbed/P5/seg/42 24.000",
        "probe R3-R4 10.000",
        "interest /testbed/P5/seg/42 12345",
        "plain text with spaces",
    ]
    frac = rng.choice(["", f".{rng.randrange(10**6):06d}"])
    ts = f"2024-{rng.randint(1,12):02d}-{rng.randint(1,28):02d}T{rng.randint(0,23):02d}:{rng.randint(0,59):02d}:{rng.randint(0,59):02d}{frac}Z"
    return logrepo.SyslogRecord(
        facility=rng.randint(0, 23),
        severity=rng.randint(0, 7),
        timestamp=ts,
        host=rng.choice(hosts),
        app=rng.choice(apps),
        procid=rng.choice(["", str(rng.randint(1, 9999))]),
        msgid=rng.choice(["", "ID47"]),
        sd=rng.choice(["", '[m@0 k="v"]']),
        msg=rng.choice(msgs),
    )


def test_thousand_generated_records_round_trip():
    import random

    rng = random.Random(2024)
    for _ in range(1000):
        record = _random_record(rng)
        line = logrepo.format_syslog(record).encode("latin-1")
        back = logrepo.parse_syslog(line)
        assert logrepo.format_syslog(back).encode("latin-1") == line
        assert (back.facility, back.severity) == (record.facility, record.severity)
        assert back.msg == record.msg


def test_ingest_stamps_and_indexes():
    clock = iter(float(i) for i in range(100))
    store = logrepo.LogStore(clock=lambda: next(clock))
    a = logrepo.parse_syslog(b"<14>1 - nodeA app - - - one")
    b = logrepo.parse_syslog(b"<14>1 - nodeB app - - - two")
    store.ingest(a, source_addr="10.0.0.1:514")
    store.ingest(b, source_addr="10.0.0.2:514")
    assert a.received_at == 0.0 and b.received_at == 1.0
    assert [r.msg for r in store.query(source="10.0.0.1:514")] == ["one"]
    assert [r.msg for r in store.query(source="10.0.0.2:514")] == ["two"]


def test_ingest_many_and_duplicates_kept():
    store = logrepo.LogStore(clock=lambda: 0.0)
    for _ in range(1000):
        store.ingest_datagram(CANONICAL, source_addr="s")
    assert len(store) == 1000
    assert store.total_received == 1000


def test_query_severity_threshold():
    store = logrepo.LogStore(clock=time.time)
    for sev in (0, 3, 4, 7):
        store.ingest(logrepo.parse_syslog(f"<{sev}>1 - h a - - - sev{sev}".encode()))
    got = [r.msg for r in store.query(severity=logrepo.SeverityFilter(3))]
    assert got == ["sev0", "sev3"]
    # monotone: raising the threshold only adds
    wider = [r.msg for r in store.query(severity=5)]
    assert set(got) <= set(wider)


def test_query_range_half_open():
    times = iter([8.0, 9.0, 10.0])
    store = logrepo.LogStore(clock=lambda: next(times))
    for i in range(3):
        store.ingest(logrepo.parse_syslog(f"<14>1 - h a - - - m{i}".encode()))
    got = [r.msg for r in store.query(time_range=(8.0, 10.0))]
    assert got == ["m0", "m1"]  # the record at exactly 10 s is out


def test_query_no_predicates_returns_all_in_order():
    store = logrepo.LogStore(clock=time.time)
    for i in range(5):
        store.ingest(logrepo.parse_syslog(f"<14>1 - h a - - - m{i}".encode()))
    assert [r.msg for r in store.query()] == [f"m{i}" for i in range(5)]


def test_query_inverted_range_rejected():
    store = logrepo.LogStore()
    with pytest.raises(logrepo.QueryError):
        store.query(time_range=(10.0, 8.0))


def test_query_results_are_subsequence_of_arrival():
    import random

    rng = random.Random(5)
    store = logrepo.LogStore(clock=time.time)
    for i in range(200):
        sev = rng.randint(0, 7)
        store.ingest(logrepo.parse_syslog(f"<{sev}>1 - h{i%3} a{i%2} - - - m{i}".encode()))
    arrival = [id(r) for r in store.records]
    got = [id(r) for r in store.query(severity=4, app="a1")]
    it = iter(arrival)
    assert all(any(g == a for a in it) for g in got)


def test_quarantine_accounting():
    store = logrepo.LogStore(clock=time.time)
    ok = store.ingest_datagram(CANONICAL, source_addr="s")
    bad = store.ingest_datagram(b"totally not syslog", source_addr="s")
    assert ok is not None and bad is None
    assert len(store.records) == 1
    assert len(store.quarantine) == 1
    assert store.quarantine[0].reason == "missing_pri"
    assert store.total_received == 2


@given(st.binary(max_size=200))
@settings(max_examples=300, deadline=None)
def test_parse_never_crashes_on_arbitrary_bytes(data):
    store = logrepo.LogStore(clock=lambda: 0.0)
    store.ingest_datagram(data, source_addr="fuzz")
    assert store.total_received == 1


def test_severity_filter_validation():
    with pytest.raises(ValueError):
        logrepo.SeverityFilter(8)
    with pytest.raises(ValueError):
        logrepo.SeverityFilter(-1)


def test_udp_listener_ingests_datagrams():
    store = logrepo.LogStore(clock=time.time)
    server = logrepo.SyslogServer(store, host="127.0.0.1", port=0).start()
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.sendto(CANONICAL, ("127.0.0.1", server.port))
        sock.sendto(b"garbage line", ("127.0.0.1", server.port))
        sock.close()
        deadline = time.time() + 5.0
        while store.total_received < 2 and time.time() < deadline:
            time.sleep(0.02)
    finally:
        server.stop()
    assert len(store.records) == 1
    assert len(store.quarantine) == 1
    assert store.records[0].source_addr.startswith("127.0.0.1:")

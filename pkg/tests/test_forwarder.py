import pytest
from hypothesis import given, settings, strategies as st

from ndnlab import forwarder as fw
from ndnlab.topo import NodeId


def make_state(strategy=fw.BEST_ROUTE, cs_capacity=1000, pit_lifetime_ms=4000.0, n_faces=4):
    state = fw.ForwarderState(
        NodeId(0, "R"), strategy=strategy, cs_capacity=cs_capacity, pit_lifetime_ms=pit_lifetime_ms
    )
    faces = [state.add_face(fw.FaceId(id=i, remote=NodeId(i + 1, f"N{i+1}"))) for i in range(n_faces)]
    return state, faces


def name(text):
    return fw.Name.from_text(text)


def test_name_text_round_trip():
    n = name("/testbed/P5/seg/0")
    assert n.parts == ("testbed", "P5", "seg", "0")
    assert n.to_text() == "/testbed/P5/seg/0"
    with pytest.raises(ValueError):
        fw.Name(())
    with pytest.raises(ValueError):
        fw.Name(("a/b",))
    with pytest.raises(ValueError):
        name("testbed/P5")


def test_fib_lpm_single_candidate():
    state, faces = make_state()
    state.install_route(name("/testbed"), [(faces[0], 1.0)])
    hit = fw.fib_lpm(state, name("/testbed/P5/seg/0"))
    assert hit is not None and hit.prefix.to_text() == "/testbed"


def test_fib_lpm_prefers_longest():
    state, faces = make_state()
    state.install_route(name("/testbed"), [(faces[0], 1.0)])
    state.install_route(name("/testbed/P5"), [(faces[1], 1.0)])
    hit = fw.fib_lpm(state, name("/testbed/P5/seg/0"))
    assert hit.prefix.to_text() == "/testbed/P5"
    # exact-length query still matches
    assert fw.fib_lpm(state, name("/testbed/P5")).prefix.to_text() == "/testbed/P5"


def test_fib_lpm_no_match():
    state, faces = make_state()
    state.install_route(name("/testbed/P5"), [(faces[0], 1.0)])
    assert fw.fib_lpm(state, name("/other/x")) is None
    assert fw.fib_lpm({}, name("/anything")) is None


def test_strategy_best_route_picks_min_cost():
    state, faces = make_state()
    entry = fw.FibEntry(name("/p"), [(faces[0], 5.0), (faces[1], 20.0)])
    out = fw.strategy_select(fw.BEST_ROUTE, entry, faces[3])
    assert out == [faces[0]]


def test_strategy_multicast_excludes_incoming():
    state, faces = make_state()
    entry = fw.FibEntry(name("/p"), [(faces[0], 5.0), (faces[1], 20.0)])
    assert fw.strategy_select(fw.MULTICAST, entry, faces[1]) == [faces[0]]
    assert fw.strategy_select(fw.MULTICAST, entry, faces[3]) == [faces[0], faces[1]]


def test_strategy_best_route_only_option_excluded():
    state, faces = make_state()
    entry = fw.FibEntry(name("/p"), [(faces[0], 5.0)])
    assert fw.strategy_select(fw.BEST_ROUTE, entry, faces[0]) == []


def test_strategy_best_route_tie_breaks_on_face_id():
    state, faces = make_state()
    entry = fw.FibEntry(name("/p"), [(faces[2], 7.0), (faces[1], 7.0)])
    assert fw.strategy_select(fw.BEST_ROUTE, entry, faces[3]) == [faces[1]]


def test_interest_aggregation_single_upstream():
    state, faces = make_state()
    state.install_route(name("/testbed/P5"), [(faces[0], 1.0)])
    n = name("/testbed/P5/seg/9")
    first_i, first_d = fw.on_interest(state, fw.Interest(n, nonce=1), faces[1], 0.0)
    second_i, second_d = fw.on_interest(state, fw.Interest(n, nonce=2), faces[2], 1.0)
    assert len(first_i) == 1 and first_i[0][0] is faces[0]
    assert second_i == () and second_d == ()
    entry = state.pit[n.parts]
    assert entry.in_faces == {faces[1], faces[2]}
    assert entry.nonces == {1, 2}
    assert len(state.pit) == 1


def test_duplicate_nonce_dropped():
    state, faces = make_state()
    state.install_route(name("/testbed/P5"), [(faces[0], 1.0)])
    n = name("/testbed/P5/seg/9")
    fw.on_interest(state, fw.Interest(n, nonce=7), faces[1], 0.0)
    emissions, _ = fw.on_interest(state, fw.Interest(n, nonce=7), faces[2], 1.0)
    assert emissions == ()
    assert state.duplicate_nonce == 1
    assert state.pit[n.parts].in_faces == {faces[1]}  # not aggregated


def test_cs_hit_answers_without_forwarding():
    state, faces = make_state()
    state.install_route(name("/testbed/P5"), [(faces[0], 1.0)])
    n = name("/testbed/P5/seg/0")
    data = fw.DataPacket(n, 1250)
    fw.cs_insert(state, data, 0.0)
    interests, replies = fw.on_interest(state, fw.Interest(n, nonce=3), faces[1], 5.0)
    assert interests == ()
    assert replies == [(faces[1], data)]
    assert state.cs_hits == 1
    assert n.parts not in state.pit


def test_hop_limit_exhaustion():
    state, faces = make_state()
    state.install_route(name("/testbed/P5"), [(faces[0], 1.0)])
    emissions, _ = fw.on_interest(
        state, fw.Interest(name("/testbed/P5/seg/0"), nonce=1, hop_limit=1), faces[1], 0.0
    )
    assert emissions == []
    assert state.hop_exhausted == 1


def test_hop_limit_decrements_on_forward():
    state, faces = make_state()
    state.install_route(name("/testbed/P5"), [(faces[0], 1.0)])
    emissions, _ = fw.on_interest(
        state, fw.Interest(name("/testbed/P5/seg/0"), nonce=1, hop_limit=5), faces[1], 0.0
    )
    assert emissions[0][1].hop_limit == 4


def test_unroutable_interest_counted():
    state, faces = make_state()
    emissions, replies = fw.on_interest(
        state, fw.Interest(name("/nowhere"), nonce=1), faces[0], 0.0
    )
    assert emissions == () and replies == ()
    assert state.unroutable == 1


def test_data_fans_out_to_all_in_faces():
    state, faces = make_state()
    state.install_route(name("/testbed/P5"), [(faces[0], 1.0)])
    n = name("/testbed/P5/seg/1")
    fw.on_interest(state, fw.Interest(n, nonce=1), faces[1], 0.0)
    fw.on_interest(state, fw.Interest(n, nonce=2), faces[2], 0.0)
    data = fw.DataPacket(n, 1250)
    _, emissions = fw.on_data(state, data, faces[0], 10.0)
    assert [f.id for f, _ in emissions] == [1, 2]
    assert n.parts not in state.pit
    assert n.parts in state.cs


def test_unsolicited_data_dropped():
    state, faces = make_state()
    _, emissions = fw.on_data(state, fw.DataPacket(name("/x"), 10), faces[0], 0.0)
    assert emissions == ()
    assert state.unsolicited == 1
    assert ("x",) not in state.cs


def test_cs_lru_eviction_order():
    state, faces = make_state(cs_capacity=2)
    state.install_route(name("/t"), [(faces[0], 1.0)])
    a, b, c = name("/t/A"), name("/t/B"), name("/t/C")
    fw.cs_insert(state, fw.DataPacket(a, 1), 0.0)
    fw.cs_insert(state, fw.DataPacket(b, 1), 1.0)
    # A is least recently used; a PIT-matched C evicts it
    fw.on_interest(state, fw.Interest(c, nonce=1), faces[1], 2.0)
    fw.on_data(state, fw.DataPacket(c, 1), faces[0], 3.0)
    assert set(state.cs) == {b.parts, c.parts}


def test_cs_hit_refreshes_lru_rank():
    state, faces = make_state(cs_capacity=2)
    state.install_route(name("/t"), [(faces[0], 1.0)])
    a, b, c = name("/t/A"), name("/t/B"), name("/t/C")
    fw.cs_insert(state, fw.DataPacket(a, 1), 0.0)
    fw.cs_insert(state, fw.DataPacket(b, 1), 1.0)
    fw.on_interest(state, fw.Interest(a, nonce=9), faces[2], 2.0)  # CS hit touches A
    assert state.cs[a.parts].last_used_ms == 2.0
    fw.on_interest(state, fw.Interest(c, nonce=1), faces[1], 3.0)
    fw.on_data(state, fw.DataPacket(c, 1), faces[0], 4.0)
    assert set(state.cs) == {a.parts, c.parts}  # B evicted, A survived


def test_cs_capacity_zero_never_stores():
    state, faces = make_state(cs_capacity=0)
    fw.cs_insert(state, fw.DataPacket(name("/t/A"), 1), 0.0)
    assert len(state.cs) == 0


@pytest.mark.parametrize("expiry,now,kept", [(4000.0, 4000.0, False), (4000.0, 3999.0, True)])
def test_pit_sweep_boundary(expiry, now, kept):
    state, faces = make_state(pit_lifetime_ms=4000.0)
    state.install_route(name("/t"), [(faces[0], 1.0)])
    fw.on_interest(state, fw.Interest(name("/t/x"), nonce=1), faces[1], 0.0)
    assert state.pit[("t", "x")].expiry_ms == expiry
    fw.pit_sweep(state, now)
    assert (("t", "x") in state.pit) == kept
    assert state.pit_timeouts == (0 if kept else 1)


def test_pit_sweep_removes_only_expired():
    state, faces = make_state(pit_lifetime_ms=100.0)
    state.install_route(name("/t"), [(faces[0], 1.0)])
    fw.on_interest(state, fw.Interest(name("/t/a"), nonce=1), faces[1], 0.0)
    fw.on_interest(state, fw.Interest(name("/t/b"), nonce=2), faces[1], 10.0)
    fw.on_interest(state, fw.Interest(name("/t/c"), nonce=3), faces[1], 500.0)
    removed = fw.pit_sweep(state, 400.0)
    assert {e.name.to_text() for e in removed} == {"/t/a", "/t/b"}
    assert set(state.pit) == {("t", "c")}


def _drive_random_events(state, faces, rng, steps=300):
    """Feed a random interleaving of interests and data, checking invariants."""
    names = [name(f"/t/{i}") for i in range(10)]
    prev_counters = {fid: (0, 0, 0, 0) for fid in state.face_counters}
    now = 0.0
    for _ in range(steps):
        now += rng.random() * 50
        if rng.random() < 0.6:
            n = rng.choice(names)
            fw.on_interest(
                state, fw.Interest(n, nonce=rng.randrange(2**32)), rng.choice(faces), now
            )
        else:
            n = rng.choice(names)
            fw.on_data(state, fw.DataPacket(n, 100), rng.choice(faces), now)
        if rng.random() < 0.1:
            fw.pit_sweep(state, now)
        # one PIT entry per exact name, structurally and semantically
        assert len({e.name.parts for e in state.pit.values()}) == len(state.pit)
        assert len(state.cs) <= max(state.cs_capacity, 0)
        for fid, c in state.face_counters.items():
            cur = (c.interest_in, c.interest_out, c.data_in, c.data_out)
            assert all(a >= b for a, b in zip(cur, prev_counters[fid]))
            prev_counters[fid] = cur


@pytest.mark.parametrize("strategy", [fw.BEST_ROUTE, fw.MULTICAST])
def test_random_event_invariants(strategy):
    import random

    rng = random.Random(99)
    state, faces = make_state(strategy=strategy, cs_capacity=5)
    state.install_route(name("/t"), [(faces[0], 1.0), (faces[1], 3.0)])
    _drive_random_events(state, faces, rng)
    # per-face conservation: any face's data_out is bounded by everything
    # that could have produced data at this node
    produced = state.cs_hits
    data_in = sum(c.data_in for c in state.face_counters.values())
    for c in state.face_counters.values():
        assert c.data_out <= data_in + produced


@given(
    nonces=st.lists(st.integers(min_value=0, max_value=2**32 - 1), min_size=2, max_size=12),
)
@settings(max_examples=40, deadline=None)
def test_aggregation_property_k_interests_one_emission(nonces):
    distinct = list(dict.fromkeys(nonces))
    state, faces = make_state(n_faces=4)
    state.install_route(name("/t"), [(faces[0], 1.0)])
    n = name("/t/x")
    upstream = 0
    for i, nonce in enumerate(distinct):
        in_face = faces[1 + i % 3]
        emissions, _ = fw.on_interest(state, fw.Interest(n, nonce=nonce), in_face, float(i))
        upstream += len(emissions)
    assert upstream == 1
    _, deliveries = fw.on_data(state, fw.DataPacket(n, 64), faces[0], 99.0)
    expected_faces = {faces[1 + i % 3] for i in range(len(distinct))}
    assert {f for f, _ in deliveries} == expected_faces


def test_multicast_never_emits_on_in_face_property():
    state, faces = make_state(strategy=fw.MULTICAST)
    state.install_route(name("/t"), [(f, 1.0) for f in faces[:3]])
    for nonce, in_face in enumerate(faces):
        emissions, _ = fw.on_interest(
            state, fw.Interest(name(f"/t/{nonce}"), nonce=nonce), in_face, float(nonce)
        )
        assert all(f is not in_face for f, _ in emissions)


def test_counters_track_interest_flow():
    state, faces = make_state()
    state.install_route(name("/t"), [(faces[0], 1.0)])
    fw.on_interest(state, fw.Interest(name("/t/1"), nonce=1), faces[1], 0.0)
    assert state.face_counters[1].interest_in == 1
    assert state.face_counters[0].interest_out == 1
    fw.on_data(state, fw.DataPacket(name("/t/1"), 10), faces[0], 1.0)
    assert state.face_counters[0].data_in == 1
    assert state.face_counters[1].data_out == 1


def test_install_route_validation():
    state, faces = make_state()
    with pytest.raises(ValueError):
        state.install_route(name("/t"), [])
    with pytest.raises(ValueError):
        state.install_route(name("/t"), [(faces[0], 1.0), (faces[0], 2.0)])
    with pytest.raises(ValueError):
        fw.ForwarderState(NodeId(0, "x"), strategy="flood")

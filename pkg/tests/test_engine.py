"""Superstep engine: phase bookkeeping, contention accounting, payload
replication, buffer limits and trace export."""

import csv
import io
import json

import pytest

from bspsim.engine import (
    CONTENDED,
    SCHEDULED,
    Message,
    Superstep,
    run_program,
    run_superstep,
)
from bspsim.cost_model import p2p_latency
from bspsim.errors import EngineError
from bspsim.topology import TileId

T = TileId


def test_single_message_matches_p2p_law(topo, params):
    step = Superstep(messages=[Message(T(0, 0), T(3, 0), 4)])
    trace = run_superstep(topo, params, step)
    (rec,) = trace.transfers
    assert rec.latency_ns == p2p_latency(topo.tile_route(T(0, 0), T(3, 0)),
                                         params)
    assert rec.latency_ns == 779.0
    # bottleneck: the rung-in-transit link's per-transfer ceiling
    assert rec.rate_bps == 4_910_000_000
    assert rec.end_ns == pytest.approx(779.0 + 4e9 / 4.91e9, rel=1e-12)
    assert trace.exchange_end_ns == rec.end_ns
    assert trace.aggregate_exchange_bps == rec.rate_bps


def test_phase_ordering_and_barrier(topo, params):
    step = Superstep(
        compute_ns={T(0, 0): 50.0, T(0, 1): 200.0},
        messages=[Message(T(0, 0), T(0, 1), 64),
                  Message(T(0, 1), T(0, 2), 64)])
    trace = run_superstep(topo, params, step, start_ns=1000.0,
                          barrier_ns=40.0)
    assert trace.start_ns == 1000.0
    assert trace.compute_end_ns == 1200.0     # max compute wins
    assert all(t.start_ns == 1200.0 for t in trace.transfers)
    assert trace.exchange_end_ns == max(t.end_ns for t in trace.transfers)
    assert trace.barrier_end_ns == trace.exchange_end_ns + 40.0
    assert trace.span_ns == trace.barrier_end_ns - 1000.0


def test_contended_latency_stretches_scheduled_does_not(topo, params):
    # enough rung transfers to saturate it: 11 competitors * 5.46 > 55.0
    msgs = [Message(T(0, t), T(1, t), 1000) for t in range(12)]
    hot = run_superstep(topo, params, Superstep(messages=msgs),
                        load_mode=CONTENDED)
    cool = run_superstep(topo, params, Superstep(messages=msgs),
                         load_mode=SCHEDULED)
    assert all(t.latency_ns == pytest.approx(633.0 * 4.0) for t in hot.transfers)
    assert all(t.latency_ns == 633.0 for t in cool.transfers)
    # bandwidth sharing is identical in both modes
    assert [t.rate_bps for t in hot.transfers] == \
        [t.rate_bps for t in cool.transfers]
    assert hot.transfers[0].rate_bps == 55_000_000_000 // 12


def test_replicated_payload_rides_the_fast_path(topo, params):
    dsts = [T(0, d) for d in range(1, 65)]
    fanned = Superstep(messages=[
        Message(T(0, 0), d, 1024, payload="block") for d in dsts])
    distinct = Superstep(messages=[
        Message(T(0, 0), d, 1024) for d in dsts])
    fan_trace = run_superstep(topo, params, fanned)
    dis_trace = run_superstep(topo, params, distinct)
    # one replicated payload: hardware multicast, per-destination ceiling
    assert all(t.rate_bps == 12_680_000_000 for t in fan_trace.transfers)
    # 64 distinct payloads share the source tile's egress port
    assert all(t.rate_bps == 6_340_000_000 // 64 for t in dis_trace.transfers)
    # the shared trunk counts the fanned payload once
    out_key = ("out", 0, 0)
    assert fan_trace.per_edge_transfers[out_key] == 1
    assert fan_trace.per_edge_bytes[out_key] == 1024
    assert dis_trace.per_edge_transfers[out_key] == 64
    assert dis_trace.per_edge_bytes[out_key] == 64 * 1024


def test_message_order_does_not_matter(topo, params):
    msgs = [Message(T(p, t), T((p + 3) % 16, (t * 7) % 1216), 128 + t)
            for p in (0, 5, 11) for t in range(20)]
    fwd = run_superstep(topo, params, Superstep(messages=msgs))
    rev = run_superstep(topo, params, Superstep(messages=list(reversed(msgs))))
    assert fwd.transfers == rev.transfers
    assert fwd.span_ns == rev.span_ns
    assert fwd.aggregate_exchange_bps == rev.aggregate_exchange_bps


def test_buffer_limits(topo, params):
    usable = topo.spec.usable_memory_per_tile
    assert usable == 253_952
    # a single oversized payload
    with pytest.raises(EngineError):
        run_superstep(topo, params, Superstep(
            messages=[Message(T(0, 0), T(0, 1), usable + 1)]))
    # two receivers converging on one tile
    half = usable // 2
    with pytest.raises(EngineError):
        run_superstep(topo, params, Superstep(messages=[
            Message(T(0, 1), T(0, 0), half),
            Message(T(0, 2), T(0, 0), half + 1)]))
    # exactly at the limit is fine
    trace = run_superstep(topo, params, Superstep(messages=[
        Message(T(0, 1), T(0, 0), half),
        Message(T(0, 2), T(0, 0), half)]))
    assert len(trace.transfers) == 2


def test_validation_errors(topo, params):
    with pytest.raises(EngineError):
        run_superstep(topo, params, Superstep(), load_mode="eager")
    with pytest.raises(EngineError):
        run_superstep(topo, params,
                      Superstep(compute_ns={T(0, 0): -1.0}))
    with pytest.raises(EngineError):
        run_superstep(topo, params, Superstep(
            messages=[Message(T(0, 0), T(0, 1), 2.5)]))


def test_zero_size_message_counts_no_bandwidth(topo, params):
    trace = run_superstep(topo, params, Superstep(messages=[
        Message(T(0, 0), T(0, 1), 0),
        Message(T(0, 2), T(0, 3), 100)]))
    assert len(trace.transfers) == 2
    zero = next(t for t in trace.transfers if t.size_bytes == 0)
    assert zero.end_ns == pytest.approx(zero.start_ns + zero.latency_ns)
    assert trace.aggregate_exchange_bps == 6_340_000_000


def test_program_chains_barriers(topo, params):
    steps = [
        Superstep(compute_ns={T(0, 0): 100.0},
                  messages=[Message(T(0, 0), T(0, 1), 64)], label="first"),
        Superstep(messages=[Message(T(0, 1), T(0, 0), 64)], label="second"),
    ]
    program = run_program(topo, params, steps)
    first, second = program.steps
    assert second.start_ns == first.barrier_end_ns
    assert program.total_ns == second.barrier_end_ns


def test_trace_exports(topo, params):
    steps = [
        Superstep(messages=[Message(T(0, 0), T(0, 1), 64),
                            Message(T(1, 5), T(2, 9), 128)], label="mix"),
        Superstep(messages=[Message(T(0, 1), T(0, 0), 32)], label="reply"),
    ]
    program = run_program(topo, params, steps)

    rows = list(csv.reader(io.StringIO(program.to_csv())))
    assert rows[0][:4] == ["step", "label", "src_processor", "src_tile"]
    assert len(rows) == 1 + 3
    assert rows[1][1] == "mix"
    assert rows[3][1] == "reply"

    doc = json.loads(program.to_json())
    assert doc["total_ns"] == pytest.approx(program.total_ns)
    assert [s["transfers"] for s in doc["steps"]] == [2, 1]
    assert doc["steps"][0]["bytes"] == 192

    # both writers accept a file object too
    buf = io.StringIO()
    assert program.to_csv(buf) is None
    assert buf.getvalue() == program.to_csv()

"""Randomized invariants of the model, each hammered over >= 1000 cases:
phase ordering inside a superstep, byte conservation through the
exchange, independence from message submission order, bidirectional
traffic doubling unidirectional throughput, latency/bandwidth
monotonicity, and the table-backed predictor being a fixed point on its
own measurements."""

from hypothesis import HealthCheck, given, settings, strategies as st

from bspsim.cost_model import (memory_read_bandwidth, p2p_latency,
                               saturation)
from bspsim.engine import CONTENDED, SCHEDULED, Message, Superstep, \
    run_superstep
from bspsim.topology import TileId

CASES = settings(max_examples=1000, deadline=None, derandomize=True,
                 suppress_health_check=[HealthCheck.function_scoped_fixture])

processors = st.integers(0, 15)
tiles = st.integers(0, 1215)
tile_ids = st.builds(TileId, processors, tiles)
sizes = st.integers(0, 65536)


def distinct_pair(draw):
    a = draw(tile_ids)
    b = draw(tile_ids)
    if a == b:
        b = TileId(b.processor, (b.tile + 1) % 1216)
    return a, b


@st.composite
def message_lists(draw, max_messages=6):
    out = []
    for _ in range(draw(st.integers(0, max_messages))):
        src, dst = distinct_pair(draw)
        out.append(Message(src, dst, draw(sizes)))
    return out


@st.composite
def supersteps(draw):
    msgs = draw(message_lists())
    compute = {}
    for _ in range(draw(st.integers(0, 3))):
        compute[draw(tile_ids)] = float(draw(st.integers(0, 10_000)))
    return Superstep(compute_ns=compute, messages=msgs)


@CASES
@given(step=supersteps(), start=st.integers(0, 10**6),
       mode=st.sampled_from([CONTENDED, SCHEDULED]))
def test_phase_ordering(topo, params, step, start, mode):
    trace = run_superstep(topo, params, step, load_mode=mode,
                          start_ns=float(start))
    longest = max(step.compute_ns.values(), default=0.0)
    assert trace.compute_end_ns == start + longest
    # no transfer departs before every tile has finished computing
    for rec in trace.transfers:
        assert rec.start_ns == trace.compute_end_ns
        assert rec.end_ns >= rec.start_ns
    assert trace.exchange_end_ns >= trace.compute_end_ns
    assert trace.exchange_end_ns == max(
        [r.end_ns for r in trace.transfers], default=trace.compute_end_ns)
    assert trace.barrier_end_ns == trace.exchange_end_ns + params.barrier_ns
    assert trace.span_ns >= longest + params.barrier_ns


@CASES
@given(msgs=message_lists())
def test_byte_conservation(topo, params, msgs):
    trace = run_superstep(topo, params, Superstep(messages=msgs))
    assert len(trace.transfers) == len(msgs)
    sent = sorted((m.src, m.dst, m.size_bytes) for m in msgs)
    moved = sorted((r.src, r.dst, r.size_bytes) for r in trace.transfers)
    assert moved == sent
    # every byte of a message crosses its egress port exactly once
    egress = {}
    for m in msgs:
        if m.src.processor != m.dst.processor or m.src != m.dst:
            key = ("out", m.src.processor, m.src.tile)
            egress[key] = egress.get(key, 0) + m.size_bytes
    for key, total in egress.items():
        assert trace.per_edge_bytes.get(key, 0) == total


@CASES
@given(msgs=message_lists(), seed=st.randoms(use_true_random=False))
def test_message_order_independence(topo, params, msgs, seed):
    shuffled = list(msgs)
    seed.shuffle(shuffled)
    a = run_superstep(topo, params, Superstep(messages=msgs))
    b = run_superstep(topo, params, Superstep(messages=shuffled))
    key = lambda r: (r.src, r.dst, r.size_bytes, r.end_ns, r.rate_bps)
    assert sorted(map(key, a.transfers)) == sorted(map(key, b.transfers))
    assert a.barrier_end_ns == b.barrier_end_ns
    assert a.aggregate_exchange_bps == b.aggregate_exchange_bps


@CASES
@given(src=processors, dst=processors, fanout=st.integers(1, 8),
       size=st.integers(1, 4096))
def test_bidirectional_doubles_unidirectional(topo, params, src, dst,
                                              fanout, size):
    if src == dst:
        dst = (dst + 1) % 16
    forward = [Message(TileId(src, i), TileId(dst, i), size)
               for i in range(fanout)]
    backward = [Message(TileId(dst, i), TileId(src, i), size)
                for i in range(fanout)]
    mono = run_superstep(topo, params, Superstep(messages=forward))
    both = run_superstep(topo, params,
                         Superstep(messages=forward + backward))
    # the two directions ride disjoint directed links, so throughput
    # doubles; only the shared exchange fabric may nudge latency up
    assert both.aggregate_exchange_bps == 2 * mono.aggregate_exchange_bps
    assert both.barrier_end_ns >= mono.barrier_end_ns


@CASES
@given(a=processors, b=processors, c=processors,
       s1=st.integers(1, 1 << 22), s2=st.integers(1, 1 << 22),
       width=st.sampled_from([32, 64, 128]))
def test_monotonicity(topo, params, a, b, c, s1, s2, width):
    # idle point-to-point latency never drops as the hop count grows
    pairs = sorted([(a, b), (a, c)],
                   key=lambda p: topo.hop_distance(*p))
    lat = [p2p_latency(topo.route(x, y), params) if x != y else 0.0
           for x, y in pairs]
    same_kind = (a % 2 == b % 2) == (a % 2 == c % 2)
    if same_kind:
        assert lat[0] <= lat[1]

    # saturation (and with it block-transfer bandwidth) grows with size
    lo, hi = sorted((s1, s2))
    assert saturation(lo, params.block_half_sat_bytes) \
        <= saturation(hi, params.block_half_sat_bytes)
    assert memory_read_bandwidth(params, width_bits=width, block_bytes=lo) \
        <= memory_read_bandwidth(params, width_bits=width, block_bytes=hi)
    assert 0 <= saturation(lo, params.link_half_sat_bytes) < 1


@CASES
@given(data=st.data())
def test_empirical_interpolation_fixed_point(golden, data):
    # at any measured knot the interpolators return the stored row exactly
    template = data.draw(st.sampled_from(
        ["host-bw-tiles-{n}", "host-latency-tiles-{n}",
         "p2p-latency-chip-{n}", "broadcast-latency-chip-{n}"]))
    prefix, suffix = template.split("{n}")
    knots = [r for r in golden.rows
             if r.experiment_id.startswith(prefix)
             and r.experiment_id[len(prefix):].isdigit()]
    row = data.draw(st.sampled_from(knots))
    n = int(row.experiment_id[len(prefix):])
    metric = data.draw(st.sampled_from(sorted(row.metrics())))
    value, extrapolated = golden.interpolate_participants(template, n, metric)
    assert value == row.metrics()[metric]
    assert not extrapolated

"""Superstep engine: compute, exchange, barrier.

A superstep is the unit of execution: every tile computes, then all
messages are exchanged, then a barrier closes the step.  Nothing overlaps
across phases, so the step's span is the slowest compute plus the slowest
transfer plus the barrier charge.

Transfer times come from a fluid model.  Each message occupies every
resource on its path (source port, exchange fabric, ladder links,
destination port); a resource divides its capacity evenly among the
*distinct payloads* crossing it, and a message's rate is the tightest
allowance along its path.  Counting distinct payloads rather than messages
is what models hardware multicast: a payload fanned out from one source is
replicated by the fabric, not resent per destination.

Two latency modes exist:

* ``contended``  - every transfer's latency stretches with the measured
  loaded-latency multiplier of its path class, driven by how crowded the
  busiest resource on its path is.  This matches measurements of saturating
  point-to-point traffic.
* ``scheduled``  - transfers see idle latencies.  This matches collective
  patterns, whose exchange sequences are compiled to avoid head-of-line
  blocking; contention then shows up only as shared bandwidth.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from .cost_model import CostParams, LoadContext
from .errors import EngineError
from .topology import (
    EGRESS_PORT,
    INGRESS_PORT,
    INTER_PROCESSOR_KINDS,
    LOCAL_MEMORY,
    ON_CHIP_EXCHANGE,
    Hop,
    TileId,
    Topology,
)

CONTENDED = "contended"
SCHEDULED = "scheduled"
LOAD_MODES = (CONTENDED, SCHEDULED)


@dataclass(frozen=True)
class Message:
    """One directed transfer.  `payload` tags identical content: messages
    from the same source carrying the same tag are one payload fanned out
    to several destinations.  Untagged messages are all distinct."""

    src: TileId
    dst: TileId
    size_bytes: int
    payload: object = None

    def payload_key(self):
        if self.payload is None:
            return ("msg", self.src, self.dst, id(self))
        return ("tag", self.src, self.payload)


@dataclass
class Superstep:
    """Per-tile compute durations (ns) plus the exchange message list."""

    compute_ns: dict = field(default_factory=dict)   # TileId -> ns
    messages: list = field(default_factory=list)
    label: str = ""


@dataclass(frozen=True)
class TransferRecord:
    src: TileId
    dst: TileId
    size_bytes: int
    latency_ns: float
    rate_bps: int
    start_ns: float
    end_ns: float


@dataclass
class StepTrace:
    label: str
    start_ns: float
    compute_end_ns: float
    exchange_end_ns: float
    barrier_end_ns: float
    transfers: list                      # [TransferRecord], canonical order
    per_edge_transfers: dict             # resource key -> distinct payloads
    per_edge_bytes: dict                 # resource key -> distinct payload bytes
    aggregate_exchange_bps: int          # sum of assigned message rates

    @property
    def span_ns(self):
        return self.barrier_end_ns - self.start_ns


@dataclass
class ProgramTrace:
    steps: list

    @property
    def total_ns(self):
        return self.steps[-1].barrier_end_ns if self.steps else 0.0

    # -- export ------------------------------------------------------------

    def to_csv(self, fh=None):
        """Per-transfer trace as CSV; returns the text if `fh` is None."""
        buf = fh if fh is not None else io.StringIO()
        w = csv.writer(buf)
        w.writerow(["step", "label", "src_processor", "src_tile",
                    "dst_processor", "dst_tile", "size_bytes",
                    "latency_ns", "rate_bps", "start_ns", "end_ns"])
        for i, step in enumerate(self.steps):
            for t in step.transfers:
                w.writerow([i, step.label,
                            t.src.processor, t.src.tile,
                            t.dst.processor, t.dst.tile, t.size_bytes,
                            f"{t.latency_ns:.3f}", t.rate_bps,
                            f"{t.start_ns:.3f}", f"{t.end_ns:.3f}"])
        if fh is None:
            return buf.getvalue()
        return None

    def to_json(self, fh=None):
        """Per-step summary as JSON; returns the text if `fh` is None."""
        doc = {
            "total_ns": self.total_ns,
            "steps": [
                {
                    "label": s.label,
                    "start_ns": s.start_ns,
                    "compute_end_ns": s.compute_end_ns,
                    "exchange_end_ns": s.exchange_end_ns,
                    "barrier_end_ns": s.barrier_end_ns,
                    "transfers": len(s.transfers),
                    "bytes": sum(t.size_bytes for t in s.transfers),
                    "aggregate_exchange_bps": s.aggregate_exchange_bps,
                }
                for s in self.steps
            ],
        }
        text = json.dumps(doc, indent=2, sort_keys=True)
        if fh is None:
            return text
        fh.write(text)
        return None


def _validate_step(topo: Topology, step: Superstep):
    for tile, ns in step.compute_ns.items():
        topo.check_tile(tile)
        if ns < 0:
            raise EngineError(f"negative compute duration on {tile}")
    for m in step.messages:
        topo.check_tile(m.src)
        topo.check_tile(m.dst)
        if not isinstance(m.size_bytes, int) or m.size_bytes < 0:
            raise EngineError(f"message size must be a non-negative int: {m!r}")


def _check_buffers(topo: Topology, step: Superstep):
    """Every tile must hold its distinct outgoing payloads plus everything
    it receives within usable memory."""
    usable = topo.spec.usable_memory_per_tile
    out_bytes = {}      # tile -> bytes of distinct outgoing payloads
    in_bytes = {}
    tagged_out = {}     # tile -> {tagged payload key: bytes}, deduped
    tagged_in = {}
    for m in step.messages:
        if m.payload is None:
            out_bytes[m.src] = out_bytes.get(m.src, 0) + m.size_bytes
            in_bytes[m.dst] = in_bytes.get(m.dst, 0) + m.size_bytes
        else:
            pk = m.payload_key()
            tagged_out.setdefault(m.src, {})[pk] = m.size_bytes
            tagged_in.setdefault(m.dst, {})[pk] = m.size_bytes
    for tile, payloads in tagged_out.items():
        out_bytes[tile] = out_bytes.get(tile, 0) + sum(payloads.values())
    for tile, payloads in tagged_in.items():
        in_bytes[tile] = in_bytes.get(tile, 0) + sum(payloads.values())
    for tile in out_bytes.keys() | in_bytes.keys():
        need = out_bytes.get(tile, 0) + in_bytes.get(tile, 0)
        if need > usable:
            raise EngineError(
                f"tile {tile} needs {need} B of message buffers, "
                f"only {usable} B usable")


def _edge_allowance(params: CostParams, kind, distinct, replicated):
    """Rate available to one payload on one resource, in bytes/s.

    Ports and the exchange fabric replicate fanned-out payloads in
    hardware, which widens their per-payload ceiling; ladder links do not,
    so their class ceiling always applies.
    """
    if kind == LOCAL_MEMORY:
        link = params.links[LOCAL_MEMORY]
        return min(link.per_transfer_peak_bps,
                   link.aggregate_cap_bps // max(distinct, 1))
    if kind in (EGRESS_PORT, INGRESS_PORT, ON_CHIP_EXCHANGE):
        if kind == ON_CHIP_EXCHANGE:
            cap = params.links[ON_CHIP_EXCHANGE].aggregate_cap_bps
        else:
            cap = params.tile_port_bps
        ceiling = params.replicated_ingress_bps if replicated \
            else params.tile_port_bps
        if replicated and kind != ON_CHIP_EXCHANGE:
            cap = params.replicated_ingress_bps
        return min(ceiling, cap // max(distinct, 1))
    link = params.links[kind]
    return min(link.per_transfer_peak_bps,
               link.aggregate_cap_bps // max(distinct, 1))


def run_superstep(topo: Topology, params: CostParams, step: Superstep,
                  load_mode=CONTENDED, start_ns=0.0, barrier_ns=None):
    """Execute one superstep; returns a StepTrace."""
    if load_mode not in LOAD_MODES:
        raise EngineError(f"unknown load mode {load_mode!r}")
    if barrier_ns is None:
        barrier_ns = params.barrier_ns
    _validate_step(topo, step)
    _check_buffers(topo, step)

    compute_end = start_ns + max(step.compute_ns.values(), default=0.0)

    # Pass 1: who occupies what.  Payload fan-out degree decides whether a
    # message rides the replicating fast path.  Untagged messages are all
    # distinct payloads, so they only need counting; the per-payload
    # dedup sets are kept for tagged (fanned-out) messages alone.
    paths = [topo.tile_route(m.src, m.dst) for m in step.messages]
    per_edge_transfers = {}   # resource key -> distinct payload count
    per_edge_bytes = {}
    edge_kind = {}
    tagged_fanout = {}        # tagged payload key -> number of destinations
    tagged_edges = {}         # resource key -> {tagged payload key: bytes}
    for m, path in zip(step.messages, paths):
        if m.payload is None:
            size = m.size_bytes
            for hop in path:
                k = hop.key
                if k in edge_kind:
                    per_edge_transfers[k] += 1
                    per_edge_bytes[k] += size
                else:
                    edge_kind[k] = hop.kind
                    per_edge_transfers[k] = 1
                    per_edge_bytes[k] = size
        else:
            pk = m.payload_key()
            tagged_fanout[pk] = tagged_fanout.get(pk, 0) + 1
            for hop in path:
                k = hop.key
                if k not in edge_kind:
                    edge_kind[k] = hop.kind
                    per_edge_transfers[k] = 0
                    per_edge_bytes[k] = 0
                tagged_edges.setdefault(k, {})[pk] = m.size_bytes
    for k, payloads in tagged_edges.items():
        per_edge_transfers[k] += len(payloads)
        per_edge_bytes[k] += sum(payloads.values())
    load = LoadContext(counts=per_edge_transfers)

    # Allowance and utilization are fixed per resource for the whole step,
    # so compute each once up front.  The message loop below then works on
    # plain dict lookups and reproduces exactly what
    # p2p_latency(path, params, load) would return for every message.
    contended = load_mode == CONTENDED
    allow_plain = {}
    allow_repl = {}
    util_by_key = {}
    for key, kind in edge_kind.items():
        distinct = per_edge_transfers[key]
        allow_plain[key] = _edge_allowance(params, kind, distinct, False)
        allow_repl[key] = _edge_allowance(params, kind, distinct, True)
        if contended:
            util_by_key[key] = load.utilization(Hop(kind, key), params)
        else:
            util_by_key[key] = 0.0

    links = params.links
    per_hop = params.per_hop_latency_ns
    inter_kinds = frozenset(INTER_PROCESSOR_KINDS)

    # Pass 2: assign each message a rate and a latency.
    records = []
    exchange_end = compute_end
    aggregate = 0
    for m, path in zip(step.messages, paths):
        if m.payload is None or tagged_fanout[m.payload_key()] <= 1:
            allow = allow_plain
        else:
            allow = allow_repl
        rate = None
        first_inter = None
        inter_hops = 0
        has_exchange = False
        busiest = 0.0
        for hop in path:
            key = hop.key
            r = allow[key]
            if rate is None or r < rate:
                rate = r
            kind = hop.kind
            if kind in inter_kinds:
                inter_hops += 1
                if first_inter is None:
                    first_inter = kind
            elif kind == ON_CHIP_EXCHANGE:
                has_exchange = True
            u = util_by_key[key]
            if u > busiest:
                busiest = u
        if rate is None or rate <= 0:
            raise EngineError(f"no bandwidth available for {m!r}")
        cls = first_inter if first_inter is not None else (
            ON_CHIP_EXCHANGE if has_exchange else LOCAL_MEMORY)
        link = links[cls]
        base = link.base_latency_ns
        if inter_hops > 1:
            base = base + per_hop * (inter_hops - 1)
        latency = base * (1.0 + (link.loaded_multiplier - 1.0) * busiest)
        transfer_ns = m.size_bytes * 1e9 / rate
        end = compute_end + latency + transfer_ns
        exchange_end = max(exchange_end, end)
        if m.size_bytes > 0:
            aggregate += rate
        records.append(TransferRecord(
            src=m.src, dst=m.dst, size_bytes=m.size_bytes,
            latency_ns=latency, rate_bps=rate,
            start_ns=compute_end, end_ns=end))

    records.sort(key=lambda t: (t.src, t.dst, t.size_bytes, t.end_ns))
    return StepTrace(
        label=step.label,
        start_ns=start_ns,
        compute_end_ns=compute_end,
        exchange_end_ns=exchange_end,
        barrier_end_ns=exchange_end + barrier_ns,
        transfers=records,
        per_edge_transfers=per_edge_transfers,
        per_edge_bytes=per_edge_bytes,
        aggregate_exchange_bps=aggregate,
    )


def run_program(topo: Topology, params: CostParams, steps,
                load_mode=CONTENDED, barrier_ns=None):
    """Run supersteps back to back; each starts at the previous barrier."""
    traces = []
    clock = 0.0
    for step in steps:
        trace = run_superstep(topo, params, step, load_mode=load_mode,
                              start_ns=clock, barrier_ns=barrier_ns)
        traces.append(trace)
        clock = trace.barrier_end_ns
    return ProgramTrace(steps=traces)

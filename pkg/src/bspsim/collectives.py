"""Collective operations: planning, capacity limits, and cost prediction.

A collective is described by a :class:`CollectiveSpec` and lowered to
ordinary supersteps, so the engine prices the data movement with the same
fluid model as any other traffic.  Three operations need calibrated
corrections on top of the engine span:

* broadcast pays a fixed fan-out setup charge once the payload goes to
  more than one destination;
* gather is limited by the root's ingest loop, costed per arriving
  message with a per-link-class fixed overhead;
* reduce is a compute/relay ladder costed in closed form.

Predictions run in two modes: ``analytic`` (the model) and ``empirical``
(interpolated measurements, see :mod:`bspsim.golden`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import engine as engine_mod
from .cost_model import CostParams
from .engine import Message, Superstep
from .errors import PlanError
from .topology import (
    INTER_BOARD_RAIL,
    INTRA_BOARD_BUNDLE,
    PASS_THROUGH,
    TileId,
    Topology,
)

BROADCAST = "broadcast"
GATHER = "gather"
SCATTER = "scatter"
ALL_TO_ALL = "all_to_all"
REDUCE = "reduce"
ROOTED_OPS = (BROADCAST, GATHER, SCATTER, REDUCE)
ALL_OPS = ROOTED_OPS + (ALL_TO_ALL,)

# Largest safe message per gather/scatter participant, by the number of
# processors involved (next power of two).  Buffer space at the root halves
# with each doubling until the 16-processor case, where the runtime's
# bookkeeping overhead bites harder.
_FAN_LIMIT_BY_CHIPS = {1: 160, 2: 80, 4: 40, 8: 20, 16: 4}

_BROADCAST_RESERVED = 24 * 1024


@dataclass(frozen=True)
class CollectiveSpec:
    """One collective: what moves where.

    `participants` are the non-root endpoints' tiles (destinations for
    broadcast/scatter, sources for gather, everyone for all_to_all).  The
    root may but need not be among them: a broadcast into a different
    processor has a root that never receives data.  `operands_per_tile`
    only applies to reduce.
    """

    op: str
    participants: tuple
    message_bytes: int = 0
    root: TileId = None
    operands_per_tile: int = 1

    def __post_init__(self):
        if self.op not in ALL_OPS:
            raise PlanError(f"unknown collective {self.op!r}")
        if not self.participants:
            raise PlanError("collective needs at least one participant")
        if len(set(self.participants)) != len(self.participants):
            raise PlanError("duplicate participant tile")
        if self.op in ROOTED_OPS and self.root is None:
            raise PlanError(f"{self.op} needs a root tile")
        if self.message_bytes < 0:
            raise PlanError("negative message size")
        if self.op == REDUCE and self.operands_per_tile < 1:
            raise PlanError("reduce needs at least one operand per tile")


def involved_processors(spec: CollectiveSpec):
    procs = {t.processor for t in spec.participants}
    if spec.root is not None:
        procs.add(spec.root.processor)
    return procs


def max_message_size(op, participants, usable_mem, root=None):
    """Largest per-participant message the op can move safely, in bytes.

    `participants` may be a count or a tile collection; with tiles (and a
    root) the processor span is known exactly, with a bare count one
    processor is assumed.
    """
    if op not in ALL_OPS:
        raise PlanError(f"unknown collective {op!r}")
    if isinstance(participants, int):
        count = participants
        procs = 1
    else:
        tiles = list(participants)
        count = len(tiles)
        span = {t.processor for t in tiles}
        if root is not None:
            span.add(root.processor)
        procs = len(span)
    if count < 1:
        raise PlanError("collective needs at least one participant")

    if op == BROADCAST:
        return usable_mem // 2 - _BROADCAST_RESERVED
    if op in (GATHER, SCATTER):
        key = 1
        while key < procs:
            key *= 2
        key = min(key, max(_FAN_LIMIT_BY_CHIPS))
        return _FAN_LIMIT_BY_CHIPS[key]
    if op == ALL_TO_ALL:
        return usable_mem // (2 * count)
    raise PlanError("reduce moves fixed-size partials; no size to choose")


def _check_size(spec: CollectiveSpec, usable_mem):
    limit = max_message_size(spec.op, spec.participants, usable_mem,
                             root=spec.root)
    if spec.message_bytes > limit:
        raise PlanError(
            f"{spec.op} of {spec.message_bytes} B per participant exceeds "
            f"the safe limit of {limit} B")


def plan(spec: CollectiveSpec, topo: Topology):
    """Lower a data-moving collective to a single exchange superstep."""
    if spec.op == REDUCE:
        raise PlanError("use reduce_plan for reductions")
    _check_size(spec, topo.spec.usable_memory_per_tile)
    size = spec.message_bytes
    if spec.op == BROADCAST:
        msgs = [Message(spec.root, d, size, payload="fanout")
                for d in spec.participants]
    elif spec.op == SCATTER:
        msgs = [Message(spec.root, d, size) for d in spec.participants]
    elif spec.op == GATHER:
        msgs = [Message(p, spec.root, size) for p in spec.participants]
    else:  # all_to_all
        msgs = [Message(a, b, size)
                for a in spec.participants for b in spec.participants]
    return Superstep(messages=msgs, label=spec.op)


# ---------------------------------------------------------------------------
# reduce: plan, numeric simulation, closed-form latency


def _chip_groups(spec: CollectiveSpec):
    groups = {}
    for t in spec.participants:
        groups.setdefault(t.processor, []).append(t)
    return groups


def _representative(groups, proc, root):
    if root.processor == proc and root in groups.get(proc, []):
        return root
    return min(groups[proc])


def reduce_plan(spec: CollectiveSpec, topo: Topology):
    """Lower a reduction to supersteps: one local combine step, then one
    relay step per ladder level until every partial reaches the root.

    Partials are one operand (4 bytes).  Relays hop chip by chip along the
    shortest route; a chip with no participant lends its tile 0.
    """
    if spec.op != REDUCE:
        raise PlanError("reduce_plan only lowers reductions")
    leaf_combine_ns = (spec.operands_per_tile - 1) * 1.0
    groups = _chip_groups(spec)
    root = spec.root
    root_chip = root.processor

    # Step 1: leaf combines, then partials converge on each chip's
    # representative (and on the root for its own chip).
    reps = {proc: _representative(groups, proc, root) for proc in groups}
    if root_chip in reps:
        reps[root_chip] = root
    step1 = Superstep(label="reduce/local")
    for t in spec.participants:
        step1.compute_ns[t] = leaf_combine_ns
        rep = reps[t.processor]
        if t != rep:
            step1.messages.append(Message(t, rep, 4))
    steps = [step1]

    # Relay rounds: every off-root partial advances one chip toward the
    # root.  All partials arrive after max-hop-count rounds.
    holders = {proc: reps[proc] for proc in reps}
    while set(holders) != {root_chip} or root_chip not in holders:
        nxt = {}
        step = Superstep(label="reduce/relay")
        for proc, tile in holders.items():
            if proc == root_chip:
                nxt[root_chip] = tile
                continue
            hop = topo.route(proc, root_chip)[0]
            target_proc = hop.dst
            if target_proc == root_chip:
                target = root
            elif target_proc in nxt:
                target = nxt[target_proc]
            elif target_proc in holders:
                target = holders[target_proc]
            else:
                target = TileId(target_proc, 0)
            step.messages.append(Message(tile, target, 4))
            step.compute_ns[target] = 1.0
            nxt[target_proc] = target
        if root_chip not in nxt:
            nxt[root_chip] = root
        steps.append(step)
        holders = nxt
        if not step.messages:
            steps.pop()
            break
    return steps


def simulate_reduce(spec: CollectiveSpec, topo: Topology, values):
    """Numerically execute the reduce plan; returns the root's result.

    `values` maps each participant tile to a list of its operands.  Used to
    check that the relay structure loses and duplicates nothing.
    """
    partial = {}
    for t in spec.participants:
        ops = values[t]
        if len(ops) != spec.operands_per_tile:
            raise PlanError(f"tile {t} has {len(ops)} operands, "
                            f"expected {spec.operands_per_tile}")
        acc = ops[0]
        for v in ops[1:]:
            acc = acc + v
        partial[t] = acc
    for step in reduce_plan(spec, topo):
        arriving = {}
        for m in step.messages:
            arriving.setdefault(m.dst, []).append(partial.pop(m.src))
        for dst, incoming in sorted(arriving.items()):
            acc = partial.get(dst, 0)
            for v in incoming:
                acc = acc + v
            partial[dst] = acc
    if list(partial) != [spec.root]:
        raise PlanError(f"reduction did not converge on the root: {partial}")
    return partial[spec.root]


def reduce_latency(spec: CollectiveSpec, topo: Topology, params: CostParams,
                   sequential=False):
    """Closed-form reduction time in ns.

    Sequential: one tile folds everything, linear in operand count with a
    fixed program-launch charge.  Parallel: leaf combines run concurrently,
    then every ladder level re-ingests and re-combines the busiest chip's
    partials; the port time and per-add time are paid per partial.
    """
    k = spec.operands_per_tile
    c1 = params.reduce_per_op_ns
    if sequential:
        if len(spec.participants) != 1:
            raise PlanError("sequential reduce runs on exactly one tile")
        return params.reduce_base_ns + c1 * k
    groups = _chip_groups(spec)
    n_max = max(len(g) for g in groups.values())
    root_chip = spec.root.processor
    h = max(topo.hop_distance(proc, root_chip) for proc in groups)
    partial_ns = 4 * 1e9 / params.tile_port_bps
    per_level = n_max * (partial_ns + c1)
    return params.reduce_parallel_base_ns + c1 * (k - 1) + (1 + h) * per_level


# ---------------------------------------------------------------------------
# calibrated per-op latency corrections


def gather_latency(spec: CollectiveSpec, topo: Topology, params: CostParams):
    """Root-side ingest model for gather, in ns.

    The root accepts one message per participant through its port; local
    senders cost pure port time, each remote chip adds a fixed per-message
    overhead that grows with its route's rail hops and rung crossing.  Chips
    drain concurrently, so the slowest chip sets the pace.
    """
    root = spec.root
    port_ns = spec.message_bytes * 1e9 / params.tile_port_bps
    groups = _chip_groups(spec)
    if len(spec.participants) == 1 and spec.participants[0] == root:
        link = params.links["local_memory"]
        return link.base_latency_ns \
            + spec.message_bytes * 1e9 / link.per_transfer_peak_bps
    base = params.links["on_chip_exchange"].base_latency_ns
    n_local = len(groups.get(root.processor, []))
    worst_remote = 0.0
    for proc, tiles in groups.items():
        if proc == root.processor:
            continue
        kinds = [e.kind for e in topo.route(root.processor, proc)]
        if kinds == [INTRA_BOARD_BUNDLE]:
            fix = params.gather_board_fix_ns
        else:
            fix = params.gather_rail_fix_ns * kinds.count(INTER_BOARD_RAIL)
            if PASS_THROUGH in kinds:
                fix += params.gather_pass_fix_ns
        worst_remote = max(worst_remote, len(tiles) * (fix + port_ns))
    return base + n_local * port_ns + worst_remote


@dataclass(frozen=True)
class CollectiveResult:
    op: str
    latency_ns: float
    aggregate_bps: float
    per_transfer_bps: float
    transfer_count: int
    extrapolated: bool = False
    mode: str = "analytic"


def predict(spec: CollectiveSpec, topo: Topology, params: CostParams):
    """Analytic prediction for one collective."""
    if spec.op == REDUCE:
        latency = reduce_latency(spec, topo, params)
        total = 4 * spec.operands_per_tile * len(spec.participants)
        agg = total * 1e9 / latency
        return CollectiveResult(
            op=REDUCE, latency_ns=latency, aggregate_bps=agg,
            per_transfer_bps=agg / len(spec.participants),
            transfer_count=len(spec.participants))

    step = plan(spec, topo)
    trace = engine_mod.run_superstep(topo, params, step,
                                     load_mode=engine_mod.SCHEDULED)
    count = len(step.messages)
    latency = trace.span_ns
    if spec.op == GATHER:
        latency = gather_latency(spec, topo, params)
    elif spec.op == BROADCAST:
        destinations = {m.dst for m in step.messages}
        if len(destinations) > 1:
            latency += params.broadcast_fanout_ns
    agg = trace.aggregate_exchange_bps
    per = agg / count if count else 0.0
    return CollectiveResult(op=spec.op, latency_ns=latency,
                            aggregate_bps=agg, per_transfer_bps=per,
                            transfer_count=count)

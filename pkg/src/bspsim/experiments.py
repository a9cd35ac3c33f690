"""Experiment registry: every measured scenario, rebuilt analytically.

Each golden experiment id maps to one handler.  A handler reconstructs
the measured traffic pattern (endpoints, sizes, congestion) and prices it
with the model: the engine for contended patterns, the collective planner
for fan-in/fan-out, closed forms for memory, host and reduction figures.

Handlers return dicts keyed like the golden metric columns:
``latency_ns``, ``per_transfer_latency_ns``, ``aggregate_bw`` (GB/s) and
``per_transfer_bw`` (MB/s).  Extra keys are allowed; the verifier only
compares metrics the golden row actually carries.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field

from .collectives import (ALL_TO_ALL, BROADCAST, GATHER, REDUCE, SCATTER,
                          CollectiveSpec, max_message_size, predict,
                          reduce_latency)
from .config import DEFAULT_SEED, load_system_spec, resolve_seed
from .cost_model import (CostParams, host_transfer, load_cost_params,
                         memory_latency, memory_read_bandwidth,
                         memory_write_bandwidth, p2p_latency, saturation)
from .engine import Message, Superstep, run_superstep
from .errors import UnknownExperimentError
from .topology import TileId, Topology, build_topology

# Bytes each tile moves in the host bandwidth experiments.
HOST_BYTES_PER_TILE = 40_000
# Small-message size used by every latency experiment (one machine word).
WORD_BYTES = 4

# Cabling slots per multi-processor experiment group.  Groups are
# cabling-contiguous; "2b" shares a board, "2c" sits one rail hop away,
# "2d" needs a rung plus a rail hop.
GROUP_SLOTS = {
    "2b": (0, 1),
    "2c": (0, 2),
    "2d": (0, 3),
    "4": (0, 1, 2, 3),
    "8": tuple(range(8)),
    "16": tuple(range(16)),
}

# Collective scenario letters: (cabling slots, root's chip participates).
# In b/c/d only the far chip's tiles take part; the root just feeds them.
LETTER_SLOTS = {
    "a": ((0,), True),
    "b": ((0, 1), False),
    "c": ((0, 2), False),
    "d": ((0, 3), False),
    "e": ((0, 1), True),
    "f": ((0, 2), True),
    "g": ((0, 3), True),
    "h": (tuple(range(4)), True),
    "i": (tuple(range(8)), True),
    "j": (tuple(range(16)), True),
}

# Operands per tile in the strong-scaling reduction experiments.
STRONG_OPS = {"1": 16, "2b": 8, "2c": 8, "2d": 8, "4": 4, "8": 2, "16": 1}


@dataclass
class Bench:
    """A machine model plus the scratch state handlers share."""

    topo: Topology
    params: CostParams
    seed: int = DEFAULT_SEED
    _cache: dict = field(default_factory=dict, repr=False)


def default_bench(system_path=None, costs_path=None, seed=None) -> Bench:
    spec = load_system_spec(system_path)
    topo = build_topology(spec=spec)
    params = load_cost_params(costs_path, system=spec)
    if seed is None:
        seed = resolve_seed(spec)
    return Bench(topo=topo, params=params, seed=seed)


# ---------------------------------------------------------------------------
# registry plumbing

_REGISTRY = []


def _handler(pattern):
    rx = re.compile(pattern + r"\Z")

    def deco(fn):
        _REGISTRY.append((rx, fn))
        return fn
    return deco


def match(experiment_id):
    """(pattern, groupdict) of the handler owning this id, or None."""
    for rx, _fn in _REGISTRY:
        m = rx.match(experiment_id)
        if m:
            return rx.pattern, m.groupdict()
    return None


def predict_metrics(bench: Bench, experiment_id):
    """Analytic prediction dict for one experiment id.

    Results are memoized per bench (some experiments simulate hundreds of
    thousands of messages); callers get a fresh copy each time.
    """
    key = ("metrics", experiment_id)
    hit = bench._cache.get(key)
    if hit is not None:
        return dict(hit)
    for rx, fn in _REGISTRY:
        m = rx.match(experiment_id)
        if m:
            out = fn(bench, **m.groupdict())
            bench._cache[key] = out
            return dict(out)
    raise UnknownExperimentError(f"no handler for {experiment_id!r}")


def coverage(golden):
    """(unmatched ids, never-used patterns): both empty when in sync."""
    used = set()
    unmatched = []
    for eid in golden.by_id:
        hit = match(eid)
        if hit is None:
            unmatched.append(eid)
        else:
            used.add(hit[0])
    unused = [rx.pattern for rx, _ in _REGISTRY if rx.pattern not in used]
    return unmatched, unused


# ---------------------------------------------------------------------------
# traffic pattern builders

def _tiles_of(procs, tiles_per_chip, count=None):
    out = []
    for p in procs:
        out.extend(TileId(p, t) for t in range(tiles_per_chip))
    return out if count is None else out[:count]


def _pair_endpoints(bench, letter):
    """The two endpoints of scenarios a..d (a stays on one chip)."""
    if letter == "a":
        return TileId(0, 0), TileId(0, 1)
    slot = {"b": 1, "c": 2, "d": 3}[letter]
    return TileId(0, 0), TileId(slot, 0)


def _run_pattern(bench, key, build):
    if key not in bench._cache:
        step = Superstep(messages=build(), label=str(key))
        bench._cache[key] = run_superstep(bench.topo, bench.params, step)
    return bench._cache[key]


def _pair_trace(bench, letter):
    """All tiles of one chip firing at once toward their counterparts."""
    tiles = bench.topo.tiles_per_processor

    def build():
        if letter == "a":
            return [Message(TileId(0, i), TileId(0, (i + 1) % tiles),
                            WORD_BYTES) for i in range(tiles)]
        slot = {"b": 1, "c": 2, "d": 3}[letter]
        return [Message(TileId(0, i), TileId(slot, i), WORD_BYTES)
                for i in range(tiles)]
    return _run_pattern(bench, ("pair", letter), build)


def _bidir_trace(bench, letter):
    tiles = bench.topo.tiles_per_processor
    slot = {"b": 1, "c": 2, "d": 3}[letter]

    def build():
        out = [Message(TileId(0, i), TileId(slot, i), WORD_BYTES)
               for i in range(tiles)]
        out += [Message(TileId(slot, i), TileId(0, i), WORD_BYTES)
                for i in range(tiles)]
        return out
    return _run_pattern(bench, ("bidir", letter), build)


def _ring_trace(bench, n):
    def build():
        if n == 1:
            return [Message(TileId(0, 0), TileId(0, 1), WORD_BYTES)]
        return [Message(TileId(0, i), TileId(0, (i + 1) % n), WORD_BYTES)
                for i in range(n)]
    return _run_pattern(bench, ("ring", n), build)


def _random_trace(bench, key):
    """Seeded random permutation over every tile of the group."""
    slots = GROUP_SLOTS[key]
    tiles = bench.topo.tiles_per_processor
    total = len(slots) * tiles

    def build():
        rng = random.Random(bench.seed)
        perm = list(range(total))
        rng.shuffle(perm)

        def tid(g):
            chip, t = divmod(g, tiles)
            return TileId(slots[chip], t)
        return [Message(tid(i), tid(perm[i]), WORD_BYTES)
                for i in range(total) if perm[i] != i]
    return _run_pattern(bench, ("random", key), build)


def _trace_metrics(trace, participants):
    agg = trace.aggregate_exchange_bps
    count = len(trace.transfers)
    return {
        "latency_ns": trace.span_ns,
        "per_transfer_latency_ns": trace.span_ns / participants,
        "aggregate_bw": agg / 1e9,
        "per_transfer_bw": (agg / count if count else 0.0) / 1e6,
    }


# ---------------------------------------------------------------------------
# point-to-point

@_handler(r"p2p-latency-noload-(?P<letter>[abcd])")
def _p2p_latency_noload(bench, letter):
    a, b = _pair_endpoints(bench, letter)
    path = bench.topo.tile_route(a, b)
    return {"latency_ns": p2p_latency(path, bench.params)}


@_handler(r"p2p-latency-(?:load|mono)-(?P<letter>[abcd])")
def _p2p_latency_load(bench, letter):
    trace = _pair_trace(bench, letter)
    return _trace_metrics(trace, bench.topo.tiles_per_processor)


@_handler(r"p2p-latency-chip-(?P<n>\d+)")
def _p2p_latency_chip(bench, n):
    n = int(n)
    return _trace_metrics(_ring_trace(bench, n), n)


@_handler(r"p2p-latency-random-(?P<key>2b|2c|2d|4|8|16)")
def _p2p_latency_random(bench, key):
    total = len(GROUP_SLOTS[key]) * bench.topo.tiles_per_processor
    return _trace_metrics(_random_trace(bench, key), total)


@_handler(r"p2p-bw-noload-(?P<letter>[abcd])")
def _p2p_bw_noload(bench, letter):
    a, b = _pair_endpoints(bench, letter)
    trace = _run_pattern(bench, ("single", letter),
                         lambda: [Message(a, b, WORD_BYTES)])
    return _trace_metrics(trace, 1)


@_handler(r"p2p-bw-(?:load|mono)-(?P<letter>[abcd])")
def _p2p_bw_load(bench, letter):
    trace = _pair_trace(bench, letter)
    return _trace_metrics(trace, bench.topo.tiles_per_processor)


@_handler(r"p2p-bw-chip-(?P<n>\d+)")
def _p2p_bw_chip(bench, n):
    n = int(n)
    return _trace_metrics(_ring_trace(bench, n), n)


@_handler(r"p2p-bw-bidir-(?P<letter>[bcd])")
def _p2p_bw_bidir(bench, letter):
    trace = _bidir_trace(bench, letter)
    return _trace_metrics(trace, 2 * bench.topo.tiles_per_processor)


@_handler(r"p2p-bw-random-(?P<key>2b|2c|2d|4|8|16)")
def _p2p_bw_random(bench, key):
    total = len(GROUP_SLOTS[key]) * bench.topo.tiles_per_processor
    return _trace_metrics(_random_trace(bench, key), total)


@_handler(r"p2p-matrix-(?P<s>\d+)-(?P<d>\d+)")
def _p2p_matrix(bench, s, d):
    src = TileId(bench.topo.dnc_of(int(s)), 0)
    dst = TileId(bench.topo.dnc_of(int(d)), 0)
    path = bench.topo.tile_route(src, dst)
    return {"latency_ns": p2p_latency(path, bench.params)}


# ---------------------------------------------------------------------------
# tile-local memory

@_handler(r"mem-latency")
def _mem_latency(bench):
    _cycles, ns = memory_latency(bench.params)
    return {"latency_ns": ns}


@_handler(r"mem-bw-theory")
def _mem_theory(bench):
    return {"aggregate_bw": bench.params.peak_read_bps / 1e9}


@_handler(r"mem-bw-write")
def _mem_write(bench):
    chip, _tile = memory_write_bandwidth(bench.params)
    return {"aggregate_bw": chip / 1e9}


@_handler(r"mem-bw-(?P<width>32|64|128)(?:-f(?P<folds>\d+))?")
def _mem_width(bench, width, folds):
    chip, _tile = memory_read_bandwidth(bench.params, width_bits=int(width))
    return {"aggregate_bw": chip / 1e9}


@_handler(r"mem-block-8k")
def _mem_block(bench):
    frac = saturation(8192, bench.params.block_half_sat_bytes)
    return {"aggregate_bw": bench.params.peak_read_bps * frac / 1e9}


# ---------------------------------------------------------------------------
# host link

def _host_flat(bench):
    return {"latency_ns": float(bench.params.host_latency_ns)}


@_handler(r"host-latency-tiles-(?P<n>\d+)")
def _host_lat_tiles(bench, n):
    return _host_flat(bench)


@_handler(r"host-latency-ipu-(?P<i>\d+)")
def _host_lat_ipu(bench, i):
    return _host_flat(bench)


@_handler(r"host-latency-(?P<key>2b|2c|2d|4|8|16)")
def _host_lat_multi(bench, key):
    return _host_flat(bench)


def _host_bw(bench, tiles, processors):
    _lat, bw = host_transfer(bench.params, tiles * HOST_BYTES_PER_TILE,
                             processors)
    return {"aggregate_bw": bw / 1e9, "per_transfer_bw": bw / tiles / 1e6}


@_handler(r"host-bw-tiles-(?P<n>\d+)")
def _host_bw_tiles(bench, n):
    return _host_bw(bench, int(n), 1)


@_handler(r"host-bw-ipu-(?P<i>\d+)")
def _host_bw_ipu(bench, i):
    return _host_bw(bench, bench.topo.tiles_per_processor, 1)


@_handler(r"host-bw-(?P<key>2b|2c|2d|4|8|16)")
def _host_bw_multi(bench, key):
    slots = GROUP_SLOTS[key]
    tiles = len(slots) * bench.topo.tiles_per_processor
    return _host_bw(bench, tiles, len(slots))


# ---------------------------------------------------------------------------
# collectives

def _collective_metrics(result, participants):
    return {
        "latency_ns": result.latency_ns,
        "per_transfer_latency_ns": result.latency_ns / participants,
        "aggregate_bw": result.aggregate_bps / 1e9,
        "per_transfer_bw": result.per_transfer_bps / 1e6,
    }


def _letter_participants(bench, letter):
    slots, with_root_chip = LETTER_SLOTS[letter]
    tiles = bench.topo.tiles_per_processor
    members = slots if with_root_chip else slots[1:]
    return tuple(_tiles_of(members, tiles)), TileId(slots[0], 0)


def _fan_size(bench, op, participants, root):
    return max_message_size(op, participants,
                            bench.topo.spec.usable_memory_per_tile, root=root)


def _rooted(bench, op, participants, root, size):
    spec = CollectiveSpec(op, tuple(participants), size, root=root)
    result = predict(spec, bench.topo, bench.params)
    return _collective_metrics(result, len(participants))


def _band_participants(bench, op, n):
    """Single-chip band: `n` endpoints on chip 0."""
    root = TileId(0, 0)
    if op == BROADCAST:
        members = tuple(TileId(0, t) for t in range(1, n + 1))
    else:
        members = tuple(TileId(0, t) for t in range(n))
    return members, root


@_handler(r"broadcast-latency-self")
def _bc_lat_self(bench):
    root = TileId(0, 0)
    return _rooted(bench, BROADCAST, (root,), root, WORD_BYTES)


@_handler(r"broadcast-latency-chip-(?P<n>\d+)")
def _bc_lat_chip(bench, n):
    members, root = _band_participants(bench, BROADCAST, int(n))
    return _rooted(bench, BROADCAST, members, root, WORD_BYTES)


@_handler(r"broadcast-latency-(?P<letter>[a-j])")
def _bc_lat_letter(bench, letter):
    members, root = _letter_participants(bench, letter)
    return _rooted(bench, BROADCAST, members, root, WORD_BYTES)


@_handler(r"broadcast-bw-chip-(?P<n>\d+)")
def _bc_bw_chip(bench, n):
    members, root = _band_participants(bench, BROADCAST, int(n))
    size = _fan_size(bench, BROADCAST, members, root)
    return _rooted(bench, BROADCAST, members, root, size)


@_handler(r"broadcast-(?:bw|frac)-(?P<letter>[a-j])")
def _bc_bw_letter(bench, letter):
    members, root = _letter_participants(bench, letter)
    size = _fan_size(bench, BROADCAST, members, root)
    return _rooted(bench, BROADCAST, members, root, size)


def _fan_family(op):
    def lat_self(bench):
        root = TileId(0, 0)
        return _rooted(bench, op, (root,), root, WORD_BYTES)

    def lat_chip(bench, n):
        members, root = _band_participants(bench, op, int(n))
        return _rooted(bench, op, members, root, WORD_BYTES)

    def lat_letter(bench, letter):
        members, root = _letter_participants(bench, letter)
        return _rooted(bench, op, members, root, WORD_BYTES)

    def bw_self(bench):
        root = TileId(0, 0)
        size = _fan_size(bench, op, (root,), root)
        return _rooted(bench, op, (root,), root, size)

    def bw_chip(bench, n):
        members, root = _band_participants(bench, op, int(n))
        size = _fan_size(bench, op, members, root)
        return _rooted(bench, op, members, root, size)

    def bw_letter(bench, letter):
        members, root = _letter_participants(bench, letter)
        size = _fan_size(bench, op, members, root)
        return _rooted(bench, op, members, root, size)

    name = "gather" if op == GATHER else "scatter"
    _handler(rf"{name}-latency-self")(lat_self)
    _handler(rf"{name}-latency-chip-(?P<n>\d+)")(lat_chip)
    _handler(rf"{name}-latency-(?P<letter>[a-j])")(lat_letter)
    _handler(rf"{name}-bw-self")(bw_self)
    _handler(rf"{name}-bw-chip-(?P<n>\d+)")(bw_chip)
    _handler(rf"{name}-bw-(?P<letter>[a-j])")(bw_letter)


_fan_family(GATHER)
_fan_family(SCATTER)


@_handler(r"a2a-latency-(?P<n>self|\d+)")
def _a2a_latency(bench, n):
    count = 1 if n == "self" else int(n)
    members = tuple(TileId(0, t) for t in range(count))
    spec = CollectiveSpec(ALL_TO_ALL, members, WORD_BYTES)
    result = predict(spec, bench.topo, bench.params)
    return _collective_metrics(result, result.transfer_count)


# ---------------------------------------------------------------------------
# reduction

def _reduce_metrics(bench, participants, ops, sequential=False):
    spec = CollectiveSpec(REDUCE, tuple(participants), WORD_BYTES,
                          root=TileId(0, 0), operands_per_tile=ops)
    latency = reduce_latency(spec, bench.topo, bench.params,
                             sequential=sequential)
    total_bytes = WORD_BYTES * ops * len(participants)
    agg_bps = total_bytes * 1e9 / latency
    return {
        "latency_ns": latency,
        "per_transfer_latency_ns": latency / (ops * len(participants)),
        "aggregate_bw": agg_bps / 1e9,
        "per_transfer_bw": agg_bps / len(participants) / 1e6,
    }


def _group_tiles(bench, key):
    slots = (0,) if key == "1" else GROUP_SLOTS[key]
    return _tiles_of(slots, bench.topo.tiles_per_processor)


@_handler(r"reduce-seq-(?P<k>\d+)")
def _reduce_seq(bench, k):
    return _reduce_metrics(bench, [TileId(0, 0)], int(k), sequential=True)


@_handler(r"reduce-strong-base")
def _reduce_strong_base(bench):
    return _reduce_metrics(bench, [TileId(0, 0)], 19456, sequential=True)


@_handler(r"reduce-diam-(?P<m>\d+)")
def _reduce_diam(bench, m):
    members = [TileId(slot, 0) for slot in range(int(m))]
    return _reduce_metrics(bench, members, 1)


@_handler(r"reduce-weak-(?P<key>1|2b|2c|2d|4|8|16)")
def _reduce_weak(bench, key):
    return _reduce_metrics(bench, _group_tiles(bench, key), 1)


@_handler(r"reduce-strong-(?P<key>1|2b|2c|2d|4|8|16)")
def _reduce_strong(bench, key):
    return _reduce_metrics(bench, _group_tiles(bench, key), STRONG_OPS[key])


@_handler(r"reduce-bw-base-(?P<k>\d+)")
def _reduce_bw_base(bench, k):
    members = [TileId(0, t) for t in range(1000)]
    return _reduce_metrics(bench, members, int(k))


@_handler(r"reduce-bw-chip-(?P<n>\d+)")
def _reduce_bw_chip(bench, n):
    n = int(n)
    members = [TileId(0, t) for t in range(n)]
    return _reduce_metrics(bench, members, 25000, sequential=(n == 1))


@_handler(r"reduce-bw-(?P<block>small|large)-(?P<key>1|2b|2c|2d|4|8|16)")
def _reduce_bw_multi(bench, block, key):
    ops = 1000 if block == "small" else 25000
    return _reduce_metrics(bench, _group_tiles(bench, key), ops)

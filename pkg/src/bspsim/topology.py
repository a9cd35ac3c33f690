"""Machine topology: the ladder interconnect and the on-chip tile grid.

The machine is a stack of boards, two processors per board.  Each board has
a wide internal bundle joining its two processors (a "rung"), and processors
in the same position across consecutive boards are chained by cables (two
"rails", one per position).  There is no wrap-around link, so the whole
interconnect is a ladder.

Two id spaces exist for processors:

* device ids  - the order the devices are enumerated by software,
* cabling ids - the physical position in the ladder (board k holds
  cabling ids 2k and 2k+1).

All routing happens in cabling-id space; the mapping between the two spaces
is an arbitrary permutation read from the machine description file.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass

from .config import SystemSpec, load_system_spec
from .errors import TopologyError

# ---------------------------------------------------------------------------
# link and hop kinds

LOCAL_MEMORY = "local_memory"          # same tile, no interconnect involved
ON_CHIP_EXCHANGE = "on_chip_exchange"  # all-to-all fabric inside one processor
INTRA_BOARD_BUNDLE = "intra_board_bundle"  # rung used as the final hop
INTER_BOARD_RAIL = "inter_board_rail"      # rail between consecutive boards
PASS_THROUGH = "pass_through"          # rung used in transit to another board
EGRESS_PORT = "egress_port"            # tile's injection port into the exchange
INGRESS_PORT = "ingress_port"          # tile's reception port from the exchange

LINK_KINDS = (
    ON_CHIP_EXCHANGE,
    INTRA_BOARD_BUNDLE,
    INTER_BOARD_RAIL,
    PASS_THROUGH,
    LOCAL_MEMORY,
)

# Kinds that cross processor boundaries (carry the per-hop store/forward cost).
INTER_PROCESSOR_KINDS = (INTRA_BOARD_BUNDLE, INTER_BOARD_RAIL, PASS_THROUGH)

TileId = namedtuple("TileId", ["processor", "tile"])  # processor in cabling-id space

RouteEdge = namedtuple("RouteEdge", ["src", "dst", "kind"])  # cabling ids, directed

# One hop of a tile-to-tile path.  `key` identifies the physical resource the
# hop occupies, so two messages sharing a resource produce equal keys.
Hop = namedtuple("Hop", ["kind", "key"])

TileLocus = namedtuple("TileLocus", ["column", "row", "island", "slot"])

# tile pair classes on one processor
SAME_TILE = "same_tile"
SAME_ISLAND = "same_island"
SAME_COLUMN = "same_column"
CROSS_COLUMN = "cross_column"
CROSS_PROCESSOR = "cross_processor"

TILES_PER_COLUMN = 76
ISLANDS_PER_COLUMN = 19


def _build_island_table():
    """(island, slot) for each row position within a column.

    Islands are folded: island k owns rows {2k, 2k+1} counting from one end
    and {74-2k, 75-2k} counting from the other, four tiles per island.
    """
    table = []
    for r in range(TILES_PER_COLUMN):
        if r < TILES_PER_COLUMN // 2:
            table.append((r // 2, r % 2))
        else:
            table.append(((TILES_PER_COLUMN - 1 - r) // 2, 2 if r % 2 == 0 else 3))
    return tuple(table)


_ISLAND_TABLE = _build_island_table()


class Topology:
    """A ladder machine built from a :class:`SystemSpec`."""

    def __init__(self, spec: SystemSpec):
        if spec.boards < 1:
            raise TopologyError("need at least one board")
        self.spec = spec
        self.processors = spec.processors
        self.tiles_per_processor = spec.tiles_per_processor

        if spec.dnc_to_device:
            if sorted(spec.dnc_to_device) != list(range(self.processors)):
                raise TopologyError("cabling map is not a permutation")
            self.dnc_to_device = tuple(spec.dnc_to_device)
        else:
            self.dnc_to_device = tuple(range(self.processors))
        inv = [0] * self.processors
        for dnc, dev in enumerate(self.dnc_to_device):
            inv[dev] = dnc
        self.device_to_dnc = tuple(inv)

        self._hop_cache = {}   # per-tile port / local-memory hops
        self._mid_cache = {}   # (src proc, dst proc) -> shared middle hops

    # -- id spaces ---------------------------------------------------------

    def check_processor(self, dnc):
        if not 0 <= dnc < self.processors:
            raise TopologyError(f"processor id {dnc} out of range 0..{self.processors - 1}")

    def check_tile(self, tid: TileId):
        self.check_processor(tid.processor)
        if not 0 <= tid.tile < self.tiles_per_processor:
            raise TopologyError(
                f"tile {tid.tile} out of range 0..{self.tiles_per_processor - 1}"
            )

    def device_of(self, dnc):
        """Cabling id -> enumeration-order device id."""
        self.check_processor(dnc)
        return self.dnc_to_device[dnc]

    def dnc_of(self, device):
        """Enumeration-order device id -> cabling id."""
        if not 0 <= device < self.processors:
            raise TopologyError(f"device id {device} out of range")
        return self.device_to_dnc[device]

    def board_of(self, dnc):
        self.check_processor(dnc)
        return dnc // 2

    def rail_of(self, dnc):
        """Which of the two rails (0 or 1) the processor sits on."""
        self.check_processor(dnc)
        return dnc % 2

    # -- graph structure ---------------------------------------------------

    def edge_list(self):
        """Undirected physical edges (a, b, kind) with a < b, in cabling ids."""
        edges = []
        for board in range(self.spec.boards):
            edges.append((2 * board, 2 * board + 1, INTRA_BOARD_BUNDLE))
        for board in range(self.spec.boards - 1):
            edges.append((2 * board, 2 * board + 2, INTER_BOARD_RAIL))
            edges.append((2 * board + 1, 2 * board + 3, INTER_BOARD_RAIL))
        return edges

    def neighbors(self, dnc):
        self.check_processor(dnc)
        out = [dnc ^ 1]  # rung partner on the same board
        if dnc - 2 >= 0:
            out.append(dnc - 2)
        if dnc + 2 < self.processors:
            out.append(dnc + 2)
        return sorted(out)

    def hop_distance(self, a, b):
        """Minimal number of inter-processor edges between two cabling ids.

        Same rail: ride the rail, |a - b| / 2 hops.  Different rails: one
        rung plus the rail distance between the boards.
        """
        self.check_processor(a)
        self.check_processor(b)
        if a == b:
            return 0
        if a % 2 == b % 2:
            return abs(a - b) // 2
        return abs(a // 2 - b // 2) + 1

    def route(self, a, b):
        """Shortest path a -> b as directed RouteEdges, in cabling ids.

        Cross-rail traffic crosses over immediately: the rung at the source
        board is taken first, then the destination's rail.  A rung used in
        transit is a pass-through hop; a rung that is itself the final hop
        is a bundle hop.
        """
        self.check_processor(a)
        self.check_processor(b)
        if a == b:
            return []
        edges = []
        cur = a
        if a % 2 != b % 2:
            partner = a ^ 1
            kind = INTRA_BOARD_BUNDLE if partner == b else PASS_THROUGH
            edges.append(RouteEdge(cur, partner, kind))
            cur = partner
        step = 2 if b > cur else -2
        while cur != b:
            edges.append(RouteEdge(cur, cur + step, INTER_BOARD_RAIL))
            cur += step
        return edges

    def tile_route(self, src: TileId, dst: TileId):
        """Full resource path between two tiles, as Hop records.

        Same tile: a single local-memory hop.  Same processor: egress port,
        exchange, ingress port.  Different processors: egress, source
        exchange, the ladder edges, destination exchange, ingress.

        Hops are immutable, so repeat calls share cached Hop objects; bulk
        callers (the step engine routes every message) lean on this.
        """
        self.check_tile(src)
        self.check_tile(dst)
        if src == dst:
            key = ("local", src.processor, src.tile)
            hop = self._hop_cache.get(key)
            if hop is None:
                hop = self._hop_cache[key] = Hop(LOCAL_MEMORY, key)
            return [hop]
        cache = self._hop_cache
        out_key = ("out", src.processor, src.tile)
        egress = cache.get(out_key)
        if egress is None:
            egress = cache[out_key] = Hop(EGRESS_PORT, out_key)
        in_key = ("in", dst.processor, dst.tile)
        ingress = cache.get(in_key)
        if ingress is None:
            ingress = cache[in_key] = Hop(INGRESS_PORT, in_key)
        mid_key = (src.processor, dst.processor)
        mid = self._mid_cache.get(mid_key)
        if mid is None:
            mid = [Hop(ON_CHIP_EXCHANGE, ("xchg", src.processor))]
            if src.processor != dst.processor:
                for e in self.route(src.processor, dst.processor):
                    mid.append(Hop(e.kind, ("link", e.kind, e.src, e.dst)))
                mid.append(Hop(ON_CHIP_EXCHANGE, ("xchg", dst.processor)))
            mid = self._mid_cache[mid_key] = tuple(mid)
        return [egress, *mid, ingress]

    # -- on-chip tile grid -------------------------------------------------

    def tile_locus(self, tile):
        """Physical placement of a tile: column, row in column, island, slot."""
        if not 0 <= tile < self.tiles_per_processor:
            raise TopologyError(f"tile {tile} out of range")
        col, row = divmod(tile, TILES_PER_COLUMN)
        island, slot = _ISLAND_TABLE[row]
        return TileLocus(col, row, island, slot)

    def column_x(self, column):
        """Physical x position of a column; columns fold back at the far end."""
        half = self.tiles_per_processor // TILES_PER_COLUMN // 2
        return column if column < half else 2 * half - 1 - column

    def tile_pair_class(self, a, b):
        """Classify a pair of local tile indices on one processor."""
        la, lb = self.tile_locus(a), self.tile_locus(b)
        if a == b:
            return SAME_TILE
        if la.column == lb.column:
            if la.island == lb.island:
                return SAME_ISLAND
            return SAME_COLUMN
        return CROSS_COLUMN


@dataclass(frozen=True)
class MultiDevice:
    """A group of processors presented as one device with a flat tile space.

    Tile numbering follows member order: global tile g lives on
    members[g // tiles_per_processor], local index g % tiles_per_processor.
    """

    members: tuple            # cabling ids, in enumeration order
    tiles_per_processor: int

    def __post_init__(self):
        if not self.members:
            raise TopologyError("a device group needs at least one member")
        if len(set(self.members)) != len(self.members):
            raise TopologyError("duplicate processor in device group")

    @property
    def total_tiles(self):
        return len(self.members) * self.tiles_per_processor

    def tile(self, global_index) -> TileId:
        if not 0 <= global_index < self.total_tiles:
            raise TopologyError(f"global tile {global_index} out of range")
        member, local = divmod(global_index, self.tiles_per_processor)
        return TileId(self.members[member], local)

    def global_index(self, tid: TileId):
        try:
            member = self.members.index(tid.processor)
        except ValueError:
            raise TopologyError(f"processor {tid.processor} not in group") from None
        if not 0 <= tid.tile < self.tiles_per_processor:
            raise TopologyError(f"tile {tid.tile} out of range")
        return member * self.tiles_per_processor + tid.tile

    def tiles(self):
        for g in range(self.total_tiles):
            yield self.tile(g)


def multi_device(topo: Topology, device_ids):
    """Group devices (enumeration-order ids) into one MultiDevice.

    The flat tile order follows enumeration order, so neighbouring global
    tiles may sit on processors that are physically far apart - exactly what
    happens when software treats the group as one big device.
    """
    members = tuple(topo.dnc_of(d) for d in device_ids)
    return MultiDevice(members=members, tiles_per_processor=topo.tiles_per_processor)


def build_topology(spec=None, path=None):
    """Construct a Topology from a spec, an INI path, or the packaged default."""
    if spec is None:
        spec = load_system_spec(path)
    return Topology(spec)

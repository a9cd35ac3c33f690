"""Configuration loading.

The machine description and the calibrated cost constants live in two INI
files so that a different build of the machine (more boards, different link
speeds) can be described without touching code.  Bandwidths are written in
the files as decimal GB/s; they are converted to integer bytes/second on
load so that later arithmetic is exact.
"""

from __future__ import annotations

import configparser
import os
import random
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigError

ASSET_PACKAGE = "bspsim"

SEED_ENV_VAR = "BSPSIM_SEED"
DEFAULT_SEED = 17


def asset_path(*parts):
    """Path to a data file shipped inside the package."""
    root = resources.files(ASSET_PACKAGE) / "assets"
    p = root.joinpath(*parts)
    return Path(str(p))


def gbps_to_bps(text):
    """Exact decimal GB/s -> integer bytes/s (e.g. '6.34' -> 6_340_000_000)."""
    return round(float(text) * 1e9)


@dataclass(frozen=True)
class LinkSpec:
    """One interconnect link class: latency plus the two bandwidth limits."""

    base_latency_ns: int
    loaded_multiplier: float
    per_transfer_peak_bps: int   # ceiling seen by a single transfer
    aggregate_cap_bps: int       # directed cap shared by all transfers on the link


@dataclass(frozen=True)
class SystemSpec:
    """Static description of the machine (sizes, link classes, cabling order)."""

    boards: int
    tiles_per_processor: int
    clock_hz: int
    memory_per_tile: int          # bytes, physical
    usable_memory_per_tile: int   # bytes, after reserved region
    links: dict = field(default_factory=dict)        # name -> LinkSpec
    dnc_to_device: tuple = ()     # cabling-order id -> enumeration-order id
    seed: int = DEFAULT_SEED

    @property
    def processors(self):
        return 2 * self.boards

    @property
    def total_tiles(self):
        return self.processors * self.tiles_per_processor


def _require(section, key, parser, path):
    if not parser.has_option(section, key):
        raise ConfigError(f"{path}: missing [{section}] {key}")
    return parser.get(section, key)


def load_system_spec(path=None):
    """Read a machine description INI.  Defaults to the packaged reference file."""
    if path is None:
        path = asset_path("reference_system.ini")
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"system description not found: {path}")

    parser = configparser.ConfigParser()
    parser.read(path)
    if not parser.has_section("system"):
        raise ConfigError(f"{path}: missing [system] section")

    boards = int(_require("system", "boards", parser, path))
    tiles = int(_require("system", "tiles_per_processor", parser, path))
    clock_hz = round(float(_require("system", "clock_ghz", parser, path)) * 1e9)
    mem_kib = int(_require("system", "memory_per_tile_kib", parser, path))
    usable_kib = int(_require("system", "usable_memory_per_tile_kib", parser, path))
    if boards < 1:
        raise ConfigError(f"{path}: boards must be >= 1")
    if usable_kib > mem_kib:
        raise ConfigError(f"{path}: usable memory exceeds physical memory")

    links = {}
    if parser.has_section("links"):
        for name in parser["links"]:
            fields = [f.strip() for f in parser.get("links", name).split(",")]
            if len(fields) != 4:
                raise ConfigError(
                    f"{path}: link '{name}' needs 4 fields "
                    "(base_ns, loaded_multiplier, peak_gbps, cap_gbps)"
                )
            links[name] = LinkSpec(
                base_latency_ns=int(fields[0]),
                loaded_multiplier=float(fields[1]),
                per_transfer_peak_bps=gbps_to_bps(fields[2]),
                aggregate_cap_bps=gbps_to_bps(fields[3]),
            )

    dnc_map = ()
    if parser.has_section("cabling") and parser.has_option("cabling", "dnc_to_device"):
        dnc_map = tuple(
            int(x) for x in parser.get("cabling", "dnc_to_device").split(",")
        )
        n = 2 * boards
        if sorted(dnc_map) != list(range(n)):
            raise ConfigError(
                f"{path}: dnc_to_device must be a permutation of 0..{n - 1}"
            )

    seed = DEFAULT_SEED
    if parser.has_section("harness") and parser.has_option("harness", "seed"):
        seed = int(parser.get("harness", "seed"))

    return SystemSpec(
        boards=boards,
        tiles_per_processor=tiles,
        clock_hz=clock_hz,
        memory_per_tile=mem_kib * 1024,
        usable_memory_per_tile=usable_kib * 1024,
        links=links,
        dnc_to_device=dnc_map,
        seed=seed,
    )


def resolve_seed(spec=None):
    """Seed precedence: BSPSIM_SEED env var, then the config file, then default."""
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from exc
    if spec is not None:
        return spec.seed
    return DEFAULT_SEED


def make_rng(spec=None):
    """Deterministic RNG for everything that samples (sweeps, random pairings)."""
    return random.Random(resolve_seed(spec))

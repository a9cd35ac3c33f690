"""Golden reference data: measured figures the model is checked against.

Each CSV under ``assets/golden/`` holds one experiment family.  Shared
columns:

    experiment_id     unique, stable key (also the CLI handle)
    experiment_label  scenario letter where the source material used one
    scale_ipus        processors involved
    participants      concurrent endpooints/transfers (family-specific)
    message_bytes     per-transfer size where the experiment fixes one
    latency_ns, per_transfer_latency_ns, aggregate_bw (GB/s),
    per_transfer_bw (MB/s)
    analytic_tol      relative tolerance for the analytic model; empty
                      means the row is reference-only (the model does not
                      claim it)
    source_table      which reference table the row was transcribed from

Families may append extra columns (memory width, host lanes, reduce
operand counts, broadcast saturation knots); they are kept in `extras`.

The empirical predictor answers queries from these rows: exact ids are
returned verbatim; participant counts between measured points interpolate
log-linearly; broadcast bandwidth between size knots interpolates on the
saturation curve.  Anything outside the measured hull is flagged.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .config import asset_path
from .errors import GoldenDataError, UnknownExperimentError

FAMILIES = ("p2p", "hop_matrix", "memory", "host", "broadcast",
            "gather", "scatter", "all_to_all", "reduce")

_BASE_COLUMNS = ("experiment_id", "experiment_label", "scale_ipus",
                 "participants", "message_bytes", "latency_ns",
                 "per_transfer_latency_ns", "aggregate_bw",
                 "per_transfer_bw", "analytic_tol", "source_table")

_NUMERIC = {"scale_ipus": int, "participants": int, "message_bytes": int,
            "latency_ns": float, "per_transfer_latency_ns": float,
            "aggregate_bw": float, "per_transfer_bw": float,
            "analytic_tol": float}

METRIC_COLUMNS = ("latency_ns", "per_transfer_latency_ns",
                  "aggregate_bw", "per_transfer_bw")


@dataclass(frozen=True)
class GoldenRow:
    family: str
    experiment_id: str
    experiment_label: str
    scale_ipus: int
    participants: int
    message_bytes: int
    latency_ns: float
    per_transfer_latency_ns: float
    aggregate_bw: float
    per_transfer_bw: float
    analytic_tol: float
    source_table: str
    extras: dict = field(default_factory=dict)

    def metrics(self):
        """Non-empty comparable metric columns of this row."""
        out = {}
        for col in METRIC_COLUMNS:
            v = getattr(self, col)
            if v is not None:
                out[col] = v
        return out


def _parse_row(family, raw, path):
    kwargs = {}
    extras = {}
    for col, value in raw.items():
        if col is None:
            raise GoldenDataError(f"{path}: ragged row {raw}")
        value = value.strip() if isinstance(value, str) else value
        if col in _BASE_COLUMNS:
            if col in _NUMERIC:
                kwargs[col] = _NUMERIC[col](value) if value not in ("", None) \
                    else None
            else:
                kwargs[col] = value or ""
        else:
            extras[col] = value
    missing = [c for c in _BASE_COLUMNS if c not in kwargs]
    if missing:
        raise GoldenDataError(f"{path}: missing columns {missing}")
    if not kwargs["experiment_id"]:
        raise GoldenDataError(f"{path}: row without experiment_id")
    tol = kwargs.get("analytic_tol")
    if tol is not None and not 0 <= tol <= 1:
        raise GoldenDataError(
            f"{path}: {kwargs['experiment_id']}: analytic_tol {tol} "
            "outside [0, 1]")
    for col in METRIC_COLUMNS:
        v = kwargs.get(col)
        if v is not None and v < 0:
            raise GoldenDataError(
                f"{path}: {kwargs['experiment_id']}: negative {col}")
    return GoldenRow(family=family, extras=extras, **kwargs)


class GoldenData:
    """All reference rows, indexed by id and family."""

    def __init__(self, directory=None):
        directory = Path(directory) if directory else asset_path("golden")
        self.rows = []
        self.by_family = {}
        for family in FAMILIES:
            path = directory / f"{family}.csv"
            if not path.exists():
                raise GoldenDataError(f"missing golden file {path}")
            with open(path, newline="") as fh:
                rows = [_parse_row(family, raw, path)
                        for raw in csv.DictReader(fh)]
            if not rows:
                raise GoldenDataError(f"{path}: no rows")
            self.by_family[family] = rows
            self.rows.extend(rows)
        self.by_id = {}
        for row in self.rows:
            if row.experiment_id in self.by_id:
                raise GoldenDataError(
                    f"duplicate experiment id {row.experiment_id}")
            self.by_id[row.experiment_id] = row

    def __len__(self):
        return len(self.rows)

    def experiment(self, experiment_id) -> GoldenRow:
        try:
            return self.by_id[experiment_id]
        except KeyError:
            raise UnknownExperimentError(
                f"no golden data for {experiment_id!r}") from None

    def select(self, pattern=None):
        """Rows whose id matches a glob pattern (all rows if None)."""
        if pattern is None:
            return list(self.rows)
        from fnmatch import fnmatchcase
        return [r for r in self.rows if fnmatchcase(r.experiment_id, pattern)]

    # -- empirical predictions --------------------------------------------

    def empirical(self, experiment_id):
        """Measured metrics for a known experiment id, verbatim."""
        return self.experiment(experiment_id).metrics()

    def interpolate_participants(self, id_template, n, metric):
        """Log-linear interpolation of a metric over a measured family.

        `id_template` contains `{n}` (e.g. "broadcast-latency-chip-{n}");
        all measured rows of that shape span the hull.  Returns
        (value, extrapolated): queries outside the hull clamp to the
        nearest measured point and raise the flag.
        """
        prefix, suffix = id_template.split("{n}")
        knots = []
        for row in self.rows:
            rid = row.experiment_id
            if rid.startswith(prefix) and rid.endswith(suffix):
                middle = rid[len(prefix):len(rid) - len(suffix) or None]
                if middle.isdigit():
                    value = row.metrics().get(metric)
                    if value is not None:
                        knots.append((int(middle), value))
        if len(knots) < 2:
            raise GoldenDataError(
                f"not enough measured points for {id_template} / {metric}")
        knots.sort()
        if n < 1:
            raise GoldenDataError("participant count must be positive")
        xs = [k for k, _ in knots]
        ys = [v for _, v in knots]
        if n <= xs[0]:
            return ys[0], n < xs[0]
        if n >= xs[-1]:
            return ys[-1], n > xs[-1]
        for (x0, y0), (x1, y1) in zip(knots, knots[1:]):
            if x0 <= n <= x1:
                if n == x0:
                    return y0, False
                if n == x1:
                    return y1, False
                t = (math.log(n) - math.log(x0)) / (math.log(x1) - math.log(x0))
                return y0 * (y1 / y0) ** t, False
        raise GoldenDataError("interpolation fell through")  # pragma: no cover

    def broadcast_bw_at_size(self, label, size_bytes):
        """Broadcast aggregate bandwidth (GB/s) at an arbitrary size.

        Uses the measured saturation knots of scenario `label`: the
        fraction of peak at 1 KiB, the size reaching 90% of peak, and the
        large-transfer plateau.  Between knots the fraction interpolates
        log-linearly in size; the curve flattens at peak beyond 16x the
        90% size.  Below 1 KiB is outside the hull: scaled linearly and
        flagged.
        """
        row = self.experiment(f"broadcast-frac-{label}")
        peak = row.aggregate_bw
        frac_1k = float(row.extras["pct_peak_at_1kib"]) / 100.0
        size_90 = float(row.extras["size_90pct_kib"]) * 1024.0
        if size_bytes <= 0:
            raise GoldenDataError("size must be positive")
        if size_bytes < 1024:
            return peak * frac_1k * (size_bytes / 1024.0), True
        if size_bytes <= size_90:
            t = (math.log(size_bytes) - math.log(1024.0)) \
                / (math.log(size_90) - math.log(1024.0))
            return peak * (frac_1k * (0.9 / frac_1k) ** t), False
        top = size_90 * 16.0
        if size_bytes >= top:
            return peak, False
        t = (math.log(size_bytes) - math.log(size_90)) \
            / (math.log(top) - math.log(size_90))
        return peak * (0.9 + 0.1 * t), False


_cached = None


def load_golden(directory=None) -> GoldenData:
    """Load (and cache) the packaged golden data."""
    global _cached
    if directory is not None:
        return GoldenData(directory)
    if _cached is None:
        _cached = GoldenData()
    return _cached

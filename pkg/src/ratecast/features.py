"""Feature groups and matrix assembly.

Groups, in the fixed column order used by :func:`assemble_features`:

* A  - static record fields: file size, experiment code, one-hot instrument,
       source/target file system and target host.
* B  - calendar fields derived from the start time: day of week, hour of day.
* C1 - active-transfer counts on the same experiment and instrument.
* C2 - active-transfer and distinct-experiment counts on the same target
       file system, target host and node.
* D1 - lag-1 rate and time difference per instrument/experiment/source-fs/
       target-fs key, plus overall lag-1 (rate, file size) and lag-5 (rate).
* D2 - rates of lags 1-20 on the same experiment.
* D3 - lag-1 rate, file size and time difference for the D1 keys plus
       target-host, node and chunk keys.
* E  - seconds since the first transfer of the same chunk started.

Lag-style cells with no history carry the sentinel -1 and a paired 0/1
missing-indicator column (one indicator per lag block, shared by its value
columns); trees can split on the indicator directly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .events import TransferEvent
from .lags import (
    LagInfo,
    LagKeyKind,
    compute_chunk_time_offset,
    compute_concurrency,
    compute_keyed_lags,
    _check_sorted,
)

ALL_GROUPS = ("A", "B", "C1", "C2", "D1", "D2", "D3", "E")

MISSING_SENTINEL = -1.0

ONE_HOT_FIELDS = ("instrument", "source_fs", "target_fs", "target_host", "node")

#: Static one-hot blocks that belong to group A (node is a key, not a feature).
_GROUP_A_ONE_HOT = ("instrument", "source_fs", "target_fs", "target_host")

_D1_KEYED_KINDS = (
    LagKeyKind.SAME_INSTRUMENT,
    LagKeyKind.SAME_EXPERIMENT,
    LagKeyKind.SAME_SOURCE_FS,
    LagKeyKind.SAME_TARGET_FS,
)
_D3_KINDS = _D1_KEYED_KINDS + (
    LagKeyKind.SAME_TARGET_HOST,
    LagKeyKind.SAME_NODE,
    LagKeyKind.SAME_CHUNK,
)
_D2_MAX_ORDER = 20
_C1_KINDS = (LagKeyKind.SAME_EXPERIMENT, LagKeyKind.SAME_INSTRUMENT)
_C2_KINDS = (
    LagKeyKind.SAME_TARGET_FS,
    LagKeyKind.SAME_TARGET_HOST,
    LagKeyKind.SAME_NODE,
)


@dataclass(frozen=True)
class FeatureSpec:
    """Which feature groups to assemble. Group A is always required."""

    groups: frozenset[str]

    def __post_init__(self) -> None:
        unknown = self.groups - set(ALL_GROUPS)
        if unknown:
            raise ValueError(f"unknown feature groups: {sorted(unknown)}")
        if "A" not in self.groups:
            raise ValueError("group A (static fields) must be enabled")

    @classmethod
    def parse(cls, text: str) -> "FeatureSpec":
        names = [g.strip() for g in text.split(",") if g.strip()]
        return cls(groups=frozenset(names))

    def sorted_groups(self) -> list[str]:
        return [g for g in ALL_GROUPS if g in self.groups]


@dataclass(frozen=True)
class ColumnMeta:
    """Name, group tag and encoding origin of one feature column."""

    name: str
    group: str
    origin: str


@dataclass
class FeatureMatrix:
    """Row-per-event numeric matrix with per-cell missingness and column metadata."""

    values: np.ndarray
    missing_mask: np.ndarray
    columns: list[ColumnMeta]
    event_ids: np.ndarray

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.column_names.index(name)
        except ValueError:
            raise KeyError(name) from None
        return self.values[:, idx]


def compute_time_features(
    event: TransferEvent, tz_offset_hours: float = 0.0
) -> tuple[int, int]:
    """(day_of_week, hour_of_day) of the start time; day 0 is Monday.

    A fixed UTC offset shifts the clock; no daylight-saving rules are applied.
    """
    shifted = event.start_time + int(round(tz_offset_hours * 3600.0))
    days, seconds = divmod(shifted, 86400)
    day_of_week = (days + 3) % 7  # 1970-01-01 was a Thursday
    return int(day_of_week), int(seconds // 3600)


class CategoricalEncoder:
    """One-hot and category-code encodings frozen on a training event set.

    Categories are recorded in order of first appearance, which makes the
    encoding deterministic. Transforming an event whose value was never seen
    yields an all-zero one-hot block, and code -1 for the experiment field.
    """

    def __init__(self) -> None:
        self.categories: dict[str, list[str]] = {}
        self.experiment_codes: dict[str, int] = {}
        self._fitted = False

    def fit(self, events: Sequence[TransferEvent]) -> "CategoricalEncoder":
        self.categories = {f: [] for f in ONE_HOT_FIELDS}
        seen: dict[str, set[str]] = {f: set() for f in ONE_HOT_FIELDS}
        self.experiment_codes = {}
        for e in events:
            for f in ONE_HOT_FIELDS:
                value = getattr(e, f)
                if value not in seen[f]:
                    seen[f].add(value)
                    self.categories[f].append(value)
            if e.experiment not in self.experiment_codes:
                self.experiment_codes[e.experiment] = len(self.experiment_codes)
        self._fitted = True
        return self

    def _require_fitted(self) -> None:
        if not self._fitted:
            raise ValueError("encoder is not fitted")

    def one_hot(self, events: Sequence[TransferEvent], field_name: str) -> np.ndarray:
        """(n, n_categories) block; rows with unseen values are all zero."""
        self._require_fitted()
        cats = self.categories[field_name]
        index = {v: i for i, v in enumerate(cats)}
        block = np.zeros((len(events), len(cats)))
        for row, e in enumerate(events):
            col = index.get(getattr(e, field_name))
            if col is not None:
                block[row, col] = 1.0
        return block

    def experiment_code(self, events: Sequence[TransferEvent]) -> np.ndarray:
        self._require_fitted()
        return np.array(
            [float(self.experiment_codes.get(e.experiment, -1)) for e in events]
        )


def encode_categoricals(
    events: Sequence[TransferEvent],
) -> tuple[np.ndarray, list[ColumnMeta], CategoricalEncoder]:
    """Fit an encoder on ``events`` and return its stacked column blocks."""
    encoder = CategoricalEncoder().fit(events)
    blocks: list[np.ndarray] = [encoder.experiment_code(events)[:, None]]
    metas: list[ColumnMeta] = [
        ColumnMeta("A.experiment_code", "A", "category_code:experiment")
    ]
    for field_name in ONE_HOT_FIELDS:
        block = encoder.one_hot(events, field_name)
        blocks.append(block)
        for value in encoder.categories[field_name]:
            metas.append(
                ColumnMeta(
                    f"A.{field_name}.{value}", "A", f"one_hot:{field_name}={value}"
                )
            )
    return np.hstack(blocks) if events else np.zeros((0, len(metas))), metas, encoder


class _MatrixBuilder:
    def __init__(self, n_rows: int):
        self.n = n_rows
        self.cols: list[np.ndarray] = []
        self.mask: list[np.ndarray] = []
        self.meta: list[ColumnMeta] = []

    def add(
        self,
        name: str,
        group: str,
        origin: str,
        values: np.ndarray,
        missing: np.ndarray | None = None,
    ) -> None:
        values = np.asarray(values, dtype=float)
        if missing is None:
            missing = np.zeros(self.n, dtype=bool)
        out = values.copy()
        out[missing] = MISSING_SENTINEL
        self.cols.append(out)
        self.mask.append(missing.astype(bool))
        self.meta.append(ColumnMeta(name, group, origin))

    def add_indicator(self, name: str, group: str, missing: np.ndarray) -> None:
        self.cols.append(missing.astype(float))
        self.mask.append(np.zeros(self.n, dtype=bool))
        self.meta.append(ColumnMeta(name, group, "indicator"))

    def finish(self, event_ids: np.ndarray) -> FeatureMatrix:
        if self.cols:
            values = np.column_stack(self.cols)
            mask = np.column_stack(self.mask)
        else:
            values = np.zeros((self.n, 0))
            mask = np.zeros((self.n, 0), dtype=bool)
        return FeatureMatrix(
            values=values, missing_mask=mask, columns=self.meta, event_ids=event_ids
        )


def _lag_arrays(
    lag_maps: list[dict[int, LagInfo]], order: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    n = len(lag_maps)
    rate = np.empty(n)
    size = np.empty(n)
    tdiff = np.empty(n)
    missing = np.empty(n, dtype=bool)
    for i, per_order in enumerate(lag_maps):
        info = per_order[order]
        missing[i] = not info.present
        rate[i] = info.transfer_rate_mbs
        size[i] = info.file_size_gb
        tdiff[i] = info.time_diff_s
    return rate, size, tdiff, missing


def _needed_lag_orders(spec: FeatureSpec) -> dict[LagKeyKind, set[int]]:
    needed: dict[LagKeyKind, set[int]] = {}

    def want(kind: LagKeyKind, order: int) -> None:
        needed.setdefault(kind, set()).add(order)

    if "D1" in spec.groups:
        for kind in _D1_KEYED_KINDS:
            want(kind, 1)
        want(LagKeyKind.OVERALL, 1)
        want(LagKeyKind.OVERALL, 5)
    if "D2" in spec.groups:
        for order in range(1, _D2_MAX_ORDER + 1):
            want(LagKeyKind.SAME_EXPERIMENT, order)
    if "D3" in spec.groups:
        for kind in _D3_KINDS:
            want(kind, 1)
    return needed


def assemble_features(
    events: Sequence[TransferEvent],
    spec: FeatureSpec,
    tz_offset_hours: float = 0.0,
) -> FeatureMatrix:
    """Build the feature matrix for cleaned, start-sorted events.

    Row i is derived from event i's own static fields plus transfers that
    finished strictly before event i started (lags) or that had started by
    then (concurrency, chunk timing); perturbing any later-starting event
    leaves row i unchanged.
    """
    _check_sorted(events)
    n = len(events)
    builder = _MatrixBuilder(n)

    lag_results: dict[LagKeyKind, list[dict[int, LagInfo]]] = {}
    for kind, orders in _needed_lag_orders(spec).items():
        lag_results[kind] = compute_keyed_lags(events, kind, orders)

    # Group A
    builder.add(
        "A.file_size",
        "A",
        "numeric:file_size_gb",
        np.array([e.file_size_gb for e in events]),
    )
    encoded, metas, _ = encode_categoricals(events)
    for j, meta in enumerate(metas):
        if meta.origin.startswith("one_hot:"):
            field_name = meta.origin.split(":", 1)[1].split("=", 1)[0]
            if field_name not in _GROUP_A_ONE_HOT:
                continue
        column = encoded[:, j] if n else np.zeros(0)
        builder.add(meta.name, "A", meta.origin, column)

    # Group B
    if "B" in spec.groups:
        dows = np.empty(n)
        hours = np.empty(n)
        for i, e in enumerate(events):
            dows[i], hours[i] = compute_time_features(e, tz_offset_hours)
        builder.add("B.day_of_week", "B", "calendar:day_of_week", dows)
        builder.add("B.hour_of_day", "B", "calendar:hour_of_day", hours)

    # Groups C1/C2
    if "C1" in spec.groups:
        for kind in _C1_KINDS:
            counts = compute_concurrency(events, kind)
            builder.add(
                f"C1.{kind.value}.active_jobs",
                "C1",
                f"concurrency:{kind.value}:total",
                counts.total.astype(float),
            )
    if "C2" in spec.groups:
        for kind in _C2_KINDS:
            counts = compute_concurrency(events, kind)
            builder.add(
                f"C2.{kind.value}.active_jobs",
                "C2",
                f"concurrency:{kind.value}:total",
                counts.total.astype(float),
            )
            builder.add(
                f"C2.{kind.value}.unique_experiments",
                "C2",
                f"concurrency:{kind.value}:unique_experiments",
                counts.unique_experiments.astype(float),
            )

    # Group D1
    if "D1" in spec.groups:
        for kind in _D1_KEYED_KINDS:
            rate, _, tdiff, missing = _lag_arrays(lag_results[kind], 1)
            prefix = f"D1.{kind.value}.lag1"
            builder.add(f"{prefix}.rate", "D1", f"lag:{kind.value}:1:rate", rate, missing)
            builder.add(
                f"{prefix}.time_diff", "D1", f"lag:{kind.value}:1:time_diff", tdiff, missing
            )
            builder.add_indicator(f"{prefix}.missing", "D1", missing)
        rate, size, _, missing = _lag_arrays(lag_results[LagKeyKind.OVERALL], 1)
        builder.add("D1.overall.lag1.rate", "D1", "lag:overall:1:rate", rate, missing)
        builder.add(
            "D1.overall.lag1.file_size", "D1", "lag:overall:1:file_size", size, missing
        )
        builder.add_indicator("D1.overall.lag1.missing", "D1", missing)
        rate, _, _, missing = _lag_arrays(lag_results[LagKeyKind.OVERALL], 5)
        builder.add("D1.overall.lag5.rate", "D1", "lag:overall:5:rate", rate, missing)
        builder.add_indicator("D1.overall.lag5.missing", "D1", missing)

    # Group D2
    if "D2" in spec.groups:
        for order in range(1, _D2_MAX_ORDER + 1):
            rate, _, _, missing = _lag_arrays(
                lag_results[LagKeyKind.SAME_EXPERIMENT], order
            )
            prefix = f"D2.same_experiment.lag{order}"
            builder.add(
                f"{prefix}.rate", "D2", f"lag:same_experiment:{order}:rate", rate, missing
            )
            builder.add_indicator(f"{prefix}.missing", "D2", missing)

    # Group D3
    if "D3" in spec.groups:
        for kind in _D3_KINDS:
            rate, size, tdiff, missing = _lag_arrays(lag_results[kind], 1)
            prefix = f"D3.{kind.value}.lag1"
            builder.add(f"{prefix}.rate", "D3", f"lag:{kind.value}:1:rate", rate, missing)
            builder.add(
                f"{prefix}.file_size", "D3", f"lag:{kind.value}:1:file_size", size, missing
            )
            builder.add(
                f"{prefix}.time_diff", "D3", f"lag:{kind.value}:1:time_diff", tdiff, missing
            )
            builder.add_indicator(f"{prefix}.missing", "D3", missing)

    # Group E
    if "E" in spec.groups:
        offsets, missing = compute_chunk_time_offset(events)
        builder.add("E.chunk_time_offset", "E", "chunk_offset", offsets, missing)
        builder.add_indicator("E.chunk_time_offset.missing", "E", missing)

    ids = np.array([e.id for e in events], dtype=np.int64)
    return builder.finish(ids)


def _fmt(value: float) -> str:
    return format(value, ".17g")


def write_feature_csv(
    matrix: FeatureMatrix,
    targets: np.ndarray,
    sink: IO[str],
    meta_sink: IO[str] | None = None,
    extra_meta: dict | None = None,
) -> None:
    """Export the matrix as CSV plus a sidecar JSON of column metadata.

    Layout: ``meta.event_id``, one column per feature (named ``group.feature``),
    then ``target.transfer_rate_mbs``.
    """
    if len(targets) != matrix.values.shape[0]:
        raise ValueError("targets length does not match matrix rows")
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["meta.event_id", *matrix.column_names, "target.transfer_rate_mbs"])
    for i in range(matrix.values.shape[0]):
        writer.writerow(
            [
                str(int(matrix.event_ids[i])),
                *(_fmt(v) for v in matrix.values[i]),
                _fmt(float(targets[i])),
            ]
        )
    if meta_sink is not None:
        payload = {
            "format_version": 1,
            "n_rows": int(matrix.values.shape[0]),
            "column_meta": [
                {"name": c.name, "group": c.group, "origin": c.origin}
                for c in matrix.columns
            ],
        }
        if extra_meta:
            payload.update(extra_meta)
        json.dump(payload, meta_sink, indent=2, sort_keys=True)
        meta_sink.write("\n")


def read_feature_csv(
    source: IO[str],
) -> tuple[np.ndarray, list[str], np.ndarray, np.ndarray]:
    """Load an exported matrix: (X, feature_names, event_ids, targets)."""
    reader = csv.reader(source)
    header = next(reader)
    if not header or header[0] != "meta.event_id" or header[-1] != "target.transfer_rate_mbs":
        raise ValueError("not a feature matrix CSV (bad header)")
    names = header[1:-1]
    ids: list[int] = []
    rows: list[list[float]] = []
    targets: list[float] = []
    for row in reader:
        if not row:
            continue
        ids.append(int(row[0]))
        rows.append([float(v) for v in row[1:-1]])
        targets.append(float(row[-1]))
    X = np.array(rows) if rows else np.zeros((0, len(names)))
    return X, names, np.array(ids, dtype=np.int64), np.array(targets)

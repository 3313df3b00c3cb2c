"""Sweep-line derivations over start-ordered transfer events.

Three families of dynamic features share the same machinery:

* keyed lags: statistics of the most recently *finished* transfers sharing
  an attribute with the current one (``compute_keyed_lags``),
* concurrency: how many transfers on the same resource are still running
  when the current one starts (``compute_concurrency``),
* chunk timing: seconds since the first transfer of the same chunk started
  (``compute_chunk_time_offset``).

All of them only look at information available when a transfer starts, so
feature rows never leak data from the future.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

import numpy as np

from .events import TransferEvent
from .filenames import FilenameParseError, parse_filename


class LagKeyKind(enum.Enum):
    """Attribute two transfers must share to count as lag/concurrency peers."""

    OVERALL = "overall"
    SAME_INSTRUMENT = "same_instrument"
    SAME_EXPERIMENT = "same_experiment"
    SAME_SOURCE_FS = "same_source_fs"
    SAME_TARGET_FS = "same_target_fs"
    SAME_TARGET_HOST = "same_target_host"
    SAME_NODE = "same_node"
    SAME_CHUNK = "same_chunk"


def lag_key(event: TransferEvent, kind: LagKeyKind) -> Hashable | None:
    """Key value of ``event`` under ``kind``; None means unkeyed.

    Only SAME_CHUNK can be unkeyed: it requires a parseable file name and
    keys on (experiment, run, chunk) so all streams of a chunk match.
    """
    if kind is LagKeyKind.OVERALL:
        return ()
    if kind is LagKeyKind.SAME_INSTRUMENT:
        return event.instrument
    if kind is LagKeyKind.SAME_EXPERIMENT:
        return event.experiment
    if kind is LagKeyKind.SAME_SOURCE_FS:
        return event.source_fs
    if kind is LagKeyKind.SAME_TARGET_FS:
        return event.target_fs
    if kind is LagKeyKind.SAME_TARGET_HOST:
        return event.target_host
    if kind is LagKeyKind.SAME_NODE:
        return event.node
    if kind is LagKeyKind.SAME_CHUNK:
        try:
            parts = parse_filename(event.file_name)
        except FilenameParseError:
            return None
        return (parts.experiment_num, parts.run_num, parts.chunk_num)
    raise ValueError(f"unknown kind {kind!r}")


@dataclass(frozen=True)
class LagInfo:
    """What the l-th most recently finished matching transfer looked like.

    ``time_diff_s`` is current start minus the lag's stop; it is strictly
    positive whenever ``present`` because only transfers that finished before
    the current one starts qualify.
    """

    present: bool
    transfer_rate_mbs: float
    file_size_gb: float
    time_diff_s: float


ABSENT_LAG = LagInfo(False, math.nan, math.nan, math.nan)


def _check_sorted(events: Sequence[TransferEvent]) -> None:
    prev: tuple[int, int, int] | None = None
    for e in events:
        key = (e.start_time, e.stop_time, e.id)
        if prev is not None and key < prev:
            raise ValueError(
                "events must be in sort_by_start order (start_time, stop_time, id)"
            )
        prev = key


def compute_keyed_lags(
    events: Sequence[TransferEvent],
    kind: LagKeyKind,
    orders: Iterable[int],
) -> list[dict[int, LagInfo]]:
    """Lag statistics for every event, one pass, O(n log n).

    For event i and order l, the lag is the l-th most recent event j with the
    same key that finished strictly before i started (stop_time(j) <
    start_time(i)), ranking candidates by stop_time descending with ties
    broken by larger id first. Orders with too little history are returned
    with ``present=False``.

    The sweep walks events in start order keeping a min-heap of in-flight
    transfers; popping (stop_time, id) ascending appends each finished
    transfer to its key's history list, which therefore stays sorted so the
    l-th most recent is just ``history[-l]``.
    """
    order_list = sorted(set(int(o) for o in orders))
    if not order_list or order_list[0] < 1:
        raise ValueError("orders must be positive integers")
    _check_sorted(events)

    histories: dict[Hashable, list[TransferEvent]] = {}
    in_flight: list[tuple[int, int, TransferEvent]] = []
    results: list[dict[int, LagInfo]] = []
    for e in events:
        while in_flight and in_flight[0][0] < e.start_time:
            _, _, done = heapq.heappop(in_flight)
            done_key = lag_key(done, kind)
            if done_key is not None:
                histories.setdefault(done_key, []).append(done)
        key = lag_key(e, kind)
        history = histories.get(key, []) if key is not None else []
        per_order: dict[int, LagInfo] = {}
        for order in order_list:
            if len(history) >= order:
                j = history[-order]
                per_order[order] = LagInfo(
                    present=True,
                    transfer_rate_mbs=j.transfer_rate_mbs,
                    file_size_gb=j.file_size_gb,
                    time_diff_s=float(e.start_time - j.stop_time),
                )
            else:
                per_order[order] = ABSENT_LAG
        results.append(per_order)
        heapq.heappush(in_flight, (e.stop_time, e.id, e))
    return results


@dataclass(frozen=True)
class ConcurrencyCounts:
    """Per-event counts of other transfers active on the same resource."""

    total: np.ndarray
    unique_experiments: np.ndarray


def compute_concurrency(
    events: Sequence[TransferEvent], kind: LagKeyKind
) -> ConcurrencyCounts:
    """Count other same-key transfers running when each event starts.

    Event j is active for event i when start_time(j) <= start_time(i) <
    stop_time(j) and j != i. ``unique_experiments`` counts distinct
    experiment values among those j. Unkeyed events get zero counts.

    Events sharing a start time see each other, so the sweep processes each
    key group in batches of equal start: expire finished transfers, admit the
    whole batch, then subtract each member's own contribution.
    """
    _check_sorted(events)
    n = len(events)
    total = np.zeros(n, dtype=np.int64)
    unique = np.zeros(n, dtype=np.int64)

    groups: dict[Hashable, list[int]] = {}
    for idx, e in enumerate(events):
        key = lag_key(e, kind)
        if key is not None:
            groups.setdefault(key, []).append(idx)

    for indices in groups.values():
        heap: list[tuple[int, str]] = []  # (stop_time, experiment) of active events
        exp_counts: dict[str, int] = {}
        n_active = 0
        n_distinct = 0
        pos = 0
        while pos < len(indices):
            start = events[indices[pos]].start_time
            batch_end = pos
            while (
                batch_end < len(indices)
                and events[indices[batch_end]].start_time == start
            ):
                batch_end += 1
            while heap and heap[0][0] <= start:
                _, exp = heapq.heappop(heap)
                n_active -= 1
                exp_counts[exp] -= 1
                if exp_counts[exp] == 0:
                    n_distinct -= 1
            for bi in range(pos, batch_end):
                e = events[indices[bi]]
                if e.stop_time > start:
                    heapq.heappush(heap, (e.stop_time, e.experiment))
                    n_active += 1
                    exp_counts[e.experiment] = exp_counts.get(e.experiment, 0) + 1
                    if exp_counts[e.experiment] == 1:
                        n_distinct += 1
            for bi in range(pos, batch_end):
                idx = indices[bi]
                e = events[idx]
                if e.stop_time > start:
                    total[idx] = n_active - 1
                    unique[idx] = n_distinct - (1 if exp_counts[e.experiment] == 1 else 0)
                else:
                    total[idx] = n_active
                    unique[idx] = n_distinct
            pos = batch_end
    return ConcurrencyCounts(total=total, unique_experiments=unique)


def compute_chunk_time_offset(
    events: Sequence[TransferEvent],
) -> tuple[np.ndarray, np.ndarray]:
    """Seconds between each event's start and its chunk's earliest start.

    Chunks are keyed by (experiment, run, chunk) from the file name. Returns
    (offsets, missing): events whose file name does not parse get a missing
    flag and a NaN offset; the chunk's first job gets 0.
    """
    n = len(events)
    offsets = np.full(n, np.nan)
    missing = np.ones(n, dtype=bool)
    first_start: dict[Hashable, int] = {}
    keys: list[Hashable | None] = []
    for e in events:
        key = lag_key(e, LagKeyKind.SAME_CHUNK)
        keys.append(key)
        if key is not None:
            seen = first_start.get(key)
            if seen is None or e.start_time < seen:
                first_start[key] = e.start_time
    for idx, e in enumerate(events):
        key = keys[idx]
        if key is not None:
            offsets[idx] = float(e.start_time - first_start[key])
            missing[idx] = False
    return offsets, missing

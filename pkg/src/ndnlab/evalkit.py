"""Metrics over the log store: goodput, interest RTT, link-delay series, exports.

Everything here is a pure computation over a store snapshot; per-repetition
evaluation can run in parallel. Consumer throughput is data-bytes goodput
(what the data receiver actually got); the producer-side interest arrival
rate is available as a separate series. Forwarder debug records (severity 7)
are excluded from metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

THROUGHPUT_MBPS = "throughput_mbps"
RTT_MS = "rtt_ms"
LINK_DELAY_MS = "link_delay_ms"
INTEREST_RATE = "interest_rate_per_s"
TABLE_SIZES = "table_sizes"
PHASE_RUNTIME_S = "phase_runtime_s"

METRICS = (THROUGHPUT_MBPS, RTT_MS, LINK_DELAY_MS, INTEREST_RATE, TABLE_SIZES, PHASE_RUNTIME_S)

PROBE_INTERVAL_S = 5.0
_METRIC_SEVERITY_MAX = 6  # keep debug-level forwarder chatter out of metrics

CSV_HEADER = "metric,subject,bucket_start,value"


@dataclass(slots=True)
class MetricSeries:
    metric: str
    subject: str
    bucket_s: float
    points: list = field(default_factory=list)  # [(bucket_start_s, value)]

    def values(self):
        return [v for _, v in self.points]


@dataclass(slots=True)
class RunSummary:
    repetition: int
    series: list
    aggregates: dict  # metric -> subject -> {"mean": .., "stddev": .., "count": ..}

    def find(self, metric, subject=None):
        for s in self.series:
            if s.metric == metric and (subject is None or s.subject == subject):
                return s
        return None

    def to_document(self):
        # NaN marks a lost probe round; JSON carries it as null
        return {
            "repetition": self.repetition,
            "series": [
                {
                    "metric": s.metric,
                    "subject": s.subject,
                    "bucket_s": s.bucket_s,
                    "points": [[t, None if math.isnan(v) else v] for t, v in s.points],
                }
                for s in self.series
            ],
            "aggregates": self.aggregates,
        }


def _msg_records(store, host, prefix):
    # emulated stores index records by host label; live stores fall back to a scan
    base = getattr(store, "_by_source", {}).get(host)
    if base is None:
        base = store.records
    return [
        r
        for r in base
        if r.host == host and r.severity <= _METRIC_SEVERITY_MAX and r.msg.startswith(prefix)
    ]


def _bucket_count(duration_s, bucket_s):
    return max(0, math.ceil(duration_s / bucket_s - 1e-9))


def compute_throughput(store, node, bucket_s=1.0, duration_s=None):
    """Goodput series in Mb/s from "data NAME BYTES" records at a node.

    Buckets without traffic report 0; the series spans ceil(duration/bucket)
    points when a duration is given, otherwise up to the last record seen.
    """
    if bucket_s <= 0:
        raise ValueError("bucket width must be positive")
    totals = {}
    last = -1
    for r in _msg_records(store, node, "data "):
        idx = int(r.received_at // bucket_s)
        totals[idx] = totals.get(idx, 0) + int(r.msg.rsplit(" ", 1)[1])
        if idx > last:
            last = idx
    n = _bucket_count(duration_s, bucket_s) if duration_s is not None else last + 1
    points = [(i * bucket_s, totals.get(i, 0) * 8.0 / bucket_s / 1e6) for i in range(n)]
    return MetricSeries(THROUGHPUT_MBPS, node, bucket_s, points)


def compute_interest_rate(store, node, bucket_s=1.0, duration_s=None):
    """Interest arrivals per second at a node, from "interest NAME NONCE" records."""
    if bucket_s <= 0:
        raise ValueError("bucket width must be positive")
    counts = {}
    last = -1
    for r in _msg_records(store, node, "interest "):
        idx = int(r.received_at // bucket_s)
        counts[idx] = counts.get(idx, 0) + 1
        if idx > last:
            last = idx
    n = _bucket_count(duration_s, bucket_s) if duration_s is not None else last + 1
    points = [(i * bucket_s, counts.get(i, 0) / bucket_s) for i in range(n)]
    return MetricSeries(INTEREST_RATE, node, bucket_s, points)


def compute_rtt(store, node, bucket_s=1.0):
    """Per-bucket mean of "rtt NAME MS" samples at a node; empty when none."""
    if bucket_s <= 0:
        raise ValueError("bucket width must be positive")
    sums = {}
    counts = {}
    for r in _msg_records(store, node, "rtt "):
        idx = int(r.received_at // bucket_s)
        sums[idx] = sums.get(idx, 0.0) + float(r.msg.rsplit(" ", 1)[1])
        counts[idx] = counts.get(idx, 0) + 1
    points = [(i * bucket_s, sums[i] / counts[i]) for i in sorted(sums)]
    return MetricSeries(RTT_MS, node, bucket_s, points)


def compute_link_delay(store, link):
    """One point per probe round for a link; lost rounds carry NaN, not zero."""
    base = getattr(store, "_by_source", {}).get("controller")
    if base is None:
        base = store.records
    points = []
    for r in base:
        if r.severity > _METRIC_SEVERITY_MAX or not r.msg.startswith("probe "):
            continue
        fields = r.msg.split(" ")
        if len(fields) != 3 or fields[1] != link:
            continue
        round_start = round(r.received_at / PROBE_INTERVAL_S) * PROBE_INTERVAL_S
        value = math.nan if fields[2] == "loss" else float(fields[2])
        points.append((round_start, value))
    return MetricSeries(LINK_DELAY_MS, link, PROBE_INTERVAL_S, points)


def windowed_mean(series, start_s, end_s):
    """Mean of bucket values whose bucket start falls in [start_s, end_s)."""
    vals = [v for t, v in series.points if start_s <= t < end_s and not math.isnan(v)]
    return sum(vals) / len(vals) if vals else 0.0


def _mean_stddev(values):
    clean = [v for v in values if not math.isnan(v)]
    if not clean:
        return {"mean": 0.0, "stddev": 0.0, "count": 0}
    mean = sum(clean) / len(clean)
    var = sum((v - mean) ** 2 for v in clean) / len(clean)
    return {"mean": mean, "stddev": math.sqrt(var), "count": len(clean)}


def summarize(series_list, repetition=0):
    """Bundle series with recomputable whole-run aggregates."""
    aggregates = {}
    for s in series_list:
        aggregates.setdefault(s.metric, {})[s.subject] = _mean_stddev(s.values())
    return RunSummary(repetition=repetition, series=list(series_list), aggregates=aggregates)


def export_csv(series_list):
    """Deterministic CSV rendering: one row per point, series in input order."""
    lines = [CSV_HEADER]
    for s in series_list:
        for t, v in s.points:
            lines.append(f"{s.metric},{s.subject},{t:.6f},{v:.6f}")
    return "\n".join(lines) + "\n"

"""Activity aggregation, normalization, export, and profile comparison.

A run produces one :class:`ActivityTrace`: per-millisecond sums of the
board's excitatory rates split into three categories — gating circuitry,
working memory, and everything else — plus the onset time of each token.
The total is the exact sum of the three parts at every tick.

All functions here are pure; none import the simulation layers.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

__all__ = [
    "ActivityTrace",
    "ProfileComparison",
    "normalize_peak",
    "relative_sums",
    "export_trace",
    "read_trace",
    "word_window_means",
    "local_maxima",
    "compare_profile",
    "mean_profile",
]

_CSV_HEADER = ["t_ms", "total", "gating", "wm", "other", "word_marker"]


@dataclass(frozen=True)
class ActivityTrace:
    """Per-tick category activity sums for one run.

    ``times`` holds the tick timestamps (ms); ``gating``, ``wm`` and
    ``other`` the summed excitatory rates (spikes/ms) of the three board
    categories. ``word_onsets``/``word_labels`` mark where each token's
    input window began. ``size`` is the board's pair count and
    ``fingerprint`` identifies the parameter set that produced the run.
    """

    times: np.ndarray
    gating: np.ndarray
    wm: np.ndarray
    other: np.ndarray
    word_onsets: tuple[float, ...]
    word_labels: tuple[str, ...]
    size: int
    fingerprint: str

    def __post_init__(self):
        if not (len(self.times) == len(self.gating)
                == len(self.wm) == len(self.other)):
            raise ValueError("trace arrays must share one length")
        if len(self.word_onsets) != len(self.word_labels):
            raise ValueError("one label per word onset required")

    @property
    def total(self) -> np.ndarray:
        """Summed activity; by construction gating + wm + other exactly."""
        return self.gating + self.wm + self.other

    def sums(self) -> dict[str, float]:
        """Time-summed activity per category (and their total)."""
        g = float(self.gating.sum())
        w = float(self.wm.sum())
        o = float(self.other.sum())
        return {"total": g + w + o, "gating": g, "wm": w, "other": o}

    def series(self, name: str) -> np.ndarray:
        if name == "total":
            return self.total
        if name in ("gating", "wm", "other"):
            return getattr(self, name)
        raise KeyError(f"unknown series {name!r}")


def normalize_peak(trace_or_series, peak: float = 100.0):
    """Scale so the maximum of the (total) series equals ``peak``.

    Arrays are scaled directly; traces are scaled by the peak of their
    total, the same factor applied to every category so the partition
    still sums exactly.
    """
    if isinstance(trace_or_series, ActivityTrace):
        top = float(trace_or_series.total.max())
        if top <= 0.0:
            return trace_or_series
        k = peak / top
        return replace(trace_or_series,
                       gating=trace_or_series.gating * k,
                       wm=trace_or_series.wm * k,
                       other=trace_or_series.other * k)
    arr = np.asarray(trace_or_series, dtype=float)
    top = float(arr.max()) if arr.size else 0.0
    if top <= 0.0:
        return arr.copy()
    return arr * (peak / top)


def relative_sums(traces: list[ActivityTrace],
                  baseline: int = 0) -> dict[str, list[float]]:
    """Per-category summed activity of each trace relative to a baseline."""
    if not 0 <= baseline < len(traces):
        raise IndexError("baseline index out of range")
    base = traces[baseline].sums()
    out: dict[str, list[float]] = {k: [] for k in base}
    for tr in traces:
        s = tr.sums()
        for k in base:
            out[k].append(s[k] / base[k] if base[k] else float("nan"))
    return out


def export_trace(trace: ActivityTrace, path) -> Path:
    """Write a trace as CSV; the header comment carries size + parameters."""
    path = Path(path)
    buf = io.StringIO()
    buf.write(f"# size={trace.size} fingerprint={trace.fingerprint}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_HEADER)
    markers = {round(t, 6): label
               for t, label in zip(trace.word_onsets, trace.word_labels)}
    total = trace.total
    for i, t in enumerate(trace.times):
        writer.writerow([
            f"{t:.3f}", f"{total[i]:.6f}", f"{trace.gating[i]:.6f}",
            f"{trace.wm[i]:.6f}", f"{trace.other[i]:.6f}",
            markers.get(round(float(t), 6), ""),
        ])
    path.write_text(buf.getvalue())
    return path


def read_trace(path) -> ActivityTrace:
    """Load a CSV written by :func:`export_trace`."""
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("#"):
        raise ValueError(f"{path}: missing trace header")
    meta = dict(part.split("=", 1) for part in text[0][1:].split())
    rows = list(csv.reader(text[1:]))
    if not rows or rows[0] != _CSV_HEADER:
        raise ValueError(f"{path}: unexpected column header")
    body = rows[1:]
    times = np.array([float(r[0]) for r in body])
    gating = np.array([float(r[2]) for r in body])
    wm = np.array([float(r[3]) for r in body])
    other = np.array([float(r[4]) for r in body])
    onsets = [(float(r[0]), r[5]) for r in body if r[5]]
    return ActivityTrace(
        times=times, gating=gating, wm=wm, other=other,
        word_onsets=tuple(t for t, _ in onsets),
        word_labels=tuple(label for _, label in onsets),
        size=int(meta["size"]), fingerprint=meta["fingerprint"],
    )


def word_window_means(trace: ActivityTrace, series: str = "total",
                      window_ms: float | None = None) -> np.ndarray:
    """Mean of a series over each word's input window.

    ``window_ms`` defaults to the spacing between onsets (the last window
    extends by the median spacing).
    """
    if not trace.word_onsets:
        return np.empty(0)
    onsets = np.asarray(trace.word_onsets, dtype=float)
    if window_ms is None:
        spacing = np.diff(onsets)
        window_ms = float(np.median(spacing)) if spacing.size else (
            float(trace.times[-1]) - onsets[0])
    vals = trace.series(series)
    out = np.empty(len(onsets))
    for i, t0 in enumerate(onsets):
        sel = (trace.times >= t0) & (trace.times < t0 + window_ms)
        out[i] = float(vals[sel].mean()) if sel.any() else 0.0
    return out


def local_maxima(series) -> list[int]:
    """Indices that are strictly above both neighbours (ends excluded)."""
    arr = np.asarray(series, dtype=float)
    return [i for i in range(1, len(arr) - 1)
            if arr[i] > arr[i - 1] and arr[i] > arr[i + 1]]


@dataclass(frozen=True)
class ProfileComparison:
    """Peak coincidence between a per-word series and a reference series."""

    word_values: tuple[float, ...]
    reference: tuple[float, ...]
    peaks: tuple[int, ...]            # word positions of series maxima
    reference_peaks: tuple[int, ...]
    matches: tuple[tuple[int, int | None], ...]  # ref peak -> series peak
    flat: bool

    @property
    def all_matched(self) -> bool:
        return all(hit is not None for _, hit in self.matches)

    def render(self, labels: tuple[str, ...] | None = None) -> str:
        lines = []
        if self.flat:
            lines.append("series verdict: flat (no internal peaks)")
        for ref, hit in self.matches:
            where = (labels[ref] if labels else f"position {ref}")
            if hit is None:
                lines.append(f"reference peak at {where}: no series peak "
                             "within one word")
            else:
                lines.append(f"reference peak at {where}: series peak at "
                             f"position {hit} (|delta| = {abs(hit - ref)})")
        return "\n".join(lines) or "no reference peaks"


def compare_profile(word_values, reference,
                    tolerance: int = 1) -> ProfileComparison:
    """Match reference-series peaks against series peaks within ±tolerance.

    ``word_values`` may be an :class:`ActivityTrace` (its per-word total
    means are used) or a per-word value sequence of the same length as
    ``reference``. A series with no internal local maxima is reported flat
    and matches nothing.
    """
    if isinstance(word_values, ActivityTrace):
        word_values = word_window_means(word_values, "total")
    vals = np.asarray(word_values, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if len(vals) != len(ref):
        raise ValueError("series and reference must have equal length")
    peaks = local_maxima(vals)
    ref_peaks = local_maxima(ref)
    matches = []
    for rp in ref_peaks:
        near = [p for p in peaks if abs(p - rp) <= tolerance]
        matches.append((rp, min(near, key=lambda p: abs(p - rp))
                        if near else None))
    return ProfileComparison(
        word_values=tuple(float(v) for v in vals),
        reference=tuple(float(v) for v in ref),
        peaks=tuple(peaks), reference_peaks=tuple(ref_peaks),
        matches=tuple(matches), flat=not peaks,
    )


def mean_profile(traces: list[ActivityTrace]) -> np.ndarray:
    """Unweighted mean of peak-normalized totals across same-length runs."""
    if not traces:
        raise ValueError("no traces to average")
    length = len(traces[0].times)
    if any(len(tr.times) != length for tr in traces):
        raise ValueError("traces must share one timeline to average")
    stack = np.stack([normalize_peak(tr.total) for tr in traces])
    return stack.mean(axis=0)

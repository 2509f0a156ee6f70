"""Static SVG charts rendered as a pure function of metric records.

No plotting dependency: the SVG text is emitted directly with fixed float
formatting, so identical records always yield byte-identical files.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

from .metrics import GroupedSeries, MetricRecord, group_project, rank_records

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#17becf")

_W, _H = 640, 400
_MARGIN = {"left": 70, "right": 20, "top": 40, "bottom": 55}


def _f(x: float) -> str:
    return f"{x:.2f}"


def _nice_num(x: float, round_down: bool) -> float:
    exp = math.floor(math.log10(x)) if x > 0 else 0
    frac = x / 10**exp
    if round_down:
        nice = 1.0 if frac < 1.5 else 2.0 if frac < 3.0 else 5.0 if frac < 7.0 else 10.0
    else:
        nice = 1.0 if frac <= 1.0 else 2.0 if frac <= 2.0 else 5.0 if frac <= 5.0 else 10.0
    return nice * 10**exp


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + (abs(lo) or 1.0)
    step = _nice_num((hi - lo) / max(n - 1, 1), True)
    t = math.floor(lo / step) * step
    ticks = []
    while t <= hi + step / 2:
        ticks.append(round(t, 12))
        t += step
    return ticks


class _Svg:
    def __init__(self, width: int = _W, height: int = _H):
        self.width, self.height = width, height
        self.parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
                      f'height="{height}" viewBox="0 0 {width} {height}">',
                      f'<rect width="{width}" height="{height}" fill="white"/>']

    def line(self, x1, y1, x2, y2, color="#444", width=1.0, dash=None):
        d = f' stroke-dasharray="{dash}"' if dash else ""
        self.parts.append(f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
                          f'stroke="{color}" stroke-width="{_f(width)}"{d}/>')

    def polyline(self, pts, color, width=1.8):
        coords = " ".join(f"{_f(x)},{_f(y)}" for x, y in pts)
        self.parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                          f'stroke-width="{_f(width)}"/>')

    def circle(self, x, y, r, color):
        self.parts.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(r)}" fill="{color}"/>')

    def rect(self, x, y, w, h, color, opacity=1.0):
        self.parts.append(f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                          f'fill="{color}" fill-opacity="{_f(opacity)}"/>')

    def text(self, x, y, s, size=11, anchor="middle", color="#222", rotate=None):
        t = (f' transform="rotate({rotate} {_f(x)} {_f(y)})"' if rotate is not None else "")
        self.parts.append(f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" '
                          f'font-size="{size}" text-anchor="{anchor}" fill="{color}"{t}>'
                          f"{s}</text>")

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _plot_area():
    x0, x1 = _MARGIN["left"], _W - _MARGIN["right"]
    y0, y1 = _H - _MARGIN["bottom"], _MARGIN["top"]
    return x0, x1, y0, y1  # y0 is the bottom (larger pixel value)


def line_chart(series: Sequence[tuple[str, list[tuple[float, float]]]],
               title: str, x_label: str, y_label: str, log_x: bool = False,
               emphasize: str | None = None) -> str:
    svg = _Svg()
    x0, x1, y0, y1 = _plot_area()
    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts]
    if log_x:
        xs = [math.log10(x) for x in xs]
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_lo, x_hi = x_lo - 0.5, x_hi + 0.5
    y_ticks = _ticks(min(min(ys), 0.0), max(ys))
    y_lo, y_hi = y_ticks[0], y_ticks[-1]

    def px(x):
        v = math.log10(x) if log_x else x
        return x0 + (v - x_lo) / (x_hi - x_lo) * (x1 - x0)

    def py(y):
        return y0 - (y - y_lo) / (y_hi - y_lo) * (y0 - y1)

    for t in y_ticks:
        svg.line(x0, py(t), x1, py(t), color="#ddd")
        svg.text(x0 - 6, py(t) + 4, f"{t:g}", anchor="end")
    x_tick_vals = sorted({x for _, pts in series for x, _ in pts}) if log_x \
        else _ticks(x_lo, x_hi)
    for t in x_tick_vals:
        svg.line(px(t), y0, px(t), y0 + 4)
        svg.text(px(t), y0 + 16, f"{t:g}")
    svg.line(x0, y0, x1, y0)
    svg.line(x0, y0, x0, y1)
    svg.text((x0 + x1) / 2, _H - 12, x_label)
    svg.text(16, (y0 + y1) / 2, y_label, rotate=-90)
    svg.text((x0 + x1) / 2, 22, title, size=13)

    for k, (label, pts) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        width = 3.0 if (emphasize is not None and label == emphasize) else 1.8
        svg.polyline([(px(x), py(y)) for x, y in pts], color, width=width)
        for x, y in pts:
            svg.circle(px(x), py(y), 2.5, color)
        svg.text(x1 - 4, y1 + 14 + 14 * k, label, anchor="end", color=color)
    return svg.render()


def ranked_bar_chart(rows: Sequence[tuple[str, float, tuple[float, float] | None]],
                     title: str, value_label: str) -> str:
    """Horizontal bars sorted by the caller; optional (start, size) window glyphs."""
    row_h = 22
    height = _MARGIN["top"] + len(rows) * row_h + _MARGIN["bottom"]
    svg = _Svg(_W, height)
    glyph_x0, glyph_w = 150, 130
    bar_x0 = glyph_x0 + glyph_w + 20
    bar_w_max = _W - bar_x0 - 80
    vmax = max(v for _, v, _ in rows) or 1.0
    svg.text(_W / 2, 22, title, size=13)
    for k, (label, value, window) in enumerate(rows):
        y = _MARGIN["top"] + k * row_h
        cy = y + row_h / 2
        svg.text(glyph_x0 - 8, cy + 4, label, anchor="end")
        if window is not None:
            start, size = window
            svg.rect(glyph_x0, cy - 3, glyph_w, 6, "#eee")
            svg.rect(glyph_x0 + 0.9 * glyph_w, cy - 3, 0.1 * glyph_w, 6, "#f5c6c6")
            svg.rect(glyph_x0 + start * glyph_w, cy - 5, size * glyph_w, 10, "#1f77b4")
        svg.rect(bar_x0, cy - 7, value / vmax * bar_w_max, 14, "#ff7f0e", opacity=0.85)
        svg.text(bar_x0 + value / vmax * bar_w_max + 6, cy + 4, f"{value:.4g}",
                 anchor="start")
    svg.text((bar_x0 + _W - 60) / 2, height - 16, value_label)
    return svg.render()


# --------------------------------------------------------------------------
# suite dispatch


def _ok(records: Sequence[MetricRecord], metric: str) -> list[MetricRecord]:
    return [r for r in records if r.status == "ok" and r.metric == metric]


def _species_metrics(records: Sequence[MetricRecord]) -> list[str]:
    return sorted({r.metric for r in records
                   if r.status == "ok" and r.metric.startswith("force_mae_species:")})


def _sample_efficiency_charts(records, out_dir: Path) -> list[Path]:
    paths = []
    force_series = []
    for metric in ["force_mae_all"] + _species_metrics(records):
        recs = sorted(_ok(records, metric), key=lambda r: r.sample_count or 0)
        if recs:
            label = "all atoms" if metric == "force_mae_all" else metric.split(":")[1]
            force_series.append((label, [(r.sample_count, r.value) for r in recs]))
    if force_series:
        p = out_dir / "sample_efficiency_force_mae.svg"
        p.write_text(line_chart(force_series, "Force MAE vs training samples",
                                "training samples", "force MAE (meV/A)", log_x=True))
        paths.append(p)
    energy = sorted(_ok(records, "energy_mae_per_atom"), key=lambda r: r.sample_count or 0)
    if energy:
        p = out_dir / "sample_efficiency_energy_mae.svg"
        p.write_text(line_chart([("per atom", [(r.sample_count, r.value) for r in energy])],
                                "Energy MAE vs training samples",
                                "training samples", "energy MAE (meV/atom)", log_x=True))
        paths.append(p)
    return paths


def _grouped_series(groups: list[GroupedSeries], x_of) -> list[tuple[str, list]]:
    return [(f"{g.key:g}", [(x_of(r), r.value) for r in g.records]) for g in groups]


def _time_extrapolation_charts(records, out_dir: Path) -> list[Path]:
    paths = []
    counts = sorted({r.sample_count for r in _ok(records, "force_mae_all")})
    for count in counts:
        recs = [r for r in _ok(records, "force_mae_all") if r.sample_count == count]
        ranked = rank_records(recs)
        rows = [(r.fixture_id, r.value, (r.window_start, r.window_size)) for r in ranked]
        p = out_dir / f"ranked_windows_n{count}.svg"
        p.write_text(ranked_bar_chart(rows, f"Test force MAE by training window "
                                            f"({count} samples)", "force MAE (meV/A)"))
        paths.append(p)
        by_size = group_project(recs, "window_size")
        p2 = out_dir / f"window_projection_by_size_n{count}.svg"
        p2.write_text(line_chart(_grouped_series(by_size, lambda r: r.window_start),
                                 f"Force MAE grouped by window size ({count} samples)",
                                 "window start fraction", "force MAE (meV/A)"))
        paths.append(p2)
        by_start = group_project(recs, "window_start")
        p3 = out_dir / f"window_projection_by_start_n{count}.svg"
        p3.write_text(line_chart(_grouped_series(by_start, lambda r: r.window_size),
                                 f"Force MAE grouped by window start ({count} samples)",
                                 "window size fraction", "force MAE (meV/A)"))
        paths.append(p3)
    return paths


def _cross_molecule_charts(records, out_dir: Path) -> list[Path]:
    paths = []
    for metric in ["force_mae_all"] + _species_metrics(records):
        recs = _ok(records, metric)
        if not recs:
            continue
        ranked = sorted(recs, key=lambda r: (r.value, r.fixture_id, r.test_molecule or ""))
        rows = [(f"{r.train_build}->{r.test_molecule}", r.value, None) for r in ranked]
        suffix = "all" if metric == "force_mae_all" else metric.split(":")[1]
        p = out_dir / f"generalization_force_mae_{suffix}.svg"
        title = ("Cross-molecule force MAE (all atoms)" if suffix == "all"
                 else f"Cross-molecule force MAE ({suffix})")
        p.write_text(ranked_bar_chart(rows, title, "force MAE (meV/A)"))
        paths.append(p)
    return paths


def _similarity_charts(records, out_dir: Path) -> list[Path]:
    recs = _ok(records, "window_similarity")
    if not recs:
        return []
    groups = group_project(recs, "window_size")
    series = [(f"size {g.key:g}", [(r.window_start, r.value) for r in g.records])
              for g in groups]
    p = out_dir / "window_similarity.svg"
    p.write_text(line_chart(series, "Training window vs test window similarity",
                            "window start fraction", "mean cosine similarity",
                            emphasize="size 0.3"))
    return [p]


_RENDERERS = {
    "sample_efficiency": _sample_efficiency_charts,
    "time_extrapolation": _time_extrapolation_charts,
    "cross_molecule": _cross_molecule_charts,
    "soap_similarity": _similarity_charts,
}


def render_for_suite(suite: str, records: Sequence[MetricRecord],
                     out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    renderer = _RENDERERS.get(suite)
    if renderer is None:
        return []
    return renderer(records, out_dir)


def render_records(records: Sequence[MetricRecord], out_dir: str | Path) -> list[Path]:
    """Re-render every chart derivable from the records alone."""
    suites = sorted({r.suite for r in records if r.suite})
    paths = []
    for suite in suites:
        paths.extend(render_for_suite(suite, [r for r in records if r.suite == suite],
                                      out_dir))
    return paths

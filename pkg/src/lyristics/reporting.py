"""Render evaluation results: CSV and aligned-text tables, JSON, SVG bars.

All float output uses fixed-width formatting so identical inputs give
byte-identical files regardless of platform or run order.
"""

from __future__ import annotations

import json
from pathlib import Path


def _fmt(value: float, places: int = 6) -> str:
    return f"{value:.{places}f}"


def group_label(method: str, group: int) -> str:
    return ("A" if method == "quantile" else "B") + str(group)


def group_table_csv(rows, method: str, entropies: dict | None = None) -> str:
    """CSV text for one group metric table; entropies maps group -> avg H."""
    out = ["group,n_pairs,avg_entropy,precision,recall,f1"]
    for row in rows:
        h = _fmt(entropies[row.group]) if entropies and row.group in entropies else ""
        out.append(
            f"{group_label(method, row.group)},{row.n_pairs},{h},"
            f"{_fmt(row.precision)},{_fmt(row.recall)},{_fmt(row.f1)}"
        )
    return "\n".join(out) + "\n"


def group_table_text(rows, method: str, entropies: dict | None = None) -> str:
    """Aligned table mirroring the CSV, for terminals and logs."""
    header = ["group", "n_pairs", "avg_entropy", "precision", "recall", "f1"]
    body = []
    for row in rows:
        h = _fmt(entropies[row.group], 3) if entropies and row.group in entropies else "-"
        body.append(
            [
                group_label(method, row.group),
                str(row.n_pairs),
                h,
                _fmt(row.precision, 3),
                _fmt(row.recall, 3),
                _fmt(row.f1, 3),
            ]
        )
    widths = [max(len(header[c]), *(len(r[c]) for r in body)) if body else len(header[c]) for c in range(6)]
    lines = ["  ".join(h.ljust(widths[c]) for c, h in enumerate(header)).rstrip()]
    lines.append("  ".join("-" * widths[c] for c in range(6)))
    for r in body:
        lines.append("  ".join(v.ljust(widths[c]) for c, v in enumerate(r)).rstrip())
    return "\n".join(lines) + "\n"


def pairs_csv(pairs) -> str:
    """Per-(run, lyricist) metric values; the raw distribution behind the means."""
    out = ["dataset_id,lyricist_id,group,precision,recall,f1"]
    for p in pairs:
        out.append(
            f"{p.dataset_id},{p.lyricist_id},{p.group},"
            f"{_fmt(p.precision)},{_fmt(p.recall)},{_fmt(p.f1)}"
        )
    return "\n".join(out) + "\n"


def correlation_json(method: str, mode: str, groups, entropies, f1s, pearson_r, spearman_rho) -> str:
    payload = {
        "method": method,
        "mode": mode,
        "groups": list(groups),
        "group_avg_entropy": [round(v, 10) for v in entropies],
        "group_f1": [round(v, 10) for v in f1s],
        "pearson_r": None if pearson_r is None else round(pearson_r, 10),
        "spearman_rho": None if spearman_rho is None else round(spearman_rho, 10),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# fixed layout constants for the bar charts
_W, _H = 640, 360
_MARGIN_L, _MARGIN_B, _MARGIN_T = 50, 40, 30
_COLORS = {"precision": "#4878a8", "recall": "#e09048", "f1": "#589858"}


def metrics_svg(rows, method: str, title: str) -> str:
    """Grouped bar chart (precision/recall/F1 per group), no dependencies."""
    plot_w = _W - _MARGIN_L - 20
    plot_h = _H - _MARGIN_T - _MARGIN_B
    n = max(len(rows), 1)
    slot = plot_w / n
    bar = slot / 4.5

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<text x="{_W / 2:.1f}" y="18" text-anchor="middle" font-size="14">{title}</text>',
    ]
    # y axis with 0.0 .. 1.0 gridlines
    for i in range(6):
        v = i / 5
        y = _MARGIN_T + plot_h * (1 - v)
        parts.append(
            f'<line x1="{_MARGIN_L}" y1="{y:.1f}" x2="{_W - 20}" y2="{y:.1f}" '
            f'stroke="#cccccc" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 6}" y="{y + 4:.1f}" text-anchor="end">{v:.1f}</text>'
        )
    for gi, row in enumerate(rows):
        cx = _MARGIN_L + slot * gi + slot / 2
        for mi, name in enumerate(("precision", "recall", "f1")):
            value = getattr(row, name)
            h = plot_h * value
            x = cx + (mi - 1.5) * bar
            y = _MARGIN_T + plot_h - h
            parts.append(
                f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar:.1f}" height="{h:.1f}" '
                f'fill="{_COLORS[name]}"><title>{name} {value:.4f}</title></rect>'
            )
        parts.append(
            f'<text x="{cx:.1f}" y="{_H - _MARGIN_B + 16}" text-anchor="middle">'
            f"{group_label(method, row.group)}</text>"
        )
    # legend
    lx = _MARGIN_L
    for name, color in _COLORS.items():
        parts.append(f'<rect x="{lx}" y="{_H - 14}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{lx + 14}" y="{_H - 5}">{name}</text>')
        lx += 90
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)

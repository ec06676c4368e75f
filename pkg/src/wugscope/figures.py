"""Static SVG bar charts written by hand, so output bytes depend only on the report.

Significant correlation bars (p < 0.05) carry ``data-significant="true"`` and
the ``SIGNIFICANT_FILL`` colour; the rest are grey.
"""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

SIGNIFICANT_FILL = "#1f5fbf"
PLAIN_FILL = "#9a9a9a"
ALPHA = 0.05

WIDTH = 640
HEIGHT = 320
MARGIN = 48


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def bar_chart(title: str, bars: list[tuple[str, float, bool | None]], y_label: str) -> str:
    """``bars`` holds (label, value, significant); significant None means not applicable."""
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">\n'
        f'<title>{escape(title)}</title>\n'
        f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>\n'
    )
    if not bars:
        return head + (
            f'<text x="{WIDTH // 2}" y="{HEIGHT // 2}" text-anchor="middle" font-size="12" '
            f'class="notice">no languages to display</text>\n</svg>\n'
        )

    values = [v for _, v, _ in bars]
    top = max(0.0, *values)
    bottom = min(0.0, *values)
    if top == bottom:
        top = bottom + 1.0
    plot_h = HEIGHT - 2 * MARGIN
    scale = plot_h / (top - bottom)
    zero_y = MARGIN + top * scale
    slot = (WIDTH - 2 * MARGIN) / len(bars)
    bar_w = slot * 0.7

    parts = [head]
    parts.append(
        f'<text x="14" y="{HEIGHT // 2}" font-size="11" transform="rotate(-90 14 {HEIGHT // 2})" '
        f'text-anchor="middle">{escape(y_label)}</text>\n'
    )
    parts.append(
        f'<line x1="{MARGIN}" y1="{_fmt(zero_y)}" x2="{WIDTH - MARGIN}" y2="{_fmt(zero_y)}" stroke="black"/>\n'
    )
    for i, (label, value, sig) in enumerate(bars):
        x = MARGIN + i * slot + (slot - bar_w) / 2
        y = zero_y - max(value, 0.0) * scale
        h = abs(value) * scale
        fill = SIGNIFICANT_FILL if sig else PLAIN_FILL
        flag = "" if sig is None else f' data-significant="{str(bool(sig)).lower()}"'
        parts.append(
            f'<rect x="{_fmt(x)}" y="{_fmt(y)}" width="{_fmt(bar_w)}" height="{_fmt(h)}" '
            f'fill="{fill}"{flag}><title>{escape(label)}: {value:.4f}</title></rect>\n'
        )
        parts.append(
            f'<text x="{_fmt(x + bar_w / 2)}" y="{HEIGHT - MARGIN + 16}" text-anchor="middle" '
            f'font-size="11">{escape(label)}</text>\n'
        )
    parts.append("</svg>\n")
    return "".join(parts)


def iota_chart(report: dict) -> str:
    langs = report.get("languages", {})
    bars = [(name, langs[name]["avg_iota"], None) for name in report.get("included", [])
            if langs[name].get("avg_iota") is not None]
    return bar_chart("Average degree of irregularity", bars, "mean iota")


def correlation_chart(report: dict, level: str) -> str:
    langs = report.get("languages", {})
    bars = []
    for name in report.get("included", []):
        entry = langs[name].get(f"{level}_level", {})
        if entry.get("r") is None:
            continue
        bars.append((name, entry["r"], entry["p"] < ALPHA))
    return bar_chart(f"Frequency vs. irregularity ({level} level)", bars, "Pearson r")


def render_figures(report: dict, directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    outputs = {
        "avg_iota.svg": iota_chart(report),
        "correlation_form.svg": correlation_chart(report, "form"),
        "correlation_lexeme.svg": correlation_chart(report, "lexeme"),
    }
    paths = []
    for name, svg in outputs.items():
        path = d / name
        path.write_text(svg, encoding="utf-8")
        paths.append(path)
    return paths

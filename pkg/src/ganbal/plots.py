"""Dependency-free SVG line and bar charts for run metrics."""
from xml.sax.saxutils import escape

W, H = 640, 320
PAD_L, PAD_R, PAD_T, PAD_B = 60, 20, 30, 40
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _scale(lo, hi, a, b):
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _frame(title, xlabel, ylabel, xs, ys):
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
             f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
             f'<text x="{W / 2}" y="{H - 6}" text-anchor="middle">{escape(xlabel)}</text>',
             f'<text x="14" y="{H / 2}" text-anchor="middle" '
             f'transform="rotate(-90 14 {H / 2})">{escape(ylabel)}</text>']
    x0, x1, y0, y1 = PAD_L, W - PAD_R, H - PAD_B, PAD_T
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>')
    parts.append(f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>')
    xlo, xhi, ylo, yhi = min(xs), max(xs), min(ys), max(ys)
    for i in range(5):
        v = ylo + (yhi - ylo) * i / 4
        py = _scale(ylo, yhi, y0, y1)(v)
        parts.append(f'<text x="{x0 - 4}" y="{py + 4:.1f}" text-anchor="end">{v:.3g}</text>')
    for i in range(5):
        v = xlo + (xhi - xlo) * i / 4
        px = _scale(xlo, xhi, x0, x1)(v)
        parts.append(f'<text x="{px:.1f}" y="{y0 + 14}" text-anchor="middle">{v:.3g}</text>')
    return parts, _scale(xlo, xhi, x0, x1), _scale(ylo, yhi, y0, y1)


def line_chart(series, title, xlabel="epoch", ylabel="", threshold=None):
    """``series``: {label: (xs, ys)}. Every point also gets a circle carrying data-x/data-y."""
    xs = [x for sx, _ in series.values() for x in sx]
    ys = [y for _, sy in series.values() for y in sy]
    if not xs:
        raise ValueError("no data to plot")
    if threshold is not None:
        ys = ys + [threshold]
    parts, fx, fy = _frame(title, xlabel, ylabel, xs, ys)
    if threshold is not None:
        py = fy(threshold)
        parts.append(f'<line x1="{PAD_L}" y1="{py:.2f}" x2="{W - PAD_R}" y2="{py:.2f}" '
                     f'stroke="gray" stroke-dasharray="4 3"/>')
    for i, (label, (sx, sy)) in enumerate(series.items()):
        c = COLORS[i % len(COLORS)]
        pts = " ".join(f"{fx(x):.2f},{fy(y):.2f}" for x, y in zip(sx, sy))
        parts.append(f'<polyline data-series="{escape(label)}" points="{pts}" fill="none" '
                     f'stroke="{c}" stroke-width="1.5"/>')
        for x, y in zip(sx, sy):
            parts.append(f'<circle cx="{fx(x):.2f}" cy="{fy(y):.2f}" r="2" fill="{c}" '
                         f'data-series="{escape(label)}" data-x="{x!r}" data-y="{y!r}"/>')
        parts.append(f'<text x="{W - PAD_R - 4}" y="{PAD_T + 14 * (i + 1)}" text-anchor="end" '
                     f'fill="{c}">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def allocation_chart(epochs, signed_extras, title="Extra batch allocation"):
    """Bars above zero go to the generator, below zero to the discriminator."""
    lim = max([1] + [abs(v) for v in signed_extras])
    parts, fx, fy = _frame(title, "epoch", "extra batches (+G / -D)",
                           list(epochs) or [0], [-lim, lim])
    zero = fy(0)
    parts.append(f'<line x1="{PAD_L}" y1="{zero:.2f}" x2="{W - PAD_R}" y2="{zero:.2f}" '
                 f'stroke="gray"/>')
    bw = max(2.0, (W - PAD_L - PAD_R) / max(1, len(epochs)) * 0.6)
    for e, v in zip(epochs, signed_extras):
        if v == 0:
            continue
        top, bot = (fy(v), zero) if v > 0 else (zero, fy(v))
        color = COLORS[0] if v > 0 else COLORS[1]
        parts.append(f'<rect x="{fx(e) - bw / 2:.2f}" y="{top:.2f}" width="{bw:.2f}" '
                     f'height="{bot - top:.2f}" fill="{color}" data-x="{e}" data-y="{v}"/>')
    parts.append("</svg>")
    return "\n".join(parts)

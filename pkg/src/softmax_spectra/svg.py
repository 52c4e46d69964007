"""Static SVG bar charts for ratio histograms."""
from .io import fmt

WIDTH, HEIGHT, PAD = 480, 300, 40


def histogram_svg(hist, title=None):
    counts = [int(c) for c in hist.counts]
    top = max(max(counts), 1)
    n = len(counts)
    bar_w = (WIDTH - 2 * PAD) / n
    plot_h = HEIGHT - 2 * PAD
    title = title or f"lambda_(C-1)(A) / y_min, C = {hist.c}"
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{PAD / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{title}</text>',
    ]
    for i, c in enumerate(counts):
        h = plot_h * c / top
        x = PAD + i * bar_w
        y = HEIGHT - PAD - h
        fill = "#c44e52" if i == n - 1 else "#4c72b0"  # last bar is overflow
        parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{bar_w * 0.9:.2f}" '
                     f'height="{h:.2f}" fill="{fill}"/>')
    base = HEIGHT - PAD
    parts.append(f'<line x1="{PAD}" y1="{base}" x2="{WIDTH - PAD}" y2="{base}" stroke="black"/>')
    for frac, label in ((0.0, hist.edges[0]), ((n - 1) / n, hist.edges[-1])):
        x = PAD + frac * (WIDTH - 2 * PAD)
        parts.append(f'<text x="{x:.2f}" y="{base + 15}" font-family="sans-serif" '
                     f'font-size="10" text-anchor="middle">{fmt(label)}</text>')
    parts.append(f'<text x="{PAD - 5}" y="{PAD:.1f}" font-family="sans-serif" font-size="10" '
                 f'text-anchor="end">{top}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

"""Self-contained SVG line charts for epidemic curves (no external assets)."""

from __future__ import annotations

from ..epidemic import EpidemicCurve

_COMPARTMENT_COLORS = {"s": "#1f77b4", "i": "#d62728", "r": "#2ca02c"}
_DASHES = ["none", "6,3", "2,2", "8,2,2,2"]

WIDTH, HEIGHT = 720, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 160, 24, 48


def _scale(curves):
    t_max = max(float(c.grid[-1]) for c in curves)
    t_min = min(float(c.grid[0]) for c in curves)
    span = (t_max - t_min) or 1.0

    def sx(t):
        return MARGIN_L + (t - t_min) * (WIDTH - MARGIN_L - MARGIN_R) / span

    def sy(y):
        return HEIGHT - MARGIN_B - y * (HEIGHT - MARGIN_T - MARGIN_B)

    return sx, sy, t_min, t_max


def _polyline(xs, ys, color, dash, width=1.6):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    dash_attr = "" if dash == "none" else f' stroke-dasharray="{dash}"'
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="{width}"'
        f'{dash_attr} points="{pts}"/>'
    )


def _band(xs, lo, hi, color):
    fwd = [f"{x:.2f},{y:.2f}" for x, y in zip(xs, hi)]
    bwd = [f"{x:.2f},{y:.2f}" for x, y in zip(reversed(xs), reversed(lo))]
    return f'<polygon fill="{color}" fill-opacity="0.15" stroke="none" points="{" ".join(fwd + bwd)}"/>'


def render_svg(curves: list[EpidemicCurve], labels: list[str], out_path=None) -> str:
    """Line chart of s/i/r vs t with shaded standard-error bands."""
    if not curves:
        raise ValueError("need at least one curve")
    if len(labels) != len(curves):
        raise ValueError("one label per curve required")
    sx, sy, t_min, t_max = _scale(curves)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN_L}" y1="{sy(0):.2f}" x2="{WIDTH - MARGIN_R}" y2="{sy(0):.2f}" stroke="black"/>',
        f'<line x1="{MARGIN_L}" y1="{sy(0):.2f}" x2="{MARGIN_L}" y2="{sy(1):.2f}" stroke="black"/>',
    ]
    for k in range(5):
        frac = k / 4
        t = t_min + frac * (t_max - t_min)
        x = sx(t)
        parts.append(
            f'<line x1="{x:.2f}" y1="{sy(0):.2f}" x2="{x:.2f}" y2="{sy(0) + 5:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.2f}" y="{sy(0) + 18:.2f}" font-size="11" text-anchor="middle">{t:.3g}</text>'
        )
        y = sy(frac)
        parts.append(
            f'<line x1="{MARGIN_L - 5}" y1="{y:.2f}" x2="{MARGIN_L}" y2="{y:.2f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 9}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{frac:.2g}</text>'
        )
    parts.append(
        f'<text x="{(MARGIN_L + WIDTH - MARGIN_R) / 2:.0f}" y="{HEIGHT - 10}" '
        f'font-size="12" text-anchor="middle">t</text>'
    )

    legend_y = MARGIN_T + 10
    for ci, (curve, label) in enumerate(zip(curves, labels)):
        dash = _DASHES[ci % len(_DASHES)]
        xs = [sx(t) for t in curve.grid]
        for name in ("s", "i", "r"):
            vals = getattr(curve, name)
            ses = getattr(curve, name + "_se")
            color = _COMPARTMENT_COLORS[name]
            lo = [sy(max(0.0, v - e)) for v, e in zip(vals, ses)]
            hi = [sy(min(1.0, v + e)) for v, e in zip(vals, ses)]
            parts.append(_band(xs, lo, hi, color))
            parts.append(_polyline(xs, [sy(v) for v in vals], color, dash))
        lx = WIDTH - MARGIN_R + 12
        parts.append(
            f'<line x1="{lx}" y1="{legend_y - 4}" x2="{lx + 26}" y2="{legend_y - 4}" '
            f'stroke="#444" stroke-width="1.6"'
            + ("" if dash == "none" else f' stroke-dasharray="{dash}"')
            + "/>"
        )
        parts.append(
            f'<text x="{lx + 32}" y="{legend_y}" font-size="12">{label}</text>'
        )
        legend_y += 18
    legend_y += 6
    for name, color in _COMPARTMENT_COLORS.items():
        parts.append(
            f'<rect x="{WIDTH - MARGIN_R + 12}" y="{legend_y - 10}" width="12" height="12" fill="{color}"/>'
        )
        parts.append(
            f'<text x="{WIDTH - MARGIN_R + 30}" y="{legend_y}" font-size="12">{name}(t)</text>'
        )
        legend_y += 18
    parts.append("</svg>")
    text = "\n".join(parts) + "\n"
    if out_path is not None:
        with open(out_path, "w") as fh:
            fh.write(text)
    return text

"""Deterministic SVG scatter plots of S^2 clouds.

Mollweide projection inside the canonical 2:1 ellipse, or vertical
(orthographic, viewed down the x3 axis) inside a circle. Output is a
pure function of the inputs: fixed viewBox, stable element order, fixed
numeric formatting, no timestamps.
"""

import numpy as np

from .errors import DimensionMismatch
from .geometry import PointCloud, mollweide_project_rows, vertical_project_rows

# role -> fill color, matching the convention: source green, target blue,
# mapped pink
ROLE_COLORS = (
    ("source", "#2e8b57"),
    ("target", "#4169e1"),
    ("mapped", "#ff69b4"),
)

_R = 120.0  # drawing radius in SVG units


def _fmt(x):
    return f"{x:.3f}"


def emit_plot(clouds, projection, path, central_meridian=0.0, point_radius=1.4):
    """Write an SVG scatter of up to three role-tagged clouds.

    `clouds` maps role ("source" | "target" | "mapped") to PointCloud or
    (n, 3) array; missing roles are simply absent from the plot.
    """
    if projection not in ("mollweide", "vertical"):
        raise ValueError(f"unknown projection {projection!r}")
    parts = []
    width, height = 640.0, 400.0
    cx, cy = width / 2.0, height / 2.0 - 20.0
    parts.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_fmt(width)} {_fmt(height)}" '
        f'width="{_fmt(width)}" height="{_fmt(height)}">'
    )
    parts.append(f'<rect width="{_fmt(width)}" height="{_fmt(height)}" fill="#ffffff"/>')

    if projection == "mollweide":
        rx, ry = 2.0 * np.sqrt(2.0) * _R, np.sqrt(2.0) * _R
        parts.append(
            f'<ellipse cx="{_fmt(cx)}" cy="{_fmt(cy)}" rx="{_fmt(rx * 0.72)}" '
            f'ry="{_fmt(ry * 0.72)}" fill="none" stroke="#444444" stroke-width="1"/>'
        )
        scale = 0.72
    else:
        parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(_R)}" '
            f'fill="none" stroke="#444444" stroke-width="1"/>'
        )
        scale = 1.0

    for role, color in ROLE_COLORS:
        if role not in clouds or clouds[role] is None:
            continue
        pts = clouds[role]
        pts = pts.points if isinstance(pts, PointCloud) else np.atleast_2d(np.asarray(pts))
        if pts.shape[1] != 3:
            raise DimensionMismatch("plots are defined for S^2 clouds")
        if projection == "mollweide":
            u, v = mollweide_project_rows(pts, _R, central_meridian)
            u, v = u * scale, v * scale
        else:
            u, v = vertical_project_rows(pts, _R)
        parts.append(f'<g fill="{color}" fill-opacity="0.55">')
        for ui, vi in zip(u, v):
            parts.append(
                f'<circle cx="{_fmt(cx + ui)}" cy="{_fmt(cy - vi)}" r="{_fmt(point_radius)}"/>'
            )
        parts.append("</g>")

    legend_y = height - 28.0
    x = 40.0
    for role, color in ROLE_COLORS:
        if role not in clouds or clouds[role] is None:
            continue
        parts.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(legend_y)}" r="4.000" fill="{color}"/>')
        parts.append(
            f'<text x="{_fmt(x + 10.0)}" y="{_fmt(legend_y + 4.0)}" '
            f'font-family="sans-serif" font-size="13">{role}</text>'
        )
        x += 110.0
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")

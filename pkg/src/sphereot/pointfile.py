"""Plain-text point files: header "SOTPTS1 <dim> <n>", one row per point.

Coordinates are written with 17 significant digits, which round-trips
64-bit floats exactly, so write -> read is bitwise faithful.
"""

import numpy as np

from .errors import EmptyFile, NormViolation, ParseError
from .geometry import PointCloud

MAGIC = "SOTPTS1"
NORM_TOL = 1e-6


def write_points(cloud, path):
    pts = cloud.points if isinstance(cloud, PointCloud) else np.atleast_2d(cloud)
    n, dim = pts.shape
    with open(path, "w") as fh:
        fh.write(f"{MAGIC} {dim} {n}\n")
        for row in pts:
            fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def read_points(path, renormalize=False):
    """Returns (PointCloud, n_renormalized).

    Rows outside unit norm by more than 1e-6 raise NormViolation unless
    `renormalize` is set, in which case they are projected back and
    counted.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise EmptyFile(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != MAGIC:
        raise ParseError(f"expected header '{MAGIC} <dim> <n>', got {lines[0]!r}", line=1)
    try:
        dim, n = int(head[1]), int(head[2])
    except ValueError as exc:
        raise ParseError(f"bad header counts: {exc}", line=1) from exc
    if n == 0:
        raise EmptyFile(f"{path}: zero points declared")
    if len(lines) - 1 < n:
        raise ParseError(f"declared {n} rows, found {len(lines) - 1}", line=len(lines))
    rows = np.empty((n, dim))
    for i in range(n):
        parts = lines[1 + i].split()
        if len(parts) != dim:
            raise ParseError(f"expected {dim} values, got {len(parts)}", line=i + 2)
        try:
            rows[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise ParseError(str(exc), line=i + 2) from exc
    norms = np.linalg.norm(rows, axis=1)
    err = np.abs(norms - 1.0)
    if np.any(err > NORM_TOL) and not renormalize:
        bad = int(np.argmax(err > NORM_TOL))
        raise NormViolation(f"|v| = {norms[bad]!r}", row=bad)
    # rows already unit to 1e-9 keep their exact bits (round-trip);
    # anything looser is projected back onto the sphere and counted
    adjust = err > 1e-9
    n_fixed = int(adjust.sum())
    if n_fixed:
        rows[adjust] = rows[adjust] / norms[adjust, None]
    return PointCloud(rows), n_fixed

"""Transport map, dual functional, training losses, Wasserstein estimate.

The map induced by a convex potential f is

    T_f(x) = x - grad f(x) / (1 - x . grad f(x))

with the denominator clamped away from zero. Mapped points are generally
non-unit; the second potential g is evaluated on the raw mapped points,
and renormalization applies only to exported outputs and the paired
spherical-distance (fidelity) term.

Numeric functions here are the reference implementations; the build_*
functions emit the same math as graph nodes for training (their only
difference is a hair-inside clamp on the arccos argument so the fidelity
gradient stays finite).
"""

from dataclasses import dataclass

import numpy as np

from .errors import PairingLengthMismatch, SizeMismatch
from .geometry import (
    EPS_COST,
    PointCloud,
    log_cost_rows,
    spherical_distance_rows,
    unit_rows,
)
from .icnn import build_potential_nodes, eval_potential, potential_input_gradient

EPS_DEN = 1e-6       # denominator clamp in the transport map
EPS_ACOS = 1e-7      # fidelity arccos argument kept inside (-1, 1)
EPS_NORM = 1e-24     # squared-norm floor before renormalization


@dataclass(frozen=True)
class TransportBatch:
    """Mapped batch with the quantities the dual and diagnostics need."""

    source: PointCloud
    raw_mapped: np.ndarray
    mapped_unit: PointCloud
    costs: np.ndarray
    denominators: np.ndarray
    clamped_count: int


@dataclass(frozen=True)
class DualEstimate:
    """Monte-Carlo dual value: total = term_g + term_v exactly."""

    term_g: float
    term_v: float
    total: float
    n_source: int
    n_target: int


def _as_points(x):
    return x.points if isinstance(x, PointCloud) else np.atleast_2d(np.asarray(x, dtype=np.float64))


def clamp_away_zero(d, eps):
    """sign(d) * max(|d|, eps) with sign(0) = +1, elementwise."""
    d = np.asarray(d, dtype=np.float64)
    return np.where(d >= 0.0, 1.0, -1.0) * np.maximum(np.abs(d), eps)


def transport_rows(f, x_rows, eps_den=EPS_DEN):
    """Raw mapped points for an (n, d+1) array.

    Returns (raw, denominators, clamped_count).
    """
    grad = potential_input_gradient(f, x_rows)
    s = np.einsum("ij,ij->i", x_rows, grad)
    denom = 1.0 - s
    clamped = int(np.sum(np.abs(denom) < eps_den))
    denom_c = clamp_away_zero(denom, eps_den)
    raw = x_rows - grad / denom_c[:, None]
    return raw, denom, clamped


def transport_map(f, x, eps_den=EPS_DEN):
    """Map a single unit vector; returns (raw, unit, denom)."""
    from .geometry import UnitVector, normalize

    coords = x.coords if isinstance(x, UnitVector) else np.asarray(x, dtype=np.float64)
    raw, denom, _ = transport_rows(f, coords[None, :], eps_den)
    return raw[0], normalize(raw[0]), float(denom[0])


def transport_batch(f, cloud, eps_den=EPS_DEN) -> TransportBatch:
    x = _as_points(cloud)
    src = cloud if isinstance(cloud, PointCloud) else PointCloud(x)
    raw, denom, clamped = transport_rows(f, x, eps_den)
    return TransportBatch(
        source=src,
        raw_mapped=raw,
        mapped_unit=PointCloud(unit_rows(raw), src.weights),
        costs=log_cost_rows(x, raw),
        denominators=denom,
        clamped_count=clamped,
    )


def reconstruction_gradient(x_rows, t_rows):
    """(x - T) / (2 - x . T): recovers grad f(x) from the mapped point."""
    dots = np.einsum("ij,ij->i", x_rows, t_rows)
    return (x_rows - t_rows) / (2.0 - dots)[:, None]


def dual_functional_v(f, g, x_cloud, eps_den=EPS_DEN) -> float:
    """V(f, g) = E_mu[ log(2 - <X, T_f(X)>) - g(T_f(X)) ]."""
    x = _as_points(x_cloud)
    w = x_cloud.weights if isinstance(x_cloud, PointCloud) else np.full(len(x), 1.0 / len(x))
    raw, _, _ = transport_rows(f, x, eps_den)
    costs = log_cost_rows(x, raw)
    g_vals = eval_potential(g, raw)
    return float(np.dot(w, costs - g_vals))


def loss_f(f, g, x_cloud, y_paired=None, lam=0.0, eps_den=EPS_DEN) -> float:
    """Map-fitting loss: V(f, g) plus the paired fidelity term.

    With no pairs supplied the fidelity term is omitted entirely.
    """
    v = dual_functional_v(f, g, x_cloud, eps_den)
    if y_paired is None:
        return v
    x = _as_points(x_cloud)
    y = _as_points(y_paired)
    if len(y) != len(x):
        raise PairingLengthMismatch(f"{len(x)} source points vs {len(y)} pairs")
    w = x_cloud.weights if isinstance(x_cloud, PointCloud) else np.full(len(x), 1.0 / len(x))
    raw, _, _ = transport_rows(f, x, eps_den)
    fid = float(np.dot(w, spherical_distance_rows(unit_rows(raw), y)))
    return v + lam * fid


def loss_g(f, g, x_cloud, y_cloud, eps_den=EPS_DEN) -> float:
    """Discriminator-side objective E_nu g(Y) - E_mu g(T_f(X)); maximized
    by the trainer (implemented there as descending its negation)."""
    x = _as_points(x_cloud)
    y = _as_points(y_cloud)
    wx = x_cloud.weights if isinstance(x_cloud, PointCloud) else np.full(len(x), 1.0 / len(x))
    wy = y_cloud.weights if isinstance(y_cloud, PointCloud) else np.full(len(y), 1.0 / len(y))
    raw, _, _ = transport_rows(f, x, eps_den)
    return float(np.dot(wy, eval_potential(g, y)) - np.dot(wx, eval_potential(g, raw)))


def wasserstein_estimate(f, g, x_cloud, y_cloud, eps_den=EPS_DEN) -> DualEstimate:
    """Dual value estimate: E_nu g(Y) + V(f, g), terms recorded separately."""
    y = _as_points(y_cloud)
    wy = y_cloud.weights if isinstance(y_cloud, PointCloud) else np.full(len(y), 1.0 / len(y))
    term_g = float(np.dot(wy, eval_potential(g, y)))
    term_v = dual_functional_v(f, g, x_cloud, eps_den)
    return DualEstimate(term_g=term_g, term_v=term_v, total=term_g + term_v,
                        n_source=len(_as_points(x_cloud)), n_target=len(y))


def c_transform_bruteforce(g, x, y_cloud) -> float:
    """g^c(x) = min over target samples of log(2 - <x, y>) - g(y)."""
    from .geometry import UnitVector

    coords = x.coords if isinstance(x, UnitVector) else np.asarray(x, dtype=np.float64)
    y = _as_points(y_cloud)
    costs = np.log(np.maximum(2.0 - y @ coords, EPS_COST))
    return float(np.min(costs - eval_potential(g, y)))


# -- graph builders ------------------------------------------------------------


def build_transport_nodes(g, x_node, prefix, c0, c1, depth, eps_den=EPS_DEN):
    """Transport map as graph nodes.

    Returns (t_raw, denom, fvals): the raw mapped batch (n, d+1), the
    unclamped denominators (n, 1), and the potential values (n, 1).
    """
    fvals = build_potential_nodes(g, x_node, prefix, c0, c1, depth)
    (grad_x,) = g.grad(g.sum(fvals), [x_node])
    s = g.dot_rows(x_node, grad_x)
    denom = g.add_const(g.neg(s), 1.0)
    denom_c = g.clamp_away_zero(denom, eps_den)
    t_raw = g.sub(x_node, g.scale_rows(grad_x, g.recip(denom_c)))
    return t_raw, denom, fvals


def build_cost_nodes(g, x_node, t_raw, eps_cost=EPS_COST):
    """log(2 - <x, T>) per sample, with the clamped argument exposed."""
    cost_arg_raw = g.add_const(g.neg(g.dot_rows(x_node, t_raw)), 2.0)
    cost_arg = g.clamp_min(cost_arg_raw, eps_cost)
    return g.log(cost_arg), cost_arg_raw


def build_fidelity_nodes(g, t_raw, y_node):
    """Mean arccos(<T/|T|, y>) with the argument kept inside (-1, 1)."""
    sq = g.clamp_min(g.dot_rows(t_raw, t_raw), EPS_NORM)
    t_unit = g.scale_rows(t_raw, g.recip(g.sqrt(sq)))
    cosang = g.clamp(g.dot_rows(t_unit, y_node), -1.0 + EPS_ACOS, 1.0 - EPS_ACOS)
    return g.mean(g.acos(cosang))


def build_loss_f_nodes(g, x_node, y_node, f_prefix, g_prefix, c0, c1, depth,
                       lam=0.0, eps_den=EPS_DEN, eps_cost=EPS_COST):
    """Full map-fitting loss as graph nodes.

    Returns a dict with loss, v, fidelity (None without pairs), t_raw,
    denom, and clamp-telemetry count nodes.
    """
    t_raw, denom, _ = build_transport_nodes(g, x_node, f_prefix, c0, c1, depth, eps_den)
    cost, cost_arg_raw = build_cost_nodes(g, x_node, t_raw, eps_cost)
    g_vals = build_potential_nodes(g, t_raw, g_prefix, c0, c1, depth)
    v = g.mean(g.sub(cost, g_vals))
    fid = None
    loss = v
    if y_node is not None and lam != 0.0:
        fid = build_fidelity_nodes(g, t_raw, y_node)
        loss = g.add(v, g.mul_const(fid, lam))
    elif y_node is not None:
        fid = build_fidelity_nodes(g, t_raw, y_node)
    # mask nodes are shared with the VJP-created ones by hash-consing
    den_ok = g.away_mask(denom, eps_den)
    cost_ok = g.ge_mask(cost_arg_raw, eps_cost)
    return {
        "loss": loss,
        "v": v,
        "fidelity": fid,
        "t_raw": t_raw,
        "denom": denom,
        "den_ok_count": g.sum(den_ok),
        "cost_ok_count": g.sum(cost_ok),
    }


def build_loss_g_nodes(g, x_node, y_node, f_prefix, g_prefix, c0, c1, depth,
                       eps_den=EPS_DEN):
    """Eq-style discriminator objective and its negation for descent.

    Returns dict with objective, neg_objective, term_y, term_t.
    """
    t_raw, _, _ = build_transport_nodes(g, x_node, f_prefix, c0, c1, depth, eps_den)
    g_on_y = build_potential_nodes(g, y_node, g_prefix, c0, c1, depth)
    g_on_t = build_potential_nodes(g, t_raw, g_prefix, c0, c1, depth)
    term_y = g.mean(g_on_y)
    term_t = g.mean(g_on_t)
    objective = g.sub(term_y, term_t)
    return {
        "objective": objective,
        "neg_objective": g.neg(objective),
        "term_y": term_y,
        "term_t": term_t,
        "t_raw": t_raw,
    }


def uniform_weights_check(x_cloud, y_cloud):
    x = _as_points(x_cloud)
    y = _as_points(y_cloud)
    if len(x) != len(y):
        raise SizeMismatch(f"{len(x)} vs {len(y)} points")
    return x, y

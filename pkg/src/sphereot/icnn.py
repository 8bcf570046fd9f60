"""Input-convex scalar potential networks.

Architecture: a stack of hidden blocks where each block mixes a
nonnegative-weighted path from the previous hidden state with an
unconstrained passthrough from the input,

    z_0 = act(A_0 x + b_0)
    z_l = act(W_l z_{l-1} + A_l x + b_l)        W_l >= 0 elementwise
    f(x) = w_head . z_{L-1} + a_head . x + b_head    w_head >= 0

with act a convex, non-decreasing smooth ramp (softplus). Nonnegativity
of W_l and w_head is enforced by softplus reparameterization of raw
values, never by clipping, so the function is convex in x for every
parameter setting the optimizer can reach.
"""

import json
import zlib
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import CorruptCheckpoint, DimensionMismatch, InvalidDims, VersionMismatch

CHECKPOINT_MAGIC = b"SOTPOT1"
CHECKPOINT_VERSION = 1

_INIT_GAIN = 1e-2          # uniform scale for passthrough weights
_INIT_NONNEG = 1e-3        # realized value of reparameterized weights at init


def softplus(x):
    return np.logaddexp(0.0, x)


def softplus_inv(y):
    """Raw value r with softplus(r) = y, for y > 0."""
    return np.log(np.expm1(y))


@dataclass
class IcnnPotential:
    """Convex scalar function on R^c0; parameters held as named arrays."""

    c0: int
    c1: int
    depth: int
    params: dict
    activation: str = "softplus"
    meta: dict = field(default_factory=dict)

    def param_items(self):
        """(name, array) pairs in canonical checkpoint order."""
        return list(self.params.items())

    def copy(self):
        return IcnnPotential(self.c0, self.c1, self.depth,
                             {k: v.copy() for k, v in self.params.items()},
                             self.activation, dict(self.meta))

    def realized_nonneg(self):
        """Effective (softplus-realized) nonnegative-path weights."""
        out = {}
        for name, arr in self.params.items():
            if name.startswith("W") or name == "head_w":
                out[name] = softplus(arr)
        return out


def param_layout(c0, c1, depth):
    """Canonical (name, shape) order shared by init, graphs and checkpoints."""
    layout = []
    for l in range(depth):
        layout.append((f"A{l}", (c1, c0)))
        layout.append((f"b{l}", (1, c1)))
    for l in range(1, depth):
        layout.append((f"W{l}", (c1, c1)))
    layout.append(("head_w", (c1, 1)))
    layout.append(("head_a", (c0, 1)))
    layout.append(("head_b", (1, 1)))
    return layout


def init_icnn(c0, c1, depth, seed) -> IcnnPotential:
    """Near-identity warm start: small passthroughs, tiny nonneg weights.

    The head passthrough starts at zero so the initial gradient field has
    norm well under 0.05 on unit inputs, i.e. the induced transport map
    starts close to the identity.
    """
    if c0 < 3 or c1 < 1 or depth < 1:
        raise InvalidDims(f"need c0 >= 3, c1 >= 1, depth >= 1, got ({c0}, {c1}, {depth})")
    rng = np.random.default_rng(seed)
    raw = float(softplus_inv(_INIT_NONNEG))
    params = {}
    for name, shape in param_layout(c0, c1, depth):
        if name.startswith("A"):
            params[name] = rng.uniform(-_INIT_GAIN, _INIT_GAIN, size=shape)
        elif name.startswith("b"):
            params[name] = np.zeros(shape)
        elif name.startswith("W") or name == "head_w":
            params[name] = np.full(shape, raw)
        else:  # head_a, head_b
            params[name] = np.zeros(shape)
    return IcnnPotential(c0, c1, depth, params, meta={"seed": seed})


# -- numeric evaluation ------------------------------------------------------


def _check_batch(pot, x):
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != pot.c0:
        raise DimensionMismatch(f"potential expects dim {pot.c0}, got {x.shape[1]}")
    return x


def _forward(pot, x):
    """Returns (values (n,), pre-activations per layer)."""
    p = pot.params
    pres = []
    pre = x @ p["A0"].T + p["b0"]
    pres.append(pre)
    z = softplus(pre)
    for l in range(1, pot.depth):
        pre = z @ softplus(p[f"W{l}"]).T + x @ p[f"A{l}"].T + p[f"b{l}"]
        pres.append(pre)
        z = softplus(pre)
    out = z @ softplus(p["head_w"]) + x @ p["head_a"] + p["head_b"]
    return out[:, 0], pres


def eval_potential(pot, x):
    """Potential value; x is one point (c0,) or a batch (n, c0)."""
    arr = np.asarray(x, dtype=np.float64)
    vals, _ = _forward(pot, _check_batch(pot, arr))
    return float(vals[0]) if arr.ndim == 1 else vals


def potential_input_gradient(pot, x):
    """Ambient gradient of the potential at x, same batch convention."""
    arr = np.asarray(x, dtype=np.float64)
    xb = _check_batch(pot, arr)
    _, pres = _forward(pot, xb)
    p = pot.params
    n = xb.shape[0]
    gz = np.broadcast_to(softplus(p["head_w"]).ravel(), (n, pot.c1))
    gx = np.broadcast_to(p["head_a"].ravel(), (n, pot.c0)).copy()
    for l in range(pot.depth - 1, 0, -1):
        gpre = gz * expit(pres[l])
        gx += gpre @ p[f"A{l}"]
        gz = gpre @ softplus(p[f"W{l}"])
    gpre = gz * expit(pres[0])
    gx += gpre @ p["A0"]
    return gx[0] if arr.ndim == 1 else gx


def midpoint_convexity_violation(pot, n_triples, seed, scale=1.0):
    """Worst violation of f(t x1 + (1-t) x2) <= t f(x1) + (1-t) f(x2).

    Negative slack up to ~1e-6 is tolerated by callers (floating point);
    anything larger indicates broken convexity.
    """
    rng = np.random.default_rng(seed)
    x1 = rng.standard_normal((n_triples, pot.c0)) * scale
    x2 = rng.standard_normal((n_triples, pot.c0)) * scale
    t = rng.uniform(0.0, 1.0, size=(n_triples, 1))
    mid, _ = _forward(pot, t * x1 + (1.0 - t) * x2)
    f1, _ = _forward(pot, x1)
    f2, _ = _forward(pot, x2)
    return float(np.max(mid - (t[:, 0] * f1 + (1.0 - t[:, 0]) * f2)))


# -- graph construction ------------------------------------------------------


def build_potential_nodes(g, x_node, prefix, c0, c1, depth):
    """Emit the forward pass into graph `g`; returns per-sample values (n, 1).

    Parameter leaves are named `{prefix}.{name}` following param_layout.
    """
    if x_node.shape[1] != c0:
        raise DimensionMismatch(f"x node has dim {x_node.shape[1]}, potential wants {c0}")
    leaves = {}
    for name, shape in param_layout(c0, c1, depth):
        full = f"{prefix}.{name}"
        leaves[name] = g.leaf(full) if full in g.leaves else g.param(full, shape)
    pre = g.add_rowvec(g.matmul_nt(x_node, leaves["A0"]), leaves["b0"])
    z = g.softplus(pre)
    for l in range(1, depth):
        w_real = g.softplus(leaves[f"W{l}"])
        pre = g.add_rowvec(
            g.add(g.matmul_nt(z, w_real), g.matmul_nt(x_node, leaves[f"A{l}"])),
            leaves[f"b{l}"],
        )
        z = g.softplus(pre)
    head = g.add(g.matmul(z, g.softplus(leaves["head_w"])), g.matmul(x_node, leaves["head_a"]))
    return g.add_rowvec(head, leaves["head_b"])


def bind_potential(program, prefix, pot):
    """Copy a potential's parameters into a program's leaf views."""
    for name, arr in pot.param_items():
        full = f"{prefix}.{name}"
        if program.has_leaf(full):
            program.set_leaf(full, arr)


# -- checkpoints --------------------------------------------------------------


def save_checkpoint(pot, path, config_hash="", iterations=0):
    """Binary checkpoint: magic, length-prefixed JSON header, float64
    parameter payload in layout order, CRC32 of the payload."""
    header = {
        "format_version": CHECKPOINT_VERSION,
        "c0": pot.c0,
        "c1": pot.c1,
        "depth": pot.depth,
        "activation": pot.activation,
        "seed": pot.meta.get("seed"),
        "config_hash": config_hash or pot.meta.get("config_hash", ""),
        "iterations": iterations or pot.meta.get("iterations", 0),
        "layout": [[name, list(shape)] for name, shape in param_layout(pot.c0, pot.c1, pot.depth)],
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = b"".join(
        np.ascontiguousarray(pot.params[name], dtype="<f8").tobytes()
        for name, _ in param_layout(pot.c0, pot.c1, pot.depth)
    )
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(len(header_bytes).to_bytes(4, "little"))
        fh.write(header_bytes)
        fh.write(payload)
        fh.write(zlib.crc32(payload).to_bytes(4, "little"))


def load_checkpoint(path) -> IcnnPotential:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(CHECKPOINT_MAGIC) + 4 or not blob.startswith(CHECKPOINT_MAGIC):
        raise CorruptCheckpoint(f"{path}: not a potential checkpoint")
    pos = len(CHECKPOINT_MAGIC)
    header_len = int.from_bytes(blob[pos:pos + 4], "little")
    pos += 4
    if len(blob) < pos + header_len:
        raise CorruptCheckpoint(f"{path}: truncated header")
    try:
        header = json.loads(blob[pos:pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpoint(f"{path}: unreadable header: {exc}") from exc
    pos += header_len
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise VersionMismatch(f"{path}: format_version {header.get('format_version')}, "
                              f"expected {CHECKPOINT_VERSION}")
    layout = [(name, tuple(shape)) for name, shape in header["layout"]]
    n_floats = sum(r * c for _, (r, c) in layout)
    payload_len = 8 * n_floats
    if len(blob) < pos + payload_len + 4:
        raise CorruptCheckpoint(f"{path}: truncated payload")
    payload = blob[pos:pos + payload_len]
    crc_stored = int.from_bytes(blob[pos + payload_len:pos + payload_len + 4], "little")
    if zlib.crc32(payload) != crc_stored:
        raise CorruptCheckpoint(f"{path}: checksum mismatch")
    params = {}
    off = 0
    for name, (r, c) in layout:
        size = 8 * r * c
        params[name] = np.frombuffer(payload[off:off + size], dtype="<f8").reshape(r, c).copy()
        off += size
    meta = {"seed": header.get("seed"), "config_hash": header.get("config_hash", ""),
            "iterations": header.get("iterations", 0)}
    return IcnnPotential(header["c0"], header["c1"], header["depth"], params,
                         header.get("activation", "softplus"), meta)

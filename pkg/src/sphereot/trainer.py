"""Alternating minimax training of the potential pair (f, g).

Each outer iteration runs `inner_f_steps` descent steps on the
map-fitting loss (fresh minibatches every step), then one ascent step on
the discriminator objective. Both potentials use adaptive-moment updates
with global gradient-norm clipping; convexity is preserved structurally
by the softplus reparameterization, and audited at every checkpoint
anyway.
"""

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimensionMismatch, DivergenceDetected, NonFiniteLoss
from .geometry import EPS_COST, spherical_distance_rows, unit_rows
from .icnn import init_icnn, midpoint_convexity_violation, save_checkpoint
from .oracle import oracle_value
from .sot import (
    EPS_DEN,
    build_loss_f_nodes,
    build_loss_g_nodes,
    transport_rows,
    wasserstein_estimate,
)
from .autodiff import Graph, Program


@dataclass
class TrainConfig:
    total_outer_iters: int
    learning_rate: float = 1e-4
    lambda_fidelity: float = 1.0
    batch_size: int = 256
    inner_f_steps: int = 10
    seed: int = 0
    eval_every: int = 500
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_clip: float = 10.0
    epsilon_den: float = EPS_DEN
    epsilon_cost: float = EPS_COST
    hidden_dim: int = 64
    num_hidden_layers: int = 3
    eval_batch_size: int = 128
    convexity_triples: int = 1000
    log_path: str = None
    checkpoint_dir: str = None

    def __post_init__(self):
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2")
        if self.inner_f_steps < 1:
            raise ValueError("inner_f_steps must be >= 1")
        if self.total_outer_iters < 1:
            raise ValueError("total_outer_iters must be >= 1")


@dataclass
class TrainRecord:
    iteration: int
    loss_f: float
    loss_g: float
    dual_total: float
    dual_frozen: float
    dual_gap_frozen: float
    fidelity_mean: float
    clamp_rate_den: float
    clamp_rate_cost: float
    convexity_f_ok: bool
    convexity_g_ok: bool
    wall_time: float


@dataclass
class TrainHistory:
    records: list = field(default_factory=list)
    oracle_frozen: float = float("nan")
    backend: str = ""
    config: dict = field(default_factory=dict)

    def append(self, record):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("iterations must be strictly increasing")
        self.records.append(record)

    def field_series(self, name):
        return np.array([getattr(r, name) for r in self.records], dtype=np.float64)


class AdamState:
    """Adaptive-moment optimizer over a named-parameter dict."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8, grad_clip=10.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.grad_clip = grad_clip
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params, grads):
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        scale = self.grad_clip / norm if (self.grad_clip and norm > self.grad_clip) else 1.0
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, g in grads.items():
            g = g * scale
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            params[name] -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


# -- step programs -------------------------------------------------------------

_PROGRAM_CACHE = {}


def _param_leaf_names(prefix, pot):
    return [f"{prefix}.{name}" for name, _ in pot.param_items()]


def _f_step_program(c0, c1, depth, n, lam, eps_den, eps_cost, paired):
    key = ("f", c0, c1, depth, n, lam, eps_den, eps_cost, paired)
    if key in _PROGRAM_CACHE:
        return _PROGRAM_CACHE[key]
    g = Graph()
    x = g.input("x", (n, c0))
    y = g.input("y", (n, c0)) if paired else None
    parts = build_loss_f_nodes(g, x, y, "f", "g", c0, c1, depth,
                               lam=lam, eps_den=eps_den, eps_cost=eps_cost)
    f_leaves = [g.leaf(name) for name in g.leaves if name.startswith("f.")]
    grads = g.grad(parts["loss"], f_leaves)
    outputs = [parts["loss"], parts["den_ok_count"], parts["cost_ok_count"]] + grads
    prog = Program(g, outputs)
    entry = (prog, [l.name for l in f_leaves])
    _PROGRAM_CACHE[key] = entry
    return entry


def _g_step_program(c0, c1, depth, n_x, n_y, eps_den):
    key = ("g", c0, c1, depth, n_x, n_y, eps_den)
    if key in _PROGRAM_CACHE:
        return _PROGRAM_CACHE[key]
    g = Graph()
    x = g.input("x", (n_x, c0))
    y = g.input("y", (n_y, c0))
    parts = build_loss_g_nodes(g, x, y, "f", "g", c0, c1, depth, eps_den=eps_den)
    g_leaves = [g.leaf(name) for name in g.leaves if name.startswith("g.")]
    grads = g.grad(parts["neg_objective"], g_leaves)
    outputs = [parts["objective"]] + grads
    prog = Program(g, outputs)
    entry = (prog, [l.name for l in g_leaves])
    _PROGRAM_CACHE[key] = entry
    return entry


def _bind_potentials(prog, f, g):
    for prefix, pot in (("f", f), ("g", g)):
        for name, arr in pot.param_items():
            full = f"{prefix}.{name}"
            if prog.has_leaf(full):
                prog.set_leaf(full, arr)


def step_f(f, g, x_batch, y_pairs=None, cfg=None, opt_state=None):
    """One descent step on the map-fitting loss; returns (f, loss, telemetry)."""
    cfg = cfg or TrainConfig(total_outer_iters=1)
    n = len(x_batch)
    lam = cfg.lambda_fidelity if y_pairs is not None else 0.0
    prog, leaf_names = _f_step_program(f.c0, f.c1, f.depth, n, lam,
                                       cfg.epsilon_den, cfg.epsilon_cost,
                                       y_pairs is not None)
    _bind_potentials(prog, f, g)
    bindings = {"x": x_batch}
    if y_pairs is not None:
        bindings["y"] = y_pairs
    out = prog.run(bindings)
    loss = float(out[0][0, 0])
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"map loss became {loss}")
    telemetry = {
        "clamp_rate_den": 1.0 - float(out[1][0, 0]) / n,
        "clamp_rate_cost": 1.0 - float(out[2][0, 0]) / n,
    }
    grads = {name.split(".", 1)[1]: val for name, val in zip(leaf_names, out[3:])}
    if opt_state is None:
        opt_state = AdamState(f.params, cfg.learning_rate, cfg.beta1, cfg.beta2,
                              cfg.adam_eps, cfg.grad_clip)
    opt_state.step(f.params, grads)
    return f, loss, telemetry


def step_g(f, g, x_batch, y_batch, cfg=None, opt_state=None):
    """One ascent step on the discriminator objective; returns (g, objective)."""
    cfg = cfg or TrainConfig(total_outer_iters=1)
    prog, leaf_names = _g_step_program(f.c0, f.c1, f.depth, len(x_batch),
                                       len(y_batch), cfg.epsilon_den)
    _bind_potentials(prog, f, g)
    out = prog.run({"x": x_batch, "y": y_batch})
    objective = float(out[0][0, 0])
    if not np.isfinite(objective):
        raise NonFiniteLoss(f"discriminator objective became {objective}")
    grads = {name.split(".", 1)[1]: val for name, val in zip(leaf_names, out[1:])}
    if opt_state is None:
        opt_state = AdamState(g.params, cfg.learning_rate, cfg.beta1, cfg.beta2,
                              cfg.adam_eps, cfg.grad_clip)
    opt_state.step(g.params, grads)
    return g, objective


# -- data feeds -----------------------------------------------------------------


class _EpochPairs:
    """Aligned minibatches from finite paired data, reshuffled per epoch."""

    def __init__(self, x, y, batch_size, rng):
        if len(x) != len(y):
            raise DimensionMismatch("paired arrays must have equal length")
        self.x = x
        self.y = y
        self.batch_size = min(batch_size, len(x))
        self.rng = rng
        self._order = rng.permutation(len(x))
        self._pos = 0

    def next(self):
        if self._pos + self.batch_size > len(self.x):
            self._order = self.rng.permutation(len(self.x))
            self._pos = 0
        idx = self._order[self._pos:self._pos + self.batch_size]
        self._pos += self.batch_size
        return self.x[idx], self.y[idx]


def train(source_sampler, target_sampler, pairs=None, cfg=None):
    """Full alternating optimization; returns (f, g, TrainHistory).

    `source_sampler`/`target_sampler` are callables (n, seed) -> (n, d+1)
    arrays. With `pairs` = (X, Y) finite index-aligned arrays, minibatches
    come from epoch shuffling instead and the fidelity term is active.
    """
    if cfg is None:
        raise ValueError("cfg is required")
    ss = np.random.SeedSequence(cfg.seed)
    init_f_ss, init_g_ss, batch_ss, eval_ss = ss.spawn(4)
    batch_rng = np.random.default_rng(batch_ss)
    eval_rng = np.random.default_rng(eval_ss)

    if pairs is not None:
        pair_x, pair_y = np.asarray(pairs[0], dtype=np.float64), np.asarray(pairs[1], dtype=np.float64)
        if pair_x.shape != pair_y.shape:
            raise DimensionMismatch(f"paired shapes {pair_x.shape} vs {pair_y.shape}")
        dim = pair_x.shape[1]
        feed = _EpochPairs(pair_x, pair_y, cfg.batch_size, batch_rng)
    else:
        probe_x = source_sampler(2, 0)
        probe_y = target_sampler(2, 0)
        if probe_x.shape[1] != probe_y.shape[1]:
            raise DimensionMismatch(f"source dim {probe_x.shape[1]} vs target {probe_y.shape[1]}")
        dim = probe_x.shape[1]
        feed = None

    f = init_icnn(dim, cfg.hidden_dim, cfg.num_hidden_layers,
                  int(init_f_ss.generate_state(1)[0]))
    g = init_icnn(dim, cfg.hidden_dim, cfg.num_hidden_layers,
                  int(init_g_ss.generate_state(1)[0]))
    opt_f = AdamState(f.params, cfg.learning_rate, cfg.beta1, cfg.beta2,
                      cfg.adam_eps, cfg.grad_clip)
    opt_g = AdamState(g.params, cfg.learning_rate, cfg.beta1, cfg.beta2,
                      cfg.adam_eps, cfg.grad_clip)

    def draw(sampler, n):
        return sampler(n, int(batch_rng.integers(0, 2**63 - 1)))

    def draw_eval(n):
        if pairs is not None:
            idx = eval_rng.choice(len(pair_x), size=min(n, len(pair_x)), replace=False)
            return pair_x[idx], pair_y[idx]
        return (source_sampler(n, int(eval_rng.integers(0, 2**63 - 1))),
                target_sampler(n, int(eval_rng.integers(0, 2**63 - 1))))

    frozen_x, frozen_y = draw_eval(cfg.eval_batch_size)
    history = TrainHistory(
        oracle_frozen=oracle_value(frozen_x, frozen_y),
        backend="",
        config={k: v for k, v in asdict(cfg).items() if not callable(v)},
    )

    log_fh = open(cfg.log_path, "w") if cfg.log_path else None
    start = time.perf_counter()
    last_loss_f = float("nan")
    last_loss_g = float("nan")
    telemetry = {"clamp_rate_den": 0.0, "clamp_rate_cost": 0.0}
    try:
        for it in range(cfg.total_outer_iters):
            for _ in range(cfg.inner_f_steps):
                if pairs is not None:
                    xb, yb = feed.next()
                else:
                    xb, yb = draw(source_sampler, cfg.batch_size), None
                _, last_loss_f, telemetry = step_f(f, g, xb, yb, cfg, opt_f)
            if pairs is not None:
                xb, yb = feed.next()
            else:
                xb = draw(source_sampler, cfg.batch_size)
                yb = draw(target_sampler, cfg.batch_size)
            _, last_loss_g = step_g(f, g, xb, yb, cfg, opt_g)

            if (it + 1) % cfg.eval_every == 0 or it + 1 == cfg.total_outer_iters:
                record = _evaluate(f, g, it + 1, cfg, draw_eval, frozen_x, frozen_y,
                                   history.oracle_frozen, last_loss_f, last_loss_g,
                                   telemetry, start, pairs is not None)
                history.append(record)
                if log_fh:
                    log_fh.write(json.dumps(asdict(record), sort_keys=True) + "\n")
                    log_fh.flush()
                if cfg.checkpoint_dir:
                    save_checkpoint(f, f"{cfg.checkpoint_dir}/f.sotpot", iterations=it + 1)
                    save_checkpoint(g, f"{cfg.checkpoint_dir}/g.sotpot", iterations=it + 1)
                if not (np.isfinite(record.loss_f) and np.isfinite(record.loss_g)):
                    raise DivergenceDetected(f"non-finite losses at iteration {it + 1}")
    finally:
        if log_fh:
            log_fh.close()
    from .autodiff import backend as _backend
    history.backend = _backend.active_backend_name()
    return f, g, history


def _evaluate(f, g, iteration, cfg, draw_eval, frozen_x, frozen_y, oracle_frozen,
              last_loss_f, last_loss_g, telemetry, start, paired):
    ex, ey = draw_eval(cfg.eval_batch_size)
    dual_total = wasserstein_estimate(f, g, ex, ey, cfg.epsilon_den).total
    dual_frozen = wasserstein_estimate(f, g, frozen_x, frozen_y, cfg.epsilon_den).total
    fidelity = float("nan")
    if paired:
        raw, _, _ = transport_rows(f, ex, cfg.epsilon_den)
        fidelity = float(np.mean(spherical_distance_rows(unit_rows(raw), ey)))
    conv_f = midpoint_convexity_violation(f, cfg.convexity_triples, seed=iteration) <= 1e-6
    conv_g = midpoint_convexity_violation(g, cfg.convexity_triples, seed=iteration + 1) <= 1e-6
    return TrainRecord(
        iteration=iteration,
        loss_f=last_loss_f,
        loss_g=last_loss_g,
        dual_total=dual_total,
        dual_frozen=dual_frozen,
        dual_gap_frozen=oracle_frozen - dual_frozen,
        fidelity_mean=fidelity,
        clamp_rate_den=telemetry["clamp_rate_den"],
        clamp_rate_cost=telemetry["clamp_rate_cost"],
        convexity_f_ok=bool(conv_f),
        convexity_g_ok=bool(conv_g),
        wall_time=time.perf_counter() - start,
    )

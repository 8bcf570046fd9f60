"""Differentiation engine: graphs, compiled execution, gradient checking.

`Graph.grad` emits adjoints as ordinary graph nodes, so losses that embed
input-gradients can be differentiated again with respect to parameters.
Execution happens on a flat tape via the compiled Cython kernel when it
is available, with a pure-numpy fallback (see `backend`).
"""

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .graph import Graph, Node
from .program import Program


@dataclass
class GradientReport:
    """Analytic vs central-difference gradients, flattened across leaves."""

    analytic: np.ndarray
    numeric: np.ndarray
    max_rel_error: float
    leaf_order: list
    excluded: list = field(default_factory=list)


def _leaves_of_kind(graph, kinds):
    return [n for n in graph.leaves.values() if n.op in kinds]


def grad_wrt_inputs(graph, output, bindings):
    """Gradient of a scalar output with respect to every input leaf."""
    leaves = _leaves_of_kind(graph, ("input",))
    grads = graph.grad(output, leaves)
    prog = Program(graph, grads)
    values = prog.run(bindings)
    return {leaf.name: val for leaf, val in zip(leaves, values)}


def grad_wrt_params(graph, loss, bindings):
    """Gradients of a scalar loss for every trainable leaf.

    Works when the loss embeds nodes produced by an earlier `graph.grad`
    call (second-order paths).
    """
    leaves = _leaves_of_kind(graph, ("param",))
    grads = graph.grad(loss, leaves)
    prog = Program(graph, grads)
    values = prog.run(bindings)
    return {leaf.name: val for leaf, val in zip(leaves, values)}


def check_gradients(graph, output, bindings, h=1e-6, leaves=None):
    """Central-difference check of every parameter and input leaf.

    Coordinates where the +/-h evaluations land on different sides of a
    clamp boundary (any branch mask changes) are recorded in `excluded`
    and skipped by max_rel_error: the graph is not differentiable there.
    """
    if h <= 0:
        raise ValueError("need h > 0")
    if leaves is None:
        leaves = _leaves_of_kind(graph, ("input", "param"))
    grads = graph.grad(output, leaves)
    # track the leaves so even ones the output does not depend on stay
    # addressable (their analytic and FD gradients are both zero)
    prog = Program(graph, [output] + grads, track=leaves)
    values = prog.run(bindings)
    analytic_parts = values[1:]

    analytic = []
    numeric = []
    excluded = []
    for leaf, grad_val in zip(leaves, analytic_parts):
        base = np.array(prog.leaf_view(leaf.name))
        flat_grad = grad_val.ravel()
        for idx in range(base.size):
            perturbed = base.ravel().copy()
            perturbed[idx] = base.ravel()[idx] + h
            prog.set_leaf(leaf.name, perturbed.reshape(base.shape))
            f_plus = prog.run()[0][0, 0]
            masks_plus = prog.mask_snapshot()
            perturbed[idx] = base.ravel()[idx] - h
            prog.set_leaf(leaf.name, perturbed.reshape(base.shape))
            f_minus = prog.run()[0][0, 0]
            masks_minus = prog.mask_snapshot()
            prog.set_leaf(leaf.name, base)
            kink = any(not np.array_equal(masks_plus[k], masks_minus[k])
                       for k in masks_plus)
            analytic.append(flat_grad[idx])
            numeric.append((f_plus - f_minus) / (2.0 * h))
            if kink:
                excluded.append((leaf.name, idx))
    prog.run()  # restore arena to the unperturbed state
    analytic = np.asarray(analytic)
    numeric = np.asarray(numeric)
    mask = np.ones(analytic.size, dtype=bool)
    flat_index = 0
    positions = {}
    for leaf in leaves:
        size = leaf.shape[0] * leaf.shape[1]
        positions[leaf.name] = flat_index
        flat_index += size
    for name, idx in excluded:
        mask[positions[name] + idx] = False
    if np.any(mask):
        denom = np.maximum(1.0, np.maximum(np.abs(analytic[mask]), np.abs(numeric[mask])))
        max_rel = float(np.max(np.abs(analytic[mask] - numeric[mask]) / denom))
    else:
        max_rel = 0.0
    return GradientReport(analytic=analytic, numeric=numeric, max_rel_error=max_rel,
                          leaf_order=[l.name for l in leaves], excluded=excluded)


__all__ = [
    "Graph",
    "Node",
    "Program",
    "GradientReport",
    "backend",
    "grad_wrt_inputs",
    "grad_wrt_params",
    "check_gradients",
]

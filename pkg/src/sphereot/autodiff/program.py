"""Compilation of graph outputs into a flat instruction tape.

A Program owns a single float64 arena holding every needed node's value.
Leaves are views into the arena (parameters can be updated in place
between runs); instructions are rows of an int64 array plus one float64
aux per instruction, executed by either the compiled Cython kernel or the
pure-numpy fallback. Both backends implement identical op semantics.
"""

import numpy as np

from .graph import LEAF_OPS, MASK_OPS

OPCODES = {
    "matmul": 1,
    "matmul_tn": 2,
    "matmul_nt": 3,
    "add": 4,
    "sub": 5,
    "mul": 6,
    "neg": 7,
    "add_rowvec": 8,
    "colsum": 9,
    "broadcast_rows": 10,
    "scale_rows": 11,
    "dot_rows": 12,
    "sum": 13,
    "broadcast_fill": 14,
    "mul_const": 15,
    "add_const": 16,
    "softplus": 17,
    "sigmoid": 18,
    "exp": 19,
    "log": 20,
    "sqrt": 21,
    "recip": 22,
    "acos": 23,
    "clamp_min": 24,
    "clamp_max": 25,
    "ge_mask": 26,
    "le_mask": 27,
    "clamp_away_zero": 28,
    "away_mask": 29,
    "transpose": 30,
}


class Program:
    """Executable form of a graph restricted to the given output nodes."""

    def __init__(self, graph, outputs, track=()):
        self.graph = graph
        self.outputs = list(outputs)
        self.track = list(track)
        needed = graph.ancestors(self.outputs + self.track)
        order = [n for n in graph.nodes if n.nid in needed]

        self._offset = {}
        self._shape = {}
        total = 0
        for node in order:
            size = node.shape[0] * node.shape[1]
            self._offset[node.nid] = total
            self._shape[node.nid] = node.shape
            total += size
        self.arena = np.zeros(total, dtype=np.float64)

        self._views = {}
        for node in order:
            off = self._offset[node.nid]
            r, c = node.shape
            self._views[node.nid] = self.arena[off:off + r * c].reshape(r, c)

        self.leaf_offsets = {}
        instrs = []
        auxs = []
        for node in order:
            if node.op == "const":
                np.copyto(self._views[node.nid], graph.const_values[node.nid])
                continue
            if node.op in LEAF_OPS:
                self.leaf_offsets[node.name] = node.nid
                continue
            op = OPCODES[node.op]
            out = self._offset[node.nid]
            a = self._offset[node.parents[0].nid]
            b = self._offset[node.parents[1].nid] if len(node.parents) > 1 else 0
            m, n = node.shape
            k = self._instr_k(node)
            instrs.append((op, out, a, b, m, n, k))
            auxs.append(node.aux)
        self.instrs = np.asarray(instrs, dtype=np.int64).reshape(len(instrs), 7)
        self.aux = np.asarray(auxs, dtype=np.float64)

        self._mask_nodes = [n for n in order if n.op in MASK_OPS]

        from . import backend
        self._exec = backend.get_executor()
        self._exec_prepared = self._exec.prepare(self)

    @staticmethod
    def _instr_k(node):
        op = node.op
        if op in ("matmul", "matmul_nt"):
            return node.parents[0].shape[1]
        if op == "matmul_tn":
            return node.parents[0].shape[0]
        if op == "colsum":
            return node.parents[0].shape[0]
        if op == "dot_rows":
            return node.parents[0].shape[1]
        if op == "sum":
            return node.parents[0].shape[0] * node.parents[0].shape[1]
        if op == "transpose":
            return node.parents[0].shape[1]
        return 0

    # -- leaf access -------------------------------------------------------

    def leaf_view(self, name):
        """Writable arena view of a leaf; updates persist across runs."""
        return self._views[self.leaf_offsets[name]]

    def has_leaf(self, name):
        return name in self.leaf_offsets

    def set_leaf(self, name, value):
        view = self.leaf_view(name)
        np.copyto(view, np.asarray(value, dtype=np.float64).reshape(view.shape))

    def bind(self, bindings):
        for name, value in bindings.items():
            if name in self.leaf_offsets:
                self.set_leaf(name, value)

    # -- execution ----------------------------------------------------------

    def run(self, bindings=None):
        """Execute the tape; returns copies of the output node values."""
        if bindings:
            self.bind(bindings)
        self._exec.run(self._exec_prepared)
        return [np.array(self._views[n.nid]) for n in self.outputs]

    def value(self, node):
        """Read-only view of any computed node (valid after run())."""
        return self._views[node.nid]

    def mask_snapshot(self):
        """Values of every branch-selection mask, for kink detection."""
        return {n.nid: self._views[n.nid].copy() for n in self._mask_nodes}

    @property
    def backend_name(self):
        return self._exec.name

"""Scalar-output computation graphs over fixed-shape float64 arrays.

Every node is a (rows, cols) array; scalars are (1, 1), per-row values
are (m, 1) and row vectors are (1, n). There is no general broadcasting:
the op set is small and closed under differentiation, so `grad` can emit
adjoints as ordinary graph nodes and the result can be differentiated
again (the second-order paths the training losses need).

Subgradients at clamp kinks take the derivative of the active branch;
mask nodes record which branch was active so gradient checks can exclude
boundary points.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionMismatch, NonScalarOutput

LEAF_OPS = ("input", "param", "const")
MASK_OPS = ("ge_mask", "le_mask", "away_mask")


@dataclass(frozen=True, eq=False)
class Node:
    graph: "Graph"
    nid: int
    op: str
    parents: tuple
    shape: tuple
    aux: float = 0.0
    name: str = None

    def __repr__(self):
        tag = f" {self.name!r}" if self.name else ""
        return f"<Node {self.nid} {self.op}{tag} {self.shape}>"


def _scalar(node):
    return node.shape == (1, 1)


class Graph:
    """Builder for a DAG of array ops; nodes are created in topological order."""

    def __init__(self):
        self.nodes = []
        self.const_values = {}
        self._memo = {}
        self._leaf_names = {}

    # -- construction ---------------------------------------------------

    def _new(self, op, parents, shape, aux=0.0, name=None):
        key = None
        if op not in LEAF_OPS:
            key = (op, tuple(p.nid for p in parents), aux)
            hit = self._memo.get(key)
            if hit is not None:
                return hit
        node = Node(self, len(self.nodes), op, tuple(parents), tuple(shape), aux, name)
        self.nodes.append(node)
        if key is not None:
            self._memo[key] = node
        return node

    def _leaf(self, op, name, shape):
        if name in self._leaf_names:
            raise ValueError(f"duplicate leaf name {name!r}")
        node = self._new(op, (), shape, name=name)
        self._leaf_names[name] = node
        return node

    def input(self, name, shape):
        """Data leaf: bound per evaluation, never differentiated into."""
        return self._leaf("input", name, shape)

    def param(self, name, shape):
        """Trainable leaf."""
        return self._leaf("param", name, shape)

    def leaf(self, name):
        return self._leaf_names[name]

    @property
    def leaves(self):
        return dict(self._leaf_names)

    def const(self, value):
        value = np.atleast_2d(np.asarray(value, dtype=np.float64))
        key = ("const", value.shape, value.tobytes())
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        node = self._new("const", (), value.shape)
        self.const_values[node.nid] = value
        self._memo[key] = node
        return node

    # -- shape helpers ----------------------------------------------------

    def _require(self, cond, msg):
        if not cond:
            raise DimensionMismatch(msg)

    # -- binary ops -------------------------------------------------------

    def matmul(self, a, b):
        """out[m,n] = a[m,k] @ b[k,n]"""
        self._require(a.shape[1] == b.shape[0], f"matmul {a.shape} @ {b.shape}")
        return self._new("matmul", (a, b), (a.shape[0], b.shape[1]))

    def matmul_tn(self, a, b):
        """out[m,n] = a[k,m]^T @ b[k,n]"""
        self._require(a.shape[0] == b.shape[0], f"matmul_tn {a.shape}, {b.shape}")
        return self._new("matmul_tn", (a, b), (a.shape[1], b.shape[1]))

    def matmul_nt(self, a, b):
        """out[m,n] = a[m,k] @ b[n,k]^T"""
        self._require(a.shape[1] == b.shape[1], f"matmul_nt {a.shape}, {b.shape}")
        return self._new("matmul_nt", (a, b), (a.shape[0], b.shape[0]))

    def add(self, a, b):
        self._require(a.shape == b.shape, f"add {a.shape}, {b.shape}")
        return self._new("add", (a, b), a.shape)

    def sub(self, a, b):
        self._require(a.shape == b.shape, f"sub {a.shape}, {b.shape}")
        return self._new("sub", (a, b), a.shape)

    def mul(self, a, b):
        self._require(a.shape == b.shape, f"mul {a.shape}, {b.shape}")
        return self._new("mul", (a, b), a.shape)

    def add_rowvec(self, m, v):
        """m[r,c] + v[1,c] broadcast over rows."""
        self._require(v.shape == (1, m.shape[1]), f"add_rowvec {m.shape}, {v.shape}")
        return self._new("add_rowvec", (m, v), m.shape)

    def scale_rows(self, m, s):
        """m[r,c] * s[r,1] broadcast over columns."""
        self._require(s.shape == (m.shape[0], 1), f"scale_rows {m.shape}, {s.shape}")
        return self._new("scale_rows", (m, s), m.shape)

    def dot_rows(self, a, b):
        """Per-row inner products -> (r, 1)."""
        self._require(a.shape == b.shape, f"dot_rows {a.shape}, {b.shape}")
        return self._new("dot_rows", (a, b), (a.shape[0], 1))

    # -- shape-changing ops -------------------------------------------------

    def colsum(self, m):
        return self._new("colsum", (m,), (1, m.shape[1]))

    def broadcast_rows(self, v, rows):
        self._require(v.shape[0] == 1, f"broadcast_rows of {v.shape}")
        return self._new("broadcast_rows", (v,), (rows, v.shape[1]))

    def sum(self, a):
        return self._new("sum", (a,), (1, 1))

    def broadcast_fill(self, s, shape):
        self._require(_scalar(s), f"broadcast_fill of {s.shape}")
        return self._new("broadcast_fill", (s,), tuple(shape))

    def transpose(self, a):
        return self._new("transpose", (a,), (a.shape[1], a.shape[0]))

    def mean(self, a):
        return self.mul_const(self.sum(a), 1.0 / (a.shape[0] * a.shape[1]))

    # -- unary / const-parameter ops -----------------------------------------

    def neg(self, a):
        return self._new("neg", (a,), a.shape)

    def mul_const(self, a, c):
        return self._new("mul_const", (a,), a.shape, aux=float(c))

    def add_const(self, a, c):
        return self._new("add_const", (a,), a.shape, aux=float(c))

    def softplus(self, a):
        return self._new("softplus", (a,), a.shape)

    def sigmoid(self, a):
        return self._new("sigmoid", (a,), a.shape)

    def exp(self, a):
        return self._new("exp", (a,), a.shape)

    def log(self, a):
        return self._new("log", (a,), a.shape)

    def sqrt(self, a):
        return self._new("sqrt", (a,), a.shape)

    def recip(self, a):
        return self._new("recip", (a,), a.shape)

    def acos(self, a):
        return self._new("acos", (a,), a.shape)

    def clamp_min(self, a, c):
        return self._new("clamp_min", (a,), a.shape, aux=float(c))

    def clamp_max(self, a, c):
        return self._new("clamp_max", (a,), a.shape, aux=float(c))

    def clamp(self, a, lo, hi):
        return self.clamp_max(self.clamp_min(a, lo), hi)

    def ge_mask(self, a, c):
        """1.0 where a >= c else 0.0; treated as constant by grad."""
        return self._new("ge_mask", (a,), a.shape, aux=float(c))

    def le_mask(self, a, c):
        return self._new("le_mask", (a,), a.shape, aux=float(c))

    def clamp_away_zero(self, a, eps):
        """sign(a) * max(|a|, eps) with sign(0) = +1."""
        return self._new("clamp_away_zero", (a,), a.shape, aux=float(eps))

    def away_mask(self, a, eps):
        """1.0 where |a| >= eps else 0.0; constant under grad."""
        return self._new("away_mask", (a,), a.shape, aux=float(eps))

    # -- differentiation -------------------------------------------------

    def _vjp(self, node, g):
        """Adjoint contributions for node's parents, as graph nodes."""
        op = node.op
        a = node.parents[0] if node.parents else None
        b = node.parents[1] if len(node.parents) > 1 else None
        if op == "matmul":
            return [self.matmul_nt(g, b), self.matmul_tn(a, g)]
        if op == "matmul_tn":
            return [self.matmul_nt(b, g), self.matmul(a, g)]
        if op == "matmul_nt":
            return [self.matmul(g, b), self.matmul_tn(g, a)]
        if op == "add":
            return [g, g]
        if op == "sub":
            return [g, self.neg(g)]
        if op == "mul":
            return [self.mul(g, b), self.mul(g, a)]
        if op == "add_rowvec":
            return [g, self.colsum(g)]
        if op == "scale_rows":
            return [self.scale_rows(g, b), self.dot_rows(g, a)]
        if op == "dot_rows":
            return [self.scale_rows(b, g), self.scale_rows(a, g)]
        if op == "colsum":
            return [self.broadcast_rows(g, a.shape[0])]
        if op == "broadcast_rows":
            return [self.colsum(g)]
        if op == "sum":
            return [self.broadcast_fill(g, a.shape)]
        if op == "broadcast_fill":
            return [self.sum(g)]
        if op == "transpose":
            return [self.transpose(g)]
        if op == "neg":
            return [self.neg(g)]
        if op == "mul_const":
            return [self.mul_const(g, node.aux)]
        if op == "add_const":
            return [g]
        if op == "softplus":
            return [self.mul(g, self.sigmoid(a))]
        if op == "sigmoid":
            one_minus = self.add_const(self.neg(node), 1.0)
            return [self.mul(g, self.mul(node, one_minus))]
        if op == "exp":
            return [self.mul(g, node)]
        if op == "log":
            return [self.mul(g, self.recip(a))]
        if op == "sqrt":
            return [self.mul(g, self.mul_const(self.recip(node), 0.5))]
        if op == "recip":
            return [self.neg(self.mul(g, self.mul(node, node)))]
        if op == "acos":
            one_minus_sq = self.add_const(self.neg(self.mul(a, a)), 1.0)
            return [self.neg(self.mul(g, self.recip(self.sqrt(one_minus_sq))))]
        if op == "clamp_min":
            return [self.mul(g, self.ge_mask(a, node.aux))]
        if op == "clamp_max":
            return [self.mul(g, self.le_mask(a, node.aux))]
        if op == "clamp_away_zero":
            return [self.mul(g, self.away_mask(a, node.aux))]
        if op in MASK_OPS:
            return [None]
        raise AssertionError(f"no VJP rule for op {op!r}")

    def ancestors(self, roots):
        seen = set()
        stack = list(roots)
        while stack:
            node = stack.pop()
            if node.nid in seen:
                continue
            seen.add(node.nid)
            stack.extend(node.parents)
        return seen

    def grad(self, output, wrt):
        """Reverse-mode adjoints of a scalar output, as new graph nodes.

        Returns one node per entry of `wrt` (zero constants for leaves the
        output does not depend on). Because adjoints are ordinary nodes,
        the result can be embedded in further expressions and
        differentiated again.
        """
        if not _scalar(output):
            raise NonScalarOutput(f"grad needs a (1,1) output, got {output.shape}")
        wrt = list(wrt)
        relevant = self.ancestors([output])
        adjoint = {output.nid: self.const(np.ones((1, 1)))}
        # Nodes were created in topological order, so descending nid is a
        # valid reverse order; only walk the output's ancestor cone.
        for node in reversed(self.nodes[: output.nid + 1]):
            if node.nid not in relevant or node.nid not in adjoint:
                continue
            if not node.parents:
                continue
            g = adjoint[node.nid]
            contribs = self._vjp(node, g)
            for parent, contrib in zip(node.parents, contribs):
                if contrib is None:
                    continue
                prev = adjoint.get(parent.nid)
                adjoint[parent.nid] = contrib if prev is None else self.add(prev, contrib)
        out = []
        for w in wrt:
            node = adjoint.get(w.nid)
            if node is None:
                node = self.const(np.zeros(w.shape))
            out.append(node)
        return out

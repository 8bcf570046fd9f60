"""Pure-numpy tape executor: the fallback when the Cython kernel is absent.

Semantics must match _tape_cy exactly (same clamp boundaries, same
stable softplus/sigmoid formulas); tests compare the two executors on
every opcode.
"""

import numpy as np
from scipy.special import expit

name = "python"


def prepare(program):
    """Precompile the instruction list into closures over arena views."""
    arena = program.arena
    steps = []
    for row, aux in zip(program.instrs, program.aux):
        op, out, a, b, m, n, k = (int(v) for v in row)
        aux = float(aux)
        ov = arena[out:out + m * n].reshape(m, n)
        steps.append(_make_step(op, ov, arena, a, b, m, n, k, aux))
    return steps


def run(steps):
    for step in steps:
        step()


def _make_step(op, ov, arena, a, b, m, n, k, aux):
    def view(off, r, c):
        return arena[off:off + r * c].reshape(r, c)

    if op == 1:  # matmul
        av, bv = view(a, m, k), view(b, k, n)
        return lambda: np.matmul(av, bv, out=ov)
    if op == 2:  # matmul_tn
        av, bv = view(a, k, m), view(b, k, n)
        return lambda: np.matmul(av.T, bv, out=ov)
    if op == 3:  # matmul_nt
        av, bv = view(a, m, k), view(b, n, k)
        return lambda: np.matmul(av, bv.T, out=ov)
    if op == 4:
        av, bv = view(a, m, n), view(b, m, n)
        return lambda: np.add(av, bv, out=ov)
    if op == 5:
        av, bv = view(a, m, n), view(b, m, n)
        return lambda: np.subtract(av, bv, out=ov)
    if op == 6:
        av, bv = view(a, m, n), view(b, m, n)
        return lambda: np.multiply(av, bv, out=ov)
    if op == 7:
        av = view(a, m, n)
        return lambda: np.negative(av, out=ov)
    if op == 8:  # add_rowvec
        av, bv = view(a, m, n), view(b, 1, n)
        return lambda: np.add(av, bv, out=ov)
    if op == 9:  # colsum
        av = view(a, k, n)
        return lambda: np.sum(av, axis=0, keepdims=True, out=ov)
    if op == 10:  # broadcast_rows
        av = view(a, 1, n)
        return lambda: np.copyto(ov, av)
    if op == 11:  # scale_rows
        av, bv = view(a, m, n), view(b, m, 1)
        return lambda: np.multiply(av, bv, out=ov)
    if op == 12:  # dot_rows
        av, bv = view(a, m, k), view(b, m, k)
        target = ov[:, 0]
        return lambda: np.einsum("ij,ij->i", av, bv, out=target)
    if op == 13:  # sum
        flat = arena[a:a + k]
        return lambda: ov.__setitem__((0, 0), flat.sum())
    if op == 14:  # broadcast_fill
        av = view(a, 1, 1)
        return lambda: ov.fill(av[0, 0])
    if op == 15:
        av = view(a, m, n)
        return lambda: np.multiply(av, aux, out=ov)
    if op == 16:
        av = view(a, m, n)
        return lambda: np.add(av, aux, out=ov)
    if op == 17:  # softplus
        av = view(a, m, n)
        return lambda: np.logaddexp(0.0, av, out=ov)
    if op == 18:  # sigmoid
        av = view(a, m, n)
        return lambda: expit(av, out=ov)
    if op == 19:
        av = view(a, m, n)
        return lambda: np.exp(av, out=ov)
    if op == 20:
        av = view(a, m, n)
        return lambda: np.log(av, out=ov)
    if op == 21:
        av = view(a, m, n)
        return lambda: np.sqrt(av, out=ov)
    if op == 22:
        av = view(a, m, n)
        return lambda: np.divide(1.0, av, out=ov)
    if op == 23:
        av = view(a, m, n)
        return lambda: np.arccos(av, out=ov)
    if op == 24:
        av = view(a, m, n)
        return lambda: np.maximum(av, aux, out=ov)
    if op == 25:
        av = view(a, m, n)
        return lambda: np.minimum(av, aux, out=ov)
    if op == 26:  # ge_mask
        av = view(a, m, n)
        return lambda: np.greater_equal(av, aux, out=ov, casting="unsafe")
    if op == 27:  # le_mask
        av = view(a, m, n)
        return lambda: np.less_equal(av, aux, out=ov, casting="unsafe")
    if op == 28:  # clamp_away_zero: sign(x)*max(|x|, eps), sign(0) = +1
        av = view(a, m, n)

        def away():
            np.maximum(np.abs(av), aux, out=ov)
            np.copysign(ov, np.where(av >= 0.0, 1.0, -1.0), out=ov)
        return away
    if op == 29:  # away_mask
        av = view(a, m, n)

        def away_mask():
            np.greater_equal(np.abs(av), aux, out=ov, casting="unsafe")
        return away_mask
    if op == 30:  # transpose
        av = view(a, n, m)
        return lambda: np.copyto(ov, av.T)
    raise AssertionError(f"unknown opcode {op}")

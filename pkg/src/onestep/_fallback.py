"""Pure-Python kernels, used when the compiled extension is unavailable.

Must stay draw-for-draw identical to ``_ext.pyx``: both consume the same
PCG64 stream through ``next_double`` and use the same floating-point
expressions, so ensembles are bit-identical across backends.
"""

import math

import numpy as np

_BLOCK = 512


def master_rhs(a, c, p, out=None):
    """Tridiagonal master-equation right-hand side, ``out[k] = a_{k-1}p_{k-1} - (a_k+c_k)p_k + c_{k+1}p_{k+1}``."""
    if out is None:
        out = np.empty_like(p)
    ap = a * p
    cp = c * p
    np.negative(ap, out=out)
    out -= cp
    out[1:] += ap[:-1]
    out[:-1] += cp[1:]
    return out


class _Uniforms:
    """Sequential ``next_double`` draws from a PCG64 stream, fetched in blocks."""

    def __init__(self, seed):
        self._gen = np.random.Generator(np.random.PCG64(seed))
        self._buf = []
        self._i = 0

    def __call__(self):
        if self._i == len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        return u


def sample_run(a, c, k0, t_grid, seed):
    """States of one direct-method path at each grid time (right-continuous)."""
    a = a.tolist() if hasattr(a, "tolist") else list(a)
    c = c.tolist() if hasattr(c, "tolist") else list(c)
    tg = t_grid.tolist() if hasattr(t_grid, "tolist") else list(t_grid)
    N = len(a) - 1
    G = len(tg)
    out = [0] * G
    draw = _Uniforms(seed)
    k = k0
    t = 0.0
    g = 0
    while g < G:
        total = a[k] + c[k]
        if total <= 0.0:
            while g < G:
                out[g] = k
                g += 1
            break
        u = draw()
        t_next = t - math.log1p(-u) / total
        while g < G and tg[g] < t_next:
            out[g] = k
            g += 1
        if g >= G:
            break
        v = draw()
        if v * total < a[k]:
            k += 1
        else:
            k -= 1
        if k < 0 or k > N:
            raise RuntimeError(f"path left the state space at t={t_next!r}")
        t = t_next
    return out


def ssa_ensemble(a, c, k0, t_grid, seeds):
    """Per-grid-point sums of ``X`` and ``X**2`` over runs seeded by ``seeds``.

    Returns two int64 arrays; integer accumulation keeps the reduction exact
    and independent of run order.
    """
    G = len(t_grid)
    s1 = [0] * G
    s2 = [0] * G
    for seed in seeds:
        states = sample_run(a, c, k0, t_grid, int(seed))
        for g, k in enumerate(states):
            s1[g] += k
            s2[g] += k * k
    return np.array(s1, dtype=np.int64), np.array(s2, dtype=np.int64)

"""Grid estimates of the symbol-class seminorms M^m_{j,k} and N^m_{s,k}.

x-derivatives use periodic fourth-order central differences on the grid
nodes.  xi-derivatives use a mapped grid xi = exp(s) - 1 on each half-line
(uniform in s) with fourth-order stencils, one-sided at the ends, so the
kink of |xi| at the origin never enters a stencil.  Every estimate is
repeated on a doubled grid; a relative change above ``rtol`` raises the
``not_converged`` flag.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec
from .profiles import discrete_sobolev_norm, fd_derivative_periodic
from .symbols import Symbol


@dataclass(frozen=True)
class SeminormEstimate:
    kind: str  # "M" or "N"
    indices: tuple  # (j or s, k, m)
    value: float
    refined_value: float
    grid_meta: dict
    flags: tuple = field(default=())

    @property
    def converged(self) -> bool:
        return "not_converged" not in self.flags

    def to_dict(self):
        return {"kind": self.kind, "indices": list(self.indices), "value": self.value,
                "refined_value": self.refined_value, "grid_meta": self.grid_meta,
                "flags": list(self.flags)}


def fd4_nonperiodic(v, h, axis=-1):
    """Fourth-order first derivative along ``axis``; one-sided five-point stencils at the ends."""
    v = np.moveaxis(np.asarray(v), axis, -1)
    if v.shape[-1] < 5:
        raise ValueError("need at least 5 samples")
    out = np.empty_like(v)
    out[..., 2:-2] = (v[..., :-4] - 8 * v[..., 1:-3] + 8 * v[..., 3:-1] - v[..., 4:]) / (12 * h)
    out[..., 0] = (-25 * v[..., 0] + 48 * v[..., 1] - 36 * v[..., 2] + 16 * v[..., 3] - 3 * v[..., 4]) / (12 * h)
    out[..., 1] = (-3 * v[..., 0] - 10 * v[..., 1] + 18 * v[..., 2] - 6 * v[..., 3] + v[..., 4]) / (12 * h)
    out[..., -1] = (25 * v[..., -1] - 48 * v[..., -2] + 36 * v[..., -3] - 16 * v[..., -4] + 3 * v[..., -5]) / (12 * h)
    out[..., -2] = (3 * v[..., -1] + 10 * v[..., -2] - 18 * v[..., -3] + 6 * v[..., -4] - v[..., -5]) / (12 * h)
    return np.moveaxis(out, -1, axis)


def _half_line(xi_max, count):
    s = np.linspace(0.0, np.log1p(xi_max), count)
    return s, np.expm1(s)


def _xi_derivatives(samples, s, k):
    """[a, d_xi a, ..., d_xi^k a] on the mapped half-line grid (xi along the last axis)."""
    h = s[1] - s[0]
    jac = np.exp(-s)  # d s / d xi
    out = [samples]
    cur = samples
    for _ in range(k):
        cur = jac * fd4_nonperiodic(cur, h, axis=-1)
        out.append(cur)
    return out


def _m_value(a: Symbol, j, k, m, grid: GridSpec, xi_max, n_xi):
    x = grid.x_nodes
    s, xi_pos = _half_line(xi_max, n_xi)
    best = 0.0
    for sign in (1.0, -1.0):
        samples = a.sample(x, sign * xi_pos)
        for beta, dxi in enumerate(_xi_derivatives(samples, s, k)):
            weight = (1 + xi_pos) ** (beta - m)
            for alpha in range(j + 1):
                if alpha and a.x_independent:
                    break
                v = fd_derivative_periodic(dxi.T, grid.dx, alpha).T if alpha else dxi
                best = max(best, float(np.max(np.abs(v) * weight)))
    return best


def seminorm_M(a: Symbol, j: int, k: int, m: float, grid: GridSpec, xi_max=None,
               n_xi=None, rtol=0.05) -> SeminormEstimate:
    """sup over alpha <= j, beta <= k of (1+|xi|)^(beta-m) |d_x^alpha d_xi^beta a|, |xi| <= xi_max."""
    xi_max = grid.xi_max if xi_max is None else xi_max
    n_xi = 2 * grid.n if n_xi is None else n_xi
    v = _m_value(a, j, k, m, grid, xi_max, n_xi)
    v2 = _m_value(a, j, k, m, grid.refined(), xi_max, 2 * n_xi)
    flags = []
    if abs(v2 - v) > rtol * max(abs(v), abs(v2), 1e-300):
        flags.append("not_converged")
    meta = {"n": grid.n, "period": grid.period, "fd_order": 4, "xi_max": xi_max, "n_xi": n_xi}
    return SeminormEstimate("M", (j, k, m), v, v2, meta, tuple(flags))


def _n_value(a: Symbol, s_reg, k, m, grid: GridSpec, xi_max, n_xi):
    x = grid.x_nodes
    s, xi_pos = _half_line(xi_max, n_xi)
    best = 0.0
    mean_ratio = 0.0
    for sign in (1.0, -1.0):
        samples = a.sample(x, sign * xi_pos)
        for beta, dxi in enumerate(_xi_derivatives(samples, s, k)):
            weight = (1 + xi_pos) ** (beta - m)
            norms = np.array([discrete_sobolev_norm(dxi[:, i], grid, s_reg) for i in range(n_xi)])
            best = max(best, float(np.max(norms * weight)))
            if beta == 0:
                col = samples[:, -1]
                osc = float(np.ptp(np.abs(col)))
                mean = abs(np.mean(col))
                scale = max(float(np.max(np.abs(samples))), 1e-300)
                if mean > 1e-12 * scale:
                    mean_ratio = max(mean_ratio, mean / max(osc, 1e-300))
    return best, mean_ratio


def seminorm_N(a: Symbol, s: float, k: int, m: float, grid: GridSpec, xi_max=None,
               n_xi=None, rtol=0.05) -> SeminormEstimate:
    """sup over beta <= k and |xi| <= xi_max of (1+|xi|)^(beta-m) ||d_xi^beta a(., xi)||_{H^s}.

    Flags ``nonzero_mean`` when a(., xi_max) has an x-mean larger than
    its oscillation, i.e. the symbol was not reduced to its Pi-part.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    xi_max = grid.xi_max if xi_max is None else xi_max
    n_xi = grid.n if n_xi is None else n_xi
    v, ratio = _n_value(a, s, k, m, grid, xi_max, n_xi)
    v2, _ = _n_value(a, s, k, m, grid.refined(), xi_max, 2 * n_xi)
    flags = []
    if abs(v2 - v) > rtol * max(abs(v), abs(v2), 1e-300):
        flags.append("not_converged")
    if ratio > 1:
        flags.append("nonzero_mean")
    meta = {"n": grid.n, "period": grid.period, "fd_order": 4, "xi_max": xi_max, "n_xi": n_xi}
    return SeminormEstimate("N", (s, k, m), v, v2, meta, tuple(flags))

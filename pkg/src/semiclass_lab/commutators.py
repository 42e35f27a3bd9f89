"""Semicommutators, their frequency-localized pieces, and the Gamma-transform.

For symbols p1, p2 the semicommutator at scale t is

    c_t(p1, p2) = p1(x, tD) p2(x, tD) - (p1 p2)(x, tD),

and on the grid it has the exact kernel form

    c_t f(x_k) = dxi sum_m K(x_k, eta_m) fhat(eta_m),
    K(x_k, eta) = dxi sum_xi e^{2 pi i x_k xi} (p1(x_k, t xi) - p1(x_k, t eta)) p2hat(xi - eta; t eta),

where p2hat(.; t eta) is the x-transform of y -> p2(y, t eta) and xi - eta
is read modulo the grid period in frequency.  Inserting a window
phi(t (xi - eta)) gives the localized piece; the windows of a dyadic
partition add up to the full semicommutator.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, GridSpec, fft_phys, spectral_derivative
from .quantize import QuantizedOperator, compose, quantize_semiclassical
from .symbols import Symbol

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CommutatorSpec:
    """Inputs of a (localized) semicommutator.

    ``window`` is a symbol of xi only applied as phi(t (xi - eta)); None
    means no localization.
    """

    p1: Symbol
    p2: Symbol
    t: float = 1.0
    window: Symbol | None = None
    orders: tuple | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 < self.t <= 1:
            raise ValueError(f"t must lie in (0, 1], got {self.t}")
        if self.orders is None:
            object.__setattr__(self, "orders", (self.p1.order, self.p2.order))

    @property
    def mu(self) -> float:
        return max(self.orders[0], self.orders[1], 0.0)

    @property
    def window_support(self):
        """(inner, outer) radii of supp phi, or None."""
        if self.window is None:
            return None
        return self.window.meta.get("support")

    @property
    def interval_length(self):
        """|I_phi| for I_phi = Conv(supp phi U {0}), assuming an even window."""
        sup = self.window_support
        return None if sup is None else 2.0 * sup[1]

    @property
    def support_distance(self):
        """Distance from supp phi to the origin."""
        sup = self.window_support
        return None if sup is None else sup[0]


def semicommutator(spec: CommutatorSpec, grid: GridSpec) -> QuantizedOperator:
    """p1(x, tD) p2(x, tD) - (p1 p2)(x, tD) as a dense matrix."""
    A = quantize_semiclassical(spec.p1, spec.t, grid)
    B = quantize_semiclassical(spec.p2, spec.t, grid)
    AB = quantize_semiclassical(spec.p1 * spec.p2, spec.t, grid)
    out = compose(A, B) - AB
    return QuantizedOperator(grid, out.matrix, "derived", spec.t,
                             f"c_t({spec.p1.label},{spec.p2.label})")


def _p2_hat(p2: Symbol, t: float, grid: GridSpec):
    """Unshifted x-transform of y -> p2(y, t eta_m), one column per eta_m."""
    S2 = p2.sample(grid.x_nodes, t * grid.freq_nodes)
    return grid.dx * np.fft.fft(S2, axis=0)


def localized_kernel(spec: CommutatorSpec, grid: GridSpec, window_values=None) -> np.ndarray:
    """K[k, m] of the localized semicommutator (O(n^3) via two matrix products).

    ``window_values`` may supply phi(t (xi_i - eta_m)) directly as an n x n array.
    """
    n, t = grid.n, spec.t
    mi = grid.mode_indices
    diff = (mi[:, None] - mi[None, :]) * grid.dxi  # xi_i - eta_m, not wrapped
    if window_values is None:
        if spec.window is None:
            window_values = 1.0
        else:
            window_values = np.real(spec.window(0.0, t * diff))
    P2u = _p2_hat(spec.p2, t, grid)
    W = window_values * P2u[(mi[:, None] - mi[None, :]) % n, np.arange(n)[None, :]]
    P1 = spec.p1.sample(grid.x_nodes, t * grid.freq_nodes)
    E = np.exp(2j * np.pi * np.outer(np.arange(n), mi) / n)
    return grid.dxi * ((E * P1) @ W - P1 * (E @ W))


def kernel_operator(K: np.ndarray, grid: GridSpec, t=1.0, label="custom") -> QuantizedOperator:
    """Matrix of f -> dxi * K @ fhat."""
    F = grid.dx * np.fft.fftshift(np.fft.fft(np.eye(grid.n), axis=0), axes=0)
    return QuantizedOperator(grid, grid.dxi * K @ F, "derived", t, label)


def localized_commutator(spec: CommutatorSpec, grid: GridSpec) -> QuantizedOperator:
    K = localized_kernel(spec, grid)
    j = spec.window.meta.get("j") if spec.window is not None else None
    return kernel_operator(K, grid, spec.t, f"c_t,phi_{j}({spec.p1.label},{spec.p2.label})")


def window_status(j: int, t: float, grid: GridSpec) -> str:
    """'empty', 'resolved', or 'partial' for the window phi_j(t (xi - eta)).

    Differences xi - eta on the grid reach about 2 xi_max, so phi_j acts as
    zero once 2^(j-1) >= 2 t xi_max.  It is resolved when its whole support
    fits inside |t (xi - eta)| <= t xi_max.
    """
    if j == -1:
        return "resolved"
    reach = t * 2 * grid.xi_max
    if 2.0 ** (j - 1) >= reach:
        return "empty"
    if 2.0 ** (j + 1) <= t * grid.xi_max:
        return "resolved"
    return "partial"


def dyadic_pieces(p1: Symbol, p2: Symbol, t: float, grid: GridSpec, windows) -> dict:
    """Localized commutators for each window with grid support; empty windows are logged and skipped."""
    out = {}
    for w in windows:
        j = w.meta["j"]
        status = window_status(j, t, grid)
        if status == "empty":
            log.info("window j=%d has no support on the grid at t=%g; skipped", j, t)
            continue
        out[j] = localized_commutator(CommutatorSpec(p1, p2, t, w), grid)
    return out


# Gamma-transform and the duality bound.

def default_gamma(w):
    return 1.0 / (1.0 + 2j * np.pi * np.asarray(w))


def gamma_samples(gamma, grid: GridSpec):
    """gamma at the nearest periodic image of q dx, q = 0..n-1."""
    if callable(gamma):
        q = np.arange(grid.n)
        w = np.where(q < grid.n // 2, q, q - grid.n) * grid.dx
        return np.asarray(gamma(w), dtype=complex)
    return np.asarray(gamma, dtype=complex)


def gamma_transform(f: GridFunction, gamma=default_gamma, sign: int = +1) -> np.ndarray:
    """Gamma^{+-}(y_k, eta_m) = dx sum_j exp(-+ 2 pi i eta_m z_j) gamma(y_k -+ z_j) f(z_j).

    Rows index y, columns index eta in physical order.
    """
    g = f.grid
    n = g.n
    gv = gamma_samples(gamma, g)
    k = np.arange(n)
    idx = (k[:, None] - sign * k[None, :]) % n
    G = gv[idx] * f.values[None, :]
    if sign > 0:
        return g.dx * np.fft.fftshift(np.fft.fft(G, axis=1), axes=1)
    return g.dx * n * np.fft.fftshift(np.fft.ifft(G, axis=1), axes=1)


def two_variable_l2(Q: np.ndarray, grid: GridSpec) -> float:
    return float(np.sqrt(grid.dx * grid.dxi * np.sum(np.abs(Q) ** 2)))


def synthesize(Q: np.ndarray, grid: GridSpec) -> np.ndarray:
    """A_Q(x_k) = dxi sum_m exp(2 pi i x_k xi_m) Q(x_k, xi_m)."""
    n = grid.n
    E = np.exp(2j * np.pi * np.outer(np.arange(n), grid.mode_indices) / n)
    return grid.dxi * np.sum(E * Q, axis=1)


def duality_bound_check(Q: np.ndarray, grid: GridSpec) -> tuple:
    """(||A_Q||_{L2}, ||(1 - d_x) Q||_{L2 of both variables})."""
    A = synthesize(Q, grid)
    lhs = float(np.sqrt(grid.dx * np.sum(np.abs(A) ** 2)))
    rhs = two_variable_l2(Q - spectral_derivative(Q, grid, 1, axis=0), grid)
    return lhs, rhs


def duality_constant(grid: GridSpec) -> float:
    """Sharp grid constant (dxi sum_lambda 1/(1 + 4 pi^2 lambda^2))^(1/2); tends to 1/sqrt(2) as L grows."""
    lam = grid.freq_nodes
    return float(np.sqrt(grid.dxi * np.sum(1.0 / (1.0 + 4 * np.pi**2 * lam**2))))

"""Evaluable symbols a(x, xi) and the factories for the mixing-zone family."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import GridFunction
from .profiles import SpeedProfile, periodic_offset, smooth_step

LABELS = ("d", "p", "p_inv", "d_t", "p_M", "weight_s", "bump", "dyadic_j", "product", "custom")

_XI_PROBE = np.concatenate([-np.logspace(-3, 4, 120)[::-1], [0.0], np.logspace(-3, 4, 120)])


@dataclass(frozen=True, eq=False)
class Symbol:
    """A function a(x, xi) with declared growth order m.

    ``func`` must broadcast over numpy arrays.  ``growth_constant`` is the
    smallest K with |a| <= K (1 + |xi|)^m on a probe set of points, recorded
    at construction.
    """

    func: Callable
    order: float
    label: str = "custom"
    x_independent: bool = False
    xi_independent: bool = False
    meta: dict = field(default_factory=dict)
    growth_constant: float = field(init=False, default=np.nan)

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"unknown symbol label {self.label!r}")
        period = self.meta.get("period") or 1.0
        x = np.linspace(0.0, period, 33)[:, None]
        vals = np.abs(self(x, _XI_PROBE[None, :]))
        k = float(np.max(vals / (1 + np.abs(_XI_PROBE[None, :])) ** self.order))
        object.__setattr__(self, "growth_constant", k)

    def __call__(self, x, xi):
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        shape = np.broadcast_shapes(x.shape, xi.shape)
        return np.broadcast_to(np.asarray(self.func(x, xi), dtype=complex), shape)

    def sample(self, x, xi):
        """Matrix S[k, m] = a(x_k, xi_m)."""
        return np.array(self(np.asarray(x)[:, None], np.asarray(xi)[None, :]))

    def rescaled(self, t) -> "Symbol":
        """(x, xi) -> a(x, t xi)."""
        f = self.func
        return Symbol(lambda x, xi: f(x, t * xi), self.order, self.label, self.x_independent,
                      self.xi_independent, {**self.meta, "t": self.meta.get("t", 1.0) * t})

    def dilated_x(self, t) -> "Symbol":
        """(x, xi) -> a(t x, xi)."""
        f = self.func
        meta = {**self.meta}
        if meta.get("period"):
            meta["period"] = meta["period"] / t
        return Symbol(lambda x, xi: f(t * x, xi), self.order, self.label, self.x_independent,
                      self.xi_independent, meta)

    def __mul__(self, other) -> "Symbol":
        if not isinstance(other, Symbol):
            f, s = self.func, complex(other)
            return Symbol(lambda x, xi: s * f(x, xi), self.order, self.label, self.x_independent,
                          self.xi_independent, dict(self.meta))
        f, g = self.func, other.func
        return Symbol(lambda x, xi: f(x, xi) * g(x, xi), self.order + other.order, "product",
                      self.x_independent and other.x_independent,
                      self.xi_independent and other.xi_independent,
                      {"factors": (self.label, other.label), "period": self.meta.get("period") or other.meta.get("period")})

    __rmul__ = __mul__

    def __add__(self, other) -> "Symbol":
        f, g = self.func, other.func
        return Symbol(lambda x, xi: f(x, xi) + g(x, xi), max(self.order, other.order), "custom",
                      self.x_independent and other.x_independent,
                      self.xi_independent and other.xi_independent,
                      {"period": self.meta.get("period") or other.meta.get("period")})

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other) -> "Symbol":
        return self + (-other)


def _profile_values(c: SpeedProfile, x):
    return np.real(c(x))


def _checked(c: SpeedProfile):
    c.check_c1()
    return c


def make_symbol_d(c: SpeedProfile) -> Symbol:
    """d(x, xi) = |xi| / (1 + c(x)|xi|)."""
    _checked(c)

    def d(x, xi):
        a = np.abs(xi)
        return a / (1 + _profile_values(c, x) * a)

    return Symbol(d, 0.0, "d", c.is_constant, meta={"profile": c, "period": c.period})


def make_symbol_p(c: SpeedProfile) -> Symbol:
    """p(x, xi) = (1 + c(x)|xi|)^(1/c(x)), of order 1/c1."""
    _checked(c)

    def p(x, xi):
        cx = _profile_values(c, x)
        return (1 + cx * np.abs(xi)) ** (1 / cx)

    return Symbol(p, c.m1, "p", c.is_constant, meta={"profile": c, "period": c.period})


def make_symbol_p_inv(c: SpeedProfile) -> Symbol:
    """1/p, of order -1/c2."""
    _checked(c)

    def p_inv(x, xi):
        cx = _profile_values(c, x)
        return (1 + cx * np.abs(xi)) ** (-1 / cx)

    return Symbol(p_inv, -c.m2, "p_inv", c.is_constant, meta={"profile": c, "period": c.period})


def make_symbol_d_t(c: SpeedProfile, t: float) -> Symbol:
    """d_t(x, xi) = |xi| / (1 + c(x) t |xi|); equals |xi| at t = 0."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    _checked(c)

    def d_t(x, xi):
        a = np.abs(xi)
        return a / (1 + _profile_values(c, x) * t * a)

    return Symbol(d_t, 1.0, "d_t", c.is_constant, meta={"profile": c, "period": c.period, "t": t})


def make_symbol_p_M(densities, interface_slope: GridFunction) -> Symbol:
    """Muskat symbol -(rho2 - rho1)|xi| / (1 + |f'(x)|^2).

    The slope is known on grid nodes only; x is mapped to the nearest node.
    """
    rho1, rho2 = densities
    if rho1 == rho2:
        raise ValueError("equal densities give the zero symbol")
    g = interface_slope.grid
    slope2 = np.abs(interface_slope.values) ** 2

    def p_m(x, xi):
        idx = np.rint(np.asarray(x) / g.dx).astype(int) % g.n
        return -(rho2 - rho1) * np.abs(xi) / (1 + slope2[idx])

    const = bool(np.allclose(slope2, slope2[0]))
    return Symbol(p_m, 1.0, "p_M", const, meta={"period": g.period, "densities": (rho1, rho2)})


def make_weight(s: float) -> Symbol:
    """<xi>^s with <xi> = 1 + 2 pi i xi (principal branch)."""

    def w(x, xi):
        return np.power(1 + 2j * np.pi * xi, s)

    return Symbol(w, float(s), "weight_s", True, meta={"s": s})


def dyadic_window(xi, j):
    """phi_j(xi): psi for j = -1, else theta(xi / 2^(j+1)) - theta(xi / 2^j)."""
    xi = np.asarray(xi, dtype=float)
    if j == -1:
        return smooth_step(xi)
    return smooth_step(xi / 2.0 ** (j + 1)) - smooth_step(xi / 2.0**j)


def make_dyadic_partition(j_max: int) -> list:
    """Windows phi_{-1}, ..., phi_{j_max}, summing to 1 on |xi| <= 2^j_max."""
    if j_max < 0:
        raise ValueError("j_max must be >= 0")
    out = []
    for j in range(-1, j_max + 1):
        support = (0.0, 1.0) if j == -1 else (2.0 ** (j - 1), 2.0 ** (j + 1))
        out.append(Symbol(lambda x, xi, j=j: dyadic_window(xi, j), 0.0, "dyadic_j", True,
                          meta={"j": j, "support": support}))
    return out


def make_bump(center: float, radius: float, period: float | None = None) -> Symbol:
    """chi(x): 1 on |x - center| <= radius/2, 0 for |x - center| >= radius."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    if period is not None and radius > period / 2:
        raise ValueError(f"radius {radius} exceeds half the period {period}")

    def chi(x, xi):
        return smooth_step(periodic_offset(x, center, period) / radius)

    return Symbol(chi, 0.0, "bump", False, True,
                  meta={"center": center, "radius": radius, "period": period})


def dagger_weight(sym: Symbol, m: float) -> Symbol:
    """Pointwise product sym * <xi>^m, with order raised by m."""
    if m == 0:
        return sym
    w = make_weight(m)
    out = sym * w
    return Symbol(out.func, sym.order + m, "product", sym.x_independent, False,
                  {**sym.meta, "dagger": m, "base": sym.label})


_FACTORIES = {"d": make_symbol_d, "p": make_symbol_p, "p_inv": make_symbol_p_inv}


def decompose_pi_sigma(a: Symbol, c: SpeedProfile):
    """Split a = Pi + Sigma0 where Sigma0 is a evaluated at the baseline c0."""
    if a.label not in _FACTORIES or a.meta.get("t", 1.0) != 1.0:
        raise ValueError(f"decomposition supports d, p, p_inv only, got {a.label!r}")
    base = SpeedProfile(c.c0, c.c1, c.c2, period=c.period)
    sigma0 = _FACTORIES[a.label](base)
    f, g = a.func, sigma0.func
    pi = Symbol(lambda x, xi: f(x, xi) - g(x, xi), a.order, "custom", False,
                meta={"period": c.period, "part": "pi", "base": a.label})
    return pi, sigma0

"""The model evolution d/dt f = d_t(x, D) f and its energy E(t) = ||p^{-1}(x, tD) f(t)||^2."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, GridSpec, fft_phys, l2_norm
from .profiles import SpeedProfile, periodic_offset
from .quantize import apply, quantize_semiclassical
from .symbols import make_symbol_p_inv

BLOWUP_FACTOR = 1e12


class NumericalAbort(RuntimeError):
    """The solver left its trusted regime (blow-up guard)."""


# Initial data library.

def gaussian(grid: GridSpec, center=None, width=1.0) -> GridFunction:
    """exp(-pi (x - center)^2 / width^2) at the nearest periodic image."""
    center = grid.period / 2 if center is None else center
    d = periodic_offset(grid.x_nodes, center, grid.period)
    return GridFunction(grid, np.exp(-np.pi * d**2 / width**2))


def wave_packet(grid: GridSpec, xi0, center=None, sigma=1.0) -> GridFunction:
    """exp(2 pi i xi0 x) exp(-pi (x - center)^2 / sigma^2); xi0 is snapped to the nearest grid frequency."""
    center = grid.period / 2 if center is None else center
    xi0 = np.round(xi0 * grid.period) / grid.period
    d = periodic_offset(grid.x_nodes, center, grid.period)
    return GridFunction(grid, np.exp(2j * np.pi * xi0 * grid.x_nodes) * np.exp(-np.pi * d**2 / sigma**2))


def band_limited_noise(grid: GridSpec, band, seed=0) -> GridFunction:
    """Random complex Fourier coefficients on |xi| <= band, unit L2 norm."""
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(grid.n) + 1j * rng.standard_normal(grid.n)
    coeffs[np.abs(grid.freq_nodes) > band] = 0
    vals = np.fft.ifft(np.fft.ifftshift(coeffs))
    f = GridFunction(grid, vals)
    return f * (1.0 / l2_norm(f))


def initial_data(grid: GridSpec, spec) -> GridFunction:
    """Build data from a dict such as {"kind": "gaussian", "width": 1.0}."""
    if isinstance(spec, GridFunction):
        return spec
    spec = dict(spec)
    kind = spec.pop("kind")
    makers = {"gaussian": gaussian, "wave_packet": wave_packet, "noise": band_limited_noise}
    if kind == "zero":
        return grid.zeros()
    if kind not in makers:
        raise ValueError(f"unknown initial data kind {kind!r}")
    return makers[kind](grid, **spec)


# Fast symbol application used inside the time stepper.

class _SymbolApplier:
    """Applies d_t(x, D) and related x-dependent multipliers by direct synthesis."""

    def __init__(self, grid: GridSpec, speed: SpeedProfile):
        self.grid = grid
        self.c = np.real(speed(grid.x_nodes))[:, None]
        self.absxi = np.abs(grid.freq_nodes)[None, :]
        n = grid.n
        self.E = grid.dxi * np.exp(2j * np.pi * np.outer(np.arange(n), grid.mode_indices) / n)

    def synth(self, S, values):
        return (S * self.E) @ fft_phys(values, self.grid.dx)

    def d_t(self, t):
        return self.absxi / (1 + self.c * t * self.absxi)

    def p_inv(self, t):
        return (1 + self.c * t * self.absxi) ** (-1 / self.c)


@dataclass(frozen=True)
class IvpConfig:
    grid: GridSpec
    speed: SpeedProfile
    t_final: float = 1.0
    stepper: str = "rk4"  # rk4 | exact_constant_c
    theta: float = 0.1
    initial_data: object = field(default_factory=lambda: {"kind": "gaussian"})
    output_times: tuple | None = None
    n_outputs: int = 100

    def __post_init__(self):
        if not 0 < self.t_final <= 1:
            raise ValueError("t_final must lie in (0, 1]")
        if not 0 < self.theta <= 1:
            raise ValueError("theta must lie in (0, 1]")
        if self.stepper not in ("rk4", "exact_constant_c"):
            raise ValueError(f"unknown stepper {self.stepper!r}")

    def times(self):
        if self.output_times is not None:
            ts = np.asarray(self.output_times, dtype=float)
        else:
            ts = np.linspace(0.0, self.t_final, self.n_outputs + 1)
        if ts[0] != 0 or np.any(np.diff(ts) <= 0):
            raise ValueError("output times must start at 0 and increase")
        return ts


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: tuple
    energies: np.ndarray  # NaN at t = 0
    steps: int = 0

    def __post_init__(self):
        if len(self.times) != len(self.states) or len(self.times) != len(self.energies):
            raise ValueError("times, states and energies must have equal length")

    def norms(self):
        return np.array([l2_norm(f) for f in self.states])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "l2_norm", "energy"])
        for t, nrm, e in zip(self.times, self.norms(), self.energies):
            w.writerow([f"{t:.17g}", f"{nrm:.17g}", "" if np.isnan(e) else f"{e:.17g}"])
        return buf.getvalue()


def max_symbol(grid: GridSpec, c_min: float, t: float) -> float:
    """Grid sup of d_t: min(xi_max, 1/(c_min t))."""
    return grid.xi_max if t == 0 else min(grid.xi_max, 1.0 / (c_min * t))


def exact_constant_c(f0: GridFunction, c: float, t: float) -> GridFunction:
    """Multiplier (1 + c t |xi|)^(1/c) applied to f0."""
    if c <= 0:
        raise ValueError("c must be positive")
    g = f0.grid
    mult = (1 + c * t * np.abs(g.freq_nodes)) ** (1 / c)
    return GridFunction(g, np.fft.ifft(np.fft.fft(f0.values) * np.fft.ifftshift(mult)))


def energy(f: GridFunction, speed: SpeedProfile, t: float) -> float:
    """||p^{-1}(x, tD) f||^2 using the assembled matrix."""
    if t <= 0:
        raise ValueError("energy is defined for t > 0")
    P = quantize_semiclassical(make_symbol_p_inv(speed), t, f.grid)
    return l2_norm(apply(P, f)) ** 2


def solve(config: IvpConfig) -> Trajectory:
    g, speed = config.grid, config.speed
    if speed.period is not None and not np.isclose(speed.period, g.period):
        raise ValueError("speed profile period differs from the grid period")
    speed.check_c1(np.real(speed(g.x_nodes)))
    f0 = initial_data(g, config.initial_data)
    out_t = config.times()
    ap = _SymbolApplier(g, speed)

    def E(t, v):
        return float(g.dx * np.sum(np.abs(ap.synth(ap.p_inv(t), v)) ** 2)) if t > 0 else np.nan

    if config.stepper == "exact_constant_c":
        if not speed.is_constant:
            raise ValueError("exact propagator needs a constant profile")
        states = tuple(exact_constant_c(f0, speed.c0, t) for t in out_t)
        energies = np.array([E(t, s.values) for t, s in zip(out_t, states)])
        return Trajectory(out_t, states, energies, 0)

    c_min = float(np.min(ap.c))
    norm0 = max(l2_norm(f0), 1e-300)
    v = np.array(f0.values)
    t = 0.0
    states, energies = [f0], [np.nan]
    steps = 0

    def rhs(tt, vv):
        return ap.synth(ap.d_t(tt), vv)

    for target in out_t[1:]:
        while t < target - 1e-14 * max(1.0, target):
            dt = min(config.theta / max_symbol(g, c_min, t), target - t)
            k1 = rhs(t, v)
            k2 = rhs(t + dt / 2, v + dt / 2 * k1)
            k3 = rhs(t + dt / 2, v + dt / 2 * k2)
            k4 = rhs(t + dt, v + dt * k3)
            v = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += dt
            steps += 1
            nrm = float(np.sqrt(g.dx * np.sum(np.abs(v) ** 2)))
            if not np.isfinite(nrm) or nrm > BLOWUP_FACTOR * norm0:
                raise NumericalAbort(f"blow-up at t={t:.6g}: norm {nrm:.3e} vs initial {norm0:.3e}")
        t = float(target)
        states.append(GridFunction(g, v))
        energies.append(E(t, v))
    return Trajectory(out_t, tuple(states), np.array(energies), steps)


@dataclass(frozen=True)
class RateEstimate:
    times: np.ndarray
    rates: np.ndarray

    @property
    def max_rate(self) -> float:
        return float(np.max(self.rates))

    @property
    def max_abs_rate(self) -> float:
        return float(np.max(np.abs(self.rates)))


def gronwall_rate(traj: Trajectory, t_min: float | None = None) -> RateEstimate:
    """Centered differences of log E at interior output times with t >= t_min."""
    ok = ~np.isnan(traj.energies)
    t, e = traj.times[ok], traj.energies[ok]
    if len(t) < 3:
        raise ValueError("need at least 3 energy samples at t > 0")
    if np.any(e <= 0):
        raise ValueError("energies must be positive")
    le = np.log(e)
    rates = (le[2:] - le[:-2]) / (t[2:] - t[:-2])
    mid = t[1:-1]
    if t_min is not None:
        keep = mid >= t_min - 1e-12
        mid, rates = mid[keep], rates[keep]
    return RateEstimate(mid, rates)


def instantaneous_rate(f: GridFunction, speed: SpeedProfile, t: float) -> float:
    """Exact d/dt log E along the flow at state f and time t.

    d/dt E = 2 Re <[p^{-1}(x,tD) d_t(x,D) - (p^{-1} d_t)(x,tD)] f, p^{-1}(x,tD) f>,
    the bracket being t^{-1} times the semicommutator of p^{-1} and d.
    """
    ap = _SymbolApplier(f.grid, speed)
    g = f.grid
    Pf = ap.synth(ap.p_inv(t), f.values)
    Df = ap.synth(ap.d_t(t), f.values)
    bracket = ap.synth(ap.p_inv(t), Df) - ap.synth(ap.p_inv(t) * ap.d_t(t), f.values)
    e = g.dx * np.sum(np.abs(Pf) ** 2)
    de = 2 * np.real(g.dx * np.vdot(Pf, bracket))
    return float(de / e)

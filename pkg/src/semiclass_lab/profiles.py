"""Mixing speed profiles c(x) and their admissibility diagnostics."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import BSpline, CubicSpline

from .grid import GridSpec, fft_phys


class AdmissibilityError(ValueError):
    """Raised when a profile or a (c1, c2) pair breaks a hard hypothesis."""


def smooth_step(u):
    """C-infinity function equal to 1 for |u| <= 1/2 and 0 for |u| >= 1.

    Built from the exp(-1/s) profile, so the values at |u| = 1/2 and |u| = 1
    are exactly 1 and 0.
    """
    u = np.abs(np.asarray(u, dtype=float))
    s = np.clip(2.0 * (1.0 - u), 0.0, 1.0)  # 0 at |u|=1, 1 at |u|=1/2

    def h(z):
        out = np.zeros_like(z)
        pos = z > 0
        out[pos] = np.exp(-1.0 / z[pos])
        return out

    a, b = h(s), h(1.0 - s)
    return a / (a + b)


def periodic_offset(x, center, period):
    d = np.asarray(x, dtype=float) - center
    if period is None:
        return d
    return d - period * np.round(d / period)


# Perturbation shapes.  Each returns the deviation c(x) - c0.

@dataclass(frozen=True)
class NoPerturbation:
    kind = "none"

    def __call__(self, x, period):
        return np.zeros_like(np.asarray(x, dtype=float))

    def to_dict(self):
        return {"kind": "none"}


@dataclass(frozen=True)
class Gaussian:
    amplitude: float
    center: float = 0.0
    width: float = 1.0
    kind = "gaussian"

    def __call__(self, x, period):
        x = np.asarray(x, dtype=float)
        if period is None:
            return self.amplitude * np.exp(-(((x - self.center) / self.width) ** 2))
        d = periodic_offset(x, self.center, period)
        n_img = int(math.ceil(7.0 * self.width / period))
        out = np.zeros_like(d)
        for k in range(-n_img, n_img + 1):
            out += np.exp(-(((d + k * period) / self.width) ** 2))
        return self.amplitude * out

    def to_dict(self):
        return {"kind": "gaussian", "amplitude": self.amplitude, "center": self.center, "width": self.width}


@dataclass(frozen=True)
class Cosine:
    """amplitude * cos(2 pi wavenumber x); wavenumber counts cycles per unit length."""

    amplitude: float
    wavenumber: float
    kind = "cosine"

    def __call__(self, x, period):
        return self.amplitude * np.cos(2 * np.pi * self.wavenumber * np.asarray(x, dtype=float))

    def to_dict(self):
        return {"kind": "cosine", "amplitude": self.amplitude, "wavenumber": self.wavenumber}


@dataclass(frozen=True)
class Plateau:
    """Deviation 0 on |x - center| <= radius/2, ``amplitude`` for |x - center| >= radius."""

    amplitude: float
    center: float
    radius: float
    kind = "plateau"

    def __call__(self, x, period):
        d = periodic_offset(x, self.center, period)
        return self.amplitude * (1.0 - smooth_step(d / self.radius))

    def to_dict(self):
        return {"kind": "plateau", "amplitude": self.amplitude, "center": self.center, "radius": self.radius}


@dataclass(frozen=True)
class BSplineBump:
    """Cardinal B-spline bump of peak ``amplitude`` supported on |x - center| < width/2.

    A degree-q spline lies in W^{q,inf} but not W^{q+1,inf}, which gives a
    profile of exactly known finite smoothness.
    """

    amplitude: float
    center: float
    width: float
    degree: int = 4
    kind = "bspline"

    def __call__(self, x, period):
        d = periodic_offset(x, self.center, period)
        knots = np.linspace(-self.width / 2, self.width / 2, self.degree + 2)
        b = BSpline.basis_element(knots, extrapolate=False)
        vals = np.nan_to_num(b(d), nan=0.0)
        peak = float(b(0.0))
        return self.amplitude * vals / peak

    def to_dict(self):
        return {"kind": "bspline", "amplitude": self.amplitude, "center": self.center,
                "width": self.width, "degree": self.degree}


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Deviation samples on one period, interpolated by a periodic cubic spline."""

    x: tuple
    values: tuple
    kind = "tabulated"

    def __call__(self, x, period):
        xs = np.asarray(self.x, dtype=float)
        vs = np.asarray(self.values, dtype=float)
        if period is None:
            raise ValueError("tabulated profiles need a period")
        order = np.argsort(xs % period)
        xs, vs = xs[order] % period, vs[order]
        spline = CubicSpline(np.append(xs, xs[0] + period), np.append(vs, vs[0]), bc_type="periodic")
        return spline(np.asarray(x, dtype=float) % period)

    def to_dict(self):
        return {"kind": "tabulated", "x": list(self.x), "values": list(self.values)}


_SHAPES = {
    "none": NoPerturbation,
    "gaussian": Gaussian,
    "cosine": Cosine,
    "plateau": Plateau,
    "bspline": BSplineBump,
    "tabulated": Tabulated,
}


def perturbation_from_dict(d, period=None):
    d = dict(d or {"kind": "none"})
    kind = d.pop("kind", "none")
    if kind not in _SHAPES:
        raise ValueError(f"unknown perturbation kind {kind!r}")
    if kind == "cosine" and "cycles" in d:
        if period is None:
            raise ValueError("'cycles' needs a period")
        d["wavenumber"] = d.pop("cycles") / period
    if kind == "tabulated":
        return Tabulated(tuple(d["x"]), tuple(d["values"]))
    return _SHAPES[kind](**d)


def check_pair(c1, c2):
    """Hard check of 0 < c1 < c2 <= 2 and 1/c1 - 1/c2 <= 1."""
    if not (0 < c1 < c2 <= 2):
        raise AdmissibilityError(f"need 0 < c1 < c2 <= 2, got ({c1}, {c2})")
    if 1 / c1 - 1 / c2 > 1 + 1e-12:
        raise AdmissibilityError(f"need 1/c1 - 1/c2 <= 1, got {1 / c1 - 1 / c2:.6g}")


@dataclass(frozen=True)
class SpeedProfile:
    """c(x) = c0 + perturbation(x), with a declared admissibility pair (c1, c2).

    ``period`` (if set) makes localized shapes periodic; grids used with the
    profile must share it.
    """

    c0: float
    c1: float
    c2: float
    perturbation: object = field(default_factory=NoPerturbation)
    period: float | None = None

    def __post_init__(self):
        check_pair(self.c1, self.c2)

    def __call__(self, x):
        return self.c0 + self.perturbation(x, self.period)

    @property
    def m1(self):
        return 1.0 / self.c1

    @property
    def m2(self):
        return 1.0 / self.c2

    @property
    def is_constant(self):
        return isinstance(self.perturbation, NoPerturbation)

    def with_period(self, period):
        return SpeedProfile(self.c0, self.c1, self.c2, self.perturbation, period)

    def dense_samples(self, count=4096):
        if self.period is not None:
            x = np.linspace(0.0, self.period, count, endpoint=False)
        else:
            x = np.linspace(-50.0, 50.0, count)
        return self(x)

    def check_c1(self, values=None):
        """Raise unless c1 < c < c2 strictly on the given (or dense) samples."""
        v = self.dense_samples() if values is None else np.asarray(values)
        lo, hi = float(np.min(v)), float(np.max(v))
        if not (self.c1 < lo and hi < self.c2):
            raise AdmissibilityError(
                f"(C1) fails: c ranges over [{lo:.6g}, {hi:.6g}], not inside ({self.c1}, {self.c2})")
        return lo, hi

    def to_dict(self):
        d = {"c0": self.c0, "perturbation": self.perturbation.to_dict(), "c1": self.c1, "c2": self.c2}
        if self.period is not None:
            d["period"] = self.period
        return d

    @classmethod
    def from_dict(cls, d, period=None):
        period = d.get("period", period)
        pert = perturbation_from_dict(d.get("perturbation"), period)
        return cls(float(d["c0"]), float(d["c1"]), float(d["c2"]), pert, period)


def load_profile_json(path, period=None) -> SpeedProfile:
    return SpeedProfile.from_dict(json.loads(Path(path).read_text()), period)


def save_profile_json(profile: SpeedProfile, path):
    Path(path).write_text(json.dumps(profile.to_dict(), indent=2))


def load_profile_csv(path, c1, c2, period, c0=None) -> SpeedProfile:
    """Two-column (x, c) table over one period; c0 defaults to the sample mean."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                continue  # header
    x, c = np.array(rows).T
    c0 = float(np.mean(c)) if c0 is None else c0
    prof = SpeedProfile(c0, c1, c2, Tabulated(tuple(x), tuple(c - c0)), period)
    prof.check_c1(c)
    return prof


# Admissibility diagnostics.

def required_regularity(c1):
    """Smallest integer N for (C2) and the Sobolev threshold for (C2').

    Returns (N_min, s_bound, s_strict): (C2') needs s > s_bound when
    ``s_strict`` else s >= s_bound.
    """
    m1 = 1.0 / c1
    n_min = max(math.floor(1.5 + m1) + 1, 1 + math.ceil(m1 - 1e-12))
    a, b = 1.5 + m1, 1 + math.ceil(m1 - 1e-12)
    if b > a:
        return n_min, float(b), False
    return n_min, float(a), True


def fd_derivative_periodic(values, h, order=1):
    """Repeated fourth-order central difference on periodic samples (last axis)."""
    v = np.asarray(values)
    for _ in range(order):
        v = (-np.roll(v, -2, -1) + 8 * np.roll(v, -1, -1) - 8 * np.roll(v, 1, -1) + np.roll(v, 2, -1)) / (12 * h)
    return v


def discrete_sobolev_norm(values, grid: GridSpec, s):
    """Classical H^s norm of periodic samples with weight |1 + 2 pi i xi|^s."""
    vhat = fft_phys(values, grid.dx)
    w = (1 + 4 * np.pi**2 * grid.freq_nodes**2) ** (s / 2)
    return float(np.sqrt(grid.dxi * np.sum(w**2 * np.abs(vhat) ** 2)))


@dataclass(frozen=True)
class AdmissibilityReport:
    c1_c2_check: bool
    c_range: tuple
    derivative_seminorms: dict  # alpha -> (estimate on grid, estimate on refined grid)
    sobolev_proxy: dict  # 'v1', 'v2' -> (norm on grid, norm on refined grid)
    n_required: int
    n_supported: int
    s_required: float
    s_used: float
    verdict: tuple  # subset of ('C2', "C2'")
    grid_meta: dict

    def to_dict(self):
        return {
            "c1_c2_check": self.c1_c2_check,
            "c_range": list(self.c_range),
            "derivative_seminorms": {str(k): list(v) for k, v in self.derivative_seminorms.items()},
            "sobolev_proxy": {k: list(v) for k, v in self.sobolev_proxy.items()},
            "n_required": self.n_required,
            "n_supported": self.n_supported,
            "s_required": self.s_required,
            "s_used": self.s_used,
            "verdict": list(self.verdict),
            "grid_meta": self.grid_meta,
        }


def _stable(a, b, scale, rtol):
    return abs(a - b) <= rtol * max(abs(a), abs(b)) + 1e-9 * scale


def check_admissible(c: SpeedProfile, grid: GridSpec, rtol=0.05, extra_orders=2) -> AdmissibilityReport:
    """Evaluate (C1) on the nodes and finite-dimensional proxies for (C2)/(C2').

    (C2) is supported when the finite-difference sup norms of c^(alpha),
    alpha <= N_min, are stable to ``rtol`` under doubling of the grid.  (C2')
    is supported when the discrete H^s norms of v1 = c - c0 and
    v2 = 1/c - 1/c0 are stable likewise.  Both are evidence, not proof.
    """
    check_pair(c.c1, c.c2)
    if c.period is not None and not np.isclose(c.period, grid.period):
        raise AdmissibilityError(f"profile period {c.period} differs from grid period {grid.period}")
    prof = c if c.period is not None else c.with_period(grid.period)
    vals = np.real(prof(grid.x_nodes))
    lo, hi = prof.check_c1(vals)
    if not (c.c1 < c.c0 < c.c2):
        raise AdmissibilityError(f"baseline c0={c.c0} is not in ({c.c1}, {c.c2})")

    n_min, s_bound, strict = required_regularity(c.c1)
    fine = grid.refined()
    vals_f = np.real(prof(fine.x_nodes))
    scale = max(1.0, float(np.max(np.abs(vals))))

    derivs = {}
    n_supported = -1
    for alpha in range(0, n_min + extra_orders + 1):
        a = float(np.max(np.abs(fd_derivative_periodic(vals, grid.dx, alpha))))
        b = float(np.max(np.abs(fd_derivative_periodic(vals_f, fine.dx, alpha))))
        derivs[alpha] = (a, b)
        if n_supported == alpha - 1 and _stable(a, b, scale, rtol) and np.isfinite(b):
            n_supported = alpha

    s_used = s_bound + 0.5 if strict else s_bound
    v1, v1f = vals - c.c0, vals_f - c.c0
    v2, v2f = 1 / vals - 1 / c.c0, 1 / vals_f - 1 / c.c0
    sob = {
        "v1": (discrete_sobolev_norm(v1, grid, s_used), discrete_sobolev_norm(v1f, fine, s_used)),
        "v2": (discrete_sobolev_norm(v2, grid, s_used), discrete_sobolev_norm(v2f, fine, s_used)),
    }
    verdict = []
    if n_supported >= n_min:
        verdict.append("C2")
    if all(_stable(a, b, 1.0, rtol) for a, b in sob.values()):
        verdict.append("C2'")
    return AdmissibilityReport(
        c1_c2_check=True,
        c_range=(lo, hi),
        derivative_seminorms=derivs,
        sobolev_proxy=sob,
        n_required=n_min,
        n_supported=n_supported,
        s_required=s_bound,
        s_used=s_used,
        verdict=tuple(verdict),
        grid_meta={"n": grid.n, "period": grid.period, "fd_order": 4, "refined_n": fine.n},
    )

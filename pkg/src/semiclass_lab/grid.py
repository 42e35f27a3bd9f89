"""Periodic grid on [0, L) and the discrete Fourier pair.

The transform uses 2*pi in the exponent::

    fhat(xi_m) = dx * sum_k f(x_k) exp(-2 pi i x_k xi_m)
    f(x_k)     = dxi * sum_m fhat(xi_m) exp(+2 pi i x_k xi_m)

with x_k = k L / n and xi_m = m / L for m = -n/2 .. n/2 - 1.  Spectra are
stored in physical order (most negative frequency first).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


def _readonly(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``n`` nodes on a period of length ``period``."""

    n: int
    period: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16 or (self.n & (self.n - 1)):
            raise ValueError(f"n must be a power of two >= 16, got {self.n}")
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")

    @property
    def dx(self) -> float:
        return self.period / self.n

    @property
    def dxi(self) -> float:
        return 1.0 / self.period

    @property
    def xi_max(self) -> float:
        """Largest |xi| on the grid (the unpaired Nyquist node)."""
        return self.n / (2.0 * self.period)

    @cached_property
    def x_nodes(self) -> np.ndarray:
        x = np.arange(self.n) * self.dx
        x.setflags(write=False)
        return x

    @cached_property
    def freq_nodes(self) -> np.ndarray:
        xi = np.arange(-self.n // 2, self.n // 2) * self.dxi
        xi.setflags(write=False)
        return xi

    @cached_property
    def mode_indices(self) -> np.ndarray:
        m = np.arange(-self.n // 2, self.n // 2)
        m.setflags(write=False)
        return m

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.n * factor, self.period)

    def sample(self, func) -> "GridFunction":
        return GridFunction(self, func(self.x_nodes))

    def mode(self, m: int) -> "GridFunction":
        """Pure mode exp(2 pi i xi_m x) for the integer index ``m``."""
        return GridFunction(self, np.exp(2j * np.pi * m * self.x_nodes / self.period))

    def zeros(self) -> "GridFunction":
        return GridFunction(self, np.zeros(self.n))

    def to_dict(self) -> dict:
        return {"n": self.n, "period": self.period}


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = _readonly(self.values)
        if v.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {v.shape}")
        object.__setattr__(self, "values", v)

    def _check(self, other):
        if other.grid != self.grid:
            raise ValueError("grid mismatch")

    def __add__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        return GridFunction(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.grid, -self.values)

    def inner(self, other) -> complex:
        """Discrete L2 inner product <self, other>, linear in the first slot."""
        self._check(other)
        return complex(self.grid.dx * np.vdot(other.values, self.values))


@dataclass(frozen=True, eq=False)
class SpectrumFunction:
    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = _readonly(self.coeffs)
        if c.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} coefficients, got shape {c.shape}")
        object.__setattr__(self, "coeffs", c)


def forward_transform(f: GridFunction) -> SpectrumFunction:
    g = f.grid
    return SpectrumFunction(g, g.dx * np.fft.fftshift(np.fft.fft(f.values)))


def inverse_transform(F: SpectrumFunction) -> GridFunction:
    g = F.grid
    return GridFunction(g, np.fft.ifft(np.fft.ifftshift(F.coeffs)) / g.dx)


def l2_norm(f: GridFunction) -> float:
    return float(np.sqrt(f.grid.dx * np.sum(np.abs(f.values) ** 2)))


def spectral_l2_norm(F: SpectrumFunction) -> float:
    return float(np.sqrt(F.grid.dxi * np.sum(np.abs(F.coeffs) ** 2)))


# Array-level helpers shared by the operator code.  ``axis`` selects the
# x-direction of a multi-dimensional sample array.

def fft_phys(values, dx, axis=-1):
    return dx * np.fft.fftshift(np.fft.fft(values, axis=axis), axes=axis)


def ifft_phys(coeffs, dx, axis=-1):
    return np.fft.ifft(np.fft.ifftshift(coeffs, axes=axis), axis=axis) / dx


def spectral_derivative(values, grid: GridSpec, order: int = 1, axis: int = 0):
    """Differentiate periodic samples along ``axis`` with the Fourier multiplier (2 pi i xi)^order."""
    shape = [1] * np.ndim(values)
    shape[axis] = grid.n
    mult = (2j * np.pi * grid.freq_nodes).reshape(shape) ** order
    return ifft_phys(mult * fft_phys(values, grid.dx, axis), grid.dx, axis)

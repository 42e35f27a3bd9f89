"""Semiclassical Sobolev norms with Fourier weight |1 + 2 pi i t xi|^s."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridFunction, GridSpec, forward_transform, l2_norm


@dataclass(frozen=True)
class SobolevWeight:
    s: float
    t: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be nonnegative")

    def magnitude(self, xi):
        """(1 + 4 pi^2 t^2 xi^2)^(s/2)."""
        return (1 + 4 * np.pi**2 * self.t**2 * np.asarray(xi, dtype=float) ** 2) ** (self.s / 2)

    def complex_value(self, xi):
        """(1 + 2 pi i t xi)^s on the principal branch."""
        return np.power(1 + 2j * np.pi * self.t * np.asarray(xi, dtype=float), self.s)

    def on_grid(self, grid: GridSpec):
        return self.magnitude(grid.freq_nodes)


def hst_norm(f: GridFunction, s: float, t: float) -> float:
    F = forward_transform(f)
    w = SobolevWeight(s, t).on_grid(f.grid)
    return float(np.sqrt(f.grid.dxi * np.sum(w**2 * np.abs(F.coeffs) ** 2)))


def apply_weight(f: GridFunction, s: float, t: float) -> GridFunction:
    """Fourier multiplier (1 + 2 pi i t D)^s."""
    g = f.grid
    mult = SobolevWeight(s, t).complex_value(g.freq_nodes)
    vals = np.fft.ifft(np.fft.fft(f.values) * np.fft.ifftshift(mult))
    return GridFunction(g, vals)


__all__ = ["SobolevWeight", "hst_norm", "apply_weight", "l2_norm"]

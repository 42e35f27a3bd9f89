"""Dense canonical and semiclassical quantizations on the periodic grid.

The matrix of a(x, D) is

    A[k, l] = (1/n) sum_m a(x_k, xi_m) exp(2 pi i (k - l) m / n),

obtained from the symbol samples S[k, m] by one FFT along the frequency axis.
``apply_symbol`` is an independent matrix-free route (transform, then
x-wise weighted synthesis) used as an oracle and for very large grids.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GridFunction, GridSpec, fft_phys
from .norms import SobolevWeight
from .symbols import Symbol

SVD_MAX_N = 512


@dataclass(frozen=True, eq=False)
class QuantizedOperator:
    grid: GridSpec
    matrix: np.ndarray
    mode: str = "canonical"  # canonical | semiclassical | derived
    t: float = 1.0
    symbol_label: str = "custom"

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"matrix shape {m.shape} does not match n={self.grid.n}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def _check(self, other):
        if other.grid != self.grid:
            raise ValueError("grid mismatch")

    def _derived(self, matrix, label):
        t = self.t
        return QuantizedOperator(self.grid, matrix, "derived", t, label)

    def __matmul__(self, other):
        return compose(self, other)

    def __add__(self, other):
        self._check(other)
        return self._derived(self.matrix + other.matrix, f"({self.symbol_label}+{other.symbol_label})")

    def __sub__(self, other):
        self._check(other)
        return self._derived(self.matrix - other.matrix, f"({self.symbol_label}-{other.symbol_label})")

    def __mul__(self, scalar):
        return self._derived(self.matrix * scalar, self.symbol_label)

    __rmul__ = __mul__

    def __call__(self, f: GridFunction) -> GridFunction:
        return apply(self, f)


def assemble(samples: np.ndarray) -> np.ndarray:
    """Operator matrix from symbol samples S[k, m] (m in physical order)."""
    n = samples.shape[0]
    k = np.arange(n)
    m = np.arange(-n // 2, n // 2)
    phase = np.exp(2j * np.pi * np.outer(k, m) / n)
    return np.fft.fft(np.fft.ifftshift(samples * phase, axes=1), axis=1) / n


def quantize_canonical(a: Symbol, grid: GridSpec) -> QuantizedOperator:
    S = a.sample(grid.x_nodes, grid.freq_nodes)
    return QuantizedOperator(grid, assemble(S), "canonical", 1.0, a.label)


def quantize_semiclassical(a: Symbol, t: float, grid: GridSpec) -> QuantizedOperator:
    """a(x, tD): the canonical quantization of (x, xi) -> a(x, t xi)."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    S = a.sample(grid.x_nodes, t * grid.freq_nodes)
    return QuantizedOperator(grid, assemble(S), "semiclassical", float(t), a.label)


def identity(grid: GridSpec) -> QuantizedOperator:
    return QuantizedOperator(grid, np.eye(grid.n), "canonical", 1.0, "identity")


def multiplier(grid: GridSpec, values, label="custom") -> QuantizedOperator:
    """Fourier multiplier with the given values at freq_nodes (physical order)."""
    n = grid.n
    diag = np.fft.ifftshift(np.asarray(values, dtype=complex))
    mat = np.fft.ifft(diag[:, None] * np.fft.fft(np.eye(n), axis=0), axis=0)
    return QuantizedOperator(grid, mat, "canonical", 1.0, label)


def apply(op: QuantizedOperator, f: GridFunction) -> GridFunction:
    if op.grid != f.grid:
        raise ValueError("grid mismatch")
    return GridFunction(f.grid, op.matrix @ f.values)


def apply_symbol(a: Symbol, f: GridFunction, t: float = 1.0, support_tol: float = 0.0,
                 chunk: int = 1 << 22) -> GridFunction:
    """a(x, tD) f by direct synthesis: dxi * sum_m a(x_k, t xi_m) fhat_m exp(2 pi i x_k xi_m).

    Frequencies with |fhat_m| <= support_tol * max|fhat| are dropped, which
    makes localized data on very fine grids cheap.
    """
    g = f.grid
    F = fft_phys(f.values, g.dx)
    keep = np.abs(F) > support_tol * np.max(np.abs(F)) if support_tol > 0 else np.ones(g.n, bool)
    if not np.any(keep):
        return g.zeros()
    xi = g.freq_nodes[keep]
    mm = g.mode_indices[keep]
    Fk = F[keep]
    out = np.empty(g.n, dtype=complex)
    rows = max(1, chunk // len(xi))
    k_all = np.arange(g.n)
    for start in range(0, g.n, rows):
        k = k_all[start:start + rows]
        S = a(g.x_nodes[k][:, None], t * xi[None, :])
        phase = np.exp(2j * np.pi * np.outer(k, mm) / g.n)
        out[start:start + rows] = g.dxi * (S * phase) @ Fk
    return GridFunction(g, out)


def compose(A: QuantizedOperator, B: QuantizedOperator) -> QuantizedOperator:
    A._check(B)
    return QuantizedOperator(A.grid, A.matrix @ B.matrix, "derived", A.t,
                             f"({A.symbol_label}*{B.symbol_label})")


def adjoint(A: QuantizedOperator) -> QuantizedOperator:
    return QuantizedOperator(A.grid, A.matrix.conj().T, "derived", A.t, f"({A.symbol_label})^*")


def fourier_matrix(matrix: np.ndarray) -> np.ndarray:
    """U A U^H with the unitary DFT, rows and columns in physical frequency order."""
    n = matrix.shape[0]
    X = np.fft.fftshift(np.fft.fft(matrix, axis=0), axes=0) / np.sqrt(n)
    return np.fft.fftshift(np.fft.ifft(X, axis=1), axes=1) * np.sqrt(n)


def weighted_fourier_matrix(op, from_space=(0.0, 1.0), to_space=(0.0, 1.0)) -> np.ndarray:
    """diag(w_b) U A U^H diag(1/w_a) with w = |1 + 2 pi i t xi|^s."""
    mat = op.matrix if isinstance(op, QuantizedOperator) else np.asarray(op)
    grid = op.grid if isinstance(op, QuantizedOperator) else GridSpec(mat.shape[0])
    wa = SobolevWeight(*from_space).on_grid(grid)
    wb = SobolevWeight(*to_space).on_grid(grid)
    return wb[:, None] * fourier_matrix(mat) / wa[None, :]


def power_iteration_norm(B: np.ndarray, tol=1e-8, max_iter=10_000, seed=0) -> float:
    """Largest singular value of B by power iteration on B^H B."""
    rng = np.random.default_rng(seed)
    n = B.shape[1]
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    resid = np.inf
    for _ in range(max_iter):
        w = B.conj().T @ (B @ v)
        lam_new = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        resid = float(np.linalg.norm(w - lam_new * v)) / max(nw, 1e-300)
        v = w / nw
        if abs(lam_new - lam) <= tol * abs(lam_new):
            return float(np.sqrt(max(lam_new, 0.0)))
        lam = lam_new
    raise RuntimeError(f"power iteration did not converge in {max_iter} steps (residual {resid:.3e})")


def operator_norm(op, from_space=(0.0, 1.0), to_space=(0.0, 1.0), method="auto") -> float:
    """Norm of ``op`` from H^{s_a}_t to H^{s_b}_t; spaces are (s, t) pairs.

    ``method`` is "svd", "power", or "auto" (SVD up to n = 512).
    """
    B = weighted_fourier_matrix(op, from_space, to_space)
    if method == "auto":
        method = "svd" if B.shape[0] <= SVD_MAX_N else "power"
    if method == "svd":
        return float(np.linalg.svd(B, compute_uv=False)[0])
    if method == "power":
        return power_iteration_norm(B)
    raise ValueError(f"unknown method {method!r}")


def smallest_singular_value(op, from_space=(0.0, 1.0), to_space=(0.0, 1.0)) -> float:
    B = weighted_fourier_matrix(op, from_space, to_space)
    return float(np.linalg.svd(B, compute_uv=False)[-1])


def rescaling_check(a: Symbol, t: float, fine_grid: GridSpec, coarse_grid: GridSpec) -> float:
    """L2 operator-norm gap between U_t^* a(x, tD) U_t and a(tx, D).

    a(x, tD) lives on the fine grid (period tL), a(tx, D) on the coarse grid
    (period L), with equal node counts.  U_t u(x) = t^(-1/2) u(x/t) maps
    coarse samples to fine samples index by index, so the conjugation acts
    on matrices as the identity.
    """
    if fine_grid.n != coarse_grid.n or not np.isclose(fine_grid.period, t * coarse_grid.period):
        raise ValueError("need equal n and fine period = t * coarse period")
    lhs = quantize_semiclassical(a, t, fine_grid).matrix
    rhs = quantize_canonical(a.dilated_x(t), coarse_grid).matrix
    return float(np.linalg.norm(lhs - rhs, 2))


def export_operator(op: QuantizedOperator, path) -> tuple:
    """Write the matrix as little-endian float64 (re, im) pairs, row-major, plus a JSON sidecar."""
    path = Path(path)
    np.ascontiguousarray(op.matrix).astype("<c16").tofile(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps({"grid": op.grid.to_dict(), "symbol_label": op.symbol_label,
                                   "mode": op.mode, "t": op.t, "dtype": "<c16", "order": "row-major"},
                                  indent=2, sort_keys=True))
    return path, sidecar


def import_operator(path) -> QuantizedOperator:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    grid = GridSpec(**meta["grid"])
    mat = np.fromfile(path, dtype="<c16").reshape(grid.n, grid.n)
    return QuantizedOperator(grid, mat, meta["mode"], meta["t"], meta["symbol_label"])

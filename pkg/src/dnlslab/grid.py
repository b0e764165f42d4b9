"""Periodic spectral grid, Fourier multipliers, and norm quadrature.

Everything downstream runs on a truncated periodic discretization of the
line: `n` equispaced points on a box of length `length`, with fields assumed
to decay below roundoff at the box edges.  One transform convention is used
throughout:

* forward transform carries ``dx``:  ``fhat(xi) = sum_j f(x_j) e^{-i xi x_j} dx``
* frequency-space quadrature carries ``1/length``, so that
  ``(1/L) sum_k |fhat_k|^2 == dx sum_j |f_j|^2`` holds exactly (Parseval).

With this normalization the squared Sobolev norm of a unit-mass single mode
at frequency ``xi0`` is ``(4 kappa^2 + xi0^2)^s``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "MultiplierSpec",
    "make_grid",
    "apply_multiplier",
    "littlewood_paley",
    "lp_frequencies",
    "lp_low_block",
    "sobolev_norm",
    "l2_norm",
    "l2_inner",
    "forward",
    "inverse",
    "spectral_derivative",
    "dealiased_product",
    "boundary_decay",
]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Equispaced periodic grid on ``[-length/2, length/2)``."""

    n: int
    length: float

    def __post_init__(self) -> None:
        if not _is_power_of_two(self.n):
            raise ValueError(f"grid size must be a power of two, got {self.n}")
        if not (64 <= self.n <= 2**16):
            raise ValueError(f"grid size {self.n} outside supported range [64, 65536]")
        if not self.length > 0:
            raise ValueError(f"domain length must be positive, got {self.length}")
        object.__setattr__(self, "dx", self.length / self.n)
        x = -0.5 * self.length + self.dx * np.arange(self.n)
        xi = 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)
        x.setflags(write=False)
        xi.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xi", xi)
        # phases relating numpy's FFT (indexed from x=0) to transforms based
        # at x = -length/2; (-1)^k because xi_k * length/2 = pi * k
        signs = np.where(np.arange(self.n) % 2 == 0, 1.0, -1.0)
        signs.setflags(write=False)
        object.__setattr__(self, "_signs", signs)

    @property
    def xi_max(self) -> float:
        """Largest resolved frequency magnitude (Nyquist)."""
        return np.pi / self.dx

    def __eq__(self, other) -> bool:
        return isinstance(other, Grid) and self.n == other.n and self.length == other.length

    def __hash__(self) -> int:
        return hash((self.n, self.length))


@dataclass(frozen=True)
class Field:
    """Complex samples of a function on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n,):
            raise ValueError(f"expected {self.grid.n} samples, got shape {values.shape}")
        object.__setattr__(self, "values", values)

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def __add__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _check_same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, c) -> "Field":
        return Field(self.grid, self.values * c)

    __rmul__ = __mul__

    def conj(self) -> "Field":
        return Field(self.grid, np.conj(self.values))


@dataclass(frozen=True)
class MultiplierSpec:
    """Fourier multiplier given by its symbol ``xi -> m(xi)``."""

    symbol: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def sample(self, grid: Grid) -> np.ndarray:
        m = np.asarray(self.symbol(grid.xi), dtype=np.complex128)
        if m.shape != grid.xi.shape:
            m = np.broadcast_to(m, grid.xi.shape).astype(np.complex128)
        if not np.all(np.isfinite(m)):
            raise ValueError(f"multiplier {self.name or self.symbol} is not finite on the grid")
        return m


def _check_same_grid(a: Field, b: Field) -> None:
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")


def make_grid(n: int, length: float) -> Grid:
    """Build a periodic grid with ``n`` points (power of two) on length ``length``."""
    return Grid(int(n), float(length))


def forward(f: Field) -> np.ndarray:
    """Fourier coefficients ``fhat(xi_k) = sum_j f_j e^{-i xi_k x_j} dx`` (fftfreq order)."""
    g = f.grid
    return g.dx * g._signs * np.fft.fft(f.values)


def inverse(grid: Grid, fhat: np.ndarray) -> Field:
    """Invert :func:`forward`."""
    vals = np.fft.ifft(grid._signs * fhat) / grid.dx
    return Field(grid, vals)


def apply_multiplier(m: MultiplierSpec | Callable[[np.ndarray], np.ndarray], f: Field) -> Field:
    """Apply a Fourier multiplier; exact on resolved single modes."""
    if not isinstance(m, MultiplierSpec):
        m = MultiplierSpec(m)
    sym = m.sample(f.grid)
    # base-point phases cancel for diagonal multipliers
    return Field(f.grid, np.fft.ifft(sym * np.fft.fft(f.values)))


def spectral_derivative(f: Field, order: int = 1) -> Field:
    """Spectral d/dx with the Nyquist mode zeroed for odd orders."""
    xi = f.grid.xi
    sym = (1j * xi) ** order
    if order % 2 == 1:
        sym = sym.copy()
        sym[f.grid.n // 2] = 0.0
    return Field(f.grid, np.fft.ifft(sym * np.fft.fft(f.values)))


def l2_norm(f: Field) -> float:
    """L^2(dx) norm by trapezoid-consistent quadrature."""
    return float(np.sqrt(f.grid.dx * np.sum(np.abs(f.values) ** 2)))


def l2_inner(f: Field, g: Field) -> complex:
    """Quadrature of ``conj(f) g`` over the box."""
    _check_same_grid(f, g)
    return complex(f.grid.dx * np.sum(np.conj(f.values) * g.values))


def sobolev_norm(f: Field, s: float, kappa: float = 1.0) -> float:
    """Norm with weight ``(4 kappa^2 + xi^2)^s`` on ``|fhat|^2`` (see module docstring)."""
    if kappa < 1.0:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    fhat = forward(f)
    w = (4.0 * kappa**2 + f.grid.xi**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(fhat) ** 2) / f.grid.length))


# ---------------------------------------------------------------------------
# Littlewood-Paley blocks
# ---------------------------------------------------------------------------


def _lp_cutoff(r: np.ndarray) -> np.ndarray:
    """Smooth cutoff: 1 on |r|<=1, bump transition on 1<|r|<2, 0 beyond."""
    a = np.abs(r)
    out = np.zeros_like(a)
    out[a <= 1.0] = 1.0
    mid = (a > 1.0) & (a < 2.0)
    t = a[mid] - 1.0
    out[mid] = np.exp(1.0 - 1.0 / (1.0 - t**2))
    return out


def lp_frequencies(grid: Grid) -> list[float]:
    """Dyadic frequencies 2^j inside the resolvable band [2*pi/length, pi/dx]."""
    lo = 2.0 * np.pi / grid.length
    hi = grid.xi_max
    j_lo = int(np.ceil(np.log2(lo) - 1e-9))
    j_hi = int(np.floor(np.log2(hi) + 1e-9))
    return [2.0**j for j in range(j_lo, j_hi + 1)]


def littlewood_paley(f: Field, N: float) -> Field:
    """Dyadic block P_N f with symbol ``phi(xi/N) - phi(2 xi/N)``."""
    band = lp_frequencies(f.grid)
    if not any(np.isclose(N, b) for b in band):
        raise ValueError(f"dyadic frequency {N} outside resolvable band [{band[0]}, {band[-1]}]")
    xi = f.grid.xi
    sym = _lp_cutoff(xi / N) - _lp_cutoff(2.0 * xi / N)
    return Field(f.grid, np.fft.ifft(sym * np.fft.fft(f.values)))


def lp_low_block(f: Field) -> Field:
    """Complement block P_{<= Nmin/2} so that it plus all resolvable P_N sums to identity."""
    N_min = lp_frequencies(f.grid)[0]
    xi = f.grid.xi
    sym = _lp_cutoff(2.0 * xi / N_min)
    return Field(f.grid, np.fft.ifft(sym * np.fft.fft(f.values)))


# ---------------------------------------------------------------------------
# Products and decay checks
# ---------------------------------------------------------------------------


def dealiased_product(*fields: Field) -> Field:
    """Pointwise product with zero-padding sized to dealias the full product.

    Padding factor equals the number of factors, which removes aliasing
    exactly (cubic products use a 3x transform).  Used for nonlinear terms
    that feed back into time evolution; diagnostics may multiply samples
    directly.
    """
    if len(fields) < 2:
        raise ValueError("need at least two factors")
    g = fields[0].grid
    for f in fields[1:]:
        _check_same_grid(fields[0], f)
    n = g.n
    m = len(fields) * n
    prod = None
    for f in fields:
        fh = np.fft.fft(f.values)
        pad = np.zeros(m, dtype=np.complex128)
        pad[: n // 2] = fh[: n // 2]
        pad[-(n // 2) :] = fh[-(n // 2) :]
        up = np.fft.ifft(pad) * (m / n)
        prod = up if prod is None else prod * up
    ph = np.fft.fft(prod)
    out = np.zeros(n, dtype=np.complex128)
    out[: n // 2] = ph[: n // 2]
    out[-(n // 2) :] = ph[-(n // 2) :]
    return Field(g, np.fft.ifft(out) * (n / m))


def boundary_decay(f: Field, edge_fraction: float = 0.02) -> float:
    """Relative magnitude of the field near the box edges (decay diagnostic)."""
    k = max(1, int(edge_fraction * f.grid.n))
    mx = float(np.max(np.abs(f.values)))
    if mx == 0.0:
        return 0.0
    edge = max(float(np.max(np.abs(f.values[:k]))), float(np.max(np.abs(f.values[-k:]))))
    return edge / mx


def require_boundary_decay(f: Field, tol: float = 1e-12, what: str = "field") -> None:
    """Raise if the field has not decayed below ``tol`` (relative) at the box edges."""
    r = boundary_decay(f)
    if r > tol:
        raise ValueError(f"{what} is not decayed at the box boundary: {r:.3e} > {tol:.1e}")

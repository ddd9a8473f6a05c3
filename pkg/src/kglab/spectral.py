"""Periodic pseudospectral foundation: grids, fields, Fourier multipliers.

Conventions, used everywhere in the package:

* the computational box is ``[-L, L)^d`` with ``N`` points per axis,
  grid spacing ``h = 2L/N`` and nodes ``x_j = -L + j*h``;
* the frequency lattice is ``(pi/L) * {-N/2, ..., N/2 - 1}^d``, stored in
  FFT (unshifted) order;
* the forward transform carries the ``1/N^d`` factor, so
  ``fhat(xi_k) = N^{-d} * sum_j f(x_j) exp(-i xi_k . x_j)``;
* the physical L2 norm carries the cell volume ``h^{d/2}`` and the
  frequency-side L2 norm the weight ``(2L)^{d/2}``, which makes the two
  sides of Plancherel agree exactly.

A complex scalar field of size ``N^d`` occupies ``16 * N^d`` bytes; every
operation below allocates at most a handful of such arrays.
"""

from __future__ import annotations

import csv
import math
import struct
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.fft as _sfft

_FFT_WORKERS = -1

PHYSICAL = "physical"
FREQUENCY = "frequency"

#: upper edge of the smooth low-pass ramp (the cutoff equals 1 below the
#: inner edge and 0 above ``RAMP_OUTER`` times the scale).
RAMP_OUTER = 99.0 / 98.0


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Periodic computational box ``[-L, L)^d`` with ``N^d`` nodes."""

    dimension: int
    points_per_axis: int
    half_width: float

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if not _is_power_of_two(self.points_per_axis):
            raise ValueError(f"points_per_axis must be a power of two, got {self.points_per_axis}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dimension

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dimension

    @property
    def frequency_weight(self) -> float:
        """Weight of one frequency cell in the Plancherel pairing."""
        return (2.0 * self.half_width) ** self.dimension

    def axis_coordinates(self) -> np.ndarray:
        n, h = self.points_per_axis, self.spacing
        return -self.half_width + h * np.arange(n)

    def axis_frequencies(self) -> np.ndarray:
        """1D frequency lattice in FFT order, step ``pi/L``."""
        n = self.points_per_axis
        return 2.0 * np.pi * np.fft.fftfreq(n, d=self.spacing)

    def coordinate_mesh(self) -> np.ndarray:
        """Array of shape ``(d,) + shape`` with node coordinates."""
        ax = self.axis_coordinates()
        grids = np.meshgrid(*([ax] * self.dimension), indexing="ij")
        return np.stack(grids)

    def frequency_mesh(self) -> np.ndarray:
        """Array of shape ``(d,) + shape`` with lattice frequencies (FFT order)."""
        ax = self.axis_frequencies()
        grids = np.meshgrid(*([ax] * self.dimension), indexing="ij")
        return np.stack(grids)

    def frequency_norm(self) -> np.ndarray:
        """|xi| on the lattice."""
        xi = self.frequency_mesh()
        return np.sqrt(np.sum(xi * xi, axis=0))

    @property
    def nyquist(self) -> float:
        """Largest representable |xi| component, ``pi/h``."""
        return np.pi / self.spacing


def make_grid(d: int, N: int, L: float) -> GridSpec:
    """Create a grid; rejects non-power-of-two ``N``, ``d`` outside {1,2,3}
    and nonpositive ``L``.  Size caps keep a field under ~34 MB."""
    grid = GridSpec(d, N, float(L))
    cap = {1: 1024, 2: 512, 3: 128}[d]
    if not 8 <= N <= cap:
        raise ValueError(f"points_per_axis for d={d} must lie in [8, {cap}], got {N}")
    return grid


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Complex scalar field on a grid, in physical or frequency representation.

    Values are frozen after construction; all operations return new fields.
    """

    grid: GridSpec
    values: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self):
        if self.representation not in (PHYSICAL, FREQUENCY):
            raise ValueError(f"unknown representation {self.representation!r}")
        vals = np.ascontiguousarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid shape {self.grid.shape}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, representation: str | None = None) -> "SpectralField":
        rep = self.representation if representation is None else representation
        return SpectralField(self.grid, values, rep)

    def to_frequency(self) -> "SpectralField":
        if self.representation == FREQUENCY:
            return self
        vhat = _sfft.fftn(self.values, workers=_FFT_WORKERS) / self.grid.size
        return SpectralField(self.grid, vhat, FREQUENCY)

    def to_physical(self) -> "SpectralField":
        if self.representation == PHYSICAL:
            return self
        v = _sfft.ifftn(self.values, workers=_FFT_WORKERS) * self.grid.size
        return SpectralField(self.grid, v, PHYSICAL)

    def l2_norm(self) -> float:
        w = self.grid.cell_volume if self.representation == PHYSICAL else self.grid.frequency_weight
        return math.sqrt(w * float(np.sum(np.abs(self.values) ** 2)))

    def sobolev_norm(self, s: float) -> float:
        """H^s norm, ``|| <xi>^s fhat ||``."""
        fh = self.to_frequency().values
        br = bracket_lattice(self.grid) ** s
        return math.sqrt(self.grid.frequency_weight * float(np.sum(br * br * np.abs(fh) ** 2)))

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


def zero_field(grid: GridSpec, representation: str = PHYSICAL) -> SpectralField:
    return SpectralField(grid, np.zeros(grid.shape, dtype=np.complex128), representation)


def sample_closed_form(fn: Callable[[np.ndarray], np.ndarray], grid: GridSpec) -> SpectralField:
    """Sample a closed-form datum ``x -> complex`` on the grid.

    ``fn`` receives the coordinate mesh of shape ``(d,) + shape``.
    """
    vals = np.asarray(fn(grid.coordinate_mesh()), dtype=np.complex128)
    return SpectralField(grid, np.broadcast_to(vals, grid.shape).copy(), PHYSICAL)


def parseval_residual(f: SpectralField) -> float:
    """Relative gap between the physical and frequency L2 norms."""
    a = f.to_physical().l2_norm()
    b = f.to_frequency().l2_norm()
    return abs(a - b) / max(a, 1e-300)


def boundary_mass_fraction(f: SpectralField) -> float:
    """Fraction of the L2 mass carried by the outermost cell shell.

    Experiments treat a fraction above 1e-6 as loss of containment in the
    periodic box.
    """
    phys = f.to_physical()
    g = f.grid
    ax = np.abs(g.axis_coordinates())
    edge = ax >= g.half_width - g.spacing * 1.0001
    mask = np.zeros(g.shape, dtype=bool)
    for axis in range(g.dimension):
        shape = [1] * g.dimension
        shape[axis] = g.points_per_axis
        mask |= edge.reshape(shape)
    w = np.abs(phys.values) ** 2
    total = float(np.sum(w))
    if total == 0.0:
        return 0.0
    return float(np.sum(w[mask])) / total


# ---------------------------------------------------------------------------
# multipliers


@dataclass(frozen=True)
class MultiplierSymbol:
    """Fourier multiplier ``xi -> m(xi)``.

    ``fn`` receives the frequency mesh ``(d,) + shape`` and returns the
    symbol values on the lattice.
    """

    fn: Callable[[np.ndarray], np.ndarray]
    label: str

    def evaluate(self, grid: GridSpec) -> np.ndarray:
        m = np.asarray(self.fn(grid.frequency_mesh()))
        m = np.broadcast_to(m, grid.shape)
        if not np.all(np.isfinite(m)):
            bad = np.argwhere(~np.isfinite(np.asarray(m)))
            xi = grid.frequency_mesh()
            where = xi[(slice(None),) + tuple(bad[0])]
            raise ValueError(
                f"multiplier {self.label!r} is not finite at xi={np.asarray(where)}"
            )
        return m


def bracket_lattice(grid: GridSpec) -> np.ndarray:
    """<xi> = sqrt(1 + |xi|^2) on the lattice."""
    xin = grid.frequency_norm()
    return np.sqrt(1.0 + xin * xin)


def bracket_symbol(power: float = 1.0) -> MultiplierSymbol:
    def fn(xi):
        n2 = np.sum(xi * xi, axis=0)
        return (1.0 + n2) ** (power / 2.0)

    return MultiplierSymbol(fn, f"<xi>^{power:g}")


def apply_multiplier(f: SpectralField, m: MultiplierSymbol, as_physical: bool = False) -> SpectralField:
    """Multiply the spectrum by ``m(xi)``; result is in frequency
    representation unless ``as_physical`` requests the inverse transform."""
    if not f.is_finite():
        raise ValueError("field contains NaN/Inf")
    fh = f.to_frequency()
    out = fh.with_values(m.evaluate(f.grid) * fh.values, FREQUENCY)
    return out.to_physical() if as_physical else out


def _apply_symbol_values(f: SpectralField, symbol: np.ndarray) -> SpectralField:
    """Internal fast path: multiply by a precomputed lattice symbol,
    preserving the input representation."""
    fh = f.to_frequency()
    out = fh.with_values(symbol * fh.values, FREQUENCY)
    return out.to_physical() if f.representation == PHYSICAL else out


# ---------------------------------------------------------------------------
# smooth cutoffs and Littlewood-Paley projectors


def _smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity ramp: 0 at t<=0, 1 at t>=1, exp(-1/t)/(exp(-1/t)+exp(-1/(1-t)))
    in between."""
    t = np.clip(t, 0.0, 1.0)
    out = np.empty_like(t, dtype=np.float64)
    interior = (t > 0.0) & (t < 1.0)
    out[t <= 0.0] = 0.0
    out[t >= 1.0] = 1.0
    ti = t[interior]
    with np.errstate(over="ignore"):
        a = np.exp(-1.0 / ti)
        b = np.exp(-1.0 / (1.0 - ti))
    out[interior] = a / (a + b)
    return out


def smooth_cutoff(r: np.ndarray, inner: float = 1.0, outer: float = RAMP_OUTER) -> np.ndarray:
    """Radial bump: 1 for r <= inner, 0 for r >= outer, smooth ramp between."""
    r = np.asarray(r, dtype=np.float64)
    return _smoothstep((outer - r) / (outer - inner))


def lowpass_symbol(scale: float) -> MultiplierSymbol:
    """Smooth low-pass at an arbitrary positive scale: 1 on |xi| <= scale,
    0 beyond ``RAMP_OUTER * scale``."""
    if not scale > 0:
        raise ValueError(f"low-pass scale must be positive, got {scale}")

    def fn(xi):
        r = np.sqrt(np.sum(xi * xi, axis=0)) / scale
        return smooth_cutoff(r)

    return MultiplierSymbol(fn, f"lowpass({scale:g})")


def _is_dyadic(N: float) -> bool:
    if N <= 0:
        return False
    m = math.log2(N)
    return abs(m - round(m)) < 1e-12


def littlewood_paley(f: SpectralField, N: float, kind: str) -> SpectralField:
    """Dyadic frequency projector.

    ``kind='P_<=N'`` keeps |xi| <= N (cutoff ramp up to RAMP_OUTER*N);
    ``kind='P_N'`` selects the annulus between N/2 and N for N >= 2 and the
    unit ball piece for N = 1.  ``N`` must be a dyadic number >= 1.
    """
    if not _is_dyadic(N) or N < 1:
        raise ValueError(f"N must be dyadic and >= 1, got {N}")
    r = f.grid.frequency_norm()
    low = smooth_cutoff(r / N)
    if kind in ("P_<=N", "low"):
        sym = low
    elif kind in ("P_N", "annulus"):
        sym = low - smooth_cutoff(2.0 * r / N) if N >= 2 else low
    else:
        raise ValueError(f"unknown projector kind {kind!r}")
    return _apply_symbol_values(f, sym)


def dealias_mask(grid: GridSpec) -> np.ndarray:
    """2/3-rule mask: keeps per-axis frequencies with |xi_i| <= (2/3) * Nyquist."""
    ax = np.abs(grid.axis_frequencies()) <= (2.0 / 3.0) * grid.nyquist
    mask = np.ones(grid.shape, dtype=bool)
    for axis in range(grid.dimension):
        shape = [1] * grid.dimension
        shape[axis] = grid.points_per_axis
        mask &= ax.reshape(shape)
    return mask


# ---------------------------------------------------------------------------
# symmetries: dilation and translation


def dilate_closed_form(
    fn: Callable[[np.ndarray], np.ndarray],
    lam: float,
    grid: GridSpec,
    warn_threshold: float = 1e-6,
) -> SpectralField:
    """Sample the L2-preserving dilation ``lam^{-d/2} fn(x/lam)`` on the grid.

    Emits a warning when more than ``warn_threshold`` of the sampled mass
    sits in the outermost cell shell (the datum no longer fits the box).
    """
    if not lam > 0:
        raise ValueError(f"dilation parameter must be positive, got {lam}")
    mesh = grid.coordinate_mesh() / lam
    vals = lam ** (-grid.dimension / 2.0) * np.asarray(fn(mesh), dtype=np.complex128)
    out = SpectralField(grid, np.broadcast_to(vals, grid.shape).copy(), PHYSICAL)
    frac = boundary_mass_fraction(out)
    if frac > warn_threshold:
        warnings.warn(
            f"dilated datum leaks into the boundary shell (mass fraction {frac:.3e})",
            RuntimeWarning,
            stacklevel=2,
        )
    return out


def translate(f: SpectralField, y: Sequence[float]) -> SpectralField:
    """Periodic translation ``f(x - y)`` implemented by the phase multiplier."""
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if y.size != f.grid.dimension:
        raise ValueError("translation vector dimension mismatch")
    xi = f.grid.frequency_mesh()
    phase = np.exp(-1j * np.tensordot(y, xi, axes=(0, 0)))
    return _apply_symbol_values(f, phase)


# ---------------------------------------------------------------------------
# free propagators


KG = "kg"
SCALED_KG = "scaled_kg"
SCHRODINGER = "schrodinger"


def propagator_symbol(grid: GridSpec, t: float, kind: str, lam: float | None = None) -> np.ndarray:
    """Unimodular symbol of the free flow at time ``t``.

    ``kg``:        exp(-i t <xi>)
    ``scaled_kg``: exp(-i lam^2 t (<xi/lam> - 1))
    ``schrodinger``: exp(-i t |xi|^2 / 2)
    """
    xin = grid.frequency_norm()
    if kind == KG:
        phase = np.sqrt(1.0 + xin * xin)
    elif kind == SCALED_KG:
        if lam is None or lam <= 0:
            raise ValueError("scaled_kg requires a positive lam")
        phase = lam * lam * (np.sqrt(1.0 + (xin / lam) ** 2) - 1.0)
    elif kind == SCHRODINGER:
        phase = 0.5 * xin * xin
    else:
        raise ValueError(f"unknown propagator kind {kind!r}")
    return np.exp(-1j * t * phase)


def free_propagate(f: SpectralField, t: float, kind: str, lam: float | None = None) -> SpectralField:
    """Apply the free flow of the chosen dispersion for time ``t``.

    Preserves the input representation and the L2 norm (the symbol is
    unimodular)."""
    return _apply_symbol_values(f, propagator_symbol(f.grid, t, kind, lam))


def dispersion_gap(lam: float, K: float, grid: GridSpec) -> float:
    """max over lattice |xi| <= K of |lam^2 (<xi/lam> - 1) - |xi|^2/2|."""
    if not (lam > 0 and K > 0):
        raise ValueError("lam and K must be positive")
    xin = grid.frequency_norm()
    sel = xin <= K
    if not np.any(sel):
        return 0.0
    x = xin[sel]
    gap = lam * lam * (np.sqrt(1.0 + (x / lam) ** 2) - 1.0) - 0.5 * x * x
    return float(np.max(np.abs(gap)))


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"KGF1"


def field_to_bytes(f: SpectralField) -> bytes:
    """Little-endian layout: magic 'KGF1', uint32 d, uint32 N, float64 L,
    uint8 representation flag (0 physical / 1 frequency), then the C-ordered
    payload of interleaved re/im float64 pairs."""
    g = f.grid
    flag = 0 if f.representation == PHYSICAL else 1
    head = _MAGIC + struct.pack("<IIdB", g.dimension, g.points_per_axis, g.half_width, flag)
    payload = np.empty(g.size * 2, dtype="<f8")
    flat = f.values.reshape(-1)
    payload[0::2] = flat.real
    payload[1::2] = flat.imag
    return head + payload.tobytes()


def field_from_bytes(data: bytes) -> SpectralField:
    if data[:4] != _MAGIC:
        raise ValueError("bad magic; not a field snapshot")
    d, N, L, flag = struct.unpack_from("<IIdB", data, 4)
    offset = 4 + struct.calcsize("<IIdB")
    grid = GridSpec(d, N, L)
    raw = np.frombuffer(data, dtype="<f8", offset=offset, count=grid.size * 2)
    vals = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
    return SpectralField(grid, vals, PHYSICAL if flag == 0 else FREQUENCY)


def save_field(f: SpectralField, path) -> None:
    with open(path, "wb") as fh:
        fh.write(field_to_bytes(f))


def load_field(path) -> SpectralField:
    with open(path, "rb") as fh:
        return field_from_bytes(fh.read())


def field_to_csv(f: SpectralField, path, max_points: int = 65536) -> None:
    """Write (index..., re, im) rows; refuses grids above ``max_points``."""
    if f.grid.size > max_points:
        raise ValueError(f"grid too large for CSV ({f.grid.size} > {max_points} points)")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"i{a}" for a in range(f.grid.dimension)] + ["re", "im"])
        for idx in np.ndindex(f.grid.shape):
            z = f.values[idx]
            w.writerow(list(idx) + [repr(z.real), repr(z.imag)])

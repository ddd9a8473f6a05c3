"""Conserved and variational quantities of the first-order flow.

The complex field ``v = u + i <grad>^{-1} u_t`` carries both components of
the wave map; energy, momentum, the scaling functionals K_{alpha,beta},
the scattering size and the threshold predicates are all computed from it
(or from the real pair (u, u_t)) by grid quadrature, which on a periodic
box is exact trapezoid integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ground_state import RadialProfile
from .nonlinearity import NonlinearityParams
from .spectral import (
    FREQUENCY,
    GridSpec,
    SpectralField,
    bracket_lattice,
)

CSV_COLUMNS = (
    "time",
    "kinetic",
    "gradient",
    "mass",
    "potential",
    "total",
    "momentum",
)


@dataclass(frozen=True)
class EnergyReport:
    """Split of the conserved energy plus the momentum vector.

    kinetic = ||u_t||^2/2, gradient = ||grad u||^2/2, mass = ||u||^2/2,
    potential = mu d/(2(d+2)) ||u||_{2(d+2)/d}^{2(d+2)/d}; ``total`` is their
    sum and agrees with the first-order form ||<grad> v||^2/2 + potential.
    """

    kinetic: float
    gradient: float
    mass: float
    potential: float
    total: float
    momentum: tuple
    first_order_total: float

    def csv_row(self, t: float) -> list:
        return [
            repr(float(t)),
            repr(self.kinetic),
            repr(self.gradient),
            repr(self.mass),
            repr(self.potential),
            repr(self.total),
            ";".join(repr(p) for p in self.momentum),
        ]


def _quad(grid: GridSpec, values: np.ndarray) -> float:
    return grid.cell_volume * float(np.sum(values))


def lebesgue_power_integral(f: SpectralField, p: float, real_part: bool = False) -> float:
    """integral of |f|^p (or |Re f|^p) by grid quadrature."""
    vals = f.to_physical().values
    base = np.abs(vals.real) if real_part else np.abs(vals)
    return _quad(f.grid, base**p)


def real_imag_parts(v: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """(u, u_t) of the wave pair encoded in v: u = Re v, u_t = <grad> Im v."""
    phys = v.to_physical()
    u = phys.values.real
    im = SpectralField(v.grid, phys.values.imag.astype(np.complex128))
    ut_hat = bracket_lattice(v.grid) * im.to_frequency().values
    ut = SpectralField(v.grid, ut_hat, FREQUENCY).to_physical().values.real
    return u, ut


def gradient_squared_integral(grid: GridSpec, values_physical: np.ndarray) -> float:
    f = SpectralField(grid, np.asarray(values_physical, dtype=np.complex128))
    fh = f.to_frequency().values
    xi2 = np.sum(grid.frequency_mesh() ** 2, axis=0)
    return grid.frequency_weight * float(np.sum(xi2 * np.abs(fh) ** 2))


def energy(v: SpectralField, params: NonlinearityParams) -> EnergyReport:
    """Energy split of the first-order field; both the (u, u_t) form and
    the ||<grad> v||^2/2 form are evaluated and reported."""
    d = v.grid.dimension
    u, ut = real_imag_parts(v)
    kinetic = 0.5 * _quad(v.grid, ut**2)
    grad = 0.5 * gradient_squared_integral(v.grid, u)
    mass = 0.5 * _quad(v.grid, u**2)
    p = 2.0 * (d + 2) / d
    potential = params.mu * d / (2.0 * (d + 2)) * _quad(v.grid, np.abs(u) ** p)
    total = kinetic + grad + mass + potential

    vh = v.to_frequency().values
    br = bracket_lattice(v.grid)
    first_order = 0.5 * v.grid.frequency_weight * float(np.sum((br * np.abs(vh)) ** 2)) + potential

    mom = momentum_from_parts(v.grid, u, ut)
    return EnergyReport(kinetic, grad, mass, potential, total, tuple(mom), first_order)


def momentum_from_parts(grid: GridSpec, u: np.ndarray, ut: np.ndarray) -> np.ndarray:
    f = SpectralField(grid, np.asarray(u, dtype=np.complex128))
    fh = f.to_frequency().values
    xi = grid.frequency_mesh()
    out = np.empty(grid.dimension)
    for a in range(grid.dimension):
        da = SpectralField(grid, 1j * xi[a] * fh, FREQUENCY).to_physical().values.real
        out[a] = _quad(grid, ut * da)
    return out


def momentum(u: SpectralField, u_t: SpectralField) -> np.ndarray:
    """Momentum integral of u_t . grad u; u must be real valued."""
    phys = u.to_physical()
    scale = float(np.max(np.abs(phys.values))) or 1.0
    if float(np.max(np.abs(phys.values.imag))) > 1e-10 * scale:
        raise ValueError("momentum requires a real-valued u")
    return momentum_from_parts(u.grid, phys.values.real, u_t.to_physical().values.real)


def k_functional(phi: SpectralField, alpha: float, beta: float, params: NonlinearityParams) -> float:
    """Scaling-derivative functional with weights
    (2a-(d-2)b)/2 on ||grad phi||^2, (2a-db)/2 on ||phi||^2 and
    -(a - d^2 b / (2(d+2))) on the L^{2(d+2)/d} power integral."""
    d = phi.grid.dimension
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if (alpha, beta) == (0.0, 0.0):
        raise ValueError("(alpha, beta) = (0, 0) is excluded")
    if 2 * alpha - d * beta < 0 or 2 * alpha - (d - 2) * beta < 0:
        raise ValueError("parameters violate 2a - db >= 0 and 2a - (d-2)b >= 0")
    phys = phi.to_physical()
    grad = gradient_squared_integral(phi.grid, phys.values)
    l2sq = _quad(phi.grid, np.abs(phys.values) ** 2)
    p = 2.0 * (d + 2) / d
    lp = _quad(phi.grid, np.abs(phys.values) ** p)
    return (
        0.5 * (2 * alpha - (d - 2) * beta) * grad
        + 0.5 * (2 * alpha - d * beta) * l2sq
        - (alpha - d * d * beta / (2.0 * (d + 2))) * lp
    )


def k0(phi: SpectralField, params: NonlinearityParams) -> float:
    return k_functional(phi, 1.0, 0.0, params)


def k1(phi: SpectralField, params: NonlinearityParams) -> float:
    d = phi.grid.dimension
    return k_functional(phi, float(d), 2.0, params)


def scattering_size(times: np.ndarray, fields: list[SpectralField]) -> float:
    """Space-time integral of |Re v|^{2(d+2)/d} over the snapshot interval
    (trapezoid in time)."""
    if len(times) != len(fields):
        raise ValueError("times and fields must align")
    d = fields[0].grid.dimension
    p = 2.0 * (d + 2) / d
    spatial = np.array([lebesgue_power_integral(f, p, real_part=True) for f in fields])
    return float(np.trapezoid(spatial, np.asarray(times)))


@dataclass(frozen=True)
class ThresholdReport:
    below_energy: bool
    k0_value: float
    k0_sign: int
    mass_below: bool
    consistent: Optional[bool]  # None = indeterminate (guard band)


def threshold_predicates(
    u0: SpectralField,
    u1: SpectralField,
    Q: RadialProfile,
    params: NonlinearityParams,
    guard: float = 1e-6,
) -> ThresholdReport:
    """Check the equivalence 'mass below ||Q|| iff K_0 >= 0' under the
    energy threshold E < E(Q, 0) = ||Q||^2 / 2 (focusing sign only).

    Inputs whose |K_0| or mass gap falls inside the guard band are
    reported indeterminate instead of pass/fail.
    """
    if params.mu != -1:
        raise ValueError("threshold predicates apply to the focusing sign")
    grid = u0.grid
    u = u0.to_physical().values.real
    ut = u1.to_physical().values.real
    d = grid.dimension
    p = 2.0 * (d + 2) / d
    e = (
        0.5 * _quad(grid, ut**2)
        + 0.5 * gradient_squared_integral(grid, u)
        + 0.5 * _quad(grid, u**2)
        + params.mu * d / (2.0 * (d + 2)) * _quad(grid, np.abs(u) ** p)
    )
    e_q = 0.5 * Q.mass_squared()
    below_energy = e < e_q
    k0_val = k0(u0, params)
    mass_sq = _quad(grid, u**2)
    mass_gap = Q.mass_squared() - mass_sq
    mass_below = mass_gap > 0
    k0_sign = 0 if abs(k0_val) <= guard else (1 if k0_val > 0 else -1)

    if not below_energy:
        consistent: Optional[bool] = True  # the implication is vacuous
    elif mass_sq == 0.0:
        consistent = True  # the zero datum is exactly determined
    elif abs(k0_val) <= guard or abs(mass_gap) <= guard:
        consistent = None
    else:
        consistent = (k0_val >= 0) == mass_below
    return ThresholdReport(below_energy, k0_val, k0_sign, mass_below, consistent)


def gn_sweep_field(grid: GridSpec, rng: np.random.Generator, band: float = 4.0) -> SpectralField:
    """Random real band-limited zero-mean field for inequality sweeps.

    The zero mode is removed and the band kept at order one: near-constant
    fields on the torus fall outside the whole-space sharp inequality.
    """
    shape = grid.shape
    spec = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    xin = grid.frequency_norm()
    spec = np.where(xin <= band, spec, 0.0)
    spec[(0,) * grid.dimension] = 0.0
    f = SpectralField(grid, spec, FREQUENCY).to_physical()
    return f.with_values(f.values.real.astype(np.complex128))


def is_admissible(q: float, r: float, d: int, sharp: bool = False) -> bool:
    """Arithmetic admissibility predicate for the wave-type flow.

    Requires 2 <= q, r <= inf and
    (d-1)/2 (1/2 - 1/r) <= 1/q <= d/2 (1/2 - 1/r), excluding
    (q, r, d) = (2, inf, 2); the sharp variant asks for equality on the
    right.
    """
    if q < 2 or r < 2:
        return False
    iq = 0.0 if math.isinf(q) else 1.0 / q
    ir = 0.0 if math.isinf(r) else 1.0 / r
    if q == 2 and math.isinf(r) and d == 2:
        return False
    lo = 0.5 * (d - 1) * (0.5 - ir)
    hi = 0.5 * d * (0.5 - ir)
    tol = 1e-12
    if sharp:
        return abs(iq - hi) <= tol and lo <= iq + tol
    return lo - tol <= iq <= hi + tol

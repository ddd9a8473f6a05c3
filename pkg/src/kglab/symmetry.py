"""Lorentz boost on Fourier data and the angular tube partition.

The boost acts on the frequency side: the output spectrum at the mapped
frequency ``xi~ = l_nu(xi)`` equals ``(<xi>/<xi~>) fhat(xi)``.  On a finite
lattice the mapped points fall between lattice nodes, so the implementation
resamples the trigonometric interpolant of the input by a direct nonuniform
sum (exact band-limited / Dirichlet-kernel interpolation, cost O(N^{2d})).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spectral import FREQUENCY, GridSpec, SpectralField, smooth_cutoff


def lorentz_frequency_map(xi: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """Frequency action of the boost with velocity ``nu``.

    ``xi`` has shape ``(d,)`` or ``(d, M)``; the result matches.  For
    ``nu = 0`` the map is the identity.  Splitting ``xi`` into components
    parallel/perpendicular to ``nu``, the image is
    ``xi_perp + <nu> xi_par - nu <xi>``.
    """
    xi = np.asarray(xi, dtype=np.float64)
    nu = np.asarray(nu, dtype=np.float64).reshape(-1)
    single = xi.ndim == 1
    pts = xi.reshape(len(nu), -1)
    nn = float(np.dot(nu, nu))
    bra_xi = np.sqrt(1.0 + np.sum(pts * pts, axis=0))
    if nn == 0.0:
        out = pts.copy()
    else:
        bra_nu = math.sqrt(1.0 + nn)
        proj = (nu @ pts) / nn  # coefficient of nu in xi_par
        par = nu[:, None] * proj[None, :]
        perp = pts - par
        out = perp + bra_nu * par - nu[:, None] * bra_xi[None, :]
    return out[:, 0] if single else out.reshape(xi.shape)


def _spectral_tail_fraction(f: SpectralField) -> float:
    """Mass fraction beyond 2/3 of the Nyquist band; a proxy for the
    aliasing error of nonuniform resampling."""
    fh = f.to_frequency()
    w = np.abs(fh.values) ** 2
    total = float(np.sum(w))
    if total == 0.0:
        return 0.0
    from .spectral import dealias_mask

    inner = dealias_mask(f.grid)
    return float(np.sum(w[~inner])) / total


def lorentz_boost_fourier(f: SpectralField, nu, interp_warn: float = 1e-6) -> SpectralField:
    """Inverse-boost action on a sampled field.

    The input is decomposed into its lattice plane waves; each component
    ``fhat(xi) e^{i x.xi}`` maps exactly to
    ``(<xi>/<xi~>) fhat(xi) e^{i x.xi~}`` with ``xi~ = l_nu(xi)``, and the
    boosted sum is resampled on the grid (a direct nonuniform sum, cost
    O(N^{2d}); the inverse of ``l_nu`` is the boost with ``-nu``).  Exact
    on plane waves whose image lands on the lattice.  Restricted to d <= 2
    and N <= 256; rejects boosts pushing the occupied band off the lattice.
    """
    grid = f.grid
    nu = np.asarray(nu, dtype=np.float64).reshape(-1)
    if nu.size != grid.dimension:
        raise ValueError("velocity dimension mismatch")
    if grid.dimension > 2 or grid.points_per_axis > 256:
        raise ValueError("boost resampling is limited to d <= 2, N <= 256")

    tail = _spectral_tail_fraction(f)
    if tail > interp_warn:
        warnings.warn(
            f"boost interpolation residual estimate {tail:.3e} exceeds {interp_warn:.1e}",
            RuntimeWarning,
            stacklevel=2,
        )

    sources = grid.frequency_mesh().reshape(grid.dimension, -1)
    images = lorentz_frequency_map(sources, nu)

    fh = f.to_frequency().values.reshape(-1)
    # modes mapped outside the lattice alias back as garbage; reject when
    # they carry more than a vanishing share of the mass
    outside = np.any(np.abs(images) > grid.nyquist, axis=0)
    total = float(np.sum(np.abs(fh) ** 2))
    if total > 0 and float(np.sum(np.abs(fh[outside]) ** 2)) > 1e-12 * total:
        raise ValueError("boosted frequency support exceeds the lattice")

    bra_src = np.sqrt(1.0 + np.sum(sources * sources, axis=0))
    bra_img = np.sqrt(1.0 + np.sum(images * images, axis=0))
    # DFT coefficients refer to index phases; the true plane-wave
    # coefficient of e^{i x.xi_k} carries the corner phase e^{-i x0.xi_k}
    x0 = np.full(grid.dimension, -grid.half_width)
    coeff = (bra_src / bra_img) * fh * np.exp(-1j * (x0 @ sources))

    coords = grid.coordinate_mesh().reshape(grid.dimension, -1)
    out = np.zeros(grid.size, dtype=np.complex128)
    block = max(1, (1 << 22) // max(grid.size, 1))
    for start in range(0, grid.size, block):
        sl = slice(start, min(start + block, grid.size))
        phase = coords.T @ images[:, sl]  # (N^d, m)
        out += np.exp(1j * phase) @ coeff[sl]
    phys = SpectralField(grid, out.reshape(grid.shape))
    return phys.to_frequency()


# ---------------------------------------------------------------------------
# tube partition of the unit sphere


def _circle_centers(N: int) -> np.ndarray:
    """Equally spaced unit vectors with chord separation >= 1/N and
    covering radius < 1/N."""
    count = int(math.ceil(1.5 * math.pi * N))
    ang = 2.0 * np.pi * np.arange(count) / count
    return np.stack([np.cos(ang), np.sin(ang)], axis=1)


def _fibonacci_sphere(count: int) -> np.ndarray:
    k = np.arange(count) + 0.5
    phi = math.pi * (1.0 + math.sqrt(5.0)) * k
    z = 1.0 - 2.0 * k / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


def _sphere_centers(N: int) -> np.ndarray:
    """Greedy 1/N-separated net drawn from a dense deterministic sample.

    Separation >= 1/N holds exactly; the covering radius is at most
    1/N plus the sample mesh, which suffices for the bump overlap."""
    delta = 1.0 / N
    sample = _fibonacci_sphere(max(4000, 400 * N * N))
    kept: list[np.ndarray] = []
    kept_arr = np.empty((0, 3))
    for p in sample:
        if kept_arr.shape[0] == 0:
            kept.append(p)
            kept_arr = np.array(kept)
            continue
        if np.min(np.sum((kept_arr - p) ** 2, axis=1)) >= delta * delta:
            kept.append(p)
            kept_arr = np.array(kept)
    return kept_arr


@dataclass(frozen=True)
class TubePartition:
    """Smooth angular partition of unity subordinate to cones of aperture 2/N.

    ``centers`` are unit vectors with pairwise chord distance >= 1/N; the
    bump around center ``c`` is ``cutoff(N |xi/|xi| - c|)`` with a smooth
    cutoff equal to 1 below 1 and 0 above 2, and the partition functions
    are the bumps normalized by their sum.
    """

    scale: int
    centers: np.ndarray

    @property
    def count(self) -> int:
        return self.centers.shape[0]

    def bump(self, k: int, xi: np.ndarray) -> np.ndarray:
        """eta_k at frequencies ``xi`` of shape (d, ...); zero at xi = 0."""
        xi = np.asarray(xi, dtype=np.float64)
        norm = np.sqrt(np.sum(xi * xi, axis=0))
        safe = np.where(norm == 0.0, 1.0, norm)
        unit = xi / safe
        dist = np.sqrt(np.sum((unit - self.centers[k].reshape((-1,) + (1,) * (xi.ndim - 1))) ** 2, axis=0))
        out = smooth_cutoff(self.scale * dist, inner=1.0, outer=2.0)
        return np.where(norm == 0.0, 0.0, out)

    def bump_sum(self, xi: np.ndarray) -> np.ndarray:
        total = np.zeros(np.asarray(xi).shape[1:], dtype=np.float64)
        for k in range(self.count):
            total += self.bump(k, xi)
        return total

    def chi(self, k: int, xi: np.ndarray) -> np.ndarray:
        """Normalized partition function; sums to 1 over k for xi != 0."""
        total = self.bump_sum(xi)
        safe = np.where(total == 0.0, 1.0, total)
        return self.bump(k, xi) / safe

    def min_separation(self) -> float:
        c = self.centers
        d2 = np.sum((c[:, None, :] - c[None, :, :]) ** 2, axis=-1)
        np.fill_diagonal(d2, np.inf)
        return float(np.sqrt(np.min(d2)))


def tube_partition(N: int, d: int = 2) -> TubePartition:
    """Angular partition at dyadic scale ``N >= 2`` for d in {2, 3}.

    For d = 1 the decomposition has a single element; callers should not
    need a partition there, so it is rejected explicitly.
    """
    if d not in (2, 3):
        raise ValueError("tube partition is defined for d in {2, 3}")
    if N < 2 or not float(N).is_integer() or not math.log2(N).is_integer():
        raise ValueError(f"N must be a dyadic integer >= 2, got {N}")
    N = int(N)
    centers = _circle_centers(N) if d == 2 else _sphere_centers(N)
    part = TubePartition(N, centers)
    if part.min_separation() < 1.0 / N - 1e-12:
        raise RuntimeError("tube centers violate the separation bound")
    # partition must be strictly positive away from the origin
    rng = np.random.default_rng(0)
    probe = rng.standard_normal((d, 512))
    probe /= np.sqrt(np.sum(probe**2, axis=0))
    if float(np.min(part.bump_sum(probe))) <= 0.0:
        raise RuntimeError("tube bumps fail to cover the sphere")
    return part

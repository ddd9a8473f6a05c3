import math

import numpy as np
import pytest

from kglab.spectral import FREQUENCY, SpectralField, make_grid, sample_closed_form
from kglab.symmetry import lorentz_boost_fourier, lorentz_frequency_map, tube_partition


class TestFrequencyMap:
    def test_zero_velocity_identity(self, rng):
        xi = rng.standard_normal((3, 50))
        assert np.allclose(lorentz_frequency_map(xi, np.zeros(3)), xi)

    def test_zero_frequency_maps_to_minus_velocity(self):
        nu = np.array([0.3, -0.1])
        out = lorentz_frequency_map(np.zeros(2), nu)
        assert np.allclose(out, -nu)

    def test_bracket_identity_random(self, rng):
        # <l_nu(xi)> = <nu><xi> - nu.xi, an exact mass-shell relation
        worst = 0.0
        for _ in range(100):
            xi = rng.standard_normal(3)
            nu = rng.standard_normal(3)
            img = lorentz_frequency_map(xi, nu)
            lhs = math.sqrt(1.0 + float(img @ img))
            rhs = math.sqrt(1.0 + float(nu @ nu)) * math.sqrt(1.0 + float(xi @ xi)) - float(nu @ xi)
            worst = max(worst, abs(lhs - rhs))
        assert worst <= 1e-12

    def test_inverse_is_opposite_velocity(self, rng):
        for _ in range(50):
            xi = rng.standard_normal(2)
            nu = rng.standard_normal(2)
            back = lorentz_frequency_map(lorentz_frequency_map(xi, nu), -nu)
            assert np.allclose(back, xi, atol=1e-12)


def _velocity_for_lattice_image(xi0: float, target: float) -> float:
    """Rapidity algebra: the boost moving the on-shell point xi0 to target."""
    a = math.asinh(xi0) - math.asinh(target)
    return math.sinh(a)


class TestBoost:
    def test_zero_velocity_identity(self, rng):
        g = make_grid(1, 64, 10.0)
        f = sample_closed_form(lambda x: np.exp(-x[0] ** 2) * (1 + 0.3j), g)
        out = lorentz_boost_fourier(f, [0.0]).to_physical()
        assert np.max(np.abs(out.values - f.values)) <= 1e-10

    def test_plane_wave_relocation(self):
        g = make_grid(1, 128, 16.0)
        dxi = math.pi / g.half_width
        xi0 = 10 * dxi
        target = 6 * dxi
        nu = _velocity_for_lattice_image(xi0, target)
        f = sample_closed_form(lambda x: np.exp(1j * xi0 * x[0]), g)
        out = lorentz_boost_fourier(f, [nu])
        w = np.abs(out.values) ** 2
        k = int(np.argmax(w))
        assert g.axis_frequencies()[k] == pytest.approx(target)
        assert w[k] / np.sum(w) >= 0.99

    def test_plane_wave_relocation_2d(self):
        g = make_grid(2, 32, 8.0)
        dxi = math.pi / g.half_width
        xi0 = 5 * dxi
        target = 3 * dxi
        nu = _velocity_for_lattice_image(xi0, target)
        f = sample_closed_form(lambda x: np.exp(1j * xi0 * x[0]), g)
        out = lorentz_boost_fourier(f, [nu, 0.0])
        w = np.abs(out.values) ** 2
        idx = np.unravel_index(int(np.argmax(w)), w.shape)
        mesh = g.frequency_mesh()
        assert mesh[0][idx] == pytest.approx(target)
        assert mesh[1][idx] == pytest.approx(0.0)
        assert w[idx] / np.sum(w) >= 0.99

    def test_composition_identity(self):
        g = make_grid(1, 128, 15.0)
        f = sample_closed_form(lambda x: np.exp(-(x[0] ** 2) / 4.0), g)
        nu = 0.2
        once = lorentz_boost_fourier(f, [nu]).to_physical()
        back = lorentz_boost_fourier(once, [-nu]).to_physical()
        err = np.max(np.abs(back.values - f.values)) / np.max(np.abs(f.values))
        assert err <= 1e-6

    def test_rejects_large_grid(self, rng):
        g = make_grid(3, 16, 4.0)
        f = SpectralField(g, rng.standard_normal(g.shape) + 0j)
        with pytest.raises(ValueError, match="d <= 2"):
            lorentz_boost_fourier(f, [0.1, 0.0, 0.0])

    def test_rejects_support_overflow(self):
        g = make_grid(1, 32, 4.0)
        # occupy the topmost modes so any boost pushes them outside
        spec = np.zeros(32, dtype=complex)
        spec[np.argmax(g.axis_frequencies())] = 1.0
        f = SpectralField(g, spec, FREQUENCY)
        with pytest.raises(ValueError, match="exceeds the lattice"):
            lorentz_boost_fourier(f, [-0.9])

    def test_tail_warning(self, rng):
        g = make_grid(1, 32, 4.0)
        f = SpectralField(g, rng.standard_normal(32) + 1j * rng.standard_normal(32))
        with pytest.warns(RuntimeWarning, match="interpolation residual"):
            try:
                lorentz_boost_fourier(f, [0.05])
            except ValueError:
                pass  # full-band data may also overflow; the warning fires first


class TestTubePartition:
    @pytest.mark.parametrize("N", [2, 4, 8])
    def test_partition_of_unity_2d(self, N, rng):
        part = tube_partition(N, d=2)
        xi = rng.standard_normal((2, 1000))
        norms = np.linalg.norm(xi, axis=0)
        xi = xi / np.where(norms == 0, 1, norms) * rng.uniform(0.5 * N, N, 1000)
        total = sum(part.chi(k, xi) for k in range(part.count))
        assert np.max(np.abs(total - 1.0)) <= 1e-12

    def test_chi_in_unit_interval(self, rng):
        part = tube_partition(4, d=2)
        xi = rng.standard_normal((2, 500)) * 3.0
        for k in range(part.count):
            chik = part.chi(k, xi)
            assert np.all(chik >= 0.0) and np.all(chik <= 1.0)

    def test_separation_2d(self):
        for N in (2, 4, 8):
            part = tube_partition(N, d=2)
            assert part.min_separation() >= 1.0 / N

    def test_support_in_cone(self, rng):
        N = 4
        part = tube_partition(N, d=2)
        xi = rng.standard_normal((2, 2000)) * 2.0
        unit = xi / np.linalg.norm(xi, axis=0)
        for k in range(0, part.count, 5):
            dist = np.linalg.norm(unit - part.centers[k][:, None], axis=0)
            bump = part.bump(k, xi)
            assert np.all(bump[dist > 2.0 / N] == 0.0)

    def test_covering_n2_circle(self):
        # every direction lies within chord 1/2 of a center at N = 2
        part = tube_partition(2, d=2)
        ang = np.linspace(0, 2 * math.pi, 3600, endpoint=False)
        pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        d2 = np.min(
            np.sum((pts[:, None, :] - part.centers[None, :, :]) ** 2, axis=-1), axis=1
        )
        assert np.max(np.sqrt(d2)) < 0.5

    def test_3d_partition(self, rng):
        part = tube_partition(2, d=3)
        assert part.min_separation() >= 0.5
        xi = rng.standard_normal((3, 400))
        total = sum(part.chi(k, xi) for k in range(part.count))
        assert np.max(np.abs(total - 1.0)) <= 1e-12

    def test_origin_maps_to_zero(self):
        part = tube_partition(2, d=2)
        assert part.bump(0, np.zeros((2, 1)))[0] == 0.0

    def test_rejects_bad_scale_and_dim(self):
        with pytest.raises(ValueError):
            tube_partition(3, d=2)
        with pytest.raises(ValueError):
            tube_partition(2, d=1)
        with pytest.raises(ValueError):
            tube_partition(1, d=2)

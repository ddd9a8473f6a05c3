import math

import numpy as np
import pytest

from kglab.spectral import (
    FREQUENCY,
    PHYSICAL,
    GridSpec,
    MultiplierSymbol,
    SpectralField,
    apply_multiplier,
    boundary_mass_fraction,
    bracket_symbol,
    dealias_mask,
    dilate_closed_form,
    dispersion_gap,
    field_from_bytes,
    field_to_bytes,
    field_to_csv,
    free_propagate,
    littlewood_paley,
    lowpass_symbol,
    make_grid,
    parseval_residual,
    sample_closed_form,
    smooth_cutoff,
    translate,
    zero_field,
)


def random_field(grid, rng):
    vals = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return SpectralField(grid, vals)


class TestGrid:
    def test_1d_lattice(self):
        g = make_grid(1, 8, math.pi)
        assert g.spacing == pytest.approx(2 * math.pi / 8)
        freqs = np.sort(g.axis_frequencies())
        assert np.allclose(freqs, np.arange(-4, 4))

    def test_2d_count_and_spacing(self):
        g = make_grid(2, 16, 8.0)
        assert g.size == 256
        assert g.spacing == pytest.approx(1.0)

    def test_3d_count(self):
        g = make_grid(3, 64, 16.0)
        assert g.size == 262144

    @pytest.mark.parametrize(
        "d,N,L",
        [(1, 12, 1.0), (1, 7, 1.0), (4, 8, 1.0), (0, 8, 1.0), (1, 8, -1.0), (1, 8, 0.0), (1, 4096, 1.0)],
    )
    def test_rejects(self, d, N, L):
        with pytest.raises(ValueError):
            make_grid(d, N, L)

    def test_field_shape_mismatch(self):
        g = make_grid(1, 8, 1.0)
        with pytest.raises(ValueError):
            SpectralField(g, np.zeros(4, dtype=complex))

    def test_values_frozen(self, rng):
        f = random_field(make_grid(1, 16, 1.0), rng)
        with pytest.raises(ValueError):
            f.values[0] = 1.0


class TestTransforms:
    @pytest.mark.parametrize("d,N", [(1, 64), (2, 32), (3, 16)])
    def test_roundtrip_and_plancherel(self, d, N, rng):
        g = make_grid(d, N, 5.0)
        for _ in range(10):
            f = random_field(g, rng)
            back = f.to_frequency().to_physical()
            assert np.max(np.abs(back.values - f.values)) <= 1e-12 * np.max(np.abs(f.values))
            assert parseval_residual(f) <= 1e-12

    def test_plancherel_hundred_1d(self, rng):
        g = make_grid(1, 128, 10.0)
        worst = max(parseval_residual(random_field(g, rng)) for _ in range(100))
        assert worst <= 1e-12


class TestMultipliers:
    def test_identity_symbol(self, rng):
        g = make_grid(1, 64, 5.0)
        f = random_field(g, rng)
        out = apply_multiplier(f, bracket_symbol(0.0), as_physical=True)
        assert np.allclose(out.values, f.values, atol=1e-13)

    def test_unitary_phase_preserves_norm(self, rng):
        g = make_grid(2, 32, 5.0)
        f = random_field(g, rng)
        sym = MultiplierSymbol(
            lambda xi: np.exp(-1.3j * np.sqrt(1.0 + np.sum(xi * xi, axis=0))), "phase"
        )
        out = apply_multiplier(f, sym)
        assert abs(out.l2_norm() - f.l2_norm()) <= 1e-12 * f.l2_norm()

    def test_bracket_at_zero_mode(self):
        g = make_grid(1, 16, 2.0)
        f = SpectralField(g, np.full(16, 2.0 + 0j))  # pure mean
        out = apply_multiplier(f, bracket_symbol(1.0), as_physical=True)
        assert np.allclose(out.values, f.values, atol=1e-13)

    def test_nan_symbol_rejected(self, rng):
        g = make_grid(1, 16, 2.0)
        f = random_field(g, rng)
        bad = MultiplierSymbol(lambda xi: 1.0 / np.sum(xi * xi, axis=0), "singular")
        with pytest.raises(ValueError, match="not finite at xi"):
            apply_multiplier(f, bad)

    def test_nonfinite_field_rejected(self):
        g = make_grid(1, 16, 2.0)
        vals = np.zeros(16, dtype=complex)
        vals[3] = np.nan
        with pytest.raises(ValueError, match="NaN"):
            apply_multiplier(SpectralField(g, vals), bracket_symbol())


class TestCutoffs:
    def test_smoothstep_edges(self):
        r = np.array([0.0, 0.5, 1.0, 1.005, 99 / 98, 1.2])
        c = smooth_cutoff(r)
        assert np.all(c[:3] == 1.0)
        assert 0.0 < c[3] < 1.0
        assert c[4] == 0.0 and c[5] == 0.0

    def test_projector_identity_inside(self, rng):
        g = make_grid(1, 128, 10.0)
        spec = np.zeros(128, dtype=complex)
        xin = g.frequency_norm()
        spec[xin <= 3.5] = rng.standard_normal(int(np.sum(xin <= 3.5)))
        f = SpectralField(g, spec, FREQUENCY)
        out = littlewood_paley(f, 4, "P_<=N")
        assert np.allclose(out.values, f.values, atol=1e-14)

    def test_dyadic_sum_telescopes(self, rng):
        g = make_grid(1, 256, 10.0)
        f = random_field(g, rng)
        band = littlewood_paley(f, 16, "P_<=N").to_physical()
        total = zero_field(g).values.copy()
        for N in (1, 2, 4, 8, 16, 32, 64):
            total = total + littlewood_paley(band, N, "P_N").to_physical().values
        assert np.max(np.abs(total - band.values)) <= 1e-10 * np.max(np.abs(band.values))

    def test_disjoint_annuli(self, rng):
        g = make_grid(1, 128, 10.0)
        spec = np.zeros(128, dtype=complex)
        xin = g.frequency_norm()
        sel = (xin >= 2.0) & (xin <= 3.0)
        spec[sel] = 1.0
        f = SpectralField(g, spec, FREQUENCY)
        assert littlewood_paley(littlewood_paley(f, 4, "P_N"), 1, "P_N").l2_norm() <= 1e-14

    def test_idempotent_low_pass(self, rng):
        g = make_grid(1, 64, 5.0)
        f = random_field(g, rng)
        once = littlewood_paley(f, 8, "P_<=N")
        twice = littlewood_paley(once, 8, "P_<=N")
        assert np.max(np.abs(once.values - twice.values)) <= 1e-15

    def test_non_dyadic_rejected(self, rng):
        f = random_field(make_grid(1, 16, 2.0), rng)
        for bad in (3, 0.75, 0):
            with pytest.raises(ValueError):
                littlewood_paley(f, bad, "P_N")

    def test_lowpass_scale_validation(self):
        with pytest.raises(ValueError):
            lowpass_symbol(0.0)

    def test_dealias_mask_keeps_two_thirds(self):
        g = make_grid(1, 64, 5.0)
        mask = dealias_mask(g)
        xin = np.abs(g.axis_frequencies())
        assert np.all(mask == (xin <= (2.0 / 3.0) * g.nyquist))


class TestDilation:
    def test_lambda_one_is_plain_sampling(self):
        g = make_grid(1, 64, 10.0)
        fn = lambda x: np.exp(-x[0] ** 2) * (1 + 2j)
        assert np.allclose(dilate_closed_form(fn, 1.0, g).values, sample_closed_form(fn, g).values)

    def test_mass_preserved(self):
        g = make_grid(1, 512, 40.0)
        fn = lambda x: np.exp(-x[0] ** 2)
        m1 = dilate_closed_form(fn, 1.0, g).l2_norm()
        m4 = dilate_closed_form(fn, 4.0, g).l2_norm()
        assert abs(m4 - m1) <= 1e-8 * m1

    def test_group_law(self):
        g = make_grid(1, 256, 40.0)
        fn = lambda x: np.exp(-x[0] ** 2)
        twice = dilate_closed_form(lambda x: np.exp(-(2.0 * 2.0) * 0 - (x[0] / 2.0) ** 2) / 2.0**0.5, 2.0, g)
        once = dilate_closed_form(fn, 4.0, g)
        assert np.max(np.abs(twice.values - once.values)) <= 1e-10

    def test_box_overflow_warns(self):
        g = make_grid(1, 64, 5.0)
        with pytest.warns(RuntimeWarning, match="boundary shell"):
            dilate_closed_form(lambda x: np.exp(-x[0] ** 2), 50.0, g)

    def test_rejects_nonpositive(self):
        g = make_grid(1, 64, 5.0)
        with pytest.raises(ValueError):
            dilate_closed_form(lambda x: x[0], -1.0, g)


class TestPropagators:
    @pytest.mark.parametrize("kind,lam", [("kg", None), ("scaled_kg", 8.0), ("schrodinger", None)])
    def test_unitarity_hundred(self, kind, lam, rng):
        g = make_grid(1, 64, 5.0)
        worst = 0.0
        for _ in range(100):
            f = random_field(g, rng)
            out = free_propagate(f, 0.7, kind, lam)
            worst = max(worst, abs(out.l2_norm() - f.l2_norm()) / f.l2_norm())
        assert worst <= 1e-12

    def test_zero_time_identity(self, rng):
        g = make_grid(2, 16, 3.0)
        f = random_field(g, rng)
        assert np.allclose(free_propagate(f, 0.0, "kg").values, f.values)

    def test_group_law(self, rng):
        g = make_grid(1, 64, 5.0)
        f = random_field(g, rng)
        a = free_propagate(free_propagate(f, 0.3, "kg"), 0.9, "kg")
        b = free_propagate(f, 1.2, "kg")
        assert np.max(np.abs(a.values - b.values)) <= 1e-10 * np.max(np.abs(b.values))

    def test_time_reversal(self, rng):
        g = make_grid(1, 64, 5.0)
        f = random_field(g, rng)
        back = free_propagate(free_propagate(f, 2.1, "schrodinger"), -2.1, "schrodinger")
        assert np.max(np.abs(back.values - f.values)) <= 1e-10 * np.max(np.abs(f.values))

    def test_zero_mode_phase(self):
        g = make_grid(1, 16, 2.0)
        f = SpectralField(g, np.ones(16, dtype=complex))
        out = free_propagate(f, 1.3, "kg")
        assert np.allclose(out.values, np.exp(-1.3j) * f.values, atol=1e-14)

    def test_scaled_flow_approaches_schrodinger(self):
        g = make_grid(1, 128, 10.0)
        spec = np.zeros(128, dtype=complex)
        xin = g.frequency_norm()
        spec[xin <= 2.0] = 1.0
        f = SpectralField(g, spec, FREQUENCY)
        errs = []
        for lam in (4.0, 8.0, 16.0, 32.0):
            a = free_propagate(f, 0.8, "scaled_kg", lam)
            b = free_propagate(f, 0.8, "schrodinger")
            errs.append(
                math.sqrt(g.frequency_weight * float(np.sum(np.abs(a.values - b.values) ** 2)))
            )
        assert all(y < x for x, y in zip(errs, errs[1:]))

    def test_bad_kind(self, rng):
        f = random_field(make_grid(1, 16, 2.0), rng)
        with pytest.raises(ValueError):
            free_propagate(f, 1.0, "heat")
        with pytest.raises(ValueError):
            free_propagate(f, 1.0, "scaled_kg")  # missing lam


class TestDispersionGap:
    def brute_force_quartic_constant(self):
        # max over s in [0, 1] of |sqrt(1+s) - 1 - s/2| / s^2 equals 1/8 at 0+
        s = np.linspace(1e-6, 1.0, 200001)
        ratio = np.abs(np.sqrt(1.0 + s) - 1.0 - 0.5 * s) / (s * s)
        return float(np.max(ratio))

    def test_scalar_oracle(self):
        assert self.brute_force_quartic_constant() <= 1.0 / 8.0 + 1e-9

    def test_zero_frequency_contributes_zero(self):
        g = make_grid(1, 16, 8.0)
        assert dispersion_gap(5.0, 1e-9, g) == 0.0

    def test_quartic_bound_sweep(self):
        g = make_grid(1, 512, 16.0)
        for lam in (4.0, 8.0, 16.0, 32.0):
            for K in (1.0, 2.0, 4.0):
                if K > lam:
                    continue
                assert dispersion_gap(lam, K, g) <= K**4 / (8.0 * lam * lam)

    def test_quarter_ratio(self):
        g = make_grid(1, 512, 16.0)
        for lam in (4.0, 8.0, 16.0):
            for K in (1.0, 2.0, 4.0):
                if K > lam / 2.0:
                    continue
                ratio = dispersion_gap(2.0 * lam, K, g) / dispersion_gap(lam, K, g)
                assert 0.2 <= ratio <= 0.3


class TestTranslation:
    def test_lattice_shift_is_roll(self, rng):
        g = make_grid(1, 64, 5.0)
        f = random_field(g, rng)
        shifted = translate(f, [3 * g.spacing])
        assert np.max(np.abs(shifted.values - np.roll(f.values, 3))) <= 1e-10

    def test_dimension_mismatch(self, rng):
        f = random_field(make_grid(2, 16, 2.0), rng)
        with pytest.raises(ValueError):
            translate(f, [1.0])


class TestSerialization:
    def test_binary_roundtrip(self, rng):
        for d, N in ((1, 32), (2, 16)):
            g = make_grid(d, N, 3.0)
            f = random_field(g, rng)
            back = field_from_bytes(field_to_bytes(f))
            assert back.grid == f.grid
            assert back.representation == f.representation
            assert np.array_equal(back.values, f.values)

    def test_bad_magic(self):
        with pytest.raises(ValueError):
            field_from_bytes(b"nope" + b"\0" * 64)

    def test_csv_small_grid(self, tmp_path, rng):
        g = make_grid(1, 8, 1.0)
        f = random_field(g, rng)
        p = tmp_path / "f.csv"
        field_to_csv(f, p)
        lines = p.read_text().strip().splitlines()
        assert lines[0] == "i0,re,im"
        assert len(lines) == 9

    def test_csv_rejects_large(self, rng):
        g = make_grid(3, 64, 1.0)
        f = zero_field(g)
        with pytest.raises(ValueError):
            field_to_csv(f, "/tmp/never.csv")


def test_boundary_mass_fraction_localized(rng):
    g = make_grid(1, 128, 20.0)
    f = sample_closed_form(lambda x: np.exp(-x[0] ** 2), g)
    assert boundary_mass_fraction(f) <= 1e-12
    flat = SpectralField(g, np.ones(128, dtype=complex))
    # the shell holds the seam node and its two neighbours at distance h
    assert boundary_mass_fraction(flat) == pytest.approx(3 / 128, rel=1e-12)

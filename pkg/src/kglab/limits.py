"""Large-scale profile harness: wave flow versus rescaled Schrodinger flow.

A dilated low-frequency datum ``D_lam P_{<= lam^theta} phi`` evolves under
the first-order wave equation approximately like
``e^{-it} D_lam (P_{<= lam^{2 theta}} w)(t / lam^2)`` where ``w`` solves the
limiting Schrodinger equation with the resonance-constant coefficient.
This module measures the gap, assembles the five-term error ledger with
its Duhamel integral, fits decay rates in ``lam``, and runs the focusing
dichotomy scan.

Frame bookkeeping: the wave solve lives on the box ``[-lam L0, lam L0)``
with the same point count as the Schrodinger box ``[-L0, L0)``.  Dilation
by ``lam`` between the two grids is then an exact reinterpretation of the
sampled values (scaled by ``lam^{-d/2}``), and a projector at scale ``s``
in the datum frame is the projector at scale ``s / lam`` on the wave grid.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft as _sfft

from .evolution import (
    LAWSON_NLKG,
    STRANG_NLS,
    StepperConfig,
    TrajectoryRecord,
    _LawsonStepper,
    _StrangStepper,
    concavity_diagnostic,
    evolve,
)
from .functionals import energy, k0
from .ground_state import RadialProfile, embed_radial, ground_state_cached
from .nonlinearity import NonlinearityParams, c_d_gamma
from .spectral import (
    FREQUENCY,
    PHYSICAL,
    GridSpec,
    SpectralField,
    bracket_lattice,
    dilate_closed_form,
    lowpass_symbol,
    make_grid,
    sample_closed_form,
    smooth_cutoff,
)

Datum = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# frame maps and profile construction


def wave_grid_for(nls_grid: GridSpec, lam: float) -> GridSpec:
    """Wave-frame grid: the datum box dilated by ``lam``, same point count."""
    return GridSpec(nls_grid.dimension, nls_grid.points_per_axis, lam * nls_grid.half_width)


def map_to_wave_box(f: SpectralField, lam: float, kg_grid: GridSpec | None = None) -> SpectralField:
    """Exact dilation of a sampled field onto the lam-times-larger box.

    ``(D_lam f)(lam x_j) = lam^{-d/2} f(x_j)``: the values transfer node by
    node with only an amplitude factor.
    """
    grid = f.grid
    target = wave_grid_for(grid, lam) if kg_grid is None else kg_grid
    if target.points_per_axis != grid.points_per_axis or abs(
        target.half_width - lam * grid.half_width
    ) > 1e-12 * grid.half_width:
        raise ValueError("wave grid must be the datum grid dilated by lam")
    amp = lam ** (-grid.dimension / 2.0)
    phys = f.to_physical()
    return SpectralField(target, amp * phys.values, PHYSICAL)


def build_profile(datum: Datum, lam: float, theta: float, grid: GridSpec, strict: bool = False) -> SpectralField:
    """Initial datum of the wave solve: dilation of the closed form, then
    the low pass at scale ``lam^theta`` in the datum's own frame (which is
    scale ``lam^{theta-1}`` in the frequencies of the dilated grid)."""
    if not 0 < theta <= 1.0 / 16.0:
        raise ValueError("theta must lie in (0, 1/16]")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sampled = dilate_closed_form(datum, lam, grid)
    if caught and strict:
        raise ValueError(str(caught[0].message))
    for w in caught:
        warnings.warn(w.message, RuntimeWarning, stacklevel=2)
    sym = lowpass_symbol(lam ** (theta - 1.0))
    fh = sampled.to_frequency()
    return fh.with_values(sym.evaluate(grid) * fh.values, FREQUENCY).to_physical()


def _tilde_values(w_phys: np.ndarray, proj_symbol: np.ndarray, t: float, lam: float, d: int) -> np.ndarray:
    """Physical values of the approximate solution at wave time ``t`` from
    the Schrodinger field at ``t / lam^2`` (projected, dilated, phased)."""
    size = w_phys.size
    what = _sfft.fftn(w_phys, workers=-1)
    pw = _sfft.ifftn(proj_symbol * what, workers=-1)
    phase = complex(math.cos(t), -math.sin(t))
    return (lam ** (-d / 2.0) * phase) * pw


# ---------------------------------------------------------------------------
# approximate-solution evaluator from a stored trajectory


@dataclass
class ApproximateSolution:
    """Time evaluator glued from the rescaled Schrodinger solution and the
    free wave flow beyond ``|t| = T lam^2``.

    Inside the middle window the Schrodinger snapshots are interpolated
    linearly in rescaled time; ``interp_error_bound`` records the L2 bound
    ``max ||second difference|| / 8`` of that interpolation.
    """

    lam: float
    theta: float
    t_mid: float
    kg_grid: GridSpec
    _times: np.ndarray
    _fields: list
    _proj: np.ndarray
    interp_error_bound: float
    window_factor: float = 2.0

    @property
    def seam_time(self) -> float:
        return self.t_mid * self.lam * self.lam

    def _middle(self, t: float) -> SpectralField:
        tau = t / (self.lam * self.lam)
        ts = self._times
        j = int(np.searchsorted(ts, tau, side="right")) - 1
        j = max(0, min(j, len(ts) - 2))
        t0, t1 = ts[j], ts[j + 1]
        lam_w = 0.0 if t1 == t0 else (tau - t0) / (t1 - t0)
        w = (1.0 - lam_w) * self._fields[j].values + lam_w * self._fields[j + 1].values
        vals = _tilde_values(w, self._proj, t, self.lam, self.kg_grid.dimension)
        return SpectralField(self.kg_grid, vals, PHYSICAL)

    def __call__(self, t: float) -> SpectralField:
        s = self.seam_time
        if abs(t) > self.window_factor * s:
            raise ValueError(f"time {t} outside the harness window (|t| <= {self.window_factor * s})")
        if abs(t) <= s:
            return self._middle(t)
        from .spectral import free_propagate

        seam = self._middle(s if t > 0 else -s)
        return free_propagate(seam, t - math.copysign(s, t), "kg")


def approximate_solution(
    w_traj: TrajectoryRecord, lam: float, t_mid: float, theta: float = 1.0 / 16.0
) -> ApproximateSolution:
    """Build the glued evaluator from a Schrodinger trajectory with stored
    fields covering ``[-t_mid, t_mid]``."""
    if w_traj.fields is None:
        raise ValueError("trajectory must store fields")
    times = np.asarray(w_traj.times)
    order = np.argsort(times)
    times = times[order]
    fields = [w_traj.fields[i] for i in order]
    if times[0] > -t_mid + 1e-12 or times[-1] < t_mid - 1e-12:
        raise ValueError("trajectory does not cover [-t_mid, t_mid]")
    nls_grid = fields[0].grid
    kg_grid = wave_grid_for(nls_grid, lam)
    proj = lowpass_symbol(lam ** (2.0 * theta)).evaluate(nls_grid)
    second = 0.0
    vol = math.sqrt(nls_grid.cell_volume)
    for j in range(1, len(fields) - 1):
        diff = fields[j + 1].values - 2.0 * fields[j].values + fields[j - 1].values
        second = max(second, vol * float(np.linalg.norm(diff)))
    return ApproximateSolution(
        lam, theta, t_mid, kg_grid, times, [f.to_physical() for f in fields], proj, second / 8.0
    )


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class LimitRunConfig:
    """Parameters of one lambda sweep of the limit harness."""

    dimension: int
    points: int
    datum_half_width: float
    datum: Datum
    datum_label: str
    theta: float = 1.0 / 16.0
    lambdas: tuple = (4.0, 8.0, 16.0)
    t_mid: float = 1.0
    mu: int = 1
    dt_wave: float = 0.01
    #: wave-time spacing of the gap samples; must resolve the unit-frequency
    #: carrier oscillation of |Re(v - v_tilde)| for the time quadrature
    snapshot_spacing: float = 0.05
    dealias: bool = True
    strict: bool = False

    def __post_init__(self):
        if not 0 < self.theta <= 1.0 / 16.0:
            raise ValueError("theta must lie in (0, 1/16]")
        lams = tuple(float(l) for l in self.lambdas)
        if any(b <= a for a, b in zip(lams, lams[1:])):
            raise ValueError("lambda list must be strictly increasing")
        object.__setattr__(self, "lambdas", lams)
        if self.mu not in (-1, 0, 1):
            raise ValueError("mu must be -1, 0 or +1")
        if self.t_mid <= 0 or self.dt_wave <= 0:
            raise ValueError("t_mid and dt_wave must be positive")

    def nls_grid(self) -> GridSpec:
        return make_grid(self.dimension, self.points, self.datum_half_width)

    def validate_mass_condition(self) -> float:
        """For the focusing sign the datum mass must sit below
        ``(2 C_d)^{-d/4} ||Q||``; returns the margin (threshold - mass)."""
        g = self.nls_grid()
        phi = sample_closed_form(self.datum, g)
        mass = phi.l2_norm()
        if self.mu == -1:
            d = self.dimension
            q = ground_state_cached(d)
            bound = (2.0 * c_d_gamma(d)) ** (-d / 4.0) * math.sqrt(q.mass_squared())
            if mass >= bound:
                raise ValueError(
                    f"focusing datum mass {mass:.6f} violates the bound {bound:.6f}"
                )
            return bound - mass
        nyq = g.nyquist
        for lam in self.lambdas:
            if lam**self.theta >= nyq:
                raise ValueError("projector cutoff exceeds the grid Nyquist")
        return math.inf


# ---------------------------------------------------------------------------
# the gap measurement (streaming co-march)


@dataclass
class LimitGapReport:
    lam: float
    eps_sup_l2: float
    eps_spacetime: float
    quadrature_shift: float  # relative change under snapshot halving
    flagged: bool
    flag_reason: str = ""


def _co_march_gap(config: LimitRunConfig, lam: float) -> LimitGapReport:
    """March the wave and Schrodinger flows in lockstep over
    ``[-T lam^2, T lam^2]`` and accumulate the gap norms streaming."""
    d = config.dimension
    g_nls = config.nls_grid()
    g_kg = wave_grid_for(g_nls, lam)
    phi = sample_closed_form(config.datum, g_nls)
    low = lowpass_symbol(lam**config.theta).evaluate(g_nls)
    w0_hat = phi.to_frequency().values * low
    w0 = SpectralField(g_nls, w0_hat, FREQUENCY).to_physical()
    v0 = map_to_wave_box(w0, lam, g_kg)

    proj = lowpass_symbol(lam ** (2.0 * config.theta)).evaluate(g_nls)
    p_st = 2.0 * (d + 2) / d
    dt = config.dt_wave
    n_steps = int(round(config.t_mid * lam * lam / dt))
    if n_steps < 2:
        raise ValueError("dt_wave too coarse for the window")
    stride = max(1, int(round(config.snapshot_spacing / dt)))
    while n_steps % stride:
        stride -= 1

    vol_kg = g_kg.cell_volume
    br = bracket_lattice(g_kg)

    sup_l2 = 0.0
    spacetime: list[tuple[float, float]] = []
    flag = ""

    for sign in (1.0, -1.0):
        wave = _LawsonStepper(g_kg, sign * dt, config.mu, config.dealias)
        schro = _StrangStepper(g_nls, sign * dt / (lam * lam), config.mu)
        vhat = v0.to_frequency().values.copy()
        w = w0.values.copy()
        h1_0 = math.sqrt(g_kg.frequency_weight * float(np.sum((br * np.abs(vhat)) ** 2)))

        def sample(step_index: int):
            nonlocal sup_l2
            t = sign * step_index * dt
            v_phys = _sfft.ifftn(vhat, workers=-1) * g_kg.size
            tilde = _tilde_values(w, proj, t, lam, d)
            diff = v_phys.real - tilde.real
            l2 = math.sqrt(vol_kg * float(np.sum(diff * diff)))
            sup_l2 = max(sup_l2, l2)
            spacetime.append((t, vol_kg * float(np.sum(np.abs(diff) ** p_st))))

        if sign > 0:
            sample(0)
        for n in range(1, n_steps + 1):
            vhat = wave.step(vhat)
            w = schro.step_physical(w)
            if n % stride == 0:
                if not (np.all(np.isfinite(vhat)) and np.all(np.isfinite(w))):
                    flag = f"NaN at t={sign * n * dt:g}"
                    break
                h1 = math.sqrt(g_kg.frequency_weight * float(np.sum((br * np.abs(vhat)) ** 2)))
                if h1 > 10.0 * h1_0:
                    flag = f"H1 blow-up at t={sign * n * dt:g}"
                    break
                sample(n)
        if flag:
            break

    if flag:
        return LimitGapReport(lam, math.nan, math.nan, math.nan, True, flag)

    spacetime.sort(key=lambda p: p[0])
    ts = np.array([p[0] for p in spacetime])
    vals = np.array([p[1] for p in spacetime])
    total = float(np.trapezoid(vals, ts))
    coarse = float(np.trapezoid(vals[::2], ts[::2]))
    eps_st = total ** (1.0 / p_st)
    shift = abs(total - coarse) / max(total, 1e-300)
    if config.strict and shift > 1e-3:
        raise RuntimeError(f"space-time quadrature not converged (shift {shift:.2e})")
    return LimitGapReport(lam, sup_l2, eps_st, shift, False)


def nls_limit_error(config: LimitRunConfig) -> list[LimitGapReport]:
    """Per-lambda gap between the wave solution and its rescaled
    Schrodinger approximation, in sup-t L2 and space-time norms."""
    config.validate_mass_condition()
    return [_co_march_gap(config, lam) for lam in config.lambdas]


# ---------------------------------------------------------------------------
# the error ledger


@dataclass
class ErrorLedger:
    """Per-lambda norms of the five error terms and fitted log-log slopes.

    ``e1`` is measured in L^1_t H^{1/2}_x, the ``e2*`` entries carry one
    derivative and are measured in L^{2(d+2)/(d+4)}_{t,x}, and ``e3`` is
    the Duhamel integral in L^inf_t H^{1/2}_x + L^{2(d+2)/d}_{t,x}; all over
    the middle window ``[-T lam^2, T lam^2]``.
    """

    lambdas: np.ndarray
    e1: np.ndarray
    e21: np.ndarray
    e22: np.ndarray
    e23: np.ndarray
    e3_duhamel: np.ndarray
    slopes: dict

    def all_finite_nonnegative(self) -> bool:
        arrs = [self.e1, self.e21, self.e22, self.e23, self.e3_duhamel]
        return all(bool(np.all(np.isfinite(a)) and np.all(a >= 0)) for a in arrs)


def error_ledger(
    w_traj: TrajectoryRecord,
    lam: float,
    theta: float,
    t_mid: float,
    mu: int,
    slow_samples: int = 160,
) -> dict:
    """Norms of the error terms of one lambda from a stored Schrodinger
    trajectory (snapshots must be dense enough that ``lam^2 * spacing``
    resolves the unit-frequency phase: about 0.2 or finer).

    Returns a dict with keys e1, e21, e22, e23, e3_duhamel.
    """
    if w_traj.fields is None:
        raise ValueError("ledger needs stored fields")
    times = np.asarray(w_traj.times)
    order = np.argsort(times)
    times = times[order]
    fields = [w_traj.fields[order[i]].to_physical() for i in range(len(order))]
    g_nls = fields[0].grid
    d = g_nls.dimension
    g_kg = wave_grid_for(g_nls, lam)
    lam2 = lam * lam
    ds = lam2 * float(np.median(np.diff(times)))
    if ds > 0.25:
        warnings.warn(
            f"snapshot spacing {ds:.3f} in wave time is coarse for the Duhamel quadrature",
            RuntimeWarning,
            stacklevel=2,
        )

    params = NonlinearityParams(d, mu if mu in (-1, 1) else 1)
    power = 4.0 / d
    # the resonant mean of f(Re(e^{-it} w)) relative to the e^{-it} carrier
    # is C_d f(w) (the angular-average identity with the 2^{-1-4/d}
    # homogeneity factor absorbed); subtracting anything else leaves a
    # resonant residue whose Duhamel integral grows with the window
    cd = c_d_gamma(d)
    amp = lam ** (-d / 2.0)
    mu_f = float(mu)

    xi_nls = g_nls.frequency_norm()
    proj_2t = smooth_cutoff(xi_nls / lam ** (2.0 * theta))
    br_kg = bracket_lattice(g_kg)
    half_br = np.sqrt(br_kg)
    w_freq = g_kg.frequency_weight
    vol_kg = g_kg.cell_volume

    # multiplier of e1 in the datum frame: <xi/lam> - 1 - |xi|^2 / (2 lam^2)
    gap_sym = lam2 * (np.sqrt(1.0 + (xi_nls / lam) ** 2) - 1.0) - 0.5 * xi_nls**2
    gap_sym /= lam2

    q_e2 = 2.0 * (d + 2) / (d + 4)
    p_st = 2.0 * (d + 2) / d

    n = len(times)
    slow_idx = np.unique(np.linspace(0, n - 1, min(slow_samples, n)).astype(int))

    e1_vals, e1_ts = [], []
    e2_rows = {"e21": [], "e22": [], "e23": []}
    for j in slow_idx:
        w = fields[j].values
        what = _sfft.fftn(w, workers=-1)
        t = lam2 * times[j]
        # e1: projected dispersion-gap term, H^{1/2} norm in the wave frame;
        # the mapped field's spectrum carries amp = lam^{-d/2}, which the
        # larger box's frequency weight offsets
        a_hat = proj_2t * gap_sym * what / g_nls.size
        e1_norm = amp * math.sqrt(w_freq * float(np.sum((half_br * np.abs(a_hat)) ** 2)))
        e1_vals.append(e1_norm)
        e1_ts.append(t)

        fw = np.abs(w) ** power * w
        fw_hat = _sfft.fftn(fw, workers=-1)
        low = proj_2t  # scale lam^{2 theta} in the datum frame
        pw = _sfft.ifftn(proj_2t * what, workers=-1)
        fpw = np.abs(pw) ** power * pw

        # <grad> e_{2,1} = mu C_d lam^{-d/2-2} (1 - <grad>) P f(w)
        g21_hat = (1.0 - br_kg) * (low * fw_hat) / g_nls.size
        g21 = _sfft.ifftn(g21_hat, workers=-1) * g_nls.size
        v21 = abs(mu_f) * cd * amp / lam2 * np.abs(g21)
        # <grad> e_{2,2} = -mu C_d lam^{-d/2-2} (P - 1) f(w)
        g22 = _sfft.ifftn((low - 1.0) * fw_hat, workers=-1)
        v22 = abs(mu_f) * cd * amp / lam2 * np.abs(g22)
        # <grad> e_{2,3} = -mu C_d lam^{-d/2-2} (f(w) - f(P w))
        v23 = abs(mu_f) * cd * amp / lam2 * np.abs(fw - fpw)
        for key, v in (("e21", v21), ("e22", v22), ("e23", v23)):
            e2_rows[key].append(vol_kg * float(np.sum(v**q_e2)))

    e1_total = float(np.trapezoid(np.asarray(e1_vals), np.asarray(e1_ts)))
    e2_totals = {
        key: float(np.trapezoid(np.asarray(rows), lam2 * times[slow_idx])) ** (1.0 / q_e2)
        for key, rows in e2_rows.items()
    }

    # Duhamel integral of the resonant remainder over every snapshot
    if mu == 0:
        duh = 0.0
    else:
        j0 = int(np.argmin(np.abs(times)))
        inv_br = 1.0 / br_kg
        sup_h12 = 0.0
        st_rows, st_ts = [], []

        def e3_hat(j: int) -> np.ndarray:
            w = fields[j].values
            what = _sfft.fftn(w, workers=-1)
            pw = _sfft.ifftn(proj_2t * what, workers=-1)
            s = lam2 * times[j]
            ph = complex(math.cos(s), -math.sin(s))
            z = ph * pw
            fre = np.abs(z.real) ** power * z.real
            rem = fre - ph * cd * (np.abs(pw) ** power * pw)
            return mu_f * amp / lam2 * inv_br * _sfft.fftn(rem, workers=-1) / g_nls.size

        for direction in (1, -1):
            idx = range(j0, n) if direction == 1 else range(j0, -1, -1)
            idx = list(idx)
            I = np.zeros(g_kg.shape, dtype=np.complex128)
            prev = None
            prev_s = None
            for j in idx:
                s = lam2 * times[j]
                g_now = np.exp(1j * s * br_kg) * e3_hat(j)
                if prev is not None:
                    I = I + 0.5 * (s - prev_s) * (g_now + prev)
                prev, prev_s = g_now, s
                duh_hat = np.exp(-1j * s * br_kg) * I
                sup_h12 = max(
                    sup_h12,
                    math.sqrt(w_freq * float(np.sum((half_br * np.abs(duh_hat)) ** 2))),
                )
                dphys = _sfft.ifftn(duh_hat, workers=-1) * g_kg.size
                st_rows.append((s, vol_kg * float(np.sum(np.abs(dphys) ** p_st))))
        st_rows.sort(key=lambda p: p[0])
        st = float(
            np.trapezoid([p[1] for p in st_rows], [p[0] for p in st_rows])
        ) ** (1.0 / p_st)
        duh = sup_h12 + st

    return {
        "e1": e1_total,
        "e21": e2_totals["e21"],
        "e22": e2_totals["e22"],
        "e23": e2_totals["e23"],
        "e3_duhamel": duh,
    }


def run_error_ledger(config: LimitRunConfig, duhamel_step: float = 0.1) -> ErrorLedger:
    """March the Schrodinger flow per lambda (dense snapshots) and fill
    the ledger; slopes are least-squares fits in log-log coordinates."""
    config.validate_mass_condition()
    g_nls = config.nls_grid()
    rows = {k: [] for k in ("e1", "e21", "e22", "e23", "e3_duhamel")}
    for lam in config.lambdas:
        low = lowpass_symbol(lam**config.theta).evaluate(g_nls)
        phi = sample_closed_form(config.datum, g_nls)
        w0 = SpectralField(g_nls, phi.to_frequency().values * low, FREQUENCY).to_physical()
        dt_tau = duhamel_step / (lam * lam)
        n = int(math.ceil(config.t_mid / dt_tau))
        dt_tau = config.t_mid / n
        cfg = StepperConfig(STRANG_NLS, dt_tau, dealias=False)
        fw = evolve(w0, config.t_mid, cfg, mu=config.mu, snapshot_stride=1, store_fields=True, with_energy=False)
        bw = evolve(w0, -config.t_mid, cfg, mu=config.mu, snapshot_stride=1, store_fields=True, with_energy=False)
        if fw.flagged or bw.flagged:
            raise RuntimeError(f"Schrodinger solve flagged at lam={lam}")
        merged = TrajectoryRecord(
            equation=STRANG_NLS,
            times=np.concatenate([bw.times[::-1][:-1], fw.times]),
            fields=bw.fields[::-1][:-1] + fw.fields,
            l2_sq=np.concatenate([bw.l2_sq[::-1][:-1], fw.l2_sq]),
            re_l2_sq=np.concatenate([bw.re_l2_sq[::-1][:-1], fw.re_l2_sq]),
            h1=np.concatenate([bw.h1[::-1][:-1], fw.h1]),
            boundary_fraction=np.concatenate(
                [bw.boundary_fraction[::-1][:-1], fw.boundary_fraction]
            ),
            energy_reports=None,
            nls_mass=None,
            blowup_time=None,
            nan_time=None,
        )
        out = error_ledger(merged, lam, config.theta, config.t_mid, config.mu)
        for k in rows:
            rows[k].append(out[k])

    lams = np.asarray(config.lambdas)
    slopes = {}
    for k, vals in rows.items():
        arr = np.asarray(vals)
        if np.all(arr > 0):
            slopes[k] = rate_fit(lams, arr)["slope"]
        else:
            slopes[k] = math.nan
    return ErrorLedger(
        lams,
        np.asarray(rows["e1"]),
        np.asarray(rows["e21"]),
        np.asarray(rows["e22"]),
        np.asarray(rows["e23"]),
        np.asarray(rows["e3_duhamel"]),
        slopes,
    )


# ---------------------------------------------------------------------------
# rate fits and propagator convergence


def rate_fit(lambdas: Sequence[float], values: Sequence[float]) -> dict:
    """Least-squares line in (log lambda, log value); returns slope,
    intercept and the rms residual."""
    lams = np.asarray(lambdas, dtype=np.float64)
    vals = np.asarray(values, dtype=np.float64)
    if lams.size < 3:
        raise ValueError("rate fit needs at least three points")
    if np.any(vals <= 0) or np.any(lams <= 0):
        raise ValueError("rate fit needs strictly positive data")
    x, y = np.log(lams), np.log(vals)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return {
        "slope": float(coef[0]),
        "intercept": float(coef[1]),
        "residual": float(np.sqrt(np.mean(resid**2))),
    }


def propagator_convergence(
    datum: Datum,
    lambdas: Sequence[float],
    theta: float,
    t_list: Sequence[float],
    grid: GridSpec,
) -> np.ndarray:
    """Per-lambda sup over t of the L2 gap between the rescaled wave flow
    (after the low pass at scale lam^theta) and the Schrodinger flow."""
    g = sample_closed_form(datum, grid)
    ghat = g.to_frequency().values
    xin = grid.frequency_norm()
    out = []
    for lam in lambdas:
        low = smooth_cutoff(xin / lam**theta)
        worst = 0.0
        for t in t_list:
            if abs(t) > 1.0:
                raise ValueError("t list must stay within [-1, 1]")
            sym_kg = np.exp(-1j * t * lam * lam * (np.sqrt(1.0 + (xin / lam) ** 2) - 1.0))
            sym_s = np.exp(-1j * t * 0.5 * xin**2)
            diff = (sym_kg * low - sym_s) * ghat
            worst = max(
                worst, math.sqrt(grid.frequency_weight * float(np.sum(np.abs(diff) ** 2)))
            )
        out.append(worst)
    return np.asarray(out)


# ---------------------------------------------------------------------------
# focusing dichotomy scan


@dataclass
class DichotomyRow:
    amplitude: float
    energy: float
    energy_ratio: float
    k0_value: float
    in_scope: bool
    predicted_blowup: Optional[bool]
    observed_blowup: Optional[bool]
    concavity_ok: Optional[bool]
    agree: Optional[bool]


def dichotomy_scan(
    amplitudes: Sequence[float],
    shape: str,
    T: float,
    grid: GridSpec,
    dt: float = 2e-3,
    Q: RadialProfile | None = None,
    scope_guard: float = 1e-6,
    snapshot_stride: int = 25,
) -> list[DichotomyRow]:
    """Classify focusing data below the threshold energy by the K_0 sign
    and compare with the observed march.

    Data with ``E >= (1 - scope_guard) E(Q,0)`` are reported out of scope
    and not classified.  In-scope runs must agree with the prediction:
    K_0 >= 0 evolves to T without the blow-up flag; K_0 < 0 raises it, and
    the mass-curve concavity diagnostic holds up to the halt.
    """
    d = grid.dimension
    params = NonlinearityParams(d, mu=-1)
    if Q is None:
        Q = ground_state_cached(d)
    e_q = 0.5 * Q.mass_squared()
    if shape == "q":
        base = embed_radial(Q, grid)
    elif shape == "gaussian":
        base = sample_closed_form(lambda x: np.exp(-np.sum(x * x, axis=0) / 2.0), grid)
    else:
        raise ValueError("shape must be 'q' or 'gaussian'")

    rows: list[DichotomyRow] = []
    cfg = StepperConfig(LAWSON_NLKG, dt)
    for a in amplitudes:
        u0 = base.with_values(float(a) * base.values)
        rep = energy(u0, params)
        k0_val = k0(u0, params)
        in_scope = rep.total < (1.0 - scope_guard) * e_q
        if not in_scope:
            rows.append(
                DichotomyRow(float(a), rep.total, rep.total / e_q, k0_val, False, None, None, None, None)
            )
            continue
        predicted = k0_val < 0
        n_steps = int(round(T / dt))
        stride = snapshot_stride
        while n_steps % stride:
            stride -= 1
        traj = evolve(u0, T, cfg, params, snapshot_stride=stride, with_energy=False)
        observed = traj.blowup_time is not None or traj.nan_time is not None
        if len(traj.times) >= 3:
            _, conc_ok = concavity_diagnostic(traj, d)
        else:
            conc_ok = None
        agree = predicted == observed
        if predicted and agree and conc_ok is not None:
            agree = agree and conc_ok
        rows.append(
            DichotomyRow(
                float(a), rep.total, rep.total / e_q, k0_val, True, predicted, observed, conc_ok, agree
            )
        )
    return rows

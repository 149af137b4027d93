"""Acceptance checks, one per criterion; each prints a single PASS/FAIL line."""

import math
import time

import mpmath as mp
import numpy as np
import pytest

from dielmotion.casimir import (
    QuadratureSpec,
    casimir_pressure_halfspaces,
    net_vacuum_force_isolated,
    perfect_mirror_pressure,
    vacuum_stress_xx,
)
from dielmotion.constants import C
from dielmotion.forces import containment_window, integrate_records, verify_stress_identity
from dielmotion.greens import gap_stack, rt_normal_incidence, slab_stack
from dielmotion.reservoir_dynamics import (
    Grid1D,
    PulseExperimentConfig,
    PulseSource,
    Simulation,
    Slab,
    run_pulse_experiment,
    run_steady_illumination,
)
from dielmotion.susceptibility import discretize_reservoir, eval_chi, kk_real_from_imag, lorentz_model
from dielmotion.wavepacket import (
    FluctuationKernel,
    WavePacketParams,
    absorption_peak,
    f_factor,
    fluctuation_envelope,
    oscillation_period,
    packet_variance,
    spreading_time,
)

# optical reference frequency, 1 um vacuum wavelength
W0 = 2 * math.pi * C / 1e-6


def report(name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def test_kk_round_trip():
    model = lorentz_model(1.0, 1.0, 0.1)
    start = time.perf_counter()
    grid = np.linspace(0.0, 20.0, 2**12)
    om = np.linspace(0.0, 3.0, 601)
    kk = kk_real_from_imag(grid, np.imag(eval_chi(model, grid)), om)
    elapsed = time.perf_counter() - start
    exact = np.real(eval_chi(model, om))
    err = np.max(np.abs(kk - exact)) / np.max(np.abs(exact))
    report("kk_round_trip", err < 1e-3 and elapsed < 1.0, f"max rel error {err:.2e} (< 1e-3), {elapsed:.2f} s (< 1 s)")


def test_energy_conservation():
    model = lorentz_model(W0, W0, 0.1 * W0)
    grid = Grid1D(0, 20e-6, 1600)
    res = discretize_reservoir(model, 512)
    src = PulseSource(W0, 3e-15, 1.0, 4e-6)
    sim = Simulation(grid, [Slab(8e-6, 9e-6, model, res)], src, boundary="pec")
    # let the source finish so the closed system is autonomous
    sim.step(int(src.end_time / grid.dt) + 10)
    u0 = sim.total_energy()
    energies = []
    for _ in range(100):
        sim.step(100)
        energies.append(sim.total_energy())
    drift = np.max(np.abs(np.array(energies) - u0)) / u0
    report("energy_conservation", drift < 1e-3, f"drift {drift:.2e} over 10^4 steps (< 1e-3)")


def test_force_law_impulse_balance():
    model = lorentz_model(W0, W0, 0.3 * W0)
    cfg = PulseExperimentConfig(
        model, 8e-6, 0.5e-6, Grid1D(0, 16e-6, 4096), PulseSource(0.7 * W0, 4e-15, 1.0, 3e-6), reservoir_nodes=256
    )
    start = time.perf_counter()
    res = run_pulse_experiment(cfg)
    elapsed = time.perf_counter() - start
    tot = integrate_records(res.records)
    mismatch = abs(tot["surface"] - tot["mechanical"] - tot["abraham_change"]) / abs(tot["surface"])
    report(
        "force_law_impulse_balance",
        mismatch < 1e-2 and elapsed < 60,
        f"|surface - impulse - abraham| / impulse = {mismatch:.2e} (< 1e-2), {elapsed:.1f} s at N_x=4096 (< 60 s)",
    )


def test_abraham_containment():
    # weakly dispersive lossless slab long enough to hold the whole pulse
    model = lorentz_model(0.5 * W0, 1.2 * W0, 1e-6 * W0)
    cfg = PulseExperimentConfig(
        model,
        8e-6,
        16e-6,
        Grid1D(0, 40e-6, 3200),
        PulseSource(W0, 4e-15, 1.0, 3e-6),
        lossless=True,
        duration=245e-15,
        separation_tol=1.0,
    )
    rec = run_pulse_experiment(cfg).records
    i, j = containment_window(rec)
    mech = np.array([r.mechanical for r in rec])
    abr = np.array([r.abraham_rate for r in rec])
    peak = min(np.abs(mech).max(), np.abs(abr).max())
    worst = np.max(np.abs(mech[i:j] + abr[i:j])) / peak
    span = (rec[j - 1].t - rec[i].t) * 1e15
    report("abraham_containment", worst < 0.02 and j - i > 100, f"max |MR'' + dP_A/dt| / peak = {worst:.2e} (< 0.02) over {span:.0f} fs")


def test_radiation_pressure_steady():
    model = lorentz_model(W0, W0, 0.3 * W0)
    thickness = 0.3e-6
    res = run_steady_illumination(model, 5e-6, thickness, Grid1D(0, 12e-6, 960), W0)
    R, T = rt_normal_incidence(slab_stack(model, thickness), W0)
    expected = (1 + R - T) * res.intensity / C
    ratio = res.force / expected
    report("radiation_pressure_steady", abs(ratio - 1) < 0.02, f"force / (1+R-T)I/c = {ratio:.4f} (R={R:.4f}, T={T:.4f})")


def test_casimir_mirror_limit():
    wp = W0
    model = lorentz_model(wp, 0.0, 1e-6 * wp)
    d = 1000 * C / wp
    start = time.perf_counter()
    res = casimir_pressure_halfspaces(model, model, d, QuadratureSpec())
    elapsed = time.perf_counter() - start
    ratio = res.pressure / perfect_mirror_pressure(d)
    doubling = res.error / abs(res.pressure)
    ok = abs(ratio - 1) < 0.02 and doubling < 2e-3 and elapsed < 10
    report(
        "casimir_mirror_limit",
        ok,
        f"ratio {ratio:.5f} at wp d/c = 1000, doubling change {doubling:.1e} (< 2e-3), {elapsed:.1f} s (< 10 s)",
    )


def test_isolated_body_null():
    model = lorentz_model(W0, W0, 0.1 * W0)
    thickness = 1e-6
    net = net_vacuum_force_isolated(model, thickness)
    pair = casimir_pressure_halfspaces(model, model, thickness).pressure
    rel = abs(net) / abs(pair)
    report("isolated_body_null", rel < 1e-3, f"|net| / |two-body pressure| = {rel:.1e} (< 1e-3)")


def test_gap_stress_uniformity():
    model = lorentz_model(W0, W0, 0.1 * W0)
    gap = 1e-6
    stack = gap_stack(model, model, gap)
    values = np.array([vacuum_stress_xx(stack, x) for x in gap * np.array([0.05, 0.2, 0.5, 0.8, 0.95])])
    variation = (values.max() - values.min()) / abs(values.mean())
    report("gap_stress_uniformity", variation < 1e-3, f"relative variation {variation:.1e} (< 1e-3)")


def test_packet_kinematics():
    mass, alpha = 1e-14, 1e18
    ts = spreading_time(mass, alpha)
    t = np.linspace(0, 5 * ts, 101)
    var = packet_variance(WavePacketParams(mass, alpha), t)
    ref = (1 + (t / ts) ** 2) / (2 * alpha)
    err = np.max(np.abs(var - ref) / ref)
    ok = err < 8 * np.finfo(float).eps and 90 <= ts <= 100
    report("packet_kinematics", ok, f"T_s = {ts:.2f} s (in [90, 100]), variance rel error {err:.1e}")


def test_f_factor_properties():
    w1 = np.array([0.3, 1.0, 2.5])
    w2 = np.array([0.7, 1.5, 0.5])
    zero = np.max(np.abs(f_factor(0.0, w1, w2, 0.8)))

    t = np.linspace(0, 20, 401)[:, None]
    theta = (w1 + w2)[None, :]
    base = np.exp(1j * theta * t) - 1
    kappas = np.array([1e-2, 1e-3, 1e-4])
    gaps = np.array([np.max(np.abs(f_factor(t, w1, w2, k) - base)) for k in kappas])
    slope = np.polyfit(np.log(kappas), np.log(gaps), 1)[0]

    mp.mp.dps = 40
    worst = 0.0
    for tt, a, b, k in [(1.0, 1.0, 2.0, 0.5), (0.37, 4.1, 0.2, 3.0), (12.5, 0.05, 0.07, 0.01), (1e-3, 10.0, 20.0, 100.0)]:
        T, th, K = mp.mpf(tt), mp.mpf(a) + mp.mpf(b), mp.mpf(k)
        e = mp.exp(1j * th * T)
        ref = e - (1 + K * (e - 1) / th) / (1 + 1j * K * T)
        got = complex(f_factor(tt, a, b, k))
        worst = max(worst, abs(got - complex(ref)) / max(abs(complex(ref)), 1e-300))
    ok = zero == 0.0 and abs(slope - 1) < 0.05 and worst < 1e-12
    report("f_factor_properties", ok, f"F(0)={zero}, kappa slope {slope:.3f}, mpmath rel error {worst:.1e} (< 1e-12)")


@pytest.mark.slow
def test_stress_identity_convergence():
    model = lorentz_model(W0, W0, 0.3 * W0)
    res = discretize_reservoir(model, 256)
    src = PulseSource(0.7 * W0, 4e-15, 1.0, 3e-6)
    norms = []
    for n in (800, 1600, 3200, 6400):
        grid = Grid1D(0, 10e-6, n)
        sim = Simulation(grid, [Slab(5.03e-6, 7.03e-6, model, res)], src)
        sim.step(int(round((src.t0 + 2.9e-6 / C) / grid.dt)))
        s0 = sim.snapshot()
        sim.step()
        norms.append(verify_stress_identity(s0, sim.snapshot())["l2"])
    norms = np.array(norms)
    orders = np.log2(norms[:-1] / norms[1:])
    fit = -np.polyfit(np.log2([800, 1600, 3200, 6400]), np.log2(norms), 1)[0]
    ok = abs(fit - 2) <= 0.3 and np.all(np.abs(orders - 2) <= 0.3)
    report("stress_identity_convergence", ok, f"order {fit:.2f} (pairwise {np.round(orders, 2).tolist()}), want 2 +- 0.3")


def test_fluctuation_timescale():
    model = lorentz_model(1e15, 1e15, 1e14)
    om = np.linspace(0.2e15, 3e15, 1201)
    kernel = FluctuationKernel.from_model(model, om)
    t = np.linspace(0, 40e-15, 2001)
    env = fluctuation_envelope(kernel, WavePacketParams(1e-14, 1e18), t)
    period = oscillation_period(t, env)
    expected = 2 * math.pi / (2 * absorption_peak(model, om))
    rel = abs(period / expected - 1)
    report("fluctuation_timescale", rel < 0.1, f"period {period:.4e} s vs {expected:.4e} s, off by {rel:.1%} (< 10%)")

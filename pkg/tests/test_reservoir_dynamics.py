import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dielmotion.constants import C
from dielmotion.errors import ValidationError
from dielmotion.greens import rt_normal_incidence, slab_stack
from dielmotion.reservoir_dynamics import (
    BodyState,
    ContinuousSource,
    Grid1D,
    PulseExperimentConfig,
    PulseSource,
    Simulation,
    Slab,
    run_pulse_experiment,
    total_energy,
)
from dielmotion.susceptibility import ReservoirDiscretization, discretize_reservoir, lorentz_model

W0 = 2 * math.pi * C / 1e-6


def test_grid_validation_and_geometry():
    g = Grid1D(0, 1e-6, 100)
    assert g.dx == pytest.approx(1e-8)
    assert g.dt == pytest.approx(0.5 * g.dx / C)
    assert len(g.x_e) == 101 and len(g.x_b) == 100
    assert g.refined().n_cells == 200
    with pytest.raises(ValidationError):
        Grid1D(0, 1e-6, 100, courant=0.9)
    with pytest.raises(ValidationError):
        Grid1D(1, 0, 100)


def test_pulse_source_energy_closed_form():
    src = PulseSource(W0, 3e-15, 2.0, 0.0)
    u = np.linspace(0, src.t0 * 2.5, 200001)
    from scipy.integrate import trapezoid

    from dielmotion.constants import MU0

    num = trapezoid(src.waveform(u) ** 2, u) / (MU0 * C)
    assert src.incident_energy() == pytest.approx(num, rel=1e-9)


def test_continuous_source_ramp():
    src = ContinuousSource(W0, 1.0, 0.0, 1e-14)
    assert src.waveform(-1e-15) == 0
    assert abs(src.waveform(0.5e-14)) <= 0.5 + 1e-12


def test_body_state_warns_when_fast(caplog):
    with caplog.at_level(logging.WARNING):
        BodyState(0, 1, velocity=1e-2 * C)
    assert "slow-motion" in caplog.text


def test_vacuum_pulse_travels_at_c_and_leaves():
    g = Grid1D(0, 20e-6, 1600)
    src = PulseSource(0.0, 4e-15, 1.0, 4e-6)
    sim = Simulation(g, [], src)
    sim.step(int((src.t0 + 6e-6 / C) / g.dt))
    # peak should sit 6 um right of the source plane
    peak = g.x_e[np.argmax(np.abs(sim.E))]
    assert peak == pytest.approx(10e-6, abs=3 * g.dx)
    # total-field/scattered-field split: nothing behind the source
    i0 = g.node(src.launch)
    assert np.max(np.abs(sim.E[: i0 - 2])) < 1e-6
    e_mid = total_energy(sim)
    # the tail is 5 widths behind the peak
    sim.step(int((10e-6 + 5 * C * src.width + 2e-6) / C / g.dt))
    assert total_energy(sim) < 1e-6 * e_mid


@settings(max_examples=5, deadline=None)
@given(
    wp=st.floats(0.3, 1.5),
    gamma=st.floats(0.02, 0.5),
    thickness=st.floats(0.3, 2.0),
)
def test_energy_conserved_with_pec_walls(wp, gamma, thickness):
    model = lorentz_model(wp * W0, W0, gamma * W0)
    g = Grid1D(0, 8e-6, 640)
    src = PulseSource(W0, 2e-15, 1.0, 2e-6)
    sim = Simulation(g, [Slab(3e-6, 3e-6 + thickness * 1e-6, model, discretize_reservoir(model, 128, omega_max=10 * W0))], src, boundary="pec")
    sim.step(int(src.end_time / g.dt) + 5)
    u0 = sim.total_energy()
    sim.step(2000)
    assert abs(sim.total_energy() - u0) < 1e-10 * u0


def test_reservoir_frequency_stability_guard():
    model = lorentz_model(W0, 50 * W0, W0)
    with pytest.raises(ValidationError):
        Simulation(Grid1D(0, 10e-6, 200), [Slab(4e-6, 5e-6, model)], None, reservoir_nodes=64)


def test_slab_placement_checks():
    model = lorentz_model(W0, W0, 0.1 * W0)
    g = Grid1D(0, 10e-6, 800)
    with pytest.raises(ValidationError):
        Simulation(g, [Slab(0.05e-6, 1e-6, model)], None)
    with pytest.raises(ValidationError):
        Simulation(g, [Slab(4e-6, 5e-6, model)], PulseSource(W0, 2e-15, 1.0, 6e-6))
    with pytest.raises(ValidationError):
        Simulation(g, [Slab(4e-6, 5e-6, model), Slab(4.5e-6, 6e-6, model)], None)


def spectral_rt(src, stack, n=4001):
    """Spectrum-weighted R and T of a pulse from the transfer-matrix oracle."""
    w = np.linspace(src.carrier - 6 / src.width, src.carrier + 6 / src.width, n)
    w = w[w > 0]
    weight = np.exp(-((w - src.carrier) * src.width) ** 2)
    rt = np.array([rt_normal_incidence(stack, wi) for wi in w])
    return float(np.sum(weight * rt[:, 0]) / weight.sum()), float(np.sum(weight * rt[:, 1]) / weight.sum())


def test_pulse_rt_against_transfer_matrix():
    model = lorentz_model(W0, W0, 0.3 * W0)
    src = PulseSource(0.7 * W0, 6e-15, 1.0, 3e-6)
    cfg = PulseExperimentConfig(model, 6e-6, 0.4e-6, Grid1D(0, 14e-6, 2240), src, reservoir_nodes=256)
    res = run_pulse_experiment(cfg)
    R, T = spectral_rt(src, slab_stack(model, 0.4e-6))
    assert res.R == pytest.approx(R, abs=2e-3)
    assert res.T == pytest.approx(T, abs=2e-3)
    assert abs(res.closure) < 1e-10
    assert res.incident_energy == pytest.approx(src.incident_energy(), rel=1e-2)


def test_oscillator_excitation_radiates():
    model = lorentz_model(W0, W0, 0.1 * W0)
    g = Grid1D(0, 10e-6, 800)
    sim = Simulation(g, [Slab(4e-6, 5e-6, model)], None, boundary="pec", reservoir_nodes=64)
    sim.excite_oscillator(0, 10, 20, 1e-3)
    u0 = sim.total_energy()
    sim.step(500)
    parts = sim.energy_parts()
    assert parts["electric"] + parts["magnetic"] > 0
    assert sim.total_energy() == pytest.approx(u0, rel=1e-10)


def test_zero_state_has_zero_energy():
    model = lorentz_model(W0, W0, 0.1 * W0)
    sim = Simulation(Grid1D(0, 10e-6, 400), [Slab(4e-6, 5e-6, model)], None, reservoir_nodes=64)
    assert sim.total_energy() == 0.0
    assert all(v == 0.0 for v in sim.energy_parts().values())


def test_reservoir_is_causal():
    model = lorentz_model(W0, W0, 0.3 * W0)
    g = Grid1D(0, 10e-6, 800)
    src = PulseSource(W0, 3e-15, 1.0, 2e-6)
    sim = Simulation(g, [Slab(5e-6, 6e-6, model)], src, reservoir_nodes=64)
    # the stencil reaches one cell further per step
    quiet = g.node(5e-6) - g.node(2e-6) - 3
    sim.step(quiet)
    assert all(np.all(s.X == 0.0) and np.all(s.PiX == 0.0) for s in sim.slabs)
    sim.step(quiet)
    assert any(np.any(s.X != 0.0) for s in sim.slabs)


def test_free_oscillator_frequency():
    # vanishing coupling: the oscillator rings at its own frequency
    model = lorentz_model(1e-6 * W0, W0, 0.1 * W0)
    g = Grid1D(0, 10e-6, 800)
    res = ReservoirDiscretization.lossless(model)
    sim = Simulation(g, [Slab(4e-6, 5e-6, model, res)], None, boundary="pec")
    sim.excite_oscillator(0, 10, 0, 1.0)
    n = 4000
    x = np.empty(n)
    for i in range(n):
        sim.step()
        x[i] = sim.slabs[0].X[10, 0]
    t = (np.arange(n) + 1) * g.dt
    k = np.nonzero(np.signbit(x[:-1]) != np.signbit(x[1:]))[0]
    zeros = t[k] - x[k] * g.dt / (x[k + 1] - x[k])
    period = 2 * np.mean(np.diff(zeros))
    wdt = W0 * g.dt
    err = abs(2 * math.pi / period - W0) / W0
    assert err < wdt**2
    # leapfrog dispersion: sin(w' dt / 2) = w dt / 2
    assert 2 * math.pi / period == pytest.approx(2 * math.asin(wdt / 2) / g.dt, rel=1e-5)


def transmitted_fraction(slabs, g, src):
    kr = g.node(17e-6)
    fluxes = []
    for body in ([], slabs):
        sim = Simulation(g, body, src)
        e_prev = np.zeros_like(sim.E)
        total = 0.0
        for _ in range(int((src.end_time + 18e-6 / C) / g.dt)):
            e_prev[kr] = sim.E[kr]
            sim.step()
            total += sim.flux(kr, e_prev)
        fluxes.append(total)
    return fluxes[1] / fluxes[0]


def test_empty_stack_transmits_everything():
    from dielmotion.susceptibility import VACUUM

    cfg = PulseExperimentConfig(VACUUM, 6e-6, 1e-6, Grid1D(0, 14e-6, 1120), PulseSource(W0, 3e-15, 1.0, 3e-6))
    res = run_pulse_experiment(cfg)
    assert abs(res.R) < 1e-4 and abs(res.T - 1) < 1e-4


def test_mirrored_stack_transmits_equally():
    a = lorentz_model(W0, W0, 0.3 * W0)
    b = lorentz_model(0.6 * W0, 1.4 * W0, 0.1 * W0)
    g = Grid1D(0, 20e-6, 1600)
    src = PulseSource(0.8 * W0, 3e-15, 1.0, 3e-6)
    # stack centred on x = 10 um with edges on grid nodes
    fwd = [Slab(8e-6, 9e-6, a), Slab(9.5e-6, 12e-6, b)]
    rev = [Slab(8e-6, 10.5e-6, b), Slab(11e-6, 12e-6, a)]
    t_fwd = transmitted_fraction(fwd, g, src)
    t_rev = transmitted_fraction(rev, g, src)
    assert 0.05 < t_fwd < 0.95
    assert abs(t_fwd - t_rev) < 1e-6


def test_snapshot_csv_dump(tmp_path):
    from dielmotion.reservoir_dynamics import SNAPSHOT_COLUMNS, write_snapshots

    model = lorentz_model(W0, W0, 0.3 * W0)
    g = Grid1D(0, 10e-6, 800)
    sim = Simulation(g, [Slab(5e-6, 6e-6, model)], PulseSource(W0, 3e-15, 1.0, 2e-6), reservoir_nodes=64)
    snaps = []
    for _ in range(3):
        sim.step(100)
        snaps.append(sim.snapshot())
    out = tmp_path / "snap.csv"
    write_snapshots(out, snaps, {"cells": 800})
    lines = out.read_text().splitlines()
    assert lines[0] == "# cells=800" and lines[1] == ",".join(SNAPSHOT_COLUMNS)
    data = np.loadtxt(out, delimiter=",", comments="#", skiprows=2)
    assert data.shape == (3 * 801, 6)
    assert np.array_equal(data[-801:, 2], snaps[-1].E)
    assert np.array_equal(data[:801, 0], np.full(801, snaps[0].t))


def test_convective_diagnostic_scales_with_velocity():
    from dielmotion.reservoir_dynamics import convective_fraction, convective_rate

    model = lorentz_model(W0, W0, 0.3 * W0)
    g = Grid1D(0, 10e-6, 800)
    sim = Simulation(g, [Slab(5e-6, 6e-6, model)], PulseSource(W0, 3e-15, 1.0, 2e-6), reservoir_nodes=64)
    assert convective_fraction(sim.snapshot(), 1.0) == 0.0
    sim.step(int((sim.source.t0 + 3.5e-6 / C) / g.dt))
    snap = sim.snapshot()
    assert np.allclose(convective_rate(snap, 2.0), 2 * convective_rate(snap, 1.0), rtol=0, atol=0)
    # slow motion leaves the dropped term small next to dP/dt
    assert 0 < convective_fraction(snap, 1e-3 * C) < 1e-2

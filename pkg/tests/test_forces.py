import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dielmotion.constants import C, EPS0, HBAR
from dielmotion.errors import ValidationError
from dielmotion.forces import (
    ForceAccumulator,
    ForceRecord,
    ab_phase,
    abraham_momentum_density,
    body_force,
    canonical_momentum,
    containment_window,
    displacement,
    face_nodes,
    gamma_classical,
    integrate_records,
    maxwell_stress,
    stress_xx,
    verify_stress_identity,
)
from dielmotion.reservoir_dynamics import Grid1D, PulseSource, Simulation, Slab
from dielmotion.susceptibility import discretize_reservoir, lorentz_model

W0 = 2 * math.pi * C / 1e-6
vec = st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3)


@settings(max_examples=50, deadline=None)
@given(E=vec, B=vec)
def test_stress_trace_is_minus_energy_density(E, B):
    E, B = np.array(E), np.array(B) / C
    s = maxwell_stress(E, B)
    u = 0.5 * EPS0 * (E @ E + C**2 * (B @ B))
    assert s.trace == pytest.approx(-u, rel=1e-12, abs=1e-30)
    assert np.allclose(s.tensor, s.tensor.T)


def test_transverse_stress_matches_tensor():
    s = maxwell_stress([0, 2.0, 0], [0, 0, 3.0 / C])
    assert stress_xx(2.0, 3.0 / C) == pytest.approx(s.xx, rel=1e-14)
    with pytest.raises(ValidationError):
        maxwell_stress([1, 2], [0, 0, 0])


def test_abraham_density_direction():
    g = abraham_momentum_density([0, 1.0, 0], [0, 0, 1.0])
    assert np.allclose(g, [1 / C**2, 0, 0])


def test_face_nodes():
    x = np.linspace(0, 1, 101)
    assert face_nodes(x, 0.01, 0.305, 0.5) == (29, 51)
    with pytest.raises(ValidationError):
        face_nodes(x, 0.01, 0.0, 0.5)


def rec(t, net, stress=0.0, abraham=0.0, mech=None):
    mech = net if mech is None else mech
    return ForceRecord(t, net, 0.0, net, mech, net - mech, stress, stress, abraham)


def test_integrate_and_displacement():
    t = np.linspace(0, 2, 201)
    records = [rec(ti, 3.0, abraham=ti) for ti in t]
    tot = integrate_records(records)
    assert tot["surface"] == pytest.approx(6.0)
    assert tot["residual"] == 0 and tot["abraham_change"] == pytest.approx(2.0)
    tt, x = displacement(records, 1.5)
    assert x[-1] == pytest.approx(0.5 * 2.0 * 4.0, rel=1e-12)


def test_containment_window_skips_carrier_zeros():
    t = np.linspace(0, 10, 1001)
    stress = np.where((t < 2) | (t > 8), np.sin(20 * t), 0.0)
    i, j = containment_window([rec(a, 0.0, stress=s) for a, s in zip(t, stress)], window=0.5)
    assert 2 < t[i] < 2.5 and 7.5 < t[j] <= 8.1
    with pytest.raises(ValidationError):
        containment_window([rec(a, 0.0) for a in t])


def test_ab_phase_encloses_area():
    # Gamma = (0, g x): the loop integral is g times the enclosed area
    s = np.linspace(0, 1, 201)
    path = np.concatenate([np.c_[s, 0 * s], np.c_[1 + 0 * s, s][1:], np.c_[1 - s, 1 + 0 * s][1:], np.c_[0 * s, 1 - s][1:]])
    gamma = np.c_[0 * path[:, 0], 2.0 * HBAR * path[:, 0]]
    assert ab_phase(path, gamma) == pytest.approx(-2.0, rel=1e-12)
    with pytest.raises(ValidationError):
        ab_phase(path[:-5], gamma[:-5])


def small_run(track=False):
    model = lorentz_model(W0, W0, 0.3 * W0)
    src = PulseSource(0.7 * W0, 4e-15, 1.0, 3e-6)
    g = Grid1D(0, 10e-6, 1600)
    sim = Simulation(g, [Slab(5.03e-6, 7.03e-6, model, discretize_reservoir(model, 128))], src, track_potential=track)
    return sim, src, g


def test_gamma_equals_minus_canonical_momentum():
    sim, src, g = small_run(track=True)
    sim.step(int((src.t0 + 3e-6 / C) / g.dt))
    a = sim.snapshot(True)
    sim.step()
    b = sim.snapshot(True)
    sim.step()
    c = sim.snapshot(True)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        gam = gamma_classical(b)
    assert gam.gauge_drift < 1e-9
    assert gam.gamma == pytest.approx(-canonical_momentum(a, b, c), rel=1e-9)
    assert gam.gamma == pytest.approx(gam.field + gam.reservoir)


def test_stress_identity_small_in_bulk():
    sim, src, g = small_run()
    sim.step(int((src.t0 + 2.9e-6 / C) / g.dt))
    s0 = sim.snapshot()
    sim.step()
    out = verify_stress_identity(s0, sim.snapshot())
    scale = np.max(np.abs(np.gradient(stress_xx(s0.E, s0.B), s0.dx)))
    assert out["max"] < 1e-2 * scale


def test_vacuum_body_feels_no_force():
    g = Grid1D(0, 10e-6, 800)
    src = PulseSource(W0, 3e-15, 1.0, 3e-6)
    sim = Simulation(g, [], src)
    snaps = []
    for _ in range(int((src.t0 + 5e-6 / C) / g.dt)):
        sim.step()
        snaps.append(sim.snapshot())
    records = body_force(snaps, (5e-6, 6e-6))
    surf = np.array([r.surface for r in records])
    net = np.array([r.net for r in records])
    assert np.max(np.abs(net)) < 1e-2 * np.max(np.abs(surf))
    assert all(r.mechanical == 0 for r in records)


def test_accumulator_warns_when_faces_inside_matter():
    sim, src, g = small_run()
    acc = ForceAccumulator(5.5e-6, 6.5e-6)
    with pytest.warns(UserWarning):
        acc.add(sim.snapshot())

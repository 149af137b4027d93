"""Force bookkeeping for bodies at rest in time-dependent fields.

The force on a body follows from the Maxwell stress on a surface enclosing
it in vacuum, minus the rate of change of the Abraham momentum
``E x H / c^2`` inside.  In the 1-D slab geometry (E along y, B along z,
propagation along x) the surface integral reduces to the difference of
``sigma_xx = -(eps0/2)(E^2 + c^2 B^2)`` at two vacuum nodes bracketing the
body.

An independent matter-side force is assembled from the Lorentz force on
the polarization and magnetization currents plus the rate of change of
the hidden momentum ``M E / c^2``; the two routes agree up to
discretization error, which is what ``ForceRecord.residual`` measures.
"""

from __future__ import annotations

import math
import warnings
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import trapezoid
from scipy.ndimage import maximum_filter1d

from .constants import C, EPS0, HBAR
from .errors import ValidationError


@dataclass(frozen=True)
class StressSample:
    tensor: np.ndarray

    @property
    def xx(self) -> float:
        return float(self.tensor[0, 0])

    @property
    def trace(self) -> float:
        return float(np.trace(self.tensor))


def maxwell_stress(E, B) -> StressSample:
    """Vacuum Maxwell stress eps0 [E E + c^2 B B - (E^2 + c^2 B^2)/2 I]."""
    E = np.asarray(E, dtype=float)
    B = np.asarray(B, dtype=float)
    if E.shape != (3,) or B.shape != (3,):
        raise ValidationError("E and B must be 3-vectors")
    u = E @ E + C**2 * (B @ B)
    sigma = EPS0 * (np.outer(E, E) + C**2 * np.outer(B, B) - 0.5 * u * np.eye(3))
    return StressSample(sigma)


def stress_xx(E_y, B_z):
    """sigma_xx for fields transverse to x (vectorized)."""
    E_y = np.asarray(E_y)
    B_z = np.asarray(B_z)
    return -0.5 * EPS0 * (E_y * E_y + C**2 * B_z * B_z)


def abraham_momentum_density(E, H) -> np.ndarray:
    """Abraham momentum density E x H / c^2 [kg m^-2 s^-1]."""
    return np.cross(np.asarray(E, dtype=float), np.asarray(H, dtype=float)) / C**2


@dataclass(frozen=True)
class ForceRecord:
    """Force per area on the body at one instant [N/m^2].

    ``net = surface - abraham_rate`` is the force inferred from the fields
    outside; ``mechanical`` is the independently computed matter-side
    force, and ``residual = net - mechanical``.
    """

    t: float
    surface: float
    abraham_rate: float
    net: float
    mechanical: float
    residual: float
    stress_left: float = 0.0
    stress_right: float = 0.0
    abraham: float = 0.0


@dataclass(frozen=True)
class GammaRecord:
    """Coupling vector Gamma per area [kg m^-1 s^-1] in the 1-D reduction.

    ``gamma`` includes every term; ``reservoir`` is the oscillator-gradient
    part alone, reported separately.
    """

    t: float
    gamma: float
    field: float
    reservoir: float
    gauge_drift: float = 0.0


def face_nodes(x: np.ndarray, dx: float, x_left: float, x_right: float) -> tuple[int, int]:
    """First integer nodes whose neighbouring half cells are free of the body."""
    x0 = x[0]
    i_left = int(math.floor((x_left - x0) / dx + 1e-9)) - 1
    i_right = int(math.ceil((x_right - x0) / dx - 1e-9)) + 1
    if i_left < 1 or i_right > len(x) - 2:
        raise ValidationError("body too close to the grid edge for surface sampling")
    return i_left, i_right


def _trapz_nodes(f, i0, i1, dx):
    seg = f[i0 : i1 + 1]
    return dx * (seg.sum() - 0.5 * (seg[0] + seg[-1]))


class ForceAccumulator:
    """Turns a stream of snapshots into force records.

    Time derivatives use centred differences, so each record lags the
    latest snapshot by one step and the first and last snapshots yield no
    record.
    """

    def __init__(self, x_left: float, x_right: float):
        self.x_left, self.x_right = x_left, x_right
        self._faces = None
        self._buf = deque(maxlen=3)
        self.records: list[ForceRecord] = []
        self._warned = False

    def _sample(self, s):
        if self._faces is None:
            self._faces = face_nodes(s.x, s.dx, self.x_left, self.x_right)
        iL, iR = self._faces
        if not self._warned and (
            s.fill[iL] > 0 or s.fill[iR] > 0 or s.M[iL] != 0 or s.M[iR] != 0 or s.P[iL] != 0 or s.P[iR] != 0
        ):
            warnings.warn("surface nodes are not in vacuum; stress there is not the vacuum form", stacklevel=3)
            self._warned = True
        sig_l = float(stress_xx(s.E[iL], s.B[iL]))
        sig_r = float(stress_xx(s.E[iR], s.B[iR]))
        pa = _trapz_nodes(s.E * s.H, iL, iR, s.dx) / C**2
        lorentz = s.dx * float(np.sum((s.Pdot - s.dMdx) * s.B))
        hidden = s.dx * float(np.sum(s.M * s.E)) / C**2
        return s.t, sig_l, sig_r, pa, lorentz, hidden

    def add(self, snapshot) -> ForceRecord | None:
        self._buf.append(self._sample(snapshot))
        if len(self._buf) < 3:
            return None
        (t0, _, _, pa0, _, h0), (t1, sl, sr, pa1, lor, _), (t2, _, _, pa2, _, h2) = self._buf
        dt2 = t2 - t0
        rate = (pa2 - pa0) / dt2
        mech = lor + (h2 - h0) / dt2
        surface = sr - sl
        net = surface - rate
        rec = ForceRecord(t1, surface, rate, net, mech, net - mech, sl, sr, pa1)
        self.records.append(rec)
        return rec


def body_force(snapshots: Iterable, extent: tuple[float, float]) -> list[ForceRecord]:
    """Force records for a sequence of consecutive snapshots."""
    acc = ForceAccumulator(*extent)
    for s in snapshots:
        acc.add(s)
    return acc.records


def integrate_records(records: Sequence[ForceRecord]) -> dict:
    """Time integrals of the force channels (trapezoid) and the Abraham change."""
    if len(records) < 2:
        return {"surface": 0.0, "mechanical": 0.0, "net": 0.0, "residual": 0.0, "abraham_change": 0.0}
    t = np.array([r.t for r in records])

    def integ(name):
        return float(trapezoid(np.array([getattr(r, name) for r in records]), t))

    return {
        "surface": integ("surface"),
        "mechanical": integ("mechanical"),
        "net": integ("net"),
        "residual": integ("residual"),
        "abraham_change": records[-1].abraham - records[0].abraham,
    }


def containment_window(
    records: Sequence[ForceRecord], rel: float = 1e-3, window: float | None = None
) -> tuple[int, int]:
    """Index range of the first quiet interval after the pulse enters the body.

    Quiet means both surface stresses stay below ``rel`` of their peak
    over a sliding ``window`` (seconds; default 2% of the record span), so
    the field just outside the body is negligible and not merely passing
    through a zero of its carrier.
    """
    t = np.array([r.t for r in records])
    loud_l = np.abs([r.stress_left for r in records])
    loud_r = np.abs([r.stress_right for r in records])
    peak = max(loud_l.max(), loud_r.max())
    if peak == 0:
        raise ValidationError("no field ever reached the body")
    if window is None:
        window = 0.02 * (t[-1] - t[0])
    half = max(int(round(0.5 * window / np.median(np.diff(t)))), 0)
    level = np.maximum(loud_l, loud_r)
    if half:
        level = maximum_filter1d(level, size=2 * half + 1, mode="nearest")
    quiet = level < rel * peak
    i = int(np.argmax(~quiet))
    while i < len(quiet) and not quiet[i]:
        i += 1
    j = i
    while j < len(quiet) and quiet[j]:
        j += 1
    if i >= len(quiet):
        raise ValidationError("pulse never fully inside the body")
    return i, j


def displacement(records: Sequence[ForceRecord], mass_per_area: float) -> tuple[np.ndarray, np.ndarray]:
    """Integrate M R'' = net force from rest; returns (t, R - R0)."""
    t = np.array([r.t for r in records])
    a = np.array([r.net for r in records]) / mass_per_area
    v = np.concatenate([[0.0], np.cumsum(0.5 * (a[1:] + a[:-1]) * np.diff(t))])
    x = np.concatenate([[0.0], np.cumsum(0.5 * (v[1:] + v[:-1]) * np.diff(t))])
    return t, x


# ---------------------------------------------------------------------------
# Gamma vector


def _reservoir_gradient_term(snapshot, velocities=None) -> float:
    """sum_j int dX_j/dx * V_j dx over all oscillators.

    ``V`` defaults to the canonical momenta stored in the snapshot.
    """
    total = 0.0
    dx = snapshot.dx
    for k, osc in enumerate(snapshot.oscillators):
        X = osc["X"]
        V = osc["Pi"] if velocities is None else velocities[k]
        if X.size == 0:
            continue
        Xp = np.zeros((X.shape[0] + 2, X.shape[1]))
        Xp[1:-1] = X
        dX = (Xp[2:] - Xp[:-2]) / (2 * dx)
        total += dx * float(np.sum(dX * V))
    return total


def gamma_classical(snapshot, gauge_tol: float = 1e-6) -> GammaRecord:
    """Gamma = int [M E / c^2 + P B - sum_j dX_j/dx Pi_j] dx for one snapshot.

    The snapshot must carry oscillator arrays.  If it carries the
    temporal-gauge potential A, the mismatch between dA/dx and B on the
    half nodes is returned as ``gauge_drift`` (relative) and a warning is
    issued above ``gauge_tol``.
    """
    s = snapshot
    field_part = s.dx * float(np.sum(s.M * s.E / C**2 + s.P * s.B))
    res = -_reservoir_gradient_term(s)
    drift = 0.0
    if s.A is not None and s.B_half is not None:
        dA = np.diff(s.A) / s.dx
        ok = np.ones(len(dA), bool)
        if getattr(s, "exclude_b", None) is not None:
            ok &= ~s.exclude_b
        scale = float(np.max(np.abs(s.B_half[ok]))) or 1.0
        drift = float(np.max(np.abs(dA - s.B_half)[ok])) / scale
        if drift > gauge_tol:
            warnings.warn(f"vector potential drifted from B by {drift:.3g} (relative)", stacklevel=2)
    return GammaRecord(s.t, field_part + res, field_part, res, drift)


def canonical_momentum(prev, snap, nxt) -> float:
    """Centre-of-mass canonical momentum of a body at rest (1-D, per area).

    p = -int M E / c^2 - int P B + sum_j int dX_j/dx dX_j/dt, with dX/dt
    taken by centred differences of the oscillator coordinates, so this is
    independent of the stored canonical momenta.
    """
    dt2 = nxt.t - prev.t
    vel = [(b["X"] - a["X"]) / dt2 for a, b in zip(prev.oscillators, nxt.oscillators)]
    field_part = snap.dx * float(np.sum(snap.M * snap.E / C**2 + snap.P * snap.B))
    return -field_part + _reservoir_gradient_term(snap, vel)


def ab_phase(R, gamma) -> float:
    """Phase -(1/hbar) closed-loop integral of Gamma . dR (trapezoid rule).

    ``R`` and ``gamma`` are sequences of positions and Gamma vectors
    (or scalars in 1-D); the path must close.
    """
    R = np.asarray(R, dtype=float)
    G = np.asarray(gamma, dtype=float)
    if R.ndim == 1:
        R = R[:, None]
    if G.ndim == 1:
        G = G[:, None]
    if R.shape != G.shape or len(R) < 3:
        raise ValidationError("need matching position and Gamma samples, at least three")
    scale = float(np.max(np.abs(R))) or 1.0
    if np.max(np.abs(R[0] - R[-1])) > 1e-12 * scale:
        raise ValidationError("path is not closed")
    dR = np.diff(R, axis=0)
    Gm = 0.5 * (G[1:] + G[:-1])
    return -float(np.sum(Gm * dR)) / HBAR


# ---------------------------------------------------------------------------
# stress identity


def _exclusion_mask(snap, band: int) -> np.ndarray:
    n = len(snap.x)
    bad = np.zeros(n, bool)
    bad[:band + 1] = True
    bad[-band - 1 :] = True
    for xi in snap.interfaces:
        i = (xi - snap.x[0]) / snap.dx
        lo = max(int(math.floor(i)) - band, 0)
        hi = min(int(math.ceil(i)) + band, n - 1)
        bad[lo : hi + 1] = True
    irregular = getattr(snap, "exclude_e", None)
    if irregular is not None:
        idx = np.nonzero(irregular)[0]
        for i in idx:
            bad[max(i - band, 0) : i + band + 1] = True
    return bad


def verify_stress_identity(s0, s1, band: int = 3) -> dict:
    """Residual of the local momentum balance between two consecutive snapshots.

    r = d(sigma_xx)/dx - eps0 d(E B)/dt - (dP/dt - dM/dx) B at the mid
    time.  Nodes within ``band`` cells of an interface, the grid ends, a
    source plane or an absorbing layer are excluded, since field kinks there make the
    centred differences first order.  Returns the pointwise residual and
    its max and L2 norms [N/m^3].
    """
    dt = s1.t - s0.t
    dx = s0.dx

    def avg(name):
        return 0.5 * (getattr(s0, name) + getattr(s1, name))

    sig = 0.5 * (stress_xx(s0.E, s0.B) + stress_xx(s1.E, s1.B))
    dsig = np.zeros_like(sig)
    dsig[1:-1] = (sig[2:] - sig[:-2]) / (2 * dx)
    dEB = (s1.E * s1.B - s0.E * s0.B) / dt
    lor = 0.5 * ((s0.Pdot - s0.dMdx) * s0.B + (s1.Pdot - s1.dMdx) * s1.B)
    r = dsig - EPS0 * dEB - lor
    bad = _exclusion_mask(s0, band)
    r = np.where(bad, 0.0, r)
    return {"residual": r, "max": float(np.max(np.abs(r))), "l2": float(np.sqrt(np.sum(r * r) * dx))}

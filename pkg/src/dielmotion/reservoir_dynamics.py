"""Time-domain Maxwell-reservoir solver for planar slabs at normal incidence.

Fields are E_y on integer nodes ``x_i = x_min + i*dx`` and B_z on half
nodes.  Every body cell carries a set of harmonic oscillators X_j (driven
by E) and, for magnetic models, Y_j (driven by B):

    dD/dt = -dH/dx,   dB/dt = -dE/dx,
    X_j'' + w_j^2 X_j = c_j E,   P = sum_j c_j X_j,   E = (D - P)/eps0,
    Y_j'' + w_j^2 Y_j = b_j B,   M = sum_j b_j Y_j,   H = B/mu0 - M.

The update is a leapfrog over two variable sets, (D, X, Pi_Y) at integer
times and (B, Pi_X, Y) at half times.  The Hamiltonian splits into a part
depending only on each set, so the scheme is symplectic and conserves a
discrete energy exactly when no source or absorbing layer is active.

Body support is resolved below the cell size: each node couples to its
oscillators with weight ``sqrt(f)``, ``f`` the fraction of its dual cell
covered by the body, which keeps a slab's optical thickness exact to
second order.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import C, EPS0, MU0
from .errors import InstabilityError, NonConvergenceError, ValidationError
from .susceptibility import ReservoirDiscretization, SusceptibilityModel, discretize_reservoir

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_cells: int
    courant: float = 0.5

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValidationError("x_max must exceed x_min")
        if self.n_cells < 8:
            raise ValidationError("need at least 8 cells")
        if not 0 < self.courant <= 0.5:
            raise ValidationError("Courant number must lie in (0, 0.5]")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    @property
    def dt(self) -> float:
        return self.courant * self.dx / C

    @property
    def x_e(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_cells + 1)

    @property
    def x_b(self) -> np.ndarray:
        return self.x_min + self.dx * (np.arange(self.n_cells) + 0.5)

    def node(self, x: float) -> int:
        return int(round((x - self.x_min) / self.dx))

    def refined(self, factor: int = 2) -> "Grid1D":
        return Grid1D(self.x_min, self.x_max, self.n_cells * factor, self.courant)


@dataclass(frozen=True)
class Slab:
    x_left: float
    x_right: float
    model: SusceptibilityModel
    reservoir: ReservoirDiscretization | None = None

    def __post_init__(self):
        if not self.x_right > self.x_left:
            raise ValidationError("slab needs x_right > x_left")

    @property
    def thickness(self) -> float:
        return self.x_right - self.x_left


@dataclass
class BodyState:
    """Rigid-body bookkeeping; the solver keeps the body at rest."""

    x_left: float
    x_right: float
    mass: float = 1.0
    position: float = 0.0
    velocity: float = 0.0

    def __post_init__(self):
        if not self.x_right > self.x_left:
            raise ValidationError("body needs x_right > x_left")
        if not self.mass > 0:
            raise ValidationError("mass must be positive")
        if abs(self.velocity) / C > 1e-3:
            log.warning("body speed %.3g c is outside the slow-motion regime", abs(self.velocity) / C)


@dataclass(frozen=True)
class PulseSource:
    """Gaussian pulse injected rightward through the plane at ``launch``.

    ``width`` is the standard deviation of the envelope in seconds and
    ``delay`` the time at which the envelope peak crosses the plane.
    ``carrier = 0`` gives a baseband Gaussian.
    """

    carrier: float
    width: float
    amplitude: float
    launch: float
    delay: float | None = None

    def __post_init__(self):
        if not (self.width > 0 and self.carrier >= 0):
            raise ValidationError("pulse needs positive width and non-negative carrier")

    @property
    def t0(self) -> float:
        return 5 * self.width if self.delay is None else self.delay

    @property
    def end_time(self) -> float:
        return self.t0 + 7 * self.width

    def waveform(self, u):
        s = (u - self.t0) / self.width
        return self.amplitude * np.exp(-0.5 * s * s) * np.cos(self.carrier * (u - self.t0))

    def incident_energy(self) -> float:
        """Analytic energy per area carried by the continuum pulse."""
        # int E^2 dt / (mu0 c); Gaussian-cosine integral in closed form
        w, s = self.carrier, self.width
        return self.amplitude**2 * s * math.sqrt(math.pi) * 0.5 * (1 + math.exp(-((w * s) ** 2))) / (MU0 * C)


@dataclass(frozen=True)
class ContinuousSource:
    """Monochromatic wave E0 sin(w u) switched on smoothly over ``ramp`` seconds."""

    omega: float
    amplitude: float
    launch: float
    ramp: float

    def __post_init__(self):
        if not (self.omega > 0 and self.ramp > 0):
            raise ValidationError("continuous source needs positive omega and ramp")

    @property
    def end_time(self) -> float:
        return math.inf

    @property
    def intensity(self) -> float:
        return 0.5 * EPS0 * C * self.amplitude**2

    def waveform(self, u):
        u = np.asarray(u, dtype=float)
        r = np.clip(u / self.ramp, 0.0, 1.0)
        return self.amplitude * np.sin(0.5 * math.pi * r) ** 2 * np.sin(self.omega * u) * (u > 0)


# ---------------------------------------------------------------------------


def _overlap(lo, hi, a, b):
    return np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None)


@dataclass
class _SlabField:
    slab: Slab
    reservoir: ReservoirDiscretization
    e_idx: np.ndarray
    e_fill: np.ndarray
    b_idx: np.ndarray
    b_fill: np.ndarray
    w2: np.ndarray
    aE: np.ndarray
    aB: np.ndarray
    sE: np.ndarray  # sqrt(f eps0) per E node
    sB: np.ndarray  # sqrt(f / mu0) per B node
    X: np.ndarray
    PiX: np.ndarray
    Y: np.ndarray
    PiY: np.ndarray
    magnetic: bool
    dt_w2: np.ndarray = None
    work: np.ndarray = None

    def polarization(self):
        return self.sE * (self.X @ self.aE)

    def polarization_rate(self):
        return self.sE * (self.PiX @ self.aE)

    def magnetization(self, Y=None):
        Y = self.Y if Y is None else Y
        return self.sB * (Y @ self.aB) if self.magnetic else np.zeros(len(self.b_idx))


@dataclass(frozen=True)
class Snapshot:
    """Fields co-located on the integer nodes at an integer time step.

    B, M and dP/dt live at half steps or half nodes in the solver and are
    averaged here.  ``dMdx`` is the centred spatial derivative of M.
    """

    n: int
    t: float
    x: np.ndarray
    dx: float
    E: np.ndarray
    B: np.ndarray
    P: np.ndarray
    Pdot: np.ndarray
    M: np.ndarray
    dMdx: np.ndarray
    fill: np.ndarray
    interfaces: tuple
    oscillators: tuple = ()
    A: np.ndarray | None = None
    B_half: np.ndarray | None = None
    exclude_e: np.ndarray | None = None
    exclude_b: np.ndarray | None = None

    @property
    def H(self) -> np.ndarray:
        return self.B / MU0 - self.M


class Simulation:
    """Owns the field and reservoir state and advances it in time."""

    def __init__(
        self,
        grid: Grid1D,
        slabs: Sequence[Slab] = (),
        source: PulseSource | ContinuousSource | None = None,
        *,
        boundary: str = "absorbing",
        pml_cells: int = 32,
        reservoir_nodes: int = 256,
        track_potential: bool = False,
    ):
        if boundary not in ("absorbing", "pec"):
            raise ValidationError("boundary must be 'absorbing' or 'pec'")
        self.grid = grid
        self.source = source
        self.boundary = boundary
        self.pml_cells = pml_cells if boundary == "absorbing" else 0
        n = grid.n_cells
        dx, dt = grid.dx, grid.dt
        self.dx, self.dt = dx, dt
        self.n = 0
        self.t = 0.0
        self.D = np.zeros(n + 1)
        self.E = np.zeros(n + 1)
        self.B = np.zeros(n)
        self.A = np.zeros(n + 1) if track_potential else None
        self._setup_absorber()
        self._setup_slabs(slabs, reservoir_nodes)
        self._setup_source()
        # half-step histories for co-located snapshots
        self._B_prev = np.zeros(n)
        self._M_prev = np.zeros(n)
        self._Pdot_prev = np.zeros(n + 1)
        self._norm_ref = 0.0
        self._refresh()

    def _refresh(self):
        # P at the integer time and Pdot at the latest half time, reused by the
        # next step and by snapshots
        self._P = self.polarization()
        self._Pdot = self.polarization_rate()

    # -- setup -------------------------------------------------------------

    def _setup_absorber(self):
        n, dt = self.grid.n_cells, self.dt
        sE = np.zeros(n + 1)
        sB = np.zeros(n)
        if self.pml_cells:
            L = self.pml_cells * self.dx
            s_max = 2 * C * math.log(1e8) / L
            xe = np.arange(n + 1) * self.dx
            xb = (np.arange(n) + 0.5) * self.dx
            total = n * self.dx

            def prof(x):
                depth = np.maximum(L - x, 0) + np.maximum(x - (total - L), 0)
                return s_max * (np.clip(depth / L, 0, 1)) ** 3

            sE, sB = prof(xe), prof(xb)
        self.caE = (1 - 0.5 * sE * dt) / (1 + 0.5 * sE * dt)
        self.cbE = dt / (1 + 0.5 * sE * dt)
        self.caB = (1 - 0.5 * sB * dt) / (1 + 0.5 * sB * dt)
        self.cbB = dt / (1 + 0.5 * sB * dt)
        lossy_b = sB > 0
        self.lossy_nodes = sE > 0
        self.lossy_nodes[1:] |= lossy_b
        self.lossy_nodes[:-1] |= lossy_b
        # nodes where the source-free lossless update does not apply
        self.exclude_e = self.lossy_nodes.copy()
        self.exclude_b = lossy_b.copy()

    def _setup_slabs(self, slabs, reservoir_nodes):
        g = self.grid
        lo = g.x_min + (self.pml_cells + 2) * g.dx
        hi = g.x_max - (self.pml_cells + 2) * g.dx
        ordered = sorted(slabs, key=lambda s: s.x_left)
        for s1, s2 in zip(ordered, ordered[1:]):
            if s2.x_left < s1.x_right:
                raise ValidationError("slabs overlap")
        xe, xb, dx = g.x_e, g.x_b, g.dx
        self.slabs: list[_SlabField] = []
        self.fill_e = np.zeros(g.n_cells + 1)
        for s in ordered:
            if s.x_left < lo or s.x_right > hi:
                raise ValidationError("slab must lie inside the domain, clear of the absorbing layers")
            res = s.reservoir
            if res is None:
                res = discretize_reservoir(s.model, reservoir_nodes)
            if res.count and float(np.max(res.nodes)) * self.dt >= 1.9:
                raise ValidationError(
                    f"reservoir frequency {np.max(res.nodes):.3g} rad/s unstable at dt = {self.dt:.3g} s"
                )
            fe = _overlap(xe - dx / 2, xe + dx / 2, s.x_left, s.x_right) / dx
            fb = _overlap(xb - dx / 2, xb + dx / 2, s.x_left, s.x_right) / dx
            ei = np.nonzero(fe > 0)[0]
            bi = np.nonzero(fb > 0)[0]
            self.fill_e[ei] += fe[ei]
            magnetic = "B" in res.couplings
            N = res.count
            self.slabs.append(
                _SlabField(
                    slab=s,
                    reservoir=res,
                    e_idx=ei,
                    e_fill=fe[ei],
                    b_idx=bi if magnetic else bi[:0],
                    b_fill=fb[bi] if magnetic else fb[bi][:0],
                    w2=res.nodes**2,
                    aE=res.coupling("E"),
                    aB=res.coupling("B"),
                    sE=np.sqrt(fe[ei] * EPS0),
                    sB=np.sqrt(fb[bi] / MU0) if magnetic else np.zeros(0),
                    X=np.zeros((len(ei), N)),
                    PiX=np.zeros((len(ei), N)),
                    Y=np.zeros((len(bi) if magnetic else 0, N)),
                    PiY=np.zeros((len(bi) if magnetic else 0, N)),
                    magnetic=magnetic,
                    dt_w2=self.dt * res.nodes**2,
                    work=np.empty((len(ei), N)),
                )
            )

    def _setup_source(self):
        src = self.source
        if src is None:
            self.i_src = None
            return
        i0 = self.grid.node(src.launch)
        if i0 <= self.pml_cells + 1 or i0 >= self.grid.n_cells - self.pml_cells - 1:
            raise ValidationError("source plane must lie outside the absorbing layers")
        if self.slabs and self.grid.x_e[i0] >= min(s.slab.x_left for s in self.slabs) - self.dx:
            raise ValidationError("source plane must lie left of every slab")
        self.i_src = i0
        self.x_src = self.grid.x_e[i0]
        self.exclude_b[i0 - 1] = True
        self.exclude_e[i0 - 1 : i0 + 1] = True

    # -- sources -----------------------------------------------------------

    def _e_inc(self, x, t):
        return self.source.waveform(t - (x - self.x_src) / C)

    # -- stepping ----------------------------------------------------------

    def magnetization(self, Y_override=None) -> np.ndarray:
        M = np.zeros(self.grid.n_cells)
        for k, s in enumerate(self.slabs):
            if s.magnetic:
                Y = s.Y if Y_override is None else Y_override[k]
                M[s.b_idx] += s.magnetization(Y)
        return M

    def polarization(self) -> np.ndarray:
        P = np.zeros(self.grid.n_cells + 1)
        for s in self.slabs:
            P[s.e_idx] += s.polarization()
        return P

    def polarization_rate(self) -> np.ndarray:
        Pd = np.zeros(self.grid.n_cells + 1)
        for s in self.slabs:
            Pd[s.e_idx] += s.polarization_rate()
        return Pd

    def step(self, count: int = 1) -> None:
        for _ in range(count):
            self._step_once()

    def _step_once(self):
        dx, dt = self.dx, self.dt
        M = self.magnetization()
        H = self.B / MU0 - M
        # integer-time set: D, X, Pi_Y
        self.D[1:-1] = self.caE[1:-1] * self.D[1:-1] - self.cbE[1:-1] * (H[1:] - H[:-1]) / dx
        if self.i_src is not None:
            t_half = self.t + 0.5 * dt
            xb = self.x_src - 0.5 * dx
            self.D[self.i_src] += dt / dx * self._e_inc(xb, t_half) / (MU0 * C)
        for s in self.slabs:
            s.X += dt * s.PiX
            if s.magnetic:
                s.PiY += dt * (np.outer(s.sB * self.B[s.b_idx], s.aB) - s.w2 * s.Y)
        self.t += dt
        self.n += 1
        self._P = P = self.polarization()
        self.E = (self.D - P) / EPS0
        if self.A is not None:
            self.A -= dt * self.E
        # half-time set: B, Pi_X, Y
        self._B_prev = self.B.copy()
        self._M_prev = M
        self._Pdot_prev = self._Pdot
        self.B = self.caB * self.B - self.cbB * (self.E[1:] - self.E[:-1]) / dx
        if self.i_src is not None:
            self.B[self.i_src - 1] += dt / dx * self._e_inc(self.x_src, self.t)
        for s in self.slabs:
            np.multiply(s.X, s.dt_w2, out=s.work)
            s.PiX -= s.work
            np.multiply.outer(dt * s.sE * self.E[s.e_idx], s.aE, out=s.work)
            s.PiX += s.work
            if s.magnetic:
                s.Y += dt * s.PiY
        self._Pdot = self.polarization_rate()
        if self.n % 64 == 0:
            self._check_stability()

    def _check_stability(self):
        norm = float(np.max(np.abs(self.E)) + C * np.max(np.abs(self.B)))
        if not math.isfinite(norm):
            raise InstabilityError(f"non-finite field at step {self.n}")
        amp = abs(self.source.amplitude) if self.source is not None else 0.0
        if self._norm_ref == 0.0 and amp == 0.0:
            self._norm_ref = norm
        ref = max(self._norm_ref, amp)
        if ref > 0 and norm > 1e6 * ref:
            raise InstabilityError(
                f"field norm grew {norm / ref:.3g}x by step {self.n}; check Courant and reservoir frequencies"
            )

    def excite_oscillator(self, slab: int, node: int, mode: int, amplitude: float) -> None:
        """Displace one electric oscillator at rest; velocity half-kicked consistently."""
        s = self.slabs[slab]
        s.X[node, mode] = amplitude
        s.PiX[node, mode] = -0.5 * self.dt * s.w2[mode] * amplitude
        self._refresh()
        self.E = (self.D - self._P) / EPS0

    # -- energy ------------------------------------------------------------

    def _previous_half(self):
        """Half-time variables one step back, by exact reversal of the last update."""
        dt = self.dt
        prev = []
        for s in self.slabs:
            PiXm = s.PiX - dt * (np.outer(s.sE * self.E[s.e_idx], s.aE) - s.w2 * s.X)
            Ym = s.Y - dt * s.PiY if s.magnetic else s.Y
            prev.append((PiXm, Ym))
        return self._B_prev, prev

    def energy_parts(self, e_mask=None, b_mask=None) -> dict:
        """Conserved discrete energy per area, split into field and reservoir parts.

        Masks restrict the sum to chosen E nodes and B nodes.
        """
        dx = self.dx
        ne, nb = self.grid.n_cells + 1, self.grid.n_cells
        em = np.ones(ne, bool) if e_mask is None else e_mask
        bm = np.ones(nb, bool) if b_mask is None else b_mask
        Bm, prev = self._previous_half()
        Yprev = [p[1] for p in prev]
        M = self.magnetization()
        Mm = self.magnetization(Yprev)
        electric = dx * np.sum((0.5 * EPS0 * self.E**2)[em])
        magnetic = dx * np.sum((0.5 * Bm * self.B / MU0 - 0.25 * (Mm * self.B + M * Bm))[bm])
        reservoir = 0.0
        for s, (PiXm, Ym) in zip(self.slabs, prev):
            sel = em[s.e_idx]
            reservoir += dx * 0.5 * np.sum((s.w2 * s.X**2)[sel] + (PiXm * s.PiX)[sel])
            if s.magnetic:
                selb = bm[s.b_idx]
                reservoir += dx * 0.5 * np.sum((s.PiY**2)[selb] + (s.w2 * Ym * s.Y)[selb])
        return {"electric": electric, "magnetic": magnetic, "reservoir": reservoir,
                "total": electric + magnetic + reservoir}

    def total_energy(self) -> float:
        return self.energy_parts()["total"]

    def region_energy(self, k_left: int, k_right: int) -> float:
        """Energy between two flux probes (E nodes k_left+1..k_right, B nodes k_left..k_right-1)."""
        ne = self.grid.n_cells + 1
        em = np.zeros(ne, bool)
        em[k_left + 1 : k_right + 1] = True
        bm = np.zeros(ne - 1, bool)
        bm[k_left:k_right] = True
        return self.energy_parts(em, bm)["total"]

    # -- observation -------------------------------------------------------

    def interfaces(self) -> tuple:
        return tuple(x for s in self.slabs for x in (s.slab.x_left, s.slab.x_right))

    def snapshot(self, oscillators: bool = False) -> Snapshot:
        """Co-located fields at the current integer time."""
        dx = self.dx
        Bm = self._B_prev
        prev = self._previous_half()[1] if (oscillators or self.n == 0) else None
        Bbar_half = 0.5 * (Bm + self.B)
        M = self.magnetization()
        Mbar_half = 0.5 * (self._M_prev + M) if self.n else M
        Pdot = 0.5 * (self._Pdot_prev + self._Pdot) if self.n else self._Pdot.copy()
        if self.n == 0:
            Pd_m = np.zeros_like(Pdot)
            for s, (PiXm, _) in zip(self.slabs, prev):
                Pd_m[s.e_idx] += s.sE * (PiXm @ s.aE)
            Pdot = 0.5 * (Pd_m + self._Pdot)
            Mbar_half = 0.5 * (self.magnetization([p[1] for p in prev]) + M)
        B = _to_nodes(Bbar_half)
        Mn = _to_nodes(Mbar_half)
        dMdx = np.zeros_like(B)
        dMdx[1:-1] = (Mbar_half[1:] - Mbar_half[:-1]) / dx
        osc = ()
        if oscillators:
            osc = tuple(
                {
                    "e_idx": s.e_idx.copy(),
                    "X": s.X.copy(),
                    "Pi": 0.5 * (PiXm + s.PiX),
                    "sE": s.sE.copy(),
                    "aE": s.aE.copy(),
                }
                for s, (PiXm, _) in zip(self.slabs, prev)
            )
        return Snapshot(
            n=self.n,
            t=self.t,
            x=self.grid.x_e,
            dx=dx,
            E=self.E.copy(),
            B=B,
            P=self._P.copy(),
            Pdot=Pdot,
            M=Mn,
            dMdx=dMdx,
            fill=self.fill_e.copy(),
            interfaces=self.interfaces(),
            oscillators=osc,
            # centring A at the integer time makes dA/dx match the averaged B
            A=None if self.A is None else self.A + 0.5 * self.dt * self.E,
            B_half=Bbar_half,
            exclude_e=self.exclude_e,
            exclude_b=self.exclude_b,
        )

    def flux(self, k: int, E_before: np.ndarray) -> float:
        """Poynting flux across probe k for the step just taken.

        ``E_before`` is E one step earlier; H at B node k is the half-step
        value between them.
        """
        H = self._B_prev[k] / MU0 - self._M_prev[k]
        return 0.5 * (E_before[k] + self.E[k]) * H


def _to_nodes(v: np.ndarray) -> np.ndarray:
    """Average a half-node array onto integer nodes (one-sided at the ends)."""
    out = np.empty(len(v) + 1)
    out[1:-1] = 0.5 * (v[1:] + v[:-1])
    out[0], out[-1] = v[0], v[-1]
    return out


# ---------------------------------------------------------------------------
# convenience wrappers


def step(sim: Simulation, count: int = 1) -> Simulation:
    sim.step(count)
    return sim


def total_energy(sim: Simulation) -> float:
    return sim.total_energy()


SNAPSHOT_COLUMNS = ("t", "x", "E", "B", "P", "M")


def snapshot_rows(snapshots: Sequence[Snapshot]) -> np.ndarray:
    """Stack snapshots into rows of (t, x, E, B, P, M), one row per node."""
    blocks = [
        np.column_stack([np.full(len(s.x), s.t), s.x, s.E, s.B, s.P, s.M]) for s in snapshots
    ]
    return np.concatenate(blocks) if blocks else np.empty((0, len(SNAPSHOT_COLUMNS)))


def write_snapshots(path, snapshots: Sequence[Snapshot], meta: dict | None = None) -> None:
    """Dump snapshots as CSV with ``#`` metadata lines; written atomically."""
    import csv
    import io

    from .output import write_atomic

    buf = io.StringIO()
    for key, val in (meta or {}).items():
        buf.write(f"# {key}={val}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SNAPSHOT_COLUMNS)
    for row in snapshot_rows(snapshots):
        w.writerow([repr(float(v)) for v in row])
    write_atomic(path, buf.getvalue())


def convective_rate(snap: Snapshot, velocity: float) -> np.ndarray:
    """First-order motional correction -v dP/dx to dP/dt, by centred differences.

    The solver holds the body at rest; this is a diagnostic of how large
    the dropped term would be for a body moving at ``velocity``.  Its
    discretization is not validated against any reference.
    """
    return -velocity * np.gradient(snap.P, snap.dx)


def convective_fraction(snap: Snapshot, velocity: float) -> float:
    """max |v dP/dx| over max |dP/dt|; 0 when the body is unpolarized."""
    scale = float(np.max(np.abs(snap.Pdot)))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(convective_rate(snap, velocity)))) / scale


# ---------------------------------------------------------------------------
# pulse experiment


@dataclass(frozen=True)
class PulseExperimentConfig:
    """A single slab illuminated by a pulse from the left.

    ``lossless`` replaces the continuum reservoir by one undamped
    oscillator per pole.  Otherwise the reservoir node count is raised
    until its recurrence time exceeds the run duration.
    """

    model: SusceptibilityModel
    slab_left: float
    slab_thickness: float
    grid: Grid1D
    source: PulseSource
    reservoir_nodes: int = 512
    lossless: bool = False
    duration: float | None = None
    pml_cells: int = 32
    max_reservoir_nodes: int = 16384
    snapshot_every: int = 0
    energy_every: int = 0
    separation_tol: float = 1e-4

    def __post_init__(self):
        if not self.slab_thickness > 0:
            raise ValidationError("slab thickness must be positive")
        if self.reservoir_nodes < 2 and not self.lossless:
            raise ValidationError("need at least two reservoir nodes")

    @property
    def slab_right(self) -> float:
        return self.slab_left + self.slab_thickness


@dataclass
class PulseResult:
    R: float
    T: float
    A: float
    incident_energy: float
    records: list
    snapshots: list
    energy: np.ndarray
    probes: tuple
    reservoir: ReservoirDiscretization
    steps: int

    @property
    def closure(self) -> float:
        return self.R + self.T + self.A - 1.0


def _default_duration(cfg: PulseExperimentConfig, x_probe_right: float) -> float:
    src = cfg.source
    w = src.carrier if src.carrier > 0 else 1.0 / src.width
    eps = complex(cfg.model.permittivity(w)) * complex(cfg.model.permeability(w))
    n_est = abs(np.sqrt(eps)) + 1.0
    return src.end_time + 1.2 * (x_probe_right - src.launch) / C + 6 * n_est * cfg.slab_thickness / C


def _probe_nodes(cfg: PulseExperimentConfig):
    g = cfg.grid
    x_pml_right = g.x_max - cfg.pml_cells * g.dx
    kl = g.node(0.5 * (cfg.source.launch + cfg.slab_left))
    kr = g.node(0.5 * (cfg.slab_right + x_pml_right))
    if not g.node(cfg.source.launch) < kl < g.node(cfg.slab_left) - 1:
        raise ValidationError("no room for a probe between source and slab")
    if not g.node(cfg.slab_right) + 1 < kr < g.n_cells - cfg.pml_cells:
        raise ValidationError("no room for a probe right of the slab")
    return kl, kr


def _run_fluxes(sim: Simulation, steps: int, probes, on_step=None):
    kl, kr = probes
    s_left = np.empty(steps)
    s_right = np.empty(steps)
    e_prev = np.zeros_like(sim.E)
    for n in range(steps):
        e_prev[kl], e_prev[kr] = sim.E[kl], sim.E[kr]
        sim.step()
        s_left[n] = sim.flux(kl, e_prev)
        s_right[n] = sim.flux(kr, e_prev)
        if on_step is not None:
            on_step(n + 1)
    return s_left, s_right


def run_pulse_experiment(cfg: PulseExperimentConfig) -> PulseResult:
    """Pulse through a slab: reflection, transmission, absorption and force history.

    Raises
    ------
    NonConvergenceError
        If the pulse has not cleared the slab region by the end time.
    InfeasibleError
        If the reservoir cannot cover the run duration within the node cap.
    """
    from .forces import ForceAccumulator

    g = cfg.grid
    probes = _probe_nodes(cfg)
    duration = cfg.duration or _default_duration(cfg, g.x_e[probes[1]])
    steps = int(math.ceil(duration / g.dt))
    if cfg.lossless:
        res = ReservoirDiscretization.lossless(cfg.model)
    else:
        # the bath only needs to stay quiet while light is in the slab
        arrival = max(duration - (cfg.slab_left - cfg.source.launch) / C, 0.0)
        res = discretize_reservoir(
            cfg.model, cfg.reservoir_nodes, horizon=arrival, max_nodes=cfg.max_reservoir_nodes
        )
    slab = Slab(cfg.slab_left, cfg.slab_right, cfg.model, res)

    ref = Simulation(g, [], cfg.source, pml_cells=cfg.pml_cells)
    ref_left, ref_right = _run_fluxes(ref, steps, probes)
    U0 = float(np.sum(ref_right) * g.dt)
    U_left_ref = float(np.sum(ref_left) * g.dt)
    if not U0 > 0:
        raise ValidationError("source injects no energy")

    sim = Simulation(g, [slab], cfg.source, pml_cells=cfg.pml_cells)
    acc = ForceAccumulator(cfg.slab_left, cfg.slab_right)
    snaps = []
    energy = []
    acc.add(sim.snapshot())

    def on_step(n):
        snap = sim.snapshot()
        acc.add(snap)
        if cfg.snapshot_every and n % cfg.snapshot_every == 0:
            snaps.append(snap)
        if cfg.energy_every and n % cfg.energy_every == 0:
            energy.append((sim.t, sim.region_energy(*probes)))

    s_left, s_right = _run_fluxes(sim, steps, probes, on_step)
    kl, kr = probes
    parts_e = np.zeros(g.n_cells + 1, bool)
    parts_e[kl + 1 : kr + 1] = True
    parts_b = np.zeros(g.n_cells, bool)
    parts_b[kl:kr] = True
    inside = sim.energy_parts(parts_e, parts_b)
    residual_field = inside["electric"] + inside["magnetic"]
    tail = max(abs(s_left[-1]), abs(s_right[-1])) * duration
    if residual_field > cfg.separation_tol * U0 or tail > cfg.separation_tol * U0:
        raise NonConvergenceError(
            f"pulse not separated at t = {duration:.3g} s "
            f"(field energy left between probes {residual_field / U0:.2e}, "
            f"probe flux tail {tail / U0:.2e} of incident)"
        )
    R = (U_left_ref - float(np.sum(s_left) * g.dt)) / U0
    T = float(np.sum(s_right) * g.dt) / U0
    A = inside["total"] / U0
    return PulseResult(
        R, T, A, U0, acc.records, snaps, np.array(energy).reshape(-1, 2), probes, res, steps
    )


@dataclass
class SteadyResult:
    """Cycle-averaged quantities under monochromatic illumination (per area)."""

    force: float
    surface: float
    R: float
    T: float
    intensity: float
    periods: int
    reservoir: ReservoirDiscretization


def run_steady_illumination(
    model: SusceptibilityModel,
    slab_left: float,
    thickness: float,
    grid: Grid1D,
    omega: float,
    *,
    amplitude: float = 1.0,
    ramp_periods: float = 8.0,
    settle_periods: float = 12.0,
    average_periods: int = 8,
    reservoir_nodes: int = 512,
    launch: float | None = None,
    pml_cells: int = 32,
    max_reservoir_nodes: int = 16384,
) -> SteadyResult:
    """Slab under a continuous wave; force, R and T averaged over whole periods."""
    from .forces import ForceAccumulator

    period = 2 * math.pi / omega
    if launch is None:
        launch = grid.x_min + (pml_cells + 8) * grid.dx
    src = ContinuousSource(omega, amplitude, launch, ramp_periods * period)
    t_start = (ramp_periods + settle_periods) * period + (slab_left - launch) / C
    t_end = t_start + average_periods * period
    res = discretize_reservoir(model, reservoir_nodes, horizon=t_end, max_nodes=max_reservoir_nodes)
    cfg = PulseExperimentConfig(model, slab_left, thickness, grid, PulseSource(omega, 1.0, 1.0, launch), pml_cells=pml_cells)
    probes = _probe_nodes(cfg)
    steps = int(math.ceil(t_end / grid.dt)) + 1

    sim = Simulation(grid, [Slab(slab_left, slab_left + thickness, model, res)], src, pml_cells=pml_cells)
    acc = ForceAccumulator(slab_left, slab_left + thickness)
    acc.add(sim.snapshot())
    s_left, s_right = _run_fluxes(sim, steps, probes, lambda n: acc.add(sim.snapshot()))
    ref = Simulation(grid, [], src, pml_cells=pml_cells)
    ref_left, _ = _run_fluxes(ref, steps, probes)

    def window_mean(t, y):
        # trapezoid mean over [t_start, t_end] with linear interpolation at the ends
        grid_t = np.linspace(t_start, t_end, 64 * average_periods + 1)
        v = np.interp(grid_t, t, y)
        return float(np.sum(0.5 * (v[1:] + v[:-1])) / (len(grid_t) - 1))

    t_flux = (np.arange(steps) + 0.5) * grid.dt
    inc = window_mean(t_flux, ref_left)
    R = (inc - window_mean(t_flux, s_left)) / inc
    T = window_mean(t_flux, s_right) / inc
    t_rec = np.array([r.t for r in acc.records])
    net = window_mean(t_rec, np.array([r.net for r in acc.records]))
    surf = window_mean(t_rec, np.array([r.surface for r in acc.records]))
    return SteadyResult(net, surf, R, T, src.intensity, average_periods, res)

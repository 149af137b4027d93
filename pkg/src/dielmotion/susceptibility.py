"""Causal susceptibilities, Kramers-Kronig transforms and oscillator reservoirs.

A body's linear response is described by sums of Lorentz poles,

    chi(W) = sum_k  wp_k**2 / (w0_k**2 - W**2 - i*gamma_k*W),

separately for the electric (``"E"``) and magnetic (``"B"``) families.
``chi`` is dimensionless: the electric family is measured in units of
eps0 and the magnetic family in units of 1/mu0, so that
``eps = eps0*(1 + chi_E)`` and ``1/mu = (1 - chi_B)/mu0``.

Any such response is reproduced exactly by a continuum of harmonic
oscillators coupled linearly to the field with strength
``alpha(w) = sqrt(2 w Im chi(w) / pi)``.  :func:`discretize_reservoir`
replaces the continuum by a Gauss-Legendre node set that the time-domain
solver can integrate.
"""

from __future__ import annotations

import configparser
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline

from .errors import InfeasibleError, NonConvergenceError, ValidationError

log = logging.getLogger(__name__)

FAMILIES = ("E", "B")


@dataclass(frozen=True)
class LorentzPole:
    """One damped resonance; all three parameters in rad/s."""

    plasma: float
    resonance: float
    damping: float

    def __post_init__(self):
        if not (self.plasma >= 0 and self.resonance >= 0):
            raise ValidationError(f"pole parameters must be non-negative: {self}")
        if not self.damping > 0:
            raise ValidationError(f"pole damping must be positive: {self}")

    def chi(self, omega):
        omega = np.asarray(omega, dtype=complex)
        return self.plasma**2 / (self.resonance**2 - omega**2 - 1j * self.damping * omega)


@dataclass(frozen=True)
class SusceptibilityModel:
    electric_poles: tuple[LorentzPole, ...] = ()
    magnetic_poles: tuple[LorentzPole, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "electric_poles", tuple(self.electric_poles))
        object.__setattr__(self, "magnetic_poles", tuple(self.magnetic_poles))

    def poles(self, family: str) -> tuple[LorentzPole, ...]:
        if family == "E":
            return self.electric_poles
        if family == "B":
            return self.magnetic_poles
        raise ValueError(f"family must be 'E' or 'B', got {family!r}")

    def chi(self, omega, family: str = "E"):
        """Unchecked evaluation of the pole sum (also valid for Im omega < 0)."""
        omega = np.asarray(omega, dtype=complex)
        out = np.zeros(omega.shape, dtype=complex)
        for pole in self.poles(family):
            out = out + pole.chi(omega)
        return out if out.ndim else complex(out)

    def permittivity(self, omega):
        """Relative permittivity 1 + chi_E."""
        return 1.0 + self.chi(omega, "E")

    def permeability(self, omega):
        """Relative permeability 1 / (1 - chi_B)."""
        return 1.0 / (1.0 - self.chi(omega, "B"))

    @property
    def is_vacuum(self) -> bool:
        return not (self.electric_poles or self.magnetic_poles)

    @property
    def is_magnetic(self) -> bool:
        return bool(self.magnetic_poles)


VACUUM = SusceptibilityModel(name="vacuum")


def lorentz_model(plasma, resonance, damping, name="") -> SusceptibilityModel:
    """Single electric Lorentz pole, non-magnetic."""
    return SusceptibilityModel((LorentzPole(plasma, resonance, damping),), (), name)


def eval_chi(model: SusceptibilityModel, omega, family: str = "E"):
    """chi(omega) for omega in the closed upper half plane.

    Raises
    ------
    ValidationError
        If any ``Im omega < 0``; the pole sum is only a causal response
        function in the upper half plane.
    """
    w = np.asarray(omega, dtype=complex)
    if np.any(w.imag < 0):
        raise ValidationError("chi is only defined for Im(omega) >= 0")
    return model.chi(w, family)


def coupling_alpha(model: SusceptibilityModel, omega, family: str = "E"):
    """Reservoir coupling sqrt(2 w Im chi(w) / pi) for real w >= 0."""
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise ValidationError("coupling is defined for omega >= 0")
    im = np.imag(model.chi(w, family))
    # passivity guarantees im >= 0; clip roundoff
    out = np.sqrt(np.clip(2.0 * w * im / np.pi, 0.0, None))
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# Kramers-Kronig


def _tail_integral(u_w, w_max, omega):
    # int_W^inf u(W) (W/w)^2 / (w^2 - Omega^2) dw
    x = omega / w_max
    if x < 0.1:
        series = sum(x ** (2 * k) / (2 * k + 3) for k in range(8))
        return u_w / w_max * series
    return u_w * w_max**2 / omega**2 * (
        math.log((w_max + omega) / (w_max - omega)) / (2 * omega) - 1.0 / w_max
    )


def _pv_integral(w, u, spline, omega, tail):
    """P int_0^W u(w) / (w^2 - omega^2) dw by singularity subtraction."""
    w_max = w[-1]
    u0 = float(spline(omega))
    h = w[1] - w[0]
    denom = w**2 - omega**2
    near = np.abs(w - omega) < 1e-8 * h
    with np.errstate(divide="ignore", invalid="ignore"):
        f = (u - u0) / denom
    if np.any(near):
        if omega > 0:
            f[near] = float(spline(omega, 1)) / (2 * omega)
        else:
            f[near] = float(spline(omega, 2)) / 2.0
    if omega > 0:
        log_term = math.log((w_max - omega) / (w_max + omega)) / (2 * omega)
    else:
        log_term = -1.0 / w_max
    total = simpson(f, x=w) + u0 * log_term
    if tail:
        total += _tail_integral(u[-1], w_max, omega)
    return total


def kk_real_from_imag(
    omega_grid,
    imag_samples,
    Omega,
    *,
    parity: str = "odd",
    tail: bool = True,
    tol: float | None = None,
    return_error: bool = False,
):
    """Real part of a causal response from tabulated imaginary part.

    For ``parity="odd"`` (Im part odd in frequency, the susceptibility case)

        Re chi(W) = (2/pi) P int_0^inf w Im chi(w) / (w^2 - W^2) dw.

    For ``parity="even"`` (Im part even, Re part odd) the kernel becomes
    ``(2W/pi) P int Im h(w) / (w^2 - W^2) dw``.

    The singular point is removed by subtracting the integrand's value at
    ``W`` (taken from a cubic spline through the samples) and adding the
    closed-form principal value of the subtracted term; the remainder is
    integrated with Simpson's rule on the sample grid.  Beyond the last
    sample the numerator is continued as ``w**-2``, the asymptotic decay of
    any pole sum.

    Parameters
    ----------
    omega_grid : array
        Uniform grid starting at 0.
    imag_samples : array
        Im chi on ``omega_grid``.
    Omega : float or array
        Real evaluation frequencies inside the grid.
    tol : float, optional
        Absolute tolerance on the error estimate (difference between the
        full grid and every second sample).  Exceeding it raises
        :class:`NonConvergenceError`.
    return_error : bool
        Also return the error estimate.
    """
    w = np.asarray(omega_grid, dtype=float)
    im = np.asarray(imag_samples, dtype=float)
    if w.ndim != 1 or w.shape != im.shape or len(w) < 5:
        raise ValidationError("need matching 1-D grids with at least 5 samples")
    if w[0] != 0.0 or np.any(np.diff(w) <= 0):
        raise ValidationError("grid must start at 0 and increase")
    if parity not in ("odd", "even"):
        raise ValueError("parity must be 'odd' or 'even'")
    if len(w) % 2 == 0:
        # simpson is exact-order only on an odd point count; drop the last sample
        w, im = w[:-1], im[:-1]

    u = w * im if parity == "odd" else im
    spline = CubicSpline(w, u)
    coarse = CubicSpline(w[::2], u[::2])

    omegas = np.atleast_1d(np.asarray(Omega, dtype=float))
    if np.any(omegas < 0) or np.any(omegas >= w[-1]):
        raise ValidationError("Omega must lie inside [0, omega_max)")

    values = np.empty(omegas.shape)
    errors = np.empty(omegas.shape)
    for k, om in enumerate(omegas):
        fine = _pv_integral(w, u, spline, om, tail)
        rough = _pv_integral(w[::2], u[::2], coarse, om, tail)
        scale = 2.0 / math.pi if parity == "odd" else 2.0 * om / math.pi
        values[k] = scale * fine
        errors[k] = abs(scale * (fine - rough)) / 15.0

    if tol is not None and np.any(errors > tol):
        worst = int(np.argmax(errors))
        raise NonConvergenceError(
            f"KK error estimate {errors[worst]:.3g} > {tol:.3g} at Omega={omegas[worst]:.6g}; "
            "refine the grid"
        )
    if np.ndim(Omega) == 0:
        values, errors = float(values[0]), float(errors[0])
    return (values, errors) if return_error else values


# ---------------------------------------------------------------------------
# Reservoir discretization


@dataclass(frozen=True)
class ReservoirDiscretization:
    """Finite oscillator set standing in for the continuum reservoir.

    ``couplings[family]`` holds ``a_j = alpha(w_j) * sqrt(w_j_weight)``,
    so that ``P = sum_j a_j X_j`` and ``X_j'' + w_j**2 X_j = a_j E``.
    Couplings are in model units (dimensionless chi); the time-domain
    solver rescales them by sqrt(eps0) or 1/sqrt(mu0).
    """

    nodes: np.ndarray
    weights: np.ndarray
    couplings: dict = field(default_factory=dict)
    omega_max: float = 0.0
    requested: int = 0

    @property
    def count(self) -> int:
        return len(self.nodes)

    @property
    def recurrence_time(self) -> float:
        if self.count < 2:
            return math.inf
        return 2 * math.pi / float(np.max(np.diff(self.nodes)))

    @classmethod
    def lossless(cls, model: SusceptibilityModel) -> "ReservoirDiscretization":
        """One oscillator per pole: the undamped limit of each Lorentz pole.

        Reproduces ``chi = sum wp^2/(w0^2 - W^2)`` exactly, ignoring damping.
        Useful for transparent slabs where a continuum discretization of a
        near-delta Im chi would be wasteful.
        """
        entries = [(p.resonance, p.plasma, fam) for fam in FAMILIES for p in model.poles(fam)]
        if any(w0 <= 0 for w0, _, _ in entries):
            raise ValidationError("lossless reservoir needs positive resonance frequencies")
        nodes = np.array([w0 for w0, _, _ in entries])
        couplings = {}
        for fam in FAMILIES:
            a = np.array([wp if f == fam else 0.0 for _, wp, f in entries])
            if np.any(a):
                couplings[fam] = a
        return cls(nodes, np.zeros(len(nodes)), couplings, float(nodes.max(initial=0.0)), len(nodes))

    def coupling(self, family: str) -> np.ndarray:
        return self.couplings.get(family, np.zeros(self.count))

    def response(self, omega, family: str = "E", eta: float = 0.0):
        """Susceptibility of the discrete oscillator set at (complex) omega."""
        a2 = self.coupling(family) ** 2
        om = np.asarray(omega, dtype=complex)[..., None] + 1j * eta
        return np.sum(a2 / (self.nodes**2 - om**2), axis=-1)

    def impulse_response(self, t, family: str = "E"):
        """P(t) for E(t) = delta(t): sum_j a_j^2 sin(w_j t) / w_j."""
        t = np.asarray(t, dtype=float)[..., None]
        a2 = self.coupling(family) ** 2
        return np.sum(a2 * np.sin(self.nodes * t) / self.nodes, axis=-1) * (t[..., 0] >= 0)


def choose_omega_max(model: SusceptibilityModel, rel: float = 1e-6, family=None) -> float:
    """Smallest frequency beyond which Im chi stays below ``rel`` of its maximum."""
    families = [family] if family else [f for f in FAMILIES if model.poles(f)]
    if not families:
        return 0.0
    top = max(p.resonance + p.damping + p.plasma for f in families for p in model.poles(f))
    grid = np.linspace(0.0, 20 * top, 40001)[1:]
    best = 0.0
    for fam in families:
        im = np.imag(model.chi(grid, fam))
        peak = im.max()
        above = np.nonzero(im >= rel * peak)[0]
        w_hi = grid[above[-1]]
        # Lorentz tails fall like w**-3; extend analytically past the scan
        if above[-1] == len(grid) - 1:
            w_hi = grid[-1] * (im[-1] / (rel * peak)) ** (1 / 3)
        best = max(best, w_hi)
    return float(best)


def _gauss_legendre(n, w_max):
    x, wts = np.polynomial.legendre.leggauss(n)
    return 0.5 * w_max * (x + 1.0), 0.5 * w_max * wts


def discretize_reservoir(
    model: SusceptibilityModel,
    N: int,
    omega_max: float | None = None,
    horizon: float | None = None,
    *,
    max_nodes: int = 16384,
    cutoff: float = 1e-6,
) -> ReservoirDiscretization:
    """Gauss-Legendre discretization of the oscillator continuum on [0, omega_max].

    If ``horizon`` is given the node count is doubled until the recurrence
    time ``2*pi/max(spacing)`` exceeds it; the widest spacing controls
    when the discrete bath first re-emits absorbed energy.

    Raises
    ------
    InfeasibleError
        If the horizon needs more than ``max_nodes`` nodes.
    """
    if N < 2:
        raise ValidationError("need at least two reservoir nodes")
    if model.is_vacuum:
        return ReservoirDiscretization(np.zeros(0), np.zeros(0), {}, 0.0, N)
    if omega_max is None:
        omega_max = choose_omega_max(model, cutoff)
    n = N
    while True:
        nodes, weights = _gauss_legendre(n, omega_max)
        if horizon is None or 2 * math.pi / np.max(np.diff(nodes)) > horizon:
            break
        n *= 2
        if n > max_nodes:
            raise InfeasibleError(
                f"horizon {horizon:.3g} s needs more than {max_nodes} reservoir nodes"
            )
    if n != N:
        log.info("reservoir node count raised from %d to %d for horizon %.3g", N, n, horizon)
    couplings = {
        fam: coupling_alpha(model, nodes, fam) * np.sqrt(weights)
        for fam in FAMILIES
        if model.poles(fam)
    }
    return ReservoirDiscretization(nodes, weights, couplings, float(omega_max), N)


def drive_reservoir(disc: ReservoirDiscretization, dt: float, E, family: str = "E"):
    """Polarization history of the discrete bath driven by sampled field ``E``.

    Leapfrog integration of ``X'' + w^2 X = a E`` with ``X(0) = X'(0) = 0``;
    returns ``P_n = sum_j a_j X_j(t_n)`` on the same samples as ``E``.
    """
    a = disc.coupling(family)
    w2 = disc.nodes**2
    X = np.zeros(disc.count)
    V = np.zeros(disc.count)
    E = np.asarray(E, dtype=float)
    P = np.empty(len(E))
    # half kick at start
    V += 0.5 * dt * (a * E[0] - w2 * X)
    for n in range(len(E)):
        P[n] = a @ X
        X += dt * V
        if n + 1 < len(E):
            V += dt * (a * E[n + 1] - w2 * X)
    return P


def lorentz_impulse_response(model: SusceptibilityModel, t, family: str = "E"):
    """Closed-form time-domain response of the pole sum to E = delta(t)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    for p in model.poles(family):
        disc = p.resonance**2 - p.damping**2 / 4
        decay = np.exp(-p.damping * np.clip(t, 0, None) / 2)
        if disc > 0:
            nu = math.sqrt(disc)
            out += p.plasma**2 * decay * np.sin(nu * t) / nu
        elif disc < 0:
            nu = math.sqrt(-disc)
            out += p.plasma**2 * decay * np.sinh(nu * t) / nu
        else:
            out += p.plasma**2 * decay * t
    return out * (t >= 0)


# ---------------------------------------------------------------------------
# Model files


def _section_family(name: str) -> str | None:
    head = name.split(".")[0].strip().lower()
    return {"electric": "E", "e": "E", "magnetic": "B", "b": "B"}.get(head)


def load_model(path: str | Path) -> SusceptibilityModel:
    """Read a model file of ``[electric.N]`` / ``[magnetic.N]`` pole sections.

    Each section needs ``plasma``, ``resonance`` and ``damping`` (rad/s).
    An optional ``[model]`` section may carry ``name`` and a common
    ``scale`` multiplying every frequency.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"model file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from exc
    scale = parser.getfloat("model", "scale", fallback=1.0)
    name = parser.get("model", "name", fallback=path.stem)
    poles = {"E": [], "B": []}
    for section in parser.sections():
        if section == "model":
            continue
        fam = _section_family(section)
        if fam is None:
            raise ValidationError(f"{path}: unknown section [{section}]")
        sec = parser[section]
        try:
            pole = LorentzPole(
                scale * float(sec["plasma"]),
                scale * float(sec["resonance"]),
                scale * float(sec["damping"]),
            )
        except KeyError as exc:
            raise ValidationError(f"{path}: [{section}] missing {exc}") from exc
        except ValueError as exc:
            raise ValidationError(f"{path}: [{section}] {exc}") from exc
        poles[fam].append(pole)
    return SusceptibilityModel(tuple(poles["E"]), tuple(poles["B"]), name)


def dump_model(model: SusceptibilityModel) -> str:
    lines = [f"[model]\nname = {model.name}\n"]
    for fam, head in (("E", "electric"), ("B", "magnetic")):
        for k, p in enumerate(model.poles(fam), 1):
            lines.append(
                f"[{head}.{k}]\nplasma = {p.plasma!r}\nresonance = {p.resonance!r}\n"
                f"damping = {p.damping!r}\n"
            )
    return "\n".join(lines)


def check_passive(model: SusceptibilityModel, omegas: Sequence[float]) -> bool:
    """True if Im chi > 0 at every sampled positive frequency, for every family."""
    w = np.asarray(omegas, dtype=float)
    return all(np.all(np.imag(model.chi(w, f)) > 0) for f in FAMILIES if model.poles(f))

"""Centre-of-mass wave packet of a body coupled to the vacuum field.

Covers free Gaussian spreading, the pair-creation factor ``F(t, W, W')``
that weights first-order corrections, the resulting fluctuation envelope,
and Ehrenfest-level mean accelerations.  All quantities are ordinary
complex-valued functions; no operator algebra is represented.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .constants import HBAR
from .errors import NonConvergenceError, ValidationError
from .susceptibility import SusceptibilityModel, eval_chi


@dataclass(frozen=True)
class WavePacketParams:
    mass: float
    alpha: float
    center: float = 0.0

    def __post_init__(self):
        if not (self.mass > 0 and self.alpha > 0):
            raise ValidationError("mass and alpha must be positive")

    @property
    def kappa(self) -> float:
        """hbar*alpha/M [1/s]."""
        return HBAR * self.alpha / self.mass


@dataclass(frozen=True)
class FluctuationKernel:
    """Frequency weight for the envelope quadrature.

    Either ``weight`` (one-frequency W, separable kernel W(W1)W(W2)) or
    ``matrix`` (tabulated S(W1, W2)) is given, on the grid ``omega``.
    """

    omega: np.ndarray
    weight: np.ndarray | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float)
        object.__setattr__(self, "omega", om)
        if om.ndim != 1 or om.size < 3 or np.any(np.diff(om) <= 0) or om[0] <= 0:
            raise ValidationError("omega grid must be positive, increasing, with >= 3 points")
        if (self.weight is None) == (self.matrix is None):
            raise ValidationError("give exactly one of weight or matrix")
        if self.weight is not None:
            w = np.asarray(self.weight, dtype=float)
            if w.shape != om.shape or np.any(w < 0) or not np.all(np.isfinite(w)):
                raise ValidationError("weight must be finite, non-negative, on the grid")
            object.__setattr__(self, "weight", w)
        else:
            s = np.asarray(self.matrix, dtype=float)
            if s.shape != (om.size, om.size) or not np.all(np.isfinite(s)):
                raise ValidationError("matrix must be finite and square on the grid")
            if not np.allclose(s, s.T, rtol=1e-12, atol=0):
                raise ValidationError("two-frequency kernel must be symmetric")
            object.__setattr__(self, "matrix", s)

    @property
    def separable(self) -> bool:
        return self.weight is not None

    def as_matrix(self) -> np.ndarray:
        return np.outer(self.weight, self.weight) if self.separable else self.matrix

    @classmethod
    def from_model(cls, model: SusceptibilityModel, omega, family: str = "E", scale: float = 1.0):
        """Default kernel: W proportional to W*Im chi(W), unit integral times ``scale``."""
        om = np.asarray(omega, dtype=float)
        w = om * np.imag(eval_chi(model, om, family))
        norm = trapezoid(w, om)
        if not norm > 0:
            raise ValidationError("model has no absorption on the grid")
        return cls(om, weight=scale * w / norm)


@dataclass(frozen=True)
class PacketDiagnostics:
    t: np.ndarray
    variance: np.ndarray
    mean_shift: np.ndarray
    envelope: np.ndarray
    envelope_error: float = 0.0

    def rows(self):
        return np.column_stack([self.t, self.variance, self.mean_shift, self.envelope])


def spreading_time(mass: float, alpha: float) -> float:
    """Time M/(hbar*alpha) after which the position variance has doubled."""
    if not (mass > 0 and alpha > 0):
        raise ValidationError("mass and alpha must be positive")
    return mass / (HBAR * alpha)


def packet_variance(params: WavePacketParams, t):
    """Position variance of the freely spreading Gaussian packet [m^2]."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValidationError("t must be non-negative")
    s = t * params.kappa
    return (1 + s * s) / (2 * params.alpha)


def f_factor(t, omega1, omega2, kappa):
    """Pair-creation factor F(t, W1, W2) for packet parameter ``kappa``.

    Vectorized over broadcastable arguments.  Exactly zero at t = 0.
    """
    t = np.asarray(t, dtype=float)
    theta = np.asarray(omega1, dtype=float) + np.asarray(omega2, dtype=float)
    return _f_theta(t, theta, kappa)


def _expm1_i_minus_linear(x):
    """e^{ix} - 1 - ix without cancellation at small x."""
    x = np.asarray(x, dtype=float)
    re = -2 * np.sin(0.5 * x) ** 2
    small = np.abs(x) < 0.5
    xs = np.where(small, x, 0.0)
    x2 = xs * xs
    # odd Taylor tail of sin(x) - x, Horner form, error below 1e-15 relative
    series = -xs * x2 / 6 * (1 - x2 / 20 * (1 - x2 / 42 * (1 - x2 / 72 * (1 - x2 / 110 * (1 - x2 / 156)))))
    im = np.where(small, series, np.sin(x) - x)
    return re + 1j * im


def _f_theta(t, theta, kappa):
    # F = i theta t + w (1 + i kappa t - kappa/theta) / (1 + i kappa t) with
    # w = e^{i theta t} - 1 - i theta t; the O(t) parts cancel analytically
    x = theta * t
    w = _expm1_i_minus_linear(x)
    d = 1 + 1j * kappa * t
    return 1j * x + w * (d - kappa / theta) / d


def f_factor_bound(omega1, omega2, kappa):
    """Triangle-inequality bound 2 + 2 kappa/(W1 + W2) on |F|."""
    return 2 + 2 * kappa / (np.asarray(omega1) + np.asarray(omega2))


def _theta_density(kernel: FluctuationKernel):
    """Kernel mass per unit theta = W1 + W2 on a uniform theta grid.

    Only valid on a uniform omega grid; used for separable kernels where
    the density is the autoconvolution of W.
    """
    om = kernel.omega
    h = om[1] - om[0]
    w = kernel.weight
    # trapezoid weights make the discrete autoconvolution consistent with
    # the 2D trapezoid rule
    tw = np.full(om.size, h)
    tw[0] = tw[-1] = h / 2
    conv = np.convolve(w * tw, w * tw)
    theta = 2 * om[0] + h * np.arange(conv.size)
    return theta, conv


def _uniform(om):
    d = np.diff(om)
    return np.allclose(d, d[0], rtol=1e-9, atol=0)


def _envelope_direct(kernel: FluctuationKernel, kappa: float, t) -> np.ndarray:
    om = kernel.omega
    S = kernel.as_matrix()
    theta = om[:, None] + om[None, :]
    out = np.empty(len(t))
    for i, ti in enumerate(t):
        integrand = S * np.abs(_f_theta(ti, theta, kappa)) / (HBAR * theta)
        out[i] = trapezoid(trapezoid(integrand, om, axis=1), om)
    return out


def _envelope_separable(kernel: FluctuationKernel, kappa: float, t) -> np.ndarray:
    theta, mass = _theta_density(kernel)
    f = np.abs(_f_theta(np.asarray(t)[:, None], theta[None, :], kappa))
    return (f * (mass / (HBAR * theta))[None, :]).sum(axis=1)


def _envelope(kernel, kappa, t):
    if kernel.separable and _uniform(kernel.omega):
        return _envelope_separable(kernel, kappa, t)
    return _envelope_direct(kernel, kappa, t)


def _coarsen(kernel: FluctuationKernel) -> FluctuationKernel:
    n = kernel.omega.size
    idx = np.arange(0, n, 2) if n % 2 else np.arange(0, n - 1, 2)
    if kernel.separable:
        return FluctuationKernel(kernel.omega[idx], weight=kernel.weight[idx])
    return FluctuationKernel(kernel.omega[idx], matrix=kernel.matrix[np.ix_(idx, idx)])


def fluctuation_envelope(
    kernel: FluctuationKernel,
    params: WavePacketParams,
    t,
    *,
    tol: float | None = None,
    return_error: bool = False,
):
    """Envelope A(t) = int int S |F| / (hbar (W1 + W2)) over the kernel grid.

    Separable kernels on a uniform grid reduce to a 1D sum over
    theta = W1 + W2 because F depends on the two frequencies only through
    their sum.  The error estimate compares against the grid with every
    second node dropped.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValidationError("t must be non-negative")
    kappa = params.kappa
    fine = _envelope(kernel, kappa, t)
    coarse = _envelope(_coarsen(kernel), kappa, t)
    err = float(np.max(np.abs(fine - coarse))) if t.size else 0.0
    scale = float(np.max(np.abs(fine))) if t.size else 0.0
    if tol is not None and err > tol * max(scale, 1e-300):
        raise NonConvergenceError(f"envelope quadrature error {err:.3g} exceeds tolerance")
    return (fine, err) if return_error else fine


def envelope_direct(kernel: FluctuationKernel, params: WavePacketParams, t) -> np.ndarray:
    """Plain 2D trapezoid evaluation of the envelope, for cross-checks."""
    return _envelope_direct(kernel, params.kappa, np.atleast_1d(np.asarray(t, dtype=float)))


def oscillation_period(t, signal) -> float:
    """Median spacing of interior local minima of a sampled signal."""
    s = np.asarray(signal)
    interior = (s[1:-1] < s[:-2]) & (s[1:-1] <= s[2:])
    idx = np.nonzero(interior)[0] + 1
    if idx.size < 2:
        raise NonConvergenceError("fewer than two minima; extend the time window")
    tm = []
    tt = np.asarray(t)
    for i in idx:
        # parabolic refinement of each minimum
        y0, y1, y2 = s[i - 1], s[i], s[i + 1]
        den = y0 - 2 * y1 + y2
        shift = 0.5 * (y0 - y2) / den if den != 0 else 0.0
        tm.append(tt[i] + shift * (tt[i + 1] - tt[i]))
    return float(np.median(np.diff(tm)))


def absorption_peak(model: SusceptibilityModel, omega, family: str = "E") -> float:
    """Frequency at which Im chi is largest on the grid (parabolic refinement)."""
    om = np.asarray(omega, dtype=float)
    im = np.imag(eval_chi(model, om, family))
    i = int(np.argmax(im))
    if 0 < i < om.size - 1:
        y0, y1, y2 = im[i - 1], im[i], im[i + 1]
        den = y0 - 2 * y1 + y2
        if den != 0:
            return float(om[i] + 0.5 * (y0 - y2) / den * (om[i + 1] - om[i]))
    return float(om[i])


def mean_acceleration(source, params: WavePacketParams, area: float | None = None):
    """Ehrenfest mean acceleration F/M.

    ``source`` is a force in N (float or array), a sequence of force
    records carrying ``net`` [N/m^2], or a Casimir result carrying
    ``pressure`` [Pa]; the latter two need the body ``area``.
    """
    if hasattr(source, "pressure"):
        if area is None:
            raise ValidationError("area is required for a pressure source")
        return source.pressure * area / params.mass
    if isinstance(source, (list, tuple)) and source and hasattr(source[0], "net"):
        if area is None:
            raise ValidationError("area is required for force records")
        return np.array([r.net for r in source]) * area / params.mass
    if hasattr(source, "net"):
        if area is None:
            raise ValidationError("area is required for force records")
        return source.net * area / params.mass
    return np.asarray(source, dtype=float) / params.mass if np.ndim(source) else float(source) / params.mass


def ordering_channel(gamma_of_r, r0: float, h: float) -> float:
    """Central-difference divergence dGamma/dR at ``r0``, reported separately."""
    if not h > 0:
        raise ValidationError("step must be positive")
    return (gamma_of_r(r0 + h) - gamma_of_r(r0 - h)) / (2 * h)


def packet_diagnostics(
    params: WavePacketParams,
    t,
    kernel: FluctuationKernel | None = None,
    acceleration: float = 0.0,
) -> PacketDiagnostics:
    """Variance, mean shift under constant acceleration, and envelope."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    var = packet_variance(params, t)
    shift = 0.5 * acceleration * t * t
    if kernel is None:
        env, err = np.zeros_like(t), 0.0
    else:
        env, err = fluctuation_envelope(kernel, params, t, return_error=True)
    return PacketDiagnostics(t, var, shift, env, err)

"""Zero-temperature vacuum stress and Casimir pressures of planar stacks.

The xx component of the regularized vacuum stress in a vacuum layer is

    sigma_xx = (hbar/pi) int_0^inf dxi int d^2k/(2 pi)^2 * 2 pi
               sum_p (kappa^2 g_p - d_x d_x' g_p) / 2,

with ``g_p`` the reflected scalar Green function at imaginary frequency.
The single-reflection terms cancel identically in the combination
``kappa^2 g - d_x d_x' g``, leaving ``kappa r_L r_R exp(-2 kappa d)/D``
per polarization: the stress is uniform across the gap and vanishes in
a half-space.  Positive ``sigma_xx`` is tension.

Integration runs in polar variables ``xi = c kappa cos(theta)``,
``kpar = kappa sin(theta)``: Gauss-Laguerre in ``2 kappa L`` (L the gap
width) and Gauss-Legendre in theta.  No node sits at ``xi = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C, HBAR
from .errors import NonConvergenceError, ValidationError
from .greens import LayerStack, POLARIZATIONS, _side_reflections, gap_stack, slab_stack
from .susceptibility import VACUUM, SusceptibilityModel


@dataclass(frozen=True)
class QuadratureSpec:
    n_kappa: int = 48
    n_theta: int = 32

    def __post_init__(self):
        if self.n_kappa < 2 or self.n_theta < 2:
            raise ValidationError("quadrature needs at least two nodes per axis")
        if self.n_kappa > 160:
            raise ValidationError("Gauss-Laguerre weights underflow beyond 160 nodes")

    def doubled(self) -> "QuadratureSpec":
        return QuadratureSpec(min(2 * self.n_kappa, 160), 2 * self.n_theta)


@dataclass(frozen=True)
class CasimirResult:
    """Pressure on the right-hand body in Pa; negative means attraction."""

    pressure: float
    error: float
    separation: float
    quadrature: QuadratureSpec


def _stress_channel(stack: LayerStack, m: int, x: float, xi: float, kpar: float) -> float:
    """sum_p (kappa^2 g_p - d2g_p)/2 at one (xi, kpar) for vacuum layer m."""
    left, right = stack.bounds(m)
    a, b, d = x - left, right - x, right - left
    total = 0.0
    for pol in POLARIZATIONS:
        r_l, r_r, kz = _side_reflections(stack, m, 1j * xi, kpar, pol)
        kappa = kz.imag
        r_l, r_r = r_l.real, r_r.real
        # a half-infinite side has no reflector, so its terms drop out
        ed = 0.0 if math.isinf(d) else math.exp(-2 * kappa * d)
        den = 1 - r_l * r_r * ed
        # kappa^2 g - d2g with g, d2g from the reflected Green function
        el = 0.0 if math.isinf(a) else r_l * math.exp(-2 * kappa * a)
        er = 0.0 if math.isinf(b) else r_r * math.exp(-2 * kappa * b)
        g = (el + er + 2 * r_l * r_r * ed) / (2 * kappa * den)
        d2g = kappa * (el + er - 2 * r_l * r_r * ed) / (2 * den)
        total += 0.5 * (kappa**2 * g - d2g)
    return total


def _nodes(quad: QuadratureSpec, length: float):
    y, wy = np.polynomial.laguerre.laggauss(quad.n_kappa)
    th, wt = np.polynomial.legendre.leggauss(quad.n_theta)
    th = 0.25 * math.pi * (th + 1)
    wt = 0.25 * math.pi * wt
    kappa = y / (2 * length)
    # dkappa = dy/(2L); undo the exp(-y) weight
    wk = wy * np.exp(y) / (2 * length)
    return kappa, wk, th, wt


def _stress_once(stack: LayerStack, m: int, x: float, quad: QuadratureSpec, length: float) -> float:
    kappa, wk, th, wt = _nodes(quad, length)
    acc = 0.0
    for kap, w1 in zip(kappa, wk):
        inner = 0.0
        for t, w2 in zip(th, wt):
            xi = C * kap * math.cos(t)
            kp = kap * math.sin(t)
            inner += w2 * math.sin(t) * _stress_channel(stack, m, x, xi, kp)
        acc += w1 * kap**2 * inner
    # dxi dk = c kappa dkappa dtheta; k dk -> kappa sin(theta) * c kappa
    return HBAR * C / (2 * math.pi**2) * acc


def vacuum_stress_xx(
    stack: LayerStack,
    x: float,
    quad: QuadratureSpec = QuadratureSpec(),
    *,
    tol: float | None = None,
    return_error: bool = False,
):
    """Regularized vacuum stress sigma_xx at a point of a vacuum layer.

    The quadrature is evaluated at ``quad`` and at doubled node counts; the
    doubled value is returned and their difference is the error estimate.

    Raises
    ------
    ValidationError
        If ``x`` is on an interface or inside a non-vacuum layer.
    NonConvergenceError
        If ``tol`` is given and the relative error estimate exceeds it.
    """
    m = stack.layer_index(x)
    if not stack.layers[m].model.is_vacuum:
        raise ValidationError("stress is only evaluated in vacuum layers")
    left, right = stack.bounds(m)
    width = right - left
    if math.isinf(width):
        length = max(abs(x - left) if not math.isinf(left) else abs(right - x), 1e-30)
    else:
        length = width
    coarse = _stress_once(stack, m, x, quad, length)
    fine = _stress_once(stack, m, x, quad.doubled(), length)
    err = abs(fine - coarse)
    if tol is not None and err > tol * max(abs(fine), 1e-300):
        raise NonConvergenceError(f"stress quadrature error {err:.3g} exceeds tolerance")
    return (fine, err) if return_error else fine


def casimir_pressure_halfspaces(
    model_left: SusceptibilityModel,
    model_right: SusceptibilityModel,
    separation: float,
    quad: QuadratureSpec = QuadratureSpec(),
    *,
    tol: float | None = None,
) -> CasimirResult:
    """Pressure on the right half-space across a vacuum gap.

    Outside stresses vanish in half-spaces, so the pressure is minus the
    gap stress.
    """
    if not separation > 0:
        raise ValidationError("separation must be positive")
    stack = gap_stack(model_left, model_right, separation)
    s, err = vacuum_stress_xx(stack, 0.5 * separation, quad, tol=tol, return_error=True)
    return CasimirResult(-s, err, separation, quad)


def slab_pair_pressure(
    model: SusceptibilityModel,
    thickness: float,
    separation: float,
    quad: QuadratureSpec = QuadratureSpec(),
    *,
    tol: float | None = None,
) -> CasimirResult:
    """Pressure on the right slab of two identical slabs in vacuum.

    Difference of the stresses on the two faces of the right slab, which
    equals minus the gap stress since the outer half-space carries none.
    """
    if not (thickness > 0 and separation > 0):
        raise ValidationError("thickness and separation must be positive")
    stack = LayerStack.from_models([VACUUM, model, VACUUM, model, VACUUM], [thickness, separation, thickness])
    x_gap = thickness + 0.5 * separation
    x_out = 2 * thickness + 1.5 * separation
    s_gap, e1 = vacuum_stress_xx(stack, x_gap, quad, tol=tol, return_error=True)
    s_out, e2 = vacuum_stress_xx(stack, x_out, quad, return_error=True)
    return CasimirResult(s_out - s_gap, e1 + e2, separation, quad)


def net_vacuum_force_isolated(model: SusceptibilityModel, thickness: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Net vacuum force per area on a single slab in vacuum (should vanish)."""
    stack = slab_stack(model, thickness)
    s_left = vacuum_stress_xx(stack, -0.5 * thickness, quad)
    s_right = vacuum_stress_xx(stack, 1.5 * thickness, quad)
    return s_right - s_left


def perfect_mirror_pressure(separation: float) -> float:
    """Ideal-conductor pressure -pi^2 hbar c / (240 d^4)."""
    return -(math.pi**2) * HBAR * C / (240 * separation**4)


def scan_pressure(model_left, model_right, separations, quad: QuadratureSpec = QuadratureSpec(), tol=None):
    return [casimir_pressure_halfspaces(model_left, model_right, d, quad, tol=tol) for d in separations]

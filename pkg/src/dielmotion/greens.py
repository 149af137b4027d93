"""Green functions of planar multilayers.

Layers are stacked along x.  For each transverse wavevector ``kpar`` the
field problem separates into TE and TM polarizations, each governed by a
scalar Green function of the 1-D Helmholtz operator inside a layer

    g(x, x') = i/(2 kz) [exp(i kz |x - x'|) + reflected part],

with ``kz = sqrt(eps mu Omega^2/c^2 - kpar^2)`` on the branch Im kz >= 0.
The regularized Green function is the reflected part alone: the
homogeneous-medium term built from the local layer's eps and mu is
subtracted.  On the imaginary axis ``Omega = i xi`` everything is real and
``kz = i kappa`` with ``kappa = sqrt(eps mu xi^2/c^2 + kpar^2)``.

Reflection coefficients use the Airy recursion, which only ever
multiplies by ``exp(2 i kz d)``; on the imaginary axis those factors are
``exp(-2 kappa d) <= 1`` so thick layers cannot overflow.  TE
coefficients refer to the electric field and TM coefficients to the
magnetic field, so at normal incidence ``r_TM = -r_TE``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .constants import C
from .errors import ValidationError
from .susceptibility import VACUUM, SusceptibilityModel

POLARIZATIONS = ("TE", "TM")


@dataclass(frozen=True)
class Layer:
    thickness: float = math.inf
    model: SusceptibilityModel = VACUUM

    @property
    def half_infinite(self) -> bool:
        return math.isinf(self.thickness)


@dataclass(frozen=True)
class LayerStack:
    """Ordered layers; the first interface sits at x = 0."""

    layers: tuple[Layer, ...]
    interfaces: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if len(layers) < 1:
            raise ValidationError("stack needs at least one layer")
        if not (layers[0].half_infinite and layers[-1].half_infinite):
            raise ValidationError("outermost layers must be half-infinite")
        for lay in layers[1:-1]:
            if lay.half_infinite or not lay.thickness > 0:
                raise ValidationError("inner layers need finite positive thickness")
        if len(layers) == 1:
            object.__setattr__(self, "interfaces", ())
            return
        xs = [0.0]
        for lay in layers[1:-1]:
            xs.append(xs[-1] + lay.thickness)
        object.__setattr__(self, "interfaces", tuple(xs))

    @classmethod
    def from_models(cls, models: Sequence[SusceptibilityModel], thicknesses: Sequence[float]):
        """``len(models) == len(thicknesses) + 2``; the ends are half-infinite."""
        if len(models) != len(thicknesses) + 2:
            raise ValidationError("need two more models than inner thicknesses")
        inner = [Layer(t, m) for t, m in zip(thicknesses, models[1:-1])]
        return cls((Layer(math.inf, models[0]), *inner, Layer(math.inf, models[-1])))

    def __len__(self):
        return len(self.layers)

    def bounds(self, m: int) -> tuple[float, float]:
        left = -math.inf if m == 0 else self.interfaces[m - 1]
        right = math.inf if m == len(self.layers) - 1 else self.interfaces[m]
        return left, right

    def layer_index(self, x: float) -> int:
        extent = (self.interfaces[-1] - self.interfaces[0]) if self.interfaces else 0.0
        for xi in self.interfaces:
            scale = max(abs(xi), extent) or abs(x) or 1.0
            if abs(x - xi) <= 1e-12 * scale:
                raise ValidationError(f"x = {x} lies on an interface")
        return int(np.searchsorted(np.asarray(self.interfaces), x, side="right"))


def uniform_stack(model: SusceptibilityModel = VACUUM) -> LayerStack:
    return LayerStack((Layer(math.inf, model),))


def gap_stack(model_left, model_right, gap: float) -> LayerStack:
    """Two half-spaces separated by a vacuum gap occupying 0 < x < gap."""
    return LayerStack.from_models([model_left, VACUUM, model_right], [gap])


def slab_stack(model, thickness: float) -> LayerStack:
    """A single slab in vacuum occupying 0 < x < thickness."""
    return LayerStack.from_models([VACUUM, model, VACUUM], [thickness])


# ---------------------------------------------------------------------------


def _material(stack: LayerStack, omega):
    eps = np.array([complex(lay.model.permittivity(omega)) for lay in stack.layers])
    mu = np.array([complex(lay.model.permeability(omega)) for lay in stack.layers])
    return eps, mu


def _kz(eps, mu, omega, kpar):
    kz = np.sqrt(eps * mu * omega**2 / C**2 - kpar**2 + 0j)
    # outgoing / decaying branch
    return np.where(kz.imag < 0, -kz, np.where((kz.imag == 0) & (kz.real < 0), -kz, kz))


def _fresnel(pol, kz1, kz2, eps1, eps2, mu1, mu2):
    if pol == "TE":
        num, den = mu2 * kz1 - mu1 * kz2, mu2 * kz1 + mu1 * kz2
    else:
        num, den = eps2 * kz1 - eps1 * kz2, eps2 * kz1 + eps1 * kz2
    return num / den if den != 0 else 0.0


def _check_frequency(omega):
    omega = complex(omega)
    if omega.imag < 0:
        raise ValidationError("frequency must lie in the closed upper half plane")
    if omega == 0:
        raise ValidationError("frequency must be non-zero")
    return omega


def _side_reflections(stack: LayerStack, m: int, omega, kpar, pol):
    """Reflection coefficients seen from inside layer m, looking left and right.

    Each is referenced to the bounding interface of layer m.
    """
    eps, mu = _material(stack, omega)
    kz = _kz(eps, mu, omega, kpar)
    n = len(stack.layers)
    thick = [lay.thickness for lay in stack.layers]

    r_right = 0.0 + 0j
    for j in range(n - 2, m - 1, -1):
        rho = _fresnel(pol, kz[j], kz[j + 1], eps[j], eps[j + 1], mu[j], mu[j + 1])
        if j + 1 == n - 1:
            r_right = rho
        else:
            ph = np.exp(2j * kz[j + 1] * thick[j + 1])
            r_right = (rho + r_right * ph) / (1 + rho * r_right * ph)

    r_left = 0.0 + 0j
    for j in range(1, m + 1):
        rho = _fresnel(pol, kz[j], kz[j - 1], eps[j], eps[j - 1], mu[j], mu[j - 1])
        if j - 1 == 0:
            r_left = rho
        else:
            ph = np.exp(2j * kz[j - 1] * thick[j - 1])
            r_left = (rho + r_left * ph) / (1 + rho * r_left * ph)
    return complex(r_left), complex(r_right), complex(kz[m])


def _maybe_real(value, omega):
    if omega.real == 0:
        return float(np.real(value))
    return complex(value)


def reflection_coeffs(stack: LayerStack, omega, kpar: float, layer: int = 0, side: str = "right"):
    """(r_TE, r_TM) of the stack seen from ``layer`` looking to ``side``.

    The default is the ordinary reflection coefficient for a wave coming
    from the leftmost half-space.  On the imaginary axis the coefficients
    are returned as real floats.
    """
    omega = _check_frequency(omega)
    if kpar < 0:
        raise ValidationError("kpar must be non-negative")
    out = []
    for pol in POLARIZATIONS:
        r_l, r_r, _ = _side_reflections(stack, layer, omega, kpar, pol)
        out.append(_maybe_real(r_r if side == "right" else r_l, omega))
    return tuple(out)


@dataclass(frozen=True)
class GreenEval:
    """Regularized scalar Green functions of one (frequency, kpar) channel.

    ``g[pol]`` is the reflected part of the scalar Green function between
    ``x`` and ``x2`` and ``d2g[pol]`` its mixed derivative d/dx d/dx2.
    ``r_left``/``r_right`` are the reflection coefficients bounding the
    layer that holds both points.
    """

    omega: complex
    kpar: float
    layer: int
    kz: complex
    r_left: dict
    r_right: dict
    g: dict
    d2g: dict

    @property
    def r_te(self):
        return self.r_right["TE"]

    @property
    def r_tm(self):
        return self.r_right["TM"]

    def components(self, eps_mu: complex = 1.0) -> dict:
        """Diagonal dyadic components of the reflected Green function.

        Frame: x (normal), p (along kpar), s (transverse).  Helmholtz
        normalization; ``eps_mu`` is the local relative eps*mu.
        """
        k2 = eps_mu * self.omega**2 / C**2
        return {
            "ss": self.g["TE"],
            "xx": self.kpar**2 / k2 * self.g["TM"],
            "pp": self.d2g["TM"] / k2,
        }


def _reflected_parts(kz, a, b, a2, b2, d, r_l, r_r):
    """Reflected scalar Green function and its mixed derivative."""
    pre = 1j / (2 * kz)
    e = lambda s: np.exp(1j * kz * s)  # noqa: E731
    if math.isinf(d):
        d_den = 1.0
        t_l = r_l * e(a + a2) if not math.isinf(a) else 0.0
        t_r = r_r * e(b + b2) if not math.isinf(b) else 0.0
        t_lr = 0.0
    else:
        d_den = 1 - r_l * r_r * e(2 * d)
        t_l = r_l * e(a + a2)
        t_r = r_r * e(b + b2)
        t_lr = r_l * r_r * (e(a + b2 + d) + e(a2 + b + d))
    g = pre * (t_l + t_r + t_lr) / d_den
    # d/dx d/dx2: left terms (ik)^2, right terms (-ik)^2, mixed terms (ik)(-ik)
    d2 = pre * (-(kz**2) * (t_l + t_r) + kz**2 * t_lr) / d_den
    return complex(g), complex(d2)


def green_regularized(stack: LayerStack, omega, kpar: float, x: float, x2: float | None = None) -> GreenEval:
    """Regularized Green function G - G0 between two points of one layer.

    Raises
    ------
    ValidationError
        If a point lies on an interface or the points are in different layers.
    """
    omega = _check_frequency(omega)
    x2 = x if x2 is None else x2
    m = stack.layer_index(x)
    if stack.layer_index(x2) != m:
        raise ValidationError("both points must lie in the same layer")
    left, right = stack.bounds(m)
    a, a2 = x - left, x2 - left
    b, b2 = right - x, right - x2
    d = right - left
    r_l, r_r, g, d2 = {}, {}, {}, {}
    kz = None
    for pol in POLARIZATIONS:
        rl, rr, kz = _side_reflections(stack, m, omega, kpar, pol)
        r_l[pol], r_r[pol] = _maybe_real(rl, omega), _maybe_real(rr, omega)
        gg, dd = _reflected_parts(kz, a, b, a2, b2, d, rl, rr)
        g[pol], d2[pol] = _maybe_real(gg, omega), _maybe_real(dd, omega)
    return GreenEval(omega, kpar, m, kz, r_l, r_r, g, d2)


def im_green_coincident(stack: LayerStack, omega: float, x: float) -> float:
    """Im g(x, x; Omega) of the normal-incidence (kpar = 0) scalar problem.

    Includes the homogeneous part ``i/(2 kz)``; in vacuum the result is
    ``c / (2 Omega)``.  The value is proportional to the field-commutator
    weight and must be non-negative for a passive stack.
    """
    omega = float(omega)
    if not omega > 0:
        raise ValidationError("Omega must be real and positive")
    ev = green_regularized(stack, omega, 0.0, x)
    total = 1j / (2 * ev.kz) + ev.g["TE"]
    val = float(np.imag(total))
    if val < -1e-9 * abs(total):
        raise RuntimeError(f"negative Im G = {val:.3g}: fluctuation-dissipation violated")
    return val


def rt_normal_incidence(stack: LayerStack, omega: float) -> tuple[float, float]:
    """Power reflectance and transmittance at normal incidence from the left.

    Characteristic-matrix method, independent of the Airy recursion used by
    :func:`reflection_coeffs`.
    """
    k0 = omega / C
    eps, mu = _material(stack, omega)
    n = np.sqrt(eps * mu)
    n = np.where(n.imag < 0, -n, n)
    Y = n / mu
    M = np.eye(2, dtype=complex)
    for j, lay in enumerate(stack.layers[1:-1], start=1):
        delta = k0 * n[j] * lay.thickness
        Mj = np.array(
            [[np.cos(delta), -1j * np.sin(delta) / Y[j]], [-1j * Y[j] * np.sin(delta), np.cos(delta)]]
        )
        M = M @ Mj
    y0, ys = Y[0], Y[-1]
    den = y0 * M[0, 0] + y0 * ys * M[0, 1] + M[1, 0] + ys * M[1, 1]
    r = (y0 * M[0, 0] + y0 * ys * M[0, 1] - M[1, 0] - ys * M[1, 1]) / den
    t = 2 * y0 / den
    return float(abs(r) ** 2), float(np.real(ys) / np.real(y0) * abs(t) ** 2)


def tabulate_reflection(stack: LayerStack, xis, kpars) -> np.ndarray:
    """Rows of (xi, kpar, r_TE, r_TM) at imaginary frequency for audit dumps."""
    rows = []
    for xi in xis:
        for k in kpars:
            r_te, r_tm = reflection_coeffs(stack, 1j * xi, k)
            rows.append((xi, k, r_te, r_tm))
    return np.array(rows)

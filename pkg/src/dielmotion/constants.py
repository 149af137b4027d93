"""SI constants used throughout the package (CODATA values via scipy)."""

from scipy.constants import c, epsilon_0, hbar, mu_0

C = c
EPS0 = epsilon_0
MU0 = mu_0
HBAR = hbar

__all__ = ["C", "EPS0", "MU0", "HBAR"]

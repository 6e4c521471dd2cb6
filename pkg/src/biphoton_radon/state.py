"""Position-momentum entangled Gaussian biphoton state.

Positions are in micrometres and momenta in inverse micrometres. The
momentum amplitude is the Fourier transform of the position amplitude
under the kernel ``exp(-2i (xA pA + xB pB))``. The state is carried as the zero-mean covariance matrix over
the ordered quadratures ``(xA, pA, xB, pB)``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParametersError, PhaseWrapWarning

XA, PA, XB, PB = range(4)
QUADRATURES = ("xA", "pA", "xB", "pB")


def _require_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise InvalidParametersError(f"non-finite input: {v!r}")


@dataclass(frozen=True)
class BiphotonParams:
    """Widths of the biphoton amplitude.

    Attributes
    ----------
    w1 : float
        Half the Gaussian width along ``xA - xB`` (um).
    w2 : float
        Gaussian width along ``xA + xB`` (um).
    wavelength : float
        Pump wavelength in nm. Carried as metadata only.
    """

    w1: float
    w2: float
    wavelength: float = 325.0

    def __post_init__(self):
        for name in ("w1", "w2", "wavelength"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v > 0):
                raise InvalidParametersError(f"{name} must be finite and > 0, got {v!r}")

    @classmethod
    def from_widths(cls, sigma_s: float, sigma_c: float, wavelength: float = 325.0) -> "BiphotonParams":
        w1, w2 = invert_widths(sigma_s, sigma_c)
        return cls(w1, w2, wavelength)

    @property
    def sigma_s(self) -> float:
        """Single-photon width."""
        return math.sqrt(self.w2**2 + (self.w1 / 2) ** 2)

    @property
    def sigma_c(self) -> float:
        """Conditional width."""
        return math.sqrt(4 * self.w1**2 * self.w2**2 / (4 * self.w2**2 + self.w1**2))

    @property
    def norm_prefactor(self) -> float:
        # does not L2-normalise |f|^2; densities are renormalised separately
        return 1.0 / (2 * math.pi * self.w1 * self.w2)


def invert_widths(sigma_s: float, sigma_c: float) -> tuple[float, float]:
    """Recover ``(w1, w2)`` from the single-photon and conditional widths.

    With ``A = w1**2 / 4`` and ``B = w2**2`` the forward relations reduce
    to ``A + B = sigma_s**2`` and ``A * B = sigma_c**2 * sigma_s**2 / 4``,
    so ``A`` and ``B`` are the roots of a quadratic. ``B`` takes the larger
    root.
    """
    _require_finite(sigma_s, sigma_c)
    if not (0 < sigma_c < sigma_s):
        raise InvalidParametersError(
            f"need 0 < sigma_c < sigma_s, got sigma_s={sigma_s!r}, sigma_c={sigma_c!r}"
        )
    s2 = sigma_s * sigma_s
    disc = s2 * (s2 - sigma_c * sigma_c)
    big = 0.5 * (s2 + math.sqrt(disc))
    small = (sigma_c * sigma_c * s2 / 4) / big
    return 2 * math.sqrt(small), math.sqrt(big)


def wavefunction_position(params: BiphotonParams, xA, xB):
    """Biphoton amplitude f(xA, xB) in the position basis."""
    _require_finite(xA, xB)
    xA = np.asarray(xA, dtype=float)
    xB = np.asarray(xB, dtype=float)
    out = (
        params.norm_prefactor
        * np.exp(-((xA - xB) ** 2) / (4 * params.w1**2))
        * np.exp(-((xA + xB) ** 2) / (16 * params.w2**2))
    )
    return out[()] if out.ndim == 0 else out


def wavefunction_momentum(params: BiphotonParams, pA, pB):
    """Biphoton amplitude f(pA, pB) in the momentum basis."""
    _require_finite(pA, pB)
    pA = np.asarray(pA, dtype=float)
    pB = np.asarray(pB, dtype=float)
    w1, w2 = params.w1, params.w2
    out = (
        (4 * w1 * w2) ** 2
        * params.norm_prefactor
        * np.exp(-(w1**2) * (pA - pB) ** 2)
        * np.exp(-4 * w2**2 * (pA + pB) ** 2)
    )
    return out[()] if out.ndim == 0 else out


def _gaussian_mass(alpha: float, order: int = 40) -> float:
    """Numerical value of the integral of exp(-alpha * u**2) over the real line."""
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    # substitute u = t / sqrt(alpha): exp(-t**2) is integrated exactly
    return float(np.sum(weights)) / math.sqrt(alpha)


def position_mass(params: BiphotonParams) -> float:
    """Total mass of |f(xA, xB)|**2, by Gauss-Hermite quadrature in the rotated frame."""
    # u = xA - xB, v = xA + xB, dxA dxB = du dv / 2
    mu = _gaussian_mass(1 / (2 * params.w1**2))
    mv = _gaussian_mass(1 / (8 * params.w2**2))
    return params.norm_prefactor**2 * mu * mv / 2


def momentum_mass(params: BiphotonParams) -> float:
    w1, w2 = params.w1, params.w2
    mu = _gaussian_mass(2 * w1**2)
    mv = _gaussian_mass(8 * w2**2)
    return ((4 * w1 * w2) ** 2 * params.norm_prefactor) ** 2 * mu * mv / 2


def position_density(params: BiphotonParams, xA, xB):
    """|f(xA, xB)|**2 renormalised to unit mass."""
    return wavefunction_position(params, xA, xB) ** 2 / position_mass(params)


def momentum_density(params: BiphotonParams, pA, pB):
    return wavefunction_momentum(params, pA, pB) ** 2 / momentum_mass(params)


@dataclass(frozen=True, eq=False)
class GaussianState4:
    """Zero-mean Gaussian state over ``(xA, pA, xB, pB)``.

    ``phi`` records the accumulated phase applied to arm B.
    """

    covariance: np.ndarray
    phi: float = 0.0
    params: BiphotonParams | None = field(default=None, compare=False)

    def __post_init__(self):
        cov = np.array(self.covariance, dtype=float)
        if cov.shape != (4, 4):
            raise InvalidParametersError(f"covariance must be 4x4, got {cov.shape}")
        if not np.all(np.isfinite(cov)):
            raise InvalidParametersError("covariance has non-finite entries")
        scale = np.max(np.abs(cov))
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12 * scale):
            raise InvalidParametersError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        try:
            # scale-invariant check; the x and p blocks differ by many decades
            d = 1 / np.sqrt(np.diag(cov))
            np.linalg.cholesky(cov * np.outer(d, d))
        except (np.linalg.LinAlgError, FloatingPointError, ValueError):
            raise InvalidParametersError("covariance is not positive definite") from None
        cov.setflags(write=False)
        object.__setattr__(self, "covariance", cov)

    def var(self, name: str) -> float:
        i = QUADRATURES.index(name)
        return float(self.covariance[i, i])

    def cov(self, a: str, b: str) -> float:
        return float(self.covariance[QUADRATURES.index(a), QUADRATURES.index(b)])

    def __eq__(self, other):
        if not isinstance(other, GaussianState4):
            return NotImplemented
        return self.phi == other.phi and np.array_equal(self.covariance, other.covariance)

    __hash__ = None


def covariance_from_params(params: BiphotonParams) -> GaussianState4:
    """Covariance of the normalised densities |f(x)|**2 and |f(p)|**2.

    Position and momentum blocks are uncorrelated with each other before any
    phase rotation.
    """
    w1, w2 = params.w1, params.w2
    vx = w2**2 + w1**2 / 4
    cx = (4 * w2**2 - w1**2) / 4
    vp = 1 / (16 * w1**2) + 1 / (64 * w2**2)
    cp = 1 / (64 * w2**2) - 1 / (16 * w1**2)
    cov = np.zeros((4, 4))
    cov[XA, XA] = cov[XB, XB] = vx
    cov[XA, XB] = cov[XB, XA] = cx
    cov[PA, PA] = cov[PB, PB] = vp
    cov[PA, PB] = cov[PB, PA] = cp
    return GaussianState4(cov, 0.0, params)


def arm_b_rotation(phi: float) -> np.ndarray:
    """Symplectic matrix sending (xB, pB) to (xB cos phi + pB sin phi, -xB sin phi + pB cos phi)."""
    c, s = math.cos(phi), math.sin(phi)
    R = np.eye(4)
    R[XB, XB], R[XB, PB] = c, s
    R[PB, XB], R[PB, PB] = -s, c
    return R


def normalize_phase(phi: float) -> float:
    _require_finite(phi)
    if 0 <= phi < math.pi:
        return float(phi)
    wrapped = math.fmod(phi, math.pi)
    if wrapped < 0:
        wrapped += math.pi
    if wrapped >= math.pi:  # fmod rounding at the upper edge
        wrapped = 0.0
    warnings.warn(f"phase {phi!r} folded into [0, pi) as {wrapped!r}", PhaseWrapWarning, stacklevel=3)
    return wrapped


def rotate_arm_b(state: GaussianState4, phi: float) -> GaussianState4:
    """Apply the phase rotation to arm B only; arm A is untouched."""
    phi = normalize_phase(phi)
    if phi == 0:
        return state
    R = arm_b_rotation(phi)
    return GaussianState4(R @ state.covariance @ R.T, state.phi + phi, state.params)


@dataclass(frozen=True)
class GaussianPhaseDensity:
    """Isotropic zero-mean Gaussian density on the (x, p) plane."""

    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise InvalidParametersError(f"sigma must be > 0, got {self.sigma!r}")

    def __call__(self, x, p):
        s2 = self.sigma**2
        return np.exp(-(np.asarray(x) ** 2 + np.asarray(p) ** 2) / (2 * s2)) / (2 * math.pi * s2)

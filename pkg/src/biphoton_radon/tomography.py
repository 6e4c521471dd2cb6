"""Direct-Fourier tomography on the (x, p) plane.

Conventions
-----------
A :class:`Grid2D` samples a density at cell centres over the square
``[-W, W]**2``; axis 0 is x and axis 1 is p. Sinogram offsets are
normalised, ``rho_l = -1 + 2 l / n`` for ``l = 0 .. n-1``, and map to the
physical offset ``rho_l * W``. Frequencies are ``r_f = f / 2`` in units
conjugate to the normalised offset, so the Cartesian frequency grid of an
``n x n`` image has integer node indices ``u, v`` in ``[-n/2, n/2)`` and a
polar sample ``(r_f, phi)`` sits at ``(f cos phi, f sin phi)`` in node
units.

Every spectrum carries the factor ``1 / (2W)`` so that a projection DFT and
the direct 2-D Fourier sum of the grid agree at matching frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import ndimage

from .errors import InsufficientAnglesError, InvalidParametersError


@dataclass(frozen=True, eq=False)
class Grid2D:
    values: np.ndarray
    half_width: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] < 8:
            raise InvalidParametersError(f"grid must be n x n with n >= 8, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidParametersError("grid values must be finite")
        if not (math.isfinite(self.half_width) and self.half_width > 0):
            raise InvalidParametersError("half_width must be > 0")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def cell(self) -> float:
        return 2 * self.half_width / self.n

    @property
    def centers(self) -> np.ndarray:
        return -self.half_width + (np.arange(self.n) + 0.5) * self.cell

    def total(self) -> float:
        """Integral of the density over the domain (midpoint rule)."""
        return float(self.values.sum() * self.cell**2)

    @classmethod
    def from_function(cls, func, n: int, half_width: float) -> "Grid2D":
        c = -half_width + (np.arange(n) + 0.5) * (2 * half_width / n)
        x, p = np.meshgrid(c, c, indexing="ij")
        return cls(func(x, p), half_width)


def normalized_offsets(n: int) -> np.ndarray:
    return -1 + 2 * np.arange(n) / n


@dataclass(frozen=True, eq=False)
class Sinogram:
    values: np.ndarray
    half_width: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or min(v.shape) < 1:
            raise InvalidParametersError(f"sinogram must be m x n, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidParametersError("sinogram values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.m) * math.pi / self.m

    @property
    def offsets(self) -> np.ndarray:
        return normalized_offsets(self.n)

    @property
    def step(self) -> float:
        """Physical offset spacing."""
        return 2 * self.half_width / self.n


@dataclass(frozen=True, eq=False)
class PolarSpectrum:
    """chi(r_f, phi_j) with rows over angle and columns over frequency index f."""

    values: np.ndarray
    freqs: np.ndarray
    angles: np.ndarray
    half_width: float

    @property
    def radii(self) -> np.ndarray:
        return np.asarray(self.freqs) / 2


@dataclass(frozen=True, eq=False)
class CartesianSpectrum:
    """Frequency grid with node ``(u, v)`` stored at ``[u + n//2, v + n//2]``."""

    values: np.ndarray
    mask: np.ndarray
    half_width: float

    @property
    def n(self) -> int:
        return self.values.shape[0]


def line_integrals(grid: Grid2D, angles, offsets) -> np.ndarray:
    """Line integrals of ``grid`` at the given angles and normalised offsets."""
    return _line_integrals(grid.values, grid.half_width, np.atleast_1d(angles), np.atleast_1d(offsets))


def _line_integrals(values: np.ndarray, half_width: float, angles, offsets) -> np.ndarray:
    n = values.shape[0]
    h = 2 * half_width / n
    step = h / 2
    reach = half_width * math.sqrt(2)
    nt = 2 * int(math.ceil(reach / step)) + 1
    t = (np.arange(nt) - (nt - 1) / 2) * step
    s = np.asarray(offsets) * half_width
    out = np.empty((len(angles), len(s)))
    for j, phi in enumerate(angles):
        c, si = math.cos(phi), math.sin(phi)
        x = s[:, None] * c - t[None, :] * si
        p = s[:, None] * si + t[None, :] * c
        coords = np.stack([(x + half_width) / h - 0.5, (p + half_width) / h - 0.5])
        samples = ndimage.map_coordinates(values, coords.reshape(2, -1), order=1, mode="constant", cval=0.0)
        out[j] = samples.reshape(x.shape).sum(axis=1) * step
    return out


def radon_forward(grid: Grid2D, m: int, n: int) -> Sinogram:
    """Line integrals along ``x cos phi_j + p sin phi_j = rho_l * W``.

    Each line is sampled every half cell with bilinear interpolation; the
    density is zero outside the grid.
    """
    if m < 1 or n < 1:
        raise InvalidParametersError("m and n must be positive")
    angles = np.arange(m) * math.pi / m
    vals = _line_integrals(grid.values, grid.half_width, angles, normalized_offsets(n))
    return Sinogram(vals, grid.half_width)


def radon_gaussian_analytic(sigma: float, rho):
    """Line integral of the unit-mass isotropic Gaussian at offset ``rho``.

    Independent of the angle: ``exp(-rho**2 / (2 sigma**2)) / (sqrt(2 pi) sigma)``.
    """
    if not (math.isfinite(sigma) and sigma > 0):
        raise InvalidParametersError(f"sigma must be > 0, got {sigma!r}")
    rho = np.asarray(rho, dtype=float)
    out = np.exp(-(rho**2) / (2 * sigma**2)) / (math.sqrt(2 * math.pi) * sigma)
    return out[()] if out.ndim == 0 else out


class DFTMode(str, Enum):
    PAPER_TRAPEZOID = "paperTrapezoid"
    STANDARD = "standard"


def default_freqs(n: int, mode=DFTMode.STANDARD) -> np.ndarray:
    if DFTMode(mode) is DFTMode.PAPER_TRAPEZOID:
        return np.arange(1, n + 1)
    return np.arange(-(n // 2), n - n // 2)


def projection_dft(row, mode=DFTMode.STANDARD, freqs=None) -> np.ndarray:
    """1-D Fourier sum of a sinogram row at ``r_f = f / 2``.

    ``standard``: ``(1/n) sum_l exp(-2 pi i r_f rho_l) row[l]`` over the signed
    offsets ``rho_l = -1 + 2 l / n``, with ``f`` in ``[-n/2, n/2)`` by default.

    ``paperTrapezoid``: ``2 (1/n) sum_l exp(-2 pi i r_f rho_l) row[l]`` with
    ``rho_l = l / n`` for ``l = 1 .. n`` and ``f = 1 .. n`` by default.
    Only this mode carries the factor 2; it does not invert.

    A 2-D input is treated as a stack of rows.
    """
    mode = DFTMode(mode)
    row = np.asarray(row, dtype=float)
    if not np.all(np.isfinite(row)):
        raise InvalidParametersError("row must be finite")
    n = row.shape[-1]
    f = default_freqs(n, mode) if freqs is None else np.asarray(freqs, dtype=float)
    if mode is DFTMode.STANDARD:
        rho, factor = normalized_offsets(n), 1.0
    else:
        rho, factor = np.arange(1, n + 1) / n, 2.0
    kernel = np.exp(-2j * np.pi * np.outer(rho, f / 2))
    return factor * (row @ kernel) / n


def grid_fourier_sum(grid: Grid2D, lam1, lam2) -> np.ndarray:
    """Direct 2-D Fourier sum of the grid at normalised frequencies ``(lam1, lam2)``.

    ``(1 / 2W) * h**2 * sum_ik mu_ik exp(-2 pi i (x_i lam1 + p_k lam2) / W)``.
    """
    c = grid.centers / grid.half_width
    lam1 = np.atleast_1d(np.asarray(lam1, dtype=float))
    lam2 = np.atleast_1d(np.asarray(lam2, dtype=float))
    ex = np.exp(-2j * np.pi * np.outer(lam1, c))  # (k, n)
    ep = np.exp(-2j * np.pi * np.outer(lam2, c))
    vals = np.einsum("ki,ij,kj->k", ex, grid.values, ep)
    return vals * grid.cell**2 / (2 * grid.half_width)


def slice_theorem_check(grid: Grid2D, j: int, f: float, m: int = 180, n_offsets: int | None = None):
    """Compare a projection DFT with the matching central slice of the 2-D Fourier sum.

    Returns ``(projection_value, slice_value, abs_error)``.
    """
    n_off = grid.n if n_offsets is None else n_offsets
    phi = j * math.pi / m
    row = _line_integrals(grid.values, grid.half_width, [phi], normalized_offsets(n_off))[0]
    a = projection_dft(row, DFTMode.STANDARD, [f])[0]
    r = f / 2
    b = grid_fourier_sum(grid, r * math.cos(phi), r * math.sin(phi))[0]
    return complex(a), complex(b), abs(a - b)


def slice_theorem_errors(grid: Grid2D, m: int, freqs, n_offsets: int | None = None):
    """Vectorised :func:`slice_theorem_check` over all ``m`` angles and the given ``freqs``.

    Returns ``(projection, slice)`` complex arrays of shape ``(m, len(freqs))``.
    """
    n_off = grid.n if n_offsets is None else n_offsets
    sino = radon_forward(grid, m, n_off)
    freqs = np.asarray(freqs, dtype=float)
    proj = projection_dft(sino.values, DFTMode.STANDARD, freqs)
    r = freqs / 2
    phis = sino.angles
    lam1 = np.outer(np.cos(phis), r).ravel()
    lam2 = np.outer(np.sin(phis), r).ravel()
    sl = grid_fourier_sum(grid, lam1, lam2).reshape(len(phis), len(freqs))
    return proj, sl


def polar_spectrum(sinogram: Sinogram, mode=DFTMode.STANDARD, oversample: int = 1) -> PolarSpectrum:
    """Projection DFT of every row.

    ``oversample > 1`` evaluates the standard-mode sum at fractional ``f`` in
    steps of ``1 / oversample``; this equals zero-padding each projection to
    ``oversample`` times its length before the DFT.
    """
    if oversample < 1 or int(oversample) != oversample:
        raise InvalidParametersError(f"oversample must be a positive integer, got {oversample!r}")
    freqs = default_freqs(sinogram.n * int(oversample), mode)
    if oversample > 1:
        if DFTMode(mode) is not DFTMode.STANDARD:
            raise InvalidParametersError("oversampling is only defined for the standard DFT")
        freqs = freqs / oversample
    vals = projection_dft(sinogram.values, mode, freqs)
    return PolarSpectrum(vals, freqs, sinogram.angles, sinogram.half_width)


def scatter_weights(u, v):
    """Four nearest Cartesian nodes of the points ``(u, v)`` and their bilinear weights.

    Returns ``(iu, iv, w)`` each of shape ``(k, 4)``; weights sum to 1 per point.
    """
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    u0, v0 = np.floor(u), np.floor(v)
    a, b = u - u0, v - v0
    iu = np.stack([u0, u0 + 1, u0, u0 + 1], axis=1).astype(np.int64)
    iv = np.stack([v0, v0, v0 + 1, v0 + 1], axis=1).astype(np.int64)
    w = np.stack([(1 - a) * (1 - b), a * (1 - b), (1 - a) * b, a * b], axis=1)
    return iu, iv, w


def polar_to_cartesian(spectrum: PolarSpectrum, n: int | None = None) -> CartesianSpectrum:
    """Regrid polar samples by bilinear weighted averaging.

    Every sample is scattered to its four nearest nodes; each node is then
    divided by its accumulated weight. Nodes that receive nothing stay zero
    and are left out of the mask.
    """
    if n is None:
        n = int(round(np.max(np.abs(spectrum.freqs)))) * 2
    f = np.asarray(spectrum.freqs, dtype=float)
    phis = np.asarray(spectrum.angles, dtype=float)
    u = np.outer(np.cos(phis), f)
    v = np.outer(np.sin(phis), f)
    # snap values within rounding of a node, so exact hits get weight 1
    u = np.where(np.abs(u - np.round(u)) < 1e-9, np.round(u), u)
    v = np.where(np.abs(v - np.round(v)) < 1e-9, np.round(v), v)
    iu, iv, w = scatter_weights(u, v)
    chi = np.repeat(np.asarray(spectrum.values).ravel()[:, None], 4, axis=1)
    half = n // 2
    iu, iv = iu + half, iv + half
    ok = (iu >= 0) & (iu < n) & (iv >= 0) & (iv < n) & (w > 0)
    flat = (iu * n + iv)[ok]
    acc_w = np.bincount(flat, weights=w[ok], minlength=n * n)
    acc_re = np.bincount(flat, weights=(w * chi.real)[ok], minlength=n * n)
    acc_im = np.bincount(flat, weights=(w * chi.imag)[ok], minlength=n * n)
    mask = acc_w > 0
    vals = np.zeros(n * n, dtype=complex)
    vals[mask] = (acc_re[mask] + 1j * acc_im[mask]) / acc_w[mask]
    return CartesianSpectrum(vals.reshape(n, n), mask.reshape(n, n), spectrum.half_width)


def _centering_phase(n: int) -> np.ndarray:
    u = np.arange(-(n // 2), n - n // 2)
    return np.exp(-1j * np.pi * u * (1 - 1 / n))


def grid_spectrum(grid: Grid2D) -> CartesianSpectrum:
    """Exact Cartesian spectrum of a grid on the node lattice (inverse of :func:`cartesian_to_grid`)."""
    n = grid.n
    ph = _centering_phase(n)
    raw = np.fft.fftshift(np.fft.fft2(grid.values))
    vals = raw * np.outer(np.conj(ph), np.conj(ph)) * grid.cell**2 / (2 * grid.half_width)
    return CartesianSpectrum(vals, np.ones((n, n), dtype=bool), grid.half_width)


def cartesian_to_grid(spectrum: CartesianSpectrum) -> Grid2D:
    """Inverse 2-D FFT of a Cartesian spectrum back onto cell centres."""
    n = spectrum.n
    ph = _centering_phase(n)
    shifted = np.fft.ifftshift(spectrum.values * np.outer(ph, ph))
    mu = np.fft.ifft2(shifted) * n * n / (2 * spectrum.half_width)
    return Grid2D(mu.real, spectrum.half_width)


def reconstruct(sinogram: Sinogram, oversample: int = 2) -> Grid2D:
    """Projection DFTs, polar-to-Cartesian regridding, then inverse FFT.

    The output is an ``n x n`` grid over the same square the sinogram was
    taken from, ``n`` being the number of offsets. ``oversample=2`` places
    radial samples every half node before regridding; with ``oversample=1``
    they sit exactly on integer radii and the weighted average leaves a
    larger curvature bias.
    """
    if sinogram.m < 2:
        raise InsufficientAnglesError(f"reconstruction needs at least 2 angles, got {sinogram.m}")
    cart = polar_to_cartesian(polar_spectrum(sinogram, oversample=oversample), sinogram.n)
    return cartesian_to_grid(cart)

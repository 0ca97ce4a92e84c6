"""Closed smooth contours sampled on a uniform periodic parameter grid.

Every patch boundary in the package, polar or Lagrangian, is reduced to a
``Contour``: node coordinates (r, z) at u_j = 2*pi*j/N together with the
spectral parameter derivatives. Orientation is counter-clockwise in the
(r, z) plane, so the outward normal times arc length is (dz, -dr) du.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GeometryError


def spectral_derivative(values: np.ndarray, order: int = 1) -> np.ndarray:
    """Derivative of periodic samples with respect to u in [0, 2*pi)."""
    n = values.size
    coef = np.fft.rfft(values)
    k = np.arange(coef.size, dtype=float)
    if n % 2 == 0:
        # odd derivatives of the Nyquist mode are not representable
        if order % 2 == 1:
            k[-1] = 0.0
    coef = coef * (1j * k) ** order
    return np.fft.irfft(coef, n)


def trig_resample(values: np.ndarray, m: int) -> np.ndarray:
    """Band-limited resampling of periodic samples onto ``m`` uniform nodes."""
    n = values.size
    if m == n:
        return values.copy()
    coef = np.fft.rfft(values)
    out = np.zeros(m // 2 + 1, dtype=complex)
    keep = min(coef.size, out.size)
    out[:keep] = coef[:keep]
    if n % 2 == 0 and keep == coef.size and m > n:
        out[keep - 1] *= 0.5
    if m % 2 == 0 and m < n:
        out[-1] = out[-1].real
    return np.fft.irfft(out, m) * (m / n)


def trig_eval(values: np.ndarray, u: np.ndarray | float, order: int = 0) -> np.ndarray:
    """Evaluate the trigonometric interpolant (or a derivative) at arbitrary u."""
    n = values.size
    coef = np.fft.rfft(values) / n
    k = np.arange(coef.size, dtype=float)
    weight = np.full(coef.size, 2.0)
    weight[0] = 1.0
    if n % 2 == 0:
        weight[-1] = 1.0
        if order % 2 == 1:
            k[-1] = 0.0
    coef = coef * weight * (1j * k) ** order
    u = np.asarray(u, dtype=float)
    phase = np.exp(1j * np.multiply.outer(u, k))
    return np.real(phase @ coef)


@lru_cache(maxsize=16)
def kress_row(n: int) -> np.ndarray:
    """Circulant weights for the product rule with factor ln(4 sin^2((u-v)/2)).

    Exact for trigonometric polynomials of degree < n/2 times the log factor;
    entry j applies to node offset (i - j) mod n.
    """
    if n % 2:
        raise GeometryError("the log-product rule needs an even node count")
    half = n // 2
    tau = 2.0 * np.pi * np.arange(n) / n
    modes = np.arange(1, half)
    row = -(2.0 * np.pi / half) * (np.cos(np.outer(tau, modes)) / modes).sum(axis=1)
    row -= np.pi / half**2 * np.cos(half * tau)
    row.setflags(write=False)
    return row


@lru_cache(maxsize=16)
def logsin_row(n: int) -> np.ndarray:
    tau = 2.0 * np.pi * np.arange(n) / n
    out = np.zeros(n)
    out[1:] = np.log(4.0 * np.sin(0.5 * tau[1:]) ** 2)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Contour:
    r: np.ndarray
    z: np.ndarray
    dr: np.ndarray
    dz: np.ndarray

    @classmethod
    def from_nodes(cls, r, z) -> "Contour":
        r = np.ascontiguousarray(r, dtype=float)
        z = np.ascontiguousarray(z, dtype=float)
        return cls(r, z, spectral_derivative(r), spectral_derivative(z))

    @classmethod
    def from_polar(cls, center_r: float, center_z: float, thetas, radii) -> "Contour":
        """Contour of a star-shaped curve rho(theta) on uniform angles.

        The parameter is the polar angle itself (shifted so u_0 = theta_0).
        """
        thetas = np.asarray(thetas, dtype=float)
        radii = np.ascontiguousarray(radii, dtype=float)
        drho = spectral_derivative(radii)
        c, s = np.cos(thetas), np.sin(thetas)
        r = center_r + radii * c
        z = center_z + radii * s
        dr = drho * c - radii * s
        dz = drho * s + radii * c
        return cls(r, z, dr, dz)

    @property
    def n(self) -> int:
        return self.r.size

    @property
    def weight(self) -> float:
        return 2.0 * np.pi / self.n

    def speed(self) -> np.ndarray:
        return np.hypot(self.dr, self.dz)

    def upsample(self, m: int) -> "Contour":
        if m == self.n:
            return self
        return Contour(
            trig_resample(self.r, m),
            trig_resample(self.z, m),
            trig_resample(self.dr, m),
            trig_resample(self.dz, m),
        )

    def translated(self, dr: float = 0.0, dz: float = 0.0) -> "Contour":
        return Contour(self.r + dr, self.z + dz, self.dr, self.dz)

    # moments of the enclosed region, all via the divergence theorem
    def area(self) -> float:
        return float(np.sum(self.r * self.dz) * self.weight)

    def moment_r(self, power: int) -> float:
        """Integral of r**power over the enclosed region."""
        return float(np.sum(self.r ** (power + 1) * self.dz) * self.weight / (power + 1))

    def moment_rz(self, power: int) -> float:
        """Integral of r**power * z over the enclosed region."""
        return float(-np.sum(self.r**power * 0.5 * self.z**2 * self.dr) * self.weight)

    def centroid(self) -> tuple[float, float]:
        area = self.area()
        cr = self.moment_r(1) / area
        cz = self.moment_rz(0) / area
        return cr, cz

    def length(self) -> float:
        return float(np.sum(self.speed()) * self.weight)

    def curvature(self) -> np.ndarray:
        ddr = spectral_derivative(self.r, 2)
        ddz = spectral_derivative(self.z, 2)
        return (self.dr * ddz - self.dz * ddr) / self.speed() ** 3

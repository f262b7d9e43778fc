"""Independent reference implementations used to freeze expected values.

Everything here deliberately avoids the package's own algorithms: plain
Monte-Carlo rejection for volumes, the slowly-converging log-sine Fourier
series, dense grids instead of optimizers, and brute-force searches over
group balls.  Slow but simple.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

_J2 = np.array([-1.0, 1.0, 1.0])


def mc_klein_mass(kverts: np.ndarray, samples: int = 400_000, seed: int = 11) -> tuple:
    """Monte-Carlo hyperbolic area of a Klein-chart triangle.

    Returns (estimate, sigma).  Uniform rejection in the triangle's bounding
    box, density (1 - |u|^2)^{-3/2}.
    """
    v = np.asarray(kverts, dtype=float)
    assert v.shape == (3, 2)
    rng = np.random.default_rng(seed)
    lo, hi = v.min(axis=0), v.max(axis=0)
    box_area = float(np.prod(hi - lo))
    pts = rng.uniform(lo, hi, size=(samples, 2))
    # barycentric membership
    d = v[1:] - v[0]
    det = d[0, 0] * d[1, 1] - d[0, 1] * d[1, 0]
    rel = pts - v[0]
    a = (rel[:, 0] * d[1, 1] - rel[:, 1] * d[1, 0]) / det
    b = (rel[:, 1] * d[0, 0] - rel[:, 0] * d[0, 1]) / det
    inside = (a >= 0) & (b >= 0) & (a + b <= 1)
    rho2 = np.sum(pts * pts, axis=1)
    vals = np.where(inside & (rho2 < 1.0), (1.0 - np.minimum(rho2, 1.0 - 1e-15)) ** -1.5, 0.0)
    est = box_area * float(vals.mean())
    sig = box_area * float(vals.std()) / math.sqrt(samples)
    return est, sig


def lobachevsky_fourier(theta: float, terms: int = 2_000_000) -> float:
    """Truncated Fourier series 0.5 sum sin(2k theta)/k^2; tail < 0.5/terms."""
    k = np.arange(1, terms + 1, dtype=float)
    return 0.5 * float(np.sum(np.sin(2.0 * k * theta) / (k * k)))


def tube_factor_quadrature(n: int, t: float) -> tuple:
    """2 int_0^t cosh^{n-1}(s) ds by adaptive quadrature."""
    val, err = integrate.quad(lambda s: math.cosh(s) ** (n - 1), 0.0, t, epsrel=1e-13)
    return 2.0 * val, 2.0 * err


def equilateral_area(L: float) -> float:
    """Angle defect of the equilateral triangle with side L, closed form."""
    c = math.cosh(L) / (1.0 + math.cosh(L))
    return math.pi - 3.0 * math.acos(c)


def disk_mass(r: float) -> float:
    return 2.0 * math.pi * (math.cosh(r) - 1.0)


def grid_perturbed_minimum(n: int, L: float, steps: int = 5) -> float:
    """Coarse-grid upper bound for the perturbed-simplex volume infimum.

    Walks radial perturbations of each vertex over a small symmetric grid
    and evaluates signed volumes; the infimum over the grid is an upper
    bound for the true infimum, so vl_estimate must not exceed it (up to
    optimizer tolerance).  n = 2 only.
    """
    from hypsmear.hypgeom import HPoint
    from hypsmear.volume import regular_simplex, triangle_signed_area

    assert n == 2
    base = regular_simplex(2, L).vertices
    # radial unit directions at each vertex, inward/outward
    best = math.inf
    radii = np.linspace(-1.0, 1.0, steps)
    dirs = base[:, 1:] / np.linalg.norm(base[:, 1:], axis=1)[:, None]
    for da in radii:
        for db in radii:
            for dc in radii:
                verts = []
                for q, d, t in zip(base, dirs, (da, db, dc)):
                    rad = math.acosh(q[0]) + t
                    verts.append(
                        HPoint(
                            np.array(
                                [math.cosh(rad), math.sinh(rad) * d[0], math.sinh(rad) * d[1]]
                            )
                        )
                    )
                best = min(best, triangle_signed_area(*verts))
    return best


def brute_nearest_orbit(model, x: np.ndarray, radius: float = 10.0) -> float:
    """Distance from x to the orbit of the base point, by enumeration."""
    ball = model.element_ball(radius)
    pts = ball[:, :, 0]
    d = np.arccosh(np.maximum(-(pts * (_J2 * x)).sum(axis=1), 1.0))
    return float(d.min())

"""Quantitative volume bounds.

tube_factor(n, t) is twice the antiderivative of cosh^(n-1), the exact
volume factor of embedded tubes around totally geodesic hypersurfaces.
vl_estimate(n, L) estimates the infimum of signed volume over simplices
whose i-th vertex lies within distance 1 of the i-th vertex of the regular
edge-L simplex.  gap_bound combines the two into the lower bound

    (1 - r g(L+3)) / (1 + r g(L)) * V_L

on the volume/simplicial-volume ratio of a manifold with boundary-to-volume
ratio r, and solve_k inverts that bound into the constant k(eta, n): any
manifold with r <= k has ratio at least v_n - eta.

V_L values are numerical multistart minima, not certified global infima;
certificates are exact conditionally on them.  Estimates are memoized per
(n, L, restarts, seed) since the threshold searches revisit grid points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from hypsmear.hypgeom import (
    GeodesicSimplex,
    HPoint,
    log_direction,
    origin,
    transport_from_origin,
)
from hypsmear.volume import (
    QuadratureSpec,
    ideal_regular_volume,
    regular_simplex,
    signed_volume,
    triangle_signed_area,
)

__all__ = [
    "BoundaryRatio",
    "VLEstimate",
    "GapCertificate",
    "tube_factor",
    "vl_estimate",
    "l0_estimate",
    "gap_bound",
    "solve_k",
    "gluing_ratio_sequence",
]

DEFAULT_SEED = 1789

_J_CACHE: dict = {}


def _mink_diag(n: int) -> np.ndarray:
    if n not in _J_CACHE:
        j = np.ones(n + 1)
        j[0] = -1.0
        _J_CACHE[n] = j
    return _J_CACHE[n]


@dataclass(frozen=True)
class BoundaryRatio:
    """A validated boundary-to-volume ratio vol(dM)/vol(M)."""

    r: float

    def __post_init__(self):
        if not self.r >= 0:
            raise ValueError("boundary ratio must be >= 0")


@dataclass(frozen=True)
class VLEstimate:
    n: int
    L: float
    value: float
    restarts: int
    best_perturbation: np.ndarray  # (n+1, n) frame coefficients, each row norm <= 1
    optimizer_tol: float


@dataclass(frozen=True)
class GapCertificate:
    n: int
    eta: float
    L1: float
    k: float
    vL1: VLEstimate
    bound_value: float


def _cosh_power_integral(m: int, t: float) -> float:
    # int_0^t cosh^m(s) ds by the standard reduction
    if m == 0:
        return t
    if m == 1:
        return math.sinh(t)
    return (math.cosh(t) ** (m - 1) * math.sinh(t) + (m - 1) * _cosh_power_integral(m - 2, t)) / m


def tube_factor(n: int, t: float) -> float:
    """2 * int_0^t cosh^(n-1)(s) ds, the two-sided tube-volume factor."""
    if n < 2:
        raise ValueError("need n >= 2")
    t = float(t)
    if t < 0:
        raise ValueError("t must be >= 0")
    return 2.0 * _cosh_power_integral(n - 1, t)


def _perturbed_vertices(qs: np.ndarray, bases: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Apply exponential-map perturbations with frame coefficients w.

    Rows of w with norm > 1 are radially projected onto the unit ball, which
    matches the hyperbolic radius-1 ball exactly.
    """
    norms = np.linalg.norm(w, axis=1)
    scl = np.where(norms > 1.0, 1.0 / np.maximum(norms, 1e-300), 1.0)
    ww = w * scl[:, None]
    r = norms * scl
    v = np.einsum("ick,ik->ic", bases, ww)
    out = qs.copy()
    big = r > 1e-14
    rb = r[big]
    out[big] = np.cosh(rb)[:, None] * qs[big] + (np.sinh(rb) / rb)[:, None] * v[big]
    q = -(out[:, 0] ** 2) + np.sum(out[:, 1:] ** 2, axis=1)
    return out / np.sqrt(-q)[:, None]


def _frame_coefficients(direction: np.ndarray, basis: np.ndarray, n: int) -> np.ndarray:
    return (direction * _mink_diag(n)) @ basis


_VL_CACHE: dict = {}
_L0_CACHE: dict = {}


def vl_estimate(n: int, L: float, restarts: int = 8, seed: int = DEFAULT_SEED) -> VLEstimate:
    """Estimated infimum of signed volume over radius-1 vertex perturbations
    of the regular edge-L simplex.

    Multistart Nelder-Mead over the (n+1) x n frame coefficients; the start
    list is zero perturbation, symmetric inward pulls, a collapse toward
    vertex 0, then seeded random ball points.  The winner is deterministic:
    smallest value, ties by restart index.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    if not L > 0:
        raise ValueError("edge length must be positive")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    key = (n, round(float(L), 10), int(restarts), int(seed))
    if key in _VL_CACHE:
        return _VL_CACHE[key]

    base = regular_simplex(n, L)
    qs = np.array(base.vertices)
    bases = np.stack([transport_from_origin(q)[:, 1:] for q in qs])
    o = origin(n).coords

    exact = n == 2
    spec_search = QuadratureSpec(abs_tol=3e-4, max_subdivisions=200)
    spec_final = QuadratureSpec(abs_tol=1e-6, max_subdivisions=1200)

    def objective(x: np.ndarray, spec: QuadratureSpec) -> float:
        rows = _perturbed_vertices(qs, bases, x.reshape(n + 1, n))
        if exact:
            return triangle_signed_area(rows[0], rows[1], rows[2])
        return signed_volume(GeodesicSimplex([HPoint(r) for r in rows]), spec)

    inward = np.stack([
        _frame_coefficients(log_direction(q, o), b, n) for q, b in zip(qs, bases)
    ])
    collapse = np.zeros((n + 1, n))
    for i in range(1, n + 1):
        collapse[i] = _frame_coefficients(log_direction(qs[i], qs[0]), bases[i], n)

    starts = [
        np.zeros((n + 1, n)),
        inward,
        0.9 * inward,
        0.75 * inward,
        collapse,
    ]
    while len(starts) < restarts:
        rng = np.random.default_rng([seed, len(starts)])
        g = rng.standard_normal((n + 1, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        radii = rng.random(n + 1) ** (1.0 / n)
        starts.append(g * radii[:, None])
    starts = starts[:restarts]

    if exact:
        options = {"xatol": 1e-7, "fatol": 1e-10, "maxiter": 4000, "maxfev": 6000}
    else:
        options = {"xatol": 3e-4, "fatol": 3e-5, "maxiter": 300 * (n + 1), "maxfev": 500 * (n + 1)}

    best_val, best_x, best_idx = math.inf, None, -1
    for idx, st in enumerate(starts):
        res = minimize(
            objective,
            st.ravel(),
            args=(spec_search,),
            method="Nelder-Mead",
            options=options,
        )
        if not np.isfinite(res.fun):
            raise RuntimeError(f"optimizer diverged at restart {idx}: {res.message}")
        if res.fun < best_val:
            best_val, best_x, best_idx = float(res.fun), res.x.copy(), idx

    if best_val < -ideal_regular_volume(min(n, 3)).v_n - 1.0 and n <= 3:
        raise RuntimeError(
            f"optimizer diverged: value {best_val} below any attainable signed volume"
        )

    w = best_x.reshape(n + 1, n)
    norms = np.linalg.norm(w, axis=1)
    w = w * np.where(norms > 1.0, 1.0 / np.maximum(norms, 1e-300), 1.0)[:, None]
    if exact:
        value = objective(w.ravel(), spec_search)
        tol = 1e-9
    else:
        value = objective(w.ravel(), spec_final)
        tol = float(options["fatol"]) + spec_final.abs_tol
    out = VLEstimate(n, float(L), float(value), restarts, w, tol)
    _VL_CACHE[key] = out
    return out


_L0_MARGIN = 1e-3


def _l0_bracket(n: int, restarts: int, seed: int):
    """Bracket [lo, hi] on the 0.25 grid with vl(lo) <= margin < vl(hi).

    Relies on monotonicity of vl_estimate in L (a spec'd invariant of the
    estimator).
    """
    key = (n, restarts, seed)
    if key in _L0_CACHE:
        return _L0_CACHE[key]

    def val(L: float) -> float:
        return vl_estimate(n, L, restarts, seed).value

    lo = 2.0
    hi = None
    for cand in (3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0):
        if val(cand) > _L0_MARGIN:
            hi = cand
            break
        lo = cand
    if hi is None:
        raise RuntimeError("no positive-volume threshold found below L = 64")
    while hi - lo > 0.25 + 1e-12:
        mid = lo + 0.25 * round((hi - lo) / 2.0 / 0.25)
        if mid <= lo or mid >= hi:
            break
        if val(mid) > _L0_MARGIN:
            hi = mid
        else:
            lo = mid
    _L0_CACHE[key] = (lo, hi)
    return lo, hi


def l0_estimate(n: int, restarts: int = 6, seed: int = DEFAULT_SEED) -> float:
    """Threshold edge length above which every radius-1 perturbation keeps
    positive signed volume, located on a 0.25 grid and bisected to 0.01.

    The returned L satisfies vl_estimate(n, L) > 1e-3.
    """
    lo, hi = _l0_bracket(n, restarts, seed)

    def val(L: float) -> float:
        return vl_estimate(n, L, restarts, seed).value

    while hi - lo > 0.01:
        mid = 0.5 * (lo + hi)
        if val(mid) > _L0_MARGIN:
            hi = mid
        else:
            lo = mid
    return hi


def gap_bound(n: int, L: float, r, vl) -> float:
    """(1 - r g(L+3)) / (1 + r g(L)) times the V_L estimate.

    Negative values (vacuous bound) are returned unclamped.
    """
    rv = float(getattr(r, "r", r))
    if rv < 0:
        raise ValueError("boundary ratio must be >= 0")
    value = float(getattr(vl, "value", vl))
    g_outer = tube_factor(n, float(L) + 3.0)
    g_inner = tube_factor(n, float(L))
    return (1.0 - rv * g_outer) / (1.0 + rv * g_inner) * value


def solve_k(
    n: int,
    eta: float,
    restarts: int = 6,
    seed: int = DEFAULT_SEED,
) -> GapCertificate:
    """Constructive solver for the boundary-ratio constant k(eta, n).

    Finds the smallest half-integer L1 at or above the positivity threshold
    with vl_estimate(n, L1) > v_n - eta/2, then solves
    (1 - k g(L1+3)) / (1 + k g(L1)) = (v_n - eta)/(v_n - eta/2) for k.
    Any boundary ratio r <= k then certifies a gap bound >= v_n - eta.
    """
    vn = ideal_regular_volume(n).v_n
    if not (0.0 < eta < vn):
        raise ValueError(f"eta must lie in (0, v_n) = (0, {vn})")
    target = vn - eta / 2.0

    def val(L: float) -> float:
        return vl_estimate(n, L, restarts, seed).value

    # the 0.25-grid threshold anchors the half-integer grid; refining it to
    # 0.01 cannot move the smallest admissible half-integer point, because
    # every grid point below the coarse threshold has vl <= 1e-3 << target
    _, l0 = _l0_bracket(n, restarts, seed)
    start = math.ceil(l0 / 0.5 - 1e-12) * 0.5

    def grid(i: int) -> float:
        return start + 0.5 * i

    # doubling scan for an upper bracket, then bisection on the grid index
    # (vl_estimate is monotone in L per its contract)
    below = -1
    above = None
    i, stride = 0, 1
    while grid(i) <= 64.0:
        if val(grid(i)) > target:
            above = i
            break
        below = i
        i += stride
        stride *= 2
    if above is None:
        raise RuntimeError(
            f"no half-integer L below 64 reaches V_L > v_n - eta/2 = {target}; "
            "optimizer or quadrature accuracy insufficient for this eta"
        )
    while above - below > 1:
        mid = (above + below) // 2
        if val(grid(mid)) > target:
            above = mid
        else:
            below = mid

    L1 = grid(above)
    vl1 = vl_estimate(n, L1, restarts, seed)
    if not vl1.value > target:
        raise RuntimeError("threshold search lost monotonicity; increase restarts")
    c = (vn - eta) / target
    k = (1.0 - c) / (tube_factor(n, L1 + 3.0) + c * tube_factor(n, L1))
    bound = gap_bound(n, L1, k, vl1)
    if not bound >= vn - eta:
        raise RuntimeError(
            f"certificate failed self-validation: bound {bound} < v_n - eta {vn - eta}"
        )
    return GapCertificate(n, float(eta), float(L1), float(k), vl1, float(bound))


def gluing_ratio_sequence(
    volM: float,
    volB0: float,
    imax: int,
    n: int = 2,
    l_grid=None,
    restarts: int = 6,
    seed: int = DEFAULT_SEED,
):
    """Boundary ratios and best gap bounds along the doubling tower whose
    i-th stage glues 2i copies of M along boundary B0.

    Stage i has volume 2i vol(M) and boundary 2 vol(B0), so the ratio is
    volB0/(i volM); the bound is maximized over the L grid.  Returns a list
    of (i, r_i, bound_i), non-decreasing in bound_i.
    """
    if volM <= 0 or volB0 <= 0:
        raise ValueError("volumes must be positive")
    if imax < 1:
        raise ValueError("imax must be >= 1")
    if l_grid is None:
        l_grid = [4.0 + j for j in range(13)]
    vls = [(L, vl_estimate(n, L, restarts, seed)) for L in l_grid]
    rows = []
    for i in range(1, imax + 1):
        ri = volB0 / (i * volM)
        bound = max(gap_bound(n, L, ri, vl) for L, vl in vls)
        rows.append((i, ri, bound))
    return rows

"""Explicit compact hyperbolic surfaces given by Fuchsian side-pairing data.

A SurfaceModel is a fundamental polygon in H^2 together with the
side-pairing generators of a discrete torsion-free group.  Closed surfaces
pair every side; surfaces with geodesic boundary leave free sides lying on
complete geodesics whose unit polar vectors are listed in ``boundary``, and
the quotient of the full group action extends the surface by funnels.

Two bundled models ship as package data: a closed genus-2 surface (the
regular octagon with interior angles pi/4 and opposite sides paired) and a
one-holed torus (the right-angled regular octagon with two opposite side
pairs paired and the other four sides on the boundary).

Reduction to the fundamental domain is Dirichlet descent: apply whichever
generator most decreases the 0-coordinate of the image (monotone with
distance to the base point) until none does.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from hypsmear.hypgeom import (
    Frame,
    HPoint,
    Isometry,
    minkowski,
    to_klein,
)
from hypsmear.volume import gauss_bonnet_area, triangle_signed_area

__all__ = [
    "SurfaceModel",
    "bolza_model",
    "holed_torus_model",
    "save_model",
    "load_model",
    "bundled_model_path",
    "reduce_to_domain",
]

REDUCE_MAX_STEPS = 200
_PAIRING_TOL = 1e-8
_AREA_TOL = 1e-6


def _rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _x_translation(t: float) -> np.ndarray:
    c, s = math.cosh(t), math.sinh(t)
    return np.array([[c, s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _axis_translation(theta: float, t: float) -> np.ndarray:
    r = _rotation(theta)
    return r @ _x_translation(t) @ r.T


def _renormalize_rows(x: np.ndarray) -> np.ndarray:
    q = -(x[..., 0] ** 2) + np.sum(x[..., 1:] ** 2, axis=-1)
    return x / np.sqrt(-q)[..., None]


class SurfaceModel:
    """Validated side-pairing data for a compact hyperbolic surface."""

    def __init__(self, generators, polygon, boundary, base, chi: int):
        self.generators = tuple(
            g if isinstance(g, Isometry) else Isometry(g) for g in generators
        )
        self.polygon = tuple(p if isinstance(p, HPoint) else HPoint(p) for p in polygon)
        self.boundary = tuple(np.asarray(u, dtype=float) for u in boundary)
        self.base = base if isinstance(base, HPoint) else HPoint(base)
        self.chi = int(chi)
        if self.chi >= 0:
            raise ValueError("hyperbolic surfaces have negative Euler characteristic")
        self.exact_area = 2.0 * math.pi * abs(self.chi)

        self.gen_mats = np.stack([g.matrix for g in self.generators])
        from hypsmear.hypgeom import transport_from_origin

        t = transport_from_origin(self.base)
        self.base_frame = Frame(self.base, (t @ np.vstack([[0, 0], np.eye(2)])).T)

        self._inv_index = self._closure_under_inverses()
        self._validate_boundary()
        self._validate_side_pairing()
        self._validate_area()
        self._line_cache: dict = {}
        self._ball_cache: dict = {}

    # --- validation -----------------------------------------------------

    def _closure_under_inverses(self) -> np.ndarray:
        inv = np.full(len(self.generators), -1, dtype=int)
        for i, g in enumerate(self.generators):
            gi = g.inverse().matrix
            for j, h in enumerate(self.generators):
                if np.max(np.abs(h.matrix - gi)) < 1e-9:
                    inv[i] = j
                    break
            if inv[i] < 0:
                raise ValueError(f"generator {i} has no listed inverse")
        return inv

    def _validate_boundary(self):
        for u in self.boundary:
            if u.shape != (3,):
                raise ValueError("boundary polar vectors must have 3 components")
            q = float(-u[0] ** 2 + u[1] ** 2 + u[2] ** 2)
            if abs(q - 1.0) > 1e-9:
                raise ValueError(f"boundary polar not unit spacelike: <u,u> = {q}")
            if float(minkowski(self.base.coords, u)) >= 0:
                raise ValueError("base point must lie strictly inside every boundary line")

    def _side_is_boundary(self, a: np.ndarray, b: np.ndarray) -> bool:
        for u in self.boundary:
            if abs(minkowski(a, u)) < _PAIRING_TOL and abs(minkowski(b, u)) < _PAIRING_TOL:
                return True
        return False

    def _validate_side_pairing(self):
        v = np.array([p.coords for p in self.polygon])
        m = len(v)
        sides = [(v[i], v[(i + 1) % m]) for i in range(m)]
        self._boundary_side_index = []
        for i, (a, b) in enumerate(sides):
            if self._side_is_boundary(a, b):
                self._boundary_side_index.append(i)
                continue
            found = False
            for g in self.gen_mats:
                for c, d in sides:
                    gc, gd = _renormalize_rows(g @ c), _renormalize_rows(g @ d)
                    direct = max(np.max(np.abs(gc - a)), np.max(np.abs(gd - b)))
                    flipped = max(np.max(np.abs(gc - b)), np.max(np.abs(gd - a)))
                    if min(direct, flipped) < _PAIRING_TOL:
                        found = True
                        break
                if found:
                    break
            if not found:
                raise ValueError(f"polygon side {i} is not paired by any generator")
        if self.boundary and not self._boundary_side_index:
            raise ValueError("boundary polars listed but no polygon side lies on them")

    def _validate_area(self):
        v = self.polygon
        total = 0.0
        for i in range(1, len(v) - 1):
            total += triangle_signed_area(v[0], v[i], v[i + 1])
        if total < 0:
            raise ValueError("polygon must be positively oriented")
        if abs(total - self.exact_area) > _AREA_TOL:
            raise ValueError(
                f"triangulated polygon area {total} does not match 2 pi |chi| = {self.exact_area}"
            )
        self._poly_area = total

    # --- derived geometry ------------------------------------------------

    @property
    def poly_coords(self) -> np.ndarray:
        return np.array([p.coords for p in self.polygon])

    def klein_polygon(self) -> np.ndarray:
        return to_klein(self.poly_coords)

    def domain_radius(self) -> float:
        return float(np.max(np.arccosh(self.poly_coords[:, 0])))

    def boundary_length(self) -> float:
        """Total length of the polygon sides lying on boundary lines."""
        v = self.poly_coords
        m = len(v)
        total = 0.0
        for i in self._boundary_side_index:
            c = -minkowski(v[i], v[(i + 1) % m])
            total += math.acosh(max(c, 1.0))
        return total

    def point_in_polygon(self, coords: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        """Vectorized convex-polygon membership in the Klein chart."""
        u = np.atleast_2d(np.asarray(coords, dtype=float))
        if u.shape[-1] == 3:
            u = to_klein(u)
        kv = self.klein_polygon()
        edges = np.roll(kv, -1, axis=0) - kv
        rel = u[:, None, :] - kv[None, :, :]
        cross = edges[None, :, 0] * rel[..., 1] - edges[None, :, 1] * rel[..., 0]
        return np.all(cross >= -tol, axis=1)

    def element_ball(self, radius: float) -> np.ndarray:
        """All group elements moving the base point at most ``radius``,
        as a stack of matrices found by breadth-first search over words.

        Elements are deduplicated through their orbit points, which is exact
        because the group acts freely with systole well above the rounding
        noise.
        """
        key = round(radius, 6)
        if key in self._ball_cache:
            return self._ball_cache[key]
        limit = math.cosh(radius)
        explore = math.cosh(radius + 3.2)
        seen = {(2, 0, 0)}  # quantized orbit point of the identity
        mats = [np.eye(3)]
        frontier = [np.eye(3)]
        while frontier:
            new = []
            for m in frontier:
                for g in self.gen_mats:
                    cand = g @ m
                    col = cand[:, 0]
                    if col[0] > explore:
                        continue
                    tok = tuple(int(round(2.0 * x)) for x in col)
                    if tok in seen:
                        continue
                    seen.add(tok)
                    new.append(cand)
                    mats.append(cand)
            frontier = new
        out = np.stack([m for m in mats if m[0, 0] <= limit + 1e-12])
        self._ball_cache[key] = out
        return out

    def boundary_lines(self, radius: float) -> np.ndarray:
        """Unit polar vectors of every boundary-geodesic lift whose line
        passes within ``radius`` of the base point (empty for closed models).

        Polars transform vectorially (u -> g u), and the half-plane
        {<x, u> > 0} is the funnel side.
        """
        if not self.boundary:
            return np.zeros((0, 3))
        key = round(radius, 6)
        if key in self._line_cache:
            return self._line_cache[key]
        keep_limit = math.sinh(radius)
        explore_limit = math.sinh(radius + 6.5)
        seen = {}
        frontier = []
        for u in self.boundary:
            tok = tuple(int(round(x / 1e-5)) for x in u)
            seen[tok] = u
            frontier.append(u)
        while frontier:
            new = []
            for u in frontier:
                for g in self.gen_mats:
                    v = g @ u
                    if abs(v[0]) > explore_limit:
                        continue
                    tok = tuple(int(round(x / 1e-5)) for x in v)
                    if tok in seen:
                        continue
                    seen[tok] = v
                    new.append(v)
            frontier = new
        lines = [u for u in seen.values() if abs(u[0]) <= keep_limit]
        order = np.lexsort(np.array(lines).T[::-1])
        out = np.array(lines)[order]
        self._line_cache[key] = out
        return out

    # --- reduction --------------------------------------------------------

    def reduce_batch(self, coords: np.ndarray, want_elements: bool = True):
        """Dirichlet-descend every row into the fundamental domain.

        Returns (reduced coords, elements) with element @ reduced = original;
        elements is None when not requested.  Rows must satisfy the distance
        budget of reduce_to_domain.
        """
        x = np.array(coords, dtype=float)
        # guard on the raw coordinates: past the budget the renormalizer
        # itself degenerates (cosh^2 - sinh^2 underflows to 0)
        if np.any(x[:, 0] > math.cosh(40.0)):
            raise ValueError("point beyond the distance-40 reduction budget")
        x = _renormalize_rows(x)
        n = x.shape[0]
        elems = np.broadcast_to(np.eye(3), (n, 3, 3)).copy() if want_elements else None
        inv_mats = self.gen_mats[self._inv_index]
        active = np.arange(n)
        steps = 0
        while active.size:
            steps += 1
            if steps > REDUCE_MAX_STEPS:
                raise RuntimeError("reduction step budget exceeded")
            xa = x[active]
            imgs0 = np.einsum("gj,bj->bg", self.gen_mats[:, 0, :], xa)
            best = np.argmin(imgs0, axis=1)
            bestval = imgs0[np.arange(active.size), best]
            improve = bestval < xa[:, 0] * (1.0 - 1e-15)
            if not improve.any():
                break
            rows = active[improve]
            b = best[improve]
            x[rows] = _renormalize_rows(
                np.einsum("bij,bj->bi", self.gen_mats[b], x[rows])
            )
            if want_elements:
                elems[rows] = np.einsum("bij,bjk->bik", elems[rows], inv_mats[b])
            active = rows
        return x, elems

    def fold_batch(self, coords: np.ndarray, lines: np.ndarray):
        """Reflect rows across boundary-line lifts until none is in a funnel
        half-plane.  Returns (folded coords, unfold matrices U) with
        U @ folded = original.  No-op for closed models."""
        x = np.array(coords, dtype=float)
        n = x.shape[0]
        unf = np.broadcast_to(np.eye(3), (n, 3, 3)).copy()
        if lines.shape[0] == 0:
            return x, unf
        j = np.array([-1.0, 1.0, 1.0])
        active = np.arange(n)
        for _ in range(64):
            if not active.size:
                break
            s = np.einsum("bj,lj,j->bl", x[active], lines, j)
            worst = np.argmax(s, axis=1)
            val = s[np.arange(active.size), worst]
            out = val > 1e-14
            if not out.any():
                break
            rows = active[out]
            u = lines[worst[out]]
            proj = np.einsum("bj,bj->b", x[rows] * j, u)
            x[rows] = x[rows] - 2.0 * proj[:, None] * u
            # reflection matrix R = I - 2 u (Ju)^T is an involution
            refl = np.eye(3) - 2.0 * np.einsum("bi,bj->bij", u, u * j)
            unf[rows] = np.einsum("bij,bjk->bik", unf[rows], refl)
            active = rows
        else:
            raise RuntimeError("funnel folding did not terminate")
        return x, unf

    def distance_to_boundary(self, coords: np.ndarray, lines: np.ndarray) -> np.ndarray:
        """Signed distance to the boundary-line family: positive depth inside
        the surface, negative depth inside a funnel.  +inf for closed models."""
        x = np.atleast_2d(coords)
        if lines.shape[0] == 0:
            return np.full(x.shape[0], np.inf)
        j = np.array([-1.0, 1.0, 1.0])
        s = np.einsum("bj,lj,j->bl", x, lines, j)
        worst = np.max(s, axis=1)
        return -np.arcsinh(worst)


def reduce_to_domain(x: HPoint, model: SurfaceModel):
    """Project a point to the fundamental domain.

    Returns (point in the domain, Isometry gamma) with gamma applied to the
    reduced point giving back x.
    """
    c = np.asarray(getattr(x, "coords", x), dtype=float)[None, :]
    red, elems = model.reduce_batch(c, want_elements=True)
    return HPoint(red[0]), Isometry(elems[0], validate=False)


# --- bundled models -------------------------------------------------------


def _octagon_vertices(vertex_radius: float) -> list:
    out = []
    ch, sh = math.cosh(vertex_radius), math.sinh(vertex_radius)
    for k in range(8):
        ang = (2 * k + 1) * math.pi / 8.0
        out.append(np.array([ch, sh * math.cos(ang), sh * math.sin(ang)]))
    return out


def bolza_model() -> SurfaceModel:
    """Closed genus-2 surface: regular octagon with interior angle pi/4,
    opposite sides paired by the four translations through the side
    midpoints (translation length twice the apothem)."""
    beta = math.pi / 8.0
    vertex_radius = math.acosh(1.0 / math.tan(beta) ** 2)
    apothem = math.acosh(math.cos(beta) / math.sin(beta))
    gens = []
    for k in range(4):
        t = _axis_translation(k * math.pi / 4.0, 2.0 * apothem)
        gens.append(t)
        gens.append(np.linalg.inv(t))
    return SurfaceModel(
        generators=gens,
        polygon=_octagon_vertices(vertex_radius),
        boundary=[],
        base=[1.0, 0.0, 0.0],
        chi=-2,
    )


def holed_torus_model() -> SurfaceModel:
    """One-holed torus with geodesic boundary: right-angled regular octagon,
    sides 0/4 and 2/6 paired, sides 1, 3, 5, 7 on the boundary geodesics."""
    beta = math.pi / 4.0
    vertex_radius = math.acosh(1.0 / (math.tan(math.pi / 8.0) * math.tan(beta)))
    apothem = math.acosh(math.cos(beta) / math.sin(math.pi / 8.0))
    gens = []
    for k in (0, 2):
        t = _axis_translation(k * math.pi / 4.0, 2.0 * apothem)
        gens.append(t)
        gens.append(np.linalg.inv(t))
    polars = []
    sh, ch = math.sinh(apothem), math.cosh(apothem)
    for k in (1, 3, 5, 7):
        ang = k * math.pi / 4.0
        polars.append(np.array([sh, ch * math.cos(ang), ch * math.sin(ang)]))
    return SurfaceModel(
        generators=gens,
        polygon=_octagon_vertices(vertex_radius),
        boundary=polars,
        base=[1.0, 0.0, 0.0],
        chi=-1,
    )


def save_model(model: SurfaceModel, path):
    doc = {
        "dim": 2,
        "generators": [[float(v) for v in g.matrix.ravel()] for g in model.generators],
        "polygon": [[float(v) for v in p.coords] for p in model.polygon],
        "boundary": [[float(v) for v in u] for u in model.boundary],
        "base": [float(v) for v in model.base.coords],
        "chi": model.chi,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_model(path) -> SurfaceModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("dim") != 2:
        raise ValueError("only dim=2 surface models are supported")
    gens = [np.array(g, dtype=float).reshape(3, 3) for g in doc["generators"]]
    return SurfaceModel(
        generators=gens,
        polygon=[np.array(p, dtype=float) for p in doc["polygon"]],
        boundary=[np.array(u, dtype=float) for u in doc.get("boundary", [])],
        base=np.array(doc["base"], dtype=float),
        chi=doc["chi"],
    )


def bundled_model_path(name: str):
    """Filesystem path of a bundled model: 'genus2' or 'holed_torus'."""
    files = {"genus2": "genus2_octagon.json", "holed_torus": "holed_torus.json"}
    if name not in files:
        raise ValueError(f"unknown bundled model {name!r}; choose from {sorted(files)}")
    return resources.files("hypsmear.data").joinpath(files[name])

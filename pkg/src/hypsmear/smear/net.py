"""Group-equivariant nets of cell centers on a surface's universal cover.

A net is a finite list of center points in the fundamental polygon whose
full group orbit covers the plane with balls of radius <= 1/2.  Cells are
the Voronoi cells of the orbit, so they are equivariant by construction and
have diameter <= 1.

For models with geodesic boundary the orbit is implicitly extended by the
reflection group across every boundary-line lift: the center set is mirror
symmetric across each line, hence Voronoi walls contain the lines and no
cell crosses the boundary.  Lookups in funnel territory fold the query
point into the surface region by reflections, resolve the cell there, and
unfold; nothing in the funnels is ever enumerated.
"""

from __future__ import annotations

import math

import numpy as np

from hypsmear.hypgeom import HPoint
from hypsmear.smear.surface import SurfaceModel, _renormalize_rows

__all__ = ["GammaNet", "build_net"]

# quantization grids for canonical integer tokens; safe because the
# corresponding separations (>= 0.1 between orbit representatives,
# >= sqrt(2 cosh(systole) - 2) > 4 between orbit points) dwarf the
# float noise of reduction, measured at ~1e-8
CENTER_TOKEN_GRID = 0.025
ELEMENT_TOKEN_GRID = 1.0
_LINE_MARGIN = 0.05
_MAX_CENTERS = 4000
_COVER_SAMPLE = 10_000
_NET_SEED = 20210809


def _uniform_polygon_points(model: SurfaceModel, count: int, rng) -> np.ndarray:
    """Deterministic area-uniform points of the fundamental polygon via
    rejection in the Klein chart (density (1-|u|^2)^{-3/2})."""
    kv = model.klein_polygon()
    r_box = float(np.max(np.abs(kv)))
    r_max = float(np.max(np.linalg.norm(kv, axis=1)))
    out = []
    have = 0
    while have < count:
        u = rng.uniform(-r_box, r_box, size=(8192, 2))
        acc = rng.random(8192)
        rho2 = np.sum(u * u, axis=1)
        density = np.zeros(8192)
        disk = rho2 < 1.0
        density[disk] = ((1.0 - r_max * r_max) / (1.0 - rho2[disk])) ** 1.5
        keep = model.point_in_polygon(u) & (acc < density)
        got = u[keep]
        out.append(got)
        have += len(got)
    u = np.concatenate(out)[:count]
    w = 1.0 / np.sqrt(1.0 - np.sum(u * u, axis=1))
    return np.column_stack([w, u[:, 0] * w, u[:, 1] * w])


class GammaNet:
    """Net centers plus the precomputed candidate cloud used by lookups."""

    def __init__(self, model: SurfaceModel, centers: np.ndarray, covering_radius: float):
        self.centers = tuple(HPoint(c) for c in centers)
        self.covering_radius = float(covering_radius)
        self.mirrored = bool(model.boundary)
        self._coords = np.array([c.coords for c in self.centers])
        self._ctok = np.round(self._coords / CENTER_TOKEN_GRID).astype(np.int64)

        # the dense-sample covering radius underestimates the true one by at
        # most the sample gap; allow that slack in the lookup guard and reach
        self._lookup_slack = 0.2
        r_cloud = model.domain_radius() + self.covering_radius + self._lookup_slack + 0.05
        elems = model.element_ball(r_cloud + model.domain_radius())
        pts, cids, eidx = [], [], []
        # candidate order (center index, BFS word order) implements the
        # lowest-(index, word) tie rule
        for ci in range(len(self._coords)):
            imgs = elems @ self._coords[ci]
            keep = np.flatnonzero(imgs[:, 0] <= math.cosh(r_cloud))
            pts.append(imgs[keep])
            cids.append(np.full(keep.size, ci))
            eidx.append(keep)
        self._cloud_pts = np.concatenate(pts)
        self._cloud_cid = np.concatenate(cids)
        self._cloud_mats = elems[np.concatenate(eidx)]

    def __len__(self) -> int:
        return len(self.centers)

    def assign(self, model: SurfaceModel, coords: np.ndarray, lines: np.ndarray):
        """Resolve the net cell of every row of ``coords``.

        Returns (ctok, emat, pos): integer center tokens (B, 3), group
        elements E with E @ representative = center (B, 3, 3), and the
        concrete center positions in the sample frame (B, 3).
        """
        x = np.asarray(coords, dtype=float)
        # reduce first so folding only ever reflects across lines near the
        # fundamental domain; far-line reflections amplify rounding error
        # like cosh(2 dist) and would corrupt deep funnel queries
        x1, gam1 = model.reduce_batch(x, want_elements=True)
        folded, unfold = model.fold_batch(x1, lines)
        red, gam2 = model.reduce_batch(folded, want_elements=True)

        # <red, cloud> = -cosh(distance); nearest center maximizes the pairing
        j = np.array([-1.0, 1.0, 1.0])
        pairing = (red * j) @ self._cloud_pts.T
        idx = np.argmax(pairing, axis=1)
        best = -pairing[np.arange(len(red)), idx]
        if np.any(best > math.cosh(self.covering_radius + self._lookup_slack)):
            raise RuntimeError("cell lookup failure: nearest center beyond covering radius")

        cid = self._cloud_cid[idx]
        was_folded = np.abs(unfold[:, 0, 0] - 1.0) > 1e-15

        # center position in the sample frame, one well-conditioned stage at
        # a time: eta c -> gam2 -> unfold -> gam1
        pos = np.einsum("bij,bj->bi", gam2, self._cloud_pts[idx])
        if was_folded.any():
            pos[was_folded] = np.einsum(
                "bij,bj->bi", unfold[was_folded], pos[was_folded]
            )
        pos_dom = _renormalize_rows(pos)
        pos = _renormalize_rows(np.einsum("bij,bj->bi", gam1, pos_dom))

        emat = np.einsum(
            "bij,bjk->bik", gam1, np.einsum("bij,bjk->bik", gam2, self._cloud_mats[idx])
        )
        ctok = self._ctok[cid].copy()

        rows = np.flatnonzero(was_folded)
        if rows.size:
            # funnel-side centers: reduce the mirrored center position to its
            # orbit representative; snap to a stored interior center when it
            # is one, otherwise quantize the exterior representative
            rep, e2 = model.reduce_batch(pos_dom[rows], want_elements=True)
            emat[rows] = np.einsum("bij,bjk->bik", gam1[rows], e2)
            near = (rep * j) @ self._coords.T
            ci2 = np.argmax(near, axis=1)
            is_interior = -near[np.arange(len(rep)), ci2] < 1.0 + 1e-9
            tok = np.round(rep / CENTER_TOKEN_GRID).astype(np.int64)
            tok[is_interior] = self._ctok[ci2[is_interior]]
            ctok[rows] = tok
        return ctok, emat, pos


def build_net(model: SurfaceModel, target_radius: float) -> GammaNet:
    """Greedy covering of the fundamental polygon by net centers.

    Repeatedly adds a center at the admissible sample point nearest to the
    worst-covered point until the dense-sample covering radius drops to the
    target.  Admissible points keep a small margin from boundary lines so
    mirror twins stay separated.
    """
    if not 0.0 < target_radius <= 0.5:
        raise ValueError("target_radius must lie in (0, 1/2]")
    rng = np.random.default_rng(_NET_SEED)
    sample = _uniform_polygon_points(model, _COVER_SAMPLE, rng)
    kv = model.klein_polygon()
    mids = 0.5 * (kv + np.roll(kv, -1, axis=0))
    extra = np.concatenate([kv, mids])
    w = 1.0 / np.sqrt(1.0 - np.sum(extra * extra, axis=1))
    extra = np.column_stack([w, extra[:, 0] * w, extra[:, 1] * w])
    sample = np.concatenate([sample, _renormalize_rows(extra)])

    if model.boundary:
        lines = model.boundary_lines(model.domain_radius() + 1.0)
        depth = model.distance_to_boundary(sample, lines)
        cand_ok = depth >= _LINE_MARGIN
    else:
        cand_ok = np.ones(len(sample), dtype=bool)

    ball = model.element_ball(2.0 * model.domain_radius() + 1.0)
    j = np.array([-1.0, 1.0, 1.0])
    mins = np.full(len(sample), np.inf)
    centers = []
    while len(centers) < _MAX_CENTERS:
        far = int(np.argmax(mins))
        if mins[far] <= target_radius:
            break
        if not cand_ok.any():
            raise RuntimeError("covering not achieved: admissible candidates exhausted")
        # candidate nearest to the worst-covered point
        d_far = -(sample[cand_ok] * j) @ sample[far]
        pick = np.flatnonzero(cand_ok)[int(np.argmin(d_far))]
        c = sample[pick]
        centers.append(c)
        cand_ok[pick] = False
        imgs = ball @ c
        dist = np.arccosh(np.maximum(1.0, -(sample * j) @ imgs.T))
        np.minimum(mins, dist.min(axis=1), out=mins)
        # keep later centers clear of this one
        cand_ok &= np.arccosh(np.maximum(1.0, -(sample * j) @ c)) > 1e-3
    else:
        raise RuntimeError("covering not achieved within the center budget")

    return GammaNet(model, np.array(centers), float(np.max(mins)))

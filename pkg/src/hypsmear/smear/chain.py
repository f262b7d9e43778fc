"""Monte-Carlo accumulation of smeared simplicial chains on a surface.

Frames are sampled from the isometry group so that the induced measure on
the quotient assigns each base region its hyperbolic area and the rotation
fiber carries total mass one.  Each sampled frame g contributes two
simplices: the image of a fixed regular triangle of side L and the image of
its mirror copy.  Vertices are snapped to net cells, the resulting cell
simplex is canonicalized to an integer key invariant under the surface
group, and per-key tallies of +/- hits build the chain

    a_sigma = scale * (b_plus - b_minus) / 2,   scale = area / samples.

Keys pack, per vertex, the quantized orbit representative of the cell
center and the quantized orbit point of the group element carrying the
representative to the actual center, normalized so the first vertex's
element is the identity.  Quantization grids sit orders of magnitude above
the measured float noise and below the minimal separations, so equal keys
mean equal cell simplices and conversely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from hypsmear.hypgeom import Frame, HPoint
from hypsmear.smear.net import CENTER_TOKEN_GRID, ELEMENT_TOKEN_GRID, GammaNet
from hypsmear.smear.surface import SurfaceModel, _renormalize_rows
from hypsmear.volume import regular_simplex

__all__ = [
    "SmearChain",
    "RatioReport",
    "FaceResidual",
    "haar_sample",
    "accumulate_chain",
    "boundary_residuals",
    "ratio_report",
    "inclusion_check",
    "measure_sandwich",
    "element_word",
]

_SHARD = 32768
_J = np.array([-1.0, 1.0, 1.0])

CLASS_DISCARD = 0
CLASS_INT = 1
CLASS_EXT = 2
_CLASS_NAMES = {CLASS_INT: "int", CLASS_EXT: "ext"}


# --- sampling ---------------------------------------------------------------


def _rejection_positions(model: SurfaceModel, count: int, rng) -> tuple:
    """Area-uniform base points of the fundamental polygon plus uniform
    rotation angles.  Draws a fixed block of uniforms per candidate so the
    accepted stream depends only on the rng state, never on block sizes."""
    kv = model.klein_polygon()
    r_box = float(np.max(np.abs(kv)))
    r_max2 = float(np.max(np.sum(kv * kv, axis=1)))
    pts, angs = [], []
    have = drawn = 0
    while have < count:
        u = rng.uniform(-r_box, r_box, size=(8192, 2))
        acc = rng.random(8192)
        theta = rng.random(8192) * (2.0 * math.pi)
        rho2 = np.sum(u * u, axis=1)
        density = np.zeros(8192)
        disk = rho2 < 1.0
        density[disk] = ((1.0 - r_max2) / (1.0 - rho2[disk])) ** 1.5
        keep = model.point_in_polygon(u) & (acc < density)
        pts.append(u[keep])
        angs.append(theta[keep])
        have += int(keep.sum())
        drawn += 8192
        if drawn >= 65536 and have < max(1, drawn // 1000):
            raise RuntimeError("rejection efficiency below 1e-3: bad bounding box")
    u = np.concatenate(pts)[:count]
    theta = np.concatenate(angs)[:count]
    w = 1.0 / np.sqrt(1.0 - np.sum(u * u, axis=1))
    p = np.column_stack([w, u[:, 0] * w, u[:, 1] * w])
    return p, theta


def _frame_matrices(p: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Isometries T_p R(theta): rotate the reference frame, transport to p."""
    n = len(p)
    t = np.zeros((n, 3, 3))
    d = 1.0 + p[:, 0]
    t[:, 0, 0] = p[:, 0]
    t[:, 0, 1] = t[:, 1, 0] = p[:, 1]
    t[:, 0, 2] = t[:, 2, 0] = p[:, 2]
    t[:, 1, 1] = 1.0 + p[:, 1] ** 2 / d
    t[:, 2, 2] = 1.0 + p[:, 2] ** 2 / d
    t[:, 1, 2] = t[:, 2, 1] = p[:, 1] * p[:, 2] / d
    c, s = np.cos(theta), np.sin(theta)
    r = np.zeros((n, 3, 3))
    r[:, 0, 0] = 1.0
    r[:, 1, 1] = c
    r[:, 1, 2] = -s
    r[:, 2, 1] = s
    r[:, 2, 2] = c
    return np.einsum("bij,bjk->bik", t, r)


def _shards(samples: int) -> Iterator[tuple]:
    idx = 0
    done = 0
    while done < samples:
        take = min(_SHARD, samples - done)
        yield idx, take
        idx += 1
        done += take


def _shard_mats(model: SurfaceModel, seed: int, shard: int, count: int) -> np.ndarray:
    rng = np.random.default_rng([seed, shard])
    p, theta = _rejection_positions(model, count, rng)
    return _frame_matrices(p, theta)


def haar_sample(model: SurfaceModel, samples: int, seed: int) -> Iterator[Frame]:
    """Stream of frames distributed by the group's Haar measure, normalized
    so Monte-Carlo masses scale by exact_area/samples."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    for shard, count in _shards(samples):
        mats = _shard_mats(model, seed, shard, count)
        for m in mats:
            yield Frame(HPoint(m[:, 0]), m[:, 1:].T.copy())


# --- geometry helpers -------------------------------------------------------


def _triangle_areas(verts: np.ndarray) -> np.ndarray:
    """Signed hyperbolic areas (angle defect) of vertex triples, vectorized.

    Matches triangle_signed_area: cos of the angle at vertex v against the
    pair (p, q) is (G_pq + G_vp G_vq) / sqrt((G_vp^2-1)(G_vq^2-1)) with G the
    Minkowski Gram matrix; degenerate triples get area zero.
    """
    g = np.einsum("kvi,i,kwi->kvw", verts, _J, verts)
    angles = np.zeros(len(verts))
    degenerate = np.zeros(len(verts), dtype=bool)
    for v, p, q in ((0, 1, 2), (1, 0, 2), (2, 0, 1)):
        num = g[:, p, q] + g[:, v, p] * g[:, v, q]
        den2 = (g[:, v, p] ** 2 - 1.0) * (g[:, v, q] ** 2 - 1.0)
        degenerate |= den2 <= 1e-24
        cosang = num / np.sqrt(np.maximum(den2, 1e-24))
        angles += np.arccos(np.clip(cosang, -1.0, 1.0))
    area = math.pi - angles
    sign = np.sign(np.linalg.det(verts))
    out = np.abs(area) * np.where(sign == 0, 0.0, sign)
    out[degenerate] = 0.0
    return out


def _classify(pos3: np.ndarray, lines: np.ndarray) -> np.ndarray:
    """0 = image misses the surface interior (all vertices beyond one common
    boundary line), 1 = all vertices strictly inside, 2 = crossing."""
    b = len(pos3)
    if lines.shape[0] == 0:
        return np.full(b, CLASS_INT, dtype=np.int8)
    s = np.einsum("bvj,j,lj->bvl", pos3, _J, lines)
    outside = s >= 0.0
    discard = outside.all(axis=1).any(axis=1)
    interior = ~outside.any(axis=(1, 2))
    out = np.full(b, CLASS_EXT, dtype=np.int8)
    out[discard] = CLASS_DISCARD
    out[interior] = CLASS_INT
    return out


def _lorentz_inv(mats: np.ndarray) -> np.ndarray:
    return _J[None, :, None] * np.swapaxes(mats, -1, -2) * _J[None, None, :]


def _key_rows(ctok: np.ndarray, emat: np.ndarray, count: int) -> tuple:
    """Canonical integer key rows (count, 15) plus the per-vertex normalized
    element matrices of each row (needed lazily for new keys only)."""
    ct = ctok.reshape(count, 3, 3)
    em = emat.reshape(count, 3, 3, 3)
    e0inv = _lorentz_inv(em[:, 0])
    t1 = np.einsum("bij,bj->bi", e0inv, em[:, 1, :, 0])
    t2 = np.einsum("bij,bj->bi", e0inv, em[:, 2, :, 0])
    et1 = np.round(t1 / ELEMENT_TOKEN_GRID).astype(np.int64)
    et2 = np.round(t2 / ELEMENT_TOKEN_GRID).astype(np.int64)
    rows = np.concatenate([ct[:, 0], ct[:, 1], et1, ct[:, 2], et2], axis=1)
    return rows, e0inv


def _process_sign(model, net, lines, mats, qverts):
    """One shard, one simplex family: vertex images, cell data, key rows."""
    b = len(mats)
    verts = _renormalize_rows(np.einsum("bij,vj->bvi", mats, qverts))
    ctok, emat, cpos = net.assign(model, verts.reshape(-1, 3), lines)
    pos3 = cpos.reshape(b, 3, 3)
    cls = _classify(pos3, lines)
    rows, e0inv = _key_rows(ctok, emat, b)
    return verts, pos3, cls, rows, e0inv, emat.reshape(b, 3, 3, 3)


# --- the chain --------------------------------------------------------------


class FaceResidual(NamedTuple):
    key: tuple
    residual: float
    z_score: float
    total: int


@dataclass(frozen=True)
class RatioReport:
    omega: float
    l1_norm: float
    ratio: float
    implied_norm_upper: float
    mc_sigma: float


class SmearChain:
    """Accumulated tallies of cell simplices; see the module docstring."""

    def __init__(self, model: SurfaceModel, net: GammaNet, L: float, samples: int, seed: int):
        self.model = model
        self.net = net
        self.L = float(L)
        self.samples = int(samples)
        self.seed = int(seed)
        self.scale = model.exact_area / samples
        # negative-family vertices sit up to ~2*inradius beyond the
        # circumradius, hence the wide margin on the line set
        self.lines = model.boundary_lines(model.domain_radius() + _simplex_radius(2, L) + 3.5)
        self._index: dict = {}
        self._count = 0
        self._bp: list = []
        self._bm: list = []
        self._cls: list = []
        self._area: list = []
        # per-key geometry arrives in per-shard blocks, concatenated on demand
        self._vblocks: list = []
        self._e1blocks: list = []
        self._e2blocks: list = []
        self.u_sum = 0.0
        self.u_sqsum = 0.0
        self.discarded = {1: 0, -1: 0}
        self._entries_cache = None

    def __len__(self) -> int:
        return self._count

    @property
    def entries(self) -> dict:
        """SimplexKey tuple -> (b_plus, b_minus, class tag)."""
        if self._entries_cache is None or len(self._entries_cache) != self._count:
            self._entries_cache = {
                tuple(int(t) for t in k): (int(p), int(m), _CLASS_NAMES[c])
                for k, p, m, c in zip(self.key_array(), self._bp, self._bm, self._cls)
            }
        return self._entries_cache

    def key_array(self) -> np.ndarray:
        """Keys as an (K, 15) int64 array, in first-seen order."""
        if self._count == 0:
            return np.empty((0, 15), dtype=np.int64)
        buf = b"".join(self._index.keys())
        return np.frombuffer(buf, dtype=np.int64).reshape(self._count, 15)

    def _stacked(self, blocks: list) -> np.ndarray:
        if not blocks:
            return np.empty((0, 3, 3))
        if len(blocks) > 1:
            blocks[:] = [np.concatenate(blocks)]
        return blocks[0]

    def key_vertices(self) -> np.ndarray:
        return self._stacked(self._vblocks)

    def counts(self) -> tuple:
        return (
            np.array(self._bp, dtype=np.int64),
            np.array(self._bm, dtype=np.int64),
            np.array(self._cls, dtype=np.int8),
            np.array(self._area, dtype=float),
        )

    def _absorb(self, sign: int, cls, rows, pos3, e0inv, em) -> np.ndarray:
        """Merge one shard's rows; returns per-sample interior simplex areas."""
        b = len(rows)
        areas = np.zeros(b)
        kept = np.flatnonzero(cls != CLASS_DISCARD)
        self.discarded[sign] += int(b - kept.size)
        if kept.size == 0:
            return areas
        urows, first, inverse, counts = np.unique(
            rows[kept], axis=0, return_index=True, return_inverse=True, return_counts=True
        )
        index = self._index
        gidx = np.empty(len(urows), dtype=np.int64)
        fresh_src = []
        for i, row in enumerate(urows):
            bk = row.tobytes()
            hit = index.get(bk)
            if hit is None:
                hit = self._count
                index[bk] = hit
                self._count += 1
                src = kept[first[i]]
                self._bp.append(0)
                self._bm.append(0)
                self._cls.append(int(cls[src]))
                fresh_src.append(src)
            gidx[i] = hit
        if fresh_src:
            src = np.array(fresh_src)
            verts = pos3[src]
            self._vblocks.append(verts)
            self._e1blocks.append(np.einsum("bij,bjk->bik", e0inv[src], em[src, 1]))
            self._e2blocks.append(np.einsum("bij,bjk->bik", e0inv[src], em[src, 2]))
            self._area.extend(_triangle_areas(verts).tolist())
        tallies = self._bp if sign > 0 else self._bm
        for i, c in zip(gidx.tolist(), counts.tolist()):
            tallies[i] += c
        garea = np.array(self._area, dtype=float)
        gcls = np.array(self._cls, dtype=np.int8)
        sample_keys = gidx[inverse]
        areas[kept] = garea[sample_keys] * (gcls[sample_keys] == CLASS_INT)
        return areas


def _simplex_radius(n: int, L: float) -> float:
    return math.acosh(math.sqrt((n * math.cosh(L) + 1.0) / (n + 1.0)))


def _mirror_pair(L: float) -> tuple:
    """Vertex arrays of the two reference triangles.

    The negative family is the reflection of the positive one through the
    geodesic holding its first two vertices.  With that choice the shared
    face cancels sample by sample, and the remaining face tallies are sums
    of independent unit deposits, which is what the binomial z-score model
    of boundary_residuals assumes.
    """
    q_plus = regular_simplex(2, L).vertices
    polar = np.cross(_J * q_plus[0], _J * q_plus[1])
    polar = polar / math.sqrt(np.dot(polar * _J, polar))
    mirror = np.eye(3) - 2.0 * np.outer(polar, _J * polar)
    q_minus = q_plus @ mirror.T
    return q_plus, q_minus


def accumulate_chain(
    model: SurfaceModel, net: GammaNet, L: float, samples: int, seed: int = 1789
) -> SmearChain:
    """Sample `samples` frames and tally both simplex families into a chain."""
    if L < 1.0:
        raise ValueError("L must be >= 1")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    chain = SmearChain(model, net, L, samples, seed)
    q_plus, q_minus = _mirror_pair(L)
    for shard, count in _shards(samples):
        mats = _shard_mats(model, seed, shard, count)
        u = np.zeros(count)
        for sign, q in ((1, q_plus), (-1, q_minus)):
            _, pos3, cls, rows, e0inv, em = _process_sign(model, net, chain.lines, mats, q)
            areas = chain._absorb(sign, cls, rows, pos3, e0inv, em)
            u += sign * areas
        u *= 0.5
        chain.u_sum += float(u.sum())
        chain.u_sqsum += float((u * u).sum())
    return chain


def ratio_report(chain: SmearChain) -> RatioReport:
    """Volume-to-mass efficiency of the chain (interior part)."""
    if len(chain) == 0:
        raise ValueError("chain is empty")
    bp, bm, cls, area = chain.counts()
    interior = cls == CLASS_INT
    a = chain.scale * (bp - bm) / 2.0
    omega = float(np.sum(a[interior] * area[interior]))
    l1 = float(np.sum(np.abs(a[interior])))
    if omega <= 0.0:
        raise ValueError("omega <= 0: sample too small or L below the efficiency threshold")
    n = chain.samples
    mean = chain.u_sum / n
    var = max(0.0, (chain.u_sqsum - n * mean * mean) / max(1, n - 1))
    sigma_omega = chain.model.exact_area * math.sqrt(var / n)
    return RatioReport(
        omega=omega,
        l1_norm=l1,
        ratio=omega / l1,
        implied_norm_upper=chain.model.exact_area * l1 / omega,
        mc_sigma=sigma_omega / l1,
    )


def boundary_residuals(chain: SmearChain) -> list:
    """Per-face coefficients of the boundary of the chain, with z-scores.

    For each stored simplex the three faces enter with alternating signs; in
    exact measure the interior-face coefficients cancel.  The z-score is the
    signed count over the square root of the total count feeding the face.
    """
    k = len(chain)
    if k == 0:
        return []
    keys = chain.key_array()
    bp, bm, cls, _ = chain.counts()
    signed = bp - bm
    total = bp + bm
    verts = chain.key_vertices()
    e1 = chain._stacked(chain._e1blocks)
    e2 = chain._stacked(chain._e2blocks)
    e1inv = _lorentz_inv(e1)

    c0, c1, c2 = keys[:, 0:3], keys[:, 3:6], keys[:, 9:12]
    face_rows, face_signed, face_total, face_ok = [], [], [], []
    for j, (i0, i1) in enumerate(((1, 2), (0, 2), (0, 1))):
        if j == 0:
            col = np.einsum("bij,bj->bi", e1inv, e2[:, :, 0])
            ca, cb = c1, c2
        elif j == 1:
            col = e2[:, :, 0]
            ca, cb = c0, c2
        else:
            col = e1[:, :, 0]
            ca, cb = c0, c1
        etok = np.round(col / ELEMENT_TOKEN_GRID).astype(np.int64)
        face_rows.append(np.concatenate([ca, cb, etok], axis=1))
        face_signed.append(signed if j != 1 else -signed)
        face_total.append(total)
        if chain.lines.shape[0]:
            s = np.einsum("bvj,j,lj->bvl", verts[:, (i0, i1)], _J, chain.lines)
            face_ok.append(~(s >= 0.0).all(axis=1).any(axis=1))
        else:
            face_ok.append(np.ones(k, dtype=bool))

    rows = np.concatenate(face_rows)
    fs = np.concatenate(face_signed)
    ft = np.concatenate(face_total)
    ok = np.concatenate(face_ok)
    rows, fs, ft = rows[ok], fs[ok], ft[ok]
    urows, inverse = np.unique(rows, axis=0, return_inverse=True)
    agg_s = np.zeros(len(urows), dtype=np.int64)
    agg_t = np.zeros(len(urows), dtype=np.int64)
    np.add.at(agg_s, inverse, fs)
    np.add.at(agg_t, inverse, ft)

    z = agg_s / np.sqrt(np.maximum(agg_t, 1))
    order = np.lexsort(np.concatenate([urows.T[::-1], -np.abs(z)[None, :]]))
    out = []
    for i in order:
        out.append(
            FaceResidual(
                key=tuple(int(t) for t in urows[i]),
                residual=chain.scale * float(agg_s[i]) / 2.0,
                z_score=float(z[i]),
                total=int(agg_t[i]),
            )
        )
    return out


def measure_sandwich(chain: SmearChain) -> dict:
    """Retained +/- masses against area brackets from boundary-tube bounds."""
    from hypsmear.bounds import tube_factor

    bp, bm, _, _ = chain.counts()
    blen = chain.model.boundary_length()
    area = chain.model.exact_area
    low = area - blen * tube_factor(2, chain.L + 3.0) if blen else area
    high = area + blen * tube_factor(2, chain.L) if blen else area
    out = {}
    for name, b in (("plus", bp), ("minus", bm)):
        p = float(b.sum()) / chain.samples
        # area * p, not scale * count: full retention must give back the
        # area bitwise, since sigma is 0 there and the bracket is tight
        mass = area * p
        sigma = area * math.sqrt(max(p * (1.0 - p), 0.0) / chain.samples)
        out[name] = (mass, sigma)
    out["bracket"] = (low, high)
    return out


def inclusion_check(
    model: SurfaceModel, net: GammaNet, L: float, samples: int, seed: int = 1789
) -> int:
    """Count samples violating the retention logic: a simplex whose base
    vertex image is deeper than L+3 must be fully interior, and a retained
    simplex must have its base vertex image within depth L of the surface."""
    q_plus, q_minus = _mirror_pair(L)
    lines = model.boundary_lines(model.domain_radius() + _simplex_radius(2, L) + 3.5)
    violations = 0
    for shard, count in _shards(samples):
        mats = _shard_mats(model, seed, shard, count)
        for q in (q_plus, q_minus):
            verts, _, cls, _, _, _ = _process_sign(model, net, lines, mats, q)
            depth = model.distance_to_boundary(verts[:, 0], lines)
            viol_deep = (depth > L + 3.0) & (cls != CLASS_INT)
            viol_near = (cls != CLASS_DISCARD) & (depth < -L)
            violations += int(viol_deep.sum()) + int(viol_near.sum())
    return violations


def element_word(model: SurfaceModel, matrix: np.ndarray) -> tuple:
    """Reduced generator word of a group element, via descent on its orbit
    point; the product of the listed generators at these indices recovers
    the element."""
    x = np.array(matrix[:, 0], dtype=float)
    letters = []
    for _ in range(200):
        imgs = model.gen_mats[:, 0, :] @ x
        best = int(np.argmin(imgs))
        if imgs[best] >= x[0] * (1.0 - 1e-15):
            break
        x = model.gen_mats[best] @ x
        letters.append(int(model._inv_index[best]))
    else:
        raise ValueError("matrix is not a group element (descent did not end)")
    if x[0] > 1.0 + 1e-6:
        raise ValueError("matrix is not a group element (orbit point off base)")
    # descent only tracks the orbit point; elliptic pretenders fixing the
    # base would slip through, so confirm the full matrix is recovered
    prod = np.eye(3)
    for i in letters:
        prod = prod @ model.gen_mats[i]
    m = np.asarray(matrix, dtype=float)
    if np.max(np.abs(prod - m)) > 1e-6 * max(1.0, float(np.max(np.abs(m)))):
        raise ValueError("matrix is not a group element (word product mismatch)")
    return tuple(letters)

"""Conforming triangulation of a period cell.

The cell is the union of up to three rectangles (strip, passage, room).  Each
rectangle is meshed on its own and the blocks share their nodes on the two
interfaces (the passage mouth on ``x2 = 0`` and the passage top).

Strip and room are meshed with a 2:1 balanced quadtree whose leaves shrink
geometrically toward the passage mouth; leaves without hanging nodes are split
along one diagonal, leaves with hanging nodes are fanned from their centre.
The mouth endpoints are made quadtree vertices by a piecewise linear stretch in
``x1`` that maps a dyadic point onto each endpoint.  The passage is a tensor grid.

Quadtree refinement is mirror-symmetric about the cell centre (decisions are made
in integer lattice units), so the traces on ``x1 = 0`` and ``x1 = eps`` coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from roomgap.errors import MeshError, ResolutionTooCoarse
from roomgap.geometry import CellGeometry, Region

MAX_PASSAGE_ASPECT = 10.0


@dataclass(frozen=True)
class MeshSpec:
    """Resolution controls.

    target_h: largest leaf size anywhere.
    grading: size growth ratio away from the mouth (1 disables grading).
    passage_cols: element columns across the passage (power of two, >= 2).
    passage_aspect: height/width cap for passage elements (<= 10).
    """

    target_h: float
    grading: float = 1.2
    passage_cols: int = 4
    passage_aspect: float = 2.0


@dataclass(frozen=True, eq=False)
class PeriodCellMesh:
    vertices: np.ndarray  # (n, 2)
    triangles: np.ndarray  # (m, 3), counter-clockwise
    tags: np.ndarray  # (m,) Region values
    left_boundary: np.ndarray  # strip vertices on x1 = 0, ascending x2
    right_boundary: np.ndarray  # strip vertices on x1 = width, ascending x2
    width: float
    resolution: dict = field(default_factory=dict)

    def __post_init__(self):
        for a in (self.vertices, self.triangles, self.tags, self.left_boundary, self.right_boundary):
            a.flags.writeable = False

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def pairing(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.left_boundary, self.right_boundary


# ---------------------------------------------------------------------------
# quadtree block


def _stretch(xs, x0, x1, centre, s_ref, half):
    """Piecewise-linear map in x1 sending centre +- s_ref to centre +- half."""
    knots = np.array([x0, centre - s_ref, centre + s_ref, x1])
    image = np.array([x0, centre - half, centre + half, x1])
    return np.interp(xs, knots, image)


class _Quadtree:
    """Balanced quadtree over an ``nx x ny`` grid of equal root rectangles.

    Leaves are ``(level, i, j)``; corners live on an integer lattice with
    ``2**lmax`` units per root side.
    """

    def __init__(self, nx, ny, lmax):
        self.nx, self.ny, self.lmax = nx, ny, lmax
        self.leaves = {(0, i, j) for i in range(nx) for j in range(ny)}

    def span(self, leaf):
        lvl, i, j = leaf
        s = 1 << (self.lmax - lvl)
        return i * s, (i + 1) * s, j * s, (j + 1) * s

    def refine_where(self, needs_split):
        stack = sorted(self.leaves)
        self.leaves = set()
        while stack:
            leaf = stack.pop()
            if leaf[0] < self.lmax and needs_split(leaf):
                lvl, i, j = leaf
                stack.extend((lvl + 1, 2 * i + a, 2 * j + c) for a in (0, 1) for c in (0, 1))
            else:
                self.leaves.add(leaf)

    def _covering(self, lvl, i, j):
        while lvl >= 0:
            if (lvl, i, j) in self.leaves:
                return (lvl, i, j)
            lvl, i, j = lvl - 1, i >> 1, j >> 1
        return None

    def balance(self):
        nxl, nyl = self.nx, self.ny
        changed = True
        while changed:
            changed = False
            to_split = set()
            for lvl, i, j in self.leaves:
                if lvl < 2:
                    continue
                n = 1 << lvl
                for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    a, c = i + di, j + dj
                    if not (0 <= a < nxl * n and 0 <= c < nyl * n):
                        continue
                    cov = self._covering(lvl, a, c)
                    if cov is not None and cov[0] < lvl - 1:
                        to_split.add(cov)
            if to_split:
                changed = True
                for lvl, i, j in to_split:
                    self.leaves.discard((lvl, i, j))
                    self.leaves.update((lvl + 1, 2 * i + a, 2 * j + c) for a in (0, 1) for c in (0, 1))

    def triangulate(self):
        """Return integer vertex coordinates and CCW triangles (as coordinate keys)."""
        corners = set()
        for leaf in self.leaves:
            i0, i1, j0, j1 = self.span(leaf)
            corners.update(((i0, j0), (i1, j0), (i1, j1), (i0, j1)))
        tris = []
        for leaf in sorted(self.leaves, key=lambda lf: self.span(lf)):
            i0, i1, j0, j1 = self.span(leaf)
            if i1 - i0 == 1:
                tris.append(((i0, j0), (i1, j0), (i1, j1)))
                tris.append(((i0, j0), (i1, j1), (i0, j1)))
                continue
            im, jm = (i0 + i1) // 2, (j0 + j1) // 2
            loop = [(i0, j0), (im, j0), (i1, j0), (i1, jm), (i1, j1), (im, j1), (i0, j1), (i0, jm)]
            loop = [p for k, p in enumerate(loop) if k % 2 == 0 or p in corners]
            if len(loop) == 4:
                tris.append(((i0, j0), (i1, j0), (i1, j1)))
                tris.append(((i0, j0), (i1, j1), (i0, j1)))
            else:
                c = (im, jm)
                for k in range(len(loop)):
                    tris.append((c, loop[k], loop[(k + 1) % len(loop)]))
        keys = sorted({p for t in tris for p in t})
        return keys, tris


@dataclass
class _Block:
    vertices: np.ndarray
    triangles: np.ndarray
    keys: List[Tuple[int, int]]
    itot: int
    jtot: int
    mouth_lattice: Optional[Tuple[int, int]]  # integer x-range of the mouth


def _mouth_levels(cw, half, n_cols):
    """Dyadic reference half-width ``s_ref = cw/2**m`` nearest ``half``, and mouth leaf level."""
    m = max(2, int(round(math.log2(cw / half))))
    j = int(round(math.log2(n_cols)))
    return m, m + j - 1


def _target_level(cw, ch, target_h):
    return max(0, math.ceil(math.log2(max(cw, ch) / target_h) - 1e-12))


def _graded_block(rect, ny, target_h, kappa, mouth=None, mouth_top=True, n_cols=4):
    """Quadtree mesh of ``rect`` with one root column and ``ny`` root rows.

    ``mouth = (centre, half)`` attracts refinement to ``[centre-half, centre+half]``
    on the top (``mouth_top``) or bottom edge.
    """
    x0, x1, y0, y1 = rect
    cw, ch = x1 - x0, (y1 - y0) / ny
    if mouth is not None and not mouth[1] < 0.5 * cw:
        raise MeshError("passage as wide as the block it opens into is not supported")
    size0 = max(cw, ch)
    lt = _target_level(cw, ch, target_h)
    if mouth is None:
        lmax = lt
    else:
        centre, half = mouth
        m, lm = _mouth_levels(cw, half, n_cols)
        if lt > lm:
            raise MeshError("mouth level below target level; caller must raise n_cols")
        lmax = lm
    tree = _Quadtree(1, ny, lmax)
    itot, jtot = 1 << lmax, ny << lmax
    ux, uy = cw / itot, ch / (1 << lmax)
    mouth_lattice = None

    if mouth is None:
        tree.refine_where(lambda lf: size0 / (1 << lf[0]) > target_h)
    else:
        ic, s = itot // 2, 1 << (lmax - m)
        mouth_lattice = (ic - s, ic + s)
        s_min = size0 / (1 << lmax)

        def needs_split(leaf):
            size = size0 / (1 << leaf[0])
            if size > target_h:
                return True
            i0, i1, j0, j1 = tree.span(leaf)
            dx = max(0, (ic - s) - i1, i0 - (ic + s))
            dy = (jtot - j1) if mouth_top else j0
            return size > max(s_min, kappa * math.hypot(dx * ux, dy * uy))

        tree.refine_where(needs_split)
    tree.balance()
    keys, tris = tree.triangulate()

    index = {k: n for n, k in enumerate(keys)}
    ij = np.array(keys, dtype=np.int64)
    tx = ij[:, 0] / itot
    ty = ij[:, 1] / jtot
    xs = x0 * (1 - tx) + x1 * tx
    ys = y0 * (1 - ty) + y1 * ty
    if mouth is not None:
        xs = _stretch(xs, x0, x1, 0.5 * (x0 + x1), cw / (1 << m), half)
    verts = np.column_stack([xs, ys])
    triangles = np.array([[index[a], index[b], index[c]] for a, b, c in tris], dtype=np.int64)
    return _Block(verts, triangles, keys, itot, jtot, mouth_lattice)


def _required_cols(blocks, n_cols):
    """Smallest power-of-two column count making every mouth leaf respect target_h."""
    while True:
        ok = True
        for cw, ch, half, target_h in blocks:
            m, lm = _mouth_levels(cw, half, n_cols)
            if _target_level(cw, ch, target_h) > lm:
                ok = False
        if ok:
            return n_cols
        n_cols *= 2


# ---------------------------------------------------------------------------


def triangulate(cell: CellGeometry, target_h: float, grading: float = 1.2, passage_cols: int = 4,
                passage_aspect: float = 2.0) -> PeriodCellMesh:
    """Mesh the period cell.  See the module docstring for the construction."""
    if target_h <= 0:
        raise ResolutionTooCoarse("target_h must be positive")
    if grading < 1:
        raise ValueError("grading must be >= 1")
    if passage_cols < 2 or passage_cols & (passage_cols - 1):
        raise ResolutionTooCoarse("passage_cols must be a power of two >= 2", passage_cols=passage_cols)
    if not 0 < passage_aspect <= MAX_PASSAGE_ASPECT:
        raise ValueError(f"passage_aspect must lie in (0, {MAX_PASSAGE_ASPECT}]")
    kappa = grading - 1.0
    sx0, sx1, sy0, sy1 = cell.strip_rect
    width = sx1
    ny_strip = max(1, round((sy1 - sy0) / width))
    resolution = dict(target_h=target_h, grading=grading)

    if cell.passage_rect is None:
        blk = _graded_block(cell.strip_rect, ny_strip, target_h, kappa)
        tags = np.full(len(blk.triangles), Region.STRIP, dtype=np.int8)
        return _finish(blk.vertices, blk.triangles, tags, width, resolution)

    px0, px1, _, ph = cell.passage_rect
    rx0, rx1, ry0, ry1 = cell.room_rect
    centre, half = 0.5 * (px0 + px1), 0.5 * (px1 - px0)
    ny_room = max(1, round((ry1 - ry0) / (rx1 - rx0)))
    if grading == 1.0:
        # no grading: the passage must be resolved by target_h itself
        if (px1 - px0) / target_h < 2:
            raise ResolutionTooCoarse(
                f"passage width {px1 - px0:.3g} holds fewer than 2 columns of size {target_h:.3g}",
                d=px1 - px0, target_h=target_h,
            )
    n_cols = _required_cols(
        [
            (width, (sy1 - sy0) / ny_strip, half, target_h),
            (rx1 - rx0, (ry1 - ry0) / ny_room, half, target_h),
        ],
        passage_cols,
    )
    strip = _graded_block(cell.strip_rect, ny_strip, target_h, kappa, (centre, half), True, n_cols)
    room = _graded_block(cell.room_rect, ny_room, target_h, kappa, (centre, half), False, n_cols)

    def mouth_nodes(blk, j):
        lo, hi = blk.mouth_lattice
        sel = [n for n, (i, jj) in enumerate(blk.keys) if jj == j and lo <= i <= hi]
        return np.array(sorted(sel, key=lambda n: blk.keys[n][0]), dtype=np.int64)

    s_mouth = mouth_nodes(strip, strip.jtot)
    r_mouth = mouth_nodes(room, 0)
    if len(s_mouth) != n_cols + 1 or len(r_mouth) != n_cols + 1:
        raise MeshError("mouth traces of strip and room do not match the passage grid")

    xs = strip.vertices[s_mouth, 0].copy()
    col_w = (px1 - px0) / n_cols
    n_rows = max(1, math.ceil(ph / (passage_aspect * col_w) - 1e-9))
    ys = ph * np.arange(n_rows + 1) / n_rows
    ys[-1] = ph

    nv_s = len(strip.vertices)
    # passage interior rows get new indices; bottom row = strip mouth, top row = room mouth
    nv_interior = (n_rows - 1) * (n_cols + 1)
    grid = np.empty((n_rows + 1, n_cols + 1), dtype=np.int64)
    grid[0] = s_mouth
    grid[1:n_rows] = nv_s + np.arange(nv_interior).reshape(n_rows - 1, n_cols + 1)
    room_offset = nv_s + nv_interior
    grid[n_rows] = room_offset + r_mouth
    p_verts = np.column_stack([np.tile(xs, n_rows - 1), np.repeat(ys[1:n_rows], n_cols + 1)])

    room_verts = room.vertices.copy()
    room_verts[r_mouth, 0] = xs  # snap: identical coordinates on the shared edge

    p_tris = []
    for r in range(n_rows):
        for c in range(n_cols):
            a, b_, c_, d_ = grid[r, c], grid[r, c + 1], grid[r + 1, c + 1], grid[r + 1, c]
            p_tris.append((a, b_, c_))
            p_tris.append((a, c_, d_))
    p_tris = np.array(p_tris, dtype=np.int64)

    vertices = np.vstack([strip.vertices, p_verts, room_verts])
    triangles = np.vstack([strip.triangles, p_tris, room.triangles + room_offset])
    tags = np.concatenate([
        np.full(len(strip.triangles), Region.STRIP, dtype=np.int8),
        np.full(len(p_tris), Region.PASSAGE, dtype=np.int8),
        np.full(len(room.triangles), Region.ROOM, dtype=np.int8),
    ])
    resolution.update(passage_cols=n_cols, passage_rows=n_rows)
    return _finish(vertices, triangles, tags, width, resolution)


def _boundary_pairing(vertices, triangles, tags, width):
    strip_nodes = np.unique(triangles[tags == Region.STRIP])
    x = vertices[strip_nodes, 0]
    left = strip_nodes[x == 0.0]
    right = strip_nodes[x == width]
    left = left[np.argsort(vertices[left, 1], kind="stable")]
    right = right[np.argsort(vertices[right, 1], kind="stable")]
    if len(left) != len(right) or np.any(np.abs(vertices[left, 1] - vertices[right, 1]) >= 1e-12):
        raise MeshError("left and right boundary traces differ")
    return left, right


def _finish(vertices, triangles, tags, width, resolution):
    left, right = _boundary_pairing(vertices, triangles, tags, width)
    return PeriodCellMesh(vertices, triangles, tags, left, right, width, resolution)


# ---------------------------------------------------------------------------


def refine(m: PeriodCellMesh) -> PeriodCellMesh:
    """Split every triangle into four similar children (edge midpoints)."""
    tri = m.triangles
    edges = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    nt = len(tri)
    mids = len(m.vertices) + inv.reshape(3, nt).T  # midpoint of edges (01, 12, 20)
    new_v = 0.5 * (m.vertices[uniq[:, 0]] + m.vertices[uniq[:, 1]])
    vertices = np.vstack([m.vertices, new_v])
    a, b, c = tri.T
    ab, bc, ca = mids.T
    children = np.stack([
        np.column_stack([a, ab, ca]),
        np.column_stack([ab, b, bc]),
        np.column_stack([ca, bc, c]),
        np.column_stack([ab, bc, ca]),
    ], axis=1).reshape(-1, 3)
    tags = np.repeat(m.tags, 4)
    res = dict(m.resolution)
    res["refinements"] = res.get("refinements", 0) + 1
    return _finish(vertices, children, tags, m.width, res)


def tile(m: PeriodCellMesh, copies: int) -> PeriodCellMesh:
    """Glue ``copies`` translates of ``m`` side by side along the strip.

    Only paired strip vertices are merged; room walls meeting on a seam stay
    separate (the rooms are disjoint open sets).
    """
    if copies < 1:
        raise ValueError("copies must be >= 1")
    nv = len(m.vertices)
    left, right = m.left_boundary, m.right_boundary
    verts, tris, tags = [], [], []
    offset = 0
    prev_right = None
    for c in range(copies):
        remap = np.arange(nv) + offset
        keep = np.ones(nv, dtype=bool)
        if prev_right is not None:
            keep[left] = False
        remap[keep] = offset + np.arange(keep.sum())
        if prev_right is not None:
            remap[left] = prev_right
        v = m.vertices[keep].copy()
        v[:, 0] = v[:, 0] + c * m.width
        verts.append(v)
        tris.append(remap[m.triangles])
        tags.append(m.tags)
        prev_right = remap[right]
        offset += keep.sum()
    vertices = np.vstack(verts)
    width = copies * m.width
    right_ids = prev_right
    vertices[right_ids, 0] = width
    triangles = np.vstack(tris)
    tags = np.concatenate(tags)
    res = dict(m.resolution)
    res["copies"] = copies
    return _finish(vertices, triangles, tags, width, res)


# ---------------------------------------------------------------------------


def mesh_quality(m: PeriodCellMesh) -> dict:
    """Minimum angle (degrees), maximum aspect ratio and element counts per region.

    The aspect ratio is ``longest edge / (2*sqrt(3)*inradius)``, equal to 1 for an
    equilateral triangle.
    """
    p = m.vertices[m.triangles]
    e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
    lens = np.linalg.norm(e, axis=2)
    area = np.abs(m.areas())
    # angle at vertex k between edges meeting there
    angles = []
    for k in range(3):
        u = -e[:, (k - 1) % 3]
        v = e[:, k]
        cross = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        dot = np.einsum("ij,ij->i", u, v)
        angles.append(np.degrees(np.arctan2(cross, dot)))
    angles = np.stack(angles, axis=1)
    inradius = 2 * area / lens.sum(axis=1)
    aspect = lens.max(axis=1) / (2 * np.sqrt(3) * inradius)
    counts = {r.name: int(np.sum(m.tags == r)) for r in Region}
    return {
        "min_angle": float(angles.min()),
        "max_aspect": float(aspect.max()),
        "aspect": aspect,
        "counts": counts,
        "n_vertices": m.n_vertices,
        "n_triangles": len(m.triangles),
    }


def check_conformity(m: PeriodCellMesh) -> None:
    """Raise :class:`MeshError` unless the mesh is conforming and positively oriented.

    Every edge must be shared by at most two triangles and, if on one triangle only,
    lie on the outer boundary of its region union; hanging nodes would show up as
    boundary edges with a vertex in their interior.
    """
    if np.any(m.areas() <= 0):
        raise MeshError("non-positive triangle area")
    tri = m.triangles
    edges = np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise MeshError("edge shared by more than two triangles")
    bnd = uniq[counts == 1]
    # a hanging node is a vertex lying strictly inside a boundary edge
    v = m.vertices
    a, b = v[bnd[:, 0]], v[bnd[:, 1]]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    used = np.unique(tri)
    for n in used:
        x = v[n]
        inside = np.all((lo - 1e-15 <= x) & (x <= hi + 1e-15), axis=1)
        inside &= (bnd[:, 0] != n) & (bnd[:, 1] != n)
        if not inside.any():
            continue
        d = b[inside] - a[inside]
        w = x - a[inside]
        dd = np.einsum("ij,ij->i", d, d)
        cross = np.abs(d[:, 0] * w[:, 1] - d[:, 1] * w[:, 0])
        t = np.einsum("ij,ij->i", d, w) / dd
        if np.any((cross <= 1e-14 * dd) & (t > 1e-12) & (t < 1 - 1e-12)):
            raise MeshError(f"hanging node {n} at {tuple(x)}")


def dump(m: PeriodCellMesh) -> str:
    """Plain-text mesh dump (format documented in README)."""
    out = [f"# roomgap mesh width={m.width!r}", f"vertices {len(m.vertices)}"]
    out += [f"{x:.17g} {y:.17g}" for x, y in m.vertices]
    out.append(f"triangles {len(m.triangles)}")
    out += [f"{a} {b} {c} {Region(t).name}" for (a, b, c), t in zip(m.triangles, m.tags)]
    out.append(f"left {len(m.left_boundary)}")
    out.append(" ".join(str(i) for i in m.left_boundary))
    out.append(f"right {len(m.right_boundary)}")
    out.append(" ".join(str(i) for i in m.right_boundary))
    return "\n".join(out) + "\n"

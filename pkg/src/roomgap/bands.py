"""Band structure sweeps, gap detection and the eps -> 0 convergence study."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from roomgap.eig import solve_lowest
from roomgap.errors import WindowNotCovered
from roomgap.fem import AssembledPair, assemble_mass, assemble_pair
from roomgap.floquet import apply_quasiperiodic, brillouin_grid
from roomgap.geometry import (
    Region,
    ScalingPreset,
    WaveguideParams,
    asymptotic_preset,
    build_cell,
    reciprocal_integer,
    validate_params,
)
from roomgap.limitspec import LimitParams, limit_spectrum
from roomgap.mesh import MeshSpec, PeriodCellMesh, tile, triangulate

Interval = Tuple[float, float]

ZERO_TOL = 1e-10


def default_window(L: float) -> float:
    return 2.0 * (math.pi / (2.0 * float(L))) ** 2


@dataclass(frozen=True)
class Gap:
    lo: float
    hi: float
    truncated: bool = False  # touches the window edge: not a proven gap


@dataclass(frozen=True, eq=False)
class BandStructure:
    eps: float
    phi_grid: np.ndarray
    eigenvalues: np.ndarray  # (n_phi, k), ascending per row
    bands: np.ndarray  # (k, 2): [min, max] over phi of the k-th eigenvalue
    window: Interval
    gaps: Tuple[Gap, ...]
    lower_pairs: Tuple = ()  # (phi_index, lam, full nodal vector) kept on request

    def spectrum(self) -> List[Interval]:
        """Band intervals clipped to the window."""
        lo, hi = self.window
        return [(max(a, lo), min(b, hi)) for a, b in self.bands if a <= hi and b >= lo]

    def true_gaps(self) -> List[Gap]:
        return [g for g in self.gaps if not g.truncated]


def detect_gaps(bands: Sequence[Interval], window: Interval) -> List[Gap]:
    """Maximal open sub-intervals of ``window`` missed by every band."""
    lo, hi = float(window[0]), float(window[1])
    clipped = sorted((float(max(a, lo)), float(min(b, hi))) for a, b in bands if a <= hi and b >= lo)
    gaps = []
    reach = lo
    first = True
    for a, b in clipped:
        if a > reach:
            gaps.append(Gap(reach, a, truncated=first and reach == lo))
        reach = max(reach, b)
        first = False
    if reach < hi:
        gaps.append(Gap(reach, hi, truncated=True))
    if not clipped:
        gaps = [Gap(lo, hi, truncated=True)]
    return gaps


def _solve_phi(pair, pairing, phi, k, tol, keep_below):
    pencil = apply_quasiperiodic(pair, pairing, phi)
    res = solve_lowest(pencil, k, tol=tol)
    kept = []
    if keep_below is not None:
        for j, lam in enumerate(res.eigenvalues):
            if lam < keep_below:
                kept.append((float(lam), pencil.expand(res.eigenvectors[:, j])))
    return res.eigenvalues, kept


def sweep(pair: AssembledPair, pairing, phis: Sequence[float], k: int, tol: float = 1e-8,
          threads: int = 1, keep_below: Optional[float] = None):
    """Lowest ``k`` fiber eigenvalues at each phase, in phase order."""
    args = [(pair, pairing, phi, k, tol, keep_below) for phi in phis]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(lambda a: _solve_phi(*a), args))
    else:
        out = [_solve_phi(*a) for a in args]
    return np.array([o[0] for o in out]), [o[1] for o in out]


def bands_from_samples(eigenvalues: np.ndarray, lam_max: float) -> Tuple[np.ndarray, Tuple[Gap, ...]]:
    if np.any(eigenvalues[:, -1] <= lam_max):
        worst = float(eigenvalues[:, -1].min())
        raise WindowNotCovered(
            f"highest computed eigenvalue {worst:.6g} does not exceed the window {lam_max:.6g}; increase k",
            k=eigenvalues.shape[1], lam_max=lam_max,
        )
    # the operator is nonnegative: round-off around the zero mode must not open a gap at 0
    lams = np.where(np.abs(eigenvalues) <= ZERO_TOL * lam_max, 0.0, eigenvalues)
    bands = np.column_stack([lams.min(axis=0), lams.max(axis=0)])
    return bands, tuple(detect_gaps([tuple(b) for b in bands], (0.0, lam_max)))


def compute_bands(params: WaveguideParams, mesh_spec: MeshSpec, n_phi: int = 33, k: int = 8,
                  lam_max: Optional[float] = None, tol: float = 1e-8, threads: int = 1,
                  keep_below: Optional[float] = None, mesh: Optional[PeriodCellMesh] = None) -> BandStructure:
    """Sample the band functions on the eps-cell over a uniform phase grid."""
    p = validate_params(params)
    if lam_max is None:
        lam_max = default_window(p.L)
    if mesh is None:
        mesh = triangulate(build_cell(p), mesh_spec.target_h, mesh_spec.grading, mesh_spec.passage_cols,
                           mesh_spec.passage_aspect)
    pair = assemble_pair(mesh, p.rho_room)
    phis = brillouin_grid(n_phi)
    lams, kept = sweep(pair, mesh.pairing(), phis, k, tol, threads, keep_below)
    bands, gaps = bands_from_samples(lams, lam_max)
    lower = tuple((i, lam, vec) for i, pairs in enumerate(kept) for lam, vec in pairs)
    return BandStructure(float(p.eps), phis, lams, bands, (0.0, float(lam_max)), gaps, lower)


# ---------------------------------------------------------------------------
# room averages


@dataclass(frozen=True)
class RoomAverage:
    u2: complex  # mean over the room
    u1_mouth: complex  # mean trace on the passage mouth
    residual: float  # |alpha (u2 - u1) - lam u2|


def room_average(mesh: PeriodCellMesh, vector: np.ndarray, params: WaveguideParams, lam: float,
                 mass=None) -> RoomAverage:
    """Room mean and mouth trace of an eigenfunction, plus the limit-relation residual.

    ``vector`` holds nodal values on every mesh vertex.  It is rescaled to unit
    weighted norm per unit length (norm squared = cell width), the normalisation
    under which eigenfunctions on cells of different eps are comparable.
    """
    p = validate_params(params)
    v = np.asarray(vector, dtype=complex)
    if mass is None:
        mass = assemble_mass(mesh, p.rho_room)
    norm2 = np.vdot(v, mass @ v).real
    v = v * math.sqrt(mesh.width / norm2)

    room = mesh.tags == Region.ROOM
    tri = mesh.triangles[room]
    area = mesh.areas()[room]
    u2 = np.sum(area * v[tri].mean(axis=1)) / area.sum()

    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    px0, px1 = _mouth_extent(mesh)
    strip_nodes = np.unique(mesh.triangles[mesh.tags == Region.STRIP])
    on = strip_nodes[(y[strip_nodes] == 0.0) & (x[strip_nodes] >= px0) & (x[strip_nodes] <= px1)]
    on = on[np.argsort(x[on])]
    u1 = np.trapezoid(v[on], x[on]) / (px1 - px0)

    alpha = float(p.alpha_quotient())
    return RoomAverage(complex(u2), complex(u1), float(abs(alpha * (u2 - u1) - lam * u2)))


def _mouth_extent(mesh: PeriodCellMesh) -> Interval:
    passage = mesh.triangles[mesh.tags == Region.PASSAGE]
    xs = mesh.vertices[np.unique(passage), 0]
    return float(xs.min()), float(xs.max())


# ---------------------------------------------------------------------------
# set distances


def _dist_to_intervals(x: np.ndarray, intervals: Sequence[Interval]) -> np.ndarray:
    d = np.full(len(x), np.inf)
    for a, b in intervals:
        d = np.minimum(d, np.maximum(0.0, np.maximum(a - x, x - b)))
    return d


def _sample_intervals(intervals: Sequence[Interval], step: float) -> np.ndarray:
    pts = [np.array([a, b]) for a, b in intervals]
    pts += [np.arange(a, b, step) for a, b in intervals if b > a]
    return np.concatenate(pts) if pts else np.empty(0)


def hausdorff_intervals(A: Sequence[Interval], B: Sequence[Interval], step: float) -> float:
    """Hausdorff distance of two finite unions of closed intervals.

    Each set is sampled with spacing ``step`` (endpoints included) and measured
    exactly against the other, so the error is at most ``step/2``.
    """
    if not A or not B:
        return math.inf
    da = _dist_to_intervals(_sample_intervals(A, step), B).max()
    db = _dist_to_intervals(_sample_intervals(B, step), A).max()
    return float(max(da, db))


def hausdorff_points(a: np.ndarray, b: np.ndarray) -> float:
    """Hausdorff distance of two finite point sets on the line."""
    a, b = np.sort(np.asarray(a, float)), np.sort(np.asarray(b, float))
    if len(a) == 0 or len(b) == 0:
        return 0.0 if len(a) == len(b) else math.inf

    def directed(x, y):
        i = np.clip(np.searchsorted(y, x), 1, len(y) - 1) if len(y) > 1 else np.zeros(len(x), int)
        if len(y) == 1:
            return float(np.abs(x - y[0]).max())
        return float(np.minimum(np.abs(x - y[i - 1]), np.abs(x - y[i])).max())

    return max(directed(a, b), directed(b, a))


# ---------------------------------------------------------------------------
# convergence study


@dataclass(frozen=True, eq=False)
class EpsEntry:
    eps: float
    structure: BandStructure
    hausdorff: float
    gap: Optional[Gap]
    pi_residuals: np.ndarray
    avoids_gap_core: bool
    hits_alpha: bool
    hits_beta: bool

    @property
    def pi_residual_median(self) -> Optional[float]:
        return float(np.median(self.pi_residuals)) if len(self.pi_residuals) else None

    @property
    def corollary_pass(self) -> bool:
        return self.avoids_gap_core and self.hits_alpha and self.hits_beta


@dataclass(frozen=True, eq=False)
class ConvergenceReport:
    alpha: float
    beta: Optional[float]
    delta: Optional[float]
    window: Interval
    control: bool
    entries: Tuple[EpsEntry, ...]  # strictly decreasing eps

    @property
    def eps_list(self) -> List[float]:
        return [e.eps for e in self.entries]

    @property
    def hausdorff_monotone(self) -> bool:
        h = [e.hausdorff for e in self.entries]
        return all(b < a for a, b in zip(h, h[1:]))

    @property
    def corollary_pass(self) -> bool:
        """Gap check at the smallest eps; for the control, absence of gaps at every eps."""
        if self.control:
            return all(not e.structure.true_gaps() for e in self.entries)
        return self.entries[-1].corollary_pass


def _hits(spectrum: Sequence[Interval], lo: float, hi: float) -> bool:
    """Whether the union of closed intervals meets the open interval (lo, hi)."""
    return any(a < hi and b > lo for a, b in spectrum)


def _best_gap(gaps: Sequence[Gap], alpha: float, beta: float) -> Optional[Gap]:
    best, overlap = None, 0.0
    for g in gaps:
        if g.truncated:
            continue
        ov = min(g.hi, beta) - max(g.lo, alpha)
        if ov > overlap:
            best, overlap = g, ov
    return best


def convergence_study(preset: ScalingPreset, eps_list: Sequence, mesh_spec: MeshSpec, n_phi: int = 33,
                      lam_max: Optional[float] = None, k: int = 8, tol: float = 1e-8,
                      delta_frac: float = 0.1, control: bool = False, threads: int = 1,
                      R=None) -> ConvergenceReport:
    """Band structures along the scaling family, compared with the limit spectrum.

    With ``control=True`` the same eps values are run on the unperturbed strip and
    the reference set is the whole window.
    """
    ns = [reciprocal_integer(e) for e in eps_list]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    L = float(preset.L)
    if lam_max is None:
        lam_max = default_window(L)
    window = (0.0, float(lam_max))
    alpha = float(preset.alpha)
    limit = limit_spectrum(LimitParams(alpha, float(preset.r), L))
    if control:
        reference = [window]
        beta = delta = None
    else:
        reference = list(limit.clipped(lam_max))
        beta = limit.beta
        delta = delta_frac * (beta - alpha) if limit.has_gap else None
    step = lam_max / 2000.0

    entries = []
    for n in ns:
        if control:
            params = validate_params(WaveguideParams.plain_strip(f"1/{n}", preset.L))
        else:
            params = asymptotic_preset(preset, f"1/{n}", **({} if R is None else {"R": R}))
        cell = build_cell(params)
        mesh = triangulate(cell, mesh_spec.target_h, mesh_spec.grading, mesh_spec.passage_cols,
                           mesh_spec.passage_aspect)
        bs = compute_bands(params, mesh_spec, n_phi, k, lam_max, tol, threads,
                           keep_below=None if control else alpha, mesh=mesh)
        spec = bs.spectrum()
        h = hausdorff_intervals(spec, reference, step)
        pis = np.array([])
        gap = None
        avoids = hits_a = hits_b = False
        if not control:
            mass = assemble_mass(mesh, params.rho_room)
            pis = np.array([room_average(mesh, vec, params, lam, mass).residual for _, lam, vec in bs.lower_pairs])
            if limit.has_gap:
                gap = _best_gap(bs.gaps, alpha, beta)
                avoids = not _hits(spec, alpha + delta, beta - delta)
                hits_a = _hits(spec, alpha - delta, alpha + delta)
                hits_b = _hits(spec, beta - delta, beta + delta)
        entries.append(EpsEntry(float(params.eps), bs, h, gap, pis, avoids, hits_a, hits_b))
    return ConvergenceReport(alpha, beta, delta, window, control, tuple(entries))


# ---------------------------------------------------------------------------
# unit cell vs eps-cell


@dataclass(frozen=True, eq=False)
class FoldReport:
    distance: float
    unit_cell_values: np.ndarray
    eps_cell_values: np.ndarray
    copies: int


def fold_validation(params: WaveguideParams, mesh_spec: MeshSpec, n_phi: int = 33, k: int = 8,
                    lam_max: Optional[float] = None, tol: float = 1e-10) -> FoldReport:
    """Compare fiber spectra of the unit cell (``1/eps`` periods) and the eps-cell.

    The unit cell is the eps-cell mesh tiled ``N = 1/eps`` times, sampled at
    ``n_phi`` phases; the eps-cell is sampled at ``N*n_phi`` phases, the set onto
    which the unit-cell phases fold.  Returns the Hausdorff distance of the two
    sets of eigenvalues in the window.
    """
    p = validate_params(params)
    n = p.n_per_unit
    if lam_max is None:
        lam_max = default_window(p.L)
    cell_mesh = triangulate(build_cell(p), mesh_spec.target_h, mesh_spec.grading, mesh_spec.passage_cols,
                            mesh_spec.passage_aspect)
    unit_mesh = tile(cell_mesh, n)
    cell_pair = assemble_pair(cell_mesh, p.rho_room)
    unit_pair = assemble_pair(unit_mesh, p.rho_room)

    unit_lams, _ = sweep(unit_pair, unit_mesh.pairing(), brillouin_grid(n_phi), n * k, tol)
    cell_lams, _ = sweep(cell_pair, cell_mesh.pairing(), brillouin_grid(n * n_phi), k, tol)
    for lams in (unit_lams, cell_lams):
        bands_from_samples(lams, lam_max)  # coverage check
    # a value sitting on the window edge may fall either side of it in the two runs
    slack = 1e-6 * lam_max
    u_in, c_in = unit_lams[unit_lams <= lam_max], cell_lams[cell_lams <= lam_max]
    u_all, c_all = unit_lams[unit_lams <= lam_max + slack], cell_lams[cell_lams <= lam_max + slack]
    d = max(_directed(u_in, c_all), _directed(c_in, u_all))
    return FoldReport(d, np.sort(u_in), np.sort(c_in), n)


def _directed(src: np.ndarray, dst: np.ndarray) -> float:
    if len(src) == 0:
        return 0.0
    if len(dst) == 0:
        return math.inf
    dst = np.sort(dst)
    i = np.searchsorted(dst, src)
    lo = dst[np.clip(i - 1, 0, len(dst) - 1)]
    hi = dst[np.clip(i, 0, len(dst) - 1)]
    return float(np.minimum(np.abs(src - lo), np.abs(src - hi)).max())

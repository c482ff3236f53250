"""Voxel-grid computation of condenser p-capacities in R^3.

The capacity function u (u=0 on the C0 mask, u=1 on C1) is found by direct
minimization of the regularized p-energy

    E(u) = sum_cells (|grad u|^2 + eps^2)^(p/2) * h^3

with lagged-diffusivity red-black Gauss-Seidel sweeps: freeze the cell
weights w = (|grad u|^2 + eps^2)^((p-2)/2), relax the induced weighted
Laplacian, refresh the weights, repeat.  Each outer step is backtracked
against the true energy so the reported energy sequence is non-increasing.
Gradients are cell-centered (the four forward differences spanning a cell,
averaged); the same stencil feeds the energy, the optimal density |grad u|,
and the level-set flux, so the three agree by construction.

Fine grids are warm-started from a cascadic ladder of 2x-coarser solves.
All sweeps run single-threaded in numba kernels; the energy accumulates in
compensated float64 while the field itself is float32.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import ndimage

from .geometry import MobiusMap, Polyline, Similarity, apply_mobius, identity_map

LABEL_FREE = 0
LABEL_C0 = 1
LABEL_C1 = 2

SIX_CONNECTED = ndimage.generate_binary_structure(3, 1)

DEFAULT_FLUX_LEVELS = (0.2, 0.35, 0.5, 0.65, 0.8)


def _node_count(span: float, h: float) -> int:
    n = span / h
    if abs(n - round(n)) > 1e-9 * max(1.0, abs(n)):
        raise ValueError(f"box span {span} is not an integer multiple of h={h}")
    return int(round(n)) + 1


@dataclass(frozen=True)
class VoxelGrid:
    """Node-sampled box [lo, hi]^3 with per-node condenser labels.

    labels: uint8 array, 0 free, 1 in C0, 2 in C1.  Both masks must be
    nonempty, disjoint by construction, and 6-connected.
    """

    lo: np.ndarray
    hi: np.ndarray
    h: float
    labels: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(3)
        hi = np.asarray(self.hi, dtype=float).reshape(3)
        if np.any(hi <= lo):
            raise ValueError("box must have positive extent")
        if self.h <= 0:
            raise ValueError("spacing must be positive")
        shape = tuple(_node_count(hi[d] - lo[d], self.h) for d in range(3))
        lab = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if lab.shape != shape:
            raise ValueError(f"labels shape {lab.shape} does not match grid {shape}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "labels", lab)
        for name, val in (("C0", LABEL_C0), ("C1", LABEL_C1)):
            mask = lab == val
            if not mask.any():
                raise ValueError(f"{name} mask is empty")
            _, ncomp = ndimage.label(mask, structure=SIX_CONNECTED)
            if ncomp != 1:
                raise ValueError(f"{name} mask is not 6-connected ({ncomp} components)")

    @property
    def shape(self) -> tuple:
        return self.labels.shape

    def axis_nodes(self, d: int) -> np.ndarray:
        return self.lo[d] + self.h * np.arange(self.shape[d])


@dataclass(frozen=True)
class ScalarField:
    """Per-node scalar u in [0, 1] respecting the grid's Dirichlet masks."""

    grid: VoxelGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float32)
        if v.shape != self.grid.shape:
            raise ValueError("field shape does not match grid")
        object.__setattr__(self, "values", v)


@dataclass
class CapacityResult:
    energy: float
    field: ScalarField
    grad_stats: dict
    levelset_fluxes: dict
    converged: bool
    iterations: int
    residual: float
    p: float
    eps: float
    normalization: MobiusMap = field(default_factory=identity_map)

    @property
    def grid(self) -> VoxelGrid:
        return self.field.grid


@dataclass(frozen=True)
class SolveSettings:
    """Knobs for the capacity pipeline (box, spacing, thickening, solver)."""

    box: tuple = (-3.0, 3.0)
    h: float = 1.0 / 32.0
    r_thick: float = None
    p: float = 3.0
    eps: float = None
    tol: float = 1e-5
    max_iters: int = 200
    flux_levels: tuple = DEFAULT_FLUX_LEVELS

    def thickness(self) -> float:
        return self.h if self.r_thick is None else self.r_thick


# ---------------------------------------------------------------------------
# rasterization


def _resample_polyline(v: np.ndarray, closed: bool, step: float) -> np.ndarray:
    """Insert vertices so no segment exceeds `step`."""
    pts = [v[0]]
    seq = np.vstack([v, v[:1]]) if closed else v
    for a, b in zip(seq[:-1], seq[1:]):
        d = float(np.linalg.norm(b - a))
        k = max(1, int(math.ceil(d / step)))
        for t in range(1, k + 1):
            pts.append(a + (b - a) * (t / k))
    return np.asarray(pts)


def _mark_tube(mask: np.ndarray, lo: np.ndarray, h: float, verts: np.ndarray,
               closed: bool, r: float) -> None:
    """Set mask nodes within distance r of the polyline (per-segment local boxes)."""
    shape = mask.shape
    seq = np.vstack([verts, verts[:1]]) if closed else verts
    for a, b in zip(seq[:-1], seq[1:]):
        bmin = np.minimum(a, b) - r
        bmax = np.maximum(a, b) + r
        i0 = np.maximum(np.floor((bmin - lo) / h).astype(int), 0)
        i1 = np.minimum(np.ceil((bmax - lo) / h).astype(int), np.array(shape) - 1)
        if np.any(i0 > i1):
            continue
        xs = lo[0] + h * np.arange(i0[0], i1[0] + 1)
        ys = lo[1] + h * np.arange(i0[1], i1[1] + 1)
        zs = lo[2] + h * np.arange(i0[2], i1[2] + 1)
        px, py, pz = np.meshgrid(xs, ys, zs, indexing="ij")
        d = b - a
        dd = float(d @ d)
        if dd == 0.0:
            t = np.zeros_like(px)
        else:
            t = ((px - a[0]) * d[0] + (py - a[1]) * d[1] + (pz - a[2]) * d[2]) / dd
            t = np.clip(t, 0.0, 1.0)
        qx = a[0] + t * d[0] - px
        qy = a[1] + t * d[1] - py
        qz = a[2] + t * d[2] - pz
        near = qx * qx + qy * qy + qz * qz <= r * r
        mask[i0[0]:i1[0] + 1, i0[1]:i1[1] + 1, i0[2]:i1[2] + 1] |= near


def rasterize_condenser(c0: Polyline, c1: Polyline, box=(-3.0, 3.0),
                        h: float = 1.0 / 32.0, r_thick: float = None) -> VoxelGrid:
    """Label nodes within r_thick of each curve; curves need 5h box margin."""
    if r_thick is None:
        r_thick = h
    if r_thick < h:
        raise ValueError("r_thick must be at least one grid spacing h")
    lo = np.full(3, float(box[0]))
    hi = np.full(3, float(box[1]))
    shape = tuple(_node_count(hi[d] - lo[d], h) for d in range(3))
    labels = np.zeros(shape, dtype=np.uint8)
    for curve, val, name in ((c0, LABEL_C0, "C0"), (c1, LABEL_C1, "C1")):
        if curve.ambient != "r3":
            raise ValueError("rasterization expects curves in the r3 chart")
        v = curve.vertices
        margin = 5.0 * h
        # open polylines stand for curves through infinity, clipped at the
        # box; they may (and should) run up to the outer boundary
        if curve.closed and (np.any(v < lo + margin) or np.any(v > hi - margin)):
            raise ValueError(f"{name} is not inside the box with margin 5h; "
                             "enlarge the box or refine the curve")
        verts = _resample_polyline(v, curve.closed, 0.5 * h)
        mask = np.zeros(shape, dtype=bool)
        _mark_tube(mask, lo, h, verts, False, r_thick)
        if np.any(labels[mask] != 0):
            raise ValueError("condenser masks overlap; enlarge the box "
                             "or reduce r_thick")
        labels[mask] = val
    return VoxelGrid(lo, hi, h, labels)


def rasterize_regions(box, h: float, inside0, inside1) -> VoxelGrid:
    """Label nodes by point predicates (arrays of xyz -> bool), e.g. spheres."""
    lo = np.full(3, float(box[0]))
    hi = np.full(3, float(box[1]))
    shape = tuple(_node_count(hi[d] - lo[d], h) for d in range(3))
    labels = np.zeros(shape, dtype=np.uint8)
    ys = lo[1] + h * np.arange(shape[1])
    zs = lo[2] + h * np.arange(shape[2])
    py, pz = np.meshgrid(ys, zs, indexing="ij")
    for i in range(shape[0]):  # slab at a time to bound memory
        px = np.full_like(py, lo[0] + h * i)
        pts = np.stack([px.ravel(), py.ravel(), pz.ravel()], axis=1)
        m0 = np.asarray(inside0(pts), dtype=bool).reshape(py.shape)
        m1 = np.asarray(inside1(pts), dtype=bool).reshape(py.shape)
        if np.any(m0 & m1):
            raise ValueError("condenser masks overlap")
        sl = labels[i]
        sl[m0] = LABEL_C0
        sl[m1] = LABEL_C1
    return VoxelGrid(lo, hi, h, labels)


def rasterize_mixed(box, h: float, plate0, plate1, r_thick: float = None) -> VoxelGrid:
    """Label a condenser whose plates mix curves and region predicates.

    Each plate is ("curve", Polyline) or ("region", predicate); curves are
    thickened by r_thick, regions evaluated slab-wise like rasterize_regions.
    """
    if r_thick is None:
        r_thick = h
    lo = np.full(3, float(box[0]))
    hi = np.full(3, float(box[1]))
    shape = tuple(_node_count(hi[d] - lo[d], h) for d in range(3))
    labels = np.zeros(shape, dtype=np.uint8)
    ys = lo[1] + h * np.arange(shape[1])
    zs = lo[2] + h * np.arange(shape[2])
    py, pz = np.meshgrid(ys, zs, indexing="ij")
    for plate, val in ((plate0, LABEL_C0), (plate1, LABEL_C1)):
        kind, obj = plate
        mask = np.zeros(shape, dtype=bool)
        if kind == "curve":
            if obj.ambient != "r3":
                raise ValueError("rasterization expects curves in the r3 chart")
            margin = 5.0 * h
            if obj.closed and (np.any(obj.vertices < lo + margin)
                               or np.any(obj.vertices > hi - margin)):
                raise ValueError("curve plate is not inside the box with "
                                 "margin 5h; enlarge the box")
            verts = _resample_polyline(obj.vertices, obj.closed, 0.5 * h)
            _mark_tube(mask, lo, h, verts, False, r_thick)
        elif kind == "region":
            for i in range(shape[0]):
                px = np.full_like(py, lo[0] + h * i)
                pts = np.stack([px.ravel(), py.ravel(), pz.ravel()], axis=1)
                mask[i] = np.asarray(obj(pts), dtype=bool).reshape(py.shape)
        else:
            raise ValueError(f"unknown plate kind {kind!r}")
        if np.any(labels[mask] != 0):
            raise ValueError("condenser masks overlap")
        labels[mask] = val
    return VoxelGrid(lo, hi, h, labels)


# ---------------------------------------------------------------------------
# numba kernels


@njit(cache=True)
def _energy_and_conductance(u, h, eps, p, cx, cy, cz, fill):
    """Cell pass: p-energy plus edge conductances scattered from cell weights.

    cx[i,j,k] couples node (i,j,k) to (i+1,j,k) (likewise cy, cz); each cell
    adds its weight (|grad u|^2+eps^2)^((p-2)/2) to its 12 edges.  Returns
    (energy, max |grad|^2, sum |grad|); energy uses Kahan summation.
    """
    nx, ny, nz = u.shape
    inv4h = 1.0 / (4.0 * h)
    cell = h * h * h
    ew = 0.5 * (p - 2.0)
    e2 = eps * eps
    total = 0.0
    comp = 0.0
    smax = 0.0
    gsum = 0.0
    if fill:
        cx[:] = 0.0
        cy[:] = 0.0
        cz[:] = 0.0
    for i in range(nx - 1):
        for j in range(ny - 1):
            for k in range(nz - 1):
                u000 = u[i, j, k]
                u100 = u[i + 1, j, k]
                u010 = u[i, j + 1, k]
                u110 = u[i + 1, j + 1, k]
                u001 = u[i, j, k + 1]
                u101 = u[i + 1, j, k + 1]
                u011 = u[i, j + 1, k + 1]
                u111 = u[i + 1, j + 1, k + 1]
                gx = (u100 - u000 + u110 - u010 + u101 - u001 + u111 - u011) * inv4h
                gy = (u010 - u000 + u110 - u100 + u011 - u001 + u111 - u101) * inv4h
                gz = (u001 - u000 + u101 - u100 + u011 - u010 + u111 - u110) * inv4h
                s = gx * gx + gy * gy + gz * gz
                if s > smax:
                    smax = s
                gsum += math.sqrt(s)
                if ew == 0.5:  # p = 3: pow is a plain sqrt
                    wc = math.sqrt(s + e2)
                else:
                    wc = (s + e2) ** ew
                term = wc * (s + e2) * cell - comp
                t = total + term
                comp = (t - total) - term
                total = t
                if fill:
                    cx[i, j, k] += wc
                    cx[i, j + 1, k] += wc
                    cx[i, j, k + 1] += wc
                    cx[i, j + 1, k + 1] += wc
                    cy[i, j, k] += wc
                    cy[i + 1, j, k] += wc
                    cy[i, j, k + 1] += wc
                    cy[i + 1, j, k + 1] += wc
                    cz[i, j, k] += wc
                    cz[i + 1, j, k] += wc
                    cz[i, j + 1, k] += wc
                    cz[i + 1, j + 1, k] += wc
    return total, smax, gsum


@njit(cache=True)
def _gradient_magnitude(u, h, g):
    nx, ny, nz = u.shape
    inv4h = 1.0 / (4.0 * h)
    for i in range(nx - 1):
        for j in range(ny - 1):
            for k in range(nz - 1):
                gx = (u[i + 1, j, k] - u[i, j, k]
                      + u[i + 1, j + 1, k] - u[i, j + 1, k]
                      + u[i + 1, j, k + 1] - u[i, j, k + 1]
                      + u[i + 1, j + 1, k + 1] - u[i, j + 1, k + 1]) * inv4h
                gy = (u[i, j + 1, k] - u[i, j, k]
                      + u[i + 1, j + 1, k] - u[i + 1, j, k]
                      + u[i, j + 1, k + 1] - u[i, j, k + 1]
                      + u[i + 1, j + 1, k + 1] - u[i + 1, j, k + 1]) * inv4h
                gz = (u[i, j, k + 1] - u[i, j, k]
                      + u[i + 1, j, k + 1] - u[i + 1, j, k]
                      + u[i, j + 1, k + 1] - u[i, j + 1, k]
                      + u[i + 1, j + 1, k + 1] - u[i + 1, j + 1, k]) * inv4h
                g[i, j, k] = math.sqrt(gx * gx + gy * gy + gz * gz)


@njit(cache=True)
def _rb_sweep(u, labels, cx, cy, cz, color, omega):
    """One SOR half-sweep on free nodes with (i+j+k)%2 == color.

    A missing neighbor contributes nothing, which is the natural zero-flux
    boundary.  omega=1 is plain Gauss-Seidel; the energy backtracking in the
    outer loop guards the over-relaxed updates.
    """
    nx, ny, nz = u.shape
    for i in range(nx):
        for j in range(ny):
            kstart = (color + i + j) % 2
            for k in range(kstart, nz, 2):
                if labels[i, j, k] != 0:
                    continue
                num = 0.0
                den = 0.0
                if i + 1 < nx:
                    c = cx[i, j, k]
                    num += c * u[i + 1, j, k]
                    den += c
                if i > 0:
                    c = cx[i - 1, j, k]
                    num += c * u[i - 1, j, k]
                    den += c
                if j + 1 < ny:
                    c = cy[i, j, k]
                    num += c * u[i, j + 1, k]
                    den += c
                if j > 0:
                    c = cy[i, j - 1, k]
                    num += c * u[i, j - 1, k]
                    den += c
                if k + 1 < nz:
                    c = cz[i, j, k]
                    num += c * u[i, j, k + 1]
                    den += c
                if k > 0:
                    c = cz[i, j, k - 1]
                    num += c * u[i, j, k - 1]
                    den += c
                if den > 0.0:
                    u[i, j, k] += omega * (num / den - u[i, j, k])


# ---------------------------------------------------------------------------
# solver


def _apply_dirichlet(u: np.ndarray, labels: np.ndarray) -> None:
    u[labels == LABEL_C0] = 0.0
    u[labels == LABEL_C1] = 1.0


def _initial_field(grid: VoxelGrid, init: str) -> np.ndarray:
    if init == "half":
        u = np.full(grid.shape, 0.5, dtype=np.float32)
    elif init == "linear":
        # distance-transform interpolant d0/(d0+d1), a smooth admissible start
        d0 = ndimage.distance_transform_edt(grid.labels != LABEL_C0)
        d1 = ndimage.distance_transform_edt(grid.labels != LABEL_C1)
        u = (d0 / np.maximum(d0 + d1, 1e-30)).astype(np.float32)
    else:
        raise ValueError(f"unknown init {init!r}")
    _apply_dirichlet(u, grid.labels)
    return u


def _coarsen_grid(grid: VoxelGrid) -> VoxelGrid:
    """2x coarser grid; masks are max-pooled so thin tubes survive."""
    c0 = ndimage.maximum_filter(grid.labels == LABEL_C0, size=3)[::2, ::2, ::2]
    c1 = ndimage.maximum_filter(grid.labels == LABEL_C1, size=3)[::2, ::2, ::2]
    labels = np.zeros(c0.shape, dtype=np.uint8)
    labels[c1] = LABEL_C1
    labels[c0] = LABEL_C0  # overlap resolves to C0; warm start only
    return VoxelGrid(grid.lo, grid.hi, 2.0 * grid.h, labels)


def _prolong(u: np.ndarray) -> np.ndarray:
    """Trilinear interpolation onto the 2x finer node lattice."""
    out = np.empty(tuple(2 * n - 1 for n in u.shape), dtype=np.float32)
    out[::2, ::2, ::2] = u
    out[1::2, ::2, ::2] = 0.5 * (out[:-1:2, ::2, ::2] + out[2::2, ::2, ::2])
    out[:, 1::2, ::2] = 0.5 * (out[:, :-1:2, ::2] + out[:, 2::2, ::2])
    out[:, :, 1::2] = 0.5 * (out[:, :, :-1:2] + out[:, :, 2::2])
    return out


def _can_coarsen(shape) -> bool:
    return all(n % 2 == 1 and n >= 2 * 33 - 1 for n in shape)


def _sor_omega(shape) -> float:
    # classical red-black SOR tuning for the underlying Poisson-type operator,
    # capped because the lagged weights make very aggressive relaxation
    # fight the energy backtracking
    n = max(shape)
    return min(2.0 / (1.0 + math.sin(math.pi / (n - 1))), 1.9)


def _conductance_buffers(shape):
    nx, ny, nz = shape
    return (np.zeros((nx - 1, ny, nz), dtype=np.float32),
            np.zeros((nx, ny - 1, nz), dtype=np.float32),
            np.zeros((nx, ny, nz - 1), dtype=np.float32))


def _solve_single_level(grid: VoxelGrid, u: np.ndarray, p: float, eps_reg,
                        tol: float, max_iters: int, inner_sweeps: int = 4):
    """Lagged-diffusivity outer loop with energy backtracking on one grid.

    eps is frozen per level (from the incoming field's gradient scale) so the
    reported energy sequence is comparable, hence monotone, within the level.
    """
    labels = grid.labels
    h = grid.h
    omega = _sor_omega(grid.shape)
    cx, cy, cz = _conductance_buffers(grid.shape)
    energy, smax, _ = _energy_and_conductance(u, h, 0.0, p, cx, cy, cz, False)
    eps = _eps_of(eps_reg, math.sqrt(smax))
    it = 0
    resid = np.inf
    converged = False
    quiet = 0
    u_old = np.empty_like(u)
    while it < max_iters:
        it += 1
        energy, smax, _ = _energy_and_conductance(u, h, eps, p, cx, cy, cz, True)
        np.copyto(u_old, u)
        for _ in range(inner_sweeps):
            _rb_sweep(u, labels, cx, cy, cz, 0, omega)
            _rb_sweep(u, labels, cx, cy, cz, 1, omega)
        e_new, _, _ = _energy_and_conductance(u, h, eps, p, cx, cy, cz, False)
        if e_new > energy:
            # damp toward the previous iterate until the energy is
            # non-increasing; everything in place, the grids get large
            u += u_old
            u *= 0.5  # u_old + step/2
            accepted = False
            for _ in range(20):
                e_new, _, _ = _energy_and_conductance(u, h, eps, p, cx, cy, cz, False)
                if e_new <= energy:
                    accepted = True
                    break
                u += u_old
                u *= 0.5
            if not accepted:
                np.copyto(u, u_old)
                e_new = energy
        resid = (energy - e_new) / max(e_new, 1e-300)
        energy = e_new
        # require two consecutive quiet windows so warm starts cannot
        # trigger convergence before the weights have settled
        quiet = quiet + 1 if resid < tol else 0
        if quiet >= 2:
            converged = True
            break
    return u, energy, eps, it, resid, converged


def _eps_of(eps_reg, grad_scale: float) -> float:
    if eps_reg is not None:
        return float(eps_reg)
    return max(1e-6 * grad_scale, 1e-12)


def solve_capacity(grid: VoxelGrid, p: float = 3.0, eps_reg: float = None,
                   tol: float = 1e-5, max_iters: int = 200, init: str = "linear",
                   multiscale: bool = True, flux_levels=DEFAULT_FLUX_LEVELS,
                   warm_start: ScalarField = None) -> CapacityResult:
    """Minimize the regularized p-energy on the grid's free nodes.

    The returned energy is the capacity estimate; grad_stats reports the
    regularization eps actually used and the eps-induced energy bias
    (energy at eps minus energy at eps=0, evaluated on the final field).
    """
    if p <= 1.0:
        raise ValueError("p must exceed 1")
    levels = [grid]
    if multiscale and warm_start is None:
        while _can_coarsen(levels[-1].shape):
            levels.append(_coarsen_grid(levels[-1]))
    if warm_start is not None:
        if warm_start.grid.shape != grid.shape:
            raise ValueError("warm start shape mismatch")
        u = warm_start.values.copy()
        _apply_dirichlet(u, grid.labels)
    else:
        u = _initial_field(levels[-1], init)
        for g_coarse, g_fine in zip(levels[:0:-1], levels[-2::-1]):
            u, *_ = _solve_single_level(g_coarse, u, p, eps_reg,
                                        max(tol, 1e-6), max_iters)
            u = _prolong(u)
            _apply_dirichlet(u, g_fine.labels)
    u, energy, eps, iters, resid, converged = _solve_single_level(
        grid, u, p, eps_reg, tol, max_iters)

    dummy = np.zeros((1, 1, 1), dtype=np.float32)
    energy_eps, smax, gsum = _energy_and_conductance(u, grid.h, eps, p,
                                                     dummy, dummy, dummy, False)
    energy_plain, _, _ = _energy_and_conductance(u, grid.h, 0.0, p,
                                                 dummy, dummy, dummy, False)
    ncells = (grid.shape[0] - 1) * (grid.shape[1] - 1) * (grid.shape[2] - 1)
    stats = {
        "max_grad": math.sqrt(smax),
        "mean_grad": gsum / ncells,
        "eps": eps,
        "eps_bias": energy_eps - energy_plain,
        "min_u": float(u.min()),
        "max_u": float(u.max()),
    }
    result = CapacityResult(
        energy=energy_eps,
        field=ScalarField(grid, u),
        grad_stats=stats,
        levelset_fluxes={},
        converged=converged,
        iterations=iters,
        residual=resid,
        p=p,
        eps=eps,
    )
    if flux_levels:
        fluxes = {}
        for t in flux_levels:
            try:
                fluxes[t] = level_set_flux(result, t, p)
            except (RuntimeError, ValueError):
                continue
        result.levelset_fluxes = fluxes
    return result


# ---------------------------------------------------------------------------
# level-set flux and density/potential round trip


def level_set_flux(res: CapacityResult, t: float, p: float = None,
                   strict: bool = False) -> float:
    """Surface integral of |grad u|^(p-1) over the marching level set {u=t}.

    Equals the capacity for every regular value t of the exact minimizer.
    With a clipped unbounded curve (open polyline) the level sets necessarily
    meet the outer walls; the zero-flux boundary condition means no flux is
    lost through the walls, so the clipped surface integral is still the
    right quantity.  Pass strict=True to refuse boundary contact instead.
    """
    from skimage import measure

    if p is None:
        p = res.p
    if not 0.0 < t < 1.0:
        raise ValueError("level t must lie strictly between 0 and 1")
    grid = res.grid
    u = res.field.values
    verts, faces, _, _ = measure.marching_cubes(
        u, level=t, spacing=(grid.h, grid.h, grid.h))
    span = (np.array(u.shape) - 1) * grid.h
    if strict and (np.any(verts < 0.51 * grid.h)
                   or np.any(verts > span - 0.51 * grid.h)):
        raise RuntimeError(f"level set u={t} touches the domain boundary; "
                           "enlarge the box")
    g = np.empty(tuple(n - 1 for n in grid.shape), dtype=np.float32)
    _gradient_magnitude(u, grid.h, g)
    tri = verts[faces]
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    centroid = tri.mean(axis=1)
    idx = np.clip((centroid / grid.h - 0.5).round().astype(int), 0,
                  np.array(g.shape) - 1)
    vals = g[idx[:, 0], idx[:, 1], idx[:, 2]].astype(float) ** (p - 1.0)
    return float(np.sum(areas * vals))


def density_from_potential(res: CapacityResult) -> np.ndarray:
    """Cell-centered |grad u|, the optimal path-family density."""
    grid = res.grid
    g = np.empty(tuple(n - 1 for n in grid.shape), dtype=np.float32)
    _gradient_magnitude(res.field.values, grid.h, g)
    return g


@njit(cache=True)
def _grid_dijkstra(rho, sources, h, dist):
    """Multi-source Dijkstra on the 6-neighbor node lattice.

    Edge cost between adjacent nodes is h times the mean of the cell
    densities bordering the edge.  dist is flat float32, initialized inf.
    """
    nx = dist.shape[0]
    ny = dist.shape[1]
    nz = dist.shape[2]
    cap = nx * ny * nz + 1
    heap_d = np.empty(cap, dtype=np.float64)
    heap_i = np.empty(cap, dtype=np.int64)
    size = 0
    for s in sources:
        i = s // (ny * nz)
        j = (s // nz) % ny
        k = s % nz
        dist[i, j, k] = 0.0
        heap_d[size] = 0.0
        heap_i[size] = s
        size += 1
        # sift up
        c = size - 1
        while c > 0:
            par = (c - 1) // 2
            if heap_d[c] < heap_d[par]:
                heap_d[c], heap_d[par] = heap_d[par], heap_d[c]
                heap_i[c], heap_i[par] = heap_i[par], heap_i[c]
                c = par
            else:
                break
    while size > 0:
        d0 = heap_d[0]
        n0 = heap_i[0]
        size -= 1
        heap_d[0] = heap_d[size]
        heap_i[0] = heap_i[size]
        c = 0
        while True:
            l = 2 * c + 1
            r = l + 1
            m = c
            if l < size and heap_d[l] < heap_d[m]:
                m = l
            if r < size and heap_d[r] < heap_d[m]:
                m = r
            if m == c:
                break
            heap_d[c], heap_d[m] = heap_d[m], heap_d[c]
            heap_i[c], heap_i[m] = heap_i[m], heap_i[c]
            c = m
        i = n0 // (ny * nz)
        j = (n0 // nz) % ny
        k = n0 % nz
        if d0 > dist[i, j, k]:
            continue
        for axis in range(3):
            for sgn in (-1, 1):
                ii, jj, kk = i, j, k
                if axis == 0:
                    ii += sgn
                    if ii < 0 or ii >= nx:
                        continue
                elif axis == 1:
                    jj += sgn
                    if jj < 0 or jj >= ny:
                        continue
                else:
                    kk += sgn
                    if kk < 0 or kk >= nz:
                        continue
                # cells around the traversed edge
                bi = min(i, ii) if axis == 0 else i
                bj = min(j, jj) if axis == 1 else j
                bk = min(k, kk) if axis == 2 else k
                acc = 0.0
                cnt = 0
                if axis == 0:
                    for dj in (-1, 0):
                        for dk in (-1, 0):
                            cj = bj + dj
                            ck = bk + dk
                            if 0 <= cj < ny - 1 and 0 <= ck < nz - 1:
                                acc += rho[bi, cj, ck]
                                cnt += 1
                elif axis == 1:
                    for di in (-1, 0):
                        for dk in (-1, 0):
                            ci = bi + di
                            ck = bk + dk
                            if 0 <= ci < nx - 1 and 0 <= ck < nz - 1:
                                acc += rho[ci, bj, ck]
                                cnt += 1
                else:
                    for di in (-1, 0):
                        for dj in (-1, 0):
                            ci = bi + di
                            cj = bj + dj
                            if 0 <= ci < nx - 1 and 0 <= cj < ny - 1:
                                acc += rho[ci, cj, bk]
                                cnt += 1
                cost = h * acc / max(cnt, 1)
                nd = d0 + cost
                if nd < dist[ii, jj, kk]:
                    dist[ii, jj, kk] = nd
                    if size < cap:
                        heap_d[size] = nd
                        heap_i[size] = (ii * ny + jj) * nz + kk
                        size += 1
                        c = size - 1
                        while c > 0:
                            par = (c - 1) // 2
                            if heap_d[c] < heap_d[par]:
                                heap_d[c], heap_d[par] = heap_d[par], heap_d[c]
                                heap_i[c], heap_i[par] = heap_i[par], heap_i[c]
                                c = par
                            else:
                                break


def potential_from_density(rho: np.ndarray, grid: VoxelGrid) -> ScalarField:
    """u(x) = min over lattice paths from C0 of the rho-length, clamped at 1."""
    rho = np.ascontiguousarray(rho, dtype=np.float32)
    if rho.shape != tuple(n - 1 for n in grid.shape):
        raise ValueError("density shape must match the cell lattice")
    if np.any(rho < 0):
        raise ValueError("density must be nonnegative")
    dist = np.full(grid.shape, np.inf, dtype=np.float64)
    sources = np.flatnonzero(grid.labels == LABEL_C0).astype(np.int64)
    _grid_dijkstra(rho, sources, grid.h, dist)
    u = np.minimum(dist, 1.0).astype(np.float32)
    return ScalarField(grid, u)


# ---------------------------------------------------------------------------
# end-to-end pipeline


def _curves_bound(curves) -> tuple:
    pts = np.vstack([c.vertices for c in curves])
    return pts.min(axis=0), pts.max(axis=0)


def _normalize_curves(c0: Polyline, c1: Polyline, box, h: float,
                      r_thick: float) -> tuple:
    """Similarity keeping both curves inside the box with rasterization margin.

    Conformal capacity at p=3 is invariant under similarities, so this only
    changes the discretization, never the target value.
    """
    margin = 5.0 * h + r_thick
    lo = float(box[0]) + margin
    hi = float(box[1]) - margin
    bmin, bmax = _curves_bound([c0, c1])
    if np.all(bmin >= lo) and np.all(bmax <= hi):
        return c0, c1, identity_map()
    center = 0.5 * (bmin + bmax)
    half = float(np.max(bmax - bmin)) * 0.5
    target_half = 0.5 * (hi - lo) * 0.8
    scale = 1.0 if half == 0 else min(1.0, target_half / half)
    shift = -scale * center + 0.5 * (lo + hi)
    sim = Similarity(scale=scale, translation=shift)
    m = MobiusMap((sim,))
    return apply_mobius(m, c0), apply_mobius(m, c1), m


def capacity(c0: Polyline, c1: Polyline,
             settings: SolveSettings = SolveSettings()) -> CapacityResult:
    """cap_p of the thickened condenser (C0, C1): normalize, rasterize, solve."""
    r = settings.thickness()
    c0n, c1n, norm = _normalize_curves(c0, c1, settings.box, settings.h, r)
    grid = rasterize_condenser(c0n, c1n, settings.box, settings.h, r)
    res = solve_capacity(grid, p=settings.p, eps_reg=settings.eps,
                         tol=settings.tol, max_iters=settings.max_iters,
                         flux_levels=settings.flux_levels)
    res.normalization = norm
    return res

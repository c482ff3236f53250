"""Reproducible experiment drivers behind the capax command line.

Randomness contract: every stream is numpy's Philox counter-based generator
keyed by the experiment seed and a case counter, so identical configs
reproduce identical reports bit for bit.  Machine-readable reports carry no
wall-clock data; runtimes appear only in the human text rendering.

The discretization allowance delta(h) used by capacity lower-bound checks is
three times the measured relative error of the solver on the analytic
round-ring condenser at the same spacing (RING_CALIBRATION below, reproduced
by cmd_hopf as a by-product of its ladder).
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .geometry import (CliffordFrame, MobiusMap, Polyline, Similarity,
                       apply_mobius, clifford_swap, coaxial_circle,
                       inverse_stereographic_polyline, stereographic,
                       z_axis_segment)
from .graphmod import (WeightedGraph, build_grid_graph, connecting_modulus,
                       cut_modulus, duality_product)
from .pde import (CapacityResult, SolveSettings, capacity, rasterize_condenser,
                  rasterize_mixed, rasterize_regions, solve_capacity)
from .reference import hopf_capacity_exact, hopf_profile, ring_capacity_exact
from .symmetrize import (DihedralFrame, HalfspaceFrame, axisymmetric_surrogate,
                         dihedral_symmetrize, linked_component, reflect_half)
from .topology import is_linked, separated_by_frame

# measured |relative error| of the ring condenser (a,b) = (0.5, 1.5) against
# 4*pi/log(b/a)^2, per spacing 1/h; delta(h) interpolates linearly in 1/h and
# clamps at the table ends
RING_CALIBRATION = {
    16: 0.142,
    32: 0.070,
    48: 0.0485,
    64: 0.035,
    96: 0.0242,
}

SQRT2 = math.sqrt(2.0)


def _rng(seed: int, *parts: int) -> np.random.Generator:
    """Philox stream keyed by (seed, mix of stream labels).

    The second key word folds the labels with the splitmix64 multiplier, so
    streams for different (case, side, purpose) labels never collide and the
    whole scheme is reproducible from the documented constants.
    """
    mix = 0
    for part in parts:
        mix = (mix * 0x9E3779B97F4A7C15 + int(part) + 1) % (1 << 64)
    return np.random.Generator(np.random.Philox(key=[int(seed) % (1 << 64), mix]))


def delta_for(h: float) -> float:
    """Discretization allowance for capacity lower-bound checks at spacing h."""
    inv = 1.0 / h
    keys = sorted(RING_CALIBRATION)
    err = RING_CALIBRATION[keys[0]]
    if inv >= keys[-1]:
        err = RING_CALIBRATION[keys[-1]]
    else:
        for a, b in zip(keys[:-1], keys[1:]):
            if a <= inv <= b:
                t = (inv - a) / (b - a)
                err = (1 - t) * RING_CALIBRATION[a] + t * RING_CALIBRATION[b]
                break
    return 3.0 * err


# ---------------------------------------------------------------------------
# config and report


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    box: tuple = (-3.0, 3.0)
    h: float = 1.0 / 32.0
    r_thick: float = None
    p: float = 3.0
    eps: float = None
    tol: float = 1e-4
    max_iters: int = 200
    seed: int = 0
    cases: int = 20
    out: str = None

    def __post_init__(self):
        if self.tol <= 0 or self.h <= 0:
            raise ValueError("tolerances and spacing must be positive")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ValueError("seed must fit in 64 bits")

    def config_hash(self) -> str:
        payload = {k: v for k, v in asdict(self).items() if k != "out"}
        blob = json.dumps(payload, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def settings(self, h: float = None, tol: float = None) -> SolveSettings:
        return SolveSettings(
            box=tuple(self.box),
            h=self.h if h is None else h,
            r_thick=self.r_thick,
            p=self.p,
            eps=self.eps,
            tol=self.tol if tol is None else tol,
            max_iters=self.max_iters,
        )


@dataclass
class Report:
    command: str
    config: dict
    config_hash: str
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    def add(self, **rec) -> dict:
        rec.setdefault("config_hash", self.config_hash)
        self.records.append(rec)
        return rec

    @property
    def passed(self) -> bool:
        return all(r.get("ok", True) for r in self.records)

    def to_json(self) -> str:
        """Deterministic machine rendering: no wall-clock fields, sorted keys."""
        def strip(rec):
            return {k: v for k, v in rec.items() if k != "runtime"}

        payload = {
            "command": self.command,
            "config": self.config,
            "config_hash": self.config_hash,
            "records": [strip(r) for r in self.records],
            "summary": self.summary,
            "passed": self.passed,
        }
        return json.dumps(payload, sort_keys=True, indent=2, default=_jsonable) + "\n"

    def to_text(self) -> str:
        keys = []
        for r in self.records:
            for k in r:
                if k not in keys and k != "config_hash":
                    keys.append(k)
        rows = [[_fmt(r.get(k, "")) for k in keys] for r in self.records]
        widths = [max(len(k), *(len(row[i]) for row in rows)) if rows else len(k)
                  for i, k in enumerate(keys)]
        lines = [f"# capax {self.command}  (config {self.config_hash})"]
        lines.append("  ".join(k.ljust(w) for k, w in zip(keys, widths)))
        for row in rows:
            lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)))
        for k, v in self.summary.items():
            lines.append(f"{k}: {_fmt(v)}")
        lines.append(f"passed: {self.passed}")
        return "\n".join(lines) + "\n"

    def ladder_csv(self) -> str:
        """CSV of (h, value) pairs for records carrying both fields."""
        lines = ["h,value"]
        for r in self.records:
            if "h" in r and "value" in r:
                lines.append(f"{r['h']!r},{r['value']!r}")
        return "\n".join(lines) + "\n"

    def write(self, out: str) -> None:
        from pathlib import Path

        base = Path(out)
        base.parent.mkdir(parents=True, exist_ok=True)
        base.with_suffix(".json").write_text(self.to_json())
        base.with_suffix(".txt").write_text(self.to_text())
        if any("h" in r and "value" in r for r in self.records):
            base.with_suffix(".csv").write_text(self.ladder_csv())


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x)}")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


# ---------------------------------------------------------------------------
# seeded curve generation


def _fourier_noise(rng, t: np.ndarray, amplitude: float, modes: int = 3) -> np.ndarray:
    """Smooth periodic noise with sup-norm at most `amplitude`."""
    out = np.zeros_like(t)
    for m in range(1, modes + 1):
        a, b = rng.uniform(-1.0, 1.0, size=2) / m
        out += a * np.cos(m * t) + b * np.sin(m * t)
    peak = np.max(np.abs(out))
    if peak > 0:
        out *= amplitude * rng.uniform(0.3, 1.0) / peak
    return out


def random_linked_curve(seed: int, frame: CliffordFrame = CliffordFrame(),
                        side: int = 0, n: int = 192,
                        noise: float = 0.2) -> Polyline:
    """A seeded closed loop inside one component of S^3 minus the frame torus.

    In the chart where the torus is the tube of radius 1 around the circle of
    radius sqrt(2), side 0 is the tube interior (containing the unit circle,
    its core) and side 1 the exterior (core: the z-axis through infinity).
    Side-0 curves ride the tube center circle with bounded radial/vertical
    noise, so they are tube longitudes, isotopic to the core in their
    component.  Side-1 curves are noisy meridian-plane ellipses around the
    tube cross-section: they thread the hole of the unit circle once, which
    makes them core-isotopic in the exterior.  Either way |lk| = 1 with the
    opposite core, and a side-0/side-1 pair is itself linked with |lk| = 1.
    Noise bounds keep every curve strictly inside its component and inside
    |coordinate| < 2.8.
    """
    rng = _rng(seed, side, 0xCA9A)
    t = 2.0 * math.pi * np.arange(n) / n
    if side == 0:
        a = _fourier_noise(rng, t, min(noise, 0.45))
        b = _fourier_noise(rng, t, min(noise, 0.45))
        rho = SQRT2 + a
        verts = np.column_stack([rho * np.cos(t), rho * np.sin(t), b])
    elif side == 1:
        # ellipse in the meridian plane at angle theta0 around the tube
        # center (sqrt(2), 0): semi-axes keep it outside the tube (>= 1.09
        # from the center), off the chart axis (rho >= 0.16) and in the box
        theta0 = rng.uniform(0.0, 2.0 * math.pi)
        a = rng.uniform(1.15, 1.25) * (1.0 + _fourier_noise(rng, t, min(noise * 0.25, 0.05)))
        b = rng.uniform(1.35, 1.75) * (1.0 + _fourier_noise(rng, t, min(noise * 0.25, 0.05)))
        z0 = rng.uniform(-0.1, 0.1)
        theta = theta0 + _fourier_noise(rng, t, min(noise * 0.5, 0.1))
        rho = SQRT2 + a * np.cos(t)
        z = z0 + b * np.sin(t)
        verts = np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])
    else:
        raise ValueError("side must be 0 or 1")
    c = Polyline(verts, "r3", True)
    if frame.psi.primitives:
        c = apply_mobius(frame.psi, c)
    return c


def torus_shell_predicate(r_thick: float):
    """Voxel predicate for the thickened chart image of the Clifford torus."""

    def inside(pts: np.ndarray) -> np.ndarray:
        rho = np.hypot(pts[:, 0], pts[:, 1])
        d = np.hypot(rho - SQRT2, pts[:, 2])
        return np.abs(d - 1.0) <= r_thick

    return inside


# ---------------------------------------------------------------------------
# shared solve helpers


_HOPF_CACHE: dict = {}


def hopf_condenser(box, h: float):
    """The clipped-axis / unit-circle condenser in the default chart."""
    n_axis = max(65, int(round((box[1] - box[0]) / h)) + 1)
    n_circ = max(256, int(round(2.0 * math.pi / h)))
    return (z_axis_segment(box[0], box[1], n=n_axis),
            coaxial_circle(1.0, 0.0, n=n_circ))


def hopf_capacity_numeric(settings: SolveSettings) -> CapacityResult:
    """Canonical Hopf solve, cached per (box, h, r_thick, tol)."""
    key = (tuple(settings.box), settings.h, settings.thickness(), settings.tol)
    if key not in _HOPF_CACHE:
        axis, circ = hopf_condenser(settings.box, settings.h)
        grid = rasterize_condenser(axis, circ, settings.box, settings.h,
                                   settings.thickness())
        _HOPF_CACHE[key] = solve_capacity(
            grid, p=settings.p, eps_reg=settings.eps, tol=settings.tol,
            max_iters=settings.max_iters)
    return _HOPF_CACHE[key]


def axis_condenser_capacity(c: Polyline, settings: SolveSettings) -> CapacityResult:
    """cap_p(z-axis, c) in the chart, axis clipped at the box."""
    n_axis = max(65, int(round((settings.box[1] - settings.box[0]) / settings.h)) + 1)
    axis = z_axis_segment(settings.box[0], settings.box[1], n=n_axis)
    return capacity(axis, c, settings)


def _balanced_chart(c0: Polyline, c1: Polyline,
                    frame: CliffordFrame) -> tuple:
    """Re-project both curves through a chart pole far from everything.

    A curve pair C0, phi(C0) straddling the Clifford torus can have a wildly
    lopsided chart image (the swap pushes points near the default pole out
    toward infinity).  Capacity is chart-independent, so rotate S^3 to put
    the stereographic pole at the point of the torus farthest from both
    curves; the images then have comparable, bounded extent.
    """
    q0 = inverse_stereographic_polyline(c0).vertices
    q1 = inverse_stereographic_polyline(c1).vertices
    tor = frame.torus_polyline(24, 48)
    allq = np.vstack([q0, q1])
    dist = np.arccos(np.clip(np.abs(tor @ allq.T), -1.0, 1.0)).min(axis=1)
    pole = tor[int(np.argmax(dist))]
    basis = [pole]
    for e in np.eye(4):
        v = e - sum(np.dot(e, b) * b for b in basis)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            basis.append(v / norm)
    rot = np.array(basis[1:] + [basis[0]])

    def chart(q, closed):
        pts = np.array([stereographic(rot @ point) for point in q])
        return Polyline(pts, "r3", closed)

    return chart(q0, c0.closed), chart(q1, c1.closed)


def _shrink_pair(c0: Polyline, c1: Polyline,
                 half_target: float = 1.0) -> tuple:
    """Center the pair at the origin and scale it to the target half-extent.

    Capacity at p = 3 is similarity-invariant, so this only trades two
    discretization biases: a small configuration loses less far-field
    energy to the zero-flux walls but resolves the inter-curve gap with
    fewer cells.  half_target = 1.0 in a (-3,3) box keeps the wall loss
    below a few percent while the gap stays tens of cells wide.
    """
    lo = np.minimum(c0.vertices.min(axis=0), c1.vertices.min(axis=0))
    hi = np.maximum(c0.vertices.max(axis=0), c1.vertices.max(axis=0))
    center = 0.5 * (lo + hi)
    half = float(np.max(hi - lo)) * 0.5
    scale = min(1.0, half_target / half) if half > 0 else 1.0
    m = MobiusMap((Similarity(scale=scale, translation=-scale * center),))
    return apply_mobius(m, c0), apply_mobius(m, c1)


# ---------------------------------------------------------------------------
# commands


def ring_capacity_numeric(settings: SolveSettings) -> CapacityResult:
    """Round-ring condenser (spheres of radius 0.5 and 1.5) on the box grid."""
    grid = rasterize_regions(settings.box, settings.h,
                             lambda q: (q ** 2).sum(1) <= 0.25,
                             lambda q: (q ** 2).sum(1) >= 2.25)
    return solve_capacity(grid, p=settings.p, eps_reg=settings.eps,
                          tol=settings.tol, max_iters=settings.max_iters)


def _flux_spread(res: CapacityResult) -> float:
    fluxes = np.array(list(res.levelset_fluxes.values()))
    return float(fluxes.std() / fluxes.mean()) if fluxes.size else math.inf


def cmd_hopf(config: ExperimentConfig) -> Report:
    """Grid ladders for the Hopf and ring condensers against exact values.

    The ring ladder doubles as the solver calibration run behind the
    RING_CALIBRATION table that delta_for interpolates.
    """
    rep = Report("hopf", _config_dict(config), config.config_hash())
    exact = hopf_capacity_exact()
    profile_mid = hopf_profile(math.pi / 4.0)
    rep.add(case="profile-midpoint", value=profile_mid,
            reference=0.5, ok=abs(profile_mid - 0.5) < 1e-12,
            criterion="exact-value")
    ladder = sorted({16, 32, int(round(1.0 / config.h))})
    ring_exact = ring_capacity_exact(0.5, 1.5)
    ring_errors = []
    for inv in ladder:
        t0 = time.time()
        res = ring_capacity_numeric(config.settings(h=1.0 / inv))
        err = abs(res.energy - ring_exact) / ring_exact
        ring_errors.append(err)
        rep.add(case=f"ring-h=1/{inv}", h=1.0 / inv, value=res.energy,
                reference=ring_exact, rel_error=(res.energy - ring_exact) / ring_exact,
                flux_spread=_flux_spread(res), converged=res.converged,
                iterations=res.iterations, runtime=time.time() - t0,
                ok=bool(res.converged and _flux_spread(res) <= 0.05),
                criterion="solver-calibration")
    ring_monotone = all(a > b for a, b in zip(ring_errors[:-1], ring_errors[1:]))
    rep.add(case="ring-ladder-shrinks", ok=ring_monotone, value=ring_errors[-1],
            criterion="solver-calibration")
    errors = []
    for inv in ladder:
        t0 = time.time()
        res = hopf_capacity_numeric(config.settings(h=1.0 / inv))
        runtime = time.time() - t0
        rel = (res.energy - exact) / exact
        errors.append(abs(rel))
        rep.add(case=f"hopf-h=1/{inv}", h=1.0 / inv, value=res.energy,
                reference=exact, rel_error=rel, flux_spread=_flux_spread(res),
                converged=res.converged, iterations=res.iterations,
                runtime=runtime,
                ok=bool(res.converged and _flux_spread(res) <= 0.05),
                criterion="hopf-ladder")
    monotone = all(a > b for a, b in zip(errors[:-1], errors[1:]))
    rep.add(case="hopf-ladder-monotone", ok=monotone, value=errors[-1],
            criterion="hopf-ladder")
    rep.summary = {
        "exact": exact,
        "finest_rel_error": errors[-1],
        "hopf_ladder": {f"1/{inv}": e for inv, e in zip(ladder, errors)},
        "ring_ladder": {f"1/{inv}": e for inv, e in zip(ladder, ring_errors)},
    }
    return rep


def cmd_halving(config: ExperimentConfig) -> Report:
    """Reflection identity cap(C0, swap(C0)) = 2^(1-p) cap(C0, T), numerically.

    The swap exchanges the two sides of the Clifford torus T and preserves T,
    so cap(C1, T) = cap(C0, T) exactly, which lets the torus-side solve use
    the bounded curve.  The constant 2^(1-p) (= 1/4 at p = 3) follows from
    the surface-modulus split 2 M(Sigma_0) = M(Sigma(C0, C1)) through the
    duality exponent, and is reproduced in closed form by the concentric
    ring analog cap(a, b) = cap(b, sqrt(ab))/4; the reported ratio uses it.

    The curve-pair side is solved in a balanced chart (pole on the torus,
    far from both curves) and scaled small relative to the box; without
    that, the swap image can sprawl toward the walls and the zero-flux
    truncation depresses the measured ratio by 15-20% independently of h.
    """
    rep = Report("halving", _config_dict(config), config.config_hash())
    swap = clifford_swap()
    factor = 2.0 ** (1.0 - config.p)
    shell = torus_shell_predicate(config.settings().thickness())
    hopf = hopf_capacity_numeric(config.settings())
    rep.add(case="hopf-degenerate-control", lhs=hopf.energy,
            reference=hopf_capacity_exact(),
            ok=bool(hopf.converged), criterion="halving-identity")
    ratios = []
    for case in range(config.cases):
        c0 = random_linked_curve(config.seed + case, side=0)
        c1 = apply_mobius(swap, c0)
        t0 = time.time()
        b0, b1 = _shrink_pair(*_balanced_chart(c0, c1, CliffordFrame()))
        lhs = capacity(b0, b1, config.settings()).energy
        grid = rasterize_mixed(config.box, config.h, ("curve", c0),
                               ("region", shell),
                               config.settings().thickness())
        rhs = solve_capacity(grid, p=config.p, eps_reg=config.eps,
                             tol=config.tol, max_iters=config.max_iters,
                             flux_levels=()).energy
        runtime = time.time() - t0
        ratio = lhs / (factor * rhs)
        ratios.append(ratio)
        rep.add(case=case, lhs=lhs, rhs_quarter=factor * rhs, ratio=ratio,
                runtime=runtime, ok=bool(np.isfinite(ratio)),
                criterion="halving-identity")
    med = float(np.median(ratios))
    rep.add(case="median-ratio", value=med, ok=bool(abs(med - 1.0) < 0.5),
            criterion="halving-identity")
    rep.summary = {"median_ratio": med, "ratios": ratios, "factor": factor}
    return rep


def cmd_symmetrize(config: ExperimentConfig) -> Report:
    """Monotone capacity chain under successive symmetrization."""
    rep = Report("symmetrize", _config_dict(config), config.config_hash())
    exact = hopf_capacity_exact()
    tol_step = 1.1 * delta_for(config.h)
    # the surrogate circle condenser is similarity-equivalent to the Hopf
    # pair, so its value is the canonical solve at the reference spacing
    fine = config.settings(h=1.0 / 64.0)
    surrogate_value = hopf_capacity_numeric(fine).energy
    for case in range(config.cases):
        rng = _rng(config.seed, case, 0x5E)
        c = random_linked_curve(config.seed + case, side=0)
        ang = rng.uniform(0.0, math.pi)
        fr = HalfspaceFrame(np.array([math.cos(ang), math.sin(ang), 0.0]))
        t0 = time.time()
        v0 = axis_condenser_capacity(c, config.settings()).energy
        c1 = linked_component(reflect_half(c, fr))
        v1 = axis_condenser_capacity(c1, config.settings()).energy
        c2 = linked_component(dihedral_symmetrize(c1, DihedralFrame(fr, 2)))
        v2 = axis_condenser_capacity(c2, config.settings()).energy
        c4 = linked_component(dihedral_symmetrize(c2, DihedralFrame(fr, 4)))
        v3 = axis_condenser_capacity(c4, config.settings()).energy
        runtime = time.time() - t0
        # the axisymmetric terminal is a coaxial circle; its condenser with
        # the axis is similarity-equivalent to the canonical pair, so its
        # value is the cached reference solve
        circle = axisymmetric_surrogate(c4)
        radius = float(np.hypot(circle.vertices[0, 0], circle.vertices[0, 1]))
        chain = [v0, v1, v2, v3, surrogate_value]
        slack = [tol_step * max(a, b) for a, b in zip(chain[:-1], chain[1:])]
        monotone = all(b <= a + s for a, b, s in zip(chain[:-1], chain[1:], slack))
        rep.add(case=case, before=v0, reflect=v1, dihedral2=v2, dihedral4=v3,
                surrogate=surrogate_value, surrogate_radius=radius,
                monotone=monotone, runtime=runtime, ok=monotone,
                criterion="symmetrization-chain")
    terminal_rel = abs(surrogate_value - exact) / exact
    rep.add(case="surrogate-vs-exact", value=surrogate_value, reference=exact,
            rel_error=terminal_rel, ok=bool(terminal_rel <= 0.12),
            criterion="symmetrization-chain")
    rep.summary = {"surrogate_value": surrogate_value,
                   "surrogate_rel_error": terminal_rel,
                   "step_tolerance": tol_step}
    return rep


def _random_frame(rng) -> CliffordFrame:
    """A random similarity image of the standard Clifford torus."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    rot = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])
    scale = float(rng.uniform(0.55, 0.95))
    shift = rng.uniform(-0.3, 0.3, size=3)
    return CliffordFrame(MobiusMap((Similarity(scale, rot, shift),)))


def cmd_theorem(config: ExperimentConfig) -> Report:
    """Property check: separated linked pairs have capacity >= the Hopf value.

    Also records the empirically measured perturbation margin of the Hopf
    link under the standard frame (how large a seeded smooth perturbation of
    the unit circle keeps the pair separated at sample scale); the paper-side
    constant is not reproduced, only this measured stand-in.
    """
    rep = Report("theorem", _config_dict(config), config.config_hash())
    exact = hopf_capacity_exact()
    delta = delta_for(config.h)
    margins = []
    for case in range(config.cases):
        rng = _rng(config.seed, case, 0x7E0)
        frame = _random_frame(rng)
        c0 = random_linked_curve(config.seed + case, frame, side=0)
        c1 = random_linked_curve(config.seed + case, frame, side=1)
        sep = separated_by_frame(c0, c1, frame)
        linked = is_linked(c0, c1)
        t0 = time.time()
        val = capacity(c0, c1, config.settings()).energy
        runtime = time.time() - t0
        bound = exact * (1.0 - delta)
        margin = val / exact - 1.0
        margins.append(margin)
        rep.add(case=case, separated=sep, linked=linked, value=val,
                bound=bound, margin=margin, runtime=runtime,
                ok=bool(sep and linked and val >= bound),
                criterion="theorem-lower-bound")
    eps_margin = hopf_perturbation_margin(config.seed)
    rep.add(case="hopf-perturbation-margin", value=eps_margin,
            ok=bool(eps_margin > 0.0), criterion="theorem-lower-bound")
    rep.summary = {
        "delta": delta,
        "min_margin": float(np.min(margins)) if margins else None,
        "violations": int(sum(1 for r in rep.records
                              if r.get("criterion") == "theorem-lower-bound"
                              and not r["ok"])),
        "perturbation_margin": eps_margin,
    }
    return rep


def hopf_perturbation_margin(seed: int, n: int = 128, tries: int = 24) -> float:
    """Largest tested eps keeping all seeded eps-perturbed Hopf pairs separated.

    Measured at sample scale with the standard frame; an empirical margin,
    not a sharp constant.
    """
    frame = CliffordFrame()
    axis_n = 96
    best = 0.0
    for k in range(1, tries + 1):
        eps = 0.02 * k
        ok = True
        for j in range(8):
            rng = _rng(seed, k, j, 0xE5)
            t = 2.0 * math.pi * np.arange(n) / n
            rad = 1.0 + _fourier_noise(rng, t, eps)
            zs = _fourier_noise(rng, t, eps)
            c1 = Polyline(np.column_stack([rad * np.cos(t), rad * np.sin(t), zs]),
                          "r3", True)
            axis = z_axis_segment(-3.0, 3.0, n=axis_n)
            if not separated_by_frame(axis, c1, frame):
                ok = False
                break
        if not ok:
            break
        best = eps
    return best


def cmd_duality(config: ExperimentConfig) -> Report:
    """Path/cut duality products on hand, random, and grid graphs."""
    rep = Report("duality", _config_dict(config), config.config_hash())
    p = config.p
    q = p / (p - 1.0)

    def product(g, S, T, pp, qq):
        mp = connecting_modulus(g, S, T, p=pp)
        mq = cut_modulus(g, S, T, q=qq)
        return duality_product(mp, mq)

    hand = {
        "parallel-4": (WeightedGraph(2, [(0, 1)] * 4, [1.0] * 4), [0], [1]),
        "series-3": (WeightedGraph(4, [(0, 1), (1, 2), (2, 3)], [1.0] * 3), [0], [3]),
    }
    for name, (g, S, T) in hand.items():
        t0 = time.time()
        prod = product(g, S, T, 2.0, 2.0)
        rep.add(case=name, product=prod, deviation=abs(prod - 1.0),
                runtime=time.time() - t0, ok=bool(abs(prod - 1.0) <= 1e-9),
                criterion="duality-product")

    devs = []
    for case in range(config.cases):
        g, S, T = random_connected_graph(config.seed + case)
        t0 = time.time()
        prod = product(g, S, T, p, q)
        dev = abs(prod - 1.0)
        devs.append(dev)
        rep.add(case=case, n=g.n, edges=g.m, product=prod, deviation=dev,
                runtime=time.time() - t0, ok=bool(dev <= 1e-5),
                criterion="duality-product")

    gg, coords = build_grid_graph(((-2.0, -2.0, -2.0), (2.0, 2.0, 2.0)), 0.4)
    r = np.linalg.norm(coords, axis=1)
    S = np.flatnonzero(r <= 0.5).tolist()
    T = np.flatnonzero(r >= 1.5).tolist()
    t0 = time.time()
    # the grid condenser has hundreds of active paths, so constraint
    # generation needs a larger round budget; tolerance 1e-4 is ample
    # against the 1e-3 product gate
    mp = connecting_modulus(gg, S, T, p=p, tol=1e-4, max_rounds=3000)
    mq = cut_modulus(gg, S, T, q=q, tol=1e-4, max_rounds=3000)
    prod = duality_product(mp, mq)
    rep.add(case="grid-ring", n=gg.n, edges=gg.m, product=prod,
            deviation=abs(prod - 1.0), runtime=time.time() - t0,
            ok=bool(abs(prod - 1.0) <= 1e-3), criterion="duality-product")
    rep.summary = {"max_random_deviation": float(np.max(devs)) if devs else None,
                   "grid_ring_deviation": abs(prod - 1.0)}
    return rep


def random_connected_graph(seed: int, max_vertices: int = 30):
    """Seeded connected graph with random positive lengths and end terminals."""
    rng = _rng(seed, 0x9A9)
    n = int(rng.integers(8, max_vertices + 1))
    m = int(rng.integers(n, 3 * n))
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    while len(edges) < m:
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u != v:
            edges.append((min(u, v), max(u, v)))
    sigma = rng.uniform(0.2, 3.0, size=len(edges))
    return WeightedGraph(n, edges, sigma.tolist()), [0], [n - 1]


COMMANDS = {
    "hopf": cmd_hopf,
    "halving": cmd_halving,
    "symmetrize": cmd_symmetrize,
    "theorem": cmd_theorem,
    "duality": cmd_duality,
}


def run_command(config: ExperimentConfig) -> Report:
    if config.command not in COMMANDS:
        raise ValueError(f"unknown command {config.command!r}")
    rep = COMMANDS[config.command](config)
    if config.out:
        rep.write(config.out)
    return rep


def _config_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["box"] = list(config.box)
    return d

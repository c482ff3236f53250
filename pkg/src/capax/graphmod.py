"""Discrete p-modulus of connecting path families and separating cut families
on weighted graphs, with the conjugate-exponent duality product.

Both moduli are solved by constraint generation: only a few constraints are
active at the optimum, so we alternate an oracle (shortest path, resp. min
cut, under the current density) with an exact solve of the restricted convex
program via its Lagrangian dual

    g(lambda) = sum(lambda) - (p-1) * sum_e m_e rho_e(lambda)^p,
    rho_e = (u_e * Lambda_e / (p m_e))^(1/(p-1)),  Lambda_e = sum_{gamma owns e} lambda_gamma,

which is smooth and concave and is maximized over lambda >= 0 with L-BFGS-B.

Edge data: sigma_e is the length (path usage), m_e the energy measure
(defaults to sigma_e), and cuts use the transverse weight a_e = m_e / sigma_e.
With these weights the product Mod_p(paths)^(1/p) * Mod_q(cuts)^(1/q) equals 1
exactly on graphs (Fulkerson blocking duality), mirroring the continuum
path/surface duality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np
from scipy import optimize, sparse


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected graph with positive edge lengths sigma and energy measures."""

    n: int
    edges: np.ndarray  # (m, 2) int
    sigma: np.ndarray  # (m,) edge length
    measure: np.ndarray = None  # (m,) energy weight, defaults to sigma

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        s = np.asarray(self.sigma, dtype=float).ravel()
        if e.shape[0] != s.shape[0]:
            raise ValueError("edges and sigma length mismatch")
        if np.any(s <= 0):
            raise ValueError("edge lengths must be positive")
        if np.any(e[:, 0] == e[:, 1]):
            raise ValueError("self-loops are not allowed")
        if np.any(e < 0) or np.any(e >= self.n):
            raise ValueError("edge endpoint out of range")
        m = s.copy() if self.measure is None else np.asarray(self.measure, dtype=float).ravel()
        if np.any(m <= 0) or m.shape != s.shape:
            raise ValueError("invalid edge measures")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "sigma", s)
        object.__setattr__(self, "measure", m)

    @property
    def m(self) -> int:
        return self.edges.shape[0]

    def nx_graph(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        for i, (u, v) in enumerate(self.edges):
            G.add_edge(int(u), int(v), index=i)
        return G


@dataclass
class ModulusSolution:
    value: float
    density: np.ndarray
    exponent: float
    active_constraints: list = field(default_factory=list)
    residual: float = 0.0
    iterations: int = 0
    dual_value: float = 0.0
    family: str = "paths"

    def to_json_dict(self) -> dict:
        return {
            "value": self.value,
            "residual": self.residual,
            "iterations": self.iterations,
            "density": [[int(i), float(r)] for i, r in enumerate(self.density)],
        }


def _expand_parallel(g: WeightedGraph):
    """Subdivide duplicate edges at midpoint vertices (modulus-preserving).

    nx.Graph cannot carry parallel edges; splitting an edge into two halves
    of length sigma/2 and measure m/2 leaves both moduli unchanged (the
    optimal density is equal on the halves by convexity).  Returns
    (expanded graph, half->original index map) or (g, None) when unneeded.
    """
    seen = {}
    dup = []
    for i, (u, v) in enumerate(g.edges):
        key = (min(u, v), max(u, v))
        if key in seen:
            dup.append(i)
        else:
            seen[key] = i
    if not dup:
        return g, None
    edges, sigma, measure, owner = [], [], [], []
    next_vertex = g.n
    for i, (u, v) in enumerate(g.edges):
        if i in set(dup):
            w = next_vertex
            next_vertex += 1
            edges += [[int(u), w], [w, int(v)]]
            sigma += [g.sigma[i] / 2.0] * 2
            measure += [g.measure[i] / 2.0] * 2
            owner += [i, i]
        else:
            edges.append([int(u), int(v)])
            sigma.append(g.sigma[i])
            measure.append(g.measure[i])
            owner.append(i)
    g2 = WeightedGraph(next_vertex, np.array(edges), np.array(sigma), np.array(measure))
    return g2, np.array(owner)


def _fold_solution(sol: ModulusSolution, g: WeightedGraph, owner, p: float) -> ModulusSolution:
    """Map a solution on the expanded graph back to the original edge indexing."""
    rho = np.zeros(g.m)
    counts = np.zeros(g.m)
    np.add.at(rho, owner, sol.density)
    np.add.at(counts, owner, 1.0)
    rho /= counts
    if sol.family == "paths":
        active = [[v for v in nodes if v < g.n] for nodes in sol.active_constraints]
    else:
        active = [sorted({int(owner[i]) for i in cut}) for cut in sol.active_constraints]
    return ModulusSolution(
        value=float(np.dot(g.measure, np.power(rho, p))),
        density=rho,
        exponent=p,
        active_constraints=active,
        residual=sol.residual,
        iterations=sol.iterations,
        dual_value=sol.dual_value,
        family=sol.family,
    )


def _check_terminals(g: WeightedGraph, S, T):
    S = sorted(int(v) for v in S)
    T = sorted(int(v) for v in T)
    if not S or not T:
        raise ValueError("terminal sets must be nonempty")
    if set(S) & set(T):
        raise ValueError("terminal sets must be disjoint")
    return S, T


def _dual_solve(usage: sparse.csr_matrix, weights: np.ndarray, m_e: np.ndarray, p: float, lam0):
    """Maximize the restricted dual over lambda >= 0; returns (lambda, rho, dual value).

    ``usage``: constraints x edges matrix with entries weights[e] for used edges.
    """
    r = p / (p - 1.0)
    usage_t = usage.T.tocsr()

    def neg_g(lam):
        wlam = usage_t @ lam  # = c_e * Lambda_e, with c_e the constraint coefficient
        rho = np.power(np.maximum(wlam, 0.0) / (p * m_e), 1.0 / (p - 1.0))
        val = float(np.sum(lam)) - (p - 1.0) * float(np.dot(m_e, np.power(rho, p)))
        grad = 1.0 - usage @ rho
        return -val, -grad

    res = optimize.minimize(
        neg_g,
        lam0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, None)] * len(lam0),
        options={"maxiter": 2000, "ftol": 1e-18, "gtol": 1e-14},
    )
    lam = res.x
    lam, rho, val = _newton_polish(usage, m_e, p, lam)
    return lam, rho, val


def _newton_polish(usage, m_e, p, lam, iters: int = 40):
    """Newton refinement of the dual on the strictly positive multiplier set.

    Solves ell_gamma(rho(lambda)) = 1 for active constraints; inactive ones
    (lambda ~ 0 with ell >= 1) are held at zero.  Brings the hand-computable
    cases to ~1e-14 and random instances well below the duality budget.
    """
    usage_t = usage.T.tocsr()
    k = usage.shape[0]
    exp1 = 1.0 / (p - 1.0)

    def rho_of(lam):
        wlam = usage_t @ lam
        return np.power(np.maximum(wlam, 0.0) / (p * m_e), exp1)

    def merit(lam):
        ell = usage @ rho_of(lam)
        active = (lam > 1e-12) | (ell < 1.0 - 1e-12)
        r = 1.0 - ell
        return r, active, (float(np.max(np.abs(r[active]))) if np.any(active) else 0.0)

    for _ in range(iters):
        r, active, err = merit(lam)
        if err < 1e-14:
            break
        wlam = np.maximum(usage_t @ lam, 1e-300)
        # d rho_e / d lambda_mu = exp1 * rho_e / wlam_e * c_e [e in mu]
        drho = exp1 * rho_of(lam) / wlam
        A = usage.multiply(drho[None, :]) @ usage.T  # Jacobian of ell wrt lambda
        A = np.asarray(A.todense())
        idx = np.nonzero(active)[0]
        try:
            step = np.linalg.solve(A[np.ix_(idx, idx)] + 1e-300 * np.eye(len(idx)), r[idx])
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        # damped update: accept the first halving that reduces the residual
        improved = False
        t = 1.0
        for _bt in range(30):
            new = lam.copy()
            new[idx] = np.maximum(lam[idx] + t * step, 0.0)
            if merit(new)[2] < err:
                lam = new
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    rho = rho_of(lam)
    val = float(np.sum(lam)) - (p - 1.0) * float(np.dot(m_e, np.power(rho, p)))
    return lam, rho, val


def _shortest_path_edges(G, g: WeightedGraph, lengths: np.ndarray, S, T):
    """Min-length S-T path under per-edge lengths; returns (edge indices, vertices)."""
    H = G.copy()
    s_star, t_star = g.n, g.n + 1
    for v in S:
        H.add_edge(s_star, v, index=-1)
    for v in T:
        H.add_edge(t_star, v, index=-1)

    def w(u, v, d):
        i = d["index"]
        return 0.0 if i < 0 else lengths[i]

    try:
        nodes = nx.dijkstra_path(H, s_star, t_star, weight=w)
    except nx.NetworkXNoPath:
        raise ValueError("terminal sets are not connected") from None
    nodes = nodes[1:-1]
    idx = [G.edges[nodes[i], nodes[i + 1]]["index"] for i in range(len(nodes) - 1)]
    return idx, nodes


def _min_cut_edges(G, g: WeightedGraph, caps: np.ndarray, S, T):
    """Min-capacity S-T cut; returns (edge indices, cut capacity)."""
    H = nx.Graph()
    H.add_nodes_from(range(g.n))
    for u, v, d in G.edges(data=True):
        H.add_edge(u, v, capacity=float(caps[d["index"]]), index=d["index"])
    s_star, t_star = g.n, g.n + 1
    big = float(np.sum(caps)) + 1.0
    for v in S:
        H.add_edge(s_star, v, capacity=big, index=-1)
    for v in T:
        H.add_edge(t_star, v, capacity=big, index=-1)
    cut_value, (side_s, side_t) = nx.minimum_cut(H, s_star, t_star)
    side_s = set(side_s)
    idx = sorted(
        d["index"]
        for u, v, d in G.edges(data=True)
        if (u in side_s) != (v in side_s)
    )
    return idx, cut_value


def _solve_family(g, S, T, p, tol, oracle, weights, family, max_rounds):
    """Shared constraint-generation loop for path and cut families."""
    if p <= 1:
        raise ValueError("exponent must exceed 1")
    S, T = _check_terminals(g, S, T)
    G = g.nx_graph()
    m_e = g.measure
    rows: list[list[int]] = []
    members: list[list[int]] = []
    lam = np.zeros(0)
    rho = np.zeros(g.m)
    dual = 0.0
    residual = math.inf
    for rounds in range(1, max_rounds + 1):
        idx, detail = oracle(G, g, rho, S, T)
        length = float(np.sum(weights[idx] * rho[idx])) if idx else 0.0
        residual = 1.0 - length
        if residual <= tol and rounds > 1:
            break
        if sorted(idx) in rows:
            # oracle re-found an existing constraint: the dual solve is at its
            # numerical floor, nothing further to generate
            break
        rows.append(sorted(idx))
        members.append(detail)
        usage = sparse.csr_matrix(
            (
                np.concatenate([weights[r] for r in rows]),
                (
                    np.concatenate([np.full(len(r), i) for i, r in enumerate(rows)]),
                    np.concatenate([np.asarray(r) for r in rows]),
                ),
            ),
            shape=(len(rows), g.m),
        )
        lam = np.concatenate([lam, [max(1.0, float(np.max(lam)) if lam.size else 1.0)]])
        lam, rho, dual = _dual_solve(usage, weights, m_e, p, lam)
    else:
        raise RuntimeError(f"constraint generation did not converge in {max_rounds} rounds")

    # rescale to exact admissibility for the generated family; the oracle
    # guarantees no other constraint is shorter, so the density is feasible
    scale = 1.0 / max(1.0 - residual, 1e-300)
    rho_f = rho * scale
    value = float(np.dot(m_e, np.power(rho_f, p)))
    active = [members[i] for i in range(len(rows)) if lam[i] > 1e-12 * max(1.0, float(np.max(lam)))]
    return ModulusSolution(
        value=value,
        density=rho_f,
        exponent=p,
        active_constraints=active,
        residual=max(residual, 0.0),
        iterations=rounds,
        dual_value=dual,
        family=family,
    )


def connecting_modulus(g: WeightedGraph, S, T, p: float = 3.0, tol: float = 1e-6,
                       max_rounds: int = 500) -> ModulusSolution:
    """p-modulus of the family of S-T connecting paths."""

    def oracle(G, g_, rho, S_, T_):
        lengths = g_.sigma * rho + 1e-15 * g_.sigma  # tiny term: deterministic ties
        idx, nodes = _shortest_path_edges(G, g_, lengths, S_, T_)
        return idx, nodes

    g2, owner = _expand_parallel(g)
    sol = _solve_family(g2, S, T, p, tol, oracle, g2.sigma, "paths", max_rounds)
    return _fold_solution(sol, g, owner, p) if owner is not None else sol


def union_connecting_modulus(g: WeightedGraph, pairs, p: float = 3.0,
                             tol: float = 1e-6, max_rounds: int = 500) -> ModulusSolution:
    """p-modulus of the union of connecting families over (S, T) terminal pairs.

    A density is admissible for the union iff it is admissible for every
    member family, so the constraint oracle returns the globally shortest
    path over all pairs.  Used for the outer-measure axioms: monotonicity
    Mod(F1) <= Mod(F1 u F2) and subadditivity Mod(F1 u F2) <= Mod(F1) + Mod(F2).
    """
    pairs = [( _check_terminals(g, S, T)) for S, T in pairs]
    if not pairs:
        raise ValueError("need at least one terminal pair")

    def oracle(G, g_, rho, S_, T_):
        lengths = g_.sigma * rho + 1e-15 * g_.sigma
        best = None
        for S, T in pairs:
            idx, nodes = _shortest_path_edges(G, g_, lengths, S, T)
            length = float(np.sum(lengths[idx]))
            if best is None or length < best[0]:
                best = (length, idx, nodes)
        return best[1], best[2]

    g2, owner = _expand_parallel(g)
    sol = _solve_family(g2, pairs[0][0], pairs[0][1], p, tol, oracle,
                        g2.sigma, "paths", max_rounds)
    return _fold_solution(sol, g, owner, p) if owner is not None else sol


def cut_modulus(g: WeightedGraph, S, T, q: float = 1.5, tol: float = 1e-6,
                max_rounds: int = 500) -> ModulusSolution:
    """q-modulus of the family of S-T separating edge cuts (transverse weights m/sigma)."""
    g2, owner = _expand_parallel(g)
    a_e = g2.measure / g2.sigma

    def oracle(G, g_, rho, S_, T_):
        caps = a_e * rho + 1e-15 * a_e
        idx, _ = _min_cut_edges(G, g_, caps, S_, T_)
        if not idx:
            raise ValueError("terminal sets are not connected")
        return idx, idx

    sol = _solve_family(g2, S, T, q, tol, oracle, a_e, "cuts", max_rounds)
    return _fold_solution(sol, g, owner, q) if owner is not None else sol


def duality_product(mp: ModulusSolution, mq: ModulusSolution) -> float:
    """mp.value^(1/p) * mq.value^(1/q); equals 1 for conjugate exponents."""
    p, q = mp.exponent, mq.exponent
    if abs(1.0 / p + 1.0 / q - 1.0) > 1e-12:
        raise ValueError(f"exponents {p}, {q} are not conjugate")
    return mp.value ** (1.0 / p) * mq.value ** (1.0 / q)


def build_grid_graph(box, h: float):
    """6-neighbor lattice graph on an axis-aligned box.

    Edge lengths are sigma = h and energy measures m = h^3, so that
    sum_e m_e rho_e^p approximates the continuum energy integral and the cut
    weight m/sigma = h^2 is the transverse face area; this normalization is
    unit-tested against the round-ring capacity oracle.

    Returns (WeightedGraph, coords) with coords an (n, 3) vertex table.
    """
    lo, hi = (np.asarray(v, dtype=float) for v in box)
    if h <= 0:
        raise ValueError("h must be positive")
    if np.any(hi <= lo):
        raise ValueError("degenerate box")
    dims = np.round((hi - lo) / h).astype(int) + 1
    if np.any(dims < 2):
        raise ValueError("box too small for spacing h")
    nx_, ny, nz = (int(d) for d in dims)
    ii, jj, kk = np.meshgrid(np.arange(nx_), np.arange(ny), np.arange(nz), indexing="ij")
    coords = lo + h * np.column_stack([ii.ravel(), jj.ravel(), kk.ravel()])
    vid = np.arange(nx_ * ny * nz).reshape(nx_, ny, nz)
    e = []
    for axis, stop in ((0, nx_), (1, ny), (2, nz)):
        sl_a = [slice(None)] * 3
        sl_b = [slice(None)] * 3
        sl_a[axis] = slice(0, stop - 1)
        sl_b[axis] = slice(1, stop)
        e.append(np.column_stack([vid[tuple(sl_a)].ravel(), vid[tuple(sl_b)].ravel()]))
    edges = np.vstack(e)
    m = edges.shape[0]
    g = WeightedGraph(nx_ * ny * nz, edges, np.full(m, h), np.full(m, h**3))
    return g, coords

"""Numerical optimization of the primal problem and its reduced dual, plus
exhaustive brute-force oracles for desk-scale verification.

The primal is minimized over the decision vector (x_0, x_1, u_0, ...,
u_{N-2}) in Q0 x Q1 x U^{N-1}; states are always reconstructed through the
recursion, never optimized independently.  The dual is maximized over the
2n-dimensional seed (x*_{N-1}, x*_N): every other dual variable follows
from the backward adjoint recursion, because the M-function is -inf off
that subspace and penalizing it would be ill-posed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _backend
from .convex_kernel import (
    Affine,
    CoordinateSelect,
    ExtReal,
    HalfSquaredNorm,
    MINUS_INF,
    NormOne,
    PLUS_INF,
    Quadratic,
    conjugate,
    conjugate_batch,
    support_batch,
)
from .inclusion_model import (
    DiscreteProblem,
    SemilinearMap,
    TabulatedMap,
    Trajectory,
    simulate,
)

__all__ = [
    "GRID_BUDGET",
    "BudgetError",
    "SolveOptions",
    "PrimalSolution",
    "DualSolution",
    "solve_primal",
    "brute_primal",
    "adjoint_recursion",
    "solve_dual",
    "brute_dual",
    "dual_sequences_from_seed",
    "reduced_dual_objective",
]

GRID_BUDGET = 10**7


class BudgetError(RuntimeError):
    """Raised when an oracle grid would exceed the point budget."""


@dataclass(frozen=True)
class SolveOptions:
    """Iteration and oracle controls shared by solvers and oracles."""

    max_iter: int = 2000
    step0: float = 1.0
    tol: float = 1e-9
    restarts: int = 5
    rng_seed: int = 0
    grid_resolution: int = 41
    seed_radius: float = 3.0
    polish: bool = True

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("SolveOptions: max_iter must be >= 1")
        if self.step0 <= 0:
            raise ValueError("SolveOptions: step0 must be positive")
        if self.tol <= 0:
            raise ValueError("SolveOptions: tol must be positive")


@dataclass(frozen=True)
class PrimalSolution:
    trajectory: Optional[Trajectory]
    value: ExtReal
    iterations: int
    converged: bool
    feasible: bool = True


@dataclass(frozen=True)
class DualSolution:
    xstar: tuple
    mustar: tuple
    value: ExtReal
    converged: bool


# ---------------------------------------------------------------------------
# Decision-vector geometry for the semilinear primal
# ---------------------------------------------------------------------------


class _DecisionSpace:
    """Linear map from (x0, x1, u_0..u_{N-2}) to the terminal pair."""

    def __init__(self, p: DiscreteProblem):
        F: SemilinearMap = p.map
        n, r, N = F.n, F.r, p.N
        D = 2 * n + (N - 1) * r
        X = [np.zeros((n, D)) for _ in range(N + 1)]
        X[0][:, :n] = np.eye(n)
        X[1][:, n : 2 * n] = np.eye(n)
        for t in range(N - 1):
            ucols = slice(2 * n + t * r, 2 * n + (t + 1) * r)
            X[t + 2] = F.A0 @ X[t] + F.A1 @ X[t + 1]
            X[t + 2][:, ucols] += F.B
        self.W = np.vstack([X[N - 1], X[N]])  # (2n, D)
        self.n, self.r, self.N, self.D = n, r, N, D
        self.problem = p
        self.sets = [p.Q0, p.Q1] + [F.U] * (N - 1)
        self.blocks = [slice(0, n), slice(n, 2 * n)] + [
            slice(2 * n + t * r, 2 * n + (t + 1) * r) for t in range(N - 1)
        ]

    def project(self, d: np.ndarray) -> np.ndarray:
        out = d.copy()
        for S, blk in zip(self.sets, self.blocks):
            out[blk] = S.project(d[blk])[0]
        return out

    def random_point(self, rng: np.random.Generator, radius: float) -> np.ndarray:
        d = rng.uniform(-radius, radius, self.D)
        return self.project(d)

    def value(self, d: np.ndarray) -> float:
        return float(self.problem.phi(self.W @ d))

    def subgrad(self, d: np.ndarray) -> np.ndarray:
        return self.W.T @ self.problem.phi.subgradient(self.W @ d)

    def to_trajectory(self, d: np.ndarray) -> Trajectory:
        n, r, N = self.n, self.r, self.N
        controls = [d[2 * n + t * r : 2 * n + (t + 1) * r] for t in range(N - 1)]
        return simulate(self.problem.map, d[:n], d[n : 2 * n], controls, tol=1e-6)


def _subgradient_phase(space, d, opts):
    best_d = d.copy()
    best_v = space.value(d)
    iters = 0
    for k in range(1, opts.max_iter + 1):
        g = space.subgrad(d)
        iters += 1
        gn = float(np.linalg.norm(g))
        if gn <= opts.tol:
            break
        d = space.project(d - (opts.step0 / math.sqrt(k)) * g)
        v = space.value(d)
        if v < best_v:
            best_v, best_d = v, d.copy()
    return best_d, best_v, iters


def _decay_rounds(space, d, v, opts, rounds=30, inner=150, gamma=0.6):
    """Constant-step rounds with geometrically shrinking steps."""
    best_d, best_v = d.copy(), v
    iters = 0
    improved_last = np.inf
    for j in range(rounds):
        step = opts.step0 * gamma**j
        cur = best_d.copy()
        round_start = best_v
        for _ in range(inner):
            g = space.subgrad(cur)
            iters += 1
            gn = float(np.linalg.norm(g))
            if gn <= opts.tol:
                break
            cur = space.project(cur - step * g / gn)
            v = space.value(cur)
            if v < best_v:
                best_v, best_d = v, cur.copy()
        improved_last = round_start - best_v
    converged = improved_last <= opts.tol * (1.0 + abs(best_v))
    return best_d, best_v, iters, converged


def _projected_gradient_phase(space, d, opts, P, c):
    """1/L projected gradient for smooth quadratic terminal costs."""
    W = space.W
    H = W.T @ (P @ W)
    L = float(np.max(np.linalg.eigvalsh(0.5 * (H + H.T)))) if H.size else 0.0
    if L <= 1e-12:
        return d, space.value(d), 0, False
    lin = W.T @ c
    cur = d.copy()
    iters = 0
    converged = False
    for _ in range(20000):
        g = H @ cur + lin
        nxt = space.project(cur - g / L)
        iters += 1
        if float(np.linalg.norm(nxt - cur)) <= opts.tol * (1.0 + float(np.linalg.norm(cur))):
            cur = nxt
            converged = True
            break
        cur = nxt
    return cur, space.value(cur), iters, converged


def _corner_point(space, cvec: np.ndarray) -> np.ndarray:
    """Exact minimizer of a linear objective over the product of sets."""
    d = np.zeros(space.D)
    for S, blk in zip(space.sets, space.blocks):
        d[blk] = S.support_point(-cvec[blk])
    return d


def solve_primal(p: DiscreteProblem, opts: SolveOptions = SolveOptions()) -> PrimalSolution:
    """Minimize phi(x_{N-1}, x_N) over feasible trajectories.

    Projected subgradient over the decision vector with best-iterate
    tracking and restarts; a deterministic polish follows (exact corner
    step for affine costs, 1/L projected gradient for smooth quadratics,
    shrinking-step rounds otherwise).  Tabulated maps go to the
    brute-force oracle.
    """
    if isinstance(p.map, TabulatedMap):
        return brute_primal(p, opts)
    space = _DecisionSpace(p)
    rng = np.random.default_rng(opts.rng_seed)
    phi = p.phi

    d0 = space.project(np.zeros(space.D))
    best_d, best_v, iters = _subgradient_phase(space, d0, opts)
    for _ in range(opts.restarts):
        d_r, v_r, it_r = _subgradient_phase(space, space.random_point(rng, opts.seed_radius), opts)
        iters += it_r
        if v_r < best_v:
            best_d, best_v = d_r, v_r

    converged = False
    if opts.polish:
        if isinstance(phi, (Affine, CoordinateSelect)):
            c = phi.c if isinstance(phi, Affine) else phi.weights
            d_c = _corner_point(space, space.W.T @ c)
            v_c = space.value(d_c)
            if v_c <= best_v:
                best_d, best_v = d_c, v_c
            converged = True
        elif isinstance(phi, (Quadratic, HalfSquaredNorm)):
            if isinstance(phi, Quadratic):
                P, c = phi.P, phi.c
            else:
                P, c = np.eye(phi.dim), np.zeros(phi.dim)
            d_g, v_g, it_g, ok = _projected_gradient_phase(space, best_d, opts, P, c)
            iters += it_g
            if v_g <= best_v:
                best_d, best_v = d_g, v_g
            converged = ok
        else:
            best_d, best_v, it_d, converged = _decay_rounds(space, best_d, best_v, opts)
            iters += it_d

    traj = space.to_trajectory(best_d)
    value = phi(np.concatenate([traj.states[p.N - 1], traj.states[p.N]]))
    return PrimalSolution(trajectory=traj, value=value, iterations=iters, converged=converged)


# ---------------------------------------------------------------------------
# Brute-force primal oracle
# ---------------------------------------------------------------------------


def brute_primal(p: DiscreteProblem, opts: SolveOptions = SolveOptions()) -> PrimalSolution:
    """Exhaustive enumeration at grid_resolution (semilinear) or over all
    triple chains (tabulated).  Guarded by the grid budget."""
    if isinstance(p.map, TabulatedMap):
        return _brute_tabulated(p)
    F: SemilinearMap = p.map
    res = opts.grid_resolution
    sizes = (p.Q0.grid_size(res), p.Q1.grid_size(res), F.U.grid_size(res))
    total_bound = sizes[0] * sizes[1] * sizes[2] ** (p.N - 1)
    if total_bound > GRID_BUDGET:
        raise BudgetError(
            f"grid budget exceeded: about {total_bound:.3g} combos > {GRID_BUDGET:.3g}; "
            "reduce grid_resolution or the horizon"
        )
    G0, G1, GU = p.Q0.grid(res), p.Q1.grid(res), F.U.grid(res)
    val, idx = _backend.enumerate_primal(G0, G1, GU, F.A0, F.A1, F.B, p.N, p.phi)
    dims = (len(G0), len(G1)) + (len(GU),) * (p.N - 1)
    parts = np.unravel_index(idx, dims)
    controls = [GU[parts[t + 2]] for t in range(p.N - 1)]
    traj = simulate(F, G0[parts[0]], G1[parts[1]], controls)
    value = p.phi(np.concatenate([traj.states[p.N - 1], traj.states[p.N]]))
    total = int(np.prod(dims))
    return PrimalSolution(trajectory=traj, value=value, iterations=total, converged=True)


def _brute_tabulated(p: DiscreteProblem) -> PrimalSolution:
    """Dynamic program over pair nodes (x_t, x_{t+1}) linked by triples."""
    T: TabulatedMap = p.map
    m = len(T)
    if m * m * p.N > GRID_BUDGET:
        raise BudgetError("grid budget exceeded for tabulated chains")
    tol = 1e-9
    # edge i -> j when (y_i, z_i) matches (x_j, y_j)
    succ = [[] for _ in range(m)]
    for i in range(m):
        dy = np.max(np.abs(T.xs - T.ys[i]), axis=1)
        dz = np.max(np.abs(T.ys - T.zs[i]), axis=1)
        succ[i] = list(np.where((dy <= tol) & (dz <= tol))[0])
    start = [
        i
        for i in range(m)
        if p.Q0.contains(T.xs[i], tol) and p.Q1.contains(T.ys[i], tol)
    ]
    # reachable triple indices after t steps, with back pointers
    layers = [ {i: None for i in start} ]
    for _ in range(p.N - 2):
        nxt = {}
        for i in layers[-1]:
            for j in succ[i]:
                nxt.setdefault(j, i)
        layers.append(nxt)
    best_val = np.inf
    best_last = None
    for i in layers[-1]:
        v = float(p.phi(np.concatenate([T.ys[i], T.zs[i]])))
        if v < best_val:
            best_val, best_last = v, i
    if best_last is None:
        return PrimalSolution(trajectory=None, value=PLUS_INF, iterations=0, converged=False, feasible=False)
    # walk back pointers to the initial triple
    idxs = [best_last]
    for depth in range(len(layers) - 1, 0, -1):
        idxs.append(layers[depth][idxs[-1]])
    idxs.reverse()
    states = [T.xs[idxs[0]], T.ys[idxs[0]]] + [T.zs[i] for i in idxs]
    traj = Trajectory(states=tuple(states), controls=None)
    return PrimalSolution(trajectory=traj, value=ExtReal(best_val), iterations=m, converged=True)


# ---------------------------------------------------------------------------
# Dual machinery
# ---------------------------------------------------------------------------


def adjoint_recursion(A0, A1, xstar_Nm1, xstar_N, N: int) -> list[np.ndarray]:
    """Backward recursion x*_t = A0^T x*_{t+2} + A1^T x*_{t+1} from the seed
    pair (x*_{N-1}, x*_N); returns the full sequence x*_0 .. x*_N."""
    if N < 2:
        raise ValueError("adjoint_recursion: N must be >= 2")
    A0 = np.asarray(A0, dtype=float)
    A1 = np.asarray(A1, dtype=float)
    out = [None] * (N + 1)
    out[N] = np.asarray(xstar_N, dtype=float).reshape(-1)
    out[N - 1] = np.asarray(xstar_Nm1, dtype=float).reshape(-1)
    for t in range(N - 2, -1, -1):
        out[t] = A0.T @ out[t + 2] + A1.T @ out[t + 1]
    return out


def dual_sequences_from_seed(p: DiscreteProblem, seed) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Adjoint-subspace dual sequences from the seed (x*_{N-1}, x*_N):
    mu*_{t+1} = A1^T x*_{t+2} and mu*_0 = x*_0 - A0^T x*_2."""
    F: SemilinearMap = p.map
    n, N = F.n, p.N
    s = np.asarray(seed, dtype=float).reshape(-1)
    if s.shape[0] != 2 * n:
        raise ValueError(f"seed must have dimension {2 * n}")
    xs = adjoint_recursion(F.A0, F.A1, s[:n], s[n:], N)
    mus = [xs[0] - F.A0.T @ xs[2]]
    for t in range(1, N):
        mus.append(F.A1.T @ xs[t + 1])
    return xs, mus


class _SeedSpace:
    """Reduced dual objective over the terminal conjugate argument q.

    The seed (x*_{N-1}, x*_N) and q = (mu*_{N-1} - x*_{N-1}, -x*_N) are
    linked by an invertible linear map, so the ascent runs in q-space where
    the domain of phi* is easy to project onto.
    """

    def __init__(self, p: DiscreteProblem):
        F: SemilinearMap = p.map
        n, N = F.n, p.N
        R = [None] * (N + 1)
        R[N - 1] = np.hstack([np.eye(n), np.zeros((n, n))])
        R[N] = np.hstack([np.zeros((n, n)), np.eye(n)])
        for t in range(N - 2, -1, -1):
            R[t] = F.A0.T @ R[t + 2] + F.A1.T @ R[t + 1]
        # seed from q: x*_N = -q2, x*_{N-1} = A1^T x*_N - q1
        Ls = np.block([
            [-np.eye(n), -F.A1.T],
            [np.zeros((n, n)), -np.eye(n)],
        ])
        self.RL = [Ri @ Ls for Ri in R]
        self.R = R
        self.p = p
        self.F = F
        self.n, self.N = n, N
        self.phi = p.phi
        self._setup_domain()

    def _setup_domain(self):
        phi = self.phi
        self.pinned = None
        self.kind = "free"
        if isinstance(phi, (Affine, CoordinateSelect)):
            c = phi.c if isinstance(phi, Affine) else phi.weights
            self.pinned = c.copy()
            self.kind = "point"
        elif isinstance(phi, NormOne):
            self.kind = "box"
        elif isinstance(phi, HalfSquaredNorm):
            self.kind = "free"
        elif isinstance(phi, Quadratic):
            if phi._definite:
                self.kind = "free"
            else:
                vals, vecs = np.linalg.eigh(phi.P)
                keep = vals > 1e-10 * max(1.0, float(vals[-1]))
                self.kind = "subspace"
                self._range = vecs[:, keep]
                self._inv_vals = 1.0 / vals[keep]
        else:
            raise ValueError(
                f"solve_dual: terminal cost {type(phi).__name__} has no supported conjugate"
            )

    def seed_from_q(self, q: np.ndarray) -> np.ndarray:
        n = self.n
        xN = -q[n:]
        xNm1 = self.F.A1.T @ xN - q[:n]
        return np.concatenate([xNm1, xN])

    def project_q(self, q: np.ndarray) -> np.ndarray:
        phi = self.phi
        if self.kind == "point":
            return self.pinned.copy()
        if self.kind == "box":
            return np.clip(q, -1.0, 1.0)
        if self.kind == "subspace":
            w = q - phi.c
            return phi.c + self._range @ (self._range.T @ w)
        return q

    def start_q(self) -> np.ndarray:
        if self.kind == "point":
            return self.pinned.copy()
        if isinstance(self.phi, Quadratic):
            return self.phi.c.copy()
        return np.zeros(2 * self.n)

    def fstar(self, q: np.ndarray) -> ExtReal:
        return self.phi.conjugate(q)

    def fstar_grad(self, q: np.ndarray) -> np.ndarray:
        phi = self.phi
        if isinstance(phi, HalfSquaredNorm):
            return q.copy()
        if isinstance(phi, Quadratic):
            w = q - phi.c
            if phi._definite:
                return np.linalg.solve(phi.P, w)
            return self._range @ (self._inv_vals * (self._range.T @ w))
        return np.zeros_like(q)  # indicator-type conjugates are flat on their domain

    def value(self, q: np.ndarray) -> ExtReal:
        fs = self.fstar(q)
        if not fs.is_finite:
            return MINUS_INF
        F = self.F
        total = -float(fs)
        for t in range(self.N - 1):
            total -= float(F.U.support(F.B.T @ (self.RL[t + 2] @ q)))
        total -= float(self.p.Q0.support(F.A0.T @ (self.RL[2] @ q)))
        total -= float(self.p.Q1.support(self.RL[1] @ q))
        return ExtReal(total)

    def supergrad(self, q: np.ndarray) -> np.ndarray:
        F = self.F
        g = -self.fstar_grad(q)
        for t in range(self.N - 1):
            u = F.U.support_point(F.B.T @ (self.RL[t + 2] @ q))
            g -= self.RL[t + 2].T @ (F.B @ u)
        p0 = self.p.Q0.support_point(F.A0.T @ (self.RL[2] @ q))
        g -= self.RL[2].T @ (F.A0 @ p0)
        p1 = self.p.Q1.support_point(self.RL[1] @ q)
        g -= self.RL[1].T @ p1
        return g


def reduced_dual_objective(p: DiscreteProblem, seed) -> ExtReal:
    """Dual objective at the adjoint-subspace point generated by the seed."""
    if not p.semilinear:
        raise ValueError("reduced dual requires a semilinear map")
    F: SemilinearMap = p.map
    n = F.n
    s = np.asarray(seed, dtype=float).reshape(-1)
    xs, mus = dual_sequences_from_seed(p, s)
    q = np.concatenate([mus[p.N - 1] - xs[p.N - 1], -xs[p.N]])
    fs = conjugate(p.phi, q)
    if not fs.is_finite:
        return MINUS_INF
    total = -float(fs)
    for t in range(p.N - 1):
        total -= float(F.U.support(F.B.T @ xs[t + 2]))
    total -= float(p.Q0.support(F.A0.T @ xs[2]))
    total -= float(p.Q1.support(xs[1]))
    return ExtReal(total)


def solve_dual(p: DiscreteProblem, opts: SolveOptions = SolveOptions()) -> DualSolution:
    """Maximize the reduced concave dual objective over the seed pair.

    Point-domain conjugates (affine costs) pin the seed outright; box and
    subspace domains are handled by projection.  Otherwise: projected
    supergradient ascent with restarts, then shrinking-step rounds.
    """
    if not p.semilinear:
        raise ValueError("solve_dual requires a semilinear map")
    space = _SeedSpace(p)
    rng = np.random.default_rng(opts.rng_seed)

    if space.kind == "point":
        q = space.start_q()
        best_q, best_v = q, space.value(q)
        converged = True
    else:
        def ascend(q0):
            q = space.project_q(q0)
            bq, bv = q.copy(), space.value(q)
            for k in range(1, opts.max_iter + 1):
                g = space.supergrad(q)
                gn = float(np.linalg.norm(g))
                if gn <= opts.tol:
                    break
                q = space.project_q(q + (opts.step0 / math.sqrt(k)) * g)
                v = space.value(q)
                if v > bv:
                    bv, bq = v, q.copy()
            return bq, bv

        best_q, best_v = ascend(space.start_q())
        for _ in range(opts.restarts):
            q0 = space.start_q() + rng.normal(0.0, opts.seed_radius, 2 * space.n)
            cq, cv = ascend(q0)
            if cv > best_v:
                best_q, best_v = cq, cv

        improved_last = np.inf
        for j in range(35):
            step = opts.step0 * 0.65**j
            cur = best_q.copy()
            round_start = best_v
            for _ in range(160):
                g = space.supergrad(cur)
                gn = float(np.linalg.norm(g))
                if gn <= opts.tol:
                    break
                cur = space.project_q(cur + step * g / gn)
                v = space.value(cur)
                if v > best_v:
                    best_v, best_q = v, cur.copy()
            improved_last = best_v - round_start
        converged = improved_last <= opts.tol * (1.0 + abs(float(best_v)))

    seed = space.seed_from_q(best_q)
    xs, mus = dual_sequences_from_seed(p, seed)
    value = reduced_dual_objective(p, seed)
    return DualSolution(
        xstar=tuple(xs), mustar=tuple(mus), value=value, converged=bool(converged)
    )


def brute_dual(
    p: DiscreteProblem, opts: SolveOptions = SolveOptions(), refine: bool = True
) -> DualSolution:
    """Grid search over seeds in the box [-seed_radius, seed_radius]^{2n},
    optionally refined once around the best cell."""
    if not p.semilinear:
        raise ValueError("brute_dual requires a semilinear map")
    F: SemilinearMap = p.map
    n = F.n
    if n > 2:
        raise BudgetError("brute_dual: seed grid limited to n <= 2")
    res = opts.grid_resolution
    if res ** (2 * n) > GRID_BUDGET:
        raise BudgetError("brute_dual: seed grid exceeds the point budget")

    R = [None] * (p.N + 1)
    R[p.N - 1] = np.hstack([np.eye(n), np.zeros((n, n))])
    R[p.N] = np.hstack([np.zeros((n, n)), np.eye(n)])
    for t in range(p.N - 2, -1, -1):
        R[t] = F.A0.T @ R[t + 2] + F.A1.T @ R[t + 1]

    def batch_eval(S: np.ndarray) -> np.ndarray:
        X = {t: S @ R[t].T for t in range(p.N + 1)}
        q = np.hstack([X[p.N] @ F.A1 - X[p.N - 1], -X[p.N]])
        vals = -conjugate_batch(p.phi, q)
        for t in range(p.N - 1):
            vals -= support_batch(F.U, X[t + 2] @ F.B)
        vals -= support_batch(p.Q0, X[2] @ F.A0)
        vals -= support_batch(p.Q1, X[1])
        return vals

    def grid_stage(center: np.ndarray, half: float) -> tuple[np.ndarray, float]:
        axes = [np.linspace(c - half, c + half, res) for c in center]
        mesh = np.meshgrid(*axes, indexing="ij")
        S = np.stack([m.reshape(-1) for m in mesh], axis=1)
        vals = batch_eval(S)
        k = int(np.argmax(vals))
        return S[k], float(vals[k])

    center = np.zeros(2 * n)
    best_seed, best_v = grid_stage(center, opts.seed_radius)
    if refine and math.isfinite(best_v) and res > 1:
        cell = opts.seed_radius * 2.0 / (res - 1)
        seed2, v2 = grid_stage(best_seed, cell)
        if v2 > best_v:
            best_seed, best_v = seed2, v2

    if not math.isfinite(best_v):
        zs, zm = dual_sequences_from_seed(p, np.zeros(2 * n))
        return DualSolution(xstar=tuple(zs), mustar=tuple(zm), value=MINUS_INF, converged=False)
    xs, mus = dual_sequences_from_seed(p, best_seed)
    value = reduced_dual_objective(p, best_seed)
    return DualSolution(xstar=tuple(xs), mustar=tuple(mus), value=value, converged=True)

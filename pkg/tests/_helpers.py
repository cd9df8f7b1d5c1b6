"""Shared oracles and random-instance factories for the test suite.

Everything here recomputes target quantities by a route independent of
the library code under test: dense grids for conjugates and supports,
closed forms where they exist, and plain itertools enumeration for chain
problems.
"""

import itertools

import numpy as np

from incdual import (
    Ball,
    Box,
    DiscreteProblem,
    DualVariables,
    Polytope,
    SemilinearMap,
    Singleton,
    TabulatedMap,
    Trajectory,
    dual_sequences_from_seed,
    simulate,
)


def grid_conjugate(f, p, lo, hi, count):
    """max over a dense grid of <x, p> - f(x); lower bound of f*(p)."""
    p = np.atleast_1d(np.asarray(p, dtype=float))
    axes = [np.linspace(lo, hi, count)] * len(p)
    mesh = np.meshgrid(*axes, indexing="ij")
    X = np.stack([m.reshape(-1) for m in mesh], axis=1)
    best = -np.inf
    for x in X:
        fx = f(x)
        if fx.is_finite:
            best = max(best, float(x @ p) - float(fx))
    return best


def grid_support(points, d):
    """max over sampled set points of <x, d>."""
    return float(np.max(np.asarray(points) @ np.asarray(d, dtype=float)))


def huber(u, rho=1.0):
    """Closed form of the infimal convolution of |.| and (1/2)|.|^2 / rho."""
    a = abs(float(u))
    if a <= rho:
        return 0.5 * a * a / rho
    return a - 0.5 * rho


def barycentric_projection(vertices, x, resolution=60):
    """Distance from x to the hull of `vertices` by barycentric grid search."""
    V = np.asarray(vertices, dtype=float)
    k = V.shape[0]
    best = np.inf
    arg = None
    for combo in itertools.product(range(resolution + 1), repeat=k - 1):
        s = sum(combo)
        if s > resolution:
            continue
        w = np.array(list(combo) + [resolution - s], dtype=float) / resolution
        pt = w @ V
        d = float(np.linalg.norm(pt - np.asarray(x, dtype=float)))
        if d < best:
            best, arg = d, pt
    return arg, best


def m_oracle_box(F, xs, ys, zs, half, count=31):
    """Grid min of <x, x*> + <y, y*> - H_F(x, y, z*) over the box [-half, half]^2n.

    On the adjoint subspace the integrand is flat in (x, y), so any box
    gives the exact M-function value; off it the min decreases without
    bound as the box grows.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    zs = np.atleast_1d(np.asarray(zs, dtype=float))
    n = F.n
    w = float(F.U.support(F.B.T @ zs))
    axes = [np.linspace(-half, half, count)] * (2 * n)
    mesh = np.meshgrid(*axes, indexing="ij")
    P = np.stack([m.reshape(-1) for m in mesh], axis=1)
    X, Y = P[:, :n], P[:, n:]
    drift = (X @ F.A0.T + Y @ F.A1.T) @ zs
    vals = X @ xs + Y @ ys - drift - w
    return float(np.min(vals))


def enumerate_chains(triples, Q0, Q1, phi, N):
    """All feasible index chains of a tabulated problem by brute pairing.

    Returns the minimum terminal cost (or +inf) computed with plain loops,
    independent of the layered search in the solver.
    """
    xs = [np.asarray(t[0], dtype=float).reshape(-1) for t in triples]
    ys = [np.asarray(t[1], dtype=float).reshape(-1) for t in triples]
    zs = [np.asarray(t[2], dtype=float).reshape(-1) for t in triples]
    m = len(triples)
    tol = 1e-9
    best = np.inf
    for chain in itertools.product(range(m), repeat=N - 1):
        ok = Q0.contains(xs[chain[0]], tol) and Q1.contains(ys[chain[0]], tol)
        if not ok:
            continue
        for a, b in zip(chain, chain[1:]):
            if np.linalg.norm(xs[b] - ys[a]) > tol or np.linalg.norm(ys[b] - zs[a]) > tol:
                ok = False
                break
        if not ok:
            continue
        last = chain[-1]
        val = phi(np.concatenate([ys[last], zs[last]]))
        if val.is_finite:
            best = min(best, float(val))
    return best


def rand_semilinear(rng, n=1, r=1, scale=1.0):
    A0 = rng.uniform(-scale, scale, size=(n, n))
    A1 = rng.uniform(-scale, scale, size=(n, n))
    B = rng.uniform(-scale, scale, size=(n, r))
    U = Box(-np.ones(r), np.ones(r))
    return SemilinearMap(A0, A1, B, U)


def rand_tabulated(rng, n=1, count=6):
    triples = [
        (rng.normal(size=n), rng.normal(size=n), rng.normal(size=n)) for _ in range(count)
    ]
    return TabulatedMap(triples)


def rand_endpoint_set(rng, n):
    kind = rng.integers(0, 3)
    if kind == 0:
        c = rng.uniform(-1, 1, size=n)
        w = rng.uniform(0.2, 1.0, size=n)
        return Box(c - w, c + w)
    if kind == 1:
        return Ball(rng.uniform(-1, 1, size=n), float(rng.uniform(0.2, 1.0)))
    return Singleton(rng.uniform(-1, 1, size=n))


def rand_problem(rng, n=1, N=3, phi=None):
    from incdual import HalfSquaredNorm

    F = rand_semilinear(rng, n=n, r=n)
    return DiscreteProblem(
        map=F,
        phi=phi if phi is not None else HalfSquaredNorm(2 * n),
        Q0=rand_endpoint_set(rng, n),
        Q1=rand_endpoint_set(rng, n),
        N=N,
    )


def feasible_trajectory(rng, p):
    """Random feasible trajectory: endpoints projected into Q0/Q1, controls
    drawn in U by projecting noise."""
    F = p.map
    x0 = p.Q0.project(rng.normal(size=p.n))[0]
    x1 = p.Q1.project(rng.normal(size=p.n))[0]
    controls = [F.U.project(rng.normal(size=F.r) * 2.0)[0] for _ in range(p.N - 1)]
    return simulate(F, x0, x1, controls)


def adjoint_dual(rng, p, radius=2.0):
    """Random dual variables on the adjoint subspace, from a random seed."""
    seed = rng.uniform(-radius, radius, size=2 * p.n)
    xs, mus = dual_sequences_from_seed(p, seed)
    return DualVariables(xs, mus)

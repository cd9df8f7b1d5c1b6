"""Mesh bridge between the second-order continuous model and its
discrete-approximate counterpart.

A continuous model x''(t) in F(x(t), x'(t)) on [0, 1] is replaced on a
uniform mesh of step delta by the inclusion x(t + 2 delta) in
G(x(t), x(t + delta)) with

    G(x, y) = 2 y - x + delta^2 F(x, (y - x) / delta).

This module implements the G-map, the closed-form transforms tying the
M-functions and conjugates of F and G together, the binomial rule for
higher-order lifts, the scaled/barred change of dual variables, and the
construction of the discrete-approximate problem itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .convex_kernel import (
    ConvexFn,
    ConvexSet,
    ExtReal,
    compose_linear,
    conjugate,
    minkowski_sum,
    scale_set,
    _freeze,
    _vec,
)
from .inclusion_model import (
    DiscreteProblem,
    SemilinearMap,
    TabulatedMap,
    m_function,
)

__all__ = [
    "ContinuousProblem",
    "MeshSpec",
    "PascalTransform",
    "GridDualVars",
    "g_map",
    "m_g_via_formula",
    "phi_lift_conjugate",
    "pascal_args",
    "dual_bridge",
    "terminal_bridge",
    "support_bridge_check",
    "build_pda",
    "lift_matrix",
    "forward_diff",
    "backward_diff",
    "second_diff",
]


@dataclass(frozen=True)
class ContinuousProblem:
    """Second-order control model x'' = A0 x + A1 x' + B u, u in U, on [0, 1],
    with terminal cost phi(x(1), x'(1)) and endpoint sets Q0, Q1."""

    map: SemilinearMap
    phi: ConvexFn
    Q0: ConvexSet
    Q1: ConvexSet

    def __post_init__(self):
        n = self.map.n
        if self.Q0.dim != n or self.Q1.dim != n:
            raise ValueError(f"ContinuousProblem: endpoint sets must have dimension {n}")
        if self.phi.dim != 2 * n:
            raise ValueError(f"ContinuousProblem: phi must have dimension {2 * n}")

    @property
    def n(self) -> int:
        return self.map.n

    @property
    def r(self) -> int:
        return self.map.r


class MeshSpec:
    """Uniform mesh {0, delta, ..., 1} with delta an exact unit fraction.

    Index arithmetic must be exact, so delta is accepted only when it
    recovers a fraction 1/K; K >= 2 is allowed so that the half-step mesh
    examples remain expressible.
    """

    def __init__(self, delta: float):
        frac = Fraction(float(delta)).limit_denominator(10**6)
        if frac.numerator != 1 or abs(float(delta) - 1.0 / frac.denominator) > 1e-12:
            raise ValueError(f"MeshSpec: delta must be 1/K for an integer K, got {delta!r}")
        K = frac.denominator
        if K < 2:
            raise ValueError("MeshSpec: need delta <= 1/2")
        self.K = K
        self.delta = 1.0 / K
        self.fraction = Fraction(1, K)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.K + 1) / self.K

    def __repr__(self) -> str:
        return f"MeshSpec(1/{self.K})"


class PascalTransform:
    """Upper-triangular binomial matrix T[j][i] = C(i, j) * delta^j (i >= j).

    Applied to a stack of dual vectors it produces the conjugate arguments
    of the order-m difference lift of a terminal cost; m = 1 reproduces the
    pair (x* + y*, delta y*).
    """

    def __init__(self, m: int, delta: float):
        if m < 1:
            raise ValueError("PascalTransform: order must be >= 1")
        if m > 20:
            raise ValueError("PascalTransform: order limited to 20")
        self.m = int(m)
        self.delta = float(delta)
        T = np.zeros((m + 1, m + 1))
        for j in range(m + 1):
            for i in range(j, m + 1):
                T[j, i] = math.comb(i, j) * self.delta**j
        self.T = _freeze(T)

    def apply(self, ystars: Sequence) -> list[np.ndarray]:
        vecs = [np.asarray(v, dtype=float).reshape(-1) for v in ystars]
        if len(vecs) != self.m + 1:
            raise ValueError(f"PascalTransform: expected {self.m + 1} vectors, got {len(vecs)}")
        dim = len(vecs[0])
        if any(len(v) != dim for v in vecs):
            raise ValueError("PascalTransform: mixed vector dimensions")
        out = []
        for j in range(self.m + 1):
            acc = np.zeros(dim)
            for i in range(j, self.m + 1):
                acc = acc + math.comb(i, j) * vecs[i]
            out.append(self.delta**j * acc)
        return out


class GridDualVars:
    """Dual grid functions on the mesh: x* on {0..1}, mu* and v* on {0..1-delta}.

    Two representations are used.  The barred form carries the raw dual
    multipliers of the G-form problem; the scaled form multiplies x* and
    mu* by delta and carries the auxiliary v*(t) = [mu*(t) - 2 x*(t+delta)]
    / delta that turns the dual objective into difference-derivative shape.
    """

    def __init__(self, xstar, mustar, vstar=None, *, barred: bool, mesh: MeshSpec):
        X = np.asarray(xstar, dtype=float)
        M = np.asarray(mustar, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if M.ndim == 1:
            M = M.reshape(-1, 1)
        K = mesh.K
        if X.shape[0] != K + 1:
            raise ValueError(f"GridDualVars: xstar needs {K + 1} grid values")
        if M.shape[0] != K:
            raise ValueError(f"GridDualVars: mustar needs {K} grid values")
        if M.shape[1] != X.shape[1]:
            raise ValueError("GridDualVars: dimension mismatch")
        self.xstar = _freeze(X)
        self.mustar = _freeze(M)
        if vstar is not None:
            V = np.asarray(vstar, dtype=float)
            if V.ndim == 1:
                V = V.reshape(-1, 1)
            if V.shape != M.shape:
                raise ValueError("GridDualVars: vstar needs the mustar grid shape")
            self.vstar = _freeze(V)
        else:
            self.vstar = None
        self.barred = bool(barred)
        self.mesh = mesh
        self.n = X.shape[1]

    @classmethod
    def from_barred(cls, xstar, mustar, mesh: MeshSpec) -> "GridDualVars":
        return cls(xstar, mustar, None, barred=True, mesh=mesh)

    @classmethod
    def from_scaled(cls, xstar, vstar, mesh: MeshSpec) -> "GridDualVars":
        """Scaled form given x* and v*; mu*(t) = delta v*(t) + 2 x*(t+delta)."""
        X = np.asarray(xstar, dtype=float)
        V = np.asarray(vstar, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if V.ndim == 1:
            V = V.reshape(-1, 1)
        M = mesh.delta * V + 2.0 * X[1:]
        return cls(X, M, V, barred=False, mesh=mesh)


# ---------------------------------------------------------------------------
# Difference operators (uniform stencils on the mesh)
# ---------------------------------------------------------------------------


def forward_diff(grid: np.ndarray, i: int, delta: float) -> np.ndarray:
    """[g(t+delta) - g(t)] / delta at t = i*delta."""
    return (grid[i + 1] - grid[i]) / delta


def backward_diff(grid: np.ndarray, i: int, delta: float) -> np.ndarray:
    """[g(t) - g(t-delta)] / delta at t = i*delta."""
    return (grid[i] - grid[i - 1]) / delta


def second_diff(grid: np.ndarray, i: int, delta: float) -> np.ndarray:
    """[g(t+2 delta) - 2 g(t+delta) + g(t)] / delta^2 at t = i*delta."""
    return (grid[i + 2] - 2.0 * grid[i + 1] + grid[i]) / (delta * delta)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def g_map(F: SemilinearMap | TabulatedMap, delta: float) -> SemilinearMap | TabulatedMap:
    """The mesh map G(x, y) = 2y - x + delta^2 F(x, (y - x)/delta).

    Semilinear F maps to semilinear G with
        A0~ = -E + delta^2 A0 - delta A1,
        A1~ =  2E + delta A1,
        B~  = delta^2 B.
    Tabulated triples (x, w, z) map to (x, x + delta w, 2(x + delta w) - x
    + delta^2 z).
    """
    d = float(delta)
    if d <= 0:
        raise ValueError("g_map: delta must be positive")
    if isinstance(F, SemilinearMap):
        E = np.eye(F.n)
        return SemilinearMap(
            -E + d * d * F.A0 - d * F.A1,
            2.0 * E + d * F.A1,
            d * d * F.B,
            F.U,
        )
    if isinstance(F, TabulatedMap):
        xs = F.xs
        ys = xs + d * F.ys
        zs = 2.0 * ys - xs + d * d * F.zs
        return TabulatedMap(list(zip(xs, ys, zs)))
    raise TypeError(f"g_map: unsupported map {type(F).__name__}")


def m_g_via_formula(F, delta: float, xstar, ystar, zstar) -> ExtReal:
    """M of the mesh map evaluated through the M-function of F:

        M_G(x*, y*, z*) = delta^2 M_F((x*+y*-z*)/delta^2, (y*-2z*)/delta, z*).

    Must equal m_function(g_map(F, delta), x*, y*, z*) on every input.
    """
    d = float(delta)
    xs = _vec(xstar, F.n, "xstar")
    ys = _vec(ystar, F.n, "ystar")
    zs = _vec(zstar, F.n, "zstar")
    inner = m_function(F, (xs + ys - zs) / (d * d), (ys - 2.0 * zs) / d, zs)
    return ExtReal(d * d) * inner


def lift_matrix(n: int, delta: float) -> np.ndarray:
    """Block matrix sending (x, y) to (x, (y - x)/delta)."""
    E = np.eye(n)
    top = np.hstack([E, np.zeros((n, n))])
    bot = np.hstack([-E / delta, E / delta])
    return np.vstack([top, bot])


def phi_lift_conjugate(phi: ConvexFn, delta: float, xstar, ystar) -> ExtReal:
    """Conjugate of the lifted terminal cost Phi(x, y) = phi(x, (y - x)/delta):

        Phi*(x*, y*) = phi*(x* + y*, delta y*).
    """
    if phi.dim % 2 != 0:
        raise ValueError("phi_lift_conjugate: phi must live on R^{2n}")
    n = phi.dim // 2
    xs = _vec(xstar, n, "xstar")
    ys = _vec(ystar, n, "ystar")
    return conjugate(phi, np.concatenate([xs + ys, float(delta) * ys]))


def pascal_args(m: int, delta: float, ystars: Sequence) -> list[np.ndarray]:
    """Conjugate arguments of the order-m lift:
    output_j = delta^j * sum_{i >= j} C(i, j) ystars_i."""
    return PascalTransform(m, delta).apply(ystars)


def dual_bridge(barred: GridDualVars, delta: float | None = None) -> GridDualVars:
    """Scaled dual variables x* = delta x_bar*, mu* = delta mu_bar*, with

        v*(t) = [mu*(t) - 2 x*(t + delta)] / delta  on  {0, ..., 1 - delta}.

    Under this change the G-form M-term at each t turns into delta times
    the M-function of F in difference-derivative arguments:

        M_G(xb*(t) - mb*(t), mb*(t+d), xb*(t+2d))
            = delta * M_F(D2 x*(t) + D- v*(t+d), v*(t+d), x*(t+2d)).
    """
    if not barred.barred:
        raise ValueError("dual_bridge: input must be in barred form")
    d = barred.mesh.delta if delta is None else float(delta)
    if abs(d - barred.mesh.delta) > 1e-12:
        raise ValueError("dual_bridge: delta disagrees with the mesh")
    X = d * barred.xstar
    M = d * barred.mustar
    V = (M - 2.0 * X[1:]) / d
    return GridDualVars(X, M, V, barred=False, mesh=barred.mesh)


def terminal_bridge(phi: ConvexFn, delta: float, barred: GridDualVars) -> ExtReal:
    """Terminal conjugate of the lifted cost, evaluated in scaled variables:

        Phi*(mu_bar*(1-d) - x_bar*(1-d), -x_bar*(1))
            = phi*(v*(1-d) + D- x*(1), -x*(1)).
    """
    sc = dual_bridge(barred, delta) if barred.barred else barred
    d = sc.mesh.delta
    K = sc.mesh.K
    first = sc.vstar[K - 1] + backward_diff(sc.xstar, K, d)
    second = -sc.xstar[K]
    n = sc.n
    if phi.dim != 2 * n:
        raise ValueError("terminal_bridge: phi dimension mismatch")
    return conjugate(phi, np.concatenate([first, second]))


def support_bridge_check(
    Q0: ConvexSet, Q1: ConvexSet, delta: float, barred: GridDualVars
) -> tuple[ExtReal, ExtReal]:
    """Both sides of the endpoint support comparison.

    lhs = W_{Q0}(x_bar*(0) - mu_bar*(0)) + W_{Q0 + delta Q1}(x_bar*(delta))
    rhs = W_{Q0}(-v*(0) - D x*(0)) + W_{Q1}(x*(delta))

    Subadditivity of support functions gives lhs >= rhs always.
    """
    if not barred.barred:
        raise ValueError("support_bridge_check: input must be in barred form")
    d = float(delta)
    sc = dual_bridge(barred, d)
    q1hat = minkowski_sum(Q0, scale_set(Q1, d))
    lhs = Q0.support(barred.xstar[0] - barred.mustar[0]) + q1hat.support(barred.xstar[1])
    rhs_dir = -sc.vstar[0] - forward_diff(sc.xstar, 0, d)
    rhs = Q0.support(rhs_dir) + Q1.support(sc.xstar[1])
    return ExtReal(lhs), ExtReal(rhs)


def build_pda(cp: ContinuousProblem, mesh: MeshSpec) -> DiscreteProblem:
    """The discrete-approximate problem on the mesh: horizon K = 1/delta,
    dynamics g_map(F, delta), terminal cost Phi(x, y) = phi(x, (y-x)/delta)
    at (x(1-delta), x(1)), first-step set Q0 + delta Q1."""
    d = mesh.delta
    lifted = compose_linear(cp.phi, lift_matrix(cp.n, d))
    return DiscreteProblem(
        map=g_map(cp.map, d),
        phi=lifted,
        Q0=cp.Q0,
        Q1=minkowski_sum(cp.Q0, scale_set(cp.Q1, d)),
        N=mesh.K,
    )

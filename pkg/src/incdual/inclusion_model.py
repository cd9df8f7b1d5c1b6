"""Set-valued dynamics and the second-order discrete inclusion problem.

A map F assigns to each state pair (x, y) a set F(x, y) of successor
states.  Two representations are supported:

* SemilinearMap: F(x, y) = A0 x + A1 y + B U with U a compact convex
  control set, so the graph {(x, y, A0 x + A1 y + B u) : u in U} is convex.
* TabulatedMap: an explicit finite list of graph triples (x, y, z), used as
  a desk-scale stand-in for a general graph.  Convexity is not enforced;
  the Hamiltonian and M-function identities hold without it.

The primal problem minimizes a terminal cost phi(x_{N-1}, x_N) over
trajectories x_{t+2} in F(x_t, x_{t+1}) with x_0 in Q0 and x_1 in Q1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .convex_kernel import (
    MINUS_INF,
    ConvexFn,
    ConvexSet,
    ExtReal,
    _freeze,
    _vec,
)

__all__ = [
    "SemilinearMap",
    "TabulatedMap",
    "DiscreteProblem",
    "Trajectory",
    "hamiltonian",
    "m_function",
    "argmax_rep",
    "simulate",
]

# Matching tolerance for (x, y) lookup in tabulated maps and for the affine
# feasibility test in the semilinear M-function.
MATCH_TOL = 1e-9


class SemilinearMap:
    """F(x, y) = A0 x + A1 y + B U with compact convex U."""

    def __init__(self, A0, A1, B, U: ConvexSet):
        A0 = np.asarray(A0, dtype=float)
        A1 = np.asarray(A1, dtype=float)
        B = np.asarray(B, dtype=float)
        if A0.ndim != 2 or A0.shape[0] != A0.shape[1]:
            raise ValueError("SemilinearMap: A0 must be square")
        n = A0.shape[0]
        if A1.shape != (n, n):
            raise ValueError(f"SemilinearMap: A1 must be {n}x{n}")
        if B.ndim != 2 or B.shape[0] != n:
            raise ValueError(f"SemilinearMap: B must have {n} rows")
        r = B.shape[1]
        if U.dim != r:
            raise ValueError(f"SemilinearMap: U must have dimension {r}")
        self.A0 = _freeze(A0)
        self.A1 = _freeze(A1)
        self.B = _freeze(B)
        self.U = U
        self.n = n
        self.r = r

    def image_point(self, x, y, u) -> np.ndarray:
        x = _vec(x, self.n, "x")
        y = _vec(y, self.n, "y")
        u = _vec(u, self.r, "u")
        return self.A0 @ x + self.A1 @ y + self.B @ u

    def __repr__(self) -> str:
        return f"SemilinearMap(n={self.n}, r={self.r}, U={self.U!r})"


class TabulatedMap:
    """A finite list of graph triples (x, y, z), each an n-vector."""

    def __init__(self, triples: Sequence):
        rows = []
        n = None
        for trip in triples:
            x, y, z = trip
            x = _vec(x, n, "x")
            n = len(x)
            y = _vec(y, n, "y")
            z = _vec(z, n, "z")
            rows.append((x, y, z))
        if not rows:
            raise ValueError("TabulatedMap: need at least one triple")
        self.xs = _freeze(np.stack([r[0] for r in rows]))
        self.ys = _freeze(np.stack([r[1] for r in rows]))
        self.zs = _freeze(np.stack([r[2] for r in rows]))
        self.n = n

    def __len__(self) -> int:
        return self.xs.shape[0]

    def match_mask(self, x, y, tol: float = MATCH_TOL) -> np.ndarray:
        x = _vec(x, self.n, "x")
        y = _vec(y, self.n, "y")
        dx = np.max(np.abs(self.xs - x), axis=1)
        dy = np.max(np.abs(self.ys - y), axis=1)
        return (dx <= tol) & (dy <= tol)

    def __repr__(self) -> str:
        return f"TabulatedMap(<{len(self)} triples, n={self.n}>)"


@dataclass(frozen=True)
class DiscreteProblem:
    """Horizon-N primal data: dynamics map, terminal cost, endpoint sets."""

    map: SemilinearMap | TabulatedMap
    phi: ConvexFn
    Q0: ConvexSet
    Q1: ConvexSet
    N: int

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("DiscreteProblem: N must be >= 2")
        n = self.map.n
        if self.Q0.dim != n or self.Q1.dim != n:
            raise ValueError(f"DiscreteProblem: endpoint sets must have dimension {n}")
        if self.phi.dim != 2 * n:
            raise ValueError(f"DiscreteProblem: phi must have dimension {2 * n}")

    @property
    def n(self) -> int:
        return self.map.n

    @property
    def r(self) -> int:
        if isinstance(self.map, SemilinearMap):
            return self.map.r
        raise AttributeError("tabulated maps have no control dimension")

    @property
    def semilinear(self) -> bool:
        return isinstance(self.map, SemilinearMap)


@dataclass(frozen=True)
class Trajectory:
    """States x_0 .. x_N and, for semilinear maps, controls u_0 .. u_{N-2}."""

    states: tuple
    controls: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(np.asarray(s, dtype=float).reshape(-1) for s in self.states))
        if len(self.states) < 3:
            raise ValueError("Trajectory: need at least x_0, x_1, x_2")
        if self.controls is not None:
            object.__setattr__(self, "controls", tuple(np.asarray(u, dtype=float).reshape(-1) for u in self.controls))
            if len(self.controls) != len(self.states) - 2:
                raise ValueError("Trajectory: need one control per step, N - 1 total")

    @property
    def horizon(self) -> int:
        return len(self.states) - 1

    def dynamics_residual(self, F: SemilinearMap) -> float:
        """max_t ||x_{t+2} - A0 x_t - A1 x_{t+1} - B u_t||."""
        if self.controls is None:
            raise ValueError("dynamics_residual needs controls")
        worst = 0.0
        for t in range(self.horizon - 1):
            pred = F.A0 @ self.states[t] + F.A1 @ self.states[t + 1] + F.B @ self.controls[t]
            worst = max(worst, float(np.linalg.norm(self.states[t + 2] - pred)))
        return worst


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def hamiltonian(F: SemilinearMap | TabulatedMap, x, y, zstar) -> ExtReal:
    """H_F(x, y, z*) = sup {<z, z*> : z in F(x, y)}; -inf on an empty image."""
    if isinstance(F, SemilinearMap):
        x = _vec(x, F.n, "x")
        y = _vec(y, F.n, "y")
        zs = _vec(zstar, F.n, "zstar")
        drift = float((F.A0 @ x + F.A1 @ y) @ zs)
        return ExtReal(drift + float(F.U.support(F.B.T @ zs)))
    if isinstance(F, TabulatedMap):
        zs = _vec(zstar, F.n, "zstar")
        mask = F.match_mask(x, y)
        if not np.any(mask):
            return MINUS_INF
        return ExtReal(float(np.max(F.zs[mask] @ zs)))
    raise TypeError(f"hamiltonian: unsupported map {type(F).__name__}")


def m_function(
    F: SemilinearMap | TabulatedMap,
    xstar,
    ystar,
    zstar,
    feas_tol: float = MATCH_TOL,
) -> ExtReal:
    """M_F(x*, y*, z*) = inf {<x,x*> + <y,y*> - <z,z*> : (x, y, z) in gph F}.

    Semilinear closed form: -W_U(B^T z*) when x* = A0^T z* and y* = A1^T z*
    (within `feas_tol`), else -inf.  Tabulated maps take the exact minimum
    over the listed triples.
    """
    if isinstance(F, SemilinearMap):
        xs = _vec(xstar, F.n, "xstar")
        ys = _vec(ystar, F.n, "ystar")
        zs = _vec(zstar, F.n, "zstar")
        if np.max(np.abs(xs - F.A0.T @ zs), initial=0.0) > feas_tol:
            return MINUS_INF
        if np.max(np.abs(ys - F.A1.T @ zs), initial=0.0) > feas_tol:
            return MINUS_INF
        return ExtReal(-float(F.U.support(F.B.T @ zs)))
    if isinstance(F, TabulatedMap):
        xs = _vec(xstar, F.n, "xstar")
        ys = _vec(ystar, F.n, "ystar")
        zs = _vec(zstar, F.n, "zstar")
        vals = F.xs @ xs + F.ys @ ys - F.zs @ zs
        return ExtReal(float(np.min(vals)))
    raise TypeError(f"m_function: unsupported map {type(F).__name__}")


def argmax_rep(F: SemilinearMap | TabulatedMap, x, y, zstar) -> np.ndarray:
    """A canonical element of the argmaximum set
    {z in F(x, y) : <z, z*> = H_F(x, y, z*)}."""
    if isinstance(F, SemilinearMap):
        x = _vec(x, F.n, "x")
        y = _vec(y, F.n, "y")
        zs = _vec(zstar, F.n, "zstar")
        ustar = F.U.support_point(F.B.T @ zs)
        return F.A0 @ x + F.A1 @ y + F.B @ ustar
    if isinstance(F, TabulatedMap):
        zs = _vec(zstar, F.n, "zstar")
        mask = F.match_mask(x, y)
        if not np.any(mask):
            raise ValueError("argmax_rep: F(x, y) is empty")
        cand = F.zs[mask]
        vals = cand @ zs
        return cand[int(np.argmax(vals))].copy()
    raise TypeError(f"argmax_rep: unsupported map {type(F).__name__}")


def simulate(F: SemilinearMap, x0, x1, controls: Sequence, tol: float = 1e-8) -> Trajectory:
    """The unique trajectory of x_{t+2} = A0 x_t + A1 x_{t+1} + B u_t.

    Each control must belong to U within `tol`.
    """
    if not isinstance(F, SemilinearMap):
        raise TypeError("simulate: needs a semilinear map")
    states = [_vec(x0, F.n, "x0"), _vec(x1, F.n, "x1")]
    us = []
    for t, u in enumerate(controls):
        u = _vec(u, F.r, f"u_{t}")
        _, dist = F.U.project(u)
        if dist > tol:
            raise ValueError(f"simulate: control u_{t} outside U by {dist:.3e}")
        us.append(u)
        states.append(F.A0 @ states[t] + F.A1 @ states[t + 1] + F.B @ u)
    if not us:
        raise ValueError("simulate: need at least one control")
    return Trajectory(states=tuple(states), controls=tuple(us))

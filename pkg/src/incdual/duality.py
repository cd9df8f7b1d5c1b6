"""Dual objectives, weak/strong duality checks, and the adjoint
Euler-Lagrange certificate.

The dual objective pairs a terminal conjugate with M-function terms along
the horizon and support terms at the endpoints.  A certificate at a primal
trajectory and a set of dual variables measures, per step, the adjoint
equalities, the Hamiltonian attainment gap, the endpoint support
attainment, and the terminal Fenchel equality; all residuals vanishing
forces a zero duality gap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .convex_kernel import (
    ExtReal,
    MINUS_INF,
    PLUS_INF,
    Ball,
    Box,
    Polytope,
    Singleton,
    conjugate,
    fenchel_residual,
    support_attainment_residual,
)
from .discretization import (
    ContinuousProblem,
    GridDualVars,
    MeshSpec,
    backward_diff,
    dual_bridge,
    forward_diff,
    second_diff,
)
from .inclusion_model import (
    DiscreteProblem,
    SemilinearMap,
    hamiltonian,
    m_function,
)
from .solvers import DualSolution, PrimalSolution

__all__ = [
    "DualVariables",
    "CertificateReport",
    "dual_objective",
    "dual_objective_da",
    "certify",
    "weak_duality_gap",
    "nondegeneracy_probe",
    "NondegeneracyReport",
]


class DualVariables:
    """General dual sequences x*_0 .. x*_N and mu*_0 .. mu*_{N-1}.

    Not restricted to the adjoint subspace; the dual objective simply
    evaluates to -inf off it for semilinear maps.
    """

    def __init__(self, xstar: Sequence, mustar: Sequence):
        self.xstar = [np.asarray(v, dtype=float).reshape(-1) for v in xstar]
        self.mustar = [np.asarray(v, dtype=float).reshape(-1) for v in mustar]
        if len(self.xstar) != len(self.mustar) + 1:
            raise ValueError("DualVariables: need len(xstar) == len(mustar) + 1")
        n = len(self.xstar[0])
        if any(len(v) != n for v in self.xstar + self.mustar):
            raise ValueError("DualVariables: mixed dimensions")
        self.n = n
        self.N = len(self.mustar)

    @classmethod
    def from_dual_solution(cls, ds: DualSolution) -> "DualVariables":
        return cls(list(ds.xstar), list(ds.mustar))

    def perturbed(self, which: str, index: int, coord: int, amount: float) -> "DualVariables":
        """Copy with one coordinate of one variable shifted by `amount`."""
        xs = [v.copy() for v in self.xstar]
        ms = [v.copy() for v in self.mustar]
        if which == "xstar":
            xs[index][coord] += amount
        elif which == "mustar":
            ms[index][coord] += amount
        else:
            raise ValueError("perturbed: which must be 'xstar' or 'mustar'")
        return DualVariables(xs, ms)


def dual_objective(p: DiscreteProblem, dv: DualVariables, feas_tol: float = 1e-9) -> ExtReal:
    """-phi*(mu*_{N-1} - x*_{N-1}, -x*_N)
    + sum_t M_F(x*_t - mu*_t, mu*_{t+1}, x*_{t+2})
    - W_{Q0}(x*_0 - mu*_0) - W_{Q1}(x*_1),

    with a -inf short circuit as soon as any term degenerates."""
    if dv.N != p.N or dv.n != p.n:
        raise ValueError("dual_objective: dual variable shape mismatch")
    q = np.concatenate([dv.mustar[p.N - 1] - dv.xstar[p.N - 1], -dv.xstar[p.N]])
    fs = conjugate(p.phi, q)
    if not fs.is_finite:
        return MINUS_INF
    total = ExtReal(-float(fs))
    for t in range(p.N - 1):
        m = m_function(
            p.map,
            dv.xstar[t] - dv.mustar[t],
            dv.mustar[t + 1],
            dv.xstar[t + 2],
            feas_tol=feas_tol,
        )
        if not m.is_finite:
            return MINUS_INF
        total = total + m
    total = total - p.Q0.support(dv.xstar[0] - dv.mustar[0])
    total = total - p.Q1.support(dv.xstar[1])
    return total


def dual_objective_da(
    cp: ContinuousProblem, mesh: MeshSpec, gv: GridDualVars, feas_tol: float = 1e-9
) -> ExtReal:
    """The mesh dual objective in difference-derivative form:

    -phi*(v*(1-d) + D- x*(1), -x*(1))
    + sum_{t in {0..1-2d}} d * M_F(D2 x*(t) + D- v*(t+d), v*(t+d), x*(t+2d))
    - W_{Q0}(-v*(0) - D x*(0)) - W_{Q1}(x*(d)).
    """
    sc = dual_bridge(gv) if gv.barred else gv
    if sc.vstar is None:
        raise ValueError("dual_objective_da: scaled variables need vstar")
    d = mesh.delta
    K = mesh.K
    if sc.mesh.K != K:
        raise ValueError("dual_objective_da: grid does not match the mesh")
    X, V = sc.xstar, sc.vstar
    q = np.concatenate([V[K - 1] + backward_diff(X, K, d), -X[K]])
    fs = conjugate(cp.phi, q)
    if not fs.is_finite:
        return MINUS_INF
    total = ExtReal(-float(fs))
    for i in range(K - 1):
        m = m_function(
            cp.map,
            second_diff(X, i, d) + backward_diff(V, i + 1, d),
            V[i + 1],
            X[i + 2],
            feas_tol=feas_tol,
        )
        if not m.is_finite:
            return MINUS_INF
        total = total + ExtReal(d) * m
    total = total - cp.Q0.support(-V[0] - forward_diff(X, 0, d))
    total = total - cp.Q1.support(X[1])
    return total


@dataclass(frozen=True)
class CertificateReport:
    """Residual bundle for the adjoint certificate at a primal/dual pair."""

    el_residuals: tuple
    argmax_residuals: tuple
    trans0: float
    trans1: float
    fenchel_terminal: float
    primal_value: ExtReal
    dual_value: ExtReal
    gap: ExtReal
    tol: float
    passed: bool

    @property
    def max_residual(self) -> float:
        flat = [r for pair in self.el_residuals for r in pair]
        flat += list(self.argmax_residuals)
        flat += [self.trans0, self.trans1, self.fenchel_terminal]
        return max(flat)

    def summary_lines(self) -> list[str]:
        lines = []
        for t, (a, b) in enumerate(self.el_residuals):
            lines.append(f"adjoint[{t}]: {a:.3e} {b:.3e}")
        for t, a in enumerate(self.argmax_residuals):
            lines.append(f"argmax[{t}]: {a:.3e}")
        lines.append(f"trans0: {self.trans0:.3e}")
        lines.append(f"trans1: {self.trans1:.3e}")
        lines.append(f"fenchel_terminal: {self.fenchel_terminal:.3e}")
        lines.append(f"primal: {float(self.primal_value)!r}")
        lines.append(f"dual: {float(self.dual_value)!r}")
        lines.append(f"gap: {float(self.gap)!r}")
        lines.append("certificate: " + ("PASS" if self.passed else "FAIL"))
        return lines


def certify(
    p: DiscreteProblem,
    ps: PrimalSolution,
    dv: DualVariables,
    tol: float = 1e-8,
) -> CertificateReport:
    """Verify the adjoint certificate at a feasible primal trajectory.

    Per step: the two adjoint equalities x*_t - mu*_t = A0^T x*_{t+2} and
    mu*_{t+1} = A1^T x*_{t+2}, and the Hamiltonian attainment gap.  At the
    endpoints: support attainment in directions x*_0 - mu*_0 and x*_1.  At
    the horizon: the Fenchel equality for phi.  Residual thresholds scale
    with 1 + |primal value|; all residuals below threshold force the gap
    below a bound proportional to tol.
    """
    if not p.semilinear:
        raise ValueError("certify requires a semilinear map")
    if ps.trajectory is None or not ps.feasible:
        raise ValueError("certify needs a feasible primal solution")
    F: SemilinearMap = p.map
    states = ps.trajectory.states
    if len(states) != p.N + 1:
        raise ValueError("certify: trajectory horizon mismatch")
    if dv.N != p.N or dv.n != p.n:
        raise ValueError("certify: dual variable shape mismatch")

    el = []
    amax = []
    for t in range(p.N - 1):
        r1 = float(np.linalg.norm(dv.xstar[t] - dv.mustar[t] - F.A0.T @ dv.xstar[t + 2]))
        r2 = float(np.linalg.norm(dv.mustar[t + 1] - F.A1.T @ dv.xstar[t + 2]))
        el.append((r1, r2))
        h = hamiltonian(F, states[t], states[t + 1], dv.xstar[t + 2])
        gap_t = float(h) - float(states[t + 2] @ dv.xstar[t + 2])
        amax.append(max(gap_t, 0.0))

    trans0 = float(support_attainment_residual(p.Q0, states[0], dv.xstar[0] - dv.mustar[0]))
    trans1 = float(support_attainment_residual(p.Q1, states[1], dv.xstar[1]))

    zterm = np.concatenate([states[p.N - 1], states[p.N]])
    qterm = np.concatenate([dv.mustar[p.N - 1] - dv.xstar[p.N - 1], -dv.xstar[p.N]])
    fen = fenchel_residual(p.phi, zterm, qterm)
    fen_val = float(fen) if fen.is_finite else float("inf")
    fen_val = max(fen_val, 0.0)

    primal = ps.value
    scale = 1.0 + abs(float(primal))
    thresh = tol * scale
    dual = dual_objective(p, dv, feas_tol=max(1e-9, thresh))
    gap = primal - dual if dual.is_finite else PLUS_INF

    residuals_ok = (
        all(max(pair) <= thresh for pair in el)
        and all(a <= thresh for a in amax)
        and trans0 <= thresh
        and trans1 <= thresh
        and fen_val <= thresh
    )
    # residual bound on the gap: one thresh per residual plus the pairing
    # slack of near-feasible adjoint terms
    xmax = max(float(np.linalg.norm(s)) for s in states)
    gap_bound = thresh * (p.N + 3 + 2 * (p.N - 1) * (1.0 + xmax))
    passed = bool(residuals_ok and gap.is_finite and float(gap) <= gap_bound)

    return CertificateReport(
        el_residuals=tuple(el),
        argmax_residuals=tuple(amax),
        trans0=trans0,
        trans1=trans1,
        fenchel_terminal=fen_val,
        primal_value=primal,
        dual_value=dual,
        gap=gap,
        tol=tol,
        passed=passed,
    )


def weak_duality_gap(p: DiscreteProblem, ps: PrimalSolution, dv: DualVariables) -> ExtReal:
    """primal value minus dual objective; nonnegative for every feasible
    trajectory and arbitrary dual variables."""
    dual = dual_objective(p, dv)
    if not dual.is_finite:
        return PLUS_INF
    return ps.value - dual


@dataclass(frozen=True)
class NondegeneracyReport:
    checks: tuple  # (name, status, note) with status in {"PASS", "WARN", "FAIL"}

    @property
    def overall(self) -> str:
        statuses = [s for _, s, _ in self.checks]
        if "FAIL" in statuses:
            return "FAIL"
        if "WARN" in statuses:
            return "WARN"
        return "PASS"


def _interior_status(S) -> tuple[str, str]:
    if isinstance(S, Box):
        if np.all(S.upper - S.lower > 0):
            return "PASS", "box with nonempty interior"
        return "WARN", "degenerate box; relative-interior case not decided"
    if isinstance(S, Ball):
        if S.radius > 0:
            return "PASS", "ball with positive radius"
        return "WARN", "zero-radius ball; relative-interior case not decided"
    if isinstance(S, Singleton):
        return "WARN", "singleton has empty interior; relative-interior case not decided"
    if isinstance(S, Polytope):
        V = S.vertices
        rank = np.linalg.matrix_rank(V - V[0], tol=1e-10)
        if rank == S.dim:
            return "PASS", "full-dimensional polytope"
        return "WARN", "lower-dimensional polytope; relative-interior case not decided"
    return "WARN", "unknown variant"


def nondegeneracy_probe(p: DiscreteProblem) -> NondegeneracyReport:
    """Best-effort interior qualification checks: U and the endpoint sets
    should have nonempty interior and B full row rank, so the graph of the
    map has interior points.  Singleton-style sets yield WARN, not FAIL."""
    if not p.semilinear:
        raise ValueError("nondegeneracy_probe requires a semilinear map")
    F: SemilinearMap = p.map
    checks = []
    u_status, u_note = _interior_status(F.U)
    checks.append(("U_interior", u_status, u_note))
    rank = int(np.linalg.matrix_rank(F.B, tol=1e-12)) if F.B.size else 0
    if rank == F.n:
        checks.append(("B_row_rank", "PASS", f"rank {rank} of {F.n}"))
        graph_status = u_status
        graph_note = "graph interior follows from U and B" if u_status == "PASS" else u_note
    else:
        checks.append(("B_row_rank", "FAIL", f"rank {rank} of {F.n}"))
        graph_status, graph_note = "FAIL", "B lacks full row rank, graph has empty interior"
    checks.append(("graph_interior", graph_status, graph_note))
    for name, S in (("Q0_interior", p.Q0), ("Q1_interior", p.Q1)):
        st, note = _interior_status(S)
        checks.append((name, st, note))
    return NondegeneracyReport(checks=tuple(checks))

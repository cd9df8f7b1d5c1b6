"""Extended-real convex calculus: support functions, conjugates, infimal
convolution, subgradients, and Fenchel-Young residuals.

All sets are compact (boxes, balls, polytopes, singletons), so support
functions are finite in every direction and projections always exist.
Functions are proper and convex; the sampled variant is a finite tabulation
used as a numeric oracle for conjugates and infimal convolutions.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np

__all__ = [
    "ExtReal",
    "PLUS_INF",
    "MINUS_INF",
    "ConvexSet",
    "Box",
    "Ball",
    "Polytope",
    "Singleton",
    "ConvexFn",
    "Affine",
    "Quadratic",
    "CoordinateSelect",
    "NormOne",
    "HalfSquaredNorm",
    "Sampled",
    "support",
    "project",
    "conjugate",
    "lf_numeric",
    "infconv_numeric",
    "fenchel_residual",
    "subgradient",
    "support_attainment_residual",
    "scale_set",
    "minkowski_sum",
    "compose_linear",
    "eval_batch",
    "conjugate_batch",
    "support_batch",
]

# Absolute tolerance for the equality tests inside conjugate dispatch
# (p == c and friends).  Exact float equality would be meaningless here.
EQ_TOL = 1e-9

# Ties in canonical support-point selection.
TIE_TOL = 1e-12


class ExtReal(float):
    """A float restricted to the extended real line without NaN.

    Addition with an infinity dominates finite values, but the indeterminate
    forms (+inf) + (-inf) and 0 * inf raise instead of silently producing
    NaN: a NaN leaking into a dual objective would mask an infeasible dual
    point.
    """

    __slots__ = ()

    def __new__(cls, value: float = 0.0) -> "ExtReal":
        v = float(value)
        if math.isnan(v):
            raise ValueError("ExtReal cannot hold NaN")
        return super().__new__(cls, v)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self)

    @staticmethod
    def _coerce(other) -> "ExtReal | None":
        if isinstance(other, ExtReal):
            return other
        if isinstance(other, (int, float, np.floating)):
            return ExtReal(float(other))
        return None

    def __add__(self, other):
        o = ExtReal._coerce(other)
        if o is None:
            return NotImplemented
        a, b = float(self), float(o)
        if math.isinf(a) and math.isinf(b) and (a > 0) != (b > 0):
            raise ValueError("ExtReal: (+inf) + (-inf) is undefined")
        return ExtReal(a + b)

    __radd__ = __add__

    def __neg__(self):
        return ExtReal(-float(self))

    def __sub__(self, other):
        o = ExtReal._coerce(other)
        if o is None:
            return NotImplemented
        return self.__add__(-o)

    def __rsub__(self, other):
        o = ExtReal._coerce(other)
        if o is None:
            return NotImplemented
        return o.__add__(-self)

    def __mul__(self, other):
        o = ExtReal._coerce(other)
        if o is None:
            return NotImplemented
        a, b = float(self), float(o)
        if (math.isinf(a) and b == 0.0) or (math.isinf(b) and a == 0.0):
            raise ValueError("ExtReal: 0 * inf is undefined")
        return ExtReal(a * b)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"ExtReal({float.__repr__(self)})"


PLUS_INF = ExtReal(math.inf)
MINUS_INF = ExtReal(-math.inf)


def _vec(x, dim: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.asarray(x, dtype=float).reshape(-1)
    if dim is not None and v.shape[0] != dim:
        raise ValueError(f"{name}: expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name}: entries must be finite")
    return v


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=float)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# Convex sets
# ---------------------------------------------------------------------------


class ConvexSet:
    """A nonempty compact convex subset of R^n.

    Subclasses implement support values, canonical support points,
    Euclidean projection, membership, and a finite candidate grid used by
    the brute-force oracles.
    """

    dim: int

    def support(self, d) -> ExtReal:
        """sup over x in S of <x, d>; finite and positively homogeneous."""
        raise NotImplementedError

    def support_point(self, d) -> np.ndarray:
        """A deterministic maximizer of <x, d> over S."""
        raise NotImplementedError

    def project(self, x) -> tuple[np.ndarray, float]:
        """Euclidean projection onto S and its distance."""
        raise NotImplementedError

    def contains(self, x, tol: float = 1e-9) -> bool:
        _, dist = self.project(x)
        return dist <= tol

    def grid(self, resolution: int) -> np.ndarray:
        """Finite candidate points, shape (m, dim), covering S."""
        raise NotImplementedError

    def grid_size(self, resolution: int) -> int:
        """Upper bound on len(grid(resolution)), cheap to evaluate."""
        raise NotImplementedError


class Box(ConvexSet):
    """Axis-aligned box {x : lower <= x <= upper}."""

    def __init__(self, lower, upper):
        self.lower = _freeze(_vec(lower, name="lower"))
        self.upper = _freeze(_vec(upper, len(self.lower), name="upper"))
        if np.any(self.lower > self.upper):
            raise ValueError("Box: lower must be <= upper coordinatewise")
        self.dim = len(self.lower)

    def support(self, d) -> ExtReal:
        d = _vec(d, self.dim, "direction")
        return ExtReal(float(np.sum(np.where(d >= 0.0, self.upper, self.lower) * d)))

    def support_point(self, d) -> np.ndarray:
        d = _vec(d, self.dim, "direction")
        # canonical tie rule: coordinates with |d_i| <= TIE_TOL take the
        # point of the interval closest to 0
        mid = np.clip(0.0, self.lower, self.upper)
        return np.where(d > TIE_TOL, self.upper, np.where(d < -TIE_TOL, self.lower, mid))

    def project(self, x) -> tuple[np.ndarray, float]:
        x = _vec(x, self.dim, "point")
        p = np.clip(x, self.lower, self.upper)
        return p, float(np.linalg.norm(x - p))

    def grid(self, resolution: int) -> np.ndarray:
        axes = []
        for lo, hi in zip(self.lower, self.upper):
            if hi - lo < 1e-15:
                axes.append(np.array([lo]))
            else:
                axes.append(np.linspace(lo, hi, resolution))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=1)

    def grid_size(self, resolution: int) -> int:
        n = 1
        for lo, hi in zip(self.lower, self.upper):
            n *= 1 if hi - lo < 1e-15 else resolution
        return n

    def __repr__(self) -> str:
        return f"Box({self.lower.tolist()}, {self.upper.tolist()})"


class Ball(ConvexSet):
    """Euclidean ball {x : ||x - center|| <= radius}."""

    def __init__(self, center, radius: float):
        self.center = _freeze(_vec(center, name="center"))
        self.radius = float(radius)
        if self.radius < 0:
            raise ValueError("Ball: radius must be >= 0")
        self.dim = len(self.center)

    def support(self, d) -> ExtReal:
        d = _vec(d, self.dim, "direction")
        return ExtReal(float(self.center @ d) + self.radius * float(np.linalg.norm(d)))

    def support_point(self, d) -> np.ndarray:
        d = _vec(d, self.dim, "direction")
        nd = float(np.linalg.norm(d))
        if nd <= TIE_TOL:
            return self.center.copy()
        return self.center + self.radius * d / nd

    def project(self, x) -> tuple[np.ndarray, float]:
        x = _vec(x, self.dim, "point")
        w = x - self.center
        nw = float(np.linalg.norm(w))
        if nw <= self.radius:
            return x.copy(), 0.0
        p = self.center + self.radius * w / nw
        return p, nw - self.radius

    def grid(self, resolution: int) -> np.ndarray:
        box = Box(self.center - self.radius, self.center + self.radius)
        pts = box.grid(resolution)
        w = pts - self.center
        nw = np.linalg.norm(w, axis=1)
        inside = pts[nw <= self.radius * (1 + 1e-12)]
        nz = nw > TIE_TOL
        onsphere = self.center + self.radius * w[nz] / nw[nz, None]
        return np.vstack([inside, onsphere]) if len(onsphere) else inside

    def grid_size(self, resolution: int) -> int:
        box = Box(self.center - self.radius, self.center + self.radius)
        total = box.grid_size(resolution)
        if total > 10**7:
            # past any oracle budget; an upper bound keeps the guard O(1)
            return 2 * total
        nw = np.linalg.norm(box.grid(resolution) - self.center, axis=1)
        return int(np.sum(nw <= self.radius * (1 + 1e-12))) + int(np.sum(nw > TIE_TOL))

    def __repr__(self) -> str:
        return f"Ball({self.center.tolist()}, {self.radius})"


def _simplex_projection(v: np.ndarray) -> np.ndarray:
    # Euclidean projection onto the probability simplex (sort-based rule).
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(v - theta, 0.0)


class Polytope(ConvexSet):
    """Convex hull of a finite vertex list (rows of `vertices`)."""

    def __init__(self, vertices):
        V = np.asarray(vertices, dtype=float)
        if V.ndim != 2 or V.shape[0] == 0:
            raise ValueError("Polytope: need a nonempty 2-D vertex array")
        if not np.all(np.isfinite(V)):
            raise ValueError("Polytope: vertices must be finite")
        self.vertices = _freeze(V)
        self.dim = V.shape[1]

    def support(self, d) -> ExtReal:
        d = _vec(d, self.dim, "direction")
        return ExtReal(float(np.max(self.vertices @ d)))

    def support_point(self, d) -> np.ndarray:
        d = _vec(d, self.dim, "direction")
        vals = self.vertices @ d
        best = float(np.max(vals))
        idx = int(np.argmax(vals >= best - TIE_TOL))  # lowest attaining index
        return self.vertices[idx].copy()

    def project(self, x) -> tuple[np.ndarray, float]:
        x = _vec(x, self.dim, "point")
        lam = self._projection_weights(x)
        p = self.vertices.T @ lam
        return p, float(np.linalg.norm(x - p))

    def _projection_weights(self, x: np.ndarray) -> np.ndarray:
        # minimize 0.5||V^T lam - x||^2 over the simplex: FISTA warm start,
        # then an active-set least-squares polish for machine accuracy
        V = self.vertices
        k = V.shape[0]
        if k == 1:
            return np.array([1.0])
        G = V @ V.T
        b = V @ x
        L = max(float(np.max(np.linalg.eigvalsh(G))), 1e-12)
        lam = np.full(k, 1.0 / k)
        y = lam.copy()
        t = 1.0
        for _ in range(400):
            lam_new = _simplex_projection(y - (G @ y - b) / L)
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = lam_new + ((t - 1.0) / t_new) * (lam_new - lam)
            lam, t = lam_new, t_new
        best = lam

        def obj(w):
            r = V.T @ w - x
            return 0.5 * float(r @ r)

        active = lam > 1e-10
        if not np.any(active):
            active[int(np.argmax(lam))] = True
        for _ in range(k + 4):
            idx = np.where(active)[0]
            m = len(idx)
            KKT = np.zeros((m + 1, m + 1))
            KKT[:m, :m] = G[np.ix_(idx, idx)]
            KKT[:m, m] = 1.0
            KKT[m, :m] = 1.0
            rhs = np.concatenate([b[idx], [1.0]])
            sol = np.linalg.lstsq(KKT, rhs, rcond=None)[0]
            a = sol[:m]
            if np.min(a) < -1e-12 and m > 1:
                active[idx[int(np.argmin(a))]] = False
                continue
            cand = np.zeros(k)
            cand[idx] = np.maximum(a, 0.0)
            s = cand.sum()
            if s > 0:
                cand /= s
            if obj(cand) <= obj(best):
                best = cand
            break
        return best

    def grid(self, resolution: int) -> np.ndarray:
        # barycentric lattice: weights with common denominator `resolution`
        k = self.vertices.shape[0]
        if k == 1:
            return self.vertices.copy()
        weights = []
        for comp in _compositions(resolution, k):
            weights.append(comp)
        W = np.asarray(weights, dtype=float) / resolution
        return W @ self.vertices

    def grid_size(self, resolution: int) -> int:
        k = self.vertices.shape[0]
        return math.comb(resolution + k - 1, k - 1)

    def __repr__(self) -> str:
        return f"Polytope({self.vertices.tolist()})"


def _compositions(total: int, parts: int):
    # all tuples of nonnegative ints of length `parts` summing to `total`
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in _compositions(total - head, parts - 1):
            yield (head,) + tail


class Singleton(ConvexSet):
    """The one-point set {point}."""

    def __init__(self, point):
        self.point = _freeze(_vec(point, name="point"))
        self.dim = len(self.point)

    def support(self, d) -> ExtReal:
        d = _vec(d, self.dim, "direction")
        return ExtReal(float(self.point @ d))

    def support_point(self, d) -> np.ndarray:
        _vec(d, self.dim, "direction")
        return self.point.copy()

    def project(self, x) -> tuple[np.ndarray, float]:
        x = _vec(x, self.dim, "point")
        return self.point.copy(), float(np.linalg.norm(x - self.point))

    def grid(self, resolution: int) -> np.ndarray:
        return self.point.reshape(1, -1).copy()

    def grid_size(self, resolution: int) -> int:
        return 1

    def __repr__(self) -> str:
        return f"Singleton({self.point.tolist()})"


# ---------------------------------------------------------------------------
# Set algebra needed by the mesh pipeline
# ---------------------------------------------------------------------------


def scale_set(S: ConvexSet, a: float) -> ConvexSet:
    """The scaled set a*S for a >= 0."""
    a = float(a)
    if a < 0:
        raise ValueError("scale_set: factor must be >= 0")
    if isinstance(S, Box):
        return Box(a * S.lower, a * S.upper)
    if isinstance(S, Ball):
        return Ball(a * S.center, a * S.radius)
    if isinstance(S, Polytope):
        return Polytope(a * S.vertices)
    if isinstance(S, Singleton):
        return Singleton(a * S.point)
    raise TypeError(f"scale_set: unsupported set {type(S).__name__}")


def _box_vertices(S: Box) -> np.ndarray:
    if S.dim > 16:
        raise ValueError("box-to-polytope conversion limited to dim <= 16")
    corners = np.stack(
        np.meshgrid(*[(lo, hi) for lo, hi in zip(S.lower, S.upper)], indexing="ij"),
        axis=-1,
    ).reshape(-1, S.dim)
    return corners


def minkowski_sum(S: ConvexSet, T: ConvexSet) -> ConvexSet:
    """The Minkowski sum S + T within the supported variant family.

    Exact combinations: singleton with anything, box+box, ball+ball,
    polytope/box pairs (via vertex sums).  Ball mixed with box or polytope
    has no representative in the variant family and is rejected.
    """
    if S.dim != T.dim:
        raise ValueError("minkowski_sum: dimension mismatch")
    if isinstance(T, Singleton):
        S, T = T, S
    if isinstance(S, Singleton):
        v = S.point
        if isinstance(T, Singleton):
            return Singleton(v + T.point)
        if isinstance(T, Box):
            return Box(T.lower + v, T.upper + v)
        if isinstance(T, Ball):
            return Ball(T.center + v, T.radius)
        if isinstance(T, Polytope):
            return Polytope(T.vertices + v)
    if isinstance(S, Box) and isinstance(T, Box):
        return Box(S.lower + T.lower, S.upper + T.upper)
    if isinstance(S, Ball) and isinstance(T, Ball):
        return Ball(S.center + T.center, S.radius + T.radius)
    poly_ok = (Box, Polytope)
    if isinstance(S, poly_ok) and isinstance(T, poly_ok):
        VS = S.vertices if isinstance(S, Polytope) else _box_vertices(S)
        VT = T.vertices if isinstance(T, Polytope) else _box_vertices(T)
        sums = (VS[:, None, :] + VT[None, :, :]).reshape(-1, S.dim)
        return Polytope(sums)
    raise NotImplementedError(
        f"minkowski_sum: {type(S).__name__} + {type(T).__name__} is not "
        "representable in the box/ball/polytope/singleton family"
    )


# ---------------------------------------------------------------------------
# Convex functions
# ---------------------------------------------------------------------------


class ConvexFn:
    """A proper convex function on R^dim."""

    dim: int

    def __call__(self, x) -> ExtReal:
        raise NotImplementedError

    def conjugate(self, p) -> ExtReal:
        raise NotImplementedError(
            f"closed-form conjugate not available for {type(self).__name__}"
        )

    def subgradient(self, x) -> np.ndarray:
        raise NotImplementedError(
            f"subgradient not available for {type(self).__name__}"
        )


class Affine(ConvexFn):
    """x -> <c, x> + b."""

    def __init__(self, c, b: float = 0.0):
        self.c = _freeze(_vec(c, name="c"))
        self.b = float(b)
        self.dim = len(self.c)

    def __call__(self, x) -> ExtReal:
        x = _vec(x, self.dim, "x")
        return ExtReal(float(self.c @ x) + self.b)

    def conjugate(self, p) -> ExtReal:
        p = _vec(p, self.dim, "p")
        if np.max(np.abs(p - self.c), initial=0.0) <= EQ_TOL:
            return ExtReal(-self.b)
        return PLUS_INF

    def subgradient(self, x) -> np.ndarray:
        _vec(x, self.dim, "x")
        return self.c.copy()

    def __repr__(self) -> str:
        return f"Affine({self.c.tolist()}, {self.b})"


class Quadratic(ConvexFn):
    """x -> 0.5 <x, P x> + <c, x> + b with P symmetric positive semidefinite."""

    def __init__(self, P, c, b: float = 0.0):
        P = np.asarray(P, dtype=float)
        self.c = _freeze(_vec(c, name="c"))
        n = len(self.c)
        if P.shape != (n, n):
            raise ValueError(f"Quadratic: P must be {n}x{n}")
        scale = max(1.0, float(np.max(np.abs(P))))
        if np.max(np.abs(P - P.T)) > EQ_TOL * scale:
            raise ValueError("Quadratic: P must be symmetric")
        P = 0.5 * (P + P.T)
        # positive-semidefiniteness via a jittered Cholesky attempt
        try:
            np.linalg.cholesky(P + 1e-10 * scale * np.eye(n))
        except np.linalg.LinAlgError:
            raise ValueError("Quadratic: P must be positive semidefinite") from None
        self.P = _freeze(P)
        self.b = float(b)
        self.dim = n
        try:
            np.linalg.cholesky(P)
            self._definite = True
        except np.linalg.LinAlgError:
            self._definite = False

    def __call__(self, x) -> ExtReal:
        x = _vec(x, self.dim, "x")
        return ExtReal(0.5 * float(x @ self.P @ x) + float(self.c @ x) + self.b)

    def conjugate(self, p) -> ExtReal:
        p = _vec(p, self.dim, "p")
        w = p - self.c
        if self._definite:
            y = np.linalg.solve(self.P, w)
            return ExtReal(0.5 * float(w @ y) - self.b)
        # singular P: finite only when w lies in range(P)
        y, *_ = np.linalg.lstsq(self.P, w, rcond=None)
        if np.linalg.norm(self.P @ y - w) > 1e-8 * (1.0 + np.linalg.norm(w)):
            return PLUS_INF
        return ExtReal(0.5 * float(w @ y) - self.b)

    def subgradient(self, x) -> np.ndarray:
        x = _vec(x, self.dim, "x")
        return self.P @ x + self.c

    def __repr__(self) -> str:
        return f"Quadratic({self.P.tolist()}, {self.c.tolist()}, {self.b})"


class CoordinateSelect(ConvexFn):
    """x -> sum of the coordinates listed in `indices`."""

    def __init__(self, indices: Iterable[int], dim: int):
        idx = sorted(set(int(i) for i in indices))
        if any(i < 0 or i >= dim for i in idx):
            raise ValueError("CoordinateSelect: index out of range")
        self.indices = tuple(idx)
        self.dim = int(dim)
        w = np.zeros(self.dim)
        w[list(idx)] = 1.0
        self.weights = _freeze(w)

    def __call__(self, x) -> ExtReal:
        x = _vec(x, self.dim, "x")
        return ExtReal(float(self.weights @ x))

    def conjugate(self, p) -> ExtReal:
        p = _vec(p, self.dim, "p")
        if np.max(np.abs(p - self.weights), initial=0.0) <= EQ_TOL:
            return ExtReal(0.0)
        return PLUS_INF

    def subgradient(self, x) -> np.ndarray:
        _vec(x, self.dim, "x")
        return self.weights.copy()

    def as_affine(self) -> Affine:
        return Affine(self.weights, 0.0)

    def __repr__(self) -> str:
        return f"CoordinateSelect({list(self.indices)}, {self.dim})"


class NormOne(ConvexFn):
    """x -> ||x||_1; conjugate is the indicator of the unit sup-norm ball."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def __call__(self, x) -> ExtReal:
        x = _vec(x, self.dim, "x")
        return ExtReal(float(np.sum(np.abs(x))))

    def conjugate(self, p) -> ExtReal:
        p = _vec(p, self.dim, "p")
        if np.max(np.abs(p), initial=0.0) <= 1.0 + EQ_TOL:
            return ExtReal(0.0)
        return PLUS_INF

    def subgradient(self, x) -> np.ndarray:
        x = _vec(x, self.dim, "x")
        # canonical minimal-norm selection: 0 on the kink
        g = np.sign(x)
        g[np.abs(x) <= TIE_TOL] = 0.0
        return g

    def __repr__(self) -> str:
        return f"NormOne({self.dim})"


class HalfSquaredNorm(ConvexFn):
    """x -> 0.5 ||x||^2; self-conjugate."""

    def __init__(self, dim: int):
        self.dim = int(dim)

    def __call__(self, x) -> ExtReal:
        x = _vec(x, self.dim, "x")
        return ExtReal(0.5 * float(x @ x))

    def conjugate(self, p) -> ExtReal:
        p = _vec(p, self.dim, "p")
        return ExtReal(0.5 * float(p @ p))

    def subgradient(self, x) -> np.ndarray:
        return _vec(x, self.dim, "x").copy()

    def __repr__(self) -> str:
        return f"HalfSquaredNorm({self.dim})"


class Sampled(ConvexFn):
    """Finite tabulation (points, values) used as a numeric oracle.

    Evaluation interpolates linearly in one dimension and matches the
    nearest tabulated point (within tolerance) otherwise; off the table the
    value is +inf.  Conjugation goes through lf_numeric.
    """

    def __init__(self, points, values):
        P = np.asarray(points, dtype=float)
        if P.ndim == 1:
            P = P.reshape(-1, 1)
        v = np.asarray(values, dtype=float).reshape(-1)
        if P.shape[0] == 0:
            raise ValueError("Sampled: empty grid")
        if P.shape[0] != v.shape[0]:
            raise ValueError("Sampled: points/values length mismatch")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(v))):
            raise ValueError("Sampled: values must be finite")
        if P.shape[1] == 1:
            order = np.argsort(P[:, 0])
            P, v = P[order], v[order]
        self.points = _freeze(P)
        self.values = _freeze(v)
        self.dim = P.shape[1]

    def __call__(self, x) -> ExtReal:
        x = _vec(x, self.dim, "x")
        if self.dim == 1:
            t = x[0]
            xs = self.points[:, 0]
            if t < xs[0] - EQ_TOL or t > xs[-1] + EQ_TOL:
                return PLUS_INF
            return ExtReal(float(np.interp(t, xs, self.values)))
        d2 = np.sum((self.points - x) ** 2, axis=1)
        i = int(np.argmin(d2))
        if d2[i] > EQ_TOL**2:
            return PLUS_INF
        return ExtReal(float(self.values[i]))

    def __repr__(self) -> str:
        return f"Sampled(<{len(self.values)} points, dim {self.dim}>)"


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def support(S: ConvexSet, d) -> ExtReal:
    """Support value sup_{x in S} <x, d>."""
    return S.support(d)


def project(S: ConvexSet, x) -> tuple[np.ndarray, float]:
    """Euclidean projection onto S: (point, distance)."""
    return S.project(x)


def conjugate(f: ConvexFn, p) -> ExtReal:
    """Closed-form Legendre-Fenchel conjugate f*(p).

    Sampled variants have no closed form; use lf_numeric for them.
    """
    if isinstance(f, Sampled):
        raise TypeError("conjugate: sampled variants go through lf_numeric")
    return f.conjugate(p)


def lf_numeric(f: Sampled, p) -> ExtReal:
    """Grid conjugate max_i <x_i, p> - f(x_i).

    A lower bound of the true conjugate that converges as the grid refines.
    """
    if not isinstance(f, Sampled):
        raise TypeError("lf_numeric: expected a sampled function")
    p = _vec(p, f.dim, "p")
    return ExtReal(float(np.max(f.points @ p - f.values)))


def infconv_numeric(f: ConvexFn, g: ConvexFn, u, grid: tuple[float, float, int]) -> ExtReal:
    """Grid infimal convolution min over splits u1 + u2 = u of f(u1) + g(u2).

    `grid` = (lo, hi, count) bounds the u1 search box per coordinate.
    """
    if f.dim != g.dim:
        raise ValueError("infconv_numeric: dimension mismatch")
    u = _vec(u, f.dim, "u")
    lo, hi, count = float(grid[0]), float(grid[1]), int(grid[2])
    if count < 1:
        raise ValueError("infconv_numeric: empty grid")
    if count**f.dim > 10**7:
        raise ValueError("infconv_numeric: grid too large")
    axes = [np.linspace(lo, hi, count)] * f.dim
    mesh = np.meshgrid(*axes, indexing="ij")
    U1 = np.stack([m.reshape(-1) for m in mesh], axis=1)
    vals = eval_batch(f, U1) + eval_batch(g, u - U1)
    best = float(np.min(vals))
    return PLUS_INF if math.isinf(best) else ExtReal(best)


def fenchel_residual(f: ConvexFn, x, p) -> ExtReal:
    """Fenchel-Young residual f(x) + f*(p) - <p, x> >= 0.

    +inf when either f(x) or f*(p) is +inf (reported, not an error).
    Residual below tolerance certifies p in the subdifferential of f at x.
    """
    x = _vec(x, f.dim, "x")
    p = _vec(p, f.dim, "p")
    fx = f(x)
    fstar = lf_numeric(f, p) if isinstance(f, Sampled) else f.conjugate(p)
    if not (fx.is_finite and fstar.is_finite):
        return PLUS_INF
    return ExtReal(float(fx) + float(fstar) - float(p @ x))


def subgradient(f: ConvexFn, x) -> np.ndarray:
    """One element of the subdifferential of f at x (gradient when smooth)."""
    return f.subgradient(x)


def support_attainment_residual(S: ConvexSet, x, d, tol: float = 1e-8) -> ExtReal:
    """Attainment gap W_S(d) - <d, x> >= 0 for x in S.

    Zero (within tolerance) certifies that x attains the support of S in
    direction d.  Raises if x is not in S beyond `tol`.
    """
    x = _vec(x, S.dim, "x")
    d = _vec(d, S.dim, "d")
    _, dist = S.project(x)
    if dist > tol:
        raise ValueError(f"support_attainment_residual: x is not in the set (distance {dist:.3e})")
    v = float(S.support(d)) - float(d @ x)
    return ExtReal(max(v, 0.0))


def compose_linear(f: ConvexFn, A) -> ConvexFn:
    """The composition x -> f(A x) within the closed-form variant family.

    Supported for affine, quadratic, half-squared-norm, and coordinate
    selection (which lowers to affine).  Norm and sampled variants are not
    closed under linear composition here.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != f.dim:
        raise ValueError("compose_linear: matrix shape mismatch")
    if isinstance(f, CoordinateSelect):
        f = f.as_affine()
    if isinstance(f, Affine):
        return Affine(A.T @ f.c, f.b)
    if isinstance(f, HalfSquaredNorm):
        return Quadratic(A.T @ A, np.zeros(A.shape[1]), 0.0)
    if isinstance(f, Quadratic):
        return Quadratic(A.T @ f.P @ A, A.T @ f.c, f.b)
    raise NotImplementedError(
        f"compose_linear: {type(f).__name__} is not closed under linear composition"
    )


# ---------------------------------------------------------------------------
# Batch helpers (vectorized closed forms; used by the oracles)
# ---------------------------------------------------------------------------


def eval_batch(f: ConvexFn, X: np.ndarray) -> np.ndarray:
    """f evaluated on each row of X; +inf marks points outside dom f."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != f.dim:
        raise ValueError("eval_batch: shape mismatch")
    if isinstance(f, Affine):
        return X @ f.c + f.b
    if isinstance(f, CoordinateSelect):
        return X @ f.weights
    if isinstance(f, Quadratic):
        return 0.5 * np.einsum("ij,jk,ik->i", X, f.P, X) + X @ f.c + f.b
    if isinstance(f, HalfSquaredNorm):
        return 0.5 * np.einsum("ij,ij->i", X, X)
    if isinstance(f, NormOne):
        return np.sum(np.abs(X), axis=1)
    if isinstance(f, Sampled):
        return np.array([float(f(row)) for row in X])
    raise TypeError(f"eval_batch: unsupported variant {type(f).__name__}")


def conjugate_batch(f: ConvexFn, P: np.ndarray) -> np.ndarray:
    """f* evaluated on each row of P; +inf marks infeasible dual points."""
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[1] != f.dim:
        raise ValueError("conjugate_batch: shape mismatch")
    m = P.shape[0]
    if isinstance(f, (Affine, CoordinateSelect)):
        c = f.c if isinstance(f, Affine) else f.weights
        b = f.b if isinstance(f, Affine) else 0.0
        out = np.full(m, np.inf)
        ok = np.max(np.abs(P - c), axis=1) <= EQ_TOL
        out[ok] = -b
        return out
    if isinstance(f, HalfSquaredNorm):
        return 0.5 * np.einsum("ij,ij->i", P, P)
    if isinstance(f, NormOne):
        out = np.full(m, np.inf)
        out[np.max(np.abs(P), axis=1) <= 1.0 + EQ_TOL] = 0.0
        return out
    if isinstance(f, Quadratic):
        return np.array([float(f.conjugate(row)) for row in P])
    raise TypeError(f"conjugate_batch: unsupported variant {type(f).__name__}")


def support_batch(S: ConvexSet, D: np.ndarray) -> np.ndarray:
    """W_S evaluated on each row of D."""
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[1] != S.dim:
        raise ValueError("support_batch: shape mismatch")
    if isinstance(S, Box):
        return np.sum(np.where(D >= 0.0, S.upper, S.lower) * D, axis=1)
    if isinstance(S, Ball):
        return D @ S.center + S.radius * np.linalg.norm(D, axis=1)
    if isinstance(S, Singleton):
        return D @ S.point
    if isinstance(S, Polytope):
        return np.max(D @ S.vertices.T, axis=1)
    raise TypeError(f"support_batch: unsupported variant {type(S).__name__}")

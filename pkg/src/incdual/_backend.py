"""Backend selection for the enumeration kernel.

The compiled extension is preferred when it imported successfully and the
terminal cost lowers to one of its supported kinds; otherwise the numpy
fallback runs.  Both walk the identical flat index order, so results agree
value-for-value and index-for-index.
"""

from __future__ import annotations

import numpy as np

from . import _enumpy
from .convex_kernel import (
    Affine,
    ConvexFn,
    CoordinateSelect,
    HalfSquaredNorm,
    NormOne,
    Quadratic,
)

try:
    from . import _enumcore

    HAVE_COMPILED = True
except ImportError:  # extension build skipped or failed
    _enumcore = None
    HAVE_COMPILED = False

KIND_AFFINE = 0
KIND_QUADRATIC = 1
KIND_NORM1 = 2
KIND_HALFSQ = 3


def active_backend() -> str:
    return "compiled" if HAVE_COMPILED else "numpy"


def _lower_phi(phi: ConvexFn):
    """(kind, c, P, b) for the compiled kernel, or None when unsupported."""
    m = phi.dim
    c = np.zeros(m)
    P = np.zeros((m, m))
    if isinstance(phi, CoordinateSelect):
        return KIND_AFFINE, phi.weights.copy(), P, 0.0
    if isinstance(phi, Affine):
        return KIND_AFFINE, phi.c.copy(), P, phi.b
    if isinstance(phi, Quadratic):
        return KIND_QUADRATIC, phi.c.copy(), phi.P.copy(), phi.b
    if isinstance(phi, NormOne):
        return KIND_NORM1, c, P, 0.0
    if isinstance(phi, HalfSquaredNorm):
        return KIND_HALFSQ, c, P, 0.0
    return None


def enumerate_primal(
    G0: np.ndarray,
    G1: np.ndarray,
    GU: np.ndarray,
    A0: np.ndarray,
    A1: np.ndarray,
    B: np.ndarray,
    N: int,
    phi: ConvexFn,
    force: str | None = None,
) -> tuple[float, int]:
    """Minimum terminal value over all grid combos and its flat index.

    `force` pins the backend to "compiled" or "numpy" (for benchmarks and
    agreement tests).
    """
    lowered = _lower_phi(phi)
    if force == "compiled":
        if not HAVE_COMPILED:
            raise RuntimeError("compiled backend is not available")
        if lowered is None:
            raise RuntimeError(f"compiled backend does not support {type(phi).__name__}")
        choice = "compiled"
    elif force == "numpy":
        choice = "numpy"
    elif force is None:
        choice = "compiled" if (HAVE_COMPILED and lowered is not None) else "numpy"
    else:
        raise ValueError(f"unknown backend {force!r}")

    # typed memoryviews need writable buffers, so thaw frozen inputs
    prep = []
    for a in (G0, G1, GU, A0, A1, B):
        a = np.ascontiguousarray(a, dtype=float)
        if not a.flags.writeable:
            a = a.copy()
        prep.append(a)
    if choice == "compiled":
        kind, c, P, b = lowered
        val, idx = _enumcore.enumerate_semilinear(*prep, int(N), kind, c, P, b)
        return float(val), int(idx)
    return _enumpy.enumerate_semilinear(*prep, int(N), phi)

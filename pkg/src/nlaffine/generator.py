"""Classical affine generator and its worst-case (sup over a parameter set)
version, evaluated on callables with supplied derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import (
    PSD_TOL,
    WEIGHT_TOL,
    AffineParameter,
    AtomicLevyMeasure,
    DimensionError,
    ParameterSet,
    StateSpace,
    Triplet,
    TruncationFunction,
    hat_triplet_at,
    min_eigenvalue,
    triplet_at,
)


@dataclass(frozen=True)
class TestFunction:
    """Scalar function with explicit gradient and Hessian callables."""

    name: str
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    hessian: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x) -> float:
        return float(self.value(np.atleast_1d(np.asarray(x, dtype=float))))


class GeneratorMode:
    """standard: affine coefficients with the state-space indicator.
    hat: drift affine, diffusion affine in the positive part, constant jump
    measure; forces the unit-ball truncation."""

    __slots__ = ("kind", "space")

    def __init__(self, kind: str, space: StateSpace | None = None):
        if kind not in ("standard", "hat"):
            raise ValueError("mode kind must be 'standard' or 'hat'")
        if kind == "standard" and space is None:
            raise ValueError("standard mode needs a state space")
        self.kind = kind
        self.space = space

    @classmethod
    def standard(cls, space: StateSpace) -> "GeneratorMode":
        return cls("standard", space)

    @classmethod
    def hat(cls) -> "GeneratorMode":
        return cls("hat")

    @property
    def is_hat(self) -> bool:
        return self.kind == "hat"

    def truncation(self, h: TruncationFunction | None) -> TruncationFunction:
        if self.is_hat:
            return TruncationFunction(1.0)
        return h if h is not None else TruncationFunction(1.0)

    def triplet(self, theta: AffineParameter, y) -> Triplet:
        if self.is_hat:
            return hat_triplet_at(theta, y)
        return triplet_at(theta, y, self.space)

    def __repr__(self) -> str:
        return f"GeneratorMode({self.kind})"


def jump_integral(k: AtomicLevyMeasure, f: TestFunction, x,
                  h: TruncationFunction) -> float:
    """sum_i w_i [f(x + z_i) - f(x) - grad f(x) . h(z_i)], an exact finite
    sum for atomic measures."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if k.dim != x.shape[0]:
        raise DimensionError("jump measure dimension mismatch")
    if k.is_empty():
        return 0.0
    fx = f(x)
    grad = np.asarray(f.gradient(x), dtype=float)
    total = 0.0
    for z, w in zip(k.atoms, k.weights):
        total += w * (f(x + z) - fx - float(grad @ h(z)))
    return total


def generator_value(triplet: Triplet, f: TestFunction, x,
                    h: TruncationFunction) -> float:
    """grad f . b + 0.5 tr[Hess f a] + jump integral."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    grad = np.asarray(f.gradient(x), dtype=float)
    hess = np.asarray(f.hessian(x), dtype=float)
    local = float(grad @ triplet.b) + 0.5 * float(np.trace(hess @ triplet.a))
    return local + jump_integral(triplet.k, f, x, h)


class NoAdmissibleVertexError(RuntimeError):
    pass


def _standard_admissible(t: Triplet) -> bool:
    if min_eigenvalue(t.a) < -PSD_TOL:
        return False
    if t.k.n_atoms and t.k.min_weight() < -WEIGHT_TOL:
        return False
    return True


def worst_case_generator(theta_set: ParameterSet, y, f: TestFunction, x,
                         mode: GeneratorMode,
                         h: TruncationFunction | None = None) -> tuple[float, int]:
    """Maximum of the linear generator over the vertex enumeration, with
    coefficients evaluated at y and derivatives at x.

    In standard mode vertices whose evaluated diffusion is not positive
    semidefinite or whose evaluated jump measure has a negative merged weight
    are excluded (the probabilistic cone restriction).  Ties at the maximum
    resolve to the lowest vertex index.  Returns (value, argmax index).
    """
    h = mode.truncation(h)
    best: float | None = None
    best_idx = -1
    for i, theta in enumerate(theta_set.vertices()):
        t = mode.triplet(theta, y)
        if not mode.is_hat and not _standard_admissible(t):
            continue
        val = generator_value(t, f, x, h)
        if best is None or val > best:
            best, best_idx = val, i
    if best is None:
        raise NoAdmissibleVertexError(
            f"no vertex has admissible coefficients at y = {np.asarray(y)}"
        )
    return best, best_idx


def matrix_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition; eigenvalues in
    [-PSD_TOL, 0) are clipped to zero, anything below raises."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.shape[0] != a.shape[1] or np.max(np.abs(a - a.T)) > 1e-9:
        raise ValueError("matrix_sqrt expects a symmetric matrix")
    vals, vecs = np.linalg.eigh(0.5 * (a + a.T))
    if vals[0] < -PSD_TOL:
        raise ValueError(f"matrix is not PSD (min eigenvalue {vals[0]:.3e})")
    s = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    return 0.5 * (s + s.T)


@dataclass
class LipschitzEstimate:
    constant: float
    pair: tuple[np.ndarray, np.ndarray]
    vertex: int
    blown_up: bool  # exceeded the slope cap, treated as a Lipschitz failure


def sqrt_diffusion_lipschitz(theta_set: ParameterSet, sample_box,
                             n_samples: int = 200, seed: int = 0,
                             slope_cap: float = 1e6) -> LipschitzEstimate:
    """Sampled Lipschitz constant of x -> sqrt of the positive-part diffusion
    map, maximised over vertices and point pairs.

    The pair pool combines uniform draws with geometrically graded offsets
    (down to 1e-14 of the box width) so square-root kinks at coordinate
    hyperplanes and box corners show up as slope blow-up.
    """
    lo = np.atleast_1d(np.asarray(sample_box[0], dtype=float))
    hi = np.atleast_1d(np.asarray(sample_box[1], dtype=float))
    d = lo.shape[0]
    if d != theta_set.dim:
        raise DimensionError("sample box dimension mismatch")
    width = hi - lo
    rng = np.random.default_rng(seed)
    pts = lo + rng.uniform(size=(n_samples, d)) * width
    # graded probes near the corners and near each coordinate zero-plane
    probes = [lo.copy(), hi.copy()]
    for i in range(d):
        scale = width[i] if width[i] > 0 else 1.0
        for k in range(0, 15, 2):
            off = scale * 10.0**-k
            p = lo.copy()
            p[i] = min(lo[i] + off, hi[i])
            probes.append(p)
            if lo[i] < 0.0 < hi[i]:
                q = 0.5 * (lo + hi)
                q[i] = min(10.0**-k * scale, hi[i])
                probes.append(q)
    pts = np.vstack([pts, probes])

    pairs = []
    for i in range(pts.shape[0] - 1):
        pairs.append((pts[i], pts[i + 1]))
    for i in range(pts.shape[0]):
        for axis in range(d):
            scale = width[axis] if width[axis] > 0 else 1.0
            for k in (2, 5, 8, 11, 14):
                q = pts[i].copy()
                q[axis] = min(q[axis] + scale * 10.0**-k, hi[axis])
                if np.any(q != pts[i]):
                    pairs.append((pts[i], q))

    vertices = theta_set.vertices()
    roots: dict[int, dict[bytes, np.ndarray]] = {i: {} for i in range(len(vertices))}

    def root_at(vi: int, x: np.ndarray) -> np.ndarray:
        key = x.tobytes()
        cache = roots[vi]
        if key not in cache:
            a = hat_triplet_at(vertices[vi], x).a
            if min_eigenvalue(a) < -PSD_TOL:
                raise ValueError(
                    f"diffusion map is not PSD at x = {x} (vertex {vi})"
                )
            cache[key] = matrix_sqrt(a)
        return cache[key]

    best = 0.0
    best_pair = (pts[0], pts[0])
    best_vertex = 0
    for vi in range(len(vertices)):
        for x, y in pairs:
            gap = float(np.linalg.norm(x - y))
            if gap == 0.0:
                continue
            diff = root_at(vi, x) - root_at(vi, y)
            slope = float(np.max(np.abs(np.linalg.eigvalsh(diff)))) / gap
            if slope > best:
                best, best_pair, best_vertex = slope, (x, y), vi
    return LipschitzEstimate(
        constant=best,
        pair=best_pair,
        vertex=best_vertex,
        blown_up=best > slope_cap,
    )

"""Explicit monotone finite-difference solver for the worst-case Kolmogorov
equation  d/dt v = sup over the parameter set of the affine generator,
with initial condition v(0, .) = payoff.

Scheme: forward Euler in time; sign-adapted upwind first differences for the
drift, central second differences for the diffusion (plus the sign-adapted
diagonal stencil for the 2-D cross term), and an exact atom sum for the jump
part with linearly interpolated off-grid targets.  The per-atom compensator
is folded into an effective drift, which keeps every jump weight nonnegative
and the whole update monotone under the time-step bound below.

Boundary policy is constant extension; accuracy statements are made on an
interior core a configurable margin away from the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .generator import GeneratorMode, TestFunction
from .params import (
    PSD_TOL,
    WEIGHT_TOL,
    AffineParameter,
    ParameterSet,
    TruncationFunction,
    combined_atom_table,
    growth_bound,
)


class CFLError(RuntimeError):
    pass


class NonFiniteError(RuntimeError):
    pass


class Grid:
    """Uniform rectilinear grid in one or two dimensions."""

    def __init__(self, lower: Sequence[float], upper: Sequence[float],
                 nodes: Sequence[int]):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        nodes = np.atleast_1d(np.asarray(nodes, dtype=int))
        if not (lower.shape == upper.shape == nodes.shape):
            raise ValueError("grid specs disagree on dimension")
        if lower.shape[0] not in (1, 2):
            raise ValueError("grids are supported in one and two dimensions")
        if np.any(nodes < 10):
            raise ValueError("need at least 8 interior nodes per axis")
        if np.any(upper <= lower):
            raise ValueError("grid spacing must be positive")
        self.lower, self.upper = lower, upper
        self.shape = tuple(int(n) for n in nodes)
        self.dx = (upper - lower) / (nodes - 1)
        self.axes = [
            lower[i] + self.dx[i] * np.arange(nodes[i]) for i in range(len(nodes))
        ]

    @classmethod
    def line(cls, lo: float, hi: float, n: int) -> "Grid":
        return cls([lo], [hi], [n])

    @classmethod
    def rect(cls, lo, hi, n) -> "Grid":
        return cls(lo, hi, n)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    def points(self) -> np.ndarray:
        """All nodes as an (n_nodes, d) array, first axis slowest."""
        if self.dim == 1:
            return self.axes[0][:, None]
        X, Y = np.meshgrid(self.axes[0], self.axes[1], indexing="ij")
        return np.column_stack([X.ravel(), Y.ravel()])

    def node_index(self, x, tol: float = 1e-9) -> tuple[int, ...]:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = []
        for i in range(self.dim):
            j = int(round((x[i] - self.lower[i]) / self.dx[i]))
            if j < 0 or j >= self.shape[i] or abs(
                self.lower[i] + j * self.dx[i] - x[i]
            ) > tol * max(1.0, abs(x[i])):
                raise ValueError(f"{x} is not a grid node")
            idx.append(j)
        return tuple(idx)

    def interior_mask(self, margin: float) -> np.ndarray:
        """Boolean mask (grid shape) of nodes at least `margin` from every
        boundary."""
        masks = [
            (ax >= self.lower[i] + margin - 1e-12)
            & (ax <= self.upper[i] - margin + 1e-12)
            for i, ax in enumerate(self.axes)
        ]
        if self.dim == 1:
            return masks[0]
        return masks[0][:, None] & masks[1][None, :]


@dataclass(frozen=True)
class SchemeConfig:
    cfl: float = 0.4                    # safety factor in (0, 1]
    dt: float | None = None             # explicit step; must satisfy the bound
    min_time_steps: int = 256           # accuracy floor for forward Euler
    r_jump: float | None = None         # interior-core margin; default: max atom size
    boundary: str = "constant"          # constant extension is the only policy

    def __post_init__(self):
        if not 0.0 < self.cfl <= 1.0:
            raise ValueError("cfl safety factor must lie in (0, 1]")
        if self.boundary != "constant":
            raise ValueError("only constant-extension boundaries are shipped")


@dataclass
class ProblemSpec:
    theta_set: ParameterSet
    grid: Grid
    mode: GeneratorMode
    scheme: SchemeConfig
    truncation: TruncationFunction


class ValueSurface:
    """v(t_j, x_i) on the grid, time-major, with solve metadata attached."""

    def __init__(self, problem: ProblemSpec, values: np.ndarray, dt: float,
                 horizon: float, payoff_name: str, argmax_last: np.ndarray,
                 meta: dict):
        self.problem = problem
        self.values = values
        self.dt = dt
        self.horizon = horizon
        self.payoff_name = payoff_name
        self.argmax_last = argmax_last
        self.meta = meta

    @property
    def grid(self) -> Grid:
        return self.problem.grid

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.shape[0])

    def layer(self, t: float) -> np.ndarray:
        j = int(round(t / self.dt))
        if j < 0 or j > self.n_steps or abs(j * self.dt - t) > 1e-9 * max(1.0, t):
            raise ValueError(f"time {t} is not aligned to the surface step {self.dt}")
        return self.values[j]

    def value_at(self, t: float, x, interpolate: bool = False) -> float:
        layer = self.layer(t)
        if not interpolate:
            return float(layer[self.grid.node_index(x)])
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if self.grid.dim == 1:
            return float(np.interp(x[0], self.grid.axes[0], layer))
        from scipy.interpolate import RegularGridInterpolator

        f = RegularGridInterpolator(self.grid.axes, layer, bounds_error=True)
        return float(f(x)[0])

    def interior_mask(self, extra_margin: float = 0.0) -> np.ndarray:
        margin = max(self.meta["r_jump"], 10.0 * float(np.max(self.grid.dx)))
        return self.grid.interior_mask(margin + extra_margin)

    def to_csv(self, path) -> None:
        """Rows t,x1[,x2],v over all space-time nodes, 17 significant digits,
        LF line endings, stable node order (x1 outer, x2 inner)."""
        pts = self.grid.points()
        cols = ["t", "x1", "v"] if self.grid.dim == 1 else ["t", "x1", "x2", "v"]
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(cols) + "\n")
            for j in range(self.values.shape[0]):
                t = j * self.dt
                flat = self.values[j].ravel()
                for p, v in zip(pts, flat):
                    coords = ",".join("%.17g" % c for c in p)
                    fh.write("%.17g,%s,%.17g\n" % (t, coords, v))


# ---------------------------------------------------------------------------
# vertex coefficient tables on the grid


class _VertexTables:
    """Per-vertex coefficients evaluated on every node, with the jump
    compensator folded into the effective drift."""

    def __init__(self, theta: AffineParameter, grid: Grid, mode: GeneratorMode,
                 h: TruncationFunction):
        d = grid.dim
        pts = grid.points()
        x = pts  # (n, d)
        if mode.is_hat:
            in_s = np.ones(x.shape[0], dtype=bool)
            xa = np.maximum(x, 0.0)
        else:
            in_s = mode.space.contains_many(x)
            xa = x
        b = theta.beta[0][None, :] + x @ theta.beta[1:]
        a = theta.alpha[0][None, :, :] + np.tensordot(xa, theta.alpha[1:], axes=(1, 0))
        if mode.is_hat:
            atoms = theta.nu[0].atoms
            w = np.broadcast_to(theta.nu[0].weights[None, :],
                                (x.shape[0], theta.nu[0].n_atoms)).copy()
        else:
            atoms, W = combined_atom_table(theta.nu)
            w = W[None, :, 0] + np.einsum("nd,md->nm", x, W[:, 1:])
        ind = in_s.astype(float)
        b *= ind[:, None]
        a *= ind[:, None, None]
        w *= ind[:, None]
        hz = np.array([h(z) for z in atoms]).reshape(-1, d)
        b_eff = b - w @ hz
        # admissibility: PSD diffusion and nonnegative merged jump weights
        if d == 1:
            adm = a[:, 0, 0] >= -PSD_TOL
        else:
            tr = a[:, 0, 0] + a[:, 1, 1]
            det = a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] ** 2
            mineig = 0.5 * (tr - np.sqrt(np.maximum(tr**2 - 4 * det, 0.0)))
            adm = mineig >= -PSD_TOL
        if w.shape[1]:
            adm &= np.min(w, axis=1) >= -WEIGHT_TOL
        self.in_s = in_s
        self.adm = adm
        self.b_eff = b_eff
        self.w = np.clip(w, 0.0, None)
        self.w[~adm] = 0.0
        self.atoms = atoms
        self.grid = grid

        if d == 1:
            n = grid.shape[0]
            dx = grid.dx[0]
            self.a1 = np.clip(a[:, 0, 0], 0.0, None)
            self.a1[~adm] = 0.0
            off = atoms[:, 0] / dx if atoms.shape[0] else np.zeros(0)
            base = np.floor(off).astype(int)
            self.frac = off - base
            rng = np.arange(n)
            self.idx0 = np.clip(rng[None, :] + base[:, None], 0, n - 1)
            self.idx1 = np.clip(rng[None, :] + base[:, None] + 1, 0, n - 1)
            rate = (
                self.a1 / dx**2
                + np.abs(b_eff[:, 0]) / dx
                + np.sum(self.w, axis=1)
            )
        else:
            nx, ny = grid.shape
            dx, dy = grid.dx
            self.a11 = np.clip(a[:, 0, 0], 0.0, None).reshape(nx, ny)
            self.a22 = np.clip(a[:, 1, 1], 0.0, None).reshape(nx, ny)
            self.a12 = a[:, 0, 1].copy().reshape(nx, ny)
            self.a12[~adm.reshape(nx, ny)] = 0.0
            cross = np.abs(self.a12) / (dx * dy)
            dom = np.minimum(self.a11 / dx**2 - cross, self.a22 / dy**2 - cross)
            if np.any(dom[adm.reshape(nx, ny)] < -1e-9):
                raise ValueError(
                    "cross-diffusion exceeds the diagonal terms; the 2-D "
                    "stencil cannot stay monotone on this problem"
                )
            ix = np.arange(nx)
            iy = np.arange(ny)
            offs = atoms / grid.dx[None, :] if atoms.shape[0] else np.zeros((0, 2))
            bx = np.floor(offs[:, 0]).astype(int)
            by = np.floor(offs[:, 1]).astype(int)
            self.fx = offs[:, 0] - bx
            self.fy = offs[:, 1] - by
            self.jx0 = [np.clip(ix + b, 0, nx - 1) for b in bx]
            self.jx1 = [np.clip(ix + b + 1, 0, nx - 1) for b in bx]
            self.jy0 = [np.clip(iy + b, 0, ny - 1) for b in by]
            self.jy1 = [np.clip(iy + b + 1, 0, ny - 1) for b in by]
            rate = (
                self.a11.ravel() / dx**2
                + self.a22.ravel() / dy**2
                - cross.ravel()
                + np.abs(b_eff[:, 0]) / dx
                + np.abs(b_eff[:, 1]) / dy
                + np.sum(self.w, axis=1)
            )
        rate[~adm] = 0.0
        rate[~in_s] = 0.0
        self.rate = rate

    def increment(self, v: np.ndarray) -> np.ndarray:
        if self.grid.dim == 1:
            return self._increment_1d(v)
        return self._increment_2d(v)

    def _increment_1d(self, v: np.ndarray) -> np.ndarray:
        dx = self.grid.dx[0]
        p = np.empty(v.shape[0] + 2)
        p[1:-1] = v
        p[0] = v[0]
        p[-1] = v[-1]
        up = p[2:]
        dn = p[:-2]
        b = self.b_eff[:, 0]
        inc = (
            np.maximum(b, 0.0) * (up - v) / dx
            + np.minimum(b, 0.0) * (v - dn) / dx
            + 0.5 * self.a1 * (up - 2.0 * v + dn) / dx**2
        )
        if self.atoms.shape[0]:
            for j in range(self.atoms.shape[0]):
                target = (1.0 - self.frac[j]) * v[self.idx0[j]] + self.frac[j] * v[self.idx1[j]]
                inc += self.w[:, j] * (target - v)
        out = np.where(self.adm, inc, -np.inf)
        return out

    def _increment_2d(self, v: np.ndarray) -> np.ndarray:
        nx, ny = self.grid.shape
        dx, dy = self.grid.dx
        V = v.reshape(nx, ny)
        p = np.pad(V, 1, mode="edge")
        c = p[1:-1, 1:-1]
        xp = p[2:, 1:-1]
        xm = p[:-2, 1:-1]
        yp = p[1:-1, 2:]
        ym = p[1:-1, :-2]
        pp = p[2:, 2:]
        mm = p[:-2, :-2]
        pm = p[2:, :-2]
        mp = p[:-2, 2:]
        vxx = (xp - 2 * c + xm) / dx**2
        vyy = (yp - 2 * c + ym) / dy**2
        vxy_pos = (pp + mm + 2 * c - xp - xm - yp - ym) / (2 * dx * dy)
        vxy_neg = (xp + xm + yp + ym - pm - mp - 2 * c) / (2 * dx * dy)
        vxy = np.where(self.a12 >= 0.0, vxy_pos, vxy_neg)
        b1 = self.b_eff[:, 0].reshape(nx, ny)
        b2 = self.b_eff[:, 1].reshape(nx, ny)
        inc = (
            np.maximum(b1, 0.0) * (xp - c) / dx
            + np.minimum(b1, 0.0) * (c - xm) / dx
            + np.maximum(b2, 0.0) * (yp - c) / dy
            + np.minimum(b2, 0.0) * (c - ym) / dy
            + 0.5 * (self.a11 * vxx + self.a22 * vyy)
            + self.a12 * vxy
        )
        inc = inc.ravel()
        if self.atoms.shape[0]:
            flat = V
            for j in range(self.atoms.shape[0]):
                fx, fy = self.fx[j], self.fy[j]
                t = (
                    (1 - fx) * (1 - fy) * flat[np.ix_(self.jx0[j], self.jy0[j])]
                    + fx * (1 - fy) * flat[np.ix_(self.jx1[j], self.jy0[j])]
                    + (1 - fx) * fy * flat[np.ix_(self.jx0[j], self.jy1[j])]
                    + fx * fy * flat[np.ix_(self.jx1[j], self.jy1[j])]
                )
                inc += self.w[:, j] * (t.ravel() - v)
        return np.where(self.adm, inc, -np.inf)


def default_jump_radius(theta_set: ParameterSet) -> float:
    norms = [
        float(np.linalg.norm(z))
        for theta in theta_set.vertices()
        for m in theta.nu
        for z in m.atoms
    ]
    return max(norms) if norms else 0.0


def solve(theta_set: ParameterSet, grid: Grid, payoff: TestFunction | None,
          horizon: float, mode: GeneratorMode,
          scheme: SchemeConfig | None = None,
          truncation: TruncationFunction | None = None,
          payoff_values: np.ndarray | None = None,
          payoff_name: str | None = None) -> ValueSurface:
    """March the explicit scheme from the payoff to the horizon.

    The step satisfies  dt * (diffusion + drift + jump rate) <= cfl  at every
    admissible node/vertex pair, which keeps the update monotone and implies
    the per-mechanism bounds dt <= cfl * min(dx^2 / a, dx / |b|, 1 / mass).
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    scheme = scheme or SchemeConfig()
    h = mode.truncation(truncation)
    if not mode.is_hat and mode.space.dim != grid.dim:
        raise ValueError("state space and grid dimensions differ")

    tables = [_VertexTables(t, grid, mode, h) for t in theta_set.vertices()]
    in_s = tables[0].in_s
    any_adm = np.zeros(grid.n_nodes, dtype=bool)
    for tab in tables:
        any_adm |= tab.adm
    if np.any(in_s & ~any_adm):
        bad = grid.points()[in_s & ~any_adm][0]
        raise ValueError(f"no admissible vertex at state {bad}")

    max_rate = max(float(np.max(tab.rate)) for tab in tables)
    stable_dt = scheme.cfl / max_rate if max_rate > 0 else math.inf
    if scheme.dt is not None:
        if scheme.dt > stable_dt * (1 + 1e-12):
            raise CFLError(
                f"requested dt {scheme.dt} violates the stability bound "
                f"{stable_dt:.6g} (cfl {scheme.cfl}, max rate {max_rate:.6g})"
            )
        n_steps = max(1, math.ceil(horizon / scheme.dt - 1e-12))
    else:
        n_steps = max(
            scheme.min_time_steps,
            math.ceil(horizon / stable_dt - 1e-12) if np.isfinite(stable_dt) else 1,
        )
    if horizon == 0:
        n_steps = 0
    dt = horizon / n_steps if n_steps else 0.0

    if payoff_values is None:
        if payoff is None:
            raise ValueError("either a payoff or payoff_values is required")
        pts = grid.points()
        v0 = np.array([payoff.value(p) for p in pts], dtype=float)
        payoff_name = payoff_name or payoff.name
    else:
        v0 = np.asarray(payoff_values, dtype=float).ravel().copy()
        if v0.shape[0] != grid.n_nodes:
            raise ValueError("payoff_values does not match the grid")
        payoff_name = payoff_name or "restart"
    if not np.all(np.isfinite(v0)):
        raise NonFiniteError("payoff is not finite on the grid")

    values = np.empty((n_steps + 1, grid.n_nodes))
    values[0] = v0
    argmax = np.zeros(grid.n_nodes, dtype=int)
    v = v0.copy()
    frozen = ~in_s
    inc = np.empty((len(tables), grid.n_nodes))
    for step in range(n_steps):
        for k, tab in enumerate(tables):
            inc[k] = tab.increment(v)
        best = np.max(inc, axis=0)
        argmax = np.argmax(inc, axis=0)
        new = v + dt * best
        new[frozen] = v[frozen]
        if not np.all(np.isfinite(new)):
            raise NonFiniteError(f"non-finite value produced at step {step + 1}")
        v = new
        values[step + 1] = v

    r_jump = scheme.r_jump if scheme.r_jump is not None else default_jump_radius(theta_set)
    meta = {
        "growth_bound": growth_bound(theta_set),
        "stable_dt": stable_dt,
        "dt": dt,
        "n_steps": n_steps,
        "max_rate": max_rate,
        "cfl": scheme.cfl,
        "r_jump": r_jump,
        "mode": mode.kind,
    }
    problem = ProblemSpec(theta_set, grid, mode, scheme, h)
    shape = (n_steps + 1,) + grid.shape
    return ValueSurface(
        problem,
        values.reshape(shape),
        dt,
        horizon,
        payoff_name,
        argmax.reshape(grid.shape),
        meta,
    )


def dpp_gap(surface: ValueSurface, split: float,
            extra_margin: float = 0.0) -> float:
    """Restart consistency: solve again over [0, split] from the stored layer
    at time (horizon - split) and compare with the stored terminal layer on
    the interior core.  The restart re-derives its own step count, so for
    0 < split < horizon this is a genuine two-stage versus one-stage check;
    split = horizon reproduces the identical run and split = 0 is empty.
    """
    if split < 0 or split > surface.horizon + 1e-12:
        raise ValueError("split must lie in [0, horizon]")
    j = int(round(split / surface.dt)) if surface.dt else 0
    if abs(j * surface.dt - split) > 1e-9 * max(1.0, split):
        raise ValueError(f"split {split} is not aligned to the time grid")
    if j == 0:
        return 0.0
    p = surface.problem
    start = surface.values[surface.n_steps - j]
    restart = solve(
        p.theta_set, p.grid, None, split, p.mode, p.scheme,
        truncation=p.truncation, payoff_values=start,
        payoff_name=f"restart[{surface.payoff_name}]",
    )
    mask = surface.interior_mask(extra_margin)
    gap = np.abs(restart.values[-1] - surface.values[-1])
    return float(np.max(gap[mask]))


@dataclass
class HolderReport:
    exponent: float | None
    residual: float | None
    flat: bool
    n_points: int
    deltas: list = field(default_factory=list)
    diffs: list = field(default_factory=list)


def holder_exponent(surface: ValueSurface, x, min_steps: int = 8) -> HolderReport:
    """Least-squares slope of log |v(delta, x) - v(0, x)| against log delta
    over dyadic deltas.  Deltas below `min_steps` time steps are excluded
    (they probe the discretisation, not the solution)."""
    if surface.n_steps < 10:
        raise ValueError("need at least 10 time nodes")
    idx = surface.grid.node_index(x) if not isinstance(x, tuple) else x
    series = surface.values[(slice(None),) + idx]
    js = []
    j = surface.n_steps
    while j >= max(min_steps, 1):
        js.append(j)
        j //= 2
    deltas = np.array([j * surface.dt for j in js])
    diffs = np.array([abs(series[j] - series[0]) for j in js])
    keep = diffs > 1e-12
    if not np.any(keep):
        return HolderReport(None, None, True, 0)
    ld = np.log(deltas[keep])
    lv = np.log(diffs[keep])
    if ld.shape[0] < 2:
        return HolderReport(None, None, True, int(ld.shape[0]))
    coef, res, *_ = np.polyfit(ld, lv, 1, full=True)
    residual = float(res[0]) if len(res) else 0.0
    return HolderReport(
        exponent=float(coef[0]),
        residual=residual,
        flat=False,
        n_points=int(ld.shape[0]),
        deltas=deltas[keep].tolist(),
        diffs=diffs[keep].tolist(),
    )

"""Finite-size-scaling data collapse.

Data ``<S>(L, p)`` is rescaled to ``q = (p - p*) L^(1/nu)`` and
``W = (<S>(p) - <S>(p*)) L^(-gamma/nu)``. The scatter loss compares every
size's piecewise-linear curve against the other sizes' points that fall inside
its q-range, weighted by ``L^(2 gamma/nu)``. Exponents come from a grid search
refined by finite-difference gradient descent.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np


class CollapseError(ValueError):
    """The dataset or fit cannot produce a meaningful collapse."""


class DatasetError(CollapseError):
    """The input dataset itself is malformed (sizes, rates, columns, p*)."""


@dataclass
class CollapseDataset:
    L: np.ndarray
    p: np.ndarray
    s_mean: np.ndarray
    s_err: np.ndarray
    p_star: float
    alpha: float = 1.0

    def __post_init__(self):
        L = np.asarray(self.L, dtype=int)
        p = np.asarray(self.p, dtype=float)
        s = np.asarray(self.s_mean, dtype=float)
        err = np.full(L.shape, np.nan) if self.s_err is None else np.asarray(self.s_err, dtype=float)
        if not (L.shape == p.shape == s.shape == err.shape):
            raise DatasetError("columns must have equal length")
        order = np.lexsort((p, L))
        self.L, self.p, self.s_mean, self.s_err = L[order], p[order], s[order], err[order]
        sizes = self.sizes
        if len(sizes) < 2:
            raise DatasetError("collapse needs at least two system sizes")
        if np.any(p < 0) or np.any(p > 1):
            raise DatasetError("measurement rates must lie in [0, 1]")
        for size in sizes:
            ps = self.p[self.L == size]
            if len(ps) < 4:
                raise DatasetError(f"L={size} has fewer than 4 rates")
            if np.any(np.diff(ps) == 0):
                raise DatasetError(f"L={size} has duplicate rates")
        self.p_star = float(self.p_star)

    @property
    def sizes(self) -> list:
        return sorted(int(v) for v in np.unique(self.L))

    def curve(self, size: int) -> tuple[np.ndarray, np.ndarray]:
        m = self.L == size
        return self.p[m], self.s_mean[m]

    def restrict(self, sizes) -> "CollapseDataset":
        m = np.isin(self.L, list(sizes))
        return CollapseDataset(self.L[m], self.p[m], self.s_mean[m], self.s_err[m], self.p_star, self.alpha)

    def largest(self, count: int = 4) -> "CollapseDataset":
        return self.restrict(self.sizes[-count:])

    def scaled(self, factor: float) -> "CollapseDataset":
        return CollapseDataset(self.L, self.p, self.s_mean * factor, self.s_err * abs(factor), self.p_star, self.alpha)

    @classmethod
    def read_csv(cls, path, p_star: float, alpha: float = 1.0) -> "CollapseDataset":
        """Read ``L, p, s_mean, s_err`` columns (header required, ``s_err`` may be blank)."""
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
        if not rows or not {"L", "p", "s_mean"} <= set(rows[0]):
            raise DatasetError(f"{path}: expected header with columns L, p, s_mean, s_err")
        err = [float(r["s_err"]) if r.get("s_err") not in (None, "") else math.nan for r in rows]
        return cls(
            [int(r["L"]) for r in rows], [float(r["p"]) for r in rows], [float(r["s_mean"]) for r in rows], err, p_star, alpha
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["L", "p", "s_mean", "s_err"])
            for row in zip(self.L, self.p, self.s_mean, self.s_err):
                w.writerow([int(row[0]), repr(float(row[1])), repr(float(row[2])), "" if math.isnan(row[3]) else repr(float(row[3]))])


def value_at(p: np.ndarray, s: np.ndarray, p_star: float) -> float:
    """``s`` at ``p_star``: the sampled value, or linear interpolation."""
    if p_star < p[0] or p_star > p[-1]:
        raise DatasetError(f"p*={p_star} lies outside the sampled range [{p[0]}, {p[-1]}]")
    return float(np.interp(p_star, p, s))


def _smooth3(w: np.ndarray) -> np.ndarray:
    out = w.copy()
    out[1:-1] = (w[:-2] + w[1:-1] + w[2:]) / 3
    return out


def rescale(dataset: CollapseDataset, gamma: float, nu: float, smooth: bool = False) -> dict:
    """Per size, ``(q, W)`` arrays sorted by ``q``."""
    out = {}
    for size in dataset.sizes:
        p, s = dataset.curve(size)
        s_star = value_at(p, s, dataset.p_star)
        q = (p - dataset.p_star) * size ** (1.0 / nu)
        w = (s - s_star) * size ** (-gamma / nu)
        if smooth:
            w = _smooth3(w)
        out[size] = (q, w)
    return out


class Interpolant:
    """Piecewise-linear curve through ``(q, W)`` that refuses to extrapolate."""

    def __init__(self, q, w):
        q = np.asarray(q, dtype=float)
        w = np.asarray(w, dtype=float)
        if len(q) < 2:
            raise ValueError("interpolant needs at least 2 points")
        order = np.argsort(q, kind="stable")
        q, w = q[order], w[order]
        if np.any(np.diff(q) == 0):
            raise ValueError("interpolant needs distinct q values")
        self.q, self.w = q, w

    @property
    def lo(self) -> float:
        return float(self.q[0])

    @property
    def hi(self) -> float:
        return float(self.q[-1])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x < self.lo) or np.any(x > self.hi):
            raise ValueError("extrapolation outside the sampled q-range")
        out = np.interp(x, self.q, self.w)
        return float(out) if out.ndim == 0 else out


def interpolant(points) -> Interpolant:
    q, w = zip(*points)
    return Interpolant(q, w)


def collapse_loss(dataset: CollapseDataset, gamma: float, nu: float, smooth: bool = False) -> float:
    """Scatter of the rescaled data.

    Sum over ordered pairs of distinct sizes ``(L, L')`` of
    ``L^(2 gamma/nu) * sum (f_L(q) - W_L'(q))^2`` over the points ``q`` of
    ``L'`` inside ``[min q_L, max q_L]``.
    """
    curves = rescale(dataset, gamma, nu, smooth)
    total = 0.0
    overlap = False
    for size, (q, w) in curves.items():
        lo, hi = q[0], q[-1]
        weight = size ** (2.0 * gamma / nu)
        for other, (q2, w2) in curves.items():
            if other == size:
                continue
            m = (q2 >= lo) & (q2 <= hi)
            if not m.any():
                continue
            overlap = True
            r = np.interp(q2[m], q, w) - w2[m]
            total += weight * float(np.dot(r, r))
    if not overlap:
        raise CollapseError("no overlapping q-windows between sizes")
    return total


@dataclass
class GridSpec:
    gamma_min: float = 0.25
    gamma_max: float = 4.0
    nu_min: float = 0.25
    nu_max: float = 4.0
    resolution: float = 0.05

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        def axis(lo, hi):
            k = int(round((hi - lo) / self.resolution))
            return lo + self.resolution * np.arange(k + 1)

        return axis(self.gamma_min, self.gamma_max), axis(self.nu_min, self.nu_max)


@dataclass
class DescentSpec:
    step: float = 1e-3
    max_iter: int = 500
    tol: float = 1e-9


@dataclass
class CollapseFit:
    gamma0: float
    nu0: float
    d_gamma_plus: float
    d_gamma_minus: float
    d_nu_plus: float
    d_nu_minus: float
    loss_at_min: float
    p_star_used: float
    epsilon: float = 0.01
    grid: dict = field(default_factory=dict)
    sizes: list = field(default_factory=list)

    @property
    def gamma_err(self) -> float:
        return max(self.d_gamma_plus, self.d_gamma_minus)

    @property
    def nu_err(self) -> float:
        return max(self.d_nu_plus, self.d_nu_minus)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["gamma_err"] = self.gamma_err
        out["nu_err"] = self.nu_err
        return out

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def read_json(cls, path) -> "CollapseFit":
        data = json.loads(Path(path).read_text())
        data.pop("gamma_err", None)
        data.pop("nu_err", None)
        return cls(**data)


def grid_search(dataset: CollapseDataset, grid: GridSpec, smooth: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    gammas, nus = grid.axes()
    losses = np.array([[collapse_loss(dataset, g, n, smooth) for n in nus] for g in gammas])
    return gammas, nus, losses


def _descend(f, x0, bounds, spec: DescentSpec):
    """Gradient descent with central differences and backtracking."""
    x = np.array(x0, dtype=float)
    fx = f(x)
    lo, hi = np.array([b[0] for b in bounds]), np.array([b[1] for b in bounds])
    rate = None
    for _ in range(spec.max_iter):
        grad = np.array([(f(x + spec.step * e) - f(x - spec.step * e)) / (2 * spec.step) for e in np.eye(2)])
        gnorm = np.linalg.norm(grad)
        if gnorm == 0 or not np.isfinite(gnorm):
            break
        if rate is None:
            # first trial step no longer than one grid cell's worth
            rate = 0.05 / gnorm
        moved = False
        while rate * gnorm > spec.tol:
            trial = np.clip(x - rate * grad, lo, hi)
            ft = f(trial)
            if ft < fx:
                x, fx = trial, ft
                rate *= 2.0
                moved = True
                break
            rate *= 0.5
        if not moved:
            break
    return x, fx


def _width(r0: float, r_shift: float, value: float, epsilon: float, fallback: float) -> float:
    if r0 <= 0 or r_shift <= r0:
        return fallback
    return epsilon * abs(value) / math.sqrt(2.0 * math.log(r_shift / r0))


def fit_exponents(
    dataset: CollapseDataset,
    grid: GridSpec | None = None,
    descent: DescentSpec | None = None,
    epsilon: float = 0.01,
    smooth: bool = False,
    refine: bool = True,
) -> CollapseFit:
    """Best-fit ``(gamma, nu)`` with widths from the curvature of the loss.

    Widths use ``eps*x0 / sqrt(2 ln(R(x0 +- eps*x0) / R0))``. When the log ratio
    is undefined (zero loss, or no increase) the grid resolution is reported.
    """
    grid = grid or GridSpec()
    descent = descent or DescentSpec()
    gammas, nus, losses = grid_search(dataset, grid, smooth)
    i, j = np.unravel_index(int(np.argmin(losses)), losses.shape)
    if i in (0, len(gammas) - 1) or j in (0, len(nus) - 1):
        raise CollapseError(
            f"loss minimum on the grid boundary at gamma={gammas[i]:.3g}, nu={nus[j]:.3g}; widen the grid"
        )
    x = np.array([gammas[i], nus[j]])
    r0 = float(losses[i, j])
    if refine and r0 > 0:
        bounds = [(gammas[0], gammas[-1]), (nus[0], nus[-1])]
        x, r0 = _descend(lambda v: collapse_loss(dataset, v[0], v[1], smooth), x, bounds, descent)
    g0, n0 = float(x[0]), float(x[1])
    res = grid.resolution

    def loss(g, n):
        return collapse_loss(dataset, g, n, smooth)

    widths = [
        _width(r0, loss(g0 + epsilon * g0, n0), g0, epsilon, res),
        _width(r0, loss(g0 - epsilon * g0, n0), g0, epsilon, res),
        _width(r0, loss(g0, n0 + epsilon * n0), n0, epsilon, res),
        _width(r0, loss(g0, n0 - epsilon * n0), n0, epsilon, res),
    ]
    return CollapseFit(g0, n0, *widths, float(r0), dataset.p_star, epsilon, asdict(grid), dataset.sizes)


def synthetic_dataset(sizes, ps, gamma, nu, p_star, scaling=np.tanh, s_star=None, noise=0.0, rng=None, alpha=1.0) -> CollapseDataset:
    """Forward-generated data obeying the scaling form exactly (plus optional noise).

    ``S(L, p) = S*(L) + L^(gamma/nu) F((p - p*) L^(1/nu))`` with ``S*(L)`` defaulting
    to ``L / 4``.
    """
    rows = []
    for size in sizes:
        base = size / 4 if s_star is None else s_star
        for p in ps:
            s = base + size ** (gamma / nu) * scaling((p - p_star) * size ** (1 / nu))
            if noise:
                s += rng.normal(0.0, noise)
            rows.append((size, p, s))
    L, p, s = map(np.array, zip(*rows))
    return CollapseDataset(L, p, s, np.full(len(L), noise or np.nan), p_star, alpha)


def estimate_p_star(ps, variances) -> float:
    """Rate at which the entropy variance peaks."""
    return float(np.asarray(ps)[int(np.argmax(variances))])

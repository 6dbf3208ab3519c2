"""Quadrature model of the affine group: H = (0, inf) acting on K = (R, +) by dilation.

K is sampled on a uniform window ``x_j = x0 + j*dx``; H on geometric nodes
``q**m`` for ``|m| <= M`` with multiplicative weight ``ln q``.  Integrals over
K become ``dx``-weighted sums and integrals over H become ``ln q``-weighted
sums carrying ``delta(h_m)``.  Everything here is float.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import fftconvolve

__all__ = [
    "GridSpec",
    "SampledGFunction",
    "SupportError",
    "GridMismatch",
    "bump",
    "gaussian",
    "resample_dilate",
    "delta_estimate",
    "sample",
    "tilde_c",
    "conv_c",
    "rconv_c",
    "lconv_c",
    "tconv_c",
    "involution_c",
    "norm_c",
    "refinement_study",
    "ROUNDOFF_FLOOR",
]

# residuals below this (relative) count as round-off, not discretization error
ROUNDOFF_FLOOR = 1e-12


class SupportError(ValueError):
    pass


class GridMismatch(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    n: int
    x0: float
    dx: float
    q: float = 2.0
    m_max: int = 4
    delta: tuple | None = field(default=None)

    def __post_init__(self):
        if self.n < 2 or self.dx <= 0:
            raise ValueError("need n >= 2 and dx > 0")
        if self.q <= 1:
            raise ValueError("q must exceed 1")
        if self.m_max < 0:
            raise ValueError("M must be nonnegative")
        if self.delta is not None:
            d = np.asarray(self.delta, dtype=float)
            if d.shape != (2 * self.m_max + 1,) or np.any(d <= 0):
                raise ValueError("delta needs one positive value per H-node")
            if abs(d[self.m_max] - 1) > 1e-12:
                raise ValueError("delta(1) must be 1")

    @classmethod
    def window(cls, lo=-8.0, hi=8.0, n=1024, q=2.0, m_max=4):
        return cls(n=n, x0=lo, dx=(hi - lo) / n, q=q, m_max=m_max)

    @property
    def xs(self):
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def exponents(self):
        return np.arange(-self.m_max, self.m_max + 1)

    @property
    def h_nodes(self):
        return self.q ** self.exponents.astype(float)

    @property
    def h_weight(self):
        return math.log(self.q)

    @property
    def origin(self) -> int:
        """Index of the node at x = 0 (convolution needs it on the grid)."""
        s = -self.x0 / self.dx
        if abs(s - round(s)) > 1e-9 or not 0 <= round(s) < self.n:
            raise GridMismatch("x = 0 must be a grid node inside the window")
        return int(round(s))

    def deltas(self):
        if self.delta is None:
            raise ValueError("delta not set; use with_estimated_delta()")
        return np.asarray(self.delta, dtype=float)

    def with_estimated_delta(self):
        est = [delta_estimate(self, h) for h in self.h_nodes]
        est[self.m_max] = 1.0
        return replace(self, delta=tuple(est))

    def refined(self, factor=2):
        return replace(self, n=self.n * factor, dx=self.dx / factor, delta=None)

    def to_dict(self):
        d = {"dx": self.dx, "x0": self.x0, "N": self.n, "q": self.q, "M": self.m_max}
        if self.delta is not None:
            d["delta"] = list(self.delta)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(n=int(d["N"]), x0=float(d["x0"]), dx=float(d["dx"]), q=float(d.get("q", 2.0)),
                   m_max=int(d.get("M", 4)), delta=tuple(d["delta"]) if d.get("delta") is not None else None)


@dataclass(frozen=True, eq=False)
class SampledGFunction:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        shape = (2 * self.grid.m_max + 1, self.grid.n)
        if self.values.shape != shape:
            raise GridMismatch(f"values shape {self.values.shape}, grid needs {shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")

    def __sub__(self, other):
        _same_grid(self, other)
        return SampledGFunction(self.grid, self.values - other.values)


def _same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatch("operands live on different grids")


# ----------------------------------------------------------------- samples
def bump(x, center=0.0, radius=1.0):
    """Smooth compactly supported bump ``exp(-1 / (1 - r^2))``."""
    r = (np.asarray(x, dtype=float) - center) / radius
    out = np.zeros_like(r)
    inside = np.abs(r) < 1
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def gaussian(x, center=0.0, sigma=1.0):
    return np.exp(-((np.asarray(x, dtype=float) - center) ** 2) / (2 * sigma**2))


def sample(grid: GridSpec, fn) -> SampledGFunction:
    """Sample ``fn(h, x)`` on every H-node."""
    rows = [np.asarray(fn(h, grid.xs), dtype=complex) for h in grid.h_nodes]
    return SampledGFunction(grid, np.stack(rows))


def resample_dilate(u, h, grid: GridSpec):
    """``x -> u(x / h)`` by linear interpolation; zero outside the window."""
    if h <= 0:
        raise ValueError("h must be positive")
    u = np.asarray(u)
    p = (grid.xs / h - grid.x0) / grid.dx
    # snap round-off so exact grid hits are not split across cells
    p = np.where(np.abs(p - np.round(p)) < 1e-9, np.round(p), p)
    i = np.floor(p).astype(np.int64)
    frac = p - i
    valid = (p >= 0) & (p <= grid.n - 1)
    i0 = np.clip(i, 0, grid.n - 1)
    i1 = np.clip(i + 1, 0, grid.n - 1)
    out = u[..., i0] * (1 - frac) + u[..., i1] * frac
    return np.where(valid, out, 0)


def _edge_clear(v, cells=2):
    scale = np.abs(v).max()
    if scale == 0:
        return True
    edge = np.concatenate([np.abs(v[..., :cells]).ravel(), np.abs(v[..., -cells:]).ravel()])
    return bool(edge.max() <= 1e-14 * scale)


def delta_estimate(grid: GridSpec, h, test=None) -> float:
    """Ratio of the quadrature mass of a test bump before and after dilation by ``h``.

    ``test`` is an optional callable on the K-nodes; by default a smooth bump
    sized so that both it and its dilation stay two cells clear of the edges.
    """
    k = np.round(math.log(h) / math.log(grid.q))
    if abs(grid.q**k - h) > 1e-9 * max(h, 1):
        raise ValueError(f"h = {h} is not an H-node")
    if abs(k) > grid.m_max:
        raise ValueError(f"h = {h} lies outside the truncated H-grid")
    xs = grid.xs
    if test is None:
        reach = min(-xs[0], xs[-1]) - 2 * grid.dx
        if reach <= 0:
            raise SupportError("window does not contain a neighbourhood of 0")
        u = bump(xs, 0.0, 0.75 * reach / max(h, 1.0))
    else:
        u = np.asarray(test(xs), dtype=float)
    v = resample_dilate(u, h, grid)
    if not (_edge_clear(u) and _edge_clear(v)):
        raise SupportError("test bump support escapes the window")
    return float(u.sum() / v.sum())


# -------------------------------------------------------------- operations
def _h_weights(grid):
    return grid.deltas() * grid.h_weight


def tilde_c(f: SampledGFunction) -> np.ndarray:
    return np.tensordot(_h_weights(f.grid), f.values, axes=(0, 0))


def conv_c(a, b, grid: GridSpec) -> np.ndarray:
    """K-convolution on the window: ``(a * b)(x_i) = dx * sum_j a(x_j) b(x_i - x_j)``."""
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    full = fftconvolve(a, b, axes=-1)
    s = grid.origin
    return grid.dx * full[..., s:s + grid.n]


def rconv_c(f: SampledGFunction, g: SampledGFunction) -> SampledGFunction:
    _same_grid(f, g)
    return SampledGFunction(f.grid, conv_c(f.values, tilde_c(g), f.grid))


def lconv_c(f: SampledGFunction, g: SampledGFunction) -> SampledGFunction:
    _same_grid(f, g)
    return SampledGFunction(f.grid, conv_c(tilde_c(f), g.values, f.grid))


def tconv_c(f: SampledGFunction, g: SampledGFunction) -> SampledGFunction:
    r, l = rconv_c(f, g), lconv_c(f, g)
    return SampledGFunction(f.grid, 0.5 * (r.values + l.values))


def involution_c(f: SampledGFunction) -> SampledGFunction:
    """Row-wise ``conj(f_h(-x))``; K = R is unimodular so there is no weight."""
    g = f.grid
    src = 2 * g.origin - np.arange(g.n)
    ok = (src >= 0) & (src < g.n)
    out = np.zeros_like(f.values)
    out[:, ok] = np.conj(f.values[:, src[ok]])
    return SampledGFunction(g, out)


def norm_c(f, p=1, grid: GridSpec | None = None) -> float:
    """Quadrature L^p norm of a sampled G-function or (with ``grid``) of K-samples."""
    if isinstance(f, SampledGFunction):
        w = _h_weights(f.grid)[:, None] * f.grid.dx
        a = np.abs(f.values)
    else:
        w = grid.dx
        a = np.abs(np.asarray(f))
    if p == np.inf:
        return float(a.max())
    return float(np.sum(w * a**p) ** (1 / p))


# ---------------------------------------------------------- refinement study
def _test_pair(grid):
    """Gaussian test data on every H-node, centred in [-0.5, 0.5] with widths 0.2 to 0.35."""
    m = grid.exponents

    def f(h, x):
        j = int(np.round(math.log(h, grid.q))) + grid.m_max
        return math.exp(-m[j] ** 2 / 8) * gaussian(x, -0.5 + 0.1 * (j % 5), 0.2 + 0.015 * j)

    def g(h, x):
        j = int(np.round(math.log(h, grid.q))) + grid.m_max
        sign = -1 if j % 3 == 1 else 1
        amp = sign * math.exp(-((m[j] - 1) ** 2) / 6) * (1 + 0.5j * (j % 2))
        return amp * gaussian(x, 0.4 - 0.12 * (j % 4), 0.35 - 0.012 * j)

    return f, g


def _analytic_tilde_product(grid, f, g):
    """Closed form of ``tilde f * tilde g`` for the Gaussian pair, with delta(h) = 1/h."""
    xs = grid.xs
    w = grid.h_weight / grid.h_nodes
    out = np.zeros(grid.n, dtype=complex)
    probe = np.array([-1.0, 0.0, 1.0])
    terms = []
    for fn in (f, g):
        row = []
        for h, wt in zip(grid.h_nodes, w):
            # recover (amplitude, centre, sigma) from three samples of a Gaussian
            v = np.asarray(fn(h, probe), dtype=complex)
            la = np.log(np.abs(v))
            curv = la[0] + la[2] - 2 * la[1]
            s2 = -1.0 / curv
            c = s2 * (la[2] - la[0]) / 2
            amp = v[1] / math.exp(-(c**2) / (2 * s2))
            row.append((wt * amp, c, s2))
        terms.append(row)
    for a1, c1, s1 in terms[0]:
        for a2, c2, s2 in terms[1]:
            s = s1 + s2
            out += a1 * a2 * math.sqrt(2 * math.pi * s1 * s2 / s) * np.exp(-((xs - c1 - c2) ** 2) / (2 * s))
    return out


def _rel(diff, ref, grid):
    return norm_c(diff, 1, grid) / max(norm_c(ref, 1, grid), 1e-300)


def _study_level(grid):
    grid = grid.with_estimated_delta()
    f_fn, g_fn = _test_pair(grid)
    f, g = sample(grid, f_fn), sample(grid, g_fn)
    oracle = 1.0 / grid.h_nodes
    res = {}
    res["delta_error"] = float(np.max(np.abs(grid.deltas() - oracle)))
    res["delta_at_2"] = delta_estimate(grid, 2.0) if 1 <= grid.m_max else None
    prod = conv_c(tilde_c(f), tilde_c(g), grid)[0]
    for name, op in (("rconv", rconv_c), ("lconv", lconv_c), ("tconv", tconv_c)):
        fg = op(f, g)
        res[f"projection_{name}"] = _rel(tilde_c(fg) - prod, prod, grid)
        bound = norm_c(f) * norm_c(g)
        res[f"submult_slack_{name}"] = max(0.0, norm_c(fg) - bound) / bound
    truth = _analytic_tilde_product(grid, f_fn, g_fn)
    res["projection_vs_closed_form"] = _rel(tilde_c(tconv_c(f, g)) - truth, truth, grid)
    res["involution_isometry"] = abs(norm_c(involution_c(f)) - norm_c(f)) / norm_c(f)
    u = gaussian(grid.xs, 0.3, 0.5)
    back = resample_dilate(resample_dilate(u, 0.5, grid), 2.0, grid)
    res["resample_round_trip"] = _rel(back - u, u, grid)
    dm = grid.deltas()
    M = grid.m_max
    hom = [abs(dm[M + a] * dm[M + b] - dm[M + a + b]) for a in range(-M, M + 1) for b in range(-M, M + 1) if abs(a + b) <= M]
    res["delta_homomorphism"] = float(max(hom))
    return res


def _halves(series):
    """Each refinement step at least halves the residual, or the residual is already at round-off."""
    return all(b <= a / 2 or b <= ROUNDOFF_FLOOR for a, b in zip(series, series[1:]))


def refinement_study(grid: GridSpec | None = None, levels=3, tol=1e-3):
    """Run the continuum consistency checks on ``levels`` successive halvings of dx."""
    grid = grid or GridSpec.window()
    per_level, g = [], grid
    for _ in range(levels):
        per_level.append({"N": g.n, "dx": g.dx, **_study_level(g)})
        g = g.refined()
    keys = [k for k in per_level[0] if k not in ("N", "dx", "delta_at_2")]
    series = {k: [lvl[k] for lvl in per_level] for k in keys}
    coarse = per_level[0]
    checks = {
        "delta_matches_oracle": abs(coarse["delta_at_2"] - 0.5) <= tol,
        "delta_homomorphism": coarse["delta_homomorphism"] <= tol,
        "projection_identity": all(coarse[f"projection_{n}"] <= tol for n in ("rconv", "lconv", "tconv"))
        and coarse["projection_vs_closed_form"] <= tol,
        "submultiplicativity": all(coarse[f"submult_slack_{n}"] <= tol for n in ("rconv", "lconv", "tconv")),
        "refinement": all(_halves(s) for s in series.values()),
    }
    return {
        "delta_convention": "delta(h) = 1/h (from dk = delta(h) d(hk))",
        "roundoff_floor": ROUNDOFF_FLOOR,
        "levels": per_level,
        "series": series,
        "checks": checks,
        "verdict": "consistent" if all(checks.values()) else "inconsistent",
    }

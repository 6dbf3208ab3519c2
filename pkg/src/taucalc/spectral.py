"""DFT fast path for tau-convolutions when K is the canonical cyclic group Z_n.

The transform is written out here: a direct O(n^2) matrix product for
n <= 64 and an iterative radix-2 butterfly for larger powers of two.  Other
sizes fall back to the naive kernels.  Forward kernel is exp(-2 pi i jk / n).
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .algebra import GFunction, KFunction, _tilde_values, lconv, rconv, standard_conv_G, tconv
from .groups import cyclic, inversion_action, semidirect, sd_inv, sd_mul, trivial_action

__all__ = [
    "NotCyclicError",
    "SpectralPlan",
    "dft",
    "idft",
    "supported",
    "rconv_fft",
    "lconv_fft",
    "tconv_fft",
    "bench",
    "bench_csv",
    "BENCH_HEADER",
]

DIRECT_MAX = 64
BENCH_HEADER = ("h_order", "k_order", "kernel", "ns_median")


class NotCyclicError(ValueError):
    pass


def supported(n: int) -> bool:
    return n <= DIRECT_MAX or (n & (n - 1)) == 0


@dataclass(frozen=True)
class SpectralPlan:
    n: int
    inverse: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not supported(self.n):
            raise ValueError(f"no transform for n = {self.n} (direct up to {DIRECT_MAX}, else powers of two)")

    def __call__(self, x):
        x = np.asarray(x, dtype=complex)
        if x.shape[-1] != self.n:
            raise ValueError(f"last axis has length {x.shape[-1]}, plan is for {self.n}")
        if self.inverse:
            return np.conj(_forward(np.conj(x))) / self.n
        return _forward(x)


def _forward(x):
    n = x.shape[-1]
    if n <= DIRECT_MAX:
        j = np.arange(n)
        W = np.exp(-2j * np.pi * np.outer(j, j) / n)
        return x @ W
    return _radix2(x)


def _bitrev(n):
    bits = n.bit_length() - 1
    r = np.zeros(n, dtype=np.int64)
    idx = np.arange(n)
    for b in range(bits):
        r |= ((idx >> b) & 1) << (bits - 1 - b)
    return r


def _radix2(x):
    n = x.shape[-1]
    lead = x.shape[:-1]
    y = x[..., _bitrev(n)]
    m = 1
    while m < n:
        y = y.reshape(*lead, n // (2 * m), 2, m)
        tw = np.exp(-1j * np.pi * np.arange(m) / m)
        even, odd = y[..., 0, :], y[..., 1, :] * tw
        y = np.concatenate([even + odd, even - odd], axis=-1)
        m *= 2
    return y.reshape(*lead, n)


def _check_cyclic(K):
    if not K.is_canonical_cyclic:
        raise NotCyclicError(f"K = {K.label or K.order} is not the canonical cyclic group")


def dft(phi: KFunction):
    """Spectrum of a KFunction (float) on cyclic K; batch axes are kept."""
    _check_cyclic(phi.group)
    return SpectralPlan(phi.group.order)(_float(phi.values))


def idft(spectrum, K) -> KFunction:
    _check_cyclic(K)
    return KFunction(K, SpectralPlan(K.order, inverse=True)(spectrum))


def _float(v):
    return v.to_complex() if hasattr(v, "to_complex") else np.asarray(v, dtype=complex)


def _operands(f, g):
    if f.group is not g.group:
        from .algebra import GroupMismatch

        raise GroupMismatch("functions live on different groups")
    G = f.group
    _check_cyclic(G.K)
    if not np.all(np.asarray(G.haar.k_weights) == 1):
        raise ValueError("the spectral path assumes unit K weights")
    return G, _float(f.values), _float(g.values)


def rconv_fft(f: GFunction, g: GFunction) -> GFunction:
    """Row h is ``f_h * tilde(g)``, computed by pointwise multiplication of spectra."""
    G, fv, gv = _operands(f, g)
    n = G.K.order
    if not supported(n):
        return rconv(f.to_backend("float"), g.to_backend("float"))
    fwd, inv = SpectralPlan(n), SpectralPlan(n, inverse=True)
    gt = fwd(_tilde_values(gv, G))
    return GFunction(G, inv(fwd(fv) * gt[..., None, :]))


def lconv_fft(f: GFunction, g: GFunction) -> GFunction:
    """Row h is ``tilde(f) * g_h``."""
    G, fv, gv = _operands(f, g)
    n = G.K.order
    if not supported(n):
        return lconv(f.to_backend("float"), g.to_backend("float"))
    fwd, inv = SpectralPlan(n), SpectralPlan(n, inverse=True)
    ft = fwd(_tilde_values(fv, G))
    return GFunction(G, inv(ft[..., None, :] * fwd(gv)))


def tconv_fft(f: GFunction, g: GFunction) -> GFunction:
    """Average of the two one-sided products; the shared spectra are computed once."""
    G, fv, gv = _operands(f, g)
    n = G.K.order
    if not supported(n):
        return tconv(f.to_backend("float"), g.to_backend("float"))
    fwd, inv = SpectralPlan(n), SpectralPlan(n, inverse=True)
    F, Gs = fwd(fv), fwd(gv)
    ft, gt = F.sum(axis=-2), Gs.sum(axis=-2)
    if not np.all(np.asarray(G.haar.h_weights) * np.asarray(G.haar.delta) == 1):
        w = np.asarray(G.haar.h_weights) * np.asarray(G.haar.delta)
        ft, gt = (F * w[:, None]).sum(axis=-2), (Gs * w[:, None]).sum(axis=-2)
    return GFunction(G, inv(0.5 * (F * gt[..., None, :] + ft[..., None, :] * Gs)))


# ------------------------------------------------------------------ benchmark
def _bench_group(h, k):
    H, K = cyclic(h), cyclic(k)
    act = inversion_action(H, K) if h % 2 == 0 else trivial_action(H, K)
    return semidirect(H, K, act, label=f"Z{h}xZ{k}")


def _standard_spot_check(G, g, std_of, rng, probes=3):
    """Check ``1_y * g`` against the group law: ``(1_y * g)(x) = g(y^-1 x)``."""
    H, K = G.shape
    xs = np.arange(G.order)
    xh, xk = xs // K, xs % K
    for _ in range(probes):
        y = (int(rng.integers(H)), int(rng.integers(K)))
        yi = sd_inv(G, y)
        qh, qk = _vec_mul(G, yi, xh, xk)
        expect = g.values[qh, qk].reshape(H, K)
        got = std_of(y)
        if not np.allclose(got, expect, atol=1e-9 * (1 + np.abs(g.values).sum())):
            raise AssertionError(f"standard_conv_G cross-check failed at y = {y}")


def _vec_mul(G, y, xh, xk):
    h, k = y
    Ht, Kt = np.asarray(G.H.cayley), np.asarray(G.K.cayley)
    perm = np.asarray(G.action.perm)
    return Ht[h, xh], Kt[k, perm[h][xk]]


def _median_ns(fn, reps):
    fn()
    times = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        times.append(time.perf_counter_ns() - t0)
    return int(np.median(times))


def bench(sizes, reps=11, seed=0):
    """Time naive tconv, DFT tconv and the standard convolution on Z_h x| Z_k.

    Each kernel is cross-checked before it is timed.  Returns a list of
    ``(h_order, k_order, kernel, ns_median)`` rows.
    """
    if reps < 11:
        raise ValueError("reps must be at least 11")
    rng = np.random.default_rng(seed)
    rows = []
    for h, k in sizes:
        G = _bench_group(int(h), int(k))
        f = GFunction(G, rng.standard_normal(G.shape) + 1j * rng.standard_normal(G.shape))
        g = GFunction(G, rng.standard_normal(G.shape) + 1j * rng.standard_normal(G.shape))
        naive = tconv(f, g)
        fast = tconv_fft(f, g)
        tol = 1e-9 * (1 + np.abs(f.values).sum() * np.abs(g.values).sum())
        if np.max(np.abs(naive.values - fast.values)) > tol:
            raise AssertionError(f"fft_tconv disagrees with naive tconv at {(h, k)}")

        def std_of(y, G=G, g=g):
            pm = np.zeros(G.shape, dtype=complex)
            pm[y] = 1
            return standard_conv_G(GFunction(G, pm), g).values

        _standard_spot_check(G, g, std_of, rng)
        rows.append((h, k, "naive_tconv", _median_ns(lambda: tconv(f, g), reps)))
        rows.append((h, k, "fft_tconv", _median_ns(lambda: tconv_fft(f, g), reps)))
        rows.append((h, k, "standard_conv_G", _median_ns(lambda: standard_conv_G(f, g), reps)))
    return rows


def bench_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_HEADER)
    w.writerows(rows)
    return buf.getvalue()

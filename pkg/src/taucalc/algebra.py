"""Functions on a semidirect product and the tau-convolution calculus.

A :class:`GFunction` holds an ``|H| x |K|`` value table (row ``h`` is the
section ``f_h``); a :class:`KFunction` holds ``|K|`` values.  Values are either
``complex128`` arrays (float backend) or :class:`~taucalc.scalars.ExactArray`
(exact Gaussian-rational backend).  All Haar weights of a finite group are 1, so
the integrals below are plain sums; the float backend still honours
non-unit weights when a caller supplies them.
"""
from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .groups import FiniteGroup, SemidirectGroup
from .scalars import ExactArray, as_backend, backend_of, exact_abs_power_sum

__all__ = [
    "GFunction",
    "KFunction",
    "PhiDensity",
    "GroupMismatch",
    "point_mass",
    "k_point_mass",
    "zero",
    "k_zero",
    "random_gfunction",
    "random_kfunction",
    "section",
    "tilde",
    "conv_K",
    "involution_K",
    "rconv",
    "lconv",
    "tconv",
    "involution_tau",
    "norm",
    "standard_conv_G",
    "lift_phi",
    "psi_phi_embed",
    "in_J1",
    "associator_tau",
    "agree",
    "stack",
    "item",
    "differs",
    "norm_power",
    "inject_sign_fault",
    "FLOAT_RTOL",
]

FLOAT_RTOL = 1e-9
BLOCK = 512

_fault = {"on": False}


class GroupMismatch(ValueError):
    pass


@contextlib.contextmanager
def inject_sign_fault():
    """Test hook: flip the sign of one imaginary cross term inside every K-convolution.

    With the fault on, each summand ``a(y) b(y^-1 x)`` with ``a(y) = p+iq`` and
    ``b(y^-1 x) = r+is`` contributes ``ps - qr`` instead of ``ps + qr`` to the
    imaginary part.
    """
    prev = _fault["on"]
    _fault["on"] = True
    try:
        yield
    finally:
        _fault["on"] = prev


# --------------------------------------------------------------------- types
@dataclass(frozen=True, eq=False)
class GFunction:
    group: SemidirectGroup
    values: object

    def __post_init__(self):
        if tuple(self.values.shape[-2:]) != self.group.shape:
            raise GroupMismatch(f"values shape {self.values.shape} does not match group shape {self.group.shape}")

    @property
    def batch_shape(self):
        return tuple(self.values.shape[:-2])

    @property
    def backend(self):
        return backend_of(self.values)

    def __add__(self, other):
        _same(self, other)
        return GFunction(self.group, self.values + other.values)

    def __sub__(self, other):
        _same(self, other)
        return GFunction(self.group, self.values - other.values)

    def __neg__(self):
        return GFunction(self.group, -self.values)

    def scale(self, c):
        return GFunction(self.group, _scale(self.values, c))

    def __eq__(self, other):
        if not isinstance(other, GFunction) or other.group is not self.group:
            return NotImplemented
        if self.backend != other.backend:
            return False
        if self.backend == "exact":
            return self.values == other.values
        return bool(np.array_equal(self.values, other.values))

    __hash__ = None

    def is_zero(self):
        return self.values.is_zero() if self.backend == "exact" else not np.any(self.values)

    def to_backend(self, backend):
        return GFunction(self.group, as_backend(self.values, backend))

    def __repr__(self):
        return f"GFunction({self.group.label}, backend={self.backend})"


@dataclass(frozen=True, eq=False)
class KFunction:
    group: FiniteGroup
    values: object

    def __post_init__(self):
        if tuple(self.values.shape[-1:]) != (self.group.order,):
            raise GroupMismatch(f"values shape {self.values.shape} does not match |K| = {self.group.order}")

    @property
    def batch_shape(self):
        return tuple(self.values.shape[:-1])

    @property
    def backend(self):
        return backend_of(self.values)

    def __add__(self, other):
        _same_k(self, other)
        return KFunction(self.group, self.values + other.values)

    def __sub__(self, other):
        _same_k(self, other)
        return KFunction(self.group, self.values - other.values)

    def scale(self, c):
        return KFunction(self.group, _scale(self.values, c))

    def __eq__(self, other):
        if not isinstance(other, KFunction) or other.group is not self.group:
            return NotImplemented
        if self.backend != other.backend:
            return False
        if self.backend == "exact":
            return self.values == other.values
        return bool(np.array_equal(self.values, other.values))

    __hash__ = None

    def is_zero(self):
        return self.values.is_zero() if self.backend == "exact" else not np.any(self.values)

    def __repr__(self):
        return f"KFunction({self.group.label}, backend={self.backend})"


class PhiDensity:
    """A nonnegative real GFunction of unit L1 norm, checked once at construction."""

    def __init__(self, phi: GFunction):
        v = phi.values
        if phi.backend == "exact":
            if not v.is_real or any(x < 0 for x in v.re.flat):
                raise ValueError("Phi must be real and nonnegative")
            if norm(phi, 1) != 1:
                raise ValueError("Phi must have unit L1 norm")
        else:
            if np.any(np.abs(v.imag) > 0) or np.any(v.real < 0):
                raise ValueError("Phi must be real and nonnegative")
            if abs(norm(phi, 1) - 1) > 1e-12:
                raise ValueError("Phi must have unit L1 norm")
        self.phi = phi

    @classmethod
    def uniform(cls, G: SemidirectGroup, backend="exact"):
        n = G.order
        if backend == "exact":
            vals = ExactArray(np.ones(G.shape, dtype=object), None, n)
        else:
            vals = np.full(G.shape, 1 / n, dtype=complex)
        return cls(GFunction(G, vals))

    @property
    def group(self):
        return self.phi.group

    def row_mass(self):
        """``h -> integral_K Phi(h, s) ds`` as a length-|H| column of the same backend."""
        return _row_sums(self.phi.values, self.group)


def _same(f, g):
    if f.group is not g.group:
        raise GroupMismatch("functions live on different groups")
    if f.backend != g.backend:
        raise GroupMismatch(f"backend mismatch: {f.backend} vs {g.backend}")


def _same_k(a, b):
    if a.group is not b.group:
        raise GroupMismatch("K-functions live on different groups")
    if a.backend != b.backend:
        raise GroupMismatch(f"backend mismatch: {a.backend} vs {b.backend}")


def _scale(values, c):
    if isinstance(values, ExactArray):
        return values.scale(c)
    if isinstance(c, tuple):
        c = complex(float(c[0]), float(c[1]))
    elif isinstance(c, Fraction):
        c = float(c)
    return values * c


# -------------------------------------------------------------- constructors
def point_mass(G: SemidirectGroup, h, k, backend="exact", c=1):
    return GFunction(G, _unit_array(G.shape, (h, k), backend, c))


def k_point_mass(K: FiniteGroup, k, backend="exact", c=1):
    return KFunction(K, _unit_array((K.order,), (k,), backend, c))


def zero(G: SemidirectGroup, backend="exact"):
    return GFunction(G, _zeros(G.shape, backend))


def k_zero(K: FiniteGroup, backend="exact"):
    return KFunction(K, _zeros((K.order,), backend))


def _zeros(shape, backend):
    return ExactArray.zeros(shape) if backend == "exact" else np.zeros(shape, dtype=complex)


def _unit_array(shape, idx, backend, c):
    if backend == "exact":
        d = _delta_exact(shape, idx)
        return d if c == 1 else d.scale(c)
    a = np.zeros(shape, dtype=complex)
    a[idx] = complex(c) if not isinstance(c, tuple) else complex(float(c[0]), float(c[1]))
    return a


def _delta_exact(shape, idx):
    re = np.zeros(shape, dtype=object)
    re[idx] = 1
    return ExactArray(re, None, 1)


def _random_values(shape, rng, backend, complex_values, max_num, max_den):
    if backend == "exact":
        num = rng.integers(-max_num, max_num + 1, size=(2,) + tuple(shape))
        den = rng.integers(1, max_den + 1, size=(2,) + tuple(shape))
        if not complex_values:
            num[1] = 0
        L = math.lcm(*range(1, max_den + 1))
        scaled = (num * (L // den)).astype(object)
        return ExactArray(scaled[0], scaled[1], L)
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape) if complex_values else np.zeros(shape)
    return re + 1j * im


def random_gfunction(G, rng, backend="exact", complex_values=False, max_num=5, max_den=4, batch=()):
    """Random element; exact values are rationals p/q with |p| <= max_num, 1 <= q <= max_den.

    ``batch`` prepends batch axes (a stack of independent draws).
    """
    return GFunction(G, _random_values(tuple(batch) + G.shape, rng, backend, complex_values, max_num, max_den))


def random_kfunction(K, rng, backend="exact", complex_values=False, max_num=5, max_den=4, batch=()):
    return KFunction(K, _random_values(tuple(batch) + (K.order,), rng, backend, complex_values, max_num, max_den))


# ------------------------------------------------------------------ kernels
def _weighted(values, w):
    """Multiply the last axis by weights ``w`` (skipped when all ones)."""
    w = np.asarray(w)
    if np.all(w == 1):
        return values
    if isinstance(values, ExactArray):
        raise ValueError("the exact backend supports unit Haar weights only")
    return values * w


def _matmul(A, B, left_factor_first=True):
    """``A @ B``.  Under the fault hook the imaginary part of each product becomes
    ``Re(l) Im(r) - Im(l) Re(r)`` with ``l`` the left convolution factor."""
    if not _fault["on"]:
        return A.product(B, np.matmul) if isinstance(A, ExactArray) else A @ B
    cross = (1, -1) if left_factor_first else (-1, 1)
    if isinstance(A, ExactArray):
        return A.product(B, np.matmul, cross=cross)
    im = cross[0] * (A.real @ B.imag) + cross[1] * (A.imag @ B.real)
    return (A.real @ B.real - A.imag @ B.imag) + 1j * im


def _left_quotients(K, ys):
    """``table[i, x] = ys[i]^-1 x``."""
    return np.asarray(K.cayley)[np.asarray(K.inverse)[ys]]


def _right_quotients(K, zs):
    """``table[i, x] = x zs[i]^-1``."""
    return np.asarray(K.cayley)[:, np.asarray(K.inverse)[zs]].T


def _gather(v, idx):
    return v.take(idx, axis=-1) if isinstance(v, ExactArray) else v[..., idx]


def _conv_right_fixed(A, b, K, w):
    """Rows of ``A`` convolved on the right with ``b``: ``A_i * b``.

    ``(a * b)(x) = sum_y a(y) w(y) b(y^-1 x)``.  Leading axes of ``A`` (beyond
    the row axis) and of ``b`` broadcast as batch axes.
    """
    A = _weighted(A, w)
    n = K.order
    if isinstance(A, ExactArray) or n <= BLOCK:
        return _matmul(A, _gather(b, _left_quotients(K, np.arange(n))))
    out = None
    for start in range(0, n, BLOCK):
        ys = np.arange(start, min(start + BLOCK, n))
        term = _matmul(A[..., ys], b[..., _left_quotients(K, ys)])
        out = term if out is None else out + term
    return out


def _conv_left_fixed(a, B, K, w):
    """One fixed function ``a`` convolved on the left with every row of ``B``: ``a * B_i``.

    ``(a * b)(x) = sum_z a(x z^-1) w(x z^-1) b(z)``.
    """
    a = _weighted(a, w)
    n = K.order
    if isinstance(B, ExactArray) or n <= BLOCK:
        return _matmul(B, _gather(a, _right_quotients(K, np.arange(n))), left_factor_first=False)
    out = None
    for start in range(0, n, BLOCK):
        zs = np.arange(start, min(start + BLOCK, n))
        term = _matmul(B[..., zs], a[..., _right_quotients(K, zs)], left_factor_first=False)
        out = term if out is None else out + term
    return out


def _row_sums(values, G):
    """Column (..., |H|, 1) of K-integrals of each section."""
    s = _weighted(values, G.haar.k_weights).sum(axis=-1)
    return s.reshape(*s.shape, 1)


def _tilde_values(values, G):
    w = np.asarray(G.haar.h_weights) * np.asarray(G.haar.delta)
    if np.all(w == 1):
        return values.sum(axis=-2)
    if isinstance(values, ExactArray):
        raise ValueError("the exact backend supports unit Haar weights only")
    return (values * w[:, None]).sum(axis=-2)


# --------------------------------------------------------------- operations
def section(f: GFunction, h) -> KFunction:
    if not 0 <= h < f.group.H.order:
        raise IndexError(f"h = {h} out of range")
    return KFunction(f.group.K, f.values[..., h, :])


def tilde(f: GFunction) -> KFunction:
    """Projection onto K: ``sum_t f(t, k) delta(t) w_H(t)``."""
    return KFunction(f.group.K, _tilde_values(f.values, f.group))


def conv_K(phi: KFunction, psi: KFunction) -> KFunction:
    _same_k(phi, psi)
    K = phi.group
    v = phi.values
    A = v.reshape(*v.shape[:-1], 1, K.order)
    out = _conv_right_fixed(A, psi.values, K, np.ones(K.order))
    return KFunction(K, out.reshape(*out.shape[:-2], K.order))


def involution_K(phi: KFunction, mod_K=None) -> KFunction:
    """``phi*(k) = Delta_K(k^-1) conj(phi(k^-1))``."""
    K = phi.group
    inv = np.asarray(K.inverse)
    v = phi.values.take(inv, axis=-1).conj() if phi.backend == "exact" else np.conj(phi.values[..., inv])
    if mod_K is not None:
        v = _weighted(v, np.asarray(mod_K)[inv])
    return KFunction(K, v)


def rconv(f: GFunction, g: GFunction) -> GFunction:
    """Right tau-convolution: row h is ``f_h * tilde(g)``."""
    _same(f, g)
    G = f.group
    return GFunction(G, _conv_right_fixed(f.values, _tilde_values(g.values, G), G.K, G.haar.k_weights))


def lconv(f: GFunction, g: GFunction) -> GFunction:
    """Left tau-convolution: row h is ``tilde(f) * g_h``."""
    _same(f, g)
    G = f.group
    return GFunction(G, _conv_left_fixed(_tilde_values(f.values, G), g.values, G.K, G.haar.k_weights))


def tconv(f: GFunction, g: GFunction) -> GFunction:
    """tau-convolution, the average of the right and left tau-convolutions."""
    return _half_sum(rconv(f, g), lconv(f, g))


def _half_sum(a, b):
    return GFunction(a.group, _scale(a.values + b.values, Fraction(1, 2)))


def involution_tau(f: GFunction) -> GFunction:
    """Row-wise K-involution: ``f*(h, k) = Delta_K(k^-1) conj(f(h, k^-1))``."""
    G = f.group
    inv = np.asarray(G.K.inverse)
    v = f.values.take(inv, axis=-1).conj() if f.backend == "exact" else np.conj(f.values[..., inv])
    return GFunction(G, _weighted(v, np.asarray(G.haar.mod_K)[inv]))


def _norm_weights(f):
    if isinstance(f, GFunction):
        G = f.group
        return (np.asarray(G.haar.h_weights) * np.asarray(G.haar.delta))[:, None] * np.asarray(G.haar.k_weights)[None, :]
    return np.ones(f.group.order)


def _per_item(f, fn):
    """Apply ``fn`` to every unbatched item; scalar result when ``f`` is unbatched."""
    bs = f.batch_shape
    if not bs:
        return fn(f.values)
    out = np.empty(bs, dtype=object)
    for idx in np.ndindex(*bs):
        out[idx] = fn(f.values[idx])
    return out


def norm(f, p=1):
    """L^p norm with Haar weights (and delta(h) for functions on G).

    Float backend returns a float.  Exact backend returns a Fraction when the
    value is rational (real data with p = 1, or p = inf with a rational
    modulus), otherwise a 50-digit Decimal.  Batched inputs give an array of
    norms over the batch axes.
    """
    if p != np.inf and p < 1:
        raise ValueError("p must be >= 1 or inf")
    w = _norm_weights(f)
    axes = tuple(range(-w.ndim, 0))
    if f.backend == "float":
        a = np.abs(f.values)
        if p == np.inf:
            r = a.max(axis=axes) if a.size else np.zeros(f.batch_shape)
        else:
            r = np.sum(w * a ** p, axis=axes) ** (1 / p)
        return float(r) if np.ndim(r) == 0 else r

    def one(v):
        if p == np.inf:
            return _exact_root(max(v.abs2().flat, default=Fraction(0)), 2)
        return _exact_root(exact_abs_power_sum(v, _exact_weights(w), p), p)

    return _per_item(f, one)


def norm_power(f, p):
    """``||f||_p ** p`` (exactly, as a Fraction, whenever the data allow)."""
    w = _norm_weights(f)
    if f.backend == "float":
        r = np.sum(w * np.abs(f.values) ** p, axis=tuple(range(-w.ndim, 0)))
        return float(r) if np.ndim(r) == 0 else r
    return _per_item(f, lambda v: exact_abs_power_sum(v, _exact_weights(w), p))


def _exact_weights(w):
    if not np.all(w == 1):
        raise ValueError("the exact backend supports unit Haar weights only")
    return np.ones(w.shape, dtype=object)


def _exact_root(s, p):
    from decimal import Decimal, localcontext

    from .scalars import NORM_DIGITS

    if p == 1:
        return s
    if isinstance(s, Fraction):
        num, den = s.numerator, s.denominator
        r = _int_root(num, p), _int_root(den, p)
        if r[0] is not None and r[1] is not None:
            return Fraction(*r)
        with localcontext() as ctx:
            ctx.prec = NORM_DIGITS + 10
            s = Decimal(num) / Decimal(den)
    with localcontext() as ctx:
        ctx.prec = NORM_DIGITS + 10
        return +(s ** (Decimal(1) / Decimal(p)))


def _int_root(n, p):
    if n < 0 or int(p) != p:
        return None
    r = round(n ** (1 / p)) if n < 1 << 1000 else None
    if r is None:
        return None
    for c in (r - 1, r, r + 1):
        if c >= 0 and c ** int(p) == n:
            return c
    return None


def standard_conv_G(f: GFunction, g: GFunction) -> GFunction:
    """Ordinary group-algebra convolution on G = H x| K with Haar measure delta(h) dh dk.

    Row h of the result is ``sum_t f_t * g^(t,h)`` where
    ``g^(t,h)(k) = g(t^-1 h, tau_{t^-1}(k))``.
    """
    _same(f, g)
    G = f.group
    H, K = G.H, G.K
    perm = np.asarray(G.action.perm)
    ht = np.asarray(H.cayley)
    hinv = np.asarray(H.inverse)
    wt = np.asarray(G.haar.h_weights) * np.asarray(G.haar.delta)
    exact = f.backend == "exact"
    acc = None
    for t in range(H.order):
        ti = hinv[t]
        shifted = g.values.take(ht[ti], axis=-2).take(perm[ti], axis=-1) if exact else g.values[..., ht[ti], :][..., perm[ti]]
        ft = f.values[..., t, :]
        if wt[t] != 1:
            ft = _weighted(ft, wt[t])
        term = _conv_left_fixed(ft, shifted, K, G.haar.k_weights)
        acc = term if acc is None else acc + term
    return GFunction(G, acc)


def lift_phi(Phi: PhiDensity, psi: KFunction) -> GFunction:
    """``Phi(psi)(h, k) = psi(k) * integral_K Phi(h, s) ds``."""
    G = Phi.group
    if psi.group is not G.K:
        raise GroupMismatch("psi must live on the K of Phi's group")
    if Phi.phi.backend != psi.backend:
        raise GroupMismatch("Phi and psi use different backends")
    mass = Phi.row_mass()
    v = psi.values
    return GFunction(G, mass * v.reshape(*v.shape[:-1], 1, v.shape[-1]))


def psi_phi_embed(phiH, psi: KFunction, G: SemidirectGroup) -> GFunction:
    """``psi_phi(h, k) = delta(h^-1) phiH(h) psi(k)`` for a probability density phiH on H."""
    backend = psi.backend
    if backend == "exact":
        if not G.haar.is_unit:
            raise ValueError("the exact backend supports unit Haar weights only")
        ph = [Fraction(x) for x in phiH]
        if any(x < 0 for x in ph) or sum(ph) != 1:
            raise ValueError("phiH must be a nonnegative density with unit mass")
        col = ExactArray.from_values([[x] for x in ph])
        v = psi.values
        return GFunction(G, col * v.reshape(*v.shape[:-1], 1, v.shape[-1]))
    ph = np.asarray(phiH, dtype=float)
    if np.any(ph < 0) or abs(np.sum(ph * np.asarray(G.haar.h_weights)) - 1) > 1e-12:
        raise ValueError("phiH must be a nonnegative density with unit mass")
    delta = np.asarray(G.haar.delta)
    dinv = delta[np.asarray(G.H.inverse)]
    return GFunction(G, (dinv * ph)[:, None] * psi.values[..., None, :])


def in_J1(f: GFunction, tol=0):
    """Membership in the kernel of the projection: ``||tilde(f)||_1 <= tol``."""
    t = tilde(f)
    if f.backend == "exact" and tol == 0:
        return t.is_zero()
    return float(norm(t, 1)) <= tol


def associator_tau(f, g, u):
    return tconv(tconv(f, g), u) - tconv(f, tconv(g, u))


def agree(lhs, rhs, rtol=FLOAT_RTOL):
    """Compare two G- or K-functions; return ``(ok, residual)``.

    Exact backend: structural equality, residual is the L1 norm of the
    difference (0 when equal).  Float backend: L1 residual against
    ``rtol * (1 + ||lhs||_1 + ||rhs||_1)``.
    """
    diff = lhs - rhs
    if lhs.backend == "exact":
        if lhs == rhs:
            return True, 0.0
        return False, float(norm(diff, 1))
    r = norm(diff, 1)
    return r <= rtol * (1 + norm(lhs, 1) + norm(rhs, 1)), r


def stack(funcs):
    """Stack unbatched G- or K-functions along a new leading batch axis."""
    funcs = list(funcs)
    cls, grp = type(funcs[0]), funcs[0].group
    if funcs[0].backend == "exact":
        vals = ExactArray.stack([f.values for f in funcs])
    else:
        vals = np.stack([f.values for f in funcs])
    return cls(grp, vals)


def item(f, idx):
    """One function out of a batch."""
    v = f.values[idx]
    if isinstance(v, ExactArray):
        v = ExactArray(v.re, v.im, v.den)
    return type(f)(f.group, v)


def differs(lhs, rhs, rtol=FLOAT_RTOL):
    """Boolean array over batch axes: where ``lhs`` and ``rhs`` disagree."""
    core = 2 if isinstance(lhs, GFunction) else 1
    axes = tuple(range(-core, 0))
    d = (lhs - rhs).values
    if lhs.backend == "exact":
        return np.any((d.re != 0) | (d.im != 0), axis=axes)
    r = np.sum(np.abs(d), axis=axes)
    scale = 1 + np.sum(np.abs(lhs.values), axis=axes) + np.sum(np.abs(rhs.values), axis=axes)
    return r > rtol * scale

"""Scalar backends.

``float`` values are plain ``complex128`` arrays.  ``exact`` values are
:class:`ExactArray`: Gaussian rationals stored as integer real/imaginary
numerator arrays over one shared positive denominator, kept in lowest terms so
that equality is structural.
"""
from __future__ import annotations

import math
from decimal import Decimal, localcontext
from fractions import Fraction
from numbers import Rational

import numpy as np

__all__ = ["ExactArray", "as_backend", "backend_of", "parse_scalar", "format_scalar", "rational"]

# digits used when an exact norm is irrational (sum of square roots)
NORM_DIGITS = 50

def rational(x):
    """Coerce an int, Fraction or ``"p/q"`` string to Fraction (floats rejected)."""
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"not an exact rational: {x!r}")


def _obj(a):
    out = np.empty(np.shape(a), dtype=object)
    out[...] = a
    return out


def _gcd_all(*arrays):
    g = 0
    for a in arrays:
        for v in a.flat:
            if v:
                g = math.gcd(g, v)
                if g == 1:
                    return 1
    return g


class ExactArray:
    """An ndarray of Gaussian rationals ``(re + i*im) / den``."""

    __slots__ = ("re", "im", "den", "_real")

    def __init__(self, re, im=None, den=1, *, _normalized=False):
        self.re = re if isinstance(re, np.ndarray) and re.dtype == object else _obj(re)
        if im is None:
            im = np.zeros(self.re.shape, dtype=np.int64)
        self.im = im if isinstance(im, np.ndarray) and im.dtype == object else _obj(im)
        if self.re.shape != self.im.shape:
            raise ValueError("real and imaginary parts differ in shape")
        self.den = int(den)
        if self.den <= 0:
            raise ValueError("denominator must be positive")
        self._real = None
        if not _normalized:
            self._normalize()

    def _normalize(self):
        g = _gcd_all(self.re, self.im)
        if g == 0:
            self.den = 1
            return
        g = math.gcd(g, self.den)
        if g > 1:
            self.re = _obj(self.re // g)
            self.im = _obj(self.im // g)
            self.den //= g

    # construction -------------------------------------------------------
    @classmethod
    def zeros(cls, shape):
        z = np.zeros(shape, dtype=np.int64)
        return cls(_obj(z), _obj(z), 1, _normalized=True)

    @classmethod
    def from_values(cls, values):
        """Build from nested sequences of rationals, ``"p/q"`` strings or ``[re, im]`` pairs."""
        shape, flat = _leaves(values)
        pairs = [_split(v) for v in flat]
        den = 1
        for re, im in pairs:
            den = math.lcm(den, re.denominator, im.denominator)
        re = np.empty(len(pairs), dtype=object)
        im = np.empty(len(pairs), dtype=object)
        for i, (a, b) in enumerate(pairs):
            re[i] = a.numerator * (den // a.denominator)
            im[i] = b.numerator * (den // b.denominator)
        return cls(re.reshape(shape), im.reshape(shape), den)

    @classmethod
    def from_fractions(cls, re, im=None):
        re = np.asarray(re, dtype=object)
        im = np.zeros(re.shape, dtype=object) + Fraction(0) if im is None else np.asarray(im, dtype=object)
        den = 1
        for q in list(re.flat) + list(im.flat):
            q = Fraction(q)
            den = den * q.denominator // math.gcd(den, q.denominator)
        f = np.frompyfunc(lambda q: (Fraction(q) * den).numerator, 1, 1)
        return cls(_obj(f(re)), _obj(f(im)), den)

    @classmethod
    def stack(cls, arrays, axis=0):
        den = 1
        for a in arrays:
            den = math.lcm(den, a.den)
        re = np.stack([a.re * (den // a.den) for a in arrays], axis=axis)
        im = np.stack([a.im * (den // a.den) for a in arrays], axis=axis)
        return cls(_obj(re), _obj(im), den)

    # basic properties ---------------------------------------------------
    @property
    def shape(self):
        return self.re.shape

    @property
    def ndim(self):
        return self.re.ndim

    @property
    def is_real(self):
        if self._real is None:
            self._real = not any(self.im.flat)
        return self._real

    def copy(self):
        return ExactArray(self.re.copy(), self.im.copy(), self.den, _normalized=True)

    def real_fractions(self):
        return np.frompyfunc(lambda v: Fraction(v, self.den), 1, 1)(self.re)

    def imag_fractions(self):
        return np.frompyfunc(lambda v: Fraction(v, self.den), 1, 1)(self.im)

    def item(self, idx):
        return Fraction(self.re[idx], self.den), Fraction(self.im[idx], self.den)

    def to_complex(self):
        re = np.array([v / self.den for v in self.re.flat], dtype=float).reshape(self.shape)
        im = np.array([v / self.den for v in self.im.flat], dtype=float).reshape(self.shape)
        return re + 1j * im

    def abs2(self):
        """Squared moduli as an object array of Fractions."""
        d2 = self.den * self.den
        return np.frompyfunc(lambda a, b: Fraction(a * a + b * b, d2), 2, 1)(self.re, self.im)

    # indexing -----------------------------------------------------------
    def __getitem__(self, key):
        re, im = self.re[key], self.im[key]
        if not isinstance(re, np.ndarray):
            return Fraction(re, self.den), Fraction(im, self.den)
        return ExactArray(_obj(re), _obj(im), self.den)

    def take(self, idx, axis=-1):
        return ExactArray(np.take(self.re, idx, axis=axis), np.take(self.im, idx, axis=axis), self.den)

    def reshape(self, *shape):
        return ExactArray(self.re.reshape(*shape), self.im.reshape(*shape), self.den, _normalized=True)

    @property
    def T(self):
        return ExactArray(self.re.T, self.im.T, self.den, _normalized=True)

    def sum(self, axis=None):
        re = self.re.sum(axis=axis)
        im = self.im.sum(axis=axis)
        return ExactArray(_obj(re), _obj(im), self.den)

    # arithmetic ---------------------------------------------------------
    def _aligned(self, other):
        if not isinstance(other, ExactArray):
            raise TypeError(f"cannot mix exact and {type(other).__name__} values")
        lcm = self.den * other.den // math.gcd(self.den, other.den)
        a, b = lcm // self.den, lcm // other.den
        return (self.re * a if a != 1 else self.re, self.im * a if a != 1 else self.im,
                other.re * b if b != 1 else other.re, other.im * b if b != 1 else other.im, lcm)

    def __add__(self, other):
        ar, ai, br, bi, d = self._aligned(other)
        return ExactArray(ar + br, ai + bi, d)

    def __sub__(self, other):
        ar, ai, br, bi, d = self._aligned(other)
        return ExactArray(ar - br, ai - bi, d)

    def __neg__(self):
        return ExactArray(-self.re, -self.im, self.den, _normalized=True)

    def scale(self, c):
        """Multiply by a Gaussian rational ``c`` given as a rational or ``(re, im)`` pair."""
        cr, ci = _split(c)
        d = cr.denominator * ci.denominator // math.gcd(cr.denominator, ci.denominator)
        xr, xi = cr.numerator * (d // cr.denominator), ci.numerator * (d // ci.denominator)
        if xi == 0:
            return ExactArray(self.re * xr, self.im * xr, self.den * d)
        return ExactArray(self.re * xr - self.im * xi, self.re * xi + self.im * xr, self.den * d)

    def __mul__(self, other):
        if isinstance(other, ExactArray):
            return self.product(other, np.multiply)
        return self.scale(other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return self.product(other, np.matmul)

    def product(self, other, op, cross=(1, 1)):
        """Complex product under ``op`` (elementwise or matmul).

        The imaginary part is ``cross[0]*re@im' + cross[1]*im@re'``; anything
        other than ``(1, 1)`` is only used by the fault-injection hook.
        """
        if not isinstance(other, ExactArray):
            raise TypeError(f"cannot mix exact and {type(other).__name__} values")
        d = self.den * other.den
        rr = _obj(op(self.re, other.re))
        if self.is_real and other.is_real:
            return ExactArray(rr, np.zeros(rr.shape, dtype=object) + 0, d)
        ii = op(self.im, other.im)
        ri = op(self.re, other.im)
        ir = op(self.im, other.re)
        s1, s2 = cross
        im = ri + ir if cross == (1, 1) else s1 * ri + s2 * ir
        return ExactArray(_obj(rr - ii), _obj(im), d)

    def conj(self):
        return ExactArray(self.re, -self.im, self.den, _normalized=True)

    # comparison ---------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, ExactArray):
            return NotImplemented
        return (self.shape == other.shape and self.den == other.den
                and bool(np.all(self.re == other.re)) and bool(np.all(self.im == other.im)))

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    __hash__ = None

    def is_zero(self):
        return not any(self.re.flat) and not any(self.im.flat)

    def __repr__(self):
        return f"ExactArray(shape={self.shape}, den={self.den})"


def _leaves(values):
    """Flatten nested sequences whose leaves are scalars or ``[re, im]`` pairs."""
    if isinstance(values, np.ndarray):
        values = values.tolist()
    if _is_pair(values) or not isinstance(values, (list, tuple)):
        return (), [values]
    if not values:
        return (0,), []
    shapes, flat = set(), []
    for v in values:
        shp, leaves = _leaves(v)
        shapes.add(shp)
        flat.extend(leaves)
    if len(shapes) != 1:
        raise ValueError("ragged value array")
    return (len(values),) + shapes.pop(), flat


def _is_pair(v):
    return (isinstance(v, (list, tuple)) and len(v) == 2
            and not isinstance(v[0], (list, tuple)) and not isinstance(v[1], (list, tuple)))


def _split(v):
    if isinstance(v, (list, tuple)):
        re, im = v
        return rational(re), rational(im)
    if isinstance(v, complex):
        raise TypeError("complex floats cannot be used in the exact backend")
    return rational(v), Fraction(0)


def backend_of(values):
    return "exact" if isinstance(values, ExactArray) else "float"


def as_backend(values, backend):
    """Convert a value array to the requested backend ('exact' or 'float')."""
    if backend == "float":
        return values.to_complex() if isinstance(values, ExactArray) else np.asarray(values, dtype=complex)
    if backend == "exact":
        if isinstance(values, ExactArray):
            return values
        arr = np.asarray(values)
        if arr.dtype.kind in "fc":
            raise TypeError("float data cannot be converted to the exact backend losslessly; pass rationals")
        return ExactArray.from_values(arr.tolist())
    raise ValueError(f"unknown backend {backend!r}")


def exact_abs_power_sum(values: ExactArray, weights, p):
    """``sum_x w(x) |v(x)|^p`` as a Decimal with NORM_DIGITS digits (Fraction when exact)."""
    a2 = values.abs2()
    w = np.broadcast_to(np.asarray(weights, dtype=object), a2.shape)
    if p == 1 and values.is_real:
        return sum((abs(Fraction(v, values.den)) * Fraction(wi) for v, wi in zip(values.re.flat, w.flat)), Fraction(0))
    if p == 2:
        return sum((q * Fraction(wi) for q, wi in zip(a2.flat, w.flat)), Fraction(0))
    with localcontext() as ctx:
        ctx.prec = NORM_DIGITS + 10
        half_p = Decimal(p) / 2
        total = Decimal(0)
        for q, wi in zip(a2.flat, w.flat):
            if q:
                total += (Decimal(q.numerator) / Decimal(q.denominator)) ** half_p * _dec(wi)
        return +total


def to_decimal(x):
    """Fraction, int, float or Decimal as a Decimal at norm precision."""
    with localcontext() as ctx:
        ctx.prec = NORM_DIGITS + 10
        if isinstance(x, Fraction):
            return Decimal(x.numerator) / Decimal(x.denominator)
        return +(Decimal(repr(x)) if isinstance(x, float) else Decimal(x))


def exact_mul(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a * b
    with localcontext() as ctx:
        ctx.prec = NORM_DIGITS + 10
        return to_decimal(a) * to_decimal(b)


def exact_le(a, b):
    """``a <= b`` for exact norms; Decimal comparisons allow a relative 1e-45 rounding margin."""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a <= b
    with localcontext() as ctx:
        ctx.prec = NORM_DIGITS + 10
        da, db = to_decimal(a), to_decimal(b)
        return da <= db + abs(db) * Decimal("1e-45")


def exact_eq(a, b):
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return exact_le(a, b) and exact_le(b, a)


def _dec(x):
    if isinstance(x, Fraction):
        return Decimal(x.numerator) / Decimal(x.denominator)
    return Decimal(str(x)) if isinstance(x, float) else Decimal(x)


def parse_scalar(v, backend):
    """Parse a serialized scalar: ``[re, im]``, a number, or a ``"p/q"`` string."""
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"scalar must be [re, im], got {v!r}")
        re, im = v
    else:
        re, im = v, 0
    if backend == "exact":
        if isinstance(re, float) or isinstance(im, float):
            raise ValueError("exact backend requires rational strings or integers, got a float")
        return rational(re), rational(im)
    return complex(_to_float(re), _to_float(im))


def _to_float(x):
    if isinstance(x, str):
        return float(Fraction(x))
    return float(x)


def format_scalar(re, im):
    """Serialize one scalar as ``[re, im]``; Fractions become ``"p/q"`` strings."""
    if isinstance(re, Fraction):
        return [_frac_str(re), _frac_str(im)]
    return [float(re), float(im)]


def _frac_str(q):
    return f"{q.numerator}/{q.denominator}"

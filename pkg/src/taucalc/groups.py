"""Finite groups, automorphism actions and semidirect products.

Elements are dense indices ``0..n-1``.  A semidirect product ``H x| K`` uses the
flattened layout ``(h, k) -> h * |K| + k`` everywhere in this package.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "StructureError",
    "ValidationReport",
    "FiniteGroup",
    "AutomorphismAction",
    "HaarData",
    "SemidirectGroup",
    "validate_group",
    "validate_action",
    "builtin_group",
    "cyclic",
    "dihedral",
    "symmetric",
    "from_table",
    "trivial_action",
    "inversion_action",
    "conjugation_action",
    "semidirect",
    "sd_mul",
    "sd_inv",
]

EXHAUSTIVE_LIMIT = 64
SAMPLED_TRIPLES = 10_000
SYMMETRIC_MAX = 6


class StructureError(ValueError):
    """Malformed input: wrong shapes, out-of-range entries, non-permutations."""


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    axiom: str | None = None
    witness: tuple | None = None
    message: str = ""

    def __bool__(self):
        return self.ok

    def to_dict(self):
        return {
            "ok": self.ok,
            "axiom": self.axiom,
            "witness": None if self.witness is None else [int(w) for w in self.witness],
            "message": self.message,
        }


def _frozen(a, dtype=np.int32):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """A finite group given by its Cayley table.

    ``cayley[a, b]`` is the index of ``a * b``.  Construction does not validate;
    call :func:`validate_group` (the builtin constructors already do).
    """

    order: int
    cayley: np.ndarray
    identity: int
    inverse: np.ndarray
    label: str = ""

    def mul(self, a, b):
        return int(self.cayley[a, b])

    def inv(self, a):
        return int(self.inverse[a])

    @cached_property
    def is_abelian(self):
        return bool(np.array_equal(self.cayley, self.cayley.T))

    @cached_property
    def is_canonical_cyclic(self):
        """True when the table is exactly ``(a + b) mod n`` on residues."""
        n = self.order
        if n > 1 << 16:
            return False
        r = np.arange(n)
        return bool(np.array_equal(self.cayley, (r[:, None] + r[None, :]) % n))

    def __repr__(self):
        return f"FiniteGroup({self.label or '?'}, order={self.order})"


def from_table(cayley, label="table"):
    """Wrap an explicit Cayley table, inferring identity and inverses where possible.

    Entries that cannot be inferred are set to -1; :func:`validate_group`
    reports them as axiom failures.
    """
    try:
        table = np.array(cayley, dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise StructureError(f"cayley table is not a rectangular integer array: {exc}") from None
    if table.ndim != 2 or table.shape[0] != table.shape[1] or table.shape[0] == 0:
        raise StructureError(f"cayley table must be a non-empty square array, got shape {table.shape}")
    n = table.shape[0]
    if table.min() < 0 or table.max() >= n:
        raise StructureError("cayley table entries must lie in 0..n-1")
    r = np.arange(n)
    identity = -1
    for e in range(n):
        if np.array_equal(table[e], r) and np.array_equal(table[:, e], r):
            identity = e
            break
    inverse = np.full(n, -1, dtype=np.int64)
    if identity >= 0:
        for x in range(n):
            hits = np.nonzero((table[x] == identity) & (table[:, x] == identity))[0]
            if hits.size:
                inverse[x] = hits[0]
    return FiniteGroup(n, _frozen(table), identity, _frozen(inverse), label)


def validate_group(g: FiniteGroup, seed=0) -> ValidationReport:
    """Check the group axioms; return the first failing axiom with a witness.

    Associativity is exhaustive up to order 64 and sampled (10^4 triples) beyond.
    """
    n = g.order
    table = np.asarray(g.cayley)
    if n < 1 or table.shape != (n, n):
        raise StructureError(f"cayley shape {table.shape} inconsistent with order {n}")
    if np.asarray(g.inverse).shape != (n,):
        raise StructureError("inverse table length differs from order")
    if table.min() < 0 or table.max() >= n:
        raise StructureError("cayley entries out of range")

    e = g.identity
    if not 0 <= e < n:
        return ValidationReport(False, "identity", None, "no two-sided identity")
    r = np.arange(n)
    bad = np.nonzero((table[e] != r) | (table[:, e] != r))[0]
    if bad.size:
        return ValidationReport(False, "identity", (e, int(bad[0])), "identity fails")

    inv = np.asarray(g.inverse)
    for x in range(n):
        y = inv[x]
        if not 0 <= y < n or table[x, y] != e or table[y, x] != e:
            return ValidationReport(False, "inverse", (x,), f"element {x} has no two-sided inverse")

    if n <= EXHAUSTIVE_LIMIT:
        lhs = table[table[:, :, None], r[None, None, :]]  # (ab)c
        rhs = table[r[:, None, None], table[None, :, :]]  # a(bc)
        diff = np.argwhere(lhs != rhs)
        if diff.size:
            a, b, c = (int(v) for v in diff[0])
            return ValidationReport(False, "associativity", (a, b, c), "(ab)c != a(bc)")
    else:
        rng = np.random.default_rng(seed)
        a, b, c = rng.integers(0, n, size=(3, SAMPLED_TRIPLES))
        bad = np.nonzero(table[table[a, b], c] != table[a, table[b, c]])[0]
        if bad.size:
            i = bad[0]
            return ValidationReport(False, "associativity", (int(a[i]), int(b[i]), int(c[i])), "(ab)c != a(bc)")

    for x in range(n):
        if np.unique(table[x]).size != n:
            return ValidationReport(False, "latin", (x,), f"row {x} is not a permutation")
        if np.unique(table[:, x]).size != n:
            return ValidationReport(False, "latin", (x,), f"column {x} is not a permutation")
    return ValidationReport(True)


def cyclic(n):
    """Z_n with residues in ascending order."""
    if n < 1:
        raise ValueError("cyclic(n) needs n >= 1")
    r = np.arange(n)
    return FiniteGroup(n, _frozen((r[:, None] + r[None, :]) % n), 0, _frozen((-r) % n), f"Z{n}")


def dihedral(n):
    """Dihedral group of order 2n.

    Index ``i < n`` is the rotation r^i, index ``n + i`` is the reflection s r^i,
    with s r = r^-1 s.
    """
    if n < 1:
        raise ValueError("dihedral(n) needs n >= 1")

    def mul(x, y):
        fx, ix = divmod(x, n)
        fy, iy = divmod(y, n)
        # (s^fx r^ix)(s^fy r^iy) = s^(fx+fy) r^((-1)^fy ix + iy)
        i = ((-ix if fy else ix) + iy) % n
        return ((fx + fy) % 2) * n + i

    table = [[mul(x, y) for y in range(2 * n)] for x in range(2 * n)]
    g = from_table(table, f"D{n}")
    return g


def symmetric(n):
    """S_n, elements in lexicographic one-line notation; (s t)(i) = s(t(i))."""
    if not 1 <= n <= SYMMETRIC_MAX:
        raise ValueError(f"symmetric(n) supports 1 <= n <= {SYMMETRIC_MAX}")
    perms = list(itertools.permutations(range(n)))
    index = {p: i for i, p in enumerate(perms)}
    table = [[index[tuple(s[t[i]] for i in range(n))] for t in perms] for s in perms]
    return from_table(table, f"S{n}")


def builtin_group(spec):
    """Build a group from a spec dict or a short string like ``"cyclic:3"``.

    Dict specs: ``{"kind": "cyclic", "n": 3}``, ``{"kind": "dihedral", "n": 3}``,
    ``{"kind": "symmetric", "n": 3}``, ``{"kind": "table", "cayley": [[...]]}``.
    """
    if isinstance(spec, str):
        kind, _, arg = spec.partition(":")
        spec = {"kind": kind, "n": int(arg)} if arg else {"kind": kind}
    if not isinstance(spec, dict) or "kind" not in spec:
        raise StructureError(f"group spec must be a mapping with a 'kind': {spec!r}")
    kind = spec["kind"]
    if kind == "table":
        if "cayley" not in spec:
            raise StructureError("table group spec needs 'cayley'")
        g = from_table(spec["cayley"], spec.get("label", "table"))
    elif kind in ("cyclic", "dihedral", "symmetric"):
        try:
            n = int(spec["n"])
        except (KeyError, TypeError, ValueError):
            raise StructureError(f"{kind} group spec needs an integer 'n'") from None
        g = {"cyclic": cyclic, "dihedral": dihedral, "symmetric": symmetric}[kind](n)
    elif kind == "trivial":
        g = cyclic(1)
    else:
        raise StructureError(f"unknown group kind {kind!r}")
    return g


@dataclass(frozen=True, eq=False)
class AutomorphismAction:
    """tau: H -> Aut(K) given extensionally; ``perm[h, k] = tau_h(k)``."""

    h_order: int
    k_order: int
    perm: np.ndarray

    def __call__(self, h, k):
        return int(self.perm[h, k])


def _action(H, K, perm):
    return AutomorphismAction(H.order, K.order, _frozen(perm))


def trivial_action(H, K):
    return _action(H, K, np.tile(np.arange(K.order), (H.order, 1)))


def _cyclic_exponents(H):
    if not H.is_canonical_cyclic:
        raise StructureError(f"this action kind needs H to be a canonical cyclic group, got {H.label}")
    return np.arange(H.order)


def inversion_action(H, K):
    """h acts as inversion for odd h, trivially for even h (H cyclic of even order)."""
    exps = _cyclic_exponents(H)
    if H.order % 2:
        raise StructureError("inversion action needs |H| even")
    ident = np.arange(K.order)
    inv = np.asarray(K.inverse)
    return _action(H, K, np.stack([inv if e % 2 else ident for e in exps]))


def conjugation_action(H, K, by):
    """h acts as conjugation by ``by**h`` (H cyclic, ``by**|H| = e``)."""
    exps = _cyclic_exponents(H)
    table = np.asarray(K.cayley)
    inv = np.asarray(K.inverse)
    rows = []
    g = K.identity
    for _ in exps:
        rows.append(table[table[g], inv[g]])
        g = table[g, by]
    if g != K.identity:
        raise StructureError(f"element {by} has order not dividing |H| = {H.order}")
    return _action(H, K, np.stack(rows))


def validate_action(H: FiniteGroup, K: FiniteGroup, a: AutomorphismAction) -> ValidationReport:
    perm = np.asarray(a.perm)
    if a.h_order != H.order or a.k_order != K.order or perm.shape != (H.order, K.order):
        raise StructureError(f"action shape {perm.shape} does not match |H|={H.order}, |K|={K.order}")
    r = np.arange(K.order)
    for h in range(H.order):
        if perm[h].min() < 0 or perm[h].max() >= K.order or np.unique(perm[h]).size != K.order:
            raise StructureError(f"tau_{h} is not a permutation of K")
    if not np.array_equal(perm[H.identity], r):
        k = int(np.nonzero(perm[H.identity] != r)[0][0])
        return ValidationReport(False, "identity", (H.identity, k), "tau at e_H is not the identity")
    kt = np.asarray(K.cayley)
    for h in range(H.order):
        p = perm[h]
        bad = np.argwhere(p[kt] != kt[p[:, None], p[None, :]])
        if bad.size:
            k1, k2 = (int(v) for v in bad[0])
            return ValidationReport(False, "automorphism", (h, k1, k2), f"tau_{h}(k k') != tau_{h}(k) tau_{h}(k')")
    ht = np.asarray(H.cayley)
    for h1 in range(H.order):
        for h2 in range(H.order):
            if not np.array_equal(perm[ht[h1, h2]], perm[h1][perm[h2]]):
                return ValidationReport(False, "homomorphism", (h1, h2), "tau_{hh'} != tau_h o tau_h'")
    return ValidationReport(True)


@dataclass(frozen=True, eq=False)
class HaarData:
    """Haar weights and modular data; all ones for finite groups."""

    h_weights: np.ndarray
    k_weights: np.ndarray
    delta: np.ndarray
    mod_H: np.ndarray
    mod_K: np.ndarray

    @classmethod
    def finite(cls, h_order, k_order):
        one_h = _frozen(np.ones(h_order), np.float64)
        one_k = _frozen(np.ones(k_order), np.float64)
        return cls(one_h, one_k, one_h, one_h, one_k)

    @cached_property
    def is_unit(self):
        return all(np.all(w == 1) for w in (self.h_weights, self.k_weights, self.delta, self.mod_H, self.mod_K))


@dataclass(frozen=True, eq=False)
class SemidirectGroup:
    H: FiniteGroup
    K: FiniteGroup
    action: AutomorphismAction
    haar: HaarData = field(default=None)
    label: str = ""

    @property
    def shape(self):
        return (self.H.order, self.K.order)

    @property
    def order(self):
        return self.H.order * self.K.order

    def flat(self, h, k):
        return h * self.K.order + k

    def unflat(self, x):
        return divmod(int(x), self.K.order)

    @cached_property
    def cayley(self):
        """Flattened Cayley table under (h,k)(h',k') = (hh', k tau_h(k'))."""
        nh, nk = self.shape
        h = np.repeat(np.arange(nh), nk)
        k = np.tile(np.arange(nk), nh)
        hh = np.asarray(self.H.cayley)[h[:, None], h[None, :]]
        kk = np.asarray(self.K.cayley)[k[:, None], np.asarray(self.action.perm)[h[:, None], k[None, :]]]
        return _frozen(hh * nk + kk, np.int64)

    @cached_property
    def inverse(self):
        """(h,k)^-1 = (h^-1, tau_{h^-1}(k^-1))."""
        nh, nk = self.shape
        h = np.repeat(np.arange(nh), nk)
        k = np.tile(np.arange(nk), nh)
        hi = np.asarray(self.H.inverse)[h]
        ki = np.asarray(self.action.perm)[hi, np.asarray(self.K.inverse)[k]]
        return _frozen(hi * nk + ki, np.int64)

    @cached_property
    def identity(self):
        return self.flat(self.H.identity, self.K.identity)

    def as_finite_group(self):
        return FiniteGroup(self.order, self.cayley, self.identity, self.inverse, self.label)

    @property
    def h_trivial(self):
        return self.H.order == 1

    def __repr__(self):
        return f"SemidirectGroup({self.label}, |H|={self.H.order}, |K|={self.K.order})"


def semidirect(H, K, action, label=None):
    """Build ``H x|_tau K``; rejects an invalid action with its report."""
    report = validate_action(H, K, action)
    if not report:
        raise ValueError(f"invalid action: {report.axiom} fails at {report.witness}")
    haar = HaarData.finite(H.order, K.order)
    return SemidirectGroup(H, K, action, haar, label or f"{H.label}x|{K.label}")


def _check_index(G, x):
    h, k = x
    if not (0 <= h < G.H.order and 0 <= k < G.K.order):
        raise IndexError(f"element {x} out of range for {G!r}")


def sd_mul(G: SemidirectGroup, x, y):
    _check_index(G, x)
    _check_index(G, y)
    (h, k), (h2, k2) = x, y
    return (G.H.mul(h, h2), G.K.mul(k, G.action(h, k2)))


def sd_inv(G: SemidirectGroup, x):
    _check_index(G, x)
    h, k = x
    hi = G.H.inv(h)
    return (hi, G.action(hi, G.K.inv(k)))
